#pragma once

// Scripted experiments on the qubit-resonator model: spectroscopy maps,
// vacuum-Rabi scans, switch sequences, storage and on/off-ratio estimates.

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qswitch/dynamics.hpp"
#include "qswitch/model.hpp"

namespace qswitch::protocols {

using dynamics::EvolutionResult;
using linalg::ComplexMatrix;
using dynamics::TimeGrid;
using linalg::Ket;

enum class SweepVariable { epsilon, probe_frequency, lambda_z, time };

/// Evenly spaced sweep, both ends included.  Units follow the variable:
/// angular frequency for epsilon / lambda_z, Hz for probe frequency, s for time.
struct SweepSpec {
    SweepVariable variable = SweepVariable::lambda_z;
    double start = 0.0;
    double stop = 0.0;
    std::size_t n_points = 2;

    void validate() const;
    std::vector<double> values() const;
};

enum class Preparation { qubit_excited, entangled_half_swap, custom };

struct PulseSegment {
    double duration = 0.0;  // s
    double lambda_z = 0.0;  // rad/s; 0 means drive off
};

struct PulseSchedule {
    std::vector<PulseSegment> segments;
    Preparation preparation = Preparation::qubit_excited;
    std::optional<Ket> custom_state;

    double total_duration() const;
    void validate() const;
};

/// |e,0>, (|e,0> - i|g,1>)/sqrt(2) (the state a quarter Rabi period after
/// |e,0>), or the normalized custom ket.
Ket prepare_state(Preparation preparation, const linalg::HilbertLayout& layout,
                  const std::optional<Ket>& custom = std::nullopt);

struct Curve {
    std::string name;
    std::vector<double> values;  // one per x-axis point
};

struct ColumnFrequency {
    std::optional<double> frequency;  // Hz
    std::string reason;               // set when frequency is empty
};

struct SpectrumMap {
    std::vector<double> x_axis;
    std::vector<double> y_axis;
    /// rows follow y_axis, columns follow x_axis
    Eigen::MatrixXd population;
    std::vector<Curve> overlays;
    std::vector<ColumnFrequency> column_frequencies;  // rabi_scan only
    /// columns whose eigenbasis had (near-)degenerate bright transitions
    std::vector<std::size_t> degenerate_columns;
};

struct ScanOptions {
    std::size_t workers = 1;
    dynamics::IntegratorOptions integrator;
};

/// Eigenvalue spectroscopy of the undriven lab Hamiltonian versus epsilon.
/// Transition weights are |<k|sx|0>|^2 rendered as Lorentzians of FWHM
/// `linewidth` (Hz); the map is normalized by its global maximum.
SpectrumMap spectrum_scan(const model::DeviceModel& model, const SweepSpec& epsilon_sweep,
                          const SweepSpec& probe_sweep, double linewidth = 2e6,
                          const ScanOptions& options = {});

/// Dressed branches (w_qb + w_r)/2 +- sqrt(((w_qb - w_r)/2)^2 + g^2), angular.
std::pair<double, double> dressed_branches(double qubit_frequency, double resonator_frequency,
                                           double g);

/// Floquet splitting versus lambda_z: lines at f_r +- gap/2 over the probe
/// axis, plus overlays of the Floquet gap and 2|g_eff| (both in Hz).
SpectrumMap driven_spectrum_scan(const model::DeviceModel& model, const SweepSpec& lambda_sweep,
                                 const SweepSpec& probe_sweep, double linewidth = 2e6,
                                 const ScanOptions& options = {});

/// P(t, lambda_z) from lab-frame Lindblad evolution of |e,0>, with the
/// oscillation frequency extracted per column.
SpectrumMap rabi_scan(const model::DeviceModel& model, const SweepSpec& lambda_sweep,
                      const TimeGrid& grid, const ScanOptions& options = {});

struct SwitchOptions {
    /// Added to the drive phase at every on-edge (phase is otherwise reset to
    /// the configured drive phase there).
    double phase_offset = 0.0;
    bool dissipative = true;
    dynamics::IntegratorOptions integrator;
};

/// Piecewise lab Hamiltonian for a schedule starting at t = 0.  Adjacent
/// segments with equal lambda_z merge; lambda_z = 0 segments carry no drive
/// term.
dynamics::TimeDependentHamiltonian schedule_hamiltonian(const model::DeviceModel& model,
                                                        const PulseSchedule& schedule,
                                                        double phase_offset = 0.0);

EvolutionResult switch_sequence(const model::DeviceModel& model, const PulseSchedule& schedule,
                                const TimeGrid& grid, const SwitchOptions& options = {});

struct SwitchOffPoint {
    double lambda_z = 0.0;  // rad/s
    double gap = 0.0;       // rad/s
    double gap_on = 0.0;    // gap at lambda_z = 0
    double ratio = 0.0;     // gap / gap_on
    int evaluations = 0;
};

/// Golden-section minimum of the Floquet gap over lambda_z in
/// [1.15, 1.25] w_z.
SwitchOffPoint find_switch_off(const model::DeviceModel& model,
                               const dynamics::GapOptions& options = {});

/// gap(lambda_z) / gap(0) with the Floquet gap as frequency instrument.
double onoff_ratio(const model::DeviceModel& model, double lambda_z,
                   const dynamics::GapOptions& options = {});

struct FrequencyEstimate {
    std::optional<double> frequency;  // Hz
    double snr = 0.0;
    /// amplitude of the detrended peak, same units as the trace
    double amplitude = 0.0;
    std::string reason;
};

struct ExtractOptions {
    /// Only peaks below this frequency (Hz) are considered; 0 means Nyquist.
    double max_frequency = 0.0;
    double min_snr = 3.0;
    /// Peaks whose detrended amplitude falls below this are rejected.
    double min_amplitude = 0.0;
    /// Minimum number of full cycles inside the window.
    double min_cycles = 1.0;
};

/// Dominant oscillation frequency: quadratic detrend, Hann window, zero-padded
/// DFT, parabolic peak interpolation.  Empty when the peak is not a resolvable
/// interior maximum or its SNR (peak over median magnitude) is below min_snr.
FrequencyEstimate extract_frequency(const std::vector<double>& values,
                                    const std::vector<double>& times,
                                    const ExtractOptions& options = {});

/// y(t) = exp(-decay (t - t0)) (amplitude cos(w (t - t0) + phase) + offset),
/// amplitude >= 0, phase in (-pi, pi].
struct DampedCosine {
    double amplitude = 0.0;
    double angular_frequency = 0.0;
    double decay = 0.0;
    double phase = 0.0;
    double offset = 0.0;
    double t0 = 0.0;
    double rms = 0.0;
    bool converged = false;

    double operator()(double t) const;
    double frequency() const;  // Hz
};

/// Least-squares damped-cosine fit seeded by extract_frequency (or by
/// `seed_frequency`, Hz, when given).  Throws ConvergenceError when no
/// oscillation can be seeded or the iteration cap is hit.
DampedCosine fit_damped_cosine(const std::vector<double>& values, const std::vector<double>& times,
                               std::optional<double> seed_frequency = std::nullopt);

struct StorageResult {
    EvolutionResult trajectory;
    EvolutionResult reference;  // uninterrupted oscillation, same grid
    double swap_time = 0.0;     // pi / (2g)
    double switch_on_time = 0.0;
    double lambda_off = 0.0;
    std::optional<DampedCosine> revival_fit;
    std::optional<DampedCosine> reference_fit;
    /// revival amplitude at switch-on over the reference amplitude at the
    /// storage start
    std::optional<double> amplitude_ratio;
    std::string reason;  // set when the ratio is unavailable
};

struct StorageOptions {
    /// 0 finds the switch-off amplitude numerically.
    double lambda_off = 0.0;
    dynamics::IntegratorOptions integrator;
};

/// |e,0> -> on for pi/(2g) -> off for t_off -> on until grid.t_end.
StorageResult storage_experiment(const model::DeviceModel& model, double t_off,
                                 const TimeGrid& grid, const StorageOptions& options = {});

/// max over samples in [t_begin, t_end] of |P(t) - P(t_first) exp(-(t - t_first)/T1q)|,
/// t_first being the first sample inside the window.
double pause_deviation(const EvolutionResult& result, double t_begin, double t_end,
                       double qubit_t1);

}  // namespace qswitch::protocols
