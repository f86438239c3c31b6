#pragma once

// Time evolution: unitary and Lindblad propagation under piecewise
// periodically-driven Hamiltonians, and one-period Floquet analysis.

#include <array>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "qswitch/linalg.hpp"
#include "qswitch/model.hpp"

namespace qswitch::dynamics {

using linalg::ComplexMatrix;
using linalg::DensityMatrix;
using linalg::HilbertLayout;
using linalg::Ket;

struct TimeGrid {
    double t_start = 0.0;
    double t_end = 0.0;
    std::size_t n_samples = 2;
    double max_step = 0.0;  // integrator substep cap, s

    void validate() const;
    /// Evenly spaced output times including both ends.
    std::vector<double> times() const;
};

struct CollapseSpec {
    ComplexMatrix op;
    double rate = 0.0;  // 1/s
};

/// amplitude * cos(frequency * (t - origin) + phase) * op, origin set by the piece.
struct DriveTerm {
    ComplexMatrix op;
    double amplitude = 0.0;
    double frequency = 0.0;
    double phase = 0.0;
};

/// H(t) = constant + drive(t) for t >= begin (until the next piece begins).
struct HamiltonianPiece {
    double begin = -std::numeric_limits<double>::infinity();
    double phase_origin = 0.0;
    ComplexMatrix constant;
    std::optional<DriveTerm> drive;
};

/// Piecewise Hamiltonian made of static and periodically driven pieces.
/// Coefficients may jump at piece boundaries; the integrators step onto every
/// boundary exactly.
class TimeDependentHamiltonian {
public:
    explicit TimeDependentHamiltonian(ComplexMatrix constant);
    TimeDependentHamiltonian(ComplexMatrix constant, DriveTerm drive);
    explicit TimeDependentHamiltonian(std::vector<HamiltonianPiece> pieces);

    ComplexMatrix operator()(double t) const;
    std::size_t dim() const;
    const std::vector<HamiltonianPiece>& pieces() const noexcept { return pieces_; }
    /// Drive period when the Hamiltonian is a single driven piece.
    std::optional<double> period() const;

private:
    std::vector<HamiltonianPiece> pieces_;
};

/// Lab-frame model: static part plus lambda_z cos(wz t + phase) sz.
TimeDependentHamiltonian lab_hamiltonian(const model::DeviceModel& model);
/// Jaynes-Cummings model plus the same longitudinal drive.
TimeDependentHamiltonian driven_jc_hamiltonian(const model::DeviceModel& model);
/// Static effective Hamiltonian with the Bessel-renormalized coupling.
TimeDependentHamiltonian effective_hamiltonian(const model::DeviceModel& model);

/// Qubit sigma_- and resonator a collapse operators at rates 1/T1; infinite
/// T1 values are omitted.
std::vector<CollapseSpec> relaxation_collapses(const model::DeviceModel& model);

/// 1 / (40 f_max) with f_max = (max(w_qb, w_r) + 2 lambda_z + w_z) / 2pi.
double default_max_step(const model::DeviceModel& model);

struct Diagnostics {
    double max_norm_error = 0.0;         // | ||psi|| - 1 |
    double max_trace_error = 0.0;        // | tr rho - 1 |
    double max_hermiticity_error = 0.0;  // max |rho - rho^dag|
    double min_eigenvalue = 1.0;
};

struct EvolutionResult {
    std::vector<double> times;
    std::vector<double> excited_population;
    std::vector<double> photon_number;
    DensityMatrix final_state;
    Diagnostics diagnostics;
};

struct IntegratorOptions {
    /// Split step of the Lindblad integrator and stride of the propagator cache.
    double macro_step = 0.05e-9;
    /// Lower bound on substeps per drive period.
    std::size_t min_substeps_per_period = 512;

    bool operator==(const IntegratorOptions&) const = default;
};

EvolutionResult evolve_unitary(const TimeDependentHamiltonian& h, const Ket& psi0,
                               const TimeGrid& grid, const IntegratorOptions& options = {});

EvolutionResult evolve_lindblad(const TimeDependentHamiltonian& h, const DensityMatrix& rho0,
                                const std::vector<CollapseSpec>& collapses, const TimeGrid& grid,
                                const IntegratorOptions& options = {});

struct FloquetOptions {
    /// Required for a static Hamiltonian, optional override otherwise.
    std::optional<double> period;
    /// 0 picks period / min_substeps.
    double max_step = 0.0;
    std::size_t min_substeps = 512;
    double macro_step = 0.5e-9;
};

struct FloquetResult {
    ComplexMatrix period_propagator;
    double period = 0.0;
    /// -arg(eigenvalue) / T folded into (-w/2, w/2], w = 2pi / T.
    std::vector<double> quasienergies;
    /// Columns are the Floquet modes at the phase origin.
    ComplexMatrix modes;
    /// Per mode: |<e,0|mode>|^2 and |<g,1|mode>|^2.
    std::vector<std::array<double, 2>> mode_overlaps;
};

FloquetResult floquet_propagator(const TimeDependentHamiltonian& h, const HilbertLayout& layout,
                                 const FloquetOptions& options = {});

/// Fold a quasienergy difference into (-w/2, w/2].
double fold_quasienergy(double value, double drive_frequency);

enum class GapModel {
    driven_jc,  // Jaynes-Cummings + longitudinal drive
    lab,        // full lab frame, counter-rotating terms included
};

struct GapOptions {
    GapModel model = GapModel::driven_jc;
    /// 0 picks default_max_step(model).
    double max_step = 0.0;
    std::size_t min_substeps = 512;
};

struct QuasienergyGap {
    double gap = 0.0;  // >= 0, min over Brillouin-zone images
    /// Splitting of the (|e,0> + |g,1>)-like mode above the other one;
    /// its sign follows the sign of the effective coupling.
    double signed_gap = 0.0;
    std::array<double, 2> subspace_weights{};
};

/// Floquet splitting of the single-excitation pair at the optimal point and
/// resonance.  Throws ModeAmbiguityError when either selected mode has less
/// than half its weight on span{|e,0>, |g,1>}.
QuasienergyGap quasienergy_gap(const model::DeviceModel& model, const GapOptions& options = {});

}  // namespace qswitch::dynamics
