#pragma once

// Physical model of a flux qubit inductively coupled to a resonator, with a
// longitudinal (sigma_z) control drive.  All frequencies are angular (rad/s),
// all times in seconds; Hamiltonians are returned as H / hbar.

#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>

#include "qswitch/bessel.hpp"
#include "qswitch/linalg.hpp"

namespace qswitch::model {

using linalg::ComplexMatrix;

namespace constants {
inline constexpr double kPlanck = 6.62607015e-34;            // J s
inline constexpr double kHbar = kPlanck / (2.0 * std::numbers::pi);
inline constexpr double kElementaryCharge = 1.602176634e-19;  // C
inline constexpr double kFluxQuantum = kPlanck / (2.0 * kElementaryCharge);  // Wb
}  // namespace constants

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Ordinary frequency (Hz) to angular frequency (rad/s).
constexpr double angular(double hertz) { return kTwoPi * hertz; }
constexpr double hertz(double angular_frequency) { return angular_frequency / kTwoPi; }

struct QubitParams {
    double gap = 0.0;      // Delta
    double epsilon = 0.0;  // bias; derived from flux_bias when that is set
    std::optional<double> persistent_current;  // A
    std::optional<double> flux_bias;           // Wb, Phi_epsilon

    /// Bias given by the loop flux instead of epsilon directly.
    static QubitParams from_flux(double gap, double flux_bias, double persistent_current);

    void validate() const;
    bool operator==(const QubitParams&) const = default;
};

struct ResonatorParams {
    double frequency = 0.0;             // omega_r
    std::optional<double> inductance;   // L_r, H

    /// sqrt(hbar * omega_r / L_r); empty when the inductance is unknown.
    std::optional<double> zero_point_current() const;

    void validate() const;
    bool operator==(const ResonatorParams&) const = default;
};

struct CouplingParams {
    double g = 0.0;
    std::optional<double> mutual_inductance;  // M, H

    void validate() const;
    bool operator==(const CouplingParams&) const = default;
};

struct DriveParams {
    double amplitude = 0.0;  // lambda_z
    double frequency = 0.0;  // omega_z
    double phase = 0.0;      // rad

    void validate() const;
    bool operator==(const DriveParams&) const = default;
};

struct DeviceModel {
    QubitParams qubit;
    ResonatorParams resonator;
    CouplingParams coupling;
    std::optional<DriveParams> drive;
    double qubit_t1 = kInfinity;      // s; infinity switches relaxation off
    double resonator_t1 = kInfinity;  // s
    std::size_t fock_cutoff = 5;

    linalg::HilbertLayout layout() const { return linalg::HilbertLayout(fock_cutoff); }

    /// Checks every record plus the cross-record circuit relations.
    void validate() const;

    /// Copy with the drive amplitude replaced (the drive must exist).
    DeviceModel with_drive_amplitude(double amplitude) const;

    bool operator==(const DeviceModel&) const = default;
};

/// Resonant operating point of the measured sample: Delta = omega_r =
/// 2pi x 2.417 GHz, g = 2pi x 9.14 MHz, T1 = 0.45 us (qubit) / 4.6 us
/// (resonator), drive at 2pi x 150 MHz with zero amplitude.
DeviceModel reference_device();

double epsilon_from_flux(double flux_bias, double persistent_current);
double qubit_frequency(double gap, double epsilon);
double coupling_from_circuit(double mutual_inductance, double persistent_current,
                             double resonator_frequency, double resonator_inductance);

/// g * J0(2 lambda_z / omega_z); changes sign past the first Bessel zero.
double effective_coupling(double g, double drive_amplitude, double drive_frequency);

/// Amplitude at which the effective coupling first vanishes.
inline double bessel_switch_off_amplitude(double drive_frequency) {
    return 0.5 * kBesselJ0FirstZero * drive_frequency;
}

/// Time-independent part of the lab-frame Hamiltonian:
/// Delta/2 sz + eps/2 sx + wr a^dag a + g (a^dag + a) sx.
ComplexMatrix static_lab_hamiltonian(const DeviceModel& model);

/// sigma_z (x) 1, the operator the longitudinal drive couples to.
ComplexMatrix longitudinal_operator(const linalg::HilbertLayout& layout);

/// Full lab-frame Hamiltonian including the drive lambda_z cos(wz t + phase) sz.
ComplexMatrix build_lab_hamiltonian(const DeviceModel& model, double t);

/// Jaynes-Cummings limit at the optimal point.  Throws if epsilon != 0.
ComplexMatrix build_jc_hamiltonian(const DeviceModel& model);

/// Jaynes-Cummings Hamiltonian plus the longitudinal drive (no counter-rotating
/// terms).  Throws if epsilon != 0.
ComplexMatrix build_driven_jc_hamiltonian(const DeviceModel& model, double t);

/// Jaynes-Cummings Hamiltonian with g replaced by the Bessel-renormalized
/// coupling.  Throws if the drive is missing or epsilon != 0.
ComplexMatrix build_effective_hamiltonian(const DeviceModel& model);

/// a^dag a + |e><e|
ComplexMatrix excitation_number_operator(const linalg::HilbertLayout& layout);

}  // namespace qswitch::model
