#include "qswitch/model.hpp"

#include <cmath>
#include <string>

#include "qswitch/errors.hpp"

namespace qswitch::model {

using linalg::HilbertLayout;

namespace {

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw InvalidArgument(std::string(what) + " must be positive and finite");
    }
}

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) {
        throw InvalidArgument(std::string(what) + " must be finite");
    }
}

bool close_rel(double a, double b, double rel) {
    return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b));
}

}  // namespace

QubitParams QubitParams::from_flux(double gap, double flux_bias, double persistent_current) {
    QubitParams q;
    q.gap = gap;
    q.persistent_current = persistent_current;
    q.flux_bias = flux_bias;
    q.epsilon = epsilon_from_flux(flux_bias, persistent_current);
    return q;
}

void QubitParams::validate() const {
    require_positive(gap, "qubit gap");
    require_finite(epsilon, "qubit bias epsilon");
    if (persistent_current) {
        require_positive(*persistent_current, "persistent current");
    }
    if (flux_bias) {
        if (!persistent_current) {
            throw InvalidArgument("flux bias needs the persistent current");
        }
        const double derived = epsilon_from_flux(*flux_bias, *persistent_current);
        if (std::abs(derived - epsilon) > 1e-12 * std::max(std::abs(derived), gap)) {
            throw InvalidArgument("epsilon disagrees with the flux bias it was derived from");
        }
    }
}

std::optional<double> ResonatorParams::zero_point_current() const {
    if (!inductance) {
        return std::nullopt;
    }
    return std::sqrt(constants::kHbar * frequency / *inductance);
}

void ResonatorParams::validate() const {
    require_positive(frequency, "resonator frequency");
    if (inductance) {
        require_positive(*inductance, "resonator inductance");
    }
}

void CouplingParams::validate() const {
    require_positive(g, "coupling g");
    if (mutual_inductance) {
        require_positive(*mutual_inductance, "mutual inductance");
    }
}

void DriveParams::validate() const {
    if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) {
        throw InvalidArgument("drive amplitude must be >= 0");
    }
    require_positive(frequency, "drive frequency");
    require_finite(phase, "drive phase");
}

void DeviceModel::validate() const {
    qubit.validate();
    resonator.validate();
    coupling.validate();
    if (drive) {
        drive->validate();
    }
    if (!(qubit_t1 > 0.0) || !(resonator_t1 > 0.0)) {
        throw InvalidArgument("T1 values must be positive (infinity disables relaxation)");
    }
    if (fock_cutoff < 2) {
        throw InvalidArgument("fock cutoff must be >= 2");
    }
    if (coupling.mutual_inductance && qubit.persistent_current && resonator.inductance) {
        const double g = coupling_from_circuit(*coupling.mutual_inductance,
                                               *qubit.persistent_current, resonator.frequency,
                                               *resonator.inductance);
        if (!close_rel(g, coupling.g, 1e-9)) {
            throw InvalidArgument("coupling g disagrees with M * Ip * Ir / hbar");
        }
    }
}

DeviceModel DeviceModel::with_drive_amplitude(double amplitude) const {
    if (!drive) {
        throw InvalidArgument("device model has no drive");
    }
    DeviceModel copy = *this;
    copy.drive->amplitude = amplitude;
    return copy;
}

DeviceModel reference_device() {
    DeviceModel m;
    m.qubit.gap = angular(2.417e9);
    m.resonator.frequency = angular(2.417e9);
    m.coupling.g = angular(9.14e6);
    m.drive = DriveParams{0.0, angular(150e6), 0.0};
    m.qubit_t1 = 0.45e-6;
    m.resonator_t1 = 4.6e-6;
    m.fock_cutoff = 5;
    return m;
}

double epsilon_from_flux(double flux_bias, double persistent_current) {
    require_positive(persistent_current, "persistent current");
    require_finite(flux_bias, "flux bias");
    return 2.0 * persistent_current * (flux_bias - 0.5 * constants::kFluxQuantum) /
           constants::kHbar;
}

double qubit_frequency(double gap, double epsilon) {
    if (!(gap >= 0.0)) {
        throw InvalidArgument("qubit gap must be >= 0");
    }
    return std::hypot(gap, epsilon);
}

double coupling_from_circuit(double mutual_inductance, double persistent_current,
                             double resonator_frequency, double resonator_inductance) {
    require_positive(mutual_inductance, "mutual inductance");
    require_positive(persistent_current, "persistent current");
    require_positive(resonator_frequency, "resonator frequency");
    require_positive(resonator_inductance, "resonator inductance");
    const double zero_point_current =
        std::sqrt(constants::kHbar * resonator_frequency / resonator_inductance);
    return mutual_inductance * persistent_current * zero_point_current / constants::kHbar;
}

double effective_coupling(double g, double drive_amplitude, double drive_frequency) {
    if (!(drive_frequency > 0.0)) {
        throw InvalidArgument("drive frequency must be positive");
    }
    return g * bessel_j0(2.0 * drive_amplitude / drive_frequency);
}

ComplexMatrix longitudinal_operator(const HilbertLayout& layout) {
    return layout.qubit_op(linalg::sigma_z());
}

ComplexMatrix excitation_number_operator(const HilbertLayout& layout) {
    ComplexMatrix excited = ComplexMatrix::Zero(2, 2);
    excited(HilbertLayout::kExcited, HilbertLayout::kExcited) = 1.0;
    return layout.resonator_op(linalg::number_operator(layout.fock_cutoff())) +
           layout.qubit_op(excited);
}

ComplexMatrix static_lab_hamiltonian(const DeviceModel& model) {
    const HilbertLayout layout = model.layout();
    const ComplexMatrix a = layout.resonator_op(linalg::annihilation(layout.fock_cutoff()));
    const ComplexMatrix sx = layout.qubit_op(linalg::sigma_x());
    const ComplexMatrix sz = layout.qubit_op(linalg::sigma_z());
    return 0.5 * model.qubit.gap * sz + 0.5 * model.qubit.epsilon * sx +
           model.resonator.frequency * (a.adjoint() * a) +
           model.coupling.g * ((a.adjoint() + a) * sx);
}

namespace {

double drive_coefficient(const DeviceModel& model, double t) {
    if (!model.drive) {
        return 0.0;
    }
    const DriveParams& d = *model.drive;
    return d.amplitude * std::cos(d.frequency * t + d.phase);
}

ComplexMatrix jc_with_coupling(const DeviceModel& model, double g) {
    const HilbertLayout layout = model.layout();
    const ComplexMatrix a = layout.resonator_op(linalg::annihilation(layout.fock_cutoff()));
    const ComplexMatrix sp = layout.qubit_op(linalg::sigma_plus());
    const ComplexMatrix sm = layout.qubit_op(linalg::sigma_minus());
    const ComplexMatrix sz = layout.qubit_op(linalg::sigma_z());
    return 0.5 * model.qubit.gap * sz + model.resonator.frequency * (a.adjoint() * a) +
           g * (a.adjoint() * sm + a * sp);
}

void require_optimal_point(const DeviceModel& model, const char* what) {
    if (model.qubit.epsilon != 0.0) {
        throw InvalidArgument(std::string(what) + " requires the optimal point (epsilon = 0)");
    }
}

}  // namespace

ComplexMatrix build_lab_hamiltonian(const DeviceModel& model, double t) {
    ComplexMatrix h = static_lab_hamiltonian(model);
    const double c = drive_coefficient(model, t);
    if (c != 0.0) {
        h += c * longitudinal_operator(model.layout());
    }
    return h;
}

ComplexMatrix build_jc_hamiltonian(const DeviceModel& model) {
    require_optimal_point(model, "Jaynes-Cummings Hamiltonian");
    return jc_with_coupling(model, model.coupling.g);
}

ComplexMatrix build_driven_jc_hamiltonian(const DeviceModel& model, double t) {
    require_optimal_point(model, "driven Jaynes-Cummings Hamiltonian");
    ComplexMatrix h = jc_with_coupling(model, model.coupling.g);
    const double c = drive_coefficient(model, t);
    if (c != 0.0) {
        h += c * longitudinal_operator(model.layout());
    }
    return h;
}

ComplexMatrix build_effective_hamiltonian(const DeviceModel& model) {
    if (!model.drive) {
        throw InvalidArgument("effective Hamiltonian needs a longitudinal drive");
    }
    require_optimal_point(model, "effective Hamiltonian");
    return jc_with_coupling(
        model, effective_coupling(model.coupling.g, model.drive->amplitude, model.drive->frequency));
}

}  // namespace qswitch::model
