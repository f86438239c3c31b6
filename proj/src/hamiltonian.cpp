#include <algorithm>
#include <cmath>

#include "qswitch/dynamics.hpp"
#include "qswitch/errors.hpp"

namespace qswitch::dynamics {

void TimeGrid::validate() const {
    if (!std::isfinite(t_start) || !std::isfinite(t_end) || !(t_end > t_start)) {
        throw InvalidArgument("time grid needs t_end > t_start");
    }
    if (n_samples < 2) {
        throw InvalidArgument("time grid needs at least 2 samples");
    }
    if (!(max_step > 0.0) || !std::isfinite(max_step)) {
        throw InvalidArgument("time grid max_step must be positive");
    }
    const double span = t_end - t_start;
    if (span / max_step > 1e12 || t_end + max_step == t_end) {
        throw IntegratorError("step-size underflow: max_step too small for the time window");
    }
}

std::vector<double> TimeGrid::times() const {
    std::vector<double> out(n_samples);
    const double span = t_end - t_start;
    const auto last = static_cast<double>(n_samples - 1);
    for (std::size_t i = 0; i < n_samples; ++i) {
        out[i] = t_start + span * (static_cast<double>(i) / last);
    }
    out.back() = t_end;
    return out;
}

namespace {

void check_piece(const HamiltonianPiece& piece, Eigen::Index dim) {
    if (piece.constant.rows() != dim || piece.constant.cols() != dim) {
        throw DimensionError("Hamiltonian pieces must share one square dimension");
    }
    if (!linalg::is_hermitian(piece.constant)) {
        throw InvalidArgument("Hamiltonian piece is not Hermitian");
    }
    if (piece.drive) {
        const DriveTerm& d = *piece.drive;
        if (d.op.rows() != dim || d.op.cols() != dim) {
            throw DimensionError("drive operator dimension differs from the Hamiltonian");
        }
        if (!linalg::is_hermitian(d.op)) {
            throw InvalidArgument("drive operator is not Hermitian");
        }
        if (!(d.frequency > 0.0) || !std::isfinite(d.amplitude) || !std::isfinite(d.phase)) {
            throw InvalidArgument("drive term needs a positive frequency and finite amplitude");
        }
    }
}

}  // namespace

TimeDependentHamiltonian::TimeDependentHamiltonian(ComplexMatrix constant)
    : TimeDependentHamiltonian(std::vector<HamiltonianPiece>{
          HamiltonianPiece{-std::numeric_limits<double>::infinity(), 0.0, std::move(constant),
                           std::nullopt}}) {}

TimeDependentHamiltonian::TimeDependentHamiltonian(ComplexMatrix constant, DriveTerm drive)
    : TimeDependentHamiltonian(std::vector<HamiltonianPiece>{
          HamiltonianPiece{-std::numeric_limits<double>::infinity(), 0.0, std::move(constant),
                           std::move(drive)}}) {}

TimeDependentHamiltonian::TimeDependentHamiltonian(std::vector<HamiltonianPiece> pieces)
    : pieces_(std::move(pieces)) {
    if (pieces_.empty()) {
        throw InvalidArgument("Hamiltonian needs at least one piece");
    }
    const Eigen::Index dim = pieces_.front().constant.rows();
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
        check_piece(pieces_[i], dim);
        if (i > 0 && pieces_[i].begin < pieces_[i - 1].begin) {
            throw InvalidArgument("Hamiltonian pieces must be ordered by start time");
        }
    }
}

ComplexMatrix TimeDependentHamiltonian::operator()(double t) const {
    // last piece whose begin <= t; times before the first piece use the first
    auto it = std::upper_bound(pieces_.begin(), pieces_.end(), t,
                               [](double v, const HamiltonianPiece& p) { return v < p.begin; });
    const HamiltonianPiece& p = it == pieces_.begin() ? pieces_.front() : *std::prev(it);
    ComplexMatrix h = p.constant;
    if (p.drive) {
        const DriveTerm& d = *p.drive;
        h += d.amplitude * std::cos(d.frequency * (t - p.phase_origin) + d.phase) * d.op;
    }
    return h;
}

std::size_t TimeDependentHamiltonian::dim() const {
    return static_cast<std::size_t>(pieces_.front().constant.rows());
}

std::optional<double> TimeDependentHamiltonian::period() const {
    if (pieces_.size() != 1 || !pieces_.front().drive) {
        return std::nullopt;
    }
    return model::kTwoPi / pieces_.front().drive->frequency;
}

namespace {

TimeDependentHamiltonian with_model_drive(ComplexMatrix constant, const model::DeviceModel& m) {
    if (!m.drive) {
        return TimeDependentHamiltonian(std::move(constant));
    }
    const model::DriveParams& d = *m.drive;
    return TimeDependentHamiltonian(
        std::move(constant),
        DriveTerm{model::longitudinal_operator(m.layout()), d.amplitude, d.frequency, d.phase});
}

}  // namespace

TimeDependentHamiltonian lab_hamiltonian(const model::DeviceModel& m) {
    return with_model_drive(model::static_lab_hamiltonian(m), m);
}

TimeDependentHamiltonian driven_jc_hamiltonian(const model::DeviceModel& m) {
    return with_model_drive(model::build_jc_hamiltonian(m), m);
}

TimeDependentHamiltonian effective_hamiltonian(const model::DeviceModel& m) {
    return TimeDependentHamiltonian(model::build_effective_hamiltonian(m));
}

std::vector<CollapseSpec> relaxation_collapses(const model::DeviceModel& m) {
    const HilbertLayout layout = m.layout();
    std::vector<CollapseSpec> out;
    if (std::isfinite(m.qubit_t1)) {
        out.push_back({layout.qubit_op(linalg::sigma_minus()), 1.0 / m.qubit_t1});
    }
    if (std::isfinite(m.resonator_t1)) {
        out.push_back({layout.resonator_op(linalg::annihilation(layout.fock_cutoff())),
                       1.0 / m.resonator_t1});
    }
    return out;
}

double default_max_step(const model::DeviceModel& m) {
    const double w_qb = model::qubit_frequency(m.qubit.gap, m.qubit.epsilon);
    double w_max = std::max(w_qb, m.resonator.frequency);
    if (m.drive) {
        w_max += 2.0 * m.drive->amplitude + m.drive->frequency;
    }
    const double f_max = model::hertz(w_max);
    return 1.0 / (40.0 * f_max);
}

}  // namespace qswitch::dynamics
