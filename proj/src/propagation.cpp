#include "propagation.hpp"

#include <cmath>

#include "qswitch/errors.hpp"

namespace qswitch::dynamics::detail {

namespace {

// Gauss-Legendre nodes and commutator-free weights.
const double kNodeOffset = std::sqrt(3.0) / 6.0;
const double kAlpha1 = 0.25 - std::sqrt(3.0) / 6.0;
const double kAlpha2 = 0.25 + std::sqrt(3.0) / 6.0;

std::int64_t wrap(std::int64_t j, std::size_t n) {
    const auto m = static_cast<std::int64_t>(n);
    const std::int64_t r = j % m;
    return r < 0 ? r + m : r;
}

}  // namespace

ComplexMatrix magnus_step(const HamiltonianPiece& piece, double t0, double tau) {
    if (!piece.drive || piece.drive->amplitude == 0.0) {
        return linalg::unitary_exp(piece.constant, tau);
    }
    const DriveTerm& d = *piece.drive;
    const double t1 = t0 + (0.5 - kNodeOffset) * tau;
    const double t2 = t0 + (0.5 + kNodeOffset) * tau;
    const double f1 = d.amplitude * std::cos(d.frequency * (t1 - piece.phase_origin) + d.phase);
    const double f2 = d.amplitude * std::cos(d.frequency * (t2 - piece.phase_origin) + d.phase);
    // exp(-i tau (a1 H1 + a2 H2)) exp(-i tau (a2 H1 + a1 H2)), applied right to left
    const ComplexMatrix first = 0.5 * piece.constant + (kAlpha2 * f1 + kAlpha1 * f2) * d.op;
    const ComplexMatrix second = 0.5 * piece.constant + (kAlpha1 * f1 + kAlpha2 * f2) * d.op;
    return linalg::unitary_exp(second, tau) * linalg::unitary_exp(first, tau);
}

PiecePropagator::PiecePropagator(const HamiltonianPiece& piece, double max_step,
                                 double macro_step, std::size_t min_substeps_per_period,
                                 std::optional<double> period)
    : piece_(piece), origin_(piece.phase_origin), max_step_(max_step) {
    if (!(max_step > 0.0) || !(macro_step > 0.0)) {
        throw InvalidArgument("integrator steps must be positive");
    }
    const bool driven = piece.drive && piece.drive->amplitude != 0.0;
    if (!period && driven) {
        period = model::kTwoPi / piece.drive->frequency;
    }
    if (!period) {
        // static piece: one exact exponential per macro step
        macro_ = macro_step;
        dt_ = macro_;
        macros_.push_back(linalg::unitary_exp(piece.constant, macro_));
        return;
    }
    if (!(*period > 0.0)) {
        throw InvalidArgument("propagator period must be positive");
    }
    periodic_ = true;
    const double T = *period;
    macros_per_period_ = static_cast<std::size_t>(std::ceil(T / macro_step - 1e-9));
    macros_per_period_ = std::max<std::size_t>(macros_per_period_, 1);
    macro_ = T / static_cast<double>(macros_per_period_);
    substeps_per_macro_ = static_cast<std::size_t>(std::ceil(macro_ / max_step - 1e-9));
    const std::size_t need = (min_substeps_per_period + macros_per_period_ - 1) / macros_per_period_;
    substeps_per_macro_ = std::max({substeps_per_macro_, need, std::size_t{1}});
    const std::size_t total = substeps_per_macro_ * macros_per_period_;
    dt_ = T / static_cast<double>(total);
    if (total > 50'000'000) {
        throw IntegratorError("step-size underflow: too many substeps per period");
    }

    substeps_.reserve(total);
    for (std::size_t j = 0; j < total; ++j) {
        substeps_.push_back(magnus_step(piece, origin_ + static_cast<double>(j) * dt_, dt_));
    }
    macros_.reserve(macros_per_period_);
    for (std::size_t k = 0; k < macros_per_period_; ++k) {
        ComplexMatrix u = substeps_[k * substeps_per_macro_];
        for (std::size_t s = 1; s < substeps_per_macro_; ++s) {
            u = substeps_[k * substeps_per_macro_ + s] * u;
        }
        macros_.push_back(std::move(u));
    }
}

std::int64_t PiecePropagator::macro_floor(double t) const {
    const double x = (t - origin_) / macro_;
    return static_cast<std::int64_t>(std::floor(x + 1e-7 / static_cast<double>(substeps_per_macro_)));
}

std::int64_t PiecePropagator::macro_ceil(double t) const {
    const double x = (t - origin_) / macro_;
    return static_cast<std::int64_t>(std::ceil(x - 1e-7 / static_cast<double>(substeps_per_macro_)));
}

const ComplexMatrix& PiecePropagator::macro(std::int64_t k) const {
    return periodic_ ? macros_[wrap(k, macros_per_period_)] : macros_.front();
}

const ComplexMatrix& PiecePropagator::substep(std::int64_t j) const {
    return substeps_[wrap(j, substeps_.size())];
}

ComplexMatrix PiecePropagator::fresh(double t0, double t1) const {
    const double span = t1 - t0;
    const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(span / max_step_ - 1e-9)));
    const double tau = span / static_cast<double>(n);
    ComplexMatrix u = magnus_step(piece_, t0, tau);
    for (std::size_t i = 1; i < n; ++i) {
        u = magnus_step(piece_, t0 + static_cast<double>(i) * tau, tau) * u;
    }
    return u;
}

ComplexMatrix PiecePropagator::between(double t0, double t1) const {
    if (!periodic_) {
        return linalg::unitary_exp(piece_.constant, t1 - t0);
    }
    const double tol = 1e-7;
    const double x0 = (t0 - origin_) / dt_;
    const double x1 = (t1 - origin_) / dt_;
    const auto j0 = static_cast<std::int64_t>(std::ceil(x0 - tol));
    const auto j1 = static_cast<std::int64_t>(std::floor(x1 + tol));
    if (j0 > j1) {
        return fresh(t0, t1);
    }
    const double s0 = origin_ + static_cast<double>(j0) * dt_;
    const double s1 = origin_ + static_cast<double>(j1) * dt_;
    const auto n = static_cast<Eigen::Index>(piece_.constant.rows());
    ComplexMatrix u = ComplexMatrix::Identity(n, n);
    if (s0 - t0 > slack()) {
        u = fresh(t0, s0);
    }
    for (std::int64_t j = j0; j < j1; ++j) {
        u = substep(j) * u;
    }
    if (t1 - s1 > slack()) {
        u = fresh(s1, t1) * u;
    }
    return u;
}

}  // namespace qswitch::dynamics::detail
