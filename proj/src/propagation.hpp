#pragma once

// Cached piecewise propagators shared by the time-domain integrators and the
// Floquet analysis.  Within one Hamiltonian piece the substep grid is anchored
// at the piece's phase origin, so a driven piece reuses one period's worth of
// substep unitaries for every later period.

#include <cstdint>
#include <optional>
#include <vector>

#include "qswitch/dynamics.hpp"

namespace qswitch::dynamics::detail {

/// Fourth-order commutator-free Magnus step of H(t) = C + f(t) D over
/// [t0, t0 + tau].
ComplexMatrix magnus_step(const HamiltonianPiece& piece, double t0, double tau);

class PiecePropagator {
public:
    /// period: forced cache period (required for Floquet on a static piece);
    /// defaults to the drive period of a driven piece.
    PiecePropagator(const HamiltonianPiece& piece, double max_step, double macro_step,
                    std::size_t min_substeps_per_period, std::optional<double> period = {});

    double macro_step() const noexcept { return macro_; }
    double macro_time(std::int64_t k) const {
        return origin_ + static_cast<double>(k) * macro_;
    }
    /// Largest k with macro_time(k) <= t (within rounding).
    std::int64_t macro_floor(double t) const;
    /// Smallest k with macro_time(k) >= t (within rounding).
    std::int64_t macro_ceil(double t) const;
    std::size_t macros_per_period() const noexcept { return macros_per_period_; }

    /// Propagator over [macro_time(k), macro_time(k+1)].
    const ComplexMatrix& macro(std::int64_t k) const;
    /// Propagator over an arbitrary [t0, t1] inside the piece.
    ComplexMatrix between(double t0, double t1) const;

    /// Time comparison slack, a tiny fraction of a substep.
    double slack() const noexcept { return 1e-7 * dt_; }

private:
    ComplexMatrix fresh(double t0, double t1) const;
    const ComplexMatrix& substep(std::int64_t j) const;

    const HamiltonianPiece& piece_;
    bool periodic_ = false;
    double origin_ = 0.0;
    double max_step_ = 0.0;
    double dt_ = 0.0;
    double macro_ = 0.0;
    std::size_t substeps_per_macro_ = 1;
    std::size_t macros_per_period_ = 1;
    std::vector<ComplexMatrix> substeps_;
    std::vector<ComplexMatrix> macros_;
};

}  // namespace qswitch::dynamics::detail
