#include <algorithm>
#include <cmath>
#include <limits>

#include "propagation.hpp"
#include "qswitch/dynamics.hpp"
#include "qswitch/errors.hpp"

namespace qswitch::dynamics {

namespace {

using detail::PiecePropagator;
using linalg::Complex;

struct PieceSpan {
    const HamiltonianPiece* piece;
    double begin;
    double end;
};

std::vector<PieceSpan> spans_in(const TimeDependentHamiltonian& h, double t0, double t1) {
    std::vector<PieceSpan> out;
    const auto& pieces = h.pieces();
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        const double b = i == 0 ? -std::numeric_limits<double>::infinity() : pieces[i].begin;
        const double e = i + 1 < pieces.size() ? pieces[i + 1].begin
                                               : std::numeric_limits<double>::infinity();
        const double lo = std::max(b, t0);
        const double hi = std::min(e, t1);
        if (hi > lo) {
            out.push_back({&pieces[i], lo, hi});
        }
    }
    return out;
}

// Walks the output grid piece by piece.  The state is carried along the macro
// grid of each piece; a sample off that grid is taken from a copy advanced by
// the leftover fraction, so sampling never perturbs the main chain.
template <class Stepper>
void drive_samples(const TimeDependentHamiltonian& h, const TimeGrid& grid,
                   const IntegratorOptions& options, typename Stepper::State& state,
                   Stepper& stepper, const std::vector<double>& times) {
    if (!(options.macro_step > 0.0)) {
        throw InvalidArgument("macro step must be positive");
    }
    double t_cur = grid.t_start;
    std::size_t next = 0;
    for (const PieceSpan& span : spans_in(h, grid.t_start, grid.t_end)) {
        const PiecePropagator prop(*span.piece, grid.max_step, options.macro_step,
                                   options.min_substeps_per_period);
        const double slack = prop.slack();
        auto advance_main = [&](double target) {
            const std::int64_t k_target = prop.macro_floor(target);
            if (prop.macro_time(k_target) <= t_cur + slack) {
                return;
            }
            std::int64_t k = prop.macro_ceil(t_cur);
            const double first = prop.macro_time(k);
            if (first - t_cur > slack) {
                stepper.step(state, prop.between(t_cur, first), first - t_cur);
            }
            for (; k < k_target; ++k) {
                stepper.step(state, prop.macro(k), prop.macro_step());
            }
            t_cur = prop.macro_time(k_target);
        };
        const bool last_span = span.end >= grid.t_end;
        while (next < times.size() &&
               (times[next] < span.end || (last_span && times[next] <= span.end))) {
            const double ts = times[next];
            advance_main(ts);
            if (ts - t_cur > slack) {
                typename Stepper::State branch = state;
                stepper.step(branch, prop.between(t_cur, ts), ts - t_cur);
                stepper.record(branch);
            } else {
                stepper.record(state);
            }
            ++next;
        }
        advance_main(span.end);
        if (span.end - t_cur > slack) {
            stepper.step(state, prop.between(t_cur, span.end), span.end - t_cur);
        }
        t_cur = span.end;
    }
    if (next != times.size()) {
        throw IntegratorError("internal error: samples left after the last piece");
    }
}

class UnitaryStepper {
public:
    using State = Ket;

    UnitaryStepper(const HilbertLayout& layout, EvolutionResult& out)
        : out_(out),
          excited_(excited_projector(layout)),
          photons_(layout.resonator_op(linalg::number_operator(layout.fock_cutoff()))) {}

    void step(Ket& psi, const ComplexMatrix& u, double) const { psi = u * psi; }

    void record(const Ket& psi) {
        const double norm = psi.norm();
        out_.diagnostics.max_norm_error =
            std::max(out_.diagnostics.max_norm_error, std::abs(norm - 1.0));
        out_.excited_population.push_back(excited_population(psi));
        out_.photon_number.push_back(linalg::expectation(photons_, psi));
    }

private:
    static ComplexMatrix excited_projector(const HilbertLayout& layout) {
        ComplexMatrix e = ComplexMatrix::Zero(2, 2);
        e(HilbertLayout::kExcited, HilbertLayout::kExcited) = 1.0;
        return layout.qubit_op(e);
    }
    double excited_population(const Ket& psi) const {
        return linalg::expectation(excited_, psi);
    }

    EvolutionResult& out_;
    ComplexMatrix excited_;
    ComplexMatrix photons_;
};

class LindbladStepper {
public:
    using State = ComplexMatrix;

    LindbladStepper(const HilbertLayout& layout, const std::vector<CollapseSpec>& collapses,
                    EvolutionResult& out)
        : out_(out),
          photons_(layout.resonator_op(linalg::number_operator(layout.fock_cutoff()))) {
        const auto n = static_cast<Eigen::Index>(layout.dim());
        ComplexMatrix e = ComplexMatrix::Zero(2, 2);
        e(HilbertLayout::kExcited, HilbertLayout::kExcited) = 1.0;
        excited_ = layout.qubit_op(e);
        anti_ = ComplexMatrix::Zero(n, n);
        for (const CollapseSpec& c : collapses) {
            if (c.op.rows() != n || c.op.cols() != n) {
                throw DimensionError("collapse operator dimension differs from the state");
            }
            if (!(c.rate >= 0.0) || !std::isfinite(c.rate)) {
                throw InvalidArgument("collapse rate must be finite and >= 0");
            }
            if (c.rate == 0.0) {
                continue;
            }
            const ComplexMatrix l = std::sqrt(c.rate) * c.op;
            anti_ += 0.5 * (l.adjoint() * l);
            std::vector<Entry> nz;
            for (Eigen::Index j = 0; j < n; ++j) {
                for (Eigen::Index i = 0; i < n; ++i) {
                    if (l(i, j) != Complex(0.0, 0.0)) {
                        nz.push_back({i, j, l(i, j)});
                    }
                }
            }
            jumps_.push_back(std::move(nz));
        }
        const Eigen::VectorXcd d = anti_.diagonal();
        diagonal_anti_ = (anti_ - ComplexMatrix(d.asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
        anti_diag_ = d.real();
    }

    void step(ComplexMatrix& rho, const ComplexMatrix& u, double tau) {
        dissipate(rho, 0.5 * tau);
        tmp_.noalias() = u * rho;
        rho.noalias() = tmp_ * u.adjoint();
        dissipate(rho, 0.5 * tau);
    }

    void record(const ComplexMatrix& rho) {
        const DensityMatrix dm(rho);
        Diagnostics& d = out_.diagnostics;
        d.max_trace_error = std::max(d.max_trace_error, std::abs(dm.trace() - 1.0));
        d.max_hermiticity_error = std::max(d.max_hermiticity_error, dm.hermiticity_error());
        d.min_eigenvalue = std::min(d.min_eigenvalue, dm.min_eigenvalue());
        // populations are read from the Hermitian part
        const ComplexMatrix herm = 0.5 * (rho + rho.adjoint());
        out_.excited_population.push_back(linalg::expectation(excited_, DensityMatrix(herm)));
        out_.photon_number.push_back(linalg::expectation(photons_, DensityMatrix(herm)));
    }

private:
    struct Entry {
        Eigen::Index row;
        Eigen::Index col;
        Complex value;
    };

    // sum_k L_k rho L_k^dag - {anti, rho}; the jumps are stored by their
    // nonzeros, which for sigma_- and a is one per column
    void rate(const ComplexMatrix& rho, ComplexMatrix& out) const {
        const Eigen::Index n = rho.rows();
        if (diagonal_anti_) {
            for (Eigen::Index j = 0; j < n; ++j) {
                for (Eigen::Index i = 0; i < n; ++i) {
                    out(i, j) = -(anti_diag_(i) + anti_diag_(j)) * rho(i, j);
                }
            }
        } else {
            out.noalias() = -(anti_ * rho);
            out.noalias() -= rho * anti_;
        }
        for (const std::vector<Entry>& l : jumps_) {
            for (const Entry& b : l) {
                const Complex cb = std::conj(b.value);
                for (const Entry& a : l) {
                    out(a.row, b.row) += a.value * cb * rho(a.col, b.col);
                }
            }
        }
    }

    void dissipate(ComplexMatrix& rho, double tau) {
        if (jumps_.empty() || tau <= 0.0) {
            return;
        }
        k1_.resize(rho.rows(), rho.cols());
        k2_.resize(rho.rows(), rho.cols());
        k3_.resize(rho.rows(), rho.cols());
        k4_.resize(rho.rows(), rho.cols());
        rate(rho, k1_);
        stage_ = rho + 0.5 * tau * k1_;
        rate(stage_, k2_);
        stage_ = rho + 0.5 * tau * k2_;
        rate(stage_, k3_);
        stage_ = rho + tau * k3_;
        rate(stage_, k4_);
        rho += (tau / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
    }

    EvolutionResult& out_;
    ComplexMatrix excited_;
    ComplexMatrix photons_;
    ComplexMatrix anti_;
    Eigen::VectorXd anti_diag_;
    bool diagonal_anti_ = true;
    std::vector<std::vector<Entry>> jumps_;
    ComplexMatrix tmp_, stage_, k1_, k2_, k3_, k4_;
};

HilbertLayout layout_for(std::size_t dim) {
    if (dim % 2 != 0 || dim < 4) {
        throw DimensionError("state dimension must be 2 x fock_cutoff with fock_cutoff >= 2");
    }
    return HilbertLayout(dim / 2);
}

void check_finite(const EvolutionResult& r) {
    for (std::size_t i = 0; i < r.times.size(); ++i) {
        if (!std::isfinite(r.excited_population[i]) || !std::isfinite(r.photon_number[i])) {
            throw IntegratorError("non-finite state during integration");
        }
    }
}

}  // namespace

EvolutionResult evolve_unitary(const TimeDependentHamiltonian& h, const Ket& psi0,
                               const TimeGrid& grid, const IntegratorOptions& options) {
    grid.validate();
    if (static_cast<std::size_t>(psi0.size()) != h.dim()) {
        throw DimensionError("initial state dimension differs from the Hamiltonian");
    }
    if (std::abs(psi0.norm() - 1.0) > 1e-8) {
        throw InvalidArgument("initial state must be normalized");
    }
    const HilbertLayout layout = layout_for(h.dim());
    EvolutionResult out;
    out.times = grid.times();
    UnitaryStepper stepper(layout, out);
    Ket psi = psi0;
    drive_samples(h, grid, options, psi, stepper, out.times);
    check_finite(out);
    out.final_state = DensityMatrix::from_ket(psi);
    return out;
}

EvolutionResult evolve_lindblad(const TimeDependentHamiltonian& h, const DensityMatrix& rho0,
                                const std::vector<CollapseSpec>& collapses, const TimeGrid& grid,
                                const IntegratorOptions& options) {
    grid.validate();
    if (rho0.dim() != h.dim()) {
        throw DimensionError("initial state dimension differs from the Hamiltonian");
    }
    rho0.validate();
    const HilbertLayout layout = layout_for(h.dim());
    EvolutionResult out;
    out.times = grid.times();
    LindbladStepper stepper(layout, collapses, out);
    ComplexMatrix rho = rho0.matrix();
    drive_samples(h, grid, options, rho, stepper, out.times);
    check_finite(out);
    out.final_state = DensityMatrix(rho);
    return out;
}

}  // namespace qswitch::dynamics
