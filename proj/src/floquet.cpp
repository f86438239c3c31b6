#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "propagation.hpp"
#include "qswitch/dynamics.hpp"
#include "qswitch/errors.hpp"

namespace qswitch::dynamics {

double fold_quasienergy(double value, double drive_frequency) {
    if (!(drive_frequency > 0.0)) {
        throw InvalidArgument("fold frequency must be positive");
    }
    const double half = 0.5 * drive_frequency;
    double r = std::fmod(value, drive_frequency);
    if (r > half) {
        r -= drive_frequency;
    } else if (r <= -half) {
        r += drive_frequency;
    }
    return r;
}

FloquetResult floquet_propagator(const TimeDependentHamiltonian& h, const HilbertLayout& layout,
                                 const FloquetOptions& options) {
    if (h.pieces().size() != 1) {
        throw InvalidArgument("Floquet analysis needs a single periodic piece");
    }
    if (layout.dim() != h.dim()) {
        throw DimensionError("layout dimension differs from the Hamiltonian");
    }
    const HamiltonianPiece& piece = h.pieces().front();
    std::optional<double> period = options.period ? options.period : h.period();
    if (!period) {
        throw InvalidArgument("static Hamiltonian needs an explicit Floquet period");
    }
    const double T = *period;
    if (!(T > 0.0) || !std::isfinite(T)) {
        throw InvalidArgument("Floquet period must be positive");
    }
    const double origin = piece.phase_origin;
    const ComplexMatrix h0 = h(origin);
    const double mismatch = linalg::max_abs(h0 - h(origin + T));
    // also probe off the phase origin, where a cosine drive is not symmetric
    const double mismatch_q = linalg::max_abs(h(origin + 0.25 * T) - h(origin + 1.25 * T));
    if (std::max(mismatch, mismatch_q) > 1e-9 * std::max(1.0, linalg::max_abs(h0))) {
        throw InvalidArgument("period mismatch: H(t + T) differs from H(t)");
    }
    if (options.min_substeps < 1) {
        throw InvalidArgument("Floquet propagator needs at least one substep");
    }
    const double max_step =
        options.max_step > 0.0 ? options.max_step : T / static_cast<double>(options.min_substeps);
    const detail::PiecePropagator prop(piece, max_step, options.macro_step, options.min_substeps,
                                       T);

    const auto n = static_cast<Eigen::Index>(h.dim());
    FloquetResult out;
    out.period = T;
    out.period_propagator = ComplexMatrix::Identity(n, n);
    for (std::size_t k = 0; k < prop.macros_per_period(); ++k) {
        out.period_propagator = prop.macro(static_cast<std::int64_t>(k)) * out.period_propagator;
    }

    // U is normal, so its Schur form is diagonal and the Schur vectors are an
    // orthonormal set of eigenvectors even for (near-)degenerate phases.
    Eigen::ComplexSchur<ComplexMatrix> schur(out.period_propagator);
    if (schur.info() != Eigen::Success) {
        throw NumericalError("Schur decomposition of the period propagator failed");
    }
    out.modes = schur.matrixU();
    const double w = model::kTwoPi / T;
    const auto e0 = static_cast<Eigen::Index>(layout.index(HilbertLayout::kExcited, 0));
    const auto g1 = static_cast<Eigen::Index>(layout.index(HilbertLayout::kGround, 1));
    for (Eigen::Index i = 0; i < n; ++i) {
        const linalg::Complex lambda = schur.matrixT()(i, i);
        out.quasienergies.push_back(fold_quasienergy(-std::arg(lambda) / T, w));
        out.mode_overlaps.push_back(
            {std::norm(out.modes(e0, i)), std::norm(out.modes(g1, i))});
    }
    return out;
}

QuasienergyGap quasienergy_gap(const model::DeviceModel& m, const GapOptions& options) {
    m.validate();
    if (!m.drive) {
        throw InvalidArgument("quasienergy gap needs a longitudinal drive");
    }
    if (m.qubit.epsilon != 0.0) {
        throw InvalidArgument("quasienergy gap requires the optimal point (epsilon = 0)");
    }
    if (std::abs(m.qubit.gap - m.resonator.frequency) > 1e-9 * m.resonator.frequency) {
        throw InvalidArgument("quasienergy gap requires resonance (Delta = omega_r)");
    }
    const HilbertLayout layout = m.layout();
    const TimeDependentHamiltonian h =
        options.model == GapModel::driven_jc ? driven_jc_hamiltonian(m) : lab_hamiltonian(m);

    FloquetOptions fo;
    fo.period = model::kTwoPi / m.drive->frequency;
    fo.max_step = options.max_step > 0.0 ? options.max_step : default_max_step(m);
    fo.min_substeps = options.min_substeps;
    const FloquetResult fr = floquet_propagator(h, layout, fo);

    // the two modes carrying the most weight in span{|e,0>, |g,1>}
    std::size_t first = 0;
    std::size_t second = 1;
    auto weight = [&](std::size_t i) {
        return fr.mode_overlaps[i][0] + fr.mode_overlaps[i][1];
    };
    if (weight(second) > weight(first)) {
        std::swap(first, second);
    }
    for (std::size_t i = 2; i < fr.quasienergies.size(); ++i) {
        if (weight(i) > weight(first)) {
            second = first;
            first = i;
        } else if (weight(i) > weight(second)) {
            second = i;
        }
    }
    QuasienergyGap out;
    out.subspace_weights = {weight(first), weight(second)};
    if (out.subspace_weights[0] < 0.5 || out.subspace_weights[1] < 0.5) {
        throw ModeAmbiguityError("Floquet modes are ambiguous: subspace weight " +
                                 std::to_string(std::min(out.subspace_weights[0],
                                                         out.subspace_weights[1])) +
                                 " < 0.5");
    }

    // orient the splitting by the mode closer to the symmetric combination
    const auto e0 = static_cast<Eigen::Index>(layout.index(HilbertLayout::kExcited, 0));
    const auto g1 = static_cast<Eigen::Index>(layout.index(HilbertLayout::kGround, 1));
    auto symmetric = [&](std::size_t i) {
        const auto col = static_cast<Eigen::Index>(i);
        return std::norm((fr.modes(e0, col) + fr.modes(g1, col)) / std::sqrt(2.0));
    };
    std::size_t plus = first;
    std::size_t minus = second;
    if (symmetric(second) > symmetric(first)) {
        std::swap(plus, minus);
    }
    const double w = m.drive->frequency;
    out.signed_gap = fold_quasienergy(fr.quasienergies[plus] - fr.quasienergies[minus], w);
    out.gap = std::abs(out.signed_gap);
    return out;
}

}  // namespace qswitch::dynamics
