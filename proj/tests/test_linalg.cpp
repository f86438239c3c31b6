#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "qswitch/errors.hpp"
#include "qswitch/linalg.hpp"

using namespace qswitch;
using namespace qswitch::linalg;

namespace {

ComplexMatrix random_matrix(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> d;
    ComplexMatrix m(n, n);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = Complex(d(rng), d(rng));
    }
    return m;
}

ComplexMatrix random_hermitian(std::size_t n, std::mt19937_64& rng) {
    ComplexMatrix m = random_matrix(n, rng);
    return 0.5 * (m + m.adjoint());
}

// Taylor series with enough terms for small-norm arguments.
ComplexMatrix taylor_exp(const ComplexMatrix& a, int terms = 60) {
    ComplexMatrix sum = ComplexMatrix::Identity(a.rows(), a.cols());
    ComplexMatrix term = sum;
    for (int k = 1; k < terms; ++k) {
        term = term * a / static_cast<double>(k);
        sum += term;
    }
    return sum;
}

double rel_frobenius(const ComplexMatrix& a, const ComplexMatrix& b) {
    return (a - b).norm() / b.norm();
}

}  // namespace

TEST(Tensor, IdentityTimesIdentity) {
    EXPECT_LE(max_abs(tensor_product(identity(2), identity(3)) - identity(6)), 0.0);
}

TEST(Tensor, SigmaZTimesIdentityDiagonal) {
    const ComplexMatrix m = tensor_product(sigma_z(), identity(2));
    const Eigen::Vector4d expected(1, 1, -1, -1);
    for (int i = 0; i < 4; ++i) {
        EXPECT_EQ(m(i, i), Complex(expected(i), 0.0));
    }
    EXPECT_DOUBLE_EQ((m - ComplexMatrix(m.diagonal().asDiagonal())).norm(), 0.0);
}

TEST(Tensor, SigmaXTimesAMapsG1ToE0) {
    HilbertLayout layout(2);
    const ComplexMatrix op = tensor_product(sigma_x(), annihilation(2));
    // hand expansion: sx|g> = |e>, a|1> = |0>
    const Ket out = op * layout.basis_ket(HilbertLayout::kGround, 1);
    EXPECT_LE((out - layout.basis_ket(HilbertLayout::kExcited, 0)).norm(), 1e-15);
}

TEST(Tensor, Associative) {
    std::mt19937_64 rng(3);
    const ComplexMatrix a = random_matrix(2, rng), b = random_matrix(3, rng),
                        c = random_matrix(2, rng);
    EXPECT_LE(max_abs(tensor_product(tensor_product(a, b), c) -
                      tensor_product(a, tensor_product(b, c))),
              1e-12);
}

TEST(Tensor, Bilinear) {
    std::mt19937_64 rng(4);
    const ComplexMatrix a = random_matrix(2, rng), a2 = random_matrix(2, rng),
                        b = random_matrix(3, rng);
    const Complex s(0.3, -1.7);
    EXPECT_LE(max_abs(tensor_product(s * a + a2, b) -
                      (s * tensor_product(a, b) + tensor_product(a2, b))),
              1e-12);
}

TEST(Tensor, RejectsNonSquare) {
    EXPECT_THROW(tensor_product(ComplexMatrix::Zero(2, 3), identity(2)), DimensionError);
}

TEST(Annihilation, LowestLadder) {
    const ComplexMatrix a = annihilation(2);
    const Ket zero = Ket::Unit(2, 0), one = Ket::Unit(2, 1);
    EXPECT_LE((a * one - zero).norm(), 0.0);
    EXPECT_LE((a * zero).norm(), 0.0);
}

TEST(Annihilation, NumberOperatorDiagonal) {
    const ComplexMatrix a = annihilation(4);
    const ComplexMatrix n = a.adjoint() * a;
    for (int k = 0; k < 4; ++k) {
        EXPECT_NEAR(n(k, k).real(), k, 1e-15);
    }
    EXPECT_LE(max_abs(n - number_operator(4)), 1e-15);
}

TEST(Annihilation, TruncatedCommutator) {
    const ComplexMatrix a = annihilation(3);
    const ComplexMatrix c = a * a.adjoint() - a.adjoint() * a;
    ComplexMatrix expected = ComplexMatrix::Zero(3, 3);
    expected.diagonal() << 1.0, 1.0, -2.0;
    EXPECT_LE(max_abs(c - expected), 1e-14);
}

TEST(Annihilation, EntriesAreExactSquareRoots) {
    const ComplexMatrix a = annihilation(10);
    for (int n = 1; n < 10; ++n) {
        EXPECT_EQ(a(n - 1, n).real(), std::sqrt(static_cast<double>(n)));
    }
    EXPECT_EQ(a.cwiseAbs().sum(), [] {
        double s = 0;
        for (int n = 1; n < 10; ++n) s += std::sqrt(static_cast<double>(n));
        return s;
    }());
}

TEST(Annihilation, RejectsTinyCutoff) {
    EXPECT_THROW(annihilation(1), InvalidArgument);
    EXPECT_THROW(HilbertLayout(1), InvalidArgument);
}

TEST(MatrixExp, ZeroIsIdentity) {
    EXPECT_LE(max_abs(matrix_exp(ComplexMatrix::Zero(4, 4)) - identity(4)), 0.0);
}

TEST(MatrixExp, DiagonalPhase) {
    const double theta = 0.731;
    const ComplexMatrix u = matrix_exp(kI * theta * sigma_z());
    EXPECT_LE(std::abs(u(0, 0) - std::exp(kI * theta)), 1e-15);
    EXPECT_LE(std::abs(u(1, 1) - std::exp(-kI * theta)), 1e-15);
    EXPECT_LE(std::abs(u(0, 1)) + std::abs(u(1, 0)), 1e-15);
}

TEST(MatrixExp, HalfPiRotationSwapsWithPhase) {
    const ComplexMatrix u = matrix_exp(-kI * (std::numbers::pi / 2) * sigma_x());
    // closed form: cos(pi/2) I - i sin(pi/2) sx = -i sx
    EXPECT_LE(max_abs(u - (-kI) * sigma_x()), 1e-15);
    const Ket e = Ket::Unit(2, HilbertLayout::kExcited);
    const Ket g = Ket::Unit(2, HilbertLayout::kGround);
    EXPECT_LE((u * g - (-kI) * e).norm(), 1e-15);
}

TEST(MatrixExp, MatchesTaylorOnGeneralMatrices) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const ComplexMatrix a = 0.4 * random_matrix(6, rng);
        EXPECT_LE(rel_frobenius(matrix_exp(a), taylor_exp(a)), 1e-11);
        EXPECT_LE(rel_frobenius(matrix_exp_pade(a), taylor_exp(a)), 1e-11);
    }
}

TEST(MatrixExp, PadeAgreesWithEigenPathOnLargeNorm) {
    std::mt19937_64 rng(12);
    const ComplexMatrix h = 8.0 * random_hermitian(8, rng);
    // exp(-iH) by repeated squaring of the Taylor series of exp(-iH/2^10)
    ComplexMatrix oracle = taylor_exp(-kI * h / 1024.0, 30);
    for (int k = 0; k < 10; ++k) {
        oracle = oracle * oracle;
    }
    EXPECT_LE(rel_frobenius(matrix_exp(-kI * h), oracle), 1e-11);
    EXPECT_LE(rel_frobenius(matrix_exp_pade(-kI * h), oracle), 1e-11);
}

TEST(MatrixExp, AntiHermitianIsUnitary) {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        const ComplexMatrix h = 50.0 * random_hermitian(10, rng);
        const ComplexMatrix u = matrix_exp(-kI * h * 0.37);
        EXPECT_LE(max_abs(u.adjoint() * u - identity(10)), 1e-10);
        const ComplexMatrix v = unitary_exp(h, 0.37);
        EXPECT_LE(max_abs(v.adjoint() * v - identity(10)), 1e-10);
        EXPECT_LE(max_abs(u - v), 1e-10);
    }
}

TEST(MatrixExp, RejectsNonSquare) {
    EXPECT_THROW(matrix_exp(ComplexMatrix::Zero(2, 3)), DimensionError);
}

TEST(PartialTrace, ProductState) {
    std::mt19937_64 rng(21);
    const HilbertLayout layout(4);
    auto random_state = [&](std::size_t n) {
        const ComplexMatrix m = random_matrix(n, rng);
        ComplexMatrix rho = m * m.adjoint();
        return ComplexMatrix(rho / rho.trace());
    };
    const ComplexMatrix rq = random_state(2), rr = random_state(4);
    const DensityMatrix reduced = partial_trace_resonator(DensityMatrix(tensor_product(rq, rr)), layout);
    EXPECT_LE(max_abs(reduced.matrix() - rq), 1e-14);
}

TEST(PartialTrace, EntangledGivesMaximallyMixed) {
    const HilbertLayout layout(3);
    const Ket psi = (layout.basis_ket(HilbertLayout::kExcited, 0) +
                     layout.basis_ket(HilbertLayout::kGround, 1)) /
                    std::sqrt(2.0);
    const DensityMatrix q = partial_trace_resonator(DensityMatrix::from_ket(psi), layout);
    EXPECT_LE(max_abs(q.matrix() - 0.5 * identity(2)), 1e-15);
}

TEST(PartialTrace, ExcitedConvention) {
    const HilbertLayout layout(5);
    const DensityMatrix q =
        partial_trace_resonator(DensityMatrix::from_ket(layout.basis_ket(HilbertLayout::kExcited, 0)), layout);
    EXPECT_EQ(q.matrix()(0, 0), Complex(1.0, 0.0));
    EXPECT_EQ(q.matrix()(1, 1), Complex(0.0, 0.0));
}

TEST(PartialTrace, TracePreservingAndPositive) {
    std::mt19937_64 rng(22);
    const HilbertLayout layout(5);
    for (int trial = 0; trial < 20; ++trial) {
        const ComplexMatrix m = random_matrix(10, rng);
        ComplexMatrix rho = m * m.adjoint();
        rho /= rho.trace();
        const DensityMatrix q = partial_trace_resonator(DensityMatrix(rho), layout);
        EXPECT_NEAR(q.trace(), 1.0, 1e-10);
        EXPECT_GE(q.min_eigenvalue(), -1e-9);
    }
}

TEST(PartialTrace, DimensionMismatch) {
    EXPECT_THROW(partial_trace_resonator(DensityMatrix(identity(6) / 6.0), HilbertLayout(4)),
                 DimensionError);
}

TEST(Expectation, Basics) {
    const Ket e = Ket::Unit(2, HilbertLayout::kExcited);
    EXPECT_DOUBLE_EQ(expectation(sigma_z(), e), 1.0);
    EXPECT_DOUBLE_EQ(expectation(number_operator(3), Ket(Ket::Unit(3, 0))), 0.0);
    const Ket sup = (Ket::Unit(3, 0) + Ket::Unit(3, 1)) / std::sqrt(2.0);
    EXPECT_NEAR(expectation(number_operator(3), sup), 0.5, 1e-15);
    EXPECT_NEAR(expectation(number_operator(3), DensityMatrix::from_ket(sup)), 0.5, 1e-15);
}

TEST(Expectation, RejectsNonHermitian) {
    EXPECT_THROW(expectation(sigma_plus(), Ket(Ket::Unit(2, 0))), InvalidArgument);
    EXPECT_THROW(expectation(sigma_z(), Ket(Ket::Unit(3, 0))), DimensionError);
}

TEST(DensityMatrix, Validate) {
    EXPECT_NO_THROW(DensityMatrix(identity(4) / 4.0).validate());
    EXPECT_THROW(DensityMatrix(identity(4)).validate(), InvalidArgument);
    ComplexMatrix bad = identity(2) / 2.0;
    bad(0, 1) = Complex(0.0, 0.3);
    EXPECT_THROW(DensityMatrix(bad).validate(), InvalidArgument);
    ComplexMatrix neg = ComplexMatrix::Zero(2, 2);
    neg(0, 0) = 1.5;
    neg(1, 1) = -0.5;
    EXPECT_THROW(DensityMatrix(neg).validate(), InvalidArgument);
}

TEST(Layout, IndexOrderingQubitSlowest) {
    const HilbertLayout layout(4);
    EXPECT_EQ(layout.dim(), 8u);
    EXPECT_EQ(layout.index(HilbertLayout::kExcited, 3), 3u);
    EXPECT_EQ(layout.index(HilbertLayout::kGround, 0), 4u);
    EXPECT_LE(max_abs(layout.qubit_op(sigma_z()) - tensor_product(sigma_z(), identity(4))), 0.0);
    EXPECT_LE(max_abs(layout.resonator_op(annihilation(4)) -
                      tensor_product(identity(2), annihilation(4))),
              0.0);
}

TEST(Pauli, RaisingLowering) {
    const Ket e = Ket::Unit(2, HilbertLayout::kExcited);
    const Ket g = Ket::Unit(2, HilbertLayout::kGround);
    EXPECT_LE((sigma_plus() * g - e).norm(), 0.0);
    EXPECT_LE((sigma_minus() * e - g).norm(), 0.0);
    EXPECT_LE(max_abs(sigma_plus() + sigma_minus() - sigma_x()), 0.0);
    EXPECT_LE(max_abs(sigma_x() * sigma_y() - kI * sigma_z()), 1e-15);
}
