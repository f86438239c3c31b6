#include "qswitch/linalg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "qswitch/errors.hpp"

namespace qswitch::linalg {

HilbertLayout::HilbertLayout(std::size_t fock_cutoff) : fock_cutoff_(fock_cutoff) {
    if (fock_cutoff < 2) {
        throw InvalidArgument("fock cutoff must be >= 2, got " + std::to_string(fock_cutoff));
    }
}

std::size_t HilbertLayout::index(std::size_t qubit, std::size_t photons) const {
    if (qubit >= kQubitDim || photons >= fock_cutoff_) {
        throw DimensionError("basis label out of range");
    }
    return qubit * fock_cutoff_ + photons;
}

Ket HilbertLayout::basis_ket(std::size_t qubit, std::size_t photons) const {
    Ket k = Ket::Zero(static_cast<Eigen::Index>(dim()));
    k(static_cast<Eigen::Index>(index(qubit, photons))) = 1.0;
    return k;
}

ComplexMatrix HilbertLayout::qubit_op(const ComplexMatrix& op) const {
    if (op.rows() != 2 || op.cols() != 2) {
        throw DimensionError("qubit operator must be 2x2");
    }
    return tensor_product(op, identity(fock_cutoff_));
}

ComplexMatrix HilbertLayout::resonator_op(const ComplexMatrix& op) const {
    const auto n = static_cast<Eigen::Index>(fock_cutoff_);
    if (op.rows() != n || op.cols() != n) {
        throw DimensionError("resonator operator must be NxN with N the fock cutoff");
    }
    return tensor_product(identity(kQubitDim), op);
}

DensityMatrix::DensityMatrix(ComplexMatrix rho) : rho_(std::move(rho)) {
    if (rho_.rows() != rho_.cols()) {
        throw DimensionError("density matrix must be square");
    }
}

DensityMatrix DensityMatrix::from_ket(const Ket& psi) {
    return DensityMatrix(psi * psi.adjoint());
}

double DensityMatrix::trace() const { return rho_.trace().real(); }

double DensityMatrix::min_eigenvalue() const {
    const ComplexMatrix herm = 0.5 * (rho_ + rho_.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(herm, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double DensityMatrix::hermiticity_error() const { return linalg::hermiticity_error(rho_); }

void DensityMatrix::validate() const {
    if (rho_.size() == 0) {
        throw InvalidArgument("density matrix is empty");
    }
    if (!rho_.allFinite()) {
        throw InvalidArgument("density matrix has non-finite entries");
    }
    if (hermiticity_error() > 1e-10) {
        throw InvalidArgument("density matrix is not Hermitian");
    }
    if (std::abs(trace() - 1.0) > 1e-8) {
        throw InvalidArgument("density matrix trace differs from 1");
    }
    if (min_eigenvalue() < -1e-9) {
        throw InvalidArgument("density matrix has a negative eigenvalue");
    }
}

ComplexMatrix identity(std::size_t dim) {
    const auto n = static_cast<Eigen::Index>(dim);
    return ComplexMatrix::Identity(n, n);
}

ComplexMatrix sigma_x() {
    ComplexMatrix m(2, 2);
    m << 0.0, 1.0, 1.0, 0.0;
    return m;
}

ComplexMatrix sigma_y() {
    ComplexMatrix m(2, 2);
    m << 0.0, -kI, kI, 0.0;
    return m;
}

ComplexMatrix sigma_z() {
    ComplexMatrix m(2, 2);
    m << 1.0, 0.0, 0.0, -1.0;
    return m;
}

ComplexMatrix sigma_plus() {
    ComplexMatrix m = ComplexMatrix::Zero(2, 2);
    m(HilbertLayout::kExcited, HilbertLayout::kGround) = 1.0;
    return m;
}

ComplexMatrix sigma_minus() { return sigma_plus().adjoint(); }

ComplexMatrix annihilation(std::size_t fock_cutoff) {
    if (fock_cutoff < 2) {
        throw InvalidArgument("annihilation operator needs N >= 2");
    }
    const auto n = static_cast<Eigen::Index>(fock_cutoff);
    ComplexMatrix a = ComplexMatrix::Zero(n, n);
    for (Eigen::Index k = 1; k < n; ++k) {
        a(k - 1, k) = std::sqrt(static_cast<double>(k));
    }
    return a;
}

ComplexMatrix number_operator(std::size_t fock_cutoff) {
    const ComplexMatrix a = annihilation(fock_cutoff);
    return a.adjoint() * a;
}

ComplexMatrix tensor_product(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.rows() != a.cols() || b.rows() != b.cols()) {
        throw DimensionError("tensor_product expects square matrices");
    }
    const Eigen::Index na = a.rows();
    const Eigen::Index nb = b.rows();
    ComplexMatrix out(na * nb, na * nb);
    for (Eigen::Index i = 0; i < na; ++i) {
        for (Eigen::Index j = 0; j < na; ++j) {
            out.block(i * nb, j * nb, nb, nb) = a(i, j) * b;
        }
    }
    return out;
}

double max_abs(const ComplexMatrix& a) {
    return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

double hermiticity_error(const ComplexMatrix& a) {
    if (a.rows() != a.cols()) {
        throw DimensionError("hermiticity check on a non-square matrix");
    }
    return max_abs(a - a.adjoint());
}

bool is_hermitian(const ComplexMatrix& a, double rel_tol) {
    return hermiticity_error(a) <= rel_tol * std::max(max_abs(a), 1e-300);
}

namespace {

void require_square(const ComplexMatrix& a, const char* what) {
    if (a.rows() != a.cols()) {
        throw DimensionError(std::string(what) + " expects a square matrix");
    }
}

double one_norm(const ComplexMatrix& a) {
    return a.cwiseAbs().colwise().sum().maxCoeff();
}

// Pade coefficients b_0..b_m and the 1-norm bounds theta_m (Higham 2005).
constexpr std::array<double, 4> kPade3{120.0, 60.0, 12.0, 1.0};
constexpr std::array<double, 6> kPade5{30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
constexpr std::array<double, 8> kPade7{17297280.0, 8648640.0, 1995840.0, 277200.0,
                                       25200.0,    1512.0,    56.0,      1.0};
constexpr std::array<double, 10> kPade9{17643225600.0, 8821612800.0, 2075673600.0, 302702400.0,
                                        30270240.0,    2162160.0,    110880.0,     3960.0,
                                        90.0,          1.0};
constexpr std::array<double, 14> kPade13{
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
    129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
    1323241920.0,        40840800.0,          960960.0,           16380.0,
    182.0,               1.0};

template <std::size_t K>
ComplexMatrix pade_low(const ComplexMatrix& a, const std::array<double, K>& b) {
    // U = A * sum_{odd} b_k A^{k-1},  V = sum_{even} b_k A^k
    const Eigen::Index n = a.rows();
    const ComplexMatrix ident = ComplexMatrix::Identity(n, n);
    const ComplexMatrix a2 = a * a;
    ComplexMatrix power = ident;
    ComplexMatrix u_sum = ComplexMatrix::Zero(n, n);
    ComplexMatrix v_sum = ComplexMatrix::Zero(n, n);
    for (std::size_t k = 0; k < K; k += 2) {
        v_sum += b[k] * power;
        if (k + 1 < K) {
            u_sum += b[k + 1] * power;
        }
        power = power * a2;
    }
    const ComplexMatrix u = a * u_sum;
    return (v_sum - u).partialPivLu().solve(v_sum + u);
}

ComplexMatrix pade13(const ComplexMatrix& a) {
    const auto& b = kPade13;
    const Eigen::Index n = a.rows();
    const ComplexMatrix ident = ComplexMatrix::Identity(n, n);
    const ComplexMatrix a2 = a * a;
    const ComplexMatrix a4 = a2 * a2;
    const ComplexMatrix a6 = a4 * a2;
    const ComplexMatrix u =
        a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 +
             b[1] * ident);
    const ComplexMatrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 +
                            b[2] * a2 + b[0] * ident;
    return (v - u).partialPivLu().solve(v + u);
}

}  // namespace

ComplexMatrix matrix_exp_pade(const ComplexMatrix& a) {
    require_square(a, "matrix_exp");
    if (!a.allFinite()) {
        throw InvalidArgument("matrix_exp: non-finite input");
    }
    if (a.size() == 0) {
        return a;
    }
    const double norm = one_norm(a);
    if (norm <= 1.495585217958292e-2) return pade_low(a, kPade3);
    if (norm <= 2.539398330063230e-1) return pade_low(a, kPade5);
    if (norm <= 9.504178996162932e-1) return pade_low(a, kPade7);
    if (norm <= 2.097847961257068e0) return pade_low(a, kPade9);

    constexpr double theta13 = 5.371920351148152;
    int squarings = 0;
    if (norm > theta13) {
        squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm / theta13))));
    }
    ComplexMatrix r = pade13(a / std::ldexp(1.0, squarings));
    for (int s = 0; s < squarings; ++s) {
        r = r * r;
    }
    return r;
}

ComplexMatrix unitary_exp(const ComplexMatrix& h, double dt) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
    if (es.info() != Eigen::Success) {
        throw NumericalError("unitary_exp: eigendecomposition failed");
    }
    const auto& vals = es.eigenvalues();
    const auto& vecs = es.eigenvectors();
    Eigen::VectorXcd phases(vals.size());
    for (Eigen::Index k = 0; k < vals.size(); ++k) {
        phases(k) = std::polar(1.0, -vals(k) * dt);
    }
    return vecs * phases.asDiagonal() * vecs.adjoint();
}

ComplexMatrix matrix_exp(const ComplexMatrix& a) {
    require_square(a, "matrix_exp");
    if (!a.allFinite()) {
        throw InvalidArgument("matrix_exp: non-finite input");
    }
    if (a.size() == 0) {
        return a;
    }
    const double scale = std::max(max_abs(a), 1e-300);
    if (max_abs(a - a.adjoint()) <= 1e-14 * scale) {
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (a + a.adjoint()));
        const auto& vals = es.eigenvalues();
        Eigen::VectorXcd d(vals.size());
        for (Eigen::Index k = 0; k < vals.size(); ++k) {
            d(k) = std::exp(vals(k));
        }
        return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
    }
    if (max_abs(a + a.adjoint()) <= 1e-14 * scale) {
        // A = -iH with H = iA Hermitian.
        const ComplexMatrix h = kI * a;
        return unitary_exp(0.5 * (h + h.adjoint()), 1.0);
    }
    return matrix_exp_pade(a);
}

DensityMatrix partial_trace_resonator(const DensityMatrix& rho, const HilbertLayout& layout) {
    if (rho.dim() != layout.dim()) {
        throw DimensionError("partial trace: density matrix dimension does not match layout");
    }
    const auto n = static_cast<Eigen::Index>(layout.fock_cutoff());
    const ComplexMatrix& m = rho.matrix();
    ComplexMatrix out = ComplexMatrix::Zero(2, 2);
    for (Eigen::Index i = 0; i < 2; ++i) {
        for (Eigen::Index j = 0; j < 2; ++j) {
            out(i, j) = m.block(i * n, j * n, n, n).trace();
        }
    }
    return DensityMatrix(std::move(out));
}

namespace {

double real_part_checked(Complex value) {
    if (std::abs(value.imag()) > 1e-10 * (1.0 + std::abs(value.real()))) {
        throw NumericalError("expectation value has a non-negligible imaginary part");
    }
    return value.real();
}

void require_observable(const ComplexMatrix& op, Eigen::Index dim) {
    if (op.rows() != dim || op.cols() != dim) {
        throw DimensionError("expectation: operator and state dimensions differ");
    }
    if (!is_hermitian(op)) {
        throw InvalidArgument("expectation: operator is not Hermitian");
    }
}

}  // namespace

double expectation(const ComplexMatrix& op, const Ket& psi) {
    require_observable(op, psi.size());
    return real_part_checked(psi.dot(op * psi));
}

double expectation(const ComplexMatrix& op, const DensityMatrix& rho) {
    require_observable(op, rho.matrix().rows());
    return real_part_checked((op * rho.matrix()).trace());
}

}  // namespace qswitch::linalg
