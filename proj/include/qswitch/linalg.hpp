#pragma once

// Dense complex linear algebra on the qubit (x) resonator Hilbert space.
//
// Basis convention: |q, n> with the qubit index varying slowest, so the joint
// index is q * N + n.  Qubit index 0 is the excited state |e>, index 1 the
// ground state |g>, which makes sigma_z = diag(+1, -1) and sigma_z|e> = +|e>.

#include <complex>
#include <cstddef>

#include <Eigen/Dense>

namespace qswitch::linalg {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using Ket = Eigen::VectorXcd;

inline constexpr Complex kI{0.0, 1.0};

/// Truncated joint space of one two-level qubit and one resonator mode.
class HilbertLayout {
public:
    static constexpr std::size_t kQubitDim = 2;
    static constexpr std::size_t kExcited = 0;
    static constexpr std::size_t kGround = 1;

    explicit HilbertLayout(std::size_t fock_cutoff);

    std::size_t fock_cutoff() const noexcept { return fock_cutoff_; }
    std::size_t dim() const noexcept { return kQubitDim * fock_cutoff_; }
    /// Joint index of |qubit, photons>.
    std::size_t index(std::size_t qubit, std::size_t photons) const;

    Ket basis_ket(std::size_t qubit, std::size_t photons) const;

    /// op (x) 1_N for a 2x2 qubit operator.
    ComplexMatrix qubit_op(const ComplexMatrix& op) const;
    /// 1_2 (x) op for an NxN resonator operator.
    ComplexMatrix resonator_op(const ComplexMatrix& op) const;

    bool operator==(const HilbertLayout&) const = default;

private:
    std::size_t fock_cutoff_;
};

/// Density matrix carrier.  Construction does not validate; call validate()
/// where a physical state is required.
class DensityMatrix {
public:
    DensityMatrix() = default;
    explicit DensityMatrix(ComplexMatrix rho);

    static DensityMatrix from_ket(const Ket& psi);

    const ComplexMatrix& matrix() const noexcept { return rho_; }
    ComplexMatrix& matrix() noexcept { return rho_; }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(rho_.rows()); }

    double trace() const;
    double min_eigenvalue() const;
    double hermiticity_error() const;

    /// Throws InvalidArgument unless Hermitian (1e-10), unit trace (1e-8) and
    /// positive (smallest eigenvalue >= -1e-9).
    void validate() const;

private:
    ComplexMatrix rho_;
};

// Single-qubit operators in the {|e>, |g>} basis.
ComplexMatrix identity(std::size_t dim);
ComplexMatrix sigma_x();
ComplexMatrix sigma_y();
ComplexMatrix sigma_z();
/// |e><g|
ComplexMatrix sigma_plus();
/// |g><e|
ComplexMatrix sigma_minus();

/// Truncated annihilation operator: a[n-1, n] = sqrt(n).  Requires N >= 2.
ComplexMatrix annihilation(std::size_t fock_cutoff);
ComplexMatrix number_operator(std::size_t fock_cutoff);

/// Kronecker product of two square matrices.
ComplexMatrix tensor_product(const ComplexMatrix& a, const ComplexMatrix& b);

/// exp(A).  Hermitian and anti-Hermitian inputs go through an eigendecomposition
/// (exactly unitary for anti-Hermitian A); everything else uses Pade scaling
/// and squaring.
ComplexMatrix matrix_exp(const ComplexMatrix& a);

/// exp(-i * h * dt) for Hermitian h, via eigendecomposition.
ComplexMatrix unitary_exp(const ComplexMatrix& h, double dt);

/// Pade scaling-and-squaring path, exposed for tests.
ComplexMatrix matrix_exp_pade(const ComplexMatrix& a);

DensityMatrix partial_trace_resonator(const DensityMatrix& rho, const HilbertLayout& layout);

double expectation(const ComplexMatrix& op, const Ket& psi);
double expectation(const ComplexMatrix& op, const DensityMatrix& rho);

/// max |A - A^dagger| entrywise.
double hermiticity_error(const ComplexMatrix& a);
bool is_hermitian(const ComplexMatrix& a, double rel_tol = 1e-12);
double max_abs(const ComplexMatrix& a);

}  // namespace qswitch::linalg
