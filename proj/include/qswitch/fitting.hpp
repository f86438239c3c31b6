#pragma once

// Small dense nonlinear least-squares solver shared by the spectroscopy and
// time-trace fits.

#include <functional>

#include <Eigen/Dense>

namespace qswitch::fitting {

/// Fills the residual vector and, when the pointer is non-null, its Jacobian.
using ResidualFn =
    std::function<void(const Eigen::VectorXd& params, Eigen::VectorXd& residual,
                       Eigen::MatrixXd* jacobian)>;

struct GaussNewtonOptions {
    int max_iterations = 100;
    double relative_step_tol = 1e-10;
    int max_halvings = 40;
};

struct GaussNewtonResult {
    Eigen::VectorXd params;
    double rms = 0.0;  // sqrt(mean residual^2)
    int iterations = 0;
    bool converged = false;
};

/// Gauss-Newton with step halving.  Steps come from a rank-revealing QR solve
/// of J dp = -r.  `scale` sets the per-parameter size used by the relative
/// step test.
GaussNewtonResult gauss_newton(const ResidualFn& fn, Eigen::VectorXd params,
                               const Eigen::VectorXd& scale,
                               const GaussNewtonOptions& options = {});

double rms(const Eigen::VectorXd& residual);

}  // namespace qswitch::fitting
