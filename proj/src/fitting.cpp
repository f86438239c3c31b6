#include "qswitch/fitting.hpp"

#include <cmath>

#include "qswitch/errors.hpp"

namespace qswitch::fitting {

double rms(const Eigen::VectorXd& residual) {
    if (residual.size() == 0) {
        return 0.0;
    }
    return std::sqrt(residual.squaredNorm() / static_cast<double>(residual.size()));
}

GaussNewtonResult gauss_newton(const ResidualFn& fn, Eigen::VectorXd params,
                               const Eigen::VectorXd& scale, const GaussNewtonOptions& options) {
    if (scale.size() != params.size()) {
        throw DimensionError("parameter scale size differs from the parameter count");
    }
    GaussNewtonResult out;
    Eigen::VectorXd r;
    Eigen::MatrixXd jac;
    fn(params, r, &jac);
    double cost = r.squaredNorm();
    if (!std::isfinite(cost)) {
        throw NumericalError("non-finite residual at the starting point");
    }
    for (int it = 0; it < options.max_iterations; ++it) {
        out.iterations = it + 1;
        const Eigen::VectorXd step = jac.colPivHouseholderQr().solve(-r);
        if (!step.allFinite()) {
            break;
        }
        double factor = 1.0;
        bool accepted = false;
        Eigen::VectorXd trial;
        Eigen::VectorXd r_trial;
        for (int h = 0; h <= options.max_halvings; ++h, factor *= 0.5) {
            trial = params + factor * step;
            fn(trial, r_trial, nullptr);
            const double c = r_trial.squaredNorm();
            if (std::isfinite(c) && c <= cost) {
                accepted = true;
                cost = c;
                break;
            }
        }
        const double rel = (factor * step).cwiseQuotient(
                                   params.cwiseAbs().cwiseMax(scale.cwiseAbs()))
                               .cwiseAbs()
                               .maxCoeff();
        if (!accepted) {
            // no descent left along the Gauss-Newton direction: stationary
            out.converged = true;
            break;
        }
        params = trial;
        fn(params, r, &jac);
        if (rel < options.relative_step_tol) {
            out.converged = true;
            break;
        }
    }
    out.params = params;
    fn(params, r, nullptr);
    out.rms = rms(r);
    return out;
}

}  // namespace qswitch::fitting
