#include "qswitch/bessel.hpp"

#include <cmath>
#include <numbers>

#include "qswitch/errors.hpp"

namespace qswitch::model {
namespace {

// Beyond this radius the ascending series loses digits to cancellation and the
// Hankel expansion is already accurate to ~1e-11.
constexpr double kSeriesRadius = 12.0;

// J_nu(x) for nu in {0, 1} by the ascending series.
double series(int nu, double x) {
    const double q = 0.25 * x * x;
    double term = nu == 0 ? 1.0 : 0.5 * x;
    double sum = term;
    for (int k = 1; k < 60; ++k) {
        term *= -q / (static_cast<double>(k) * static_cast<double>(k + nu));
        sum += term;
        if (std::abs(term) < 1e-18 * std::abs(sum) && k > 4) {
            break;
        }
    }
    return sum;
}

// Hankel asymptotic expansion for large positive x.
double hankel(int nu, double x) {
    const double mu = 4.0 * nu * nu;
    double p = 1.0;
    double q = 0.0;
    double a = 1.0;  // a_k(nu) / x^k with alternating signs folded in below
    double last = 1.0;
    for (int k = 1; k < 80; ++k) {
        const double odd = 2.0 * k - 1.0;
        a *= (mu - odd * odd) / (static_cast<double>(k) * 8.0 * x);
        if (std::abs(a) > last) {
            break;  // asymptotic series started to diverge
        }
        last = std::abs(a);
        // k odd contributes to Q, k even to P, with sign (-1)^{floor(k/2)}
        const double sign = ((k / 2) % 2 == 0) ? 1.0 : -1.0;
        if (k % 2 == 1) {
            q += sign * a;
        } else {
            p += sign * a;
        }
        if (last < 1e-17) {
            break;
        }
    }
    const double chi = x - (0.5 * nu + 0.25) * std::numbers::pi;
    return std::sqrt(2.0 / (std::numbers::pi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

void require_finite(double x) {
    if (!std::isfinite(x)) {
        throw InvalidArgument("bessel: non-finite argument");
    }
}

}  // namespace

double bessel_j0(double x) {
    require_finite(x);
    const double ax = std::abs(x);
    return ax <= kSeriesRadius ? series(0, ax) : hankel(0, ax);
}

double bessel_j1(double x) {
    require_finite(x);
    const double ax = std::abs(x);
    const double v = ax <= kSeriesRadius ? series(1, ax) : hankel(1, ax);
    return x < 0.0 ? -v : v;
}

}  // namespace qswitch::model
