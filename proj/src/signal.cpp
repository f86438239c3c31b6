#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "qswitch/errors.hpp"
#include "qswitch/fitting.hpp"
#include "qswitch/protocols.hpp"

namespace qswitch::protocols {

namespace {

constexpr double kPi = std::numbers::pi;

double uniform_spacing(const std::vector<double>& times) {
    const double dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    if (!(dt > 0.0)) {
        throw InvalidArgument("sample times must increase");
    }
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (std::abs((times[i] - times[i - 1]) - dt) > 1e-6 * dt) {
            throw InvalidArgument("sample times must be evenly spaced");
        }
    }
    return dt;
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) {
        p <<= 1;
    }
    return p;
}

double median(std::vector<double> v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
    }
    return m;
}

double wrap_phase(double phi) {
    phi = std::remainder(phi, 2.0 * kPi);
    return phi <= -kPi ? phi + 2.0 * kPi : phi;
}

}  // namespace

FrequencyEstimate extract_frequency(const std::vector<double>& values,
                                    const std::vector<double>& times,
                                    const ExtractOptions& options) {
    if (values.size() != times.size()) {
        throw DimensionError("values and times differ in length");
    }
    if (values.size() < 16) {
        throw InvalidArgument("frequency extraction needs at least 16 samples");
    }
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw InvalidArgument("trace contains non-finite values");
        }
    }
    const std::size_t n = values.size();
    const double dt = uniform_spacing(times);
    const double window = dt * static_cast<double>(n - 1);

    // Detrend with a quadratic plus one decaying exponential; the decay time
    // comes from a log-spaced scan refined by golden section.
    Eigen::VectorXd y(n);
    Eigen::VectorXd u(n);
    for (std::size_t i = 0; i < n; ++i) {
        y(static_cast<Eigen::Index>(i)) = values[i];
        u(static_cast<Eigen::Index>(i)) =
            2.0 * static_cast<double>(i) / static_cast<double>(n - 1) - 1.0;
    }
    auto detrended = [&](double log_tau) {
        const double tau = std::exp(log_tau);
        Eigen::MatrixXd basis(n, 4);
        basis.col(0).setOnes();
        basis.col(1) = u;
        basis.col(2) = u.cwiseProduct(u);
        basis.col(3) = (-(u.array() + 1.0) / tau).exp().matrix();
        return Eigen::VectorXd(y - basis * basis.colPivHouseholderQr().solve(y));
    };
    // decay times from 1/50 to 50 windows, in units of the half window
    const double lo = std::log(2.0 / 50.0);
    const double hi = std::log(2.0 * 50.0);
    const int grid_points = 40;
    const double step = (hi - lo) / grid_points;
    int best_j = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j <= grid_points; ++j) {
        const double cost = detrended(lo + step * j).squaredNorm();
        if (cost < best) {
            best = cost;
            best_j = j;
        }
    }
    // golden-section refinement between the neighbouring grid points
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double ta = lo + step * std::max(best_j - 1, 0);
    double tb = lo + step * std::min(best_j + 1, grid_points);
    double tc = tb - inv_phi * (tb - ta);
    double td = ta + inv_phi * (tb - ta);
    double ftc = detrended(tc).squaredNorm();
    double ftd = detrended(td).squaredNorm();
    for (int it = 0; it < 60; ++it) {
        if (ftc < ftd) {
            tb = td;
            td = tc;
            ftd = ftc;
            tc = tb - inv_phi * (tb - ta);
            ftc = detrended(tc).squaredNorm();
        } else {
            ta = tc;
            tc = td;
            ftc = ftd;
            td = ta + inv_phi * (tb - ta);
            ftd = detrended(td).squaredNorm();
        }
    }
    const double refined = 0.5 * (ta + tb);
    Eigen::VectorXd x = detrended(refined);
    if (x.squaredNorm() > best) {
        x = detrended(lo + step * best_j);
    }

    FrequencyEstimate out;
    const double scale = 1.0 + y.cwiseAbs().maxCoeff();
    if (x.cwiseAbs().maxCoeff() <= 1e-12 * scale) {
        out.reason = "no oscillation: trace is flat after detrending";
        return out;
    }

    const std::size_t m = next_pow2(8 * n);
    std::vector<double> padded(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double w =
            0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n - 1)));
        padded[i] = w * x(static_cast<Eigen::Index>(i));
    }
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spectrum;
    fft.fwd(spectrum, padded);

    const double df = 1.0 / (static_cast<double>(m) * dt);
    std::size_t k_max = m / 2;
    if (options.max_frequency > 0.0) {
        k_max = std::min(k_max, static_cast<std::size_t>(std::floor(options.max_frequency / df)));
    }
    if (k_max < 3) {
        out.reason = "frequency band too narrow for the sampling window";
        return out;
    }
    std::vector<double> mag(k_max + 1);
    for (std::size_t k = 0; k <= k_max; ++k) {
        mag[k] = std::abs(spectrum[k]);
    }
    std::size_t peak = 1;
    for (std::size_t k = 2; k <= k_max; ++k) {
        if (mag[k] > mag[peak]) {
            peak = k;
        }
    }
    out.snr = mag[peak] / std::max(median(std::vector<double>(mag.begin() + 1, mag.end())),
                                   std::numeric_limits<double>::min());
    if (peak >= k_max) {
        out.reason = "spectral peak sits on the band edge";
        return out;
    }
    if (!(mag[peak] > mag[peak - 1] && mag[peak] >= mag[peak + 1])) {
        out.reason = "spectral maximum is not an interior peak";
        return out;
    }
    // parabola through the log magnitudes (exact for a Gaussian-shaped peak)
    const double a = std::log(mag[peak - 1]);
    const double b = std::log(mag[peak]);
    const double c = std::log(mag[peak + 1]);
    const double denom = a - 2.0 * b + c;
    const double shift = denom != 0.0 ? 0.5 * (a - c) / denom : 0.0;
    const double f = (static_cast<double>(peak) + shift) * df;
    // a Hann-windowed sinusoid of amplitude A peaks at A (n - 1) / 4
    out.amplitude = 4.0 * mag[peak] / static_cast<double>(n - 1);
    if (f * window < options.min_cycles) {
        out.reason = "too few oscillation cycles in the window (below resolution)";
        return out;
    }
    if (out.amplitude < options.min_amplitude) {
        out.reason = "oscillation amplitude below threshold";
        return out;
    }
    if (out.snr < options.min_snr) {
        out.reason = "spectral peak SNR below threshold";
        return out;
    }
    out.frequency = f;
    return out;
}

double DampedCosine::operator()(double t) const {
    const double s = t - t0;
    return std::exp(-decay * s) * (amplitude * std::cos(angular_frequency * s + phase) + offset);
}

double DampedCosine::frequency() const { return angular_frequency / (2.0 * kPi); }

DampedCosine fit_damped_cosine(const std::vector<double>& values, const std::vector<double>& times,
                               std::optional<double> seed_frequency) {
    if (values.size() != times.size()) {
        throw DimensionError("values and times differ in length");
    }
    if (values.size() < 16) {
        throw InvalidArgument("damped-cosine fit needs at least 16 samples");
    }
    if (!seed_frequency) {
        const FrequencyEstimate est = extract_frequency(values, times);
        if (!est.frequency) {
            throw ConvergenceError("damped-cosine fit has no frequency seed: " + est.reason,
                                   std::numeric_limits<double>::quiet_NaN());
        }
        seed_frequency = est.frequency;
    }
    const std::size_t n = values.size();
    const double t0 = times.front();
    const double window = times.back() - t0;
    Eigen::VectorXd s(n);
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) {
        s(static_cast<Eigen::Index>(i)) = times[i] - t0;
        y(static_cast<Eigen::Index>(i)) = values[i];
    }
    const double w0 = 2.0 * kPi * *seed_frequency;

    // seed amplitude, phase and offset by linear least squares over a decay grid
    Eigen::VectorXd best(5);
    double best_cost = std::numeric_limits<double>::infinity();
    for (double kw : {0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0}) {
        const double kappa = kw / window;
        Eigen::MatrixXd basis(n, 3);
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
            const double e = std::exp(-kappa * s(i));
            basis(i, 0) = e * std::cos(w0 * s(i));
            basis(i, 1) = e * std::sin(w0 * s(i));
            basis(i, 2) = e;
        }
        const Eigen::VectorXd coef = basis.colPivHouseholderQr().solve(y);
        const double cost = (basis * coef - y).squaredNorm();
        if (cost < best_cost) {
            best_cost = cost;
            best << std::hypot(coef(0), coef(1)), w0, kappa, std::atan2(-coef(1), coef(0)),
                coef(2);
        }
    }

    const fitting::ResidualFn fn = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r,
                                       Eigen::MatrixXd* jac) {
        r.resize(static_cast<Eigen::Index>(n));
        if (jac) {
            jac->resize(static_cast<Eigen::Index>(n), 5);
        }
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
            const double e = std::exp(-p(2) * s(i));
            const double arg = p(1) * s(i) + p(3);
            const double c = std::cos(arg);
            const double sn = std::sin(arg);
            const double model = e * (p(0) * c + p(4));
            r(i) = model - y(i);
            if (jac) {
                (*jac)(i, 0) = e * c;
                (*jac)(i, 1) = -e * p(0) * sn * s(i);
                (*jac)(i, 2) = -s(i) * model;
                (*jac)(i, 3) = -e * p(0) * sn;
                (*jac)(i, 4) = e;
            }
        }
    };
    Eigen::VectorXd scale(5);
    scale << std::max(std::abs(best(0)), 1e-12), w0, 1.0 / window, 1.0,
        std::max(std::abs(best(4)), 1e-12);
    const fitting::GaussNewtonResult res = fitting::gauss_newton(fn, best, scale);
    if (!res.converged) {
        throw ConvergenceError("damped-cosine fit did not converge", res.rms);
    }
    DampedCosine out;
    out.amplitude = res.params(0);
    out.angular_frequency = res.params(1);
    out.decay = res.params(2);
    out.phase = res.params(3);
    out.offset = res.params(4);
    if (out.amplitude < 0.0) {
        out.amplitude = -out.amplitude;
        out.phase += kPi;
    }
    if (out.angular_frequency < 0.0) {
        out.angular_frequency = -out.angular_frequency;
        out.phase = -out.phase;
    }
    out.phase = wrap_phase(out.phase);
    out.t0 = t0;
    out.rms = res.rms;
    out.converged = true;
    return out;
}

}  // namespace qswitch::protocols
