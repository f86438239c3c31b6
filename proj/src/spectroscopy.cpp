#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "qswitch/errors.hpp"
#include "qswitch/parallel.hpp"
#include "qswitch/protocols.hpp"

namespace qswitch::protocols {

namespace {

double lorentzian(double f, double center, double fwhm) {
    const double hw = 0.5 * fwhm;
    const double d = f - center;
    return hw * hw / (d * d + hw * hw);
}

struct Line {
    double frequency;  // Hz
    double weight;
};

void require_linewidth(double linewidth) {
    if (!(linewidth > 0.0) || !std::isfinite(linewidth)) {
        throw InvalidArgument("linewidth must be positive");
    }
}

void normalize_map(Eigen::MatrixXd& map) {
    const double peak = map.maxCoeff();
    if (!(peak > 0.0) || !std::isfinite(peak)) {
        throw NumericalError("spectrum map has no bright transitions in the probe window");
    }
    map /= peak;
}

void require_resonant_optimal_point(const model::DeviceModel& m, const char* what) {
    if (m.qubit.epsilon != 0.0) {
        throw InvalidArgument(std::string(what) + " requires epsilon = 0");
    }
    if (std::abs(m.qubit.gap - m.resonator.frequency) > 1e-9 * m.resonator.frequency) {
        throw InvalidArgument(std::string(what) + " requires Delta = omega_r");
    }
    if (!m.drive) {
        throw InvalidArgument(std::string(what) + " needs the longitudinal drive frequency");
    }
}

}  // namespace

void SweepSpec::validate() const {
    if (n_points < 2) {
        throw InvalidArgument("sweep needs at least 2 points");
    }
    if (!std::isfinite(start) || !std::isfinite(stop) || !(stop > start)) {
        throw InvalidArgument("sweep needs stop > start");
    }
}

std::vector<double> SweepSpec::values() const {
    validate();
    std::vector<double> v(n_points);
    const auto last = static_cast<double>(n_points - 1);
    for (std::size_t i = 0; i < n_points; ++i) {
        v[i] = start + (stop - start) * (static_cast<double>(i) / last);
    }
    v.back() = stop;
    return v;
}

std::pair<double, double> dressed_branches(double qubit_frequency, double resonator_frequency,
                                           double g) {
    const double mean = 0.5 * (qubit_frequency + resonator_frequency);
    const double half = std::hypot(0.5 * (qubit_frequency - resonator_frequency), g);
    return {mean + half, mean - half};
}

SpectrumMap spectrum_scan(const model::DeviceModel& m, const SweepSpec& epsilon_sweep,
                          const SweepSpec& probe_sweep, double linewidth,
                          const ScanOptions& options) {
    m.validate();
    require_linewidth(linewidth);
    if (m.drive && m.drive->amplitude != 0.0) {
        throw InvalidArgument("spectrum scan takes an undriven model");
    }
    SpectrumMap out;
    out.x_axis = epsilon_sweep.values();
    out.y_axis = probe_sweep.values();
    const std::size_t nx = out.x_axis.size();
    const std::size_t ny = out.y_axis.size();
    out.population = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ny),
                                           static_cast<Eigen::Index>(nx));
    std::vector<char> degenerate(nx, 0);
    const ComplexMatrix sx = m.layout().qubit_op(linalg::sigma_x());

    parallel_for(nx, options.workers, [&](std::size_t ix) {
        model::DeviceModel mx = m;
        mx.qubit.epsilon = out.x_axis[ix];
        mx.qubit.flux_bias.reset();
        const ComplexMatrix h = model::static_lab_hamiltonian(mx);
        const Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
        if (es.info() != Eigen::Success) {
            throw NumericalError("eigendecomposition failed in spectrum scan");
        }
        const Eigen::VectorXd& e = es.eigenvalues();
        const ComplexMatrix& v = es.eigenvectors();
        const linalg::Ket bright = sx * v.col(0);
        const double tol = 1e-9 * e.cwiseAbs().maxCoeff();
        // lines from the ground state; weights inside a degenerate cluster are
        // summed, which makes them independent of the eigenbasis choice
        std::vector<Line> lines;
        for (Eigen::Index k = 1; k < e.size(); ++k) {
            const double w = std::norm(v.col(k).dot(bright));
            const double f = (e(k) - e(0)) / model::kTwoPi;
            if (!lines.empty() && model::kTwoPi * (f - lines.back().frequency) < tol) {
                if (w > 1e-12 && lines.back().weight > 1e-12) {
                    degenerate[ix] = 1;
                }
                lines.back().weight += w;
                continue;
            }
            lines.push_back({f, w});
        }
        for (std::size_t iy = 0; iy < ny; ++iy) {
            double p = 0.0;
            for (const Line& l : lines) {
                p += l.weight * lorentzian(out.y_axis[iy], l.frequency, linewidth);
            }
            out.population(static_cast<Eigen::Index>(iy), static_cast<Eigen::Index>(ix)) = p;
        }
    });
    normalize_map(out.population);
    for (std::size_t ix = 0; ix < nx; ++ix) {
        if (degenerate[ix]) {
            out.degenerate_columns.push_back(ix);
        }
    }

    Curve upper{"upper_branch_hz", {}};
    Curve lower{"lower_branch_hz", {}};
    for (double eps : out.x_axis) {
        const auto [hi, lo] = dressed_branches(model::qubit_frequency(m.qubit.gap, eps),
                                               m.resonator.frequency, m.coupling.g);
        upper.values.push_back(model::hertz(hi));
        lower.values.push_back(model::hertz(lo));
    }
    out.overlays = {std::move(upper), std::move(lower)};
    return out;
}

SpectrumMap driven_spectrum_scan(const model::DeviceModel& m, const SweepSpec& lambda_sweep,
                                 const SweepSpec& probe_sweep, double linewidth,
                                 const ScanOptions& options) {
    m.validate();
    require_linewidth(linewidth);
    require_resonant_optimal_point(m, "driven spectrum scan");
    SpectrumMap out;
    out.x_axis = lambda_sweep.values();
    out.y_axis = probe_sweep.values();
    if (out.x_axis.front() < 0.0) {
        throw InvalidArgument("drive amplitudes must be >= 0");
    }
    const std::size_t nx = out.x_axis.size();
    const std::size_t ny = out.y_axis.size();
    out.population = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ny),
                                           static_cast<Eigen::Index>(nx));
    std::vector<dynamics::QuasienergyGap> gaps(nx);
    parallel_for(nx, options.workers, [&](std::size_t ix) {
        gaps[ix] = dynamics::quasienergy_gap(m.with_drive_amplitude(out.x_axis[ix]));
    });
    const double fr = model::hertz(m.resonator.frequency);
    Curve gap_curve{"floquet_gap_hz", {}};
    Curve signed_curve{"signed_gap_hz", {}};
    Curve bessel_curve{"bessel_gap_hz", {}};
    for (std::size_t ix = 0; ix < nx; ++ix) {
        const double half = 0.5 * model::hertz(gaps[ix].gap);
        for (std::size_t iy = 0; iy < ny; ++iy) {
            const double f = out.y_axis[iy];
            out.population(static_cast<Eigen::Index>(iy), static_cast<Eigen::Index>(ix)) =
                0.5 * (lorentzian(f, fr + half, linewidth) + lorentzian(f, fr - half, linewidth));
        }
        gap_curve.values.push_back(model::hertz(gaps[ix].gap));
        signed_curve.values.push_back(model::hertz(gaps[ix].signed_gap));
        bessel_curve.values.push_back(model::hertz(
            2.0 * std::abs(model::effective_coupling(m.coupling.g, out.x_axis[ix],
                                                     m.drive->frequency))));
    }
    normalize_map(out.population);
    out.overlays = {std::move(gap_curve), std::move(signed_curve), std::move(bessel_curve)};
    return out;
}

}  // namespace qswitch::protocols
