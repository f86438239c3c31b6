#include "qswitch/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <set>

#include "qswitch/errors.hpp"
#include "qswitch/fitting.hpp"
#include "qswitch/format.hpp"

namespace qswitch::calibration {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

int derivative_sign(const std::array<double, 4>& c, double x) {
    const double d = (3.0 * c[0] * x + 2.0 * c[1]) * x + c[2];
    return (d > 0.0) - (d < 0.0);
}

// +1 / -1 when V' keeps one sign on (lo, hi) (isolated zeros allowed), else 0.
int derivative_direction(const std::array<double, 4>& c, double lo, double hi) {
    std::vector<double> probes{lo, hi};
    const double a = 3.0 * c[0];
    const double b = 2.0 * c[1];
    const double k = c[2];
    if (a != 0.0) {
        const double disc = b * b - 4.0 * a * k;
        if (disc > 0.0) {
            const double sq = std::sqrt(disc);
            for (double r : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
                if (r > lo && r < hi) {
                    probes.push_back(r);
                }
            }
        } else if (disc == 0.0) {
            probes.push_back(-b / (2.0 * a));
        }
    } else if (b != 0.0 && -k / b > lo && -k / b < hi) {
        probes.push_back(-k / b);
    }
    std::sort(probes.begin(), probes.end());
    // sign at the midpoints between consecutive critical points
    int dir = 0;
    for (std::size_t i = 0; i + 1 < probes.size(); ++i) {
        if (!(probes[i + 1] > probes[i])) {
            continue;
        }
        const int s = derivative_sign(c, 0.5 * (probes[i] + probes[i + 1]));
        if (s == 0 || (dir != 0 && s != dir)) {
            return 0;
        }
        dir = s;
    }
    return dir;
}

double gap_ghz(double angular_frequency) { return 1e-9 * angular_frequency / kTwoPi; }

}  // namespace

CubicMap::CubicMap(std::array<double, 4> coefficients, double domain_lo, double domain_hi)
    : coefficients_(coefficients), lo_(domain_lo), hi_(domain_hi) {
    for (double c : coefficients_) {
        if (!std::isfinite(c)) {
            throw InvalidArgument("cubic coefficients must be finite");
        }
    }
    if (!std::isfinite(lo_) || !std::isfinite(hi_) || !(hi_ > lo_)) {
        throw InvalidArgument("cubic map domain needs finite lo < hi");
    }
    direction_ = derivative_direction(coefficients_, lo_, hi_);
}

CubicMap CubicMap::reference() { return CubicMap({0.2287, -2.758, 11.14, -15.27}, 2.0, 5.0); }

double CubicMap::evaluate_raw(double x) const {
    const auto& c = coefficients_;
    return ((c[0] * x + c[1]) * x + c[2]) * x + c[3];
}

CubicFit fit_cubic(const std::vector<std::pair<double, double>>& points, double domain_lo,
                   double domain_hi) {
    if (points.size() < 4) {
        throw InvalidArgument("cubic fit needs at least 4 points");
    }
    std::set<double> distinct;
    for (const auto& [x, y] : points) {
        if (!std::isfinite(x) || !std::isfinite(y)) {
            throw InvalidArgument("cubic fit points must be finite");
        }
        distinct.insert(x);
    }
    if (distinct.size() < 4) {
        throw InvalidArgument("cubic fit is rank deficient: fewer than 4 distinct x values");
    }
    const auto n = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd a(n, 4);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = points[static_cast<std::size_t>(i)].first;
        a(i, 0) = x * x * x;
        a(i, 1) = x * x;
        a(i, 2) = x;
        a(i, 3) = 1.0;
        y(i) = points[static_cast<std::size_t>(i)].second;
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < 4) {
        throw InvalidArgument("cubic fit is rank deficient");
    }
    const Eigen::VectorXd c = qr.solve(y);
    CubicFit out{CubicMap({c(0), c(1), c(2), c(3)}, domain_lo, domain_hi), y - a * c};
    return out;
}

double valpha(double gap, const CubicMap& map) {
    if (!(gap >= map.domain_lo() && gap <= map.domain_hi())) {
        throw DomainError("gap " + format_double(gap) + " GHz outside the map domain [" +
                          format_double(map.domain_lo()) + ", " + format_double(map.domain_hi()) +
                          "]");
    }
    return map.evaluate_raw(gap);
}

double invert_valpha(double volts, const CubicMap& map) {
    if (!map.monotone()) {
        throw DomainError("cubic map is not monotone over its domain; inversion is ambiguous");
    }
    double lo = map.domain_lo();
    double hi = map.domain_hi();
    const double v_lo = map.evaluate_raw(lo);
    const double v_hi = map.evaluate_raw(hi);
    if (!(volts >= std::min(v_lo, v_hi) && volts <= std::max(v_lo, v_hi))) {
        throw DomainError("voltage " + format_double(volts) + " V outside the map range [" +
                          format_double(std::min(v_lo, v_hi)) + ", " +
                          format_double(std::max(v_lo, v_hi)) + "]");
    }
    const int dir = map.monotonic_direction();
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((map.evaluate_raw(mid) - volts) * dir < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

TuningCurve gap_tuning_curve(const CubicMap& map, const std::vector<double>& volts,
                             double marker_ghz) {
    TuningCurve out;
    out.marker_ghz = marker_ghz;
    out.points.reserve(volts.size());
    for (double v : volts) {
        out.points.push_back({v, invert_valpha(v, map)});
    }
    if (marker_ghz >= map.domain_lo() && marker_ghz <= map.domain_hi()) {
        out.marker_volts = map.evaluate_raw(marker_ghz);
    }
    return out;
}

SampledWaveform synthesize_waveform(double lambda_z, double drive_frequency,
                                    double resonator_frequency, const CubicMap& map,
                                    double sample_rate, double duration, double gain) {
    if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) {
        throw InvalidArgument("sample rate must be positive");
    }
    if (!(duration > 0.0) || !std::isfinite(duration)) {
        throw InvalidArgument("waveform duration must be positive");
    }
    if (!std::isfinite(lambda_z) || !std::isfinite(drive_frequency) ||
        !(resonator_frequency > 0.0) || !std::isfinite(gain)) {
        throw InvalidArgument("waveform parameters must be finite with w_r > 0");
    }
    const double extreme_hi = gap_ghz(resonator_frequency + 2.0 * std::abs(lambda_z));
    const double extreme_lo = gap_ghz(resonator_frequency - 2.0 * std::abs(lambda_z));
    if (extreme_lo < map.domain_lo() || extreme_hi > map.domain_hi()) {
        throw DomainError("drive excursion [" + format_double(extreme_lo) + ", " +
                          format_double(extreme_hi) + "] GHz leaves the calibrated range [" +
                          format_double(map.domain_lo()) + ", " + format_double(map.domain_hi()) +
                          "]");
    }
    const double count = std::round(duration * sample_rate);
    if (count < 1.0 || count > 1e9) {
        throw InvalidArgument("waveform must hold between 1 and 1e9 samples");
    }
    SampledWaveform out;
    out.sample_rate = sample_rate;
    out.duration = duration;
    out.samples.resize(static_cast<std::size_t>(count));
    for (std::size_t k = 0; k < out.samples.size(); ++k) {
        const double t = static_cast<double>(k) / sample_rate;
        const double x =
            gap_ghz(resonator_frequency + 2.0 * lambda_z * std::cos(drive_frequency * t));
        out.samples[k] = gain * valpha(std::clamp(x, map.domain_lo(), map.domain_hi()), map);
    }
    return out;
}

void write_waveform_csv(const std::filesystem::path& path, const SampledWaveform& waveform) {
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    f << "time_s,volts\n";
    for (std::size_t k = 0; k < waveform.samples.size(); ++k) {
        f << format_double(waveform.time(k)) << ',' << format_double(waveform.samples[k]) << '\n';
    }
    if (!f) {
        throw IoError("write failed for " + path.string());
    }
}

namespace {

void put_le(std::vector<std::uint8_t>& out, std::uint64_t bits, int bytes) {
    for (int i = 0; i < bytes; ++i) {
        out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    }
}

std::uint64_t get_le(const std::vector<std::uint8_t>& in, std::size_t offset, int bytes) {
    std::uint64_t bits = 0;
    for (int i = 0; i < bytes; ++i) {
        bits |= static_cast<std::uint64_t>(in[offset + static_cast<std::size_t>(i)]) << (8 * i);
    }
    return bits;
}

std::uint64_t double_bits(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    return bits;
}

double bits_double(std::uint64_t bits) {
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
}

constexpr std::uint32_t kWaveformVersion = 1;
constexpr std::size_t kHeaderBytes = 16;

}  // namespace

std::vector<std::uint8_t> encode_waveform_binary(const SampledWaveform& waveform) {
    std::vector<std::uint8_t> out{'Q', 'S', 'W', 'F'};
    out.reserve(kHeaderBytes + 8 * waveform.samples.size());
    put_le(out, kWaveformVersion, 4);
    put_le(out, double_bits(waveform.sample_rate), 8);
    for (double v : waveform.samples) {
        put_le(out, double_bits(v), 8);
    }
    return out;
}

SampledWaveform decode_waveform_binary(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), "QSWF", 4) != 0) {
        throw IoError("not a QSWF waveform");
    }
    const auto version = static_cast<std::uint32_t>(get_le(bytes, 4, 4));
    if (version != kWaveformVersion) {
        throw IoError("unsupported QSWF version " + std::to_string(version));
    }
    if ((bytes.size() - kHeaderBytes) % 8 != 0) {
        throw IoError("QSWF sample block is not a whole number of float64 values");
    }
    SampledWaveform out;
    out.sample_rate = bits_double(get_le(bytes, 8, 8));
    if (!(out.sample_rate > 0.0) || !std::isfinite(out.sample_rate)) {
        throw IoError("QSWF sample rate must be positive");
    }
    const std::size_t n = (bytes.size() - kHeaderBytes) / 8;
    out.samples.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        out.samples[k] = bits_double(get_le(bytes, kHeaderBytes + 8 * k, 8));
    }
    out.duration = static_cast<double>(n) / out.sample_rate;
    return out;
}

void write_waveform_binary(const std::filesystem::path& path, const SampledWaveform& waveform) {
    const std::vector<std::uint8_t> bytes = encode_waveform_binary(waveform);
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) {
        throw IoError("write failed for " + path.string());
    }
}

SampledWaveform read_waveform_binary(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw IoError("cannot open " + path.string());
    }
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                          std::istreambuf_iterator<char>());
    return decode_waveform_binary(bytes);
}

void validate_peaks(const SpectrumPeaks& peaks) {
    for (const PeakSet& s : peaks) {
        if (!std::isfinite(s.epsilon)) {
            throw InvalidArgument("peak epsilon must be finite");
        }
        for (std::size_t i = 0; i < s.peaks_hz.size(); ++i) {
            if (!(s.peaks_hz[i] > 0.0) || !std::isfinite(s.peaks_hz[i])) {
                throw InvalidArgument("peak frequencies must be positive");
            }
            if (i > 0 && s.peaks_hz[i] < s.peaks_hz[i - 1]) {
                throw InvalidArgument("peak frequencies must be sorted");
            }
        }
    }
}

SpectrumPeaks synthetic_peaks(double g, double delta, double resonator_frequency,
                              const std::vector<double>& epsilons, double noise_hz,
                              std::uint64_t seed) {
    if (!(noise_hz >= 0.0)) {
        throw InvalidArgument("noise must be >= 0");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    SpectrumPeaks out;
    for (double eps : epsilons) {
        const double wq = std::hypot(delta, eps);
        const double mean = 0.5 * (wq + resonator_frequency);
        const double half = std::hypot(0.5 * (wq - resonator_frequency), g);
        PeakSet s{eps, {(mean - half) / kTwoPi, (mean + half) / kTwoPi}};
        if (noise_hz > 0.0) {
            for (double& p : s.peaks_hz) {
                p += noise_hz * normal(rng);
            }
        }
        std::sort(s.peaks_hz.begin(), s.peaks_hz.end());
        out.push_back(std::move(s));
    }
    validate_peaks(out);
    return out;
}

namespace {

struct Observation {
    double e;  // epsilon / 2pi, Hz
    double y;  // peak, Hz
};

// Branches in Hz for p = (G, D, R); returns E+, E- and fills partials when asked.
struct BranchEval {
    double upper, lower;
    double d_upper[3], d_lower[3];
};

BranchEval branches(const Eigen::Vector3d& p, double e) {
    const double q = std::hypot(p(1), e);
    const double half = 0.5 * (q - p(2));
    const double s = std::max(std::hypot(half, p(0)), std::numeric_limits<double>::min());
    BranchEval b;
    b.upper = 0.5 * (q + p(2)) + s;
    b.lower = 0.5 * (q + p(2)) - s;
    const double dq_dd = q > 0.0 ? p(1) / q : 0.0;
    const double ds_dq = 0.5 * half / s;
    const double ds_dg = p(0) / s;
    for (int sign : {+1, -1}) {
        double* d = sign > 0 ? b.d_upper : b.d_lower;
        d[0] = sign * ds_dg;
        d[1] = (0.5 + sign * ds_dq) * dq_dd;
        d[2] = 0.5 - sign * ds_dq;
    }
    return b;
}

double assigned_cost(const Eigen::Vector3d& p, const std::vector<Observation>& obs) {
    double cost = 0.0;
    for (const Observation& o : obs) {
        const BranchEval b = branches(p, o.e);
        const double r = std::min(std::abs(b.upper - o.y), std::abs(b.lower - o.y));
        cost += r * r;
    }
    return cost;
}

}  // namespace

AnticrossingFit fit_anticrossing(const SpectrumPeaks& peaks, std::optional<double> resonator_seed) {
    validate_peaks(peaks);
    std::vector<Observation> obs;
    for (const PeakSet& s : peaks) {
        for (double y : s.peaks_hz) {
            obs.push_back({s.epsilon / kTwoPi, y});
        }
    }
    if (obs.size() < 6) {
        throw InvalidArgument("anticrossing fit needs at least 6 (epsilon, peak) observations");
    }
    double r0 = 0.0;
    if (resonator_seed) {
        if (!(*resonator_seed > 0.0) || !std::isfinite(*resonator_seed)) {
            throw InvalidArgument("resonator seed must be positive");
        }
        r0 = *resonator_seed / kTwoPi;
    } else {
        const PeakSet* nearest = nullptr;
        for (const PeakSet& s : peaks) {
            if (!s.peaks_hz.empty() &&
                (!nearest || std::abs(s.epsilon) < std::abs(nearest->epsilon))) {
                nearest = &s;
            }
        }
        for (double y : nearest->peaks_hz) {
            r0 += y;
        }
        r0 /= static_cast<double>(nearest->peaks_hz.size());
    }

    // coarse grid: g in 1..30 MHz, delta within +-50 MHz of the resonator seed
    Eigen::Vector3d seed(1e6, r0, r0);
    double best = std::numeric_limits<double>::infinity();
    for (int gi = 1; gi <= 30; ++gi) {
        for (int di = -10; di <= 10; ++di) {
            const Eigen::Vector3d p(gi * 1e6, r0 + di * 5e6, r0);
            const double c = assigned_cost(p, obs);
            if (c < best) {
                best = c;
                seed = p;
            }
        }
    }

    const auto m = static_cast<Eigen::Index>(obs.size());
    const fitting::ResidualFn fn = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r,
                                       Eigen::MatrixXd* jac) {
        r.resize(m);
        if (jac) {
            jac->resize(m, 3);
        }
        for (Eigen::Index i = 0; i < m; ++i) {
            const Observation& o = obs[static_cast<std::size_t>(i)];
            const BranchEval b = branches(p, o.e);
            const bool up = std::abs(b.upper - o.y) <= std::abs(b.lower - o.y);
            r(i) = (up ? b.upper : b.lower) - o.y;
            if (jac) {
                const double* d = up ? b.d_upper : b.d_lower;
                for (int k = 0; k < 3; ++k) {
                    (*jac)(i, k) = d[k];
                }
            }
        }
    };
    const Eigen::VectorXd scale = Eigen::Vector3d(1e3, r0, r0);
    const fitting::GaussNewtonResult res = fitting::gauss_newton(fn, seed, scale);
    if (!res.converged) {
        throw ConvergenceError("anticrossing fit did not converge within the iteration cap",
                               res.rms);
    }

    AnticrossingFit out;
    const Eigen::Vector3d p = res.params;
    double detuning_min = std::numeric_limits<double>::infinity();
    for (const Observation& o : obs) {
        const BranchEval b = branches(p, o.e);
        if (std::abs(b.upper - o.y) <= std::abs(b.lower - o.y)) {
            ++out.upper_count;
        } else {
            ++out.lower_count;
        }
        detuning_min = std::min(detuning_min, std::abs(std::hypot(p(1), o.e) - p(2)));
    }
    if (out.upper_count < 2 || out.lower_count < 2) {
        throw InvalidArgument("insufficient branch coverage: need at least 2 peaks on each branch");
    }
    out.g = kTwoPi * std::abs(p(0));
    out.delta = kTwoPi * std::abs(p(1));
    out.resonator_frequency = kTwoPi * p(2);
    out.residual_hz = res.rms;
    out.iterations = res.iterations;
    // a gap g shifts the branches by about g^2 / detuning at the closest
    // approach, or by g when the data reach the crossing itself
    const double sigma = std::max(res.rms, 1e-9 * std::abs(p(2)));
    out.resolution_floor = kTwoPi * std::sqrt(sigma * (detuning_min + sigma));
    out.below_resolution = out.g < out.resolution_floor;
    return out;
}

}  // namespace qswitch::calibration
