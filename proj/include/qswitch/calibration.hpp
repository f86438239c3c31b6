#pragma once

// Bias-line calibration: cubic gap-to-voltage maps, their inversion, drive
// waveform synthesis through the map, and anticrossing fits of spectroscopy
// peaks.  Map arguments are in GHz (gap / 2pi * 1e-9), map values in volts.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace qswitch::calibration {

/// V(x) = c3 x^3 + c2 x^2 + c1 x + c0 on a closed GHz domain.
class CubicMap {
public:
    /// coefficients ordered (c3, c2, c1, c0)
    CubicMap(std::array<double, 4> coefficients, double domain_lo = 2.0, double domain_hi = 5.0);

    /// 0.2287 x^3 - 2.758 x^2 + 11.14 x - 15.27 on [2, 5] GHz.
    static CubicMap reference();

    const std::array<double, 4>& coefficients() const noexcept { return coefficients_; }
    double domain_lo() const noexcept { return lo_; }
    double domain_hi() const noexcept { return hi_; }
    /// +1 increasing, -1 decreasing, 0 not monotone over the domain.
    int monotonic_direction() const noexcept { return direction_; }
    bool monotone() const noexcept { return direction_ != 0; }

    /// Horner evaluation without the domain check.
    double evaluate_raw(double x) const;

    bool operator==(const CubicMap&) const = default;

private:
    std::array<double, 4> coefficients_;
    double lo_;
    double hi_;
    int direction_;
};

struct CubicFit {
    CubicMap map;
    Eigen::VectorXd residuals;  // y - V(x) per point
};

/// Least squares through a column-pivoted Householder QR of the Vandermonde
/// matrix.  Throws InvalidArgument on fewer than 4 distinct abscissae.
CubicFit fit_cubic(const std::vector<std::pair<double, double>>& points, double domain_lo = 2.0,
                   double domain_hi = 5.0);

/// Map value in volts; DomainError outside the map domain.
double valpha(double gap_ghz, const CubicMap& map);

/// Inverse of valpha by bisection to 1e-12 GHz.  DomainError when the map is
/// not monotone or V lies outside its range.
double invert_valpha(double volts, const CubicMap& map);

struct TuningPoint {
    double volts = 0.0;
    double gap_ghz = 0.0;
};

struct TuningCurve {
    std::vector<TuningPoint> points;
    double marker_ghz = 2.417;
    /// V at which the gap equals marker_ghz, when the map reaches it.
    std::optional<double> marker_volts;
};

TuningCurve gap_tuning_curve(const CubicMap& map, const std::vector<double>& volts,
                             double marker_ghz = 2.417);

struct SampledWaveform {
    double sample_rate = 0.0;  // samples / s
    std::vector<double> samples;  // volts
    double duration = 0.0;  // s

    double time(std::size_t k) const { return static_cast<double>(k) / sample_rate; }
};

/// V[k] = gain * valpha(1e-9 (w_r + 2 lambda_z cos(w_z k / fs)) / 2pi).  All
/// frequency arguments angular.  DomainError if the argument leaves the map
/// domain.
SampledWaveform synthesize_waveform(double lambda_z, double drive_frequency,
                                    double resonator_frequency, const CubicMap& map,
                                    double sample_rate, double duration, double gain = 1.0);

void write_waveform_csv(const std::filesystem::path& path, const SampledWaveform& waveform);
/// "QSWF", int32 version 1, float64 sample rate, then float64 samples; all
/// little-endian.
void write_waveform_binary(const std::filesystem::path& path, const SampledWaveform& waveform);
std::vector<std::uint8_t> encode_waveform_binary(const SampledWaveform& waveform);
SampledWaveform decode_waveform_binary(const std::vector<std::uint8_t>& bytes);
SampledWaveform read_waveform_binary(const std::filesystem::path& path);

struct PeakSet {
    double epsilon = 0.0;            // rad/s
    std::vector<double> peaks_hz;    // sorted, positive
};
using SpectrumPeaks = std::vector<PeakSet>;

void validate_peaks(const SpectrumPeaks& peaks);

/// Both dressed branches for (g, delta, w_r) over the given epsilons, with
/// optional Gaussian noise (Hz) from a seeded generator.
SpectrumPeaks synthetic_peaks(double g, double delta, double resonator_frequency,
                              const std::vector<double>& epsilons, double noise_hz = 0.0,
                              std::uint64_t seed = 0);

struct AnticrossingFit {
    double g = 0.0;      // |g|, rad/s
    double delta = 0.0;  // rad/s
    double resonator_frequency = 0.0;  // rad/s
    double residual_hz = 0.0;  // rms
    /// smallest |g| the data can distinguish from a crossing, rad/s
    double resolution_floor = 0.0;
    bool below_resolution = false;
    int iterations = 0;
    std::size_t upper_count = 0;
    std::size_t lower_count = 0;
};

/// Grid seeding over g/2pi in 1..30 MHz and delta offsets within +-50 MHz of
/// the resonator seed, then Gauss-Newton with nearest-branch reassignment.
/// Without `resonator_seed` (rad/s) the seed is the mean peak at the smallest
/// |epsilon|.  Throws ConvergenceError (with the best residual) on hitting
/// the iteration cap.
AnticrossingFit fit_anticrossing(const SpectrumPeaks& peaks,
                                 std::optional<double> resonator_seed = std::nullopt);

}  // namespace qswitch::calibration
