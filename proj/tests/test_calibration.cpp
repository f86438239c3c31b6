#include <algorithm>
#include <cmath>
#include <cstring>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "qswitch/calibration.hpp"
#include "qswitch/errors.hpp"
#include "qswitch/model.hpp"

using namespace qswitch;
using namespace qswitch::calibration;
using model::angular;

namespace {

// plain power sum, deliberately not Horner
double reference_sum(double x) {
    return 0.2287 * x * x * x - 2.758 * x * x + 11.14 * x - 15.27;
}

double horner(double x) {
    return ((0.2287 * x - 2.758) * x + 11.14) * x - 15.27;
}

std::vector<double> epsilons(double span_hz, std::size_t n) {
    std::vector<double> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(angular(-span_hz + 2.0 * span_hz * static_cast<double>(i) / (n - 1.0)));
    }
    return out;
}

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("qswitch_test_" + name);
}

}  // namespace

TEST(CubicFit, ExactCubicGivesUnitLeadingCoefficient) {
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i <= 30; ++i) {
        const double x = 2.0 + 0.1 * i;
        pts.push_back({x, x * x * x});
    }
    const CubicFit fit = fit_cubic(pts);
    const auto& c = fit.map.coefficients();
    EXPECT_NEAR(c[0], 1.0, 1e-9);
    EXPECT_NEAR(c[1], 0.0, 1e-9);
    EXPECT_NEAR(c[2], 0.0, 1e-9);
    EXPECT_NEAR(c[3], 0.0, 1e-9);
    EXPECT_LE(fit.residuals.cwiseAbs().maxCoeff(), 1e-9 * 125.0);
}

TEST(CubicFit, FourPointsInterpolate) {
    const std::vector<std::pair<double, double>> pts{{2.0, 1.0}, {2.5, -3.0}, {4.0, 0.5}, {5.0, 7.0}};
    const CubicFit fit = fit_cubic(pts);
    EXPECT_LE(fit.residuals.cwiseAbs().maxCoeff(), 1e-12);
    for (const auto& [x, y] : pts) {
        EXPECT_NEAR(valpha(x, fit.map), y, 1e-12);
    }
}

TEST(CubicFit, RecoversReferenceFromPerturbedSamples) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> noise(-1e-3, 1e-3);
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i <= 60; ++i) {
        const double x = 2.0 + 0.05 * i;
        pts.push_back({x, reference_sum(x) + noise(rng)});
    }
    const auto& c = fit_cubic(pts).map.coefficients();
    const std::array<double, 4> expected{0.2287, -2.758, 11.14, -15.27};
    for (int k = 0; k < 4; ++k) {
        EXPECT_NEAR(c[k], expected[k], 0.01 * std::abs(expected[k])) << "k=" << k;
    }
}

TEST(CubicFit, RankDeficiency) {
    const std::vector<std::pair<double, double>> pts{{2.0, 1.0}, {3.0, 1.0}, {3.0, 2.0}, {2.0, 0.0}, {4.0, 5.0}};
    EXPECT_THROW(fit_cubic(pts), InvalidArgument);
    EXPECT_THROW(fit_cubic({{2.0, 1.0}, {3.0, 1.0}, {4.0, 2.0}}), InvalidArgument);
}

TEST(Valpha, Examples) {
    const CubicMap map = CubicMap::reference();
    EXPECT_DOUBLE_EQ(map.evaluate_raw(0.0), -15.27);
    EXPECT_NEAR(map.evaluate_raw(1.0), -6.6593, 1e-12);
    EXPECT_THROW(valpha(0.0, map), DomainError);
    EXPECT_THROW(valpha(1.0, map), DomainError);
    EXPECT_THROW(valpha(5.0001, map), DomainError);
    EXPECT_NEAR(valpha(2.417, map), -1.2274, 1e-4);
    EXPECT_NEAR(valpha(2.417, map), horner(2.417), 1e-12);
    EXPECT_NEAR(valpha(2.417, map), reference_sum(2.417), 1e-12);
}

TEST(Valpha, ReferenceMapIsIncreasing) {
    const CubicMap map = CubicMap::reference();
    EXPECT_EQ(map.monotonic_direction(), 1);
    double prev = -INFINITY;
    for (double x = 2.0; x <= 5.0; x += 0.001) {
        const double v = valpha(x, map);
        EXPECT_GT(v, prev);
        prev = v;
    }
}

TEST(Valpha, NonMonotoneMap) {
    // V = (x - 3)^2 on [2, 5]
    const CubicMap map({0.0, 1.0, -6.0, 9.0});
    EXPECT_FALSE(map.monotone());
    EXPECT_THROW(invert_valpha(0.5, map), DomainError);
    EXPECT_THROW(gap_tuning_curve(map, {0.5}), DomainError);
    EXPECT_EQ(CubicMap({0.0, 0.0, -1.0, 0.0}).monotonic_direction(), -1);
}

TEST(Inversion, RoundTripAcrossDomain) {
    const CubicMap map = CubicMap::reference();
    for (double x = 2.0; x <= 5.0; x += 0.01) {
        EXPECT_NEAR(invert_valpha(valpha(x, map), map), x, 1e-9);
    }
    EXPECT_NEAR(invert_valpha(valpha(3.0, map), map), 3.0, 1e-9);
    EXPECT_NEAR(invert_valpha(-1.2274, map), 2.417, 1e-4);
    EXPECT_THROW(invert_valpha(valpha(5.0, map) + 0.1, map), DomainError);
    EXPECT_THROW(invert_valpha(valpha(2.0, map) - 0.1, map), DomainError);
}

TEST(TuningCurve, MonotoneAndMarker) {
    const CubicMap map = CubicMap::reference();
    std::vector<double> volts;
    for (int i = 0; i <= 100; ++i) {
        volts.push_back(valpha(2.0, map) + (valpha(5.0, map) - valpha(2.0, map)) * i / 100.0);
    }
    const TuningCurve c = gap_tuning_curve(map, volts);
    ASSERT_EQ(c.points.size(), volts.size());
    for (std::size_t i = 1; i < c.points.size(); ++i) {
        EXPECT_GT(c.points[i].gap_ghz, c.points[i - 1].gap_ghz);
    }
    ASSERT_TRUE(c.marker_volts);
    EXPECT_NEAR(*c.marker_volts, valpha(2.417, map), 1e-12);
    EXPECT_THROW(gap_tuning_curve(map, {valpha(5.0, map) + 1.0}), DomainError);
}

TEST(Waveform, ZeroAmplitudeIsConstant) {
    const CubicMap map = CubicMap::reference();
    const auto w = synthesize_waveform(0.0, angular(150e6), angular(2.417e9), map, 2.4e9, 100e-9);
    ASSERT_EQ(w.samples.size(), 240u);
    for (double v : w.samples) {
        EXPECT_EQ(v, w.samples.front());
    }
    EXPECT_NEAR(w.samples.front(), valpha(2.417, map), 1e-12);
}

TEST(Waveform, ExtremesAndPeriodicity) {
    const CubicMap map = CubicMap::reference();
    const double wr = angular(2.417e9), lz = angular(180e6), wz = angular(150e6);
    const auto w = synthesize_waveform(lz, wz, wr, map, 2.4e9, 100e-9);
    const double x_hi = 1e-9 * (wr + 2 * lz) / model::kTwoPi;
    const double x_lo = 1e-9 * (wr - 2 * lz) / model::kTwoPi;
    EXPECT_NEAR(x_hi, 2.777, 1e-12);
    EXPECT_NEAR(x_lo, 2.057, 1e-12);
    // t = 0 sits on cos = 1, sample 8 of 16 per period on cos = -1
    EXPECT_EQ(w.samples[0], valpha(x_hi, map));
    EXPECT_EQ(w.samples[8], valpha(x_lo, map));
    EXPECT_EQ(*std::max_element(w.samples.begin(), w.samples.end()), valpha(x_hi, map));
    EXPECT_EQ(*std::min_element(w.samples.begin(), w.samples.end()), valpha(x_lo, map));
    EXPECT_NEAR(w.samples[0], valpha(2.777, map), 1e-11);
    for (std::size_t k = 0; k + 16 < w.samples.size(); ++k) {
        EXPECT_NEAR(w.samples[k], w.samples[k + 16], 1e-12);
    }
}

TEST(Waveform, GainAndDomain) {
    const CubicMap map = CubicMap::reference();
    const auto a = synthesize_waveform(angular(50e6), angular(150e6), angular(2.417e9), map, 2.4e9, 20e-9);
    const auto b = synthesize_waveform(angular(50e6), angular(150e6), angular(2.417e9), map, 2.4e9, 20e-9, 0.5);
    for (std::size_t k = 0; k < a.samples.size(); ++k) {
        EXPECT_EQ(b.samples[k], 0.5 * a.samples[k]);
    }
    EXPECT_THROW(synthesize_waveform(angular(300e6), angular(150e6), angular(2.417e9), map, 2.4e9, 20e-9),
                 DomainError);
    EXPECT_THROW(synthesize_waveform(0.0, angular(150e6), angular(2.417e9), map, 0.0, 20e-9),
                 InvalidArgument);
}

TEST(Waveform, BinaryRoundTrip) {
    const CubicMap map = CubicMap::reference();
    const auto w = synthesize_waveform(angular(180e6), angular(150e6), angular(2.417e9), map, 2.4e9, 10e-9);
    const auto bytes = encode_waveform_binary(w);
    ASSERT_EQ(bytes.size(), 16 + 8 * w.samples.size());
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "QSWF");
    EXPECT_EQ(bytes[4], 1);
    EXPECT_EQ(bytes[5] | bytes[6] | bytes[7], 0);
    double rate = 0.0;
    std::memcpy(&rate, bytes.data() + 8, 8);  // little-endian host
    EXPECT_EQ(rate, 2.4e9);
    const auto back = decode_waveform_binary(bytes);
    EXPECT_EQ(back.sample_rate, w.sample_rate);
    EXPECT_EQ(back.samples, w.samples);

    auto bad = bytes;
    bad[0] = 'X';
    EXPECT_THROW(decode_waveform_binary(bad), IoError);
    bad = bytes;
    bad.pop_back();
    EXPECT_THROW(decode_waveform_binary(bad), IoError);

    const auto path = temp_path("wave.qswf");
    write_waveform_binary(path, w);
    EXPECT_EQ(read_waveform_binary(path).samples, w.samples);
    std::filesystem::remove(path);
    EXPECT_THROW(read_waveform_binary(temp_path("missing.qswf")), IoError);
}

TEST(Waveform, CsvColumns) {
    const CubicMap map = CubicMap::reference();
    const auto w = synthesize_waveform(0.0, angular(150e6), angular(2.417e9), map, 1e9, 3e-9);
    const auto path = temp_path("wave.csv");
    write_waveform_csv(path, w);
    std::ifstream in(path);
    std::string header, row;
    std::getline(in, header);
    EXPECT_EQ(header, "time_s,volts");
    int rows = 0;
    while (std::getline(in, row)) {
        ++rows;
    }
    EXPECT_EQ(rows, 3);
    std::filesystem::remove(path);
}

TEST(Anticrossing, NoiselessRecovery) {
    const double g = angular(9.14e6), d = angular(2.417e9);
    const auto peaks = synthetic_peaks(g, d, d, epsilons(300e6, 41));
    const auto fit = fit_anticrossing(peaks);
    EXPECT_NEAR(fit.g, g, 1e-3 * g);
    EXPECT_NEAR(fit.delta, d, 1e-3 * d);
    EXPECT_NEAR(fit.resonator_frequency, d, 1e-3 * d);
    EXPECT_FALSE(fit.below_resolution);
    EXPECT_GE(fit.upper_count, 2u);
    EXPECT_GE(fit.lower_count, 2u);
}

TEST(Anticrossing, NoisyRecovery) {
    const double g = angular(9.14e6), d = angular(2.417e9);
    const auto peaks = synthetic_peaks(g, d, d, epsilons(300e6, 41), 10e3, 7);
    const auto fit = fit_anticrossing(peaks);
    EXPECT_NEAR(fit.g, g, 0.01 * g);
    EXPECT_NEAR(fit.residual_hz, 10e3, 3e3);
}

TEST(Anticrossing, CrossingIsBelowResolution) {
    const double d = angular(2.417e9);
    const auto fit = fit_anticrossing(synthetic_peaks(0.0, d, d, epsilons(300e6, 41)));
    EXPECT_TRUE(fit.below_resolution);
    EXPECT_LT(fit.g, fit.resolution_floor);
    EXPECT_GE(fit.g, 0.0);
}

TEST(Anticrossing, EquivariantUnderCommonShift) {
    const double g = angular(9.14e6), d = angular(2.417e9), f0 = angular(40e6);
    const auto eps = epsilons(300e6, 41);
    const auto a = fit_anticrossing(synthetic_peaks(g, d, d, eps), d);
    const auto b = fit_anticrossing(synthetic_peaks(g, d + f0, d + f0, eps), d + f0);
    EXPECT_NEAR(b.g, a.g, 1e-6 * a.g);
    EXPECT_NEAR(b.resonator_frequency - a.resonator_frequency, f0, 1e-6 * f0);
    EXPECT_NEAR(b.delta - a.delta, f0, 1e-6 * f0);
}

TEST(Anticrossing, InsufficientData) {
    const double g = angular(9.14e6), d = angular(2.417e9);
    auto peaks = synthetic_peaks(g, d, d, epsilons(300e6, 2));
    EXPECT_THROW(fit_anticrossing(peaks), InvalidArgument);
    // only the upper branch
    peaks = synthetic_peaks(g, d, d, epsilons(300e6, 11));
    for (auto& p : peaks) {
        p.peaks_hz.erase(p.peaks_hz.begin());
    }
    EXPECT_THROW(fit_anticrossing(peaks), InvalidArgument);
}

TEST(Peaks, Validation) {
    SpectrumPeaks p{{0.0, {2.4e9, 2.3e9}}};
    EXPECT_THROW(validate_peaks(p), InvalidArgument);
    p = {{0.0, {-1.0}}};
    EXPECT_THROW(validate_peaks(p), InvalidArgument);
    p = {{0.0, {2.3e9, 2.4e9}}};
    EXPECT_NO_THROW(validate_peaks(p));
}

TEST(Peaks, SyntheticMatchesDressedBranches) {
    const double g = angular(9.14e6), d = angular(2.417e9), wr = angular(2.43e9);
    const auto peaks = synthetic_peaks(g, d, wr, {angular(100e6)});
    const double wq = std::hypot(d, angular(100e6));
    const double mid = 0.5 * (wq + wr), half = std::hypot(0.5 * (wq - wr), g);
    ASSERT_EQ(peaks[0].peaks_hz.size(), 2u);
    EXPECT_NEAR(peaks[0].peaks_hz[0], model::hertz(mid - half), 1e-3);
    EXPECT_NEAR(peaks[0].peaks_hz[1], model::hertz(mid + half), 1e-3);
    // seeded noise is reproducible
    EXPECT_EQ(synthetic_peaks(g, d, wr, {0.0, 1.0}, 1e4, 3)[1].peaks_hz,
              synthetic_peaks(g, d, wr, {0.0, 1.0}, 1e4, 3)[1].peaks_hz);
}
