#include "qswitch/cli/commands.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "qswitch/calibration.hpp"
#include "qswitch/cli/output.hpp"
#include "qswitch/errors.hpp"
#include "qswitch/parallel.hpp"
#include "qswitch/protocols.hpp"

namespace qswitch::cli {

namespace {

using json = nlohmann::ordered_json;
using model::hertz;

/// What a command hands back for writing.
struct Products {
    std::vector<Column> csv;
    json summary = json::object();
    std::string svg;
    /// extra binary outputs written with the CSV
    std::vector<std::pair<std::string, std::vector<std::uint8_t>>> extra;
};

struct Context {
    const RunConfig& config;
    const RunOptions& options;

    void log(const std::string& msg) const {
        if (options.log) {
            *options.log << "qswitch: " << msg << '\n';
        }
    }
    model::DeviceModel device() const { return config.device; }
    protocols::ScanOptions scan() const { return {options.workers, config.integrator}; }
};

/// finite numbers pass through, anything else becomes null
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void measured(json& j, const std::string& key, std::optional<double> v, const std::string& reason) {
    if (v && std::isfinite(*v)) {
        j[key] = *v;
    } else {
        j[key] = nullptr;
        j[key + "_reason"] = reason.empty() ? "not available" : reason;
    }
}

protocols::SweepSpec sweep(const Range& r, protocols::SweepVariable var) {
    return {var, r.start, r.stop, r.points};
}

dynamics::TimeGrid grid_for(const RunConfig& c, const model::DeviceModel& widest) {
    return {c.t_start, c.t_end, c.samples,
            c.max_step > 0.0 ? c.max_step : dynamics::default_max_step(widest)};
}

dynamics::TimeGrid sampled_grid(const RunConfig& c, double t_end, const model::DeviceModel& widest) {
    const auto n = static_cast<std::size_t>(std::llround(t_end / c.sample_step)) + 1;
    return {0.0, t_end, std::max<std::size_t>(n, 2),
            c.max_step > 0.0 ? c.max_step : dynamics::default_max_step(widest)};
}

std::vector<double> scaled(const std::vector<double>& v, double factor) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = v[i] * factor;
    }
    return out;
}

/// long format: one row per (x, y) cell, x-major
void map_columns(Products& p, const protocols::SpectrumMap& map, const std::string& x_name,
                 double x_factor, const std::string& y_name, double y_factor,
                 const std::string& value_name) {
    Column x{x_name, {}};
    Column y{y_name, {}};
    Column v{value_name, {}};
    for (std::size_t ix = 0; ix < map.x_axis.size(); ++ix) {
        for (std::size_t iy = 0; iy < map.y_axis.size(); ++iy) {
            x.values.push_back(map.x_axis[ix] * x_factor);
            y.values.push_back(map.y_axis[iy] * y_factor);
            v.values.push_back(
                map.population(static_cast<Eigen::Index>(iy), static_cast<Eigen::Index>(ix)));
        }
    }
    p.csv = {std::move(x), std::move(y), std::move(v)};
}

double switch_off_amplitude(const Context& ctx, json& summary) {
    if (ctx.config.lambda_off) {
        summary["lambda_off_source"] = "config";
        return *ctx.config.lambda_off;
    }
    ctx.log("searching the switch-off amplitude");
    dynamics::GapOptions go;
    go.model = ctx.config.gap_model;
    const protocols::SwitchOffPoint off = protocols::find_switch_off(ctx.device(), go);
    summary["lambda_off_source"] = "floquet_minimum";
    return off.lambda_z;
}

Products cmd_spectrum(const Context& ctx) {
    model::DeviceModel m = ctx.device();
    m.drive->amplitude = 0.0;
    ctx.log("spectrum scan over " + std::to_string(ctx.config.epsilon.points) + " epsilon values");
    const protocols::SpectrumMap map = protocols::spectrum_scan(
        m, sweep(ctx.config.epsilon, protocols::SweepVariable::epsilon),
        sweep(ctx.config.probe, protocols::SweepVariable::probe_frequency), ctx.config.linewidth,
        ctx.scan());
    Products p;
    map_columns(p, map, "epsilon_hz", 1.0 / model::kTwoPi, "probe_hz", 1.0, "population");
    const auto& upper = map.overlays[0].values;
    const auto& lower = map.overlays[1].values;
    std::size_t narrow = 0;
    for (std::size_t i = 1; i < upper.size(); ++i) {
        if (upper[i] - lower[i] < upper[narrow] - lower[narrow]) {
            narrow = i;
        }
    }
    json& s = p.summary;
    s["min_splitting_hz"] = upper[narrow] - lower[narrow];
    s["min_splitting_epsilon_hz"] = hertz(map.x_axis[narrow]);
    s["degenerate_columns"] = map.degenerate_columns;
    s["epsilon_hz"] = scaled(map.x_axis, 1.0 / model::kTwoPi);
    s["upper_branch_hz"] = upper;
    s["lower_branch_hz"] = lower;
    const std::vector<double> x_mhz = scaled(map.x_axis, 1e-6 / model::kTwoPi);
    p.svg = heatmap_svg(x_mhz, scaled(map.y_axis, 1e-9), map.population,
                        {"Qubit-resonator spectrum", "epsilon / 2pi (MHz)", "probe (GHz)"},
                        {{"upper branch", x_mhz, scaled(upper, 1e-9)},
                         {"lower branch", x_mhz, scaled(lower, 1e-9)}});
    return p;
}

Products cmd_driven_spectrum(const Context& ctx) {
    ctx.log("driven spectrum over " + std::to_string(ctx.config.lambda.points) + " amplitudes");
    const protocols::SpectrumMap map = protocols::driven_spectrum_scan(
        ctx.device(), sweep(ctx.config.lambda, protocols::SweepVariable::lambda_z),
        sweep(ctx.config.probe, protocols::SweepVariable::probe_frequency), ctx.config.linewidth,
        ctx.scan());
    Products p;
    map_columns(p, map, "lambda_z_hz", 1.0 / model::kTwoPi, "probe_hz", 1.0, "population");
    const auto& gap = map.overlays[0].values;
    const auto& signed_gap = map.overlays[1].values;
    const auto& bessel = map.overlays[2].values;
    json cols = json::array();
    std::size_t narrow = 0;
    for (std::size_t i = 0; i < map.x_axis.size(); ++i) {
        cols.push_back({{"lambda_z_hz", hertz(map.x_axis[i])},
                        {"floquet_gap_hz", gap[i]},
                        {"signed_gap_hz", signed_gap[i]},
                        {"bessel_gap_hz", bessel[i]}});
        if (gap[i] < gap[narrow]) {
            narrow = i;
        }
    }
    p.summary["columns"] = cols;
    p.summary["smallest_gap_hz"] = gap[narrow];
    p.summary["smallest_gap_lambda_z_hz"] = hertz(map.x_axis[narrow]);
    const double fr = hertz(ctx.config.device.resonator.frequency);
    std::vector<double> up;
    std::vector<double> down;
    for (double gp : gap) {
        up.push_back((fr + 0.5 * gp) * 1e-9);
        down.push_back((fr - 0.5 * gp) * 1e-9);
    }
    const std::vector<double> x_mhz = scaled(map.x_axis, 1e-6 / model::kTwoPi);
    p.svg = heatmap_svg(x_mhz, scaled(map.y_axis, 1e-9), map.population,
                        {"Driven spectrum", "lambda_z / 2pi (MHz)", "probe (GHz)"},
                        {{"f_r + gap/2", x_mhz, up}, {"f_r - gap/2", x_mhz, down}});
    return p;
}

Products cmd_rabi_scan(const Context& ctx) {
    const RunConfig& c = ctx.config;
    const model::DeviceModel m = ctx.device();
    const dynamics::TimeGrid grid = grid_for(c, m.with_drive_amplitude(c.lambda.stop));
    ctx.log("Rabi scan over " + std::to_string(c.lambda.points) + " amplitudes");
    const protocols::SpectrumMap map = protocols::rabi_scan(
        m, sweep(c.lambda, protocols::SweepVariable::lambda_z), grid, ctx.scan());
    Products p;
    map_columns(p, map, "lambda_z_hz", 1.0 / model::kTwoPi, "time_s", 1.0, "p_excited");
    json cols = json::array();
    for (std::size_t i = 0; i < map.x_axis.size(); ++i) {
        json col{{"lambda_z_hz", hertz(map.x_axis[i])}};
        measured(col, "frequency_hz", map.column_frequencies[i].frequency,
                 map.column_frequencies[i].reason);
        col["bessel_frequency_hz"] = map.overlays[0].values[i];
        cols.push_back(col);
    }
    p.summary["columns"] = cols;
    p.svg = heatmap_svg(scaled(map.x_axis, 1e-6 / model::kTwoPi), scaled(map.y_axis, 1e6),
                        map.population,
                        {"Vacuum Rabi oscillations versus drive amplitude", "lambda_z / 2pi (MHz)",
                         "time (us)"});
    return p;
}

protocols::EvolutionResult evolve_from_excited(const Context& ctx, const model::DeviceModel& m,
                                               const dynamics::TimeGrid& grid) {
    protocols::PulseSchedule s;
    const double lz = m.drive ? m.drive->amplitude : 0.0;
    s.segments.push_back({grid.t_end, lz});
    protocols::SwitchOptions so;
    so.dissipative = ctx.config.dissipative;
    so.integrator = ctx.config.integrator;
    return protocols::switch_sequence(m, s, grid, so);
}

void frequency_summary(json& j, const std::string& key, const std::vector<double>& values,
                       const std::vector<double>& times, double band) {
    if (values.size() < 16) {
        measured(j, key, std::nullopt, "fewer than 16 samples");
        return;
    }
    const protocols::FrequencyEstimate est =
        protocols::extract_frequency(values, times, {band, 3.0, 1e-3, 1.0});
    if (!est.frequency) {
        measured(j, key, std::nullopt, est.reason);
        return;
    }
    double f = *est.frequency;
    try {
        const protocols::DampedCosine fit = protocols::fit_damped_cosine(values, times, f);
        if (fit.frequency() > 0.5 * f && fit.frequency() < 2.0 * f) {
            f = fit.frequency();
        }
    } catch (const ConvergenceError&) {
    }
    j[key] = f;
}

Products cmd_rabi_compare(const Context& ctx) {
    const RunConfig& c = ctx.config;
    Products p;
    const double lambda_off = switch_off_amplitude(ctx, p.summary);
    const model::DeviceModel on = ctx.device().with_drive_amplitude(0.0);
    const model::DeviceModel off = ctx.device().with_drive_amplitude(lambda_off);
    const dynamics::TimeGrid grid = grid_for(c, off);
    ctx.log("evolving with the coupling on and off");
    const protocols::EvolutionResult r_on = evolve_from_excited(ctx, on, grid);
    const protocols::EvolutionResult r_off = evolve_from_excited(ctx, off, grid);
    std::vector<double> envelope;
    for (double t : r_on.times) {
        envelope.push_back(std::exp(-(t - c.t_start) / c.device.qubit_t1));
    }
    p.csv = {{"time_s", r_on.times},
             {"p_on", r_on.excited_population},
             {"p_off", r_off.excited_population},
             {"decay_envelope", envelope}};
    json& s = p.summary;
    s["lambda_off_hz"] = hertz(lambda_off);
    const double band = 0.5 * hertz(c.device.drive->frequency);
    frequency_summary(s, "on_frequency_hz", r_on.excited_population, r_on.times, band);
    frequency_summary(s, "off_frequency_hz", r_off.excited_population, r_off.times, band);
    s["off_max_deviation_from_decay"] =
        protocols::pause_deviation(r_off, c.t_start, c.t_end, c.device.qubit_t1);
    const std::vector<double> t_us = scaled(r_on.times, 1e6);
    p.svg = line_svg({{"coupling on", t_us, r_on.excited_population},
                      {"coupling off", t_us, r_off.excited_population},
                      {"exp(-t/T1q)", t_us, envelope}},
                     {"Switched-on versus switched-off coupling", "time (us)", "P_e"});
    return p;
}

Products cmd_switch(const Context& ctx) {
    const RunConfig& c = ctx.config;
    Products p;
    json& s = p.summary;
    const double lambda_off = switch_off_amplitude(ctx, s);
    protocols::PulseSchedule schedule;
    schedule.preparation = c.preparation;
    if (c.switch_before > 0.0) {
        schedule.segments.push_back({c.switch_before, 0.0});
    }
    schedule.segments.push_back({c.switch_off, lambda_off});
    if (c.switch_after > 0.0) {
        schedule.segments.push_back({c.switch_after, 0.0});
    }
    const double total = schedule.total_duration();
    const model::DeviceModel m = ctx.device();
    const dynamics::TimeGrid grid = sampled_grid(c, total, m.with_drive_amplitude(lambda_off));
    protocols::SwitchOptions so;
    so.phase_offset = c.phase_offset;
    so.dissipative = c.dissipative;
    so.integrator = c.integrator;
    ctx.log("running the switch sequence");
    const protocols::EvolutionResult r = protocols::switch_sequence(m, schedule, grid, so);
    p.csv = {{"time_s", r.times},
             {"p_excited", r.excited_population},
             {"photon_number", r.photon_number}};
    s["lambda_off_hz"] = hertz(lambda_off);
    s["phase_offset_rad"] = c.phase_offset;
    s["preparation"] = c.preparation == protocols::Preparation::entangled_half_swap ? "half_swap"
                                                                                      : "excited";
    json segs = json::array();
    for (const protocols::PulseSegment& seg : schedule.segments) {
        segs.push_back({{"duration_s", seg.duration}, {"lambda_z_hz", hertz(seg.lambda_z)}});
    }
    s["segments"] = segs;
    const double pause_begin = c.switch_before;
    const double pause_end = c.switch_before + c.switch_off;
    s["pause_max_deviation_from_decay"] =
        protocols::pause_deviation(r, pause_begin, pause_end, c.device.qubit_t1);
    // oscillation after the pause
    std::vector<double> tt;
    std::vector<double> pp;
    for (std::size_t i = 0; i < r.times.size(); ++i) {
        if (r.times[i] >= pause_end) {
            tt.push_back(r.times[i]);
            pp.push_back(r.excited_population[i]);
        }
    }
    frequency_summary(s, "resumed_frequency_hz", pp, tt,
                      0.5 * hertz(c.device.drive->frequency));
    const std::vector<double> t_us = scaled(r.times, 1e6);
    p.svg = line_svg({{"P_e", t_us, r.excited_population}, {"photon number", t_us, r.photon_number}},
                     {"Switch sequence", "time (us)", "population"});
    return p;
}

Products cmd_storage(const Context& ctx) {
    const RunConfig& c = ctx.config;
    Products p;
    json& s = p.summary;
    const double lambda_off = switch_off_amplitude(ctx, s);
    const model::DeviceModel m = ctx.device();
    const double swap = std::numbers::pi / (2.0 * m.coupling.g);
    const dynamics::TimeGrid grid = sampled_grid(c, swap + c.storage_off + c.storage_after,
                                                 m.with_drive_amplitude(lambda_off));
    protocols::StorageOptions so;
    so.lambda_off = lambda_off;
    so.integrator = c.integrator;
    ctx.log("running the storage sequence");
    const protocols::StorageResult r = protocols::storage_experiment(m, c.storage_off, grid, so);
    p.csv = {{"time_s", r.trajectory.times},
             {"p_excited", r.trajectory.excited_population},
             {"p_reference", r.reference.excited_population}};
    s["lambda_off_hz"] = hertz(r.lambda_off);
    s["swap_time_s"] = r.swap_time;
    s["storage_time_s"] = c.storage_off;
    s["switch_on_time_s"] = r.switch_on_time;
    measured(s, "amplitude_ratio", r.amplitude_ratio, r.reason);
    s["resonator_decay_ratio"] = number(std::exp(-c.storage_off / c.device.resonator_t1));
    measured(s, "revival_frequency_hz",
             r.revival_fit ? std::optional<double>(r.revival_fit->frequency()) : std::nullopt,
             r.reason);
    measured(s, "reference_frequency_hz",
             r.reference_fit ? std::optional<double>(r.reference_fit->frequency()) : std::nullopt,
             r.reason);
    const std::vector<double> t_us = scaled(r.trajectory.times, 1e6);
    p.svg = line_svg({{"stored", t_us, r.trajectory.excited_population},
                      {"uninterrupted", t_us, r.reference.excited_population}},
                     {"Storage in the resonator", "time (us)", "P_e"});
    return p;
}

Products cmd_onoff_ratio(const Context& ctx) {
    const RunConfig& c = ctx.config;
    const model::DeviceModel m = ctx.device();
    dynamics::GapOptions go;
    go.model = c.gap_model;
    ctx.log("searching the switch-off amplitude");
    const protocols::SwitchOffPoint off = protocols::find_switch_off(m, go);
    const std::vector<double> lambdas =
        sweep(c.lambda, protocols::SweepVariable::lambda_z).values();
    std::vector<double> gaps(lambdas.size());
    ctx.log("gap curve over " + std::to_string(lambdas.size()) + " amplitudes");
    parallel_for(lambdas.size(), ctx.options.workers, [&](std::size_t i) {
        gaps[i] = dynamics::quasienergy_gap(m.with_drive_amplitude(lambdas[i]), go).gap;
    });
    Products p;
    std::vector<double> ratio;
    std::vector<double> bessel;
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        ratio.push_back(gaps[i] / off.gap_on);
        bessel.push_back(std::abs(model::bessel_j0(2.0 * lambdas[i] / m.drive->frequency)));
    }
    p.csv = {{"lambda_z_hz", scaled(lambdas, 1.0 / model::kTwoPi)},
             {"gap_hz", scaled(gaps, 1.0 / model::kTwoPi)},
             {"ratio", ratio},
             {"bessel_ratio", bessel}};
    json& s = p.summary;
    s["gap_model"] = c.gap_model == dynamics::GapModel::lab ? "lab" : "driven_jc";
    s["lambda_off_hz"] = hertz(off.lambda_z);
    s["lambda_off_over_wz"] = off.lambda_z / m.drive->frequency;
    s["bessel_zero_hz"] = hertz(model::bessel_switch_off_amplitude(m.drive->frequency));
    s["ratio"] = off.ratio;
    s["gap_on_hz"] = hertz(off.gap_on);
    s["gap_off_hz"] = hertz(off.gap);
    s["evaluations"] = off.evaluations;
    if (m.drive->amplitude > 0.0) {
        s["configured_lambda_z_hz"] = hertz(m.drive->amplitude);
        s["configured_ratio"] = protocols::onoff_ratio(m, m.drive->amplitude, go);
    }
    const std::vector<double> x_mhz = scaled(lambdas, 1e-6 / model::kTwoPi);
    p.svg = line_svg({{"Floquet gap ratio", x_mhz, ratio}, {"|J0(2 lambda_z / w_z)|", x_mhz, bessel}},
                     {"On/off ratio", "lambda_z / 2pi (MHz)", "gap / gap(0)"});
    return p;
}

calibration::CubicMap cubic_map(const RunConfig& c) {
    return calibration::CubicMap(c.coefficients, c.domain_lo / 1e9, c.domain_hi / 1e9);
}

Products cmd_waveform(const Context& ctx) {
    const RunConfig& c = ctx.config;
    const calibration::CubicMap map = cubic_map(c);
    const model::DriveParams& d = *c.device.drive;
    const calibration::SampledWaveform w = calibration::synthesize_waveform(
        d.amplitude, d.frequency, c.device.resonator.frequency, map, c.sample_rate, c.duration,
        c.gain);
    Products p;
    std::vector<double> t(w.samples.size());
    for (std::size_t k = 0; k < t.size(); ++k) {
        t[k] = w.time(k);
    }
    p.csv = {{"time_s", t}, {"volts", w.samples}};
    p.extra.emplace_back("waveform.qswf", calibration::encode_waveform_binary(w));
    json& s = p.summary;
    s["samples"] = w.samples.size();
    s["sample_rate_hz"] = w.sample_rate;
    s["duration_s"] = w.duration;
    s["period_s"] = model::kTwoPi / d.frequency;
    s["samples_per_period"] = w.sample_rate * model::kTwoPi / d.frequency;
    s["min_volts"] = *std::min_element(w.samples.begin(), w.samples.end());
    s["max_volts"] = *std::max_element(w.samples.begin(), w.samples.end());
    const double hi = 1e-9 * (c.device.resonator.frequency + 2.0 * d.amplitude) / model::kTwoPi;
    const double lo = 1e-9 * (c.device.resonator.frequency - 2.0 * d.amplitude) / model::kTwoPi;
    s["gap_extremes_ghz"] = {lo, hi};
    s["valpha_at_extremes"] = {c.gain * calibration::valpha(lo, map),
                               c.gain * calibration::valpha(hi, map)};
    p.svg = line_svg({{"V", scaled(t, 1e9), w.samples}},
                     {"Bias waveform", "time (ns)", "volts"});
    return p;
}

Products cmd_gap_curve(const Context& ctx) {
    const RunConfig& c = ctx.config;
    const calibration::CubicMap map = cubic_map(c);
    const double v_lo = map.evaluate_raw(map.domain_lo());
    const double v_hi = map.evaluate_raw(map.domain_hi());
    const double start = c.v_start.value_or(std::min(v_lo, v_hi));
    const double stop = c.v_stop.value_or(std::max(v_lo, v_hi));
    if (!(stop > start)) {
        throw ConfigError("gap curve needs v_stop > v_start");
    }
    std::vector<double> volts(c.v_points);
    for (std::size_t i = 0; i < volts.size(); ++i) {
        volts[i] = start + (stop - start) * static_cast<double>(i) /
                               static_cast<double>(volts.size() - 1);
    }
    volts.back() = stop;
    const calibration::TuningCurve curve =
        calibration::gap_tuning_curve(map, volts, c.marker / 1e9);
    Products p;
    std::vector<double> gaps;
    for (const calibration::TuningPoint& tp : curve.points) {
        gaps.push_back(tp.gap_ghz);
    }
    p.csv = {{"volts", volts}, {"gap_ghz", gaps}};
    json& s = p.summary;
    s["direction"] = map.monotonic_direction();
    s["marker_ghz"] = curve.marker_ghz;
    measured(s, "marker_volts", curve.marker_volts, "marker outside the map domain");
    s["marker_in_sweep"] = curve.marker_volts && *curve.marker_volts >= start &&
                           *curve.marker_volts <= stop;
    std::vector<Series> series{{"gap", volts, gaps}};
    if (curve.marker_volts) {
        series.push_back({"resonator", {start, stop}, {curve.marker_ghz, curve.marker_ghz}});
    }
    p.svg = line_svg(series, {"Qubit gap tuning", "V_alpha (V)", "gap / 2pi (GHz)"});
    return p;
}

calibration::SpectrumPeaks read_peaks(const std::string& path) {
    std::ifstream f(path);
    if (!f) {
        throw IoError("cannot read peaks file " + path);
    }
    calibration::SpectrumPeaks peaks;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#' || line.rfind("epsilon", 0) == 0) {
            continue;
        }
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
                if (cell.find_first_not_of(" \t\r", used) != std::string::npos) {
                    throw std::invalid_argument("trailing text");
                }
            } catch (const std::exception&) {
                throw ConfigError("peaks file " + path + ": bad number '" + cell + "'", line_no);
            }
        }
        if (row.size() < 2) {
            throw ConfigError("peaks file " + path + ": need epsilon_hz and at least one peak",
                              line_no);
        }
        calibration::PeakSet set{model::angular(row[0]), {row.begin() + 1, row.end()}};
        std::sort(set.peaks_hz.begin(), set.peaks_hz.end());
        peaks.push_back(std::move(set));
    }
    return peaks;
}

Products cmd_fit_anticrossing(const Context& ctx) {
    const RunConfig& c = ctx.config;
    Products p;
    json& s = p.summary;
    calibration::SpectrumPeaks peaks;
    if (!c.peaks_file.empty()) {
        peaks = read_peaks(c.peaks_file);
        s["source"] = "file";
    } else {
        peaks = calibration::synthetic_peaks(
            c.device.coupling.g, c.device.qubit.gap, c.device.resonator.frequency,
            sweep(c.epsilon, protocols::SweepVariable::epsilon).values(), c.noise, c.seed);
        s["source"] = "synthetic";
        s["noise_hz"] = c.noise;
        s["seed"] = c.seed;
    }
    ctx.log("fitting " + std::to_string(peaks.size()) + " peak sets");
    const calibration::AnticrossingFit fit = calibration::fit_anticrossing(peaks, c.wr_seed);
    Column eps{"epsilon_hz", {}};
    Column peak{"peak_hz", {}};
    Column branch{"branch", {}};
    Column model_col{"model_hz", {}};
    std::vector<double> x_upper, upper, lower;
    for (const calibration::PeakSet& set : peaks) {
        const auto [hi, lo] = protocols::dressed_branches(
            model::qubit_frequency(fit.delta, set.epsilon), fit.resonator_frequency, fit.g);
        for (double y : set.peaks_hz) {
            const bool up = std::abs(hertz(hi) - y) <= std::abs(hertz(lo) - y);
            eps.values.push_back(hertz(set.epsilon));
            peak.values.push_back(y);
            branch.values.push_back(up ? 1.0 : -1.0);
            model_col.values.push_back(hertz(up ? hi : lo));
        }
        x_upper.push_back(hertz(set.epsilon) * 1e-6);
        upper.push_back(hertz(hi) * 1e-9);
        lower.push_back(hertz(lo) * 1e-9);
    }
    p.csv = {eps, peak, branch, model_col};
    s["g_hz"] = hertz(fit.g);
    s["splitting_hz"] = 2.0 * hertz(fit.g);
    s["delta_hz"] = hertz(fit.delta);
    s["wr_hz"] = hertz(fit.resonator_frequency);
    s["residual_hz"] = fit.residual_hz;
    s["resolution_floor_hz"] = hertz(fit.resolution_floor);
    s["below_resolution"] = fit.below_resolution;
    s["iterations"] = fit.iterations;
    s["upper_branch_peaks"] = fit.upper_count;
    s["lower_branch_peaks"] = fit.lower_count;
    std::vector<Series> series{{"fit upper", x_upper, upper}, {"fit lower", x_upper, lower}};
    std::vector<double> ux, uy, lx, ly;
    for (std::size_t i = 0; i < peak.values.size(); ++i) {
        const bool up = branch.values[i] > 0;
        (up ? ux : lx).push_back(eps.values[i] * 1e-6);
        (up ? uy : ly).push_back(peak.values[i] * 1e-9);
    }
    if (!ux.empty()) {
        series.push_back({"peaks (upper)", ux, uy});
    }
    if (!lx.empty()) {
        series.push_back({"peaks (lower)", lx, ly});
    }
    p.svg = line_svg(series, {"Anticrossing fit", "epsilon / 2pi (MHz)", "frequency (GHz)"});
    return p;
}

using Handler = std::function<Products(const Context&)>;

const std::map<std::string, Handler>& handlers() {
    static const std::map<std::string, Handler> table{
        {"spectrum", cmd_spectrum},
        {"driven-spectrum", cmd_driven_spectrum},
        {"rabi-scan", cmd_rabi_scan},
        {"rabi-compare", cmd_rabi_compare},
        {"switch", cmd_switch},
        {"storage", cmd_storage},
        {"onoff-ratio", cmd_onoff_ratio},
        {"waveform", cmd_waveform},
        {"gap-curve", cmd_gap_curve},
        {"fit-anticrossing", cmd_fit_anticrossing},
    };
    return table;
}

bool wants(const RunOptions& o, const std::string& format) {
    return std::find(o.formats.begin(), o.formats.end(), format) != o.formats.end();
}

}  // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{
        "spectrum", "driven-spectrum", "rabi-scan", "rabi-compare", "switch",
        "storage",  "onoff-ratio",     "waveform",  "gap-curve",    "fit-anticrossing"};
    return names;
}

std::string csv_schemas() {
    return "CSV columns (header line first, 17 significant digits):\n"
           "  spectrum          epsilon_hz,probe_hz,population\n"
           "  driven-spectrum   lambda_z_hz,probe_hz,population\n"
           "  rabi-scan         lambda_z_hz,time_s,p_excited\n"
           "  rabi-compare      time_s,p_on,p_off,decay_envelope\n"
           "  switch            time_s,p_excited,photon_number\n"
           "  storage           time_s,p_excited,p_reference\n"
           "  onoff-ratio       lambda_z_hz,gap_hz,ratio,bessel_ratio\n"
           "  waveform          time_s,volts  (plus waveform.qswf)\n"
           "  gap-curve         volts,gap_ghz\n"
           "  fit-anticrossing  epsilon_hz,peak_hz,branch,model_hz\n"
           "Map outputs are in long form, one row per cell, x-major.\n";
}

RunReport run_command(const std::string& command, const RunConfig& config,
                      const RunOptions& options) {
    const auto it = handlers().find(command);
    if (it == handlers().end()) {
        throw ConfigError("unknown subcommand '" + command + "'");
    }
    const auto started = std::chrono::steady_clock::now();
    const Context ctx{config, options};
    Products products = it->second(ctx);

    std::error_code ec;
    std::filesystem::create_directories(options.out_dir, ec);
    if (ec) {
        throw IoError("cannot create output directory " + options.out_dir.string() + ": " +
                      ec.message());
    }
    RunReport report;
    json files = json::array();
    auto emit = [&](const std::string& name, const std::string& bytes) {
        const std::filesystem::path path = options.out_dir / name;
        write_file(path, bytes);
        report.files.push_back(path);
        files.push_back({{"name", name}, {"bytes", bytes.size()}, {"sha256", sha256_hex(bytes)}});
    };
    if (wants(options, "csv")) {
        emit(command + ".csv", format_csv(products.csv));
        for (const auto& [name, bytes] : products.extra) {
            emit(name, std::string(bytes.begin(), bytes.end()));
        }
    }
    if (wants(options, "json")) {
        json doc{{"command", command}};
        for (auto& [key, value] : products.summary.items()) {
            doc[key] = value;
        }
        emit(command + ".json", doc.dump(2) + "\n");
    }
    if (wants(options, "svg")) {
        emit(command + ".svg", products.svg);
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    json manifest{{"tool", "qswitch"},
                  {"version", kToolVersion},
                  {"command", command},
                  {"workers", options.workers},
                  {"wall_clock_seconds", seconds},
                  {"config", echo_config(config)},
                  {"files", files}};
    const std::filesystem::path manifest_path = options.out_dir / "manifest.json";
    write_file(manifest_path, manifest.dump(2) + "\n");
    report.files.push_back(manifest_path);
    ctx.log("done in " + std::to_string(seconds) + " s");
    return report;
}

int exit_code_for(const std::exception& error) {
    if (dynamic_cast<const ConfigError*>(&error) || dynamic_cast<const InvalidArgument*>(&error)) {
        return 2;
    }
    if (dynamic_cast<const IoError*>(&error)) {
        return 4;
    }
    return 3;
}

std::string error_json(const std::exception& error) {
    std::string type = "Error";
    if (dynamic_cast<const ConfigError*>(&error)) {
        type = "ConfigError";
    } else if (dynamic_cast<const DomainError*>(&error)) {
        type = "DomainError";
    } else if (dynamic_cast<const DimensionError*>(&error)) {
        type = "DimensionError";
    } else if (dynamic_cast<const InvalidArgument*>(&error)) {
        type = "InvalidArgument";
    } else if (dynamic_cast<const IoError*>(&error)) {
        type = "IoError";
    } else if (dynamic_cast<const ModeAmbiguityError*>(&error)) {
        type = "ModeAmbiguityError";
    } else if (dynamic_cast<const IntegratorError*>(&error)) {
        type = "IntegratorError";
    } else if (dynamic_cast<const ConvergenceError*>(&error)) {
        type = "ConvergenceError";
    } else if (dynamic_cast<const NumericalError*>(&error)) {
        type = "NumericalError";
    }
    json body{{"exit_code", exit_code_for(error)}, {"type", type}, {"message", error.what()}};
    if (const auto* ce = dynamic_cast<const ConfigError*>(&error); ce && ce->line() > 0) {
        body["line"] = ce->line();
    }
    if (const auto* cv = dynamic_cast<const ConvergenceError*>(&error)) {
        body["best_residual"] = number(cv->best_residual());
    }
    return json{{"error", body}}.dump();
}

}  // namespace qswitch::cli
