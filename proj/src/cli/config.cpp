#include "qswitch/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "qswitch/errors.hpp"
#include "qswitch/format.hpp"

namespace qswitch::cli {

namespace {

using model::kInfinity;
using model::kTwoPi;

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

struct Value {
    std::string_view text;
    std::size_t line = 0;
};

[[noreturn]] void fail(const Value& v, const std::string& what) {
    throw ConfigError(what + " (got '" + std::string(v.text) + "')", v.line);
}

// Leading number plus the trimmed remainder.
std::pair<double, std::string_view> split_number(const Value& v) {
    double x = 0.0;
    const char* begin = v.text.data();
    const char* end = begin + v.text.size();
    const auto [ptr, ec] = std::from_chars(begin, end, x);
    if (ec != std::errc() || ptr == begin) {
        fail(v, "expected a number");
    }
    if (!std::isfinite(x)) {
        fail(v, "value must be finite");
    }
    return {x, trim(std::string_view(ptr, static_cast<std::size_t>(end - ptr)))};
}

double parse_real(const Value& v) {
    const auto [x, rest] = split_number(v);
    if (!rest.empty()) {
        fail(v, "unexpected text after number");
    }
    return x;
}

/// Ordinary frequency in Hz.
double parse_hz(const Value& v) {
    const auto [x, unit] = split_number(v);
    static const std::map<std::string_view, double> units{
        {"Hz", 1.0}, {"kHz", 1e3}, {"MHz", 1e6}, {"GHz", 1e9}};
    const auto it = units.find(unit);
    if (it == units.end()) {
        fail(v, unit.empty() ? "frequency needs a unit suffix (Hz, kHz, MHz, GHz)"
                             : "unknown frequency unit '" + std::string(unit) +
                                   "' (accepted: Hz, kHz, MHz, GHz)");
    }
    return x * it->second;
}

double parse_angular(const Value& v) { return model::angular(parse_hz(v)); }

double parse_seconds(const Value& v) {
    const auto [x, unit] = split_number(v);
    static const std::map<std::string_view, double> units{
        {"ns", 1e-9}, {"us", 1e-6}, {"ms", 1e-3}, {"s", 1.0}};
    const auto it = units.find(unit);
    if (it == units.end()) {
        fail(v, unit.empty() ? "duration needs a unit suffix (ns, us, ms, s)"
                             : "unknown time unit '" + std::string(unit) +
                                   "' (accepted: ns, us, ms, s)");
    }
    return x * it->second;
}

std::uint64_t parse_unsigned(const Value& v) {
    std::uint64_t x = 0;
    const char* begin = v.text.data();
    const char* end = begin + v.text.size();
    const auto [ptr, ec] = std::from_chars(begin, end, x);
    if (ec != std::errc() || ptr != end) {
        fail(v, "expected a non-negative integer");
    }
    return x;
}

bool parse_bool(const Value& v) {
    if (v.text == "true") {
        return true;
    }
    if (v.text == "false") {
        return false;
    }
    fail(v, "expected true or false");
}

// Hz text whose angular conversion reproduces w exactly.
std::string echo_angular(double w) {
    double f = model::hertz(w);
    for (int k = 0; k < 8 && model::angular(f) != w; ++k) {
        const double up = std::nextafter(f, kInfinity);
        const double down = std::nextafter(f, -kInfinity);
        f = std::abs(model::angular(up) - w) < std::abs(model::angular(down) - w) ? up : down;
    }
    return format_double(f) + "Hz";
}

std::string echo_hz(double f) { return format_double(f) + "Hz"; }
std::string echo_seconds(double t) { return std::isinf(t) ? "inf" : format_double(t) + "s"; }
std::string echo_bool(bool b) { return b ? "true" : "false"; }

struct Entry {
    std::string section;
    std::string key;
    std::string help;
    std::function<void(RunConfig&, const Value&)> set;
    std::function<std::string(const RunConfig&)> get;  // empty result = omit
    bool required = false;
};

model::DriveParams& drive(RunConfig& c) { return *c.device.drive; }
const model::DriveParams& drive(const RunConfig& c) { return *c.device.drive; }

const std::vector<Entry>& entries() {
    static const std::vector<Entry> table = [] {
        std::vector<Entry> t;
        auto add = [&t](Entry e) { t.push_back(std::move(e)); };

        add({"run", "protocol", "subcommand to run when none is given on the command line",
             [](RunConfig& c, const Value& v) { c.protocol = std::string(v.text); },
             [](const RunConfig& c) { return c.protocol; }});

        add({"device", "delta", "qubit gap (required)",
             [](RunConfig& c, const Value& v) { c.device.qubit.gap = parse_angular(v); },
             [](const RunConfig& c) { return echo_angular(c.device.qubit.gap); }, true});
        add({"device", "epsilon", "qubit bias, default 0Hz",
             [](RunConfig& c, const Value& v) { c.device.qubit.epsilon = parse_angular(v); },
             [](const RunConfig& c) { return echo_angular(c.device.qubit.epsilon); }});
        add({"device", "wr", "resonator frequency (required)",
             [](RunConfig& c, const Value& v) { c.device.resonator.frequency = parse_angular(v); },
             [](const RunConfig& c) { return echo_angular(c.device.resonator.frequency); }, true});
        add({"device", "g", "coupling strength (required)",
             [](RunConfig& c, const Value& v) { c.device.coupling.g = parse_angular(v); },
             [](const RunConfig& c) { return echo_angular(c.device.coupling.g); }, true});
        add({"device", "t1_qubit", "qubit relaxation time or inf, default inf",
             [](RunConfig& c, const Value& v) {
                 c.device.qubit_t1 = v.text == "inf" ? kInfinity : parse_seconds(v);
             },
             [](const RunConfig& c) { return echo_seconds(c.device.qubit_t1); }});
        add({"device", "t1_resonator", "resonator relaxation time or inf, default inf",
             [](RunConfig& c, const Value& v) {
                 c.device.resonator_t1 = v.text == "inf" ? kInfinity : parse_seconds(v);
             },
             [](const RunConfig& c) { return echo_seconds(c.device.resonator_t1); }});
        add({"device", "fock_cutoff", "resonator levels kept, default 5",
             [](RunConfig& c, const Value& v) { c.device.fock_cutoff = parse_unsigned(v); },
             [](const RunConfig& c) { return std::to_string(c.device.fock_cutoff); }});

        add({"drive", "wz", "longitudinal drive frequency, default 150MHz",
             [](RunConfig& c, const Value& v) { drive(c).frequency = parse_angular(v); },
             [](const RunConfig& c) { return echo_angular(drive(c).frequency); }});
        add({"drive", "lambda_z", "drive amplitude, default 0Hz",
             [](RunConfig& c, const Value& v) { drive(c).amplitude = parse_angular(v); },
             [](const RunConfig& c) { return echo_angular(drive(c).amplitude); }});
        add({"drive", "phase", "drive phase in rad, default 0",
             [](RunConfig& c, const Value& v) { drive(c).phase = parse_real(v); },
             [](const RunConfig& c) { return format_double(drive(c).phase); }});

        auto range = [&add](const char* prefix, Range RunConfig::*member, bool angular_units,
                            const char* help_start, const char* help_stop,
                            const char* help_points) {
            const std::string p(prefix);
            const std::string k_start = p + "_start";
            const std::string k_stop = p + "_stop";
            const std::string k_points = p + "_points";
            auto parse = [angular_units](const Value& v) {
                return angular_units ? parse_angular(v) : parse_hz(v);
            };
            auto echo = [angular_units](double x) {
                return angular_units ? echo_angular(x) : echo_hz(x);
            };
            add({"sweep", k_start, help_start,
                 [member, parse](RunConfig& c, const Value& v) { (c.*member).start = parse(v); },
                 [member, echo](const RunConfig& c) { return echo((c.*member).start); }});
            add({"sweep", k_stop, help_stop,
                 [member, parse](RunConfig& c, const Value& v) { (c.*member).stop = parse(v); },
                 [member, echo](const RunConfig& c) { return echo((c.*member).stop); }});
            add({"sweep", k_points, help_points,
                 [member](RunConfig& c, const Value& v) { (c.*member).points = parse_unsigned(v); },
                 [member](const RunConfig& c) { return std::to_string((c.*member).points); }});
        };
        range("epsilon", &RunConfig::epsilon, true, "epsilon sweep start, default -1GHz",
              "epsilon sweep stop, default 1GHz", "epsilon sweep points, default 101");
        range("probe", &RunConfig::probe, false, "probe sweep start, default 2.35GHz",
              "probe sweep stop, default 2.5GHz", "probe sweep points, default 301");
        range("lambda", &RunConfig::lambda, true, "lambda_z sweep start, default 0Hz",
              "lambda_z sweep stop, default 240MHz", "lambda_z sweep points, default 33");
        add({"sweep", "linewidth", "spectral line FWHM, default 2MHz",
             [](RunConfig& c, const Value& v) { c.linewidth = parse_hz(v); },
             [](const RunConfig& c) { return echo_hz(c.linewidth); }});

        add({"grid", "t_start", "first sample time, default 0s",
             [](RunConfig& c, const Value& v) { c.t_start = parse_seconds(v); },
             [](const RunConfig& c) { return echo_seconds(c.t_start); }});
        add({"grid", "t_end", "last sample time, default 2us",
             [](RunConfig& c, const Value& v) { c.t_end = parse_seconds(v); },
             [](const RunConfig& c) { return echo_seconds(c.t_end); }});
        add({"grid", "samples", "number of samples, default 2001",
             [](RunConfig& c, const Value& v) { c.samples = parse_unsigned(v); },
             [](const RunConfig& c) { return std::to_string(c.samples); }});
        add({"grid", "max_step", "integrator substep cap or auto, default auto",
             [](RunConfig& c, const Value& v) {
                 c.max_step = v.text == "auto" ? 0.0 : parse_seconds(v);
             },
             [](const RunConfig& c) {
                 return c.max_step == 0.0 ? std::string("auto") : echo_seconds(c.max_step);
             }});
        add({"grid", "macro_step", "Lindblad split step and propagator cache stride, default 0.05ns",
             [](RunConfig& c, const Value& v) { c.integrator.macro_step = parse_seconds(v); },
             [](const RunConfig& c) { return echo_seconds(c.integrator.macro_step); }});
        add({"grid", "min_substeps", "substeps per drive period at least, default 512",
             [](RunConfig& c, const Value& v) {
                 c.integrator.min_substeps_per_period = parse_unsigned(v);
             },
             [](const RunConfig& c) {
                 return std::to_string(c.integrator.min_substeps_per_period);
             }});
        add({"grid", "dissipative", "Lindblad (true) or unitary (false) evolution, default true",
             [](RunConfig& c, const Value& v) { c.dissipative = parse_bool(v); },
             [](const RunConfig& c) { return echo_bool(c.dissipative); }});

        add({"floquet", "gap_model", "driven_jc or lab, default driven_jc",
             [](RunConfig& c, const Value& v) {
                 if (v.text == "driven_jc") {
                     c.gap_model = dynamics::GapModel::driven_jc;
                 } else if (v.text == "lab") {
                     c.gap_model = dynamics::GapModel::lab;
                 } else {
                     fail(v, "expected driven_jc or lab");
                 }
             },
             [](const RunConfig& c) {
                 return std::string(c.gap_model == dynamics::GapModel::lab ? "lab" : "driven_jc");
             }});

        add({"switch", "lambda_off", "switch-off amplitude or auto (numerical search), default auto",
             [](RunConfig& c, const Value& v) {
                 if (v.text == "auto") {
                     c.lambda_off.reset();
                 } else {
                     c.lambda_off = parse_angular(v);
                 }
             },
             [](const RunConfig& c) {
                 return c.lambda_off ? echo_angular(*c.lambda_off) : std::string("auto");
             }});
        add({"switch", "t_before", "coupling-on time before the pause, default 0s",
             [](RunConfig& c, const Value& v) { c.switch_before = parse_seconds(v); },
             [](const RunConfig& c) { return echo_seconds(c.switch_before); }});
        add({"switch", "t_off", "pause length, default 1us",
             [](RunConfig& c, const Value& v) { c.switch_off = parse_seconds(v); },
             [](const RunConfig& c) { return echo_seconds(c.switch_off); }});
        add({"switch", "t_after", "coupling-on time after the pause, default 1us",
             [](RunConfig& c, const Value& v) { c.switch_after = parse_seconds(v); },
             [](const RunConfig& c) { return echo_seconds(c.switch_after); }});
        add({"switch", "phase_offset", "extra drive phase at each on-edge in rad, default 0",
             [](RunConfig& c, const Value& v) { c.phase_offset = parse_real(v); },
             [](const RunConfig& c) { return format_double(c.phase_offset); }});
        add({"switch", "preparation", "excited or half_swap, default excited",
             [](RunConfig& c, const Value& v) {
                 if (v.text == "excited") {
                     c.preparation = protocols::Preparation::qubit_excited;
                 } else if (v.text == "half_swap") {
                     c.preparation = protocols::Preparation::entangled_half_swap;
                 } else {
                     fail(v, "expected excited or half_swap");
                 }
             },
             [](const RunConfig& c) {
                 return std::string(c.preparation == protocols::Preparation::entangled_half_swap
                                        ? "half_swap"
                                        : "excited");
             }});
        add({"switch", "sample_step", "sample spacing of switch and storage traces, default 1ns",
             [](RunConfig& c, const Value& v) { c.sample_step = parse_seconds(v); },
             [](const RunConfig& c) { return echo_seconds(c.sample_step); }});

        add({"storage", "t_off", "storage time, default 1.5us",
             [](RunConfig& c, const Value& v) { c.storage_off = parse_seconds(v); },
             [](const RunConfig& c) { return echo_seconds(c.storage_off); }});
        add({"storage", "t_after", "observation time after switch-on, default 0.5us",
             [](RunConfig& c, const Value& v) { c.storage_after = parse_seconds(v); },
             [](const RunConfig& c) { return echo_seconds(c.storage_after); }});

        static const char* coefficient_keys[] = {"c3", "c2", "c1", "c0"};
        for (std::size_t i = 0; i < 4; ++i) {
            add({"calibration", coefficient_keys[i],
                 "cubic map coefficient in V / GHz^k, default from the reference map",
                 [i](RunConfig& c, const Value& v) { c.coefficients[i] = parse_real(v); },
                 [i](const RunConfig& c) { return format_double(c.coefficients[i]); }});
        }
        add({"calibration", "domain_lo", "map domain start, default 2GHz",
             [](RunConfig& c, const Value& v) { c.domain_lo = parse_hz(v); },
             [](const RunConfig& c) { return echo_hz(c.domain_lo); }});
        add({"calibration", "domain_hi", "map domain end, default 5GHz",
             [](RunConfig& c, const Value& v) { c.domain_hi = parse_hz(v); },
             [](const RunConfig& c) { return echo_hz(c.domain_hi); }});
        add({"calibration", "gain", "attenuator chain gain applied to samples, default 1",
             [](RunConfig& c, const Value& v) { c.gain = parse_real(v); },
             [](const RunConfig& c) { return format_double(c.gain); }});
        add({"calibration", "marker", "gap marked on the tuning curve, default 2.417GHz",
             [](RunConfig& c, const Value& v) { c.marker = parse_hz(v); },
             [](const RunConfig& c) { return echo_hz(c.marker); }});
        add({"calibration", "v_start", "tuning-curve voltage start or auto, default auto",
             [](RunConfig& c, const Value& v) {
                 if (v.text == "auto") {
                     c.v_start.reset();
                 } else {
                     c.v_start = parse_real(v);
                 }
             },
             [](const RunConfig& c) {
                 return c.v_start ? format_double(*c.v_start) : std::string("auto");
             }});
        add({"calibration", "v_stop", "tuning-curve voltage stop or auto, default auto",
             [](RunConfig& c, const Value& v) {
                 if (v.text == "auto") {
                     c.v_stop.reset();
                 } else {
                     c.v_stop = parse_real(v);
                 }
             },
             [](const RunConfig& c) {
                 return c.v_stop ? format_double(*c.v_stop) : std::string("auto");
             }});
        add({"calibration", "v_points", "tuning-curve points, default 226",
             [](RunConfig& c, const Value& v) { c.v_points = parse_unsigned(v); },
             [](const RunConfig& c) { return std::to_string(c.v_points); }});

        add({"waveform", "sample_rate", "generator sample rate, default 2.4GHz",
             [](RunConfig& c, const Value& v) { c.sample_rate = parse_hz(v); },
             [](const RunConfig& c) { return echo_hz(c.sample_rate); }});
        add({"waveform", "duration", "waveform length, default 100ns",
             [](RunConfig& c, const Value& v) { c.duration = parse_seconds(v); },
             [](const RunConfig& c) { return echo_seconds(c.duration); }});

        add({"fit", "peaks_file", "CSV of epsilon_hz,peak_hz rows; synthetic peaks when unset",
             [](RunConfig& c, const Value& v) { c.peaks_file = std::string(v.text); },
             [](const RunConfig& c) { return c.peaks_file; }});
        add({"fit", "noise", "Gaussian noise on synthetic peaks, default 0Hz",
             [](RunConfig& c, const Value& v) { c.noise = parse_hz(v); },
             [](const RunConfig& c) { return echo_hz(c.noise); }});
        add({"fit", "seed", "noise generator seed, default 1",
             [](RunConfig& c, const Value& v) { c.seed = parse_unsigned(v); },
             [](const RunConfig& c) { return std::to_string(c.seed); }});
        add({"fit", "wr_seed", "resonator seed or auto, default auto",
             [](RunConfig& c, const Value& v) {
                 if (v.text == "auto") {
                     c.wr_seed.reset();
                 } else {
                     c.wr_seed = parse_angular(v);
                 }
             },
             [](const RunConfig& c) {
                 return c.wr_seed ? echo_angular(*c.wr_seed) : std::string("auto");
             }});

        add({"output", "dir", "output directory, default out",
             [](RunConfig& c, const Value& v) { c.out_dir = std::string(v.text); },
             [](const RunConfig& c) { return c.out_dir; }});
        add({"output", "formats", "comma-separated subset of csv,json,svg",
             [](RunConfig& c, const Value& v) {
                 c.formats.clear();
                 std::string_view rest = v.text;
                 while (true) {
                     const auto comma = rest.find(',');
                     c.formats.emplace_back(trim(rest.substr(0, comma)));
                     if (comma == std::string_view::npos) {
                         break;
                     }
                     rest.remove_prefix(comma + 1);
                 }
             },
             [](const RunConfig& c) {
                 std::string s;
                 for (const std::string& f : c.formats) {
                     s += (s.empty() ? "" : ",") + f;
                 }
                 return s;
             }});
        return t;
    }();
    return table;
}

const std::set<std::string_view> kProtocols{
    "spectrum", "driven-spectrum", "rabi-scan", "rabi-compare", "switch",
    "storage",  "onoff-ratio",     "waveform",  "gap-curve",    "fit-anticrossing"};

void require(bool ok, const std::string& what, const std::map<std::string, std::size_t>& lines,
             const std::string& key) {
    if (!ok) {
        const auto it = lines.find(key);
        throw ConfigError(what, it == lines.end() ? 0 : it->second);
    }
}

void validate(const RunConfig& c, const std::map<std::string, std::size_t>& lines) {
    require(c.protocol.empty() || kProtocols.count(c.protocol) > 0,
            "unknown protocol '" + c.protocol + "'", lines, "run.protocol");
    require(c.device.qubit.gap > 0.0, "delta must be positive", lines, "device.delta");
    require(c.device.resonator.frequency > 0.0, "wr must be positive", lines, "device.wr");
    require(c.device.coupling.g > 0.0, "g must be positive", lines, "device.g");
    require(c.device.qubit_t1 > 0.0, "t1_qubit must be positive or inf", lines,
            "device.t1_qubit");
    require(c.device.resonator_t1 > 0.0, "t1_resonator must be positive or inf", lines,
            "device.t1_resonator");
    require(c.device.fock_cutoff >= 2 && c.device.fock_cutoff <= 64,
            "fock_cutoff must lie in [2, 64]", lines, "device.fock_cutoff");
    require(drive(c).frequency > 0.0, "wz must be positive", lines, "drive.wz");
    require(drive(c).amplitude >= 0.0, "lambda_z must be >= 0", lines, "drive.lambda_z");
    for (const auto& [name, r] : {std::pair<const char*, const Range&>{"epsilon", c.epsilon},
                                  {"probe", c.probe},
                                  {"lambda", c.lambda}}) {
        const std::string key = std::string("sweep.") + name;
        require(r.points >= 2, std::string(name) + "_points must be >= 2", lines, key + "_points");
        require(r.stop > r.start, std::string(name) + "_stop must exceed " + name + "_start",
                lines, key + "_stop");
    }
    require(c.probe.start > 0.0, "probe frequencies must be positive", lines,
            "sweep.probe_start");
    require(c.lambda.start >= 0.0, "lambda sweep must be >= 0", lines, "sweep.lambda_start");
    require(c.linewidth > 0.0, "linewidth must be positive", lines, "sweep.linewidth");
    require(c.t_end > c.t_start && c.t_start >= 0.0, "grid needs 0 <= t_start < t_end", lines,
            "grid.t_end");
    require(c.samples >= 2, "samples must be >= 2", lines, "grid.samples");
    require(c.max_step >= 0.0, "max_step must be positive", lines, "grid.max_step");
    require(c.integrator.macro_step > 0.0, "macro_step must be positive", lines,
            "grid.macro_step");
    require(c.integrator.min_substeps_per_period >= 8, "min_substeps must be >= 8", lines,
            "grid.min_substeps");
    require(!c.lambda_off || *c.lambda_off > 0.0, "lambda_off must be positive", lines,
            "switch.lambda_off");
    require(c.switch_before >= 0.0, "t_before must be >= 0", lines, "switch.t_before");
    require(c.switch_off > 0.0, "t_off must be positive", lines, "switch.t_off");
    require(c.switch_after >= 0.0, "t_after must be >= 0", lines, "switch.t_after");
    require(c.sample_step > 0.0, "sample_step must be positive", lines, "switch.sample_step");
    require(c.storage_off >= 0.0, "storage t_off must be >= 0", lines, "storage.t_off");
    require(c.storage_after > 0.0, "storage t_after must be positive", lines, "storage.t_after");
    require(c.domain_hi > c.domain_lo && c.domain_lo > 0.0, "map domain needs 0 < lo < hi", lines,
            "calibration.domain_hi");
    require(c.v_points >= 2, "v_points must be >= 2", lines, "calibration.v_points");
    require(c.sample_rate > 0.0, "sample_rate must be positive", lines, "waveform.sample_rate");
    require(c.duration > 0.0, "duration must be positive", lines, "waveform.duration");
    require(c.noise >= 0.0, "noise must be >= 0", lines, "fit.noise");
    require(!c.wr_seed || *c.wr_seed > 0.0, "wr_seed must be positive", lines, "fit.wr_seed");
    require(!c.formats.empty(), "formats must not be empty", lines, "output.formats");
    std::set<std::string> seen;
    for (const std::string& f : c.formats) {
        require(f == "csv" || f == "json" || f == "svg", "unknown output format '" + f + "'",
                lines, "output.formats");
        require(seen.insert(f).second, "duplicate output format '" + f + "'", lines,
                "output.formats");
    }
    try {
        c.device.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("device parameters: ") + e.what());
    }
}

}  // namespace

RunConfig::RunConfig() {
    device = model::reference_device();
    device.qubit_t1 = kInfinity;
    device.resonator_t1 = kInfinity;
    device.drive->amplitude = 0.0;
    epsilon = {model::angular(-1e9), model::angular(1e9), 101};
    probe = {2.35e9, 2.5e9, 301};
    lambda = {0.0, model::angular(240e6), 33};
}

RunConfig parse_config(std::string_view text) {
    std::map<std::string, const Entry*> by_name;
    std::set<std::string> sections;
    for (const Entry& e : entries()) {
        by_name[e.section + "." + e.key] = &e;
        sections.insert(e.section);
    }
    RunConfig config;
    std::map<std::string, std::size_t> lines;
    std::string section;
    std::size_t line_no = 0;
    while (!text.empty() || line_no == 0) {
        ++line_no;
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            if (text.empty()) {
                break;
            }
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("malformed section header", line_no);
            }
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (sections.count(section) == 0) {
                throw ConfigError("unknown section [" + section + "]", line_no);
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("expected key = value", line_no);
        }
        const std::string key(trim(line.substr(0, eq)));
        const std::string_view value = trim(line.substr(eq + 1));
        if (section.empty()) {
            throw ConfigError("key '" + key + "' appears before any section", line_no);
        }
        const std::string name = section + "." + key;
        const auto it = by_name.find(name);
        if (it == by_name.end()) {
            throw ConfigError("unknown key '" + key + "' in section [" + section + "]", line_no);
        }
        if (const auto [prev, inserted] = lines.emplace(name, line_no); !inserted) {
            throw ConfigError("duplicate key '" + key + "' (first set on line " +
                                  std::to_string(prev->second) + ")",
                              line_no);
        }
        if (value.empty()) {
            throw ConfigError("key '" + key + "' has no value", line_no);
        }
        it->second->set(config, Value{value, line_no});
    }
    for (const Entry& e : entries()) {
        if (e.required && lines.count(e.section + "." + e.key) == 0) {
            throw ConfigError("missing required key '" + e.key + "' in section [" + e.section +
                              "]");
        }
    }
    validate(config, lines);
    return config;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw IoError("cannot read config file " + path.string());
    }
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_config(buf.str());
}

std::string echo_config(const RunConfig& config) {
    std::ostringstream out;
    std::string section;
    for (const Entry& e : entries()) {
        const std::string value = e.get(config);
        if (value.empty()) {
            continue;
        }
        if (section != e.section) {
            section = e.section;
            out << (out.tellp() > 0 ? "\n" : "") << '[' << section << "]\n";
        }
        out << e.key << " = " << value << '\n';
    }
    return out.str();
}

std::string config_reference() {
    std::ostringstream out;
    std::string section;
    for (const Entry& e : entries()) {
        if (section != e.section) {
            section = e.section;
            out << "  [" << section << "]\n";
        }
        out << "    " << e.key << ": " << e.help << '\n';
    }
    return out.str();
}

}  // namespace qswitch::cli
