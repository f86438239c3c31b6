#pragma once

// Run configuration: a sectioned key = value text document.  Frequencies are
// written as ordinary frequencies with a unit suffix (Hz, kHz, MHz, GHz) and
// stored as angular frequencies, durations take ns, us, ms or s.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qswitch/dynamics.hpp"
#include "qswitch/model.hpp"
#include "qswitch/protocols.hpp"

namespace qswitch::cli {

struct Range {
    double start = 0.0;
    double stop = 0.0;
    std::size_t points = 2;

    bool operator==(const Range&) const = default;
};

struct RunConfig {
    /// Subcommand named in the file ([run] protocol); empty when absent.
    std::string protocol;

    /// Drive always present; lambda_z defaults to 0, wz to 2pi x 150 MHz.
    model::DeviceModel device;

    Range epsilon;      // rad/s
    Range probe;        // Hz
    Range lambda;       // rad/s
    double linewidth = 2e6;  // Hz

    double t_start = 0.0;  // s
    double t_end = 2e-6;
    std::size_t samples = 2001;
    double max_step = 0.0;  // 0 means automatic
    dynamics::IntegratorOptions integrator;
    bool dissipative = true;

    dynamics::GapModel gap_model = dynamics::GapModel::driven_jc;

    std::optional<double> lambda_off;  // rad/s; empty means searched numerically
    double switch_before = 0.0;        // s, coupling on before the pause
    double switch_off = 1e-6;
    double switch_after = 1e-6;
    double phase_offset = 0.0;  // rad
    protocols::Preparation preparation = protocols::Preparation::qubit_excited;
    double sample_step = 1e-9;  // s, switch and storage traces

    double storage_off = 1.5e-6;
    double storage_after = 0.5e-6;

    std::array<double, 4> coefficients{0.2287, -2.758, 11.14, -15.27};
    double domain_lo = 2e9;  // Hz
    double domain_hi = 5e9;  // Hz
    double gain = 1.0;
    double marker = 2.417e9;  // Hz
    std::optional<double> v_start;  // V; empty means the map range
    std::optional<double> v_stop;
    std::size_t v_points = 226;
    double sample_rate = 2.4e9;  // samples / s
    double duration = 100e-9;    // s

    std::string peaks_file;  // empty means synthetic peaks
    double noise = 0.0;      // Hz
    std::uint64_t seed = 1;
    std::optional<double> wr_seed;  // rad/s

    std::string out_dir;  // empty means unset
    std::vector<std::string> formats{"csv", "json", "svg"};

    RunConfig();
    bool operator==(const RunConfig&) const = default;
};

/// Throws ConfigError naming the offending line.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical text of every resolved value; parse_config(echo_config(c)) == c.
std::string echo_config(const RunConfig& config);

/// Help text listing sections, keys, units and defaults.
std::string config_reference();

}  // namespace qswitch::cli
