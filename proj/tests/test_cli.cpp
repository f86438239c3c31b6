#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>
#include "json.hpp"

#include "qswitch/cli/commands.hpp"
#include "qswitch/cli/config.hpp"
#include "qswitch/cli/output.hpp"
#include "qswitch/errors.hpp"

using namespace qswitch;
using namespace qswitch::cli;
using nlohmann::json;

namespace {

const char* kMinimal = R"(
[device]
delta = 2.417GHz
wr = 2.417GHz
g = 9.14MHz
)";

const char* kTiny = R"(
[device]
delta = 2.417GHz
wr = 2.417GHz
g = 9.14MHz
t1_qubit = 0.45us
t1_resonator = 4.6us
fock_cutoff = 3
[drive]
wz = 150MHz
[sweep]
epsilon_points = 5
probe_points = 9
lambda_points = 3
[grid]
t_end = 20ns
samples = 11
[switch]
lambda_off = 180.0376MHz
t_off = 10ns
t_after = 10ns
[storage]
t_off = 10ns
t_after = 10ns
[calibration]
v_points = 5
[waveform]
duration = 5ns
)";

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("qswitch_cli_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

std::size_t config_error_line(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.line();
    }
    return 0;
}

}  // namespace

TEST(Config, MinimalDocument) {
    const RunConfig c = parse_config(kMinimal);
    EXPECT_DOUBLE_EQ(c.device.qubit.gap, model::angular(2.417e9));
    EXPECT_DOUBLE_EQ(c.device.coupling.g, model::angular(9.14e6));
    ASSERT_TRUE(c.device.drive);
    EXPECT_DOUBLE_EQ(c.device.drive->frequency, model::angular(150e6));
    EXPECT_EQ(c.device.drive->amplitude, 0.0);
    EXPECT_TRUE(std::isinf(c.device.qubit_t1));
    EXPECT_EQ(c.samples, 2001u);
}

TEST(Config, UnitsAreCaseStrict) {
    EXPECT_EQ(config_error_line(std::string(kMinimal) + "[drive]\nwz = 150 Mhz\n"), 7u);
    EXPECT_NO_THROW(parse_config(std::string(kMinimal) + "[drive]\nwz = 150 MHz\n"));
    EXPECT_EQ(config_error_line(std::string(kMinimal) + "[grid]\nt_end = 2 US\n"), 7u);
}

TEST(Config, ErrorsNameTheLine) {
    EXPECT_EQ(config_error_line(std::string(kMinimal) + "g = 1MHz\n"), 6u);
    EXPECT_EQ(config_error_line(std::string(kMinimal) + "bogus = 1\n"), 6u);
    EXPECT_EQ(config_error_line(std::string(kMinimal) + "[nowhere]\n"), 6u);
    EXPECT_EQ(config_error_line(std::string(kMinimal) + "no equals sign\n"), 6u);
    EXPECT_THROW(parse_config("[device]\ndelta = 2GHz\n"), ConfigError);
    try {
        parse_config(std::string(kMinimal) + "[drive]\nwz = 150 Mhz\n");
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("line 7"), std::string::npos);
    }
}

TEST(Config, EchoRoundTrip) {
    for (const char* text : {kMinimal, kTiny}) {
        const RunConfig c = parse_config(text);
        EXPECT_EQ(parse_config(echo_config(c)), c);
        EXPECT_EQ(echo_config(parse_config(echo_config(c))), echo_config(c));
    }
}

TEST(Config, MissingFile) {
    EXPECT_THROW(load_config("/nonexistent/qswitch.cfg"), IoError);
}

TEST(Svg, TwoPointSegmentCoordinates) {
    const std::string svg = line_svg({{"s", {0.0, 1.0}, {0.0, 1.0}}}, {"t", "x", "y"});
    EXPECT_NE(svg.find("80.00,420.00"), std::string::npos);
    EXPECT_NE(svg.find("690.00,40.00"), std::string::npos);
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
}

TEST(Svg, FlatSeriesIsCentred) {
    const std::string svg = line_svg({{"s", {0.0, 1.0}, {3.0, 3.0}}}, {"t", "x", "y"});
    EXPECT_NE(svg.find("80.00,230.00"), std::string::npos);
}

TEST(Svg, HeatmapColours) {
    Eigen::MatrixXd v(2, 2);
    v << 0.0, 1.0, 2.0, 3.0;
    const std::string svg = heatmap_svg({0.0, 1.0}, {0.0, 1.0}, v, {"t", "x", "y"});
    EXPECT_NE(svg.find("rgb(0,0,255)"), std::string::npos);
    EXPECT_NE(svg.find("rgb(85,0,170)"), std::string::npos);
    EXPECT_NE(svg.find("rgb(170,0,85)"), std::string::npos);
    EXPECT_NE(svg.find("rgb(255,0,0)"), std::string::npos);
    EXPECT_EQ(color_index(0.0, 0.0, 3.0), 0);
    EXPECT_EQ(color_index(3.0, 0.0, 3.0), 255);
    EXPECT_EQ(color_index(1.5, 0.0, 3.0), 128);
}

TEST(Svg, RejectsBadData) {
    EXPECT_THROW(line_svg({{"s", {0.0, 1.0}, {0.0, NAN}}}, {}), InvalidArgument);
    EXPECT_THROW(line_svg({}, {}), InvalidArgument);
    EXPECT_THROW(line_svg({{"s", {0.0, 1.0}, {0.0}}}, {}), InvalidArgument);
    Eigen::MatrixXd v(1, 2);
    v << 0.0, INFINITY;
    EXPECT_THROW(heatmap_svg({0.0, 1.0}, {0.0}, v, {}), InvalidArgument);
}

TEST(Csv, SeventeenDigits) {
    const std::string csv = format_csv({{"a", {0.1, 1.0 / 3.0}}, {"b", {1e-300, -2.5}}});
    std::istringstream in(csv);
    std::string header, row;
    std::getline(in, header);
    EXPECT_EQ(header, "a,b");
    std::getline(in, row);
    EXPECT_EQ(std::stod(row.substr(0, row.find(','))), 0.1);
    std::getline(in, row);
    EXPECT_EQ(std::stod(row.substr(0, row.find(','))), 1.0 / 3.0);
    EXPECT_NE(row.find("0.33333333333333331"), std::string::npos);
    EXPECT_THROW(format_csv({{"a", {1.0}}, {"b", {}}}), InvalidArgument);
}

TEST(Digest, Sha256KnownVector) {
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Errors, ExitCodesAndJson) {
    EXPECT_EQ(exit_code_for(ConfigError("x", 3)), 2);
    EXPECT_EQ(exit_code_for(DomainError("x")), 2);
    EXPECT_EQ(exit_code_for(IntegratorError("x")), 3);
    EXPECT_EQ(exit_code_for(ConvergenceError("x", 0.5)), 3);
    EXPECT_EQ(exit_code_for(IoError("x")), 4);
    const json a = json::parse(error_json(ConfigError("bad unit", 7)));
    EXPECT_EQ(a["error"]["exit_code"], 2);
    EXPECT_EQ(a["error"]["type"], "ConfigError");
    EXPECT_EQ(a["error"]["line"], 7);
    const json b = json::parse(error_json(ConvergenceError("stuck", 0.25)));
    EXPECT_EQ(b["error"]["best_residual"], 0.25);
    EXPECT_EQ(b["error"]["exit_code"], 3);
}

TEST(Commands, UnknownSubcommand) {
    EXPECT_THROW(run_command("nope", parse_config(kTiny), {scratch_dir("nope")}), ConfigError);
}

TEST(Commands, DeterministicOutputs) {
    const RunConfig c = parse_config(kTiny);
    for (const std::string cmd : {"spectrum", "rabi-compare", "waveform", "gap-curve"}) {
        const auto d1 = scratch_dir(cmd + "_1"), d2 = scratch_dir(cmd + "_2");
        const RunReport r1 = run_command(cmd, c, {d1});
        const RunReport r2 = run_command(cmd, c, {d2});
        ASSERT_EQ(r1.files.size(), r2.files.size());
        EXPECT_EQ(r1.files.back().filename(), "manifest.json");
        for (std::size_t i = 0; i + 1 < r1.files.size(); ++i) {
            EXPECT_EQ(slurp(r1.files[i]), slurp(r2.files[i])) << r1.files[i];
        }
        const json m = json::parse(slurp(r1.files.back()));
        EXPECT_EQ(m["command"], cmd);
        EXPECT_EQ(m["files"].size(), r1.files.size() - 1);
        EXPECT_EQ(m["files"][0]["sha256"], sha256_hex(slurp(r1.files[0])));
        std::filesystem::remove_all(d1);
        std::filesystem::remove_all(d2);
    }
}

TEST(Commands, FormatSelection) {
    const auto dir = scratch_dir("formats");
    const RunReport r = run_command("gap-curve", parse_config(kTiny), {dir, {"json"}});
    ASSERT_EQ(r.files.size(), 2u);
    EXPECT_EQ(r.files[0].filename(), "gap-curve.json");
    const json j = json::parse(slurp(r.files[0]));
    EXPECT_DOUBLE_EQ(j["marker_ghz"].get<double>(), 2.417);
    std::filesystem::remove_all(dir);
}

TEST(Commands, WaveformWithoutDriveIsConstant) {
    const auto dir = scratch_dir("waveform");
    const RunReport r = run_command("waveform", parse_config(kTiny), {dir, {"csv"}});
    const auto qswf = dir / "waveform.qswf";
    ASSERT_TRUE(std::filesystem::exists(qswf));
    std::istringstream in(slurp(dir / "waveform.csv"));
    std::string row;
    std::getline(in, row);
    std::set<std::string> volts;
    while (std::getline(in, row)) {
        volts.insert(row.substr(row.find(',') + 1));
    }
    EXPECT_EQ(volts.size(), 1u);
    std::filesystem::remove_all(dir);
}

TEST(Commands, UnmeasurableValuesAreNullWithReason) {
    const auto dir = scratch_dir("nulls");
    run_command("rabi-compare", parse_config(kTiny), {dir, {"json"}});
    const json j = json::parse(slurp(dir / "rabi-compare.json"));
    EXPECT_TRUE(j["on_frequency_hz"].is_null());
    EXPECT_EQ(j["on_frequency_hz_reason"], "fewer than 16 samples");
    std::filesystem::remove_all(dir);
}

TEST(Commands, UnwritableDirectory) {
    const auto blocker = scratch_dir("blocker");
    { std::ofstream(blocker) << "file"; }
    EXPECT_THROW(run_command("gap-curve", parse_config(kTiny), {blocker / "sub"}), IoError);
    std::filesystem::remove(blocker);
}
