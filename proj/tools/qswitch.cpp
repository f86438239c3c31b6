// qswitch: run one simulation or calibration protocol from a config file.

#include <cstdlib>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qswitch/cli/commands.hpp"
#include "qswitch/cli/config.hpp"
#include "qswitch/errors.hpp"

namespace {

std::vector<std::string> split_formats(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    std::set<std::string> seen;
    while (std::getline(ss, item, ',')) {
        if (item != "csv" && item != "json" && item != "svg") {
            throw qswitch::ConfigError("--format accepts csv, json and svg, got '" + item + "'");
        }
        if (!seen.insert(item).second) {
            throw qswitch::ConfigError("--format lists '" + item + "' twice");
        }
        out.push_back(item);
    }
    if (out.empty()) {
        throw qswitch::ConfigError("--format must name at least one format");
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    namespace qc = qswitch::cli;
    CLI::App app{"Longitudinally driven qubit-resonator switch: simulation and calibration"};
    std::string command;
    std::string config_path;
    std::string out_dir;
    std::string formats;
    std::size_t workers = 1;
    bool verbose = false;
    std::string names;
    for (const std::string& n : qc::command_names()) {
        names += (names.empty() ? "" : ", ") + n;
    }
    app.add_option("command", command, "one of: " + names + " (default: [run] protocol)");
    app.add_option("--config", config_path, "configuration file")->required();
    app.add_option("--out", out_dir, "output directory (QSWITCH_OUT overrides)");
    app.add_option("--format", formats, "comma-separated subset of csv,json,svg");
    app.add_option("--workers", workers, "worker threads for sweeps")->check(CLI::Range(1, 256));
    app.add_flag("--verbose", verbose, "progress messages on stderr");
    app.footer(qc::csv_schemas() + "\nConfiguration keys:\n" + qc::config_reference() +
               "\nExit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O.\n");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << qc::error_json(qswitch::ConfigError(e.what())) << '\n';
        return 2;
    }

    try {
        const qc::RunConfig config = qc::load_config(config_path);
        if (command.empty()) {
            command = config.protocol;
        }
        if (command.empty()) {
            throw qswitch::ConfigError("no subcommand given and no [run] protocol in the config");
        }
        if (!config.protocol.empty() && config.protocol != command) {
            throw qswitch::ConfigError("subcommand '" + command + "' conflicts with [run] protocol '" +
                                       config.protocol + "'");
        }
        qc::RunOptions options;
        options.workers = workers;
        options.formats = formats.empty() ? config.formats : split_formats(formats);
        if (const char* env = std::getenv("QSWITCH_OUT"); env && *env) {
            options.out_dir = env;
        } else if (!out_dir.empty()) {
            options.out_dir = out_dir;
        } else if (!config.out_dir.empty()) {
            options.out_dir = config.out_dir;
        }
        if (verbose) {
            options.log = &std::cerr;
        }
        qc::run_command(command, config, options);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << qc::error_json(e) << '\n';
        return qc::exit_code_for(e);
    }
}
