// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qswitch/calibration.hpp"
#include "qswitch/cli/commands.hpp"
#include "qswitch/cli/config.hpp"
#include "qswitch/dynamics.hpp"
#include "qswitch/errors.hpp"
#include "qswitch/protocols.hpp"

using namespace qswitch;
using model::angular;
using model::DeviceModel;
using model::hertz;

namespace {

constexpr double kTwoGHz = 18.28e6;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Invariants gathered from every evolution of the run.
struct Hygiene {
    double norm = 0.0;
    double trace = 0.0;
    double hermiticity = 0.0;
    double min_eigenvalue = 1.0;
    int runs = 0;

    void add(const dynamics::EvolutionResult& r) {
        norm = std::max(norm, r.diagnostics.max_norm_error);
        trace = std::max(trace, r.diagnostics.max_trace_error);
        hermiticity = std::max(hermiticity, r.diagnostics.max_hermiticity_error);
        min_eigenvalue = std::min(min_eigenvalue, r.diagnostics.min_eigenvalue);
        ++runs;
    }
};

Hygiene hygiene;

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
        return INFINITY;
    }
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d = std::max(d, std::abs(a[i] - b[i]));
    }
    return d;
}

double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

struct Variant {
    std::size_t fock = 5;
    bool halved = false;
};

dynamics::IntegratorOptions integrator(const Variant& v) {
    dynamics::IntegratorOptions o;
    if (v.halved) {
        o.macro_step *= 0.5;
    }
    return o;
}

double step(const DeviceModel& widest, const Variant& v) {
    return dynamics::default_max_step(widest) * (v.halved ? 0.5 : 1.0);
}

DeviceModel device(const Variant& v, bool dissipative = true) {
    DeviceModel m = model::reference_device();
    m.fock_cutoff = v.fock;
    if (!dissipative) {
        m.qubit_t1 = model::kInfinity;
        m.resonator_t1 = model::kInfinity;
    }
    return m;
}

// 1
struct RabiRun {
    dynamics::EvolutionResult trace;
    std::optional<double> frequency;
};

RabiRun vacuum_rabi(const Variant& v) {
    const DeviceModel m = device(v, false);
    const dynamics::TimeGrid g{0.0, 2e-6, 4001, step(m, v)};
    const auto psi = protocols::prepare_state(protocols::Preparation::qubit_excited, m.layout());
    RabiRun r{dynamics::evolve_unitary(dynamics::lab_hamiltonian(m), psi, g, integrator(v)), {}};
    hygiene.add(r.trace);
    r.frequency = protocols::extract_frequency(r.trace.excited_population, r.trace.times).frequency;
    return r;
}

// 2
std::vector<double> bessel_gaps(const Variant& v, std::vector<double>& ratios) {
    const DeviceModel m = device(v);
    std::vector<double> gaps;
    ratios.clear();
    for (int i = 0; i < 40; ++i) {
        const double x = 1.6 * i / 39.0;
        ratios.push_back(x);
        gaps.push_back(
            dynamics::quasienergy_gap(m.with_drive_amplitude(x * m.drive->frequency)).gap);
    }
    return gaps;
}

// 4
struct PauseRun {
    dynamics::EvolutionResult trace;
    double deviation = 0.0;
    double window_start = 0.0;
};

PauseRun pause(const Variant& v, double lambda_off) {
    const DeviceModel m = device(v);
    const double before = std::numbers::pi / m.coupling.g;  // one full swap, back to |e,0>
    const protocols::PulseSchedule s{{{before, 0.0}, {1e-6, lambda_off}, {0.5e-6, 0.0}},
                                     protocols::Preparation::qubit_excited,
                                     std::nullopt};
    const dynamics::TimeGrid g{0.0, s.total_duration(), 1001,
                               step(m.with_drive_amplitude(lambda_off), v)};
    protocols::SwitchOptions o;
    o.integrator = integrator(v);
    PauseRun r{protocols::switch_sequence(m, s, g, o), 0.0, before};
    hygiene.add(r.trace);
    r.deviation = protocols::pause_deviation(r.trace, before, before + 1e-6, m.qubit_t1);
    return r;
}

// 5
protocols::StorageResult storage(const Variant& v) {
    const DeviceModel m = device(v);
    protocols::StorageOptions o;
    o.integrator = integrator(v);
    auto r = protocols::storage_experiment(m, 1.5e-6, dynamics::TimeGrid{0.0, 2.2e-6, 2201, step(m, v)},
                                           o);
    hygiene.add(r.trajectory);
    hygiene.add(r.reference);
    return r;
}

// 6
struct Residual {
    double peak = 0.0;
    double lambda_off = 0.0;
    std::vector<double> full;
};

Residual rwa_residual(const Variant& v, double drive_hz) {
    DeviceModel m = device(v, false);
    m.drive->frequency = angular(drive_hz);
    dynamics::GapOptions go;
    go.model = dynamics::GapModel::lab;
    Residual r;
    r.lambda_off = protocols::find_switch_off(m, go).lambda_z;
    const DeviceModel full = m.with_drive_amplitude(r.lambda_off);
    const DeviceModel eff =
        m.with_drive_amplitude(model::bessel_switch_off_amplitude(m.drive->frequency));
    const dynamics::TimeGrid g{0.0, 2e-6, 4001, step(full, v)};
    const auto psi = protocols::prepare_state(protocols::Preparation::qubit_excited, m.layout());
    const auto a = dynamics::evolve_unitary(dynamics::lab_hamiltonian(full), psi, g, integrator(v));
    const auto b = dynamics::evolve_unitary(dynamics::effective_hamiltonian(eff), psi, g, integrator(v));
    hygiene.add(a);
    hygiene.add(b);
    r.peak = max_diff(a.excited_population, b.excited_population);
    r.full = a.excited_population;
    return r;
}

// Results shared with the hygiene criterion.
struct Baseline {
    RabiRun rabi;
    std::vector<double> gaps;
    protocols::SwitchOffPoint off;
    PauseRun pause;
    std::optional<protocols::StorageResult> storage;
    std::vector<Residual> residuals;
} base;

const std::vector<double> kDriveFrequencies{150e6, 300e6, 600e6};

Outcome criterion1() {
    base.rabi = vacuum_rabi({});
    if (!base.rabi.frequency) {
        return {false, "no oscillation frequency extracted"};
    }
    const double f = *base.rabi.frequency;
    return {rel_diff(f, kTwoGHz) <= 0.01,
            fmt("2g/2pi = %.4f MHz (target 18.28 MHz within 1%%)", f / 1e6)};
}

Outcome criterion2() {
    std::vector<double> ratios;
    base.gaps = bessel_gaps({}, ratios);
    const double two_g = 2.0 * angular(9.14e6);
    double worst = 0.0;
    int checked = 0;
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        const double j0 = std::cyl_bessel_j(0.0, 2.0 * ratios[i]);
        if (std::abs(j0) > 0.05) {
            worst = std::max(worst, std::abs(base.gaps[i] - two_g * std::abs(j0)) / (two_g * std::abs(j0)));
            ++checked;
        }
    }
    return {worst <= 0.05,
            fmt("worst relative deviation from 2g|J0(2x)| %.3f%% over %d of 40 points (limit 5%%)",
                100 * worst, checked)};
}

Outcome criterion3() {
    const DeviceModel m = device({});
    base.off = protocols::find_switch_off(m);
    const double mhz = hertz(base.off.lambda_z) / 1e6;
    const double x = base.off.lambda_z / m.drive->frequency;
    return {base.off.ratio < 1e-5 && mhz >= 175.0 && mhz <= 185.0,
            fmt("lambda_off/2pi = %.4f MHz (%.5f wz), R = %.3g (need R < 1e-5, 175..185 MHz)", mhz,
                x, base.off.ratio)};
}

Outcome criterion4() {
    base.pause = pause({}, base.off.lambda_z);
    return {base.pause.deviation <= 0.03,
            fmt("max |P - decay envelope| in the off window %.4f (limit 0.03)", base.pause.deviation)};
}

Outcome criterion5() {
    base.storage = storage({});
    const auto& s = *base.storage;
    if (!s.amplitude_ratio || !s.revival_fit) {
        return {false, "revival not measurable: " + s.reason};
    }
    const double target = std::exp(-1.5 / 4.6);
    const double f = s.revival_fit->frequency();
    const bool ok = std::abs(*s.amplitude_ratio - target) <= 0.1 * target && rel_diff(f, kTwoGHz) <= 0.01;
    return {ok, fmt("amplitude ratio %.4f (target %.4f within 10%%), revival %.4f MHz (18.28 within 1%%)",
                    *s.amplitude_ratio, target, f / 1e6)};
}

Outcome criterion6() {
    base.residuals.clear();
    for (double f : kDriveFrequencies) {
        base.residuals.push_back(rwa_residual({}, f));
    }
    const auto& r = base.residuals;
    return {r[0].peak > r[1].peak && r[1].peak > r[2].peak,
            fmt("peak |P_full - P_eff| %.5f, %.5f, %.5f at wz/2pi = 150, 300, 600 MHz (must decrease)",
                r[0].peak, r[1].peak, r[2].peak)};
}

Outcome criterion7() {
    const double g = angular(9.14e6), d = angular(2.417e9);
    std::vector<double> eps;
    for (int i = 0; i <= 40; ++i) {
        eps.push_back(angular(-300e6 + 15e6 * i));
    }
    const auto clean = calibration::fit_anticrossing(calibration::synthetic_peaks(g, d, d, eps));
    const auto noisy = calibration::fit_anticrossing(calibration::synthetic_peaks(g, d, d, eps, 10e3, 42));
    const double e1 = rel_diff(clean.g, g), e2 = rel_diff(noisy.g, g);
    return {e1 <= 1e-3 && e2 <= 1e-2,
            fmt("g/2pi noiseless %.5f MHz (err %.2e, limit 1e-3), 10 kHz noise %.5f MHz (err %.2e, limit 1e-2)",
                hertz(clean.g) / 1e6, e1, hertz(noisy.g) / 1e6, e2)};
}

Outcome criterion8() {
    std::vector<std::string> bad;
    auto check = [&bad](bool ok, const std::string& what) {
        if (!ok) {
            bad.push_back(what);
        }
    };

    // step halving on the time-domain runs
    double halving = 0.0;
    halving = std::max(halving, max_diff(vacuum_rabi({5, true}).trace.excited_population,
                                         base.rabi.trace.excited_population));
    halving = std::max(halving, max_diff(pause({5, true}, base.off.lambda_z).trace.excited_population,
                                         base.pause.trace.excited_population));
    const auto hs = storage({5, true});
    halving = std::max(halving, max_diff(hs.trajectory.excited_population,
                                         base.storage->trajectory.excited_population));
    for (std::size_t i = 0; i < kDriveFrequencies.size(); ++i) {
        halving = std::max(halving, max_diff(rwa_residual({5, true}, kDriveFrequencies[i]).full,
                                             base.residuals[i].full));
    }
    check(halving <= 1e-7, fmt("step halving %.2e", halving));

    // Fock cutoff 5 vs 8 on every observable
    const Variant big{8, false};
    double fock_p = 0.0;  // populations and dimensionless observables, absolute
    double fock_rel = 0.0;  // frequencies, gaps, amplitudes, relative
    const RabiRun r8 = vacuum_rabi(big);
    fock_p = std::max(fock_p, max_diff(r8.trace.excited_population, base.rabi.trace.excited_population));
    if (r8.frequency && base.rabi.frequency) {
        fock_rel = std::max(fock_rel, rel_diff(*r8.frequency, *base.rabi.frequency));
    }
    std::vector<double> ratios;
    const auto gaps8 = bessel_gaps(big, ratios);
    for (std::size_t i = 0; i < gaps8.size(); ++i) {
        // near the zero the gap itself is ~1e-6 of 2g; compare against 2g
        fock_rel = std::max(fock_rel, std::abs(gaps8[i] - base.gaps[i]) / (2.0 * angular(9.14e6)));
    }
    const auto off8 = protocols::find_switch_off(device(big));
    fock_rel = std::max(fock_rel, rel_diff(off8.lambda_z, base.off.lambda_z));
    fock_p = std::max(fock_p, std::abs(off8.ratio - base.off.ratio));
    const PauseRun p8 = pause(big, base.off.lambda_z);
    fock_p = std::max(fock_p, max_diff(p8.trace.excited_population, base.pause.trace.excited_population));
    fock_p = std::max(fock_p, std::abs(p8.deviation - base.pause.deviation));
    const auto s8 = storage(big);
    fock_p = std::max(fock_p, max_diff(s8.trajectory.excited_population,
                                       base.storage->trajectory.excited_population));
    if (s8.amplitude_ratio && base.storage->amplitude_ratio) {
        fock_p = std::max(fock_p, std::abs(*s8.amplitude_ratio - *base.storage->amplitude_ratio));
        fock_rel = std::max(fock_rel, rel_diff(s8.revival_fit->frequency(),
                                               base.storage->revival_fit->frequency()));
    } else {
        bad.push_back("storage ratio unavailable at N = 8");
    }
    for (std::size_t i = 0; i < kDriveFrequencies.size(); ++i) {
        const Residual r = rwa_residual(big, kDriveFrequencies[i]);
        fock_p = std::max(fock_p, std::abs(r.peak - base.residuals[i].peak));
        fock_p = std::max(fock_p, max_diff(r.full, base.residuals[i].full));
        fock_rel = std::max(fock_rel, rel_diff(r.lambda_off, base.residuals[i].lambda_off));
    }
    check(fock_p <= 1e-6 && fock_rel <= 1e-6, fmt("Fock 5 vs 8 abs %.2e rel %.2e", fock_p, fock_rel));

    check(hygiene.norm <= 1e-8, fmt("norm error %.2e", hygiene.norm));
    check(hygiene.trace <= 1e-8, fmt("trace error %.2e", hygiene.trace));
    check(hygiene.min_eigenvalue >= -1e-7, fmt("min eigenvalue %.2e", hygiene.min_eigenvalue));
    check(hygiene.hermiticity <= 1e-10, fmt("hermiticity %.2e", hygiene.hermiticity));

    std::string detail = fmt(
        "halving %.2e (limit 1e-7); Fock 5 vs 8 abs %.2e rel %.2e (limit 1e-6); %d runs: norm %.1e, "
        "trace %.1e, min eig %.1e",
        halving, fock_p, fock_rel, hygiene.runs, hygiene.norm, hygiene.trace, hygiene.min_eigenvalue);
    for (const auto& b : bad) {
        detail += "; failed: " + b;
    }
    return {bad.empty(), detail};
}

double horner_oracle(double x) { return ((0.2287 * x - 2.758) * x + 11.14) * x - 15.27; }

Outcome criterion9() {
    const auto map = calibration::CubicMap::reference();
    const double v = calibration::valpha(2.417, map);
    const double e_valpha = std::abs(v - horner_oracle(2.417));

    std::vector<double> gaps, volts;
    for (int i = 0; i <= 300; ++i) {
        gaps.push_back(2.0 + 0.01 * i);
        volts.push_back(calibration::valpha(gaps.back(), map));
    }
    const auto curve = calibration::gap_tuning_curve(map, volts);
    double e_round = 0.0;
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        e_round = std::max(e_round, std::abs(curve.points[i].gap_ghz - gaps[i]));
    }

    const double wr = angular(2.417e9), lz = angular(180e6), wz = angular(150e6);
    const auto w = calibration::synthesize_waveform(lz, wz, wr, map, 2.4e9, 100e-9);
    const double hi = calibration::valpha(1e-9 * (wr + 2 * lz) / model::kTwoPi, map);
    const double lo = calibration::valpha(1e-9 * (wr - 2 * lz) / model::kTwoPi, map);
    const double w_max = *std::max_element(w.samples.begin(), w.samples.end());
    const double w_min = *std::min_element(w.samples.begin(), w.samples.end());
    const bool exact = w_max == hi && w_min == lo;
    return {e_valpha <= 1e-12 && e_round <= 1e-9 && exact,
            fmt("valpha(2.417) = %.6f V (oracle diff %.1e), round trip %.1e GHz, waveform extremes %s "
                "(%.6f, %.6f V)",
                v, e_valpha, e_round, exact ? "exact" : "NOT exact", w_min, w_max)};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

const char* kSmallConfig = R"(
[device]
delta = 2.417GHz
wr = 2.417GHz
g = 9.14MHz
t1_qubit = 0.45us
t1_resonator = 4.6us
[drive]
wz = 150MHz
lambda_z = 100MHz
[sweep]
epsilon_start = -300MHz
epsilon_stop = 300MHz
epsilon_points = 9
probe_start = 2.38GHz
probe_stop = 2.46GHz
probe_points = 41
lambda_points = 5
[grid]
t_end = 0.3us
samples = 301
[switch]
t_before = 50ns
t_off = 100ns
t_after = 100ns
sample_step = 2ns
[storage]
t_off = 100ns
t_after = 200ns
[calibration]
v_points = 31
[waveform]
duration = 50ns
[fit]
noise = 10kHz
seed = 7
)";

Outcome criterion10() {
    const cli::RunConfig config = cli::parse_config(kSmallConfig);
    const auto root = std::filesystem::temp_directory_path() / "qswitch_acceptance";
    std::filesystem::remove_all(root);
    std::vector<std::string> mismatched;
    std::size_t compared = 0;
    for (const std::string& cmd : cli::command_names()) {
        std::vector<std::vector<std::string>> runs;
        std::vector<cli::RunReport> reports;
        for (auto [tag, workers] : {std::pair{"a", 1}, std::pair{"b", 1}, std::pair{"c", 8}}) {
            cli::RunOptions o;
            o.out_dir = root / (cmd + "_" + tag);
            o.formats = {"csv", "json"};
            o.workers = static_cast<std::size_t>(workers);
            reports.push_back(cli::run_command(cmd, config, o));
        }
        const auto& files = reports[0].files;
        for (std::size_t i = 0; i + 1 < files.size(); ++i) {
            const std::string first = slurp(files[i]);
            for (std::size_t k = 1; k < reports.size(); ++k) {
                if (reports[k].files.size() != files.size() || slurp(reports[k].files[i]) != first) {
                    mismatched.push_back(files[i].filename().string());
                }
            }
            ++compared;
        }
    }
    std::filesystem::remove_all(root);
    std::string detail = fmt("%zu subcommands, %zu CSV/JSON files, reruns and workers 1 vs 8 ",
                             cli::command_names().size(), compared);
    detail += mismatched.empty() ? "byte-identical" : "differ:";
    for (const auto& m : mismatched) {
        detail += " " + m;
    }
    return {mismatched.empty() && compared >= 2 * cli::command_names().size(), detail};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double limit_s;  // 0 means no runtime bound
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "vacuum Rabi frequency", 5, criterion1},
        {2, "Bessel law", 120, criterion2},
        {3, "switch-off depth", 60, criterion3},
        {4, "pause property", 60, criterion4},
        {5, "storage revival", 120, criterion5},
        {6, "RWA residual", 0, criterion6},
        {7, "anticrossing fit", 0, criterion7},
        {8, "numerical hygiene", 0, criterion8},
        {9, "calibration chain", 0, criterion9},
        {10, "determinism", 0, criterion10},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.limit_s > 0 && s >= c.limit_s) {
            o.pass = false;
            o.detail += fmt("; runtime over %.0f s", c.limit_s);
        }
        failures += o.pass ? 0 : 1;
        std::printf("%s criterion %2d  %-22s %s  [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                    o.detail.c_str(), s);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
                criteria.size());
    return failures == 0 ? 0 : 1;
}
