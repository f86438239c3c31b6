#include <algorithm>
#include <cmath>
#include <numbers>

#include "qswitch/errors.hpp"
#include "qswitch/parallel.hpp"
#include "qswitch/protocols.hpp"

namespace qswitch::protocols {

namespace {

using dynamics::DriveTerm;
using dynamics::HamiltonianPiece;
using dynamics::TimeDependentHamiltonian;

void require_rabi_point(const model::DeviceModel& m, const char* what) {
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

EvolutionResult run(const TimeDependentHamiltonian& h, const model::DeviceModel& m,
                    const Ket& psi0, const TimeGrid& grid, bool dissipative,
                    const dynamics::IntegratorOptions& integrator) {
    if (dissipative) {
        return dynamics::evolve_lindblad(h, linalg::DensityMatrix::from_ket(psi0),
                                         dynamics::relaxation_collapses(m), grid, integrator);
    }
    return dynamics::evolve_unitary(h, psi0, grid, integrator);
}

// Population swings smaller than this are not counted as a resolved oscillation.
constexpr double kMinRabiAmplitude = 1e-3;

std::vector<double> tail(const std::vector<double>& v, std::size_t from) {
    return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(from), v.end());
}

}  // namespace

double PulseSchedule::total_duration() const {
    double t = 0.0;
    for (const PulseSegment& s : segments) {
        t += s.duration;
    }
    return t;
}

void PulseSchedule::validate() const {
    if (segments.empty()) {
        throw InvalidArgument("pulse schedule needs at least one segment");
    }
    for (const PulseSegment& s : segments) {
        if (!(s.duration > 0.0) || !std::isfinite(s.duration)) {
            throw InvalidArgument("segment durations must be positive");
        }
        if (!(s.lambda_z >= 0.0) || !std::isfinite(s.lambda_z)) {
            throw InvalidArgument("segment drive amplitude must be >= 0");
        }
    }
    if (preparation == Preparation::custom && !custom_state) {
        throw InvalidArgument("custom preparation needs a state");
    }
}

Ket prepare_state(Preparation preparation, const linalg::HilbertLayout& layout,
                  const std::optional<Ket>& custom) {
    using linalg::HilbertLayout;
    switch (preparation) {
        case Preparation::qubit_excited:
            return layout.basis_ket(HilbertLayout::kExcited, 0);
        case Preparation::entangled_half_swap:
            return (layout.basis_ket(HilbertLayout::kExcited, 0) -
                    linalg::kI * layout.basis_ket(HilbertLayout::kGround, 1)) /
                   std::sqrt(2.0);
        case Preparation::custom: {
            if (!custom) {
                throw InvalidArgument("custom preparation needs a state");
            }
            if (static_cast<std::size_t>(custom->size()) != layout.dim()) {
                throw DimensionError("custom state dimension differs from the layout");
            }
            const double norm = custom->norm();
            if (!(norm > 0.0) || !std::isfinite(norm)) {
                throw InvalidArgument("custom state must be a nonzero finite vector");
            }
            return *custom / norm;
        }
    }
    throw InvalidArgument("unknown preparation");
}

TimeDependentHamiltonian schedule_hamiltonian(const model::DeviceModel& m,
                                              const PulseSchedule& schedule, double phase_offset) {
    schedule.validate();
    const ComplexMatrix h0 = model::static_lab_hamiltonian(m);
    const ComplexMatrix sz = model::longitudinal_operator(m.layout());
    std::vector<HamiltonianPiece> pieces;
    double t = 0.0;
    double current = -1.0;
    for (const PulseSegment& s : schedule.segments) {
        if (s.lambda_z != current) {
            HamiltonianPiece p;
            p.begin = pieces.empty() ? -std::numeric_limits<double>::infinity() : t;
            p.phase_origin = t;
            p.constant = h0;
            if (s.lambda_z > 0.0) {
                if (!m.drive) {
                    throw InvalidArgument("switch segments need the drive frequency");
                }
                p.drive = DriveTerm{sz, s.lambda_z, m.drive->frequency,
                                    m.drive->phase + phase_offset};
            }
            pieces.push_back(std::move(p));
            current = s.lambda_z;
        }
        t += s.duration;
    }
    return TimeDependentHamiltonian(std::move(pieces));
}

EvolutionResult switch_sequence(const model::DeviceModel& m, const PulseSchedule& schedule,
                                const TimeGrid& grid, const SwitchOptions& options) {
    m.validate();
    const TimeDependentHamiltonian h = schedule_hamiltonian(m, schedule, options.phase_offset);
    const Ket psi0 = prepare_state(schedule.preparation, m.layout(), schedule.custom_state);
    return run(h, m, psi0, grid, options.dissipative, options.integrator);
}

SwitchOffPoint find_switch_off(const model::DeviceModel& m, const dynamics::GapOptions& options) {
    m.validate();
    require_rabi_point(m, "switch-off search");
    const double wz = m.drive->frequency;
    SwitchOffPoint out;
    auto gap_at = [&](double lz) {
        ++out.evaluations;
        return dynamics::quasienergy_gap(m.with_drive_amplitude(lz), options).gap;
    };
    out.gap_on = gap_at(0.0);

    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = 1.15 * wz;
    double b = 1.25 * wz;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = gap_at(c);
    double fd = gap_at(d);
    double best = fc < fd ? c : d;
    double f_best = std::min(fc, fd);
    for (int it = 0; it < 80 && (b - a) > 1e-12 * wz; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = gap_at(c);
            if (fc < f_best) {
                f_best = fc;
                best = c;
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = gap_at(d);
            if (fd < f_best) {
                f_best = fd;
                best = d;
            }
        }
    }
    out.lambda_z = best;
    out.gap = f_best;
    out.ratio = f_best / out.gap_on;
    return out;
}

double onoff_ratio(const model::DeviceModel& m, double lambda_z,
                   const dynamics::GapOptions& options) {
    m.validate();
    require_rabi_point(m, "on/off ratio");
    if (!(lambda_z >= 0.0) || !std::isfinite(lambda_z)) {
        throw InvalidArgument("drive amplitude must be >= 0");
    }
    const double on = dynamics::quasienergy_gap(m.with_drive_amplitude(0.0), options).gap;
    const double at = dynamics::quasienergy_gap(m.with_drive_amplitude(lambda_z), options).gap;
    return at / on;
}

SpectrumMap rabi_scan(const model::DeviceModel& m, const SweepSpec& lambda_sweep,
                      const TimeGrid& grid, const ScanOptions& options) {
    m.validate();
    require_rabi_point(m, "Rabi scan");
    grid.validate();
    SpectrumMap out;
    out.x_axis = lambda_sweep.values();
    if (out.x_axis.front() < 0.0) {
        throw InvalidArgument("drive amplitudes must be >= 0");
    }
    out.y_axis = grid.times();
    const std::size_t nx = out.x_axis.size();
    const std::size_t ny = out.y_axis.size();
    out.population = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ny),
                                           static_cast<Eigen::Index>(nx));
    out.column_frequencies.resize(nx);
    const Ket psi0 = prepare_state(Preparation::qubit_excited, m.layout());
    const double band = 0.5 * model::hertz(m.drive->frequency);

    parallel_for(nx, options.workers, [&](std::size_t ix) {
        const model::DeviceModel mx = m.with_drive_amplitude(out.x_axis[ix]);
        const EvolutionResult r =
            run(dynamics::lab_hamiltonian(mx), mx, psi0, grid, true, options.integrator);
        for (std::size_t iy = 0; iy < ny; ++iy) {
            out.population(static_cast<Eigen::Index>(iy), static_cast<Eigen::Index>(ix)) =
                r.excited_population[iy];
        }
        ColumnFrequency& col = out.column_frequencies[ix];
        const FrequencyEstimate est =
            extract_frequency(r.excited_population, r.times, {band, 3.0, kMinRabiAmplitude, 1.0});
        if (!est.frequency) {
            col.reason = est.reason;
            return;
        }
        col.frequency = est.frequency;
        try {
            const DampedCosine fit = fit_damped_cosine(r.excited_population, r.times,
                                                       est.frequency);
            // keep the refinement only if it stayed near the same spectral line
            if (fit.frequency() > 0.5 * *est.frequency && fit.frequency() < 2.0 * *est.frequency) {
                col.frequency = fit.frequency();
            }
        } catch (const ConvergenceError&) {
        }
    });

    Curve bessel{"bessel_frequency_hz", {}};
    for (double lz : out.x_axis) {
        bessel.values.push_back(
            model::hertz(2.0 * std::abs(model::effective_coupling(m.coupling.g, lz,
                                                                  m.drive->frequency))));
    }
    out.overlays = {std::move(bessel)};
    return out;
}

StorageResult storage_experiment(const model::DeviceModel& m, double t_off, const TimeGrid& grid,
                                 const StorageOptions& options) {
    m.validate();
    require_rabi_point(m, "storage experiment");
    grid.validate();
    if (!(t_off >= 0.0) || !std::isfinite(t_off)) {
        throw InvalidArgument("storage time must be >= 0");
    }
    if (grid.t_start != 0.0) {
        throw InvalidArgument("storage grid must start at t = 0");
    }
    StorageResult out;
    out.swap_time = std::numbers::pi / (2.0 * m.coupling.g);
    out.switch_on_time = out.swap_time + t_off;
    if (!(grid.t_end > out.switch_on_time)) {
        throw InvalidArgument("storage grid ends before the coupling is switched back on");
    }
    out.lambda_off = options.lambda_off > 0.0 ? options.lambda_off : find_switch_off(m).lambda_z;

    PulseSchedule schedule;
    schedule.segments.push_back({out.swap_time, 0.0});
    if (t_off > 0.0) {
        schedule.segments.push_back({t_off, out.lambda_off});
    }
    schedule.segments.push_back({grid.t_end - out.switch_on_time, 0.0});
    SwitchOptions so;
    so.integrator = options.integrator;
    out.trajectory = switch_sequence(m, schedule, grid, so);

    PulseSchedule plain;
    plain.segments.push_back({grid.t_end, 0.0});
    out.reference = switch_sequence(m, plain, grid, so);

    const auto& times = out.trajectory.times;
    const auto first_on = static_cast<std::size_t>(
        std::lower_bound(times.begin(), times.end(), out.switch_on_time) - times.begin());
    if (times.size() - first_on < 16) {
        out.reason = "fewer than 16 samples after switch-on";
        return out;
    }
    try {
        out.reference_fit = fit_damped_cosine(out.reference.excited_population, times);
        out.revival_fit = fit_damped_cosine(tail(out.trajectory.excited_population, first_on),
                                            tail(times, first_on));
    } catch (const ConvergenceError& e) {
        out.reason = std::string("damped-cosine fit failed: ") + e.what();
        return out;
    }
    const DampedCosine& ref = *out.reference_fit;
    const DampedCosine& rev = *out.revival_fit;
    const double pre = ref.amplitude * std::exp(-ref.decay * (out.swap_time - ref.t0));
    const double post = rev.amplitude * std::exp(-rev.decay * (out.switch_on_time - rev.t0));
    out.amplitude_ratio = post / pre;
    return out;
}

double pause_deviation(const EvolutionResult& result, double t_begin, double t_end,
                       double qubit_t1) {
    if (!(t_end > t_begin)) {
        throw InvalidArgument("pause window needs t_end > t_begin");
    }
    if (!(qubit_t1 > 0.0)) {
        throw InvalidArgument("qubit T1 must be positive");
    }
    std::optional<std::size_t> first;
    double worst = 0.0;
    for (std::size_t i = 0; i < result.times.size(); ++i) {
        const double t = result.times[i];
        if (t < t_begin || t > t_end) {
            continue;
        }
        if (!first) {
            first = i;
        }
        const double t0 = result.times[*first];
        const double env = result.excited_population[*first] * std::exp(-(t - t0) / qubit_t1);
        worst = std::max(worst, std::abs(result.excited_population[i] - env));
    }
    if (!first) {
        throw InvalidArgument("no samples inside the pause window");
    }
    return worst;
}

}  // namespace qswitch::protocols
