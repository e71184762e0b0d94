#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bzlm/analysis.hpp"
#include "bzlm/dynamics.hpp"
#include "bzlm/field.hpp"
#include "bzlm/geometry.hpp"
#include "bzlm/io.hpp"
#include "bzlm/measurement.hpp"
#include "bzlm/schedule.hpp"

namespace bzlm {

// Excitability endpoints of the freeze/thaw emulation, frozen from a
// calibration run of calibrate_phi_for_ratio(2.1, 0.03, defaults) at full
// scale (annulus 185/150, held eastern source). The cooled value reproduces
// the ~2.1x period stretch; see configs/cooling_cycle.json.
inline constexpr double calibrated_phi_low = 0.03;
inline constexpr double calibrated_phi_high = 0.0627197265625;

// Electrode pair for full-disc runs: 6x40-node vertical rectangles in the
// northern half, an exact mirror pair about the vertical axis (column 185 on
// the default 371-wide lattice). The 75-column centre separation is what
// separates the morphologies: an eastern wave needs ~3 time units to travel
// between the pair (two well-separated lobes), while a north-eastern wave
// reaches them along their long axis, smearing each lobe enough that the
// undershoot follows immediately.
inline ElectrodePair default_disc_electrodes() {
    return ElectrodePair{RectDomain{145, 145, 150, 184}, RectDomain{220, 145, 225, 184}};
}

// Electrode pair for ring (annulus) runs: the same mirror construction but
// placed on the northern arc of the reactive ring, where the circulating
// wave trains actually pass.
inline ElectrodePair default_ring_electrodes() {
    return ElectrodePair{RectDomain{160, 2, 165, 30}, RectDomain{205, 2, 210, 30}};
}

// Shared knobs of the scenario runners. Defaults reproduce the reference
// setup: 185-radius disc (ring interior above 150 for the sweep scenarios),
// eastern held source, northern electrodes.
struct ExperimentSetup {
    int disc_radius = 185;
    int annulus_inner = 150;
    // Absent = the scenario-appropriate default (disc pair for spike-shape
    // runs, ring pair for the annulus scenarios).
    std::optional<ElectrodePair> electrodes;
    int stimulus_radius = 3;
    // Held auto-excitation loci must seed a nucleus above the critical
    // curvature radius at the least-excitable sweep point; 16 nodes ignites
    // reliably across the whole phi grid, where a point source stops shedding
    // waves beyond phi ~ 0.062.
    int source_radius = 16;
    long long record_stride = 10;
    long long snapshot_stride = 1500;  // 0 disables snapshots
    double snapshot_threshold = 0.04;
    long long step_cap = 100000;  // per scenario segment
    double quiescence_u = 0.01;   // wave considered annihilated below this
    int sweep_target_events = 6;
    double detect_hi_frac = 0.4;
    double detect_lo_frac = 0.1;
    double noise_band_floor = 1e-3;
    double noise_band_frac = 0.1;
    double min_lobe_separation = 2.0;
    long long cooling_tail_steps = 30000;  // run past the last segment start
    int threads = 1;                       // sweep-point parallelism
};

struct Snapshot {
    long long iteration = 0;
    std::vector<std::uint8_t> pixels;  // render_snapshot() form
};

struct ScenarioResult {
    PotentialTrace trace;
    std::vector<Snapshot> snapshots;
    std::vector<PeriodStats> stats;  // one entry per schedule segment
    std::string metadata;            // key = value echo of the effective setup
};

namespace detail {

inline Observer make_snapshot_observer(std::vector<Snapshot>& sink, const Mask& mask,
                                       long long stride, double threshold) {
    return Observer{stride, [&sink, &mask, threshold](const SimState& s) {
                        sink.push_back({s.iteration, render_snapshot(s.u, mask, threshold)});
                    }};
}

inline double max_in_domain_u(const SimState& state, const Mask& mask) {
    double m = 0.0;
    for (std::size_t i = 0; i < mask.in_domain.size(); ++i)
        if (mask.in_domain[i]) m = std::max(m, state.u.values[i]);
    return m;
}

inline std::string describe(const ExperimentSetup& setup, const OregonatorParams& p,
                            const IntegratorConfig& cfg, const std::string& scenario,
                            const std::string& extra) {
    std::ostringstream os;
    os << "scenario = " << scenario << '\n'
       << "epsilon = " << format_double(p.epsilon) << '\n'
       << "f = " << format_double(p.f) << '\n'
       << "q = " << format_double(p.q) << '\n'
       << "d_u = " << format_double(p.d_u) << '\n'
       << "phi = " << format_double(p.phi) << '\n'
       << "dt = " << format_double(cfg.dt) << '\n'
       << "dx = " << format_double(cfg.dx) << '\n'
       << "disc_radius = " << setup.disc_radius << '\n'
       << "annulus_inner = " << setup.annulus_inner << '\n'
       << "record_stride = " << setup.record_stride << '\n'
       << "snapshot_stride = " << setup.snapshot_stride << '\n';
    if (!extra.empty()) os << extra;
    return os.str();
}

}  // namespace detail

// The relative detector is scale-free by contract, so on a trace that is
// still all numerical dust it would promote that dust to events. Scenarios
// know the physical scale; gate detection on the absolute dynamic range.
inline PeriodStats scenario_stats(const PotentialTrace& trace,
                                  const ExperimentSetup& setup) {
    if (trace.samples.empty()) return PeriodStats{};
    const auto [lo, hi] =
        std::minmax_element(trace.samples.begin(), trace.samples.end());
    if (*hi - *lo < setup.noise_band_floor) return PeriodStats{};
    return detect_periods_relative(trace, setup.detect_hi_frac, setup.detect_lo_frac);
}

// Split full-trace detector events into per-segment statistics; events are
// assigned to the segment whose iteration window contains them.
inline std::vector<PeriodStats> per_segment_stats(const PotentialTrace& trace,
                                                  const PhiSchedule& schedule,
                                                  double dt,
                                                  const ExperimentSetup& setup) {
    const PeriodStats all = scenario_stats(trace, setup);
    const auto& segs = schedule.segments();
    std::vector<PeriodStats> out;
    out.reserve(segs.size());
    for (std::size_t i = 0; i < segs.size(); ++i) {
        const double t0 = static_cast<double>(segs[i].start_iteration) * dt;
        const bool last = i + 1 == segs.size();
        const double t1 =
            last ? std::numeric_limits<double>::infinity()
                 : static_cast<double>(segs[i + 1].start_iteration) * dt;
        std::vector<double> events;
        for (double t : all.event_times)
            if (t >= t0 && t < t1) events.push_back(t);
        out.push_back(stats_from_event_times(std::move(events)));
    }
    return out;
}

// Single wave from a one-shot stimulus at the named disc edge; runs until the
// wave annihilates (no in-domain u above the quiescence level) or the step
// cap, recording the electrode trace and thresholded snapshots.
inline ScenarioResult run_spike_shape(Compass origin, const OregonatorParams& params,
                                      const IntegratorConfig& cfg,
                                      const ExperimentSetup& setup = {}) {
    const Mask mask = make_disc_mask(setup.disc_radius);
    const ElectrodePair electrodes = setup.electrodes.value_or(default_disc_electrodes());
    electrodes.validate(mask);
    SimState state = make_steady_state(mask, params);
    const StimulusSite site =
        edge_site(mask, origin, setup.stimulus_radius, StimulusMode::one_shot);
    stimulate(state, site, mask);

    ScenarioResult result;
    result.trace.record_stride = setup.record_stride;
    result.trace.dt = cfg.dt;
    record(result.trace, state, electrodes, mask);

    std::vector<Observer> observers;
    observers.push_back(make_trace_observer(result.trace, electrodes, mask));
    if (setup.snapshot_stride > 0)
        observers.push_back(detail::make_snapshot_observer(
            result.snapshots, mask, setup.snapshot_stride, setup.snapshot_threshold));

    Stepper stepper(mask, params, cfg);
    const long long chunk = 500;
    while (state.iteration < setup.step_cap) {
        const long long n = std::min(chunk, setup.step_cap - state.iteration);
        stepper.run(state, n, observers);
        if (detail::max_in_domain_u(state, mask) < setup.quiescence_u) break;
    }

    result.stats.push_back(scenario_stats(result.trace, setup));
    result.metadata = detail::describe(setup, params, cfg, "spike-shape",
                                       std::string("origin = ") + to_string(origin) + "\n");
    return result;
}

struct PhiSweepPoint {
    double phi = 0.0;
    PeriodStats stats;  // absent mean = no sustained oscillation at this phi
};

namespace detail {

inline PhiSweepPoint sweep_one_phi(double phi, OregonatorParams params,
                                   const IntegratorConfig& cfg,
                                   const ExperimentSetup& setup,
                                   PotentialTrace* trace_out,
                                   std::vector<Snapshot>* snapshots_out) {
    params.phi = phi;
    const Mask mask = make_annulus_mask(setup.disc_radius, setup.annulus_inner);
    const ElectrodePair electrodes = setup.electrodes.value_or(default_ring_electrodes());
    electrodes.validate(mask);
    SimState state = make_steady_state(mask, params);
    const StimulusSite source =
        edge_site(mask, Compass::E, setup.source_radius, StimulusMode::held_source);
    stimulate(state, source, mask);

    PotentialTrace trace;
    trace.record_stride = setup.record_stride;
    trace.dt = cfg.dt;
    record(trace, state, electrodes, mask);

    std::vector<Observer> observers;
    observers.push_back(make_trace_observer(trace, electrodes, mask));
    if (snapshots_out && setup.snapshot_stride > 0)
        observers.push_back(make_snapshot_observer(*snapshots_out, mask,
                                                   setup.snapshot_stride,
                                                   setup.snapshot_threshold));

    Stepper stepper(mask, params, cfg);
    stepper.add_held_source(source);
    const long long chunk = 2000;
    PeriodStats stats;
    while (state.iteration < setup.step_cap) {
        const long long n = std::min(chunk, setup.step_cap - state.iteration);
        stepper.run(state, n, observers);
        stats = scenario_stats(trace, setup);
        if (static_cast<int>(stats.n_events()) >= setup.sweep_target_events) break;
    }
    if (trace_out) *trace_out = std::move(trace);
    return PhiSweepPoint{phi, std::move(stats)};
}

}  // namespace detail

// Period statistics per excitability value on the reactive ring with a held
// eastern source. Each value runs until enough events are detected or the
// step cap; points may run in parallel (results are ordered by input index
// and bitwise independent of the thread count).
inline std::vector<PhiSweepPoint> run_phi_sweep(const std::vector<double>& phi_values,
                                                const OregonatorParams& params,
                                                const IntegratorConfig& cfg,
                                                const ExperimentSetup& setup = {},
                                                std::vector<PotentialTrace>* traces_out =
                                                    nullptr) {
    std::vector<PhiSweepPoint> points(phi_values.size());
    std::vector<PotentialTrace> traces(phi_values.size());
    if (setup.threads > 1 && phi_values.size() > 1) {
        std::vector<std::future<PhiSweepPoint>> futures;
        futures.reserve(phi_values.size());
        for (std::size_t i = 0; i < phi_values.size(); ++i)
            futures.push_back(std::async(std::launch::async, [&, i] {
                return detail::sweep_one_phi(phi_values[i], params, cfg, setup,
                                             &traces[i], nullptr);
            }));
        for (std::size_t i = 0; i < futures.size(); ++i) points[i] = futures[i].get();
    } else {
        for (std::size_t i = 0; i < phi_values.size(); ++i)
            points[i] = detail::sweep_one_phi(phi_values[i], params, cfg, setup,
                                              &traces[i], nullptr);
    }
    if (traces_out) *traces_out = std::move(traces);
    return points;
}

// Freeze/thaw emulation: held eastern source on the reactive ring, phi driven
// by the schedule; returns the trace plus period statistics per schedule
// segment (segments with fewer than two events report an absent mean).
inline ScenarioResult run_cooling_cycle(const PhiSchedule& schedule,
                                        const OregonatorParams& params,
                                        const IntegratorConfig& cfg,
                                        const ExperimentSetup& setup = {}) {
    const Mask mask = make_annulus_mask(setup.disc_radius, setup.annulus_inner);
    const ElectrodePair electrodes = setup.electrodes.value_or(default_ring_electrodes());
    electrodes.validate(mask);
    OregonatorParams p = params;
    p.phi = schedule.phi_at(0);
    SimState state = make_steady_state(mask, p);
    const StimulusSite source =
        edge_site(mask, Compass::E, setup.source_radius, StimulusMode::held_source);
    stimulate(state, source, mask);

    ScenarioResult result;
    result.trace.record_stride = setup.record_stride;
    result.trace.dt = cfg.dt;
    record(result.trace, state, electrodes, mask);

    std::vector<Observer> observers;
    observers.push_back(make_trace_observer(result.trace, electrodes, mask));
    if (setup.snapshot_stride > 0)
        observers.push_back(detail::make_snapshot_observer(
            result.snapshots, mask, setup.snapshot_stride, setup.snapshot_threshold));

    const long long last_start = schedule.segments().back().start_iteration;
    const long long cap =
        static_cast<long long>(schedule.segments().size()) * setup.step_cap;
    const long long n_steps = std::min(last_start + setup.cooling_tail_steps, cap);

    Stepper stepper(mask, params, cfg);
    stepper.set_schedule(&schedule);
    stepper.add_held_source(source);
    stepper.run(state, n_steps, observers);

    result.stats = per_segment_stats(result.trace, schedule, cfg.dt, setup);
    std::ostringstream extra;
    extra << "segments = " << schedule.segments().size() << '\n'
          << "n_steps = " << n_steps << '\n';
    result.metadata =
        detail::describe(setup, params, cfg, "cooling-cycle", extra.str());
    return result;
}

struct CalibrationResult {
    double phi_high = 0.0;
    double achieved_ratio = 1.0;
};

// Bisects phi_high in (phi_low, 0.08] until the simulated period ratio
// period(phi_high)/period(phi_low) lands within 5% of the target or the
// interval closes below 1e-4. A phi that arrests the source (too few events
// before the cap) counts as an over-long period and pushes the bracket down.
inline CalibrationResult calibrate_phi_for_ratio(double target_ratio, double phi_low,
                                                 const OregonatorParams& params,
                                                 const IntegratorConfig& cfg,
                                                 const ExperimentSetup& setup = {}) {
    if (!(target_ratio >= 1.0))
        throw std::invalid_argument("calibrate: target ratio must be >= 1");
    if (!(phi_low >= 0.0) || !(phi_low < 0.08))
        throw std::invalid_argument("calibrate: phi_low must lie in [0, 0.08)");
    if (target_ratio == 1.0) return {phi_low, 1.0};

    // Calibration must predict the period of an already-running train (the
    // quantity the cooling segments measure), so skip the interval into the
    // first event: it carries the source's ignition transient, which inflates
    // the mean at high excitability.
    auto mean_period = [&](double phi) -> std::optional<double> {
        const auto point = detail::sweep_one_phi(phi, params, cfg, setup, nullptr, nullptr);
        const auto& t = point.stats.event_times;
        if (t.size() >= 4) {
            double sum = 0.0;
            for (std::size_t k = 2; k < t.size(); ++k) sum += t[k] - t[k - 1];
            return sum / static_cast<double>(t.size() - 2);
        }
        return point.stats.mean_period;
    };

    const auto base = mean_period(phi_low);
    if (!base)
        throw std::domain_error("calibrate: no sustained oscillation at phi_low");
    auto ratio_at = [&](double phi) -> double {
        const auto p = mean_period(phi);
        return p ? *p / *base : std::numeric_limits<double>::infinity();
    };

    double hi = 0.08;
    double lo = phi_low;
    double max_finite_ratio = 1.0;
    const double ratio_hi = ratio_at(hi);
    if (std::isfinite(ratio_hi)) max_finite_ratio = std::max(max_finite_ratio, ratio_hi);
    if (ratio_hi < target_ratio)
        throw std::domain_error(
            "calibrate: target ratio unreachable; achievable range is [1, " +
            format_double(ratio_hi) + "] for phi_high <= 0.08");

    double best_phi = hi;
    double best_ratio = ratio_hi;
    while (hi - lo > 1e-4) {
        const double mid = 0.5 * (lo + hi);
        const double r = ratio_at(mid);
        if (std::isfinite(r)) max_finite_ratio = std::max(max_finite_ratio, r);
        if (std::isfinite(r) && std::abs(r - target_ratio) <= 0.05 * target_ratio)
            return {mid, r};
        if (r >= target_ratio) {
            hi = mid;
            if (std::isfinite(r)) {
                best_phi = mid;
                best_ratio = r;
            }
        } else {
            lo = mid;
        }
    }
    if (!std::isfinite(best_ratio))
        throw std::domain_error(
            "calibrate: target ratio unreachable; the source arrests first; "
            "achievable range is [1, " +
            format_double(max_finite_ratio) + "]");
    return {best_phi, best_ratio};
}

}  // namespace bzlm
