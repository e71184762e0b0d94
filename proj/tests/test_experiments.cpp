#include <catch2/catch_amalgamated.hpp>

#include <stdexcept>
#include <vector>

#include "bzlm/experiments.hpp"

using namespace bzlm;

namespace {

// Mirror-exact electrode pair inside a radius-30 disc (width 61, centre 30).
ElectrodePair disc30_electrodes() {
    return ElectrodePair{RectDomain{10, 8, 13, 20}, RectDomain{47, 8, 50, 20}};
}

// Northern-arc pair for the 40/26 ring (width 81, centre 40).
ElectrodePair tiny_ring_electrodes() {
    return ElectrodePair{RectDomain{23, 2, 28, 12}, RectDomain{52, 2, 57, 12}};
}

// Northern-arc pair for the 60/40 ring (width 121, centre 60).
ElectrodePair small_ring_electrodes() {
    return ElectrodePair{RectDomain{43, 2, 48, 17}, RectDomain{72, 2, 77, 17}};
}

IntegratorConfig scenario_integrator() {
    IntegratorConfig cfg;
    cfg.dt = 1e-4;
    return cfg;
}

ExperimentSetup tiny_ring_setup() {
    ExperimentSetup setup;
    setup.disc_radius = 40;
    setup.annulus_inner = 26;
    setup.electrodes = tiny_ring_electrodes();
    setup.snapshot_stride = 0;
    return setup;
}

}  // namespace

TEST_CASE("a one-shot wave on a small disc runs to annihilation", "[experiments]") {
    const OregonatorParams params;
    const IntegratorConfig cfg = scenario_integrator();
    ExperimentSetup setup;
    setup.disc_radius = 30;
    setup.electrodes = disc30_electrodes();
    setup.step_cap = 100000;

    const ScenarioResult result = run_spike_shape(Compass::E, params, cfg, setup);

    const long long iterations =
        static_cast<long long>(result.trace.samples.size() - 1) * setup.record_stride;
    REQUIRE(iterations < setup.step_cap);
    REQUIRE(iterations > 10000);
    double peak = 0.0;
    for (double s : result.trace.samples) peak = std::max(peak, std::abs(s));
    REQUIRE(peak > 1.0);
    REQUIRE(result.stats.size() == 1);
}

TEST_CASE("spike-shape snapshots follow the configured stride", "[experiments]") {
    const OregonatorParams params;
    const IntegratorConfig cfg = scenario_integrator();
    ExperimentSetup setup;
    setup.disc_radius = 30;
    setup.electrodes = disc30_electrodes();
    setup.step_cap = 20000;
    setup.snapshot_stride = 1500;

    const ScenarioResult result = run_spike_shape(Compass::E, params, cfg, setup);

    REQUIRE(result.snapshots.size() >= 5);
    for (const Snapshot& snap : result.snapshots) {
        REQUIRE(snap.iteration > 0);
        REQUIRE(snap.iteration % setup.snapshot_stride == 0);
        REQUIRE(snap.pixels.size() == 61u * 61u);
    }
    REQUIRE(result.metadata.find("scenario = spike-shape") != std::string::npos);
    REQUIRE(result.metadata.find("origin = E") != std::string::npos);
    REQUIRE(result.metadata.find("dt = 1e-04") != std::string::npos);
    REQUIRE(result.metadata.find("disc_radius = 30") != std::string::npos);
}

TEST_CASE("a held source on the ring keeps emitting waves", "[experiments]") {
    const OregonatorParams params;
    const IntegratorConfig cfg = scenario_integrator();
    ExperimentSetup setup = tiny_ring_setup();
    setup.step_cap = 200000;
    setup.sweep_target_events = 4;

    const auto points = run_phi_sweep({0.05}, params, cfg, setup);

    REQUIRE(points.size() == 1);
    REQUIRE(points[0].phi == 0.05);
    const PeriodStats& stats = points[0].stats;
    REQUIRE(stats.n_events() >= 4);
    REQUIRE(stats.mean_period.has_value());
    REQUIRE(*stats.mean_period > 2.0);
    REQUIRE(*stats.mean_period < 4.0);
    for (std::size_t k = 1; k < stats.event_times.size(); ++k)
        REQUIRE(stats.event_times[k] > stats.event_times[k - 1]);
    for (double p : stats.periods) REQUIRE(p > 0.0);
}

TEST_CASE("a trace of numerical dust yields no events", "[experiments]") {
    // Cap the run before the first wave reaches the electrodes; the residual
    // diffusive halo must not be promoted to events.
    const OregonatorParams params;
    const IntegratorConfig cfg = scenario_integrator();
    ExperimentSetup setup = tiny_ring_setup();
    setup.step_cap = 4000;

    const auto points = run_phi_sweep({0.05}, params, cfg, setup);

    REQUIRE(points[0].stats.n_events() == 0);
    REQUIRE_FALSE(points[0].stats.mean_period.has_value());
}

TEST_CASE("sweep points come back in input order for any thread count",
          "[experiments]") {
    const OregonatorParams params;
    const IntegratorConfig cfg = scenario_integrator();
    ExperimentSetup setup;
    setup.disc_radius = 60;
    setup.annulus_inner = 40;
    setup.electrodes = small_ring_electrodes();
    setup.snapshot_stride = 0;
    setup.step_cap = 150000;
    setup.sweep_target_events = 3;

    const std::vector<double> phis = {0.05, 0.03};
    std::vector<PotentialTrace> serial_traces;
    const auto serial = run_phi_sweep(phis, params, cfg, setup, &serial_traces);
    setup.threads = 2;
    std::vector<PotentialTrace> parallel_traces;
    const auto parallel = run_phi_sweep(phis, params, cfg, setup, &parallel_traces);

    REQUIRE(serial.size() == 2);
    REQUIRE(serial[0].phi == 0.05);
    REQUIRE(serial[1].phi == 0.03);
    REQUIRE(parallel[0].phi == 0.05);
    REQUIRE(parallel[1].phi == 0.03);
    for (std::size_t i = 0; i < 2; ++i) {
        REQUIRE(serial_traces[i].samples == parallel_traces[i].samples);
        REQUIRE(serial[i].stats.event_times == parallel[i].stats.event_times);
    }
}

TEST_CASE("cooling cycle reports stats per schedule segment", "[experiments]") {
    const OregonatorParams params;
    const IntegratorConfig cfg = scenario_integrator();
    ExperimentSetup setup = tiny_ring_setup();
    setup.step_cap = 200000;
    setup.cooling_tail_steps = 160000;
    const PhiSchedule schedule({{0, 0.03, false}, {120000, 0.06, false}});

    const ScenarioResult result = run_cooling_cycle(schedule, params, cfg, setup);

    REQUIRE(result.stats.size() == 2);
    REQUIRE(result.stats[0].mean_period.has_value());
    REQUIRE(result.stats[1].mean_period.has_value());
    for (double t : result.stats[0].event_times) REQUIRE(t < 12.0);
    for (double t : result.stats[1].event_times) REQUIRE(t >= 12.0);
    // The less excitable second segment stretches the period.
    REQUIRE(*result.stats[1].mean_period > 1.2 * *result.stats[0].mean_period);
    REQUIRE(result.metadata.find("scenario = cooling-cycle") != std::string::npos);
    REQUIRE(result.metadata.find("segments = 2") != std::string::npos);
}

TEST_CASE("a constant schedule yields matching segment means", "[experiments]") {
    const OregonatorParams params;
    const IntegratorConfig cfg = scenario_integrator();
    ExperimentSetup setup = tiny_ring_setup();
    setup.step_cap = 200000;
    setup.cooling_tail_steps = 100000;
    const PhiSchedule schedule(
        {{0, 0.05, false}, {100000, 0.05, false}, {200000, 0.05, false}});

    const ScenarioResult result = run_cooling_cycle(schedule, params, cfg, setup);

    REQUIRE(result.stats.size() == 3);
    REQUIRE(result.stats[1].mean_period.has_value());
    REQUIRE(result.stats[2].mean_period.has_value());
    // The first segment carries the ignition transient; the later two are
    // settled and must agree to within the event-timing resolution.
    REQUIRE(*result.stats[1].mean_period ==
            Catch::Approx(*result.stats[2].mean_period).margin(0.2));
}

TEST_CASE("calibrate returns phi_low for the identity target", "[experiments]") {
    const OregonatorParams params;
    const IntegratorConfig cfg = scenario_integrator();
    const CalibrationResult r =
        calibrate_phi_for_ratio(1.0, 0.03, params, cfg, tiny_ring_setup());
    REQUIRE(r.phi_high == 0.03);
    REQUIRE(r.achieved_ratio == 1.0);
}

TEST_CASE("calibrate validates its inputs", "[experiments]") {
    const OregonatorParams params;
    const IntegratorConfig cfg = scenario_integrator();
    const ExperimentSetup setup = tiny_ring_setup();
    REQUIRE_THROWS_AS(calibrate_phi_for_ratio(0.9, 0.03, params, cfg, setup),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(calibrate_phi_for_ratio(2.0, -0.01, params, cfg, setup),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(calibrate_phi_for_ratio(2.0, 0.08, params, cfg, setup),
                      std::invalid_argument);
}

TEST_CASE("calibrate rejects a phi_low that never oscillates", "[experiments]") {
    // A cap this short ends the base run before a second wave can arrive, so
    // no base period exists.
    const OregonatorParams params;
    const IntegratorConfig cfg = scenario_integrator();
    ExperimentSetup setup = tiny_ring_setup();
    setup.step_cap = 20000;
    REQUIRE_THROWS_AS(calibrate_phi_for_ratio(1.5, 0.05, params, cfg, setup),
                      std::domain_error);
}

TEST_CASE("calibrate raises the excitability floor for larger stretches",
          "[experiments]") {
    const OregonatorParams params;
    const IntegratorConfig cfg = scenario_integrator();
    ExperimentSetup setup = tiny_ring_setup();
    setup.step_cap = 400000;
    setup.sweep_target_events = 5;

    const CalibrationResult identity =
        calibrate_phi_for_ratio(1.0, 0.03, params, cfg, setup);
    const CalibrationResult gentle =
        calibrate_phi_for_ratio(1.2, 0.03, params, cfg, setup);
    const CalibrationResult strong =
        calibrate_phi_for_ratio(1.5, 0.03, params, cfg, setup);

    REQUIRE(identity.phi_high == 0.03);
    REQUIRE(gentle.phi_high > identity.phi_high);
    REQUIRE(strong.phi_high > gentle.phi_high);
    REQUIRE(strong.phi_high <= 0.08);
    REQUIRE(gentle.achieved_ratio > 1.0);
    REQUIRE(strong.achieved_ratio > gentle.achieved_ratio);
}

TEST_CASE("calibrate reports the achievable range for unreachable targets",
          "[experiments]") {
    // With a 15-time-unit cap the longest measurable period keeps the ratio
    // well below 8.
    const OregonatorParams params;
    const IntegratorConfig cfg = scenario_integrator();
    ExperimentSetup setup = tiny_ring_setup();
    setup.step_cap = 150000;

    try {
        calibrate_phi_for_ratio(8.0, 0.03, params, cfg, setup);
        FAIL("expected a domain_error");
    } catch (const std::domain_error& e) {
        REQUIRE(std::string(e.what()).find("unreachable") != std::string::npos);
    }
}
