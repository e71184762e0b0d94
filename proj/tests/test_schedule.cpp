#include <catch2/catch_amalgamated.hpp>

#include <stdexcept>
#include <vector>

#include "bzlm/schedule.hpp"

using namespace bzlm;

TEST_CASE("schedule validation rejects malformed programs", "[schedule]") {
    REQUIRE_THROWS_AS(PhiSchedule(std::vector<PhiSegment>{}), std::invalid_argument);
    REQUIRE_THROWS_AS(PhiSchedule({{5, 0.05, false}}), std::invalid_argument);
    REQUIRE_THROWS_AS(PhiSchedule({{0, -0.01, false}}), std::invalid_argument);
    REQUIRE_THROWS_AS(PhiSchedule({{0, 0.03, false}, {100, 0.06, false}, {100, 0.04, false}}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(PhiSchedule({{0, 0.03, false}, {100, 0.06, false}, {50, 0.04, false}}),
                      std::invalid_argument);
}

TEST_CASE("a stepped program holds each value until the next start", "[schedule]") {
    const PhiSchedule sched({{0, 0.03, false}, {100, 0.06, false}});
    REQUIRE(sched.phi_at(-5) == 0.03);
    REQUIRE(sched.phi_at(0) == 0.03);
    REQUIRE(sched.phi_at(99) == 0.03);
    REQUIRE(sched.phi_at(100) == 0.06);
    REQUIRE(sched.phi_at(1'000'000'000'000LL) == 0.06);
}

TEST_CASE("a ramp segment interpolates linearly to the next value", "[schedule]") {
    const PhiSchedule sched({{0, 0.02, true}, {100, 0.06, false}});
    REQUIRE(sched.phi_at(0) == 0.02);
    REQUIRE(sched.phi_at(25) == Catch::Approx(0.03).margin(1e-15));
    REQUIRE(sched.phi_at(50) == Catch::Approx(0.04).margin(1e-15));
    REQUIRE(sched.phi_at(75) == Catch::Approx(0.05).margin(1e-15));
    REQUIRE(sched.phi_at(100) == 0.06);

    // The final segment always holds, even with the ramp flag set.
    const PhiSchedule tail_ramp({{0, 0.02, true}, {100, 0.06, true}});
    REQUIRE(tail_ramp.phi_at(5000) == 0.06);
}

TEST_CASE("constant builds a single-segment program", "[schedule]") {
    const PhiSchedule sched = PhiSchedule::constant(0.033);
    REQUIRE(sched.segments().size() == 1);
    REQUIRE(sched.phi_at(0) == 0.033);
    REQUIRE(sched.phi_at(123456) == 0.033);
    REQUIRE(PhiSchedule().phi_at(42) == 0.05);
}

TEST_CASE("schedule equality compares the full segment list", "[schedule]") {
    const PhiSchedule a({{0, 0.03, true}, {100, 0.06, false}});
    const PhiSchedule b({{0, 0.03, true}, {100, 0.06, false}});
    const PhiSchedule c({{0, 0.03, false}, {100, 0.06, false}});
    REQUIRE(a == b);
    REQUIRE_FALSE(a == c);
}

TEST_CASE("thermal model validation", "[schedule]") {
    ThermalModel m;
    REQUIRE_NOTHROW(m.validate());
    m.cooling_rate = 0.1;
    REQUIRE_THROWS_AS(m.validate(), std::invalid_argument);
    m = ThermalModel{};
    m.warming_rate = -0.05;
    REQUIRE_THROWS_AS(m.validate(), std::invalid_argument);
    m = ThermalModel{};
    m.phi_at_target = m.phi_at_ambient - 0.01;
    REQUIRE_THROWS_AS(m.validate(), std::invalid_argument);
    m = ThermalModel{};
    m.t_target = m.t_ambient;
    REQUIRE_THROWS_AS(m.validate(), std::invalid_argument);
}

TEST_CASE("no power events yield a constant ambient program", "[schedule]") {
    const ThermalModel m;
    const PhiSchedule sched = thermal_to_schedule(m, {});
    REQUIRE(sched == PhiSchedule::constant(m.phi_at_ambient));
}

TEST_CASE("a lone power-off keeps the marble at ambient", "[schedule]") {
    const ThermalModel m;
    const PhiSchedule sched = thermal_to_schedule(m, {{0.0, PowerEvent::off}});
    REQUIRE(sched.segments().size() == 1);
    REQUIRE(sched.phi_at(1'000'000) == m.phi_at_ambient);
}

TEST_CASE("powering on cools to the target in the expected time", "[schedule]") {
    // 21 degC span at -0.1 degC/s takes 210 s; at the default conversion one
    // second of wall time is 100 iterations.
    const ThermalModel m;
    const PhiSchedule sched = thermal_to_schedule(m, {{0.0, PowerEvent::on}});
    REQUIRE(sched.phi_at(0) == m.phi_at_ambient);
    REQUIRE(sched.phi_at(209 * 100) < m.phi_at_target);
    REQUIRE(sched.phi_at(210 * 100) == m.phi_at_target);
    REQUIRE(sched.segments().back().phi == m.phi_at_target);
    REQUIRE(sched.segments().back().start_iteration == 21000);
    REQUIRE(sched.segments().size() == 211);
    // Halfway down the trajectory phi sits halfway between the anchors.
    REQUIRE(sched.phi_at(105 * 100) == Catch::Approx(0.045).margin(1e-12));
}

TEST_CASE("the warming leg is half as steep as the cooling leg", "[schedule]") {
    const ThermalModel m;
    const PhiSchedule sched = thermal_to_schedule(
        m, {{0.0, PowerEvent::on}, {210.0, PowerEvent::off}});
    long long cooled_at = -1;
    for (const PhiSegment& seg : sched.segments()) {
        if (seg.phi == m.phi_at_target) {
            cooled_at = seg.start_iteration;
            break;
        }
    }
    REQUIRE(cooled_at == 21000);
    const PhiSegment& last = sched.segments().back();
    REQUIRE(last.phi == m.phi_at_ambient);
    // Warming spans 420 s against the 210 s cooling leg.
    REQUIRE(last.start_iteration - cooled_at == 2 * 21000);
}

TEST_CASE("unordered power events are rejected", "[schedule]") {
    const ThermalModel m;
    REQUIRE_THROWS_AS(
        thermal_to_schedule(m, {{10.0, PowerEvent::on}, {5.0, PowerEvent::off}}),
        std::invalid_argument);
}

TEST_CASE("time conversion factors must be positive", "[schedule]") {
    const ThermalModel m;
    REQUIRE_THROWS_AS(thermal_to_schedule(m, {}, 0.0, 0.001), std::invalid_argument);
    REQUIRE_THROWS_AS(thermal_to_schedule(m, {}, 10.0, -1.0), std::invalid_argument);
}

TEST_CASE("iterations per second follow the time conversion", "[schedule]") {
    const ThermalModel m;
    const std::vector<ThermalEvent> on = {{0.0, PowerEvent::on}};
    const PhiSchedule fine = thermal_to_schedule(m, on, 10.0, 1e-4);
    REQUIRE(fine.segments().at(1).start_iteration == 1000);
    REQUIRE(fine.segments().back().start_iteration == 210 * 1000);
    // A conversion coarser than one iteration per second clamps to one.
    const PhiSchedule coarse = thermal_to_schedule(m, on, 10.0, 1.0);
    REQUIRE(coarse.segments().at(1).start_iteration == 1);
}
