#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bzlm {

// One piece of a phi-versus-iteration program. When ramp_to_next is set, phi
// interpolates linearly to the next segment's value over this segment's span;
// otherwise it holds (the final segment always holds).
struct PhiSegment {
    long long start_iteration = 0;
    double phi = 0.0;
    bool ramp_to_next = false;
};

// Piecewise excitability program emulating cooling/warming: cooling raises
// phi (less excitable), warming lowers it back.
class PhiSchedule {
public:
    PhiSchedule() : PhiSchedule(std::vector<PhiSegment>{{0, 0.05, false}}) {}

    explicit PhiSchedule(std::vector<PhiSegment> segments)
        : m_segments(std::move(segments)) {
        if (m_segments.empty())
            throw std::invalid_argument("schedule: needs at least one segment");
        if (m_segments.front().start_iteration != 0)
            throw std::invalid_argument("schedule: first segment must start at iteration 0");
        for (std::size_t i = 0; i < m_segments.size(); ++i) {
            if (!(m_segments[i].phi >= 0.0))
                throw std::invalid_argument("schedule: phi must be >= 0");
            if (i > 0 && m_segments[i].start_iteration <= m_segments[i - 1].start_iteration)
                throw std::invalid_argument("schedule: segment starts must strictly increase");
        }
    }

    static PhiSchedule constant(double phi) {
        return PhiSchedule(std::vector<PhiSegment>{{0, phi, false}});
    }

    double phi_at(long long iteration) const {
        if (iteration < 0) iteration = 0;
        // Index of the last segment with start <= iteration.
        std::size_t lo = 0, hi = m_segments.size() - 1;
        while (lo < hi) {
            const std::size_t mid = (lo + hi + 1) / 2;
            if (m_segments[mid].start_iteration <= iteration)
                lo = mid;
            else
                hi = mid - 1;
        }
        const PhiSegment& seg = m_segments[lo];
        if (!seg.ramp_to_next || lo + 1 == m_segments.size()) return seg.phi;
        const PhiSegment& next = m_segments[lo + 1];
        const double span = static_cast<double>(next.start_iteration - seg.start_iteration);
        const double frac = static_cast<double>(iteration - seg.start_iteration) / span;
        return seg.phi + (next.phi - seg.phi) * frac;
    }

    const std::vector<PhiSegment>& segments() const { return m_segments; }

    bool operator==(const PhiSchedule& o) const {
        if (m_segments.size() != o.m_segments.size()) return false;
        for (std::size_t i = 0; i < m_segments.size(); ++i) {
            if (m_segments[i].start_iteration != o.m_segments[i].start_iteration ||
                m_segments[i].phi != o.m_segments[i].phi ||
                m_segments[i].ramp_to_next != o.m_segments[i].ramp_to_next)
                return false;
        }
        return true;
    }

private:
    std::vector<PhiSegment> m_segments;
};

// Linear cooling/warming between ambient and target temperature, plus the
// affine map from temperature to phi. Rates are per second of wall time.
struct ThermalModel {
    double t_ambient = 20.0;
    double t_target = -1.0;
    double cooling_rate = -0.1;  // degC per second while powered
    double warming_rate = 0.05;  // degC per second while unpowered
    double phi_at_ambient = 0.03;
    double phi_at_target = 0.06;

    void validate() const {
        if (!(cooling_rate < 0.0))
            throw std::invalid_argument("thermal: cooling_rate must be < 0");
        if (!(warming_rate > 0.0))
            throw std::invalid_argument("thermal: warming_rate must be > 0");
        if (!(phi_at_target >= phi_at_ambient))
            throw std::invalid_argument("thermal: phi_at_target must be >= phi_at_ambient");
        if (t_target == t_ambient)
            throw std::invalid_argument("thermal: t_target must differ from t_ambient");
    }
};

enum class PowerEvent { on, off };

struct ThermalEvent {
    double time_s = 0.0;
    PowerEvent power = PowerEvent::on;
};

// Walk the temperature trajectory second by second (power on follows the
// cooling rate, power off the warming rate, clamped to [t_target, t_ambient]),
// map temperature to phi affinely, and emit one schedule segment per second of
// distinct phi. Iterations per second come from the seconds-per-model-time
// factor and dt.
inline PhiSchedule thermal_to_schedule(const ThermalModel& model,
                                       const std::vector<ThermalEvent>& events,
                                       double seconds_per_time_unit = 10.0,
                                       double dt = 0.001) {
    model.validate();
    if (!(seconds_per_time_unit > 0.0) || !(dt > 0.0))
        throw std::invalid_argument("thermal: time conversion factors must be > 0");
    for (std::size_t i = 1; i < events.size(); ++i)
        if (events[i].time_s < events[i - 1].time_s)
            throw std::invalid_argument("thermal: events must be time-ordered");

    const long long iters_per_second =
        std::max(1LL, static_cast<long long>(std::llround(1.0 / (seconds_per_time_unit * dt))));

    if (events.empty())
        return PhiSchedule::constant(model.phi_at_ambient);

    const double t_lo = std::min(model.t_target, model.t_ambient);
    const double t_hi = std::max(model.t_target, model.t_ambient);
    const double span = t_hi - t_lo;
    // Run long enough after the last event for either leg to traverse the
    // full temperature span and settle.
    const double settle =
        span / std::abs(model.cooling_rate) + span / model.warming_rate;
    const long long total_s =
        static_cast<long long>(std::ceil(events.back().time_s + settle)) + 1;

    auto phi_of = [&](double temp) {
        const double frac = (temp - model.t_ambient) / (model.t_target - model.t_ambient);
        return model.phi_at_ambient + (model.phi_at_target - model.phi_at_ambient) * frac;
    };

    std::vector<PhiSegment> segments;
    double temp = model.t_ambient;
    bool powered = false;
    std::size_t next_event = 0;
    for (long long s = 0; s <= total_s; ++s) {
        while (next_event < events.size() && events[next_event].time_s <= static_cast<double>(s)) {
            powered = events[next_event].power == PowerEvent::on;
            ++next_event;
        }
        const double phi = phi_of(temp);
        if (segments.empty() || phi != segments.back().phi)
            segments.push_back({s * iters_per_second, phi, false});
        const double rate = powered ? model.cooling_rate : model.warming_rate;
        temp = std::clamp(temp + rate, t_lo, t_hi);
    }
    return PhiSchedule(std::move(segments));
}

}  // namespace bzlm
