#pragma once

#include <stdexcept>
#include <vector>

#include "bzlm/dynamics.hpp"
#include "bzlm/field.hpp"
#include "bzlm/geometry.hpp"

namespace bzlm {

// Two disjoint rectangular virtual electrodes; the reading is
// sum(u over e2) - sum(u over e1), both restricted to in-domain nodes.
struct ElectrodePair {
    RectDomain e1;
    RectDomain e2;

    void validate(const Mask& mask) const {
        e1.validate();
        e2.validate();
        if (e1.intersects(e2))
            throw std::invalid_argument("electrodes: e1 and e2 must be disjoint");
        for (const RectDomain* r : {&e1, &e2}) {
            if (r->x0 < 0 || r->y0 < 0 || r->x1 >= mask.width || r->y1 >= mask.height)
                throw std::invalid_argument("electrodes: rectangle outside lattice bounds");
            bool any = false;
            for (int y = r->y0; y <= r->y1 && !any; ++y)
                for (int x = r->x0; x <= r->x1 && !any; ++x)
                    if (mask.in_domain[mask.index(x, y)]) any = true;
            if (!any)
                throw std::invalid_argument("electrodes: rectangle fully outside the domain");
        }
    }

    bool operator==(const ElectrodePair&) const = default;
};

// Virtual potential difference. Summation is fixed row-major within each
// rectangle, so the value is reproducible bit for bit and exactly negates
// when the electrodes are swapped.
inline double measure_potential(const SimState& state, const ElectrodePair& electrodes,
                                const Mask& mask) {
    electrodes.validate(mask);
    auto rect_sum = [&](const RectDomain& r) {
        double acc = 0.0;
        for (int y = r.y0; y <= r.y1; ++y)
            for (int x = r.x0; x <= r.x1; ++x)
                if (mask.in_domain[mask.index(x, y)]) acc += state.u.at(x, y);
        return acc;
    };
    return rect_sum(electrodes.e2) - rect_sum(electrodes.e1);
}

// Uniformly sampled potential signal. Sample k corresponds to
// sim_time = k * record_stride * dt; the recorder seeds sample 0 at
// iteration 0 before stepping begins.
struct PotentialTrace {
    long long record_stride = 10;
    double dt = 0.001;
    std::vector<double> samples;

    double time_at(std::size_t k) const {
        return static_cast<double>(k) * static_cast<double>(record_stride) * dt;
    }
    double sample_spacing() const { return static_cast<double>(record_stride) * dt; }
    std::size_t size() const { return samples.size(); }
};

// Append one potential sample; meant to be called at the trace's stride.
inline PotentialTrace& record(PotentialTrace& trace, const SimState& state,
                              const ElectrodePair& electrodes, const Mask& mask) {
    trace.samples.push_back(measure_potential(state, electrodes, mask));
    return trace;
}

// Observer wiring for integrate()/Stepper::run(): appends one sample per
// stride. Seed the trace with record(trace, initial_state, ...) first so
// sample 0 sits at t = 0.
inline Observer make_trace_observer(PotentialTrace& trace, const ElectrodePair& electrodes,
                                    const Mask& mask) {
    return Observer{trace.record_stride, [&trace, &electrodes, &mask](const SimState& s) {
                        record(trace, s, electrodes, mask);
                    }};
}

}  // namespace bzlm
