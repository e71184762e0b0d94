#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "bzlm/field.hpp"
#include "bzlm/geometry.hpp"
#include "bzlm/schedule.hpp"

namespace bzlm {

// Pointwise Oregonator kinetics, diffusion excluded:
//   du/dt = (1/epsilon) * (u - u^2 - (f*v + phi) * (u - q)/(u + q))
//   dv/dt = u - v
inline std::pair<double, double> reaction_rates(double u_val, double v_val,
                                                const OregonatorParams& p) {
    p.validate();
    if (!std::isfinite(u_val) || !std::isfinite(v_val))
        throw std::domain_error("reaction_rates: non-finite input");
    if (u_val + p.q == 0.0)
        throw std::domain_error("reaction_rates: u + q must be nonzero");
    const double du =
        (u_val - u_val * u_val -
         (p.f * v_val + p.phi) * ((u_val - p.q) / (u_val + p.q))) / p.epsilon;
    const double dv = u_val - v_val;
    return {du, dv};
}

// Homogeneous steady state u* (and v* = u*): the root of
//   g(u) = u - u^2 - (f*u + phi) * (u - q)/(u + q)
// on (0, 0.1], found by bisection to 1e-12. g(0) = phi >= 0 and g is negative
// by 0.1 for all sensible parameters; waves must then be induced by
// stimulation rather than appearing spontaneously.
inline double steady_state_u(const OregonatorParams& p) {
    p.validate();
    auto g = [&](double u) {
        return u - u * u - (p.f * u + p.phi) * ((u - p.q) / (u + p.q));
    };
    double lo = 0.0, hi = 0.1;
    if (!(g(lo) >= 0.0) || !(g(hi) < 0.0))
        throw std::domain_error("steady_state_u: root not bracketed in (0, 0.1]");
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (g(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

// Uniform (u0, v0) over the in-domain nodes, zero outside.
inline SimState make_uniform_state(const Mask& mask, double u0, double v0) {
    SimState s;
    s.u = ScalarField2D(mask.width, mask.height, 0.0);
    s.v = ScalarField2D(mask.width, mask.height, 0.0);
    for (std::size_t i = 0; i < mask.in_domain.size(); ++i) {
        if (mask.in_domain[i]) {
            s.u.values[i] = u0;
            s.v.values[i] = v0;
        }
    }
    return s;
}

// Steady-state initial condition for the given parameters.
inline SimState make_steady_state(const Mask& mask, const OregonatorParams& p) {
    const double u0 = steady_state_u(p);
    return make_uniform_state(mask, u0, u0);
}

// Five-node Laplacian with no-flux boundaries: an out-of-mask or out-of-bounds
// neighbor is replaced by the center value (mirrored), so a constant field has
// an exactly zero Laplacian everywhere. Out-of-mask nodes return 0.
// Neighbors are summed as (W + E) + (N + S); keeping that order is what makes
// mirrored runs bit-exact mirrors of each other.
inline ScalarField2D laplacian5(const ScalarField2D& field, const Mask& mask, double dx) {
    if (field.width != mask.width || field.height != mask.height)
        throw std::invalid_argument("laplacian5: field and mask dimensions differ");
    if (!(dx > 0.0)) throw std::invalid_argument("laplacian5: dx must be > 0");
    ScalarField2D out(field.width, field.height, 0.0);
    const double inv_dx2 = 1.0 / (dx * dx);
    for (int y = 0; y < field.height; ++y) {
        for (int x = 0; x < field.width; ++x) {
            if (!mask.in_domain[mask.index(x, y)]) continue;
            const double c = field.at(x, y);
            const double w = mask.is_in_domain(x - 1, y) ? field.at(x - 1, y) : c;
            const double e = mask.is_in_domain(x + 1, y) ? field.at(x + 1, y) : c;
            const double n = mask.is_in_domain(x, y - 1) ? field.at(x, y - 1) : c;
            const double s = mask.is_in_domain(x, y + 1) ? field.at(x, y + 1) : c;
            out.at(x, y) = ((w + e) + (n + s) - 4.0 * c) * inv_dx2;
        }
    }
    return out;
}

// Observer invoked whenever iteration % stride == 0 (after the step), i.e. at
// exact iterations stride, 2*stride, ... during a run started at iteration 0.
struct Observer {
    long long stride = 1;
    std::function<void(const SimState&)> callback;
};

// Explicit Euler stepper bound to one mask and one state stream (single
// writer). Precomputes the in-domain node list and mirrored neighbor indices
// once; all loops are row-major so every run is bit-reproducible.
class Stepper {
public:
    Stepper(const Mask& mask, const OregonatorParams& params, const IntegratorConfig& cfg)
        : m_mask(&mask), m_params(params), m_cfg(cfg) {
        params.validate();
        cfg.validate();
        const int w = mask.width, h = mask.height;
        bool any = false;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const std::size_t i = mask.index(x, y);
                if (!mask.in_domain[i]) continue;
                any = true;
                m_node.push_back(static_cast<std::int32_t>(i));
                m_react.push_back(mask.excitable[i]);
                const std::int32_t self = static_cast<std::int32_t>(i);
                m_nbr.push_back(mask.is_in_domain(x - 1, y) ? self - 1 : self);
                m_nbr.push_back(mask.is_in_domain(x + 1, y) ? self + 1 : self);
                m_nbr.push_back(mask.is_in_domain(x, y - 1) ? self - w : self);
                m_nbr.push_back(mask.is_in_domain(x, y + 1) ? self + w : self);
            }
        }
        if (!any) throw std::invalid_argument("stepper: mask has no in-domain nodes");
    }

    // Clamp u = 1 on the site before every step.
    void add_held_source(const StimulusSite& site) {
        const auto nodes = site_nodes(site, *m_mask);
        if (nodes.empty())
            throw std::invalid_argument("held source lies entirely outside the domain");
        m_held.insert(m_held.end(), nodes.begin(), nodes.end());
    }

    // Draw phi from a schedule instead of the constant params value. The
    // schedule must outlive the stepper.
    void set_schedule(const PhiSchedule* schedule) { m_schedule = schedule; }

    // Diffusion-only mode for conservation diagnostics.
    void set_reaction_enabled(bool enabled) { m_reaction = enabled; }

    void step(SimState& state) {
        if (state.u.width != m_mask->width || state.u.height != m_mask->height ||
            !state.u.same_shape(state.v))
            throw std::invalid_argument("stepper: state does not match mask dimensions");
        if (!m_primed) {
            // Out-of-domain nodes are never written; seed both buffers with
            // them once so swaps keep them intact.
            m_u_next = state.u.values;
            m_v_next = state.v.values;
            m_primed = true;
        }
        for (auto i : m_held) state.u.values[static_cast<std::size_t>(i)] = 1.0;

        const double phi =
            m_schedule ? m_schedule->phi_at(state.iteration) : m_params.phi;
        const double dt = m_cfg.dt;
        const double inv_dx2 = 1.0 / (m_cfg.dx * m_cfg.dx);
        const double inv_eps = 1.0 / m_params.epsilon;
        const double f = m_params.f, q = m_params.q, d_u = m_params.d_u;
        const double bound = m_cfg.divergence_bound;
        const double* u = state.u.values.data();
        const double* v = state.v.values.data();
        double* un_out = m_u_next.data();
        double* vn_out = m_v_next.data();
        const std::int32_t* nbr = m_nbr.data();

        for (std::size_t k = 0; k < m_node.size(); ++k) {
            const std::size_t i = static_cast<std::size_t>(m_node[k]);
            const double c = u[i];
            const double vc = v[i];
            const double lap =
                ((u[nbr[4 * k + 0]] + u[nbr[4 * k + 1]]) +
                 (u[nbr[4 * k + 2]] + u[nbr[4 * k + 3]]) - 4.0 * c) * inv_dx2;
            double du = 0.0, dv = 0.0;
            if (m_reaction && m_react[k]) {
                du = (c - c * c - (f * vc + phi) * ((c - q) / (c + q))) * inv_eps;
                dv = c - vc;
            }
            const double un = c + dt * (du + d_u * lap);
            const double vn = vc + dt * dv;
            // Also trips on NaN, which fails every comparison.
            if (!(std::fabs(un) <= bound) || !(std::fabs(vn) <= bound)) {
                const int x = static_cast<int>(i % m_mask->width);
                const int y = static_cast<int>(i / m_mask->width);
                throw DivergenceError(state.iteration + 1, x, y,
                                      std::fabs(un) <= bound ? vn : un);
            }
            un_out[i] = un;
            vn_out[i] = vn;
        }
        state.u.values.swap(m_u_next);
        state.v.values.swap(m_v_next);
        state.iteration += 1;
        state.sim_time = static_cast<double>(state.iteration) * dt;
    }

    void run(SimState& state, long long n_steps, std::span<const Observer> observers = {}) {
        if (n_steps < 0) throw std::invalid_argument("stepper: n_steps must be >= 0");
        for (long long s = 0; s < n_steps; ++s) {
            step(state);
            for (const auto& ob : observers) {
                if (ob.stride > 0 && state.iteration % ob.stride == 0 && ob.callback)
                    ob.callback(state);
            }
        }
    }

    const Mask& mask() const { return *m_mask; }

private:
    const Mask* m_mask;
    OregonatorParams m_params;
    IntegratorConfig m_cfg;
    const PhiSchedule* m_schedule = nullptr;
    std::vector<std::int32_t> m_node;   // row-major in-domain node indices
    std::vector<std::int32_t> m_nbr;    // W,E,N,S per node; self where mirrored
    std::vector<std::uint8_t> m_react;  // excitable flag per node
    std::vector<std::int32_t> m_held;
    std::vector<double> m_u_next, m_v_next;
    bool m_primed = false;
    bool m_reaction = true;
};

// One explicit Euler step; convenience wrapper over Stepper.
inline SimState euler_step(SimState state, const OregonatorParams& params,
                           const IntegratorConfig& cfg, const Mask& mask) {
    Stepper stepper(mask, params, cfg);
    stepper.step(state);
    return state;
}

// Step n_steps with phi drawn from the schedule each iteration; held-source
// sites are clamped to u=1 before every step, and observers fire at their
// exact strides.
inline SimState integrate(SimState state, const OregonatorParams& params,
                          const IntegratorConfig& cfg, const Mask& mask,
                          const PhiSchedule& schedule, long long n_steps,
                          std::span<const Observer> observers = {},
                          std::span<const StimulusSite> held_sources = {}) {
    Stepper stepper(mask, params, cfg);
    stepper.set_schedule(&schedule);
    for (const auto& site : held_sources)
        if (site.mode == StimulusMode::held_source) stepper.add_held_source(site);
    stepper.run(state, n_steps, observers);
    return state;
}

}  // namespace bzlm
