#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "bzlm/field.hpp"

namespace bzlm {

// Which nodes exist and which of them react. excitable is always a subset of
// in_domain; in-domain nodes that are not excitable still diffuse, their
// reaction terms are suppressed (unreactive bulk).
struct Mask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> in_domain;
    std::vector<std::uint8_t> excitable;

    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * width + x;
    }
    bool inside(int x, int y) const {
        return x >= 0 && y >= 0 && x < width && y < height;
    }
    bool is_in_domain(int x, int y) const {
        return inside(x, y) && in_domain[index(x, y)] != 0;
    }
    bool is_excitable(int x, int y) const {
        return inside(x, y) && excitable[index(x, y)] != 0;
    }

    long in_domain_count() const {
        long n = 0;
        for (auto b : in_domain) n += b;
        return n;
    }
    long excitable_count() const {
        long n = 0;
        for (auto b : excitable) n += b;
        return n;
    }
};

// Inclusive rectangle of nodes, used for the virtual electrodes.
struct RectDomain {
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;

    bool contains(int x, int y) const {
        return x >= x0 && x <= x1 && y >= y0 && y <= y1;
    }
    bool intersects(const RectDomain& o) const {
        return x0 <= o.x1 && o.x0 <= x1 && y0 <= o.y1 && o.y0 <= y1;
    }
    void validate() const {
        if (x0 > x1 || y0 > y1)
            throw std::invalid_argument("rectangle: requires x0 <= x1 and y0 <= y1");
    }

    bool operator==(const RectDomain&) const = default;
};

enum class StimulusMode { one_shot, held_source };

// Disc of nodes around a center; one-shot sets u=1 once, a held source is
// clamped to u=1 before every step (an auto-excitation locus).
struct StimulusSite {
    int cx = 0;
    int cy = 0;
    int radius = 3;
    StimulusMode mode = StimulusMode::one_shot;
};

enum class Compass { N, NE, E, SE, S, SW, W, NW };

inline const char* to_string(Compass c) {
    switch (c) {
        case Compass::N: return "N";
        case Compass::NE: return "NE";
        case Compass::E: return "E";
        case Compass::SE: return "SE";
        case Compass::S: return "S";
        case Compass::SW: return "SW";
        case Compass::W: return "W";
        case Compass::NW: return "NW";
    }
    return "?";
}

inline Compass compass_from_string(const std::string& s) {
    if (s == "N") return Compass::N;
    if (s == "NE") return Compass::NE;
    if (s == "E") return Compass::E;
    if (s == "SE") return Compass::SE;
    if (s == "S") return Compass::S;
    if (s == "SW") return Compass::SW;
    if (s == "W") return Compass::W;
    if (s == "NW") return Compass::NW;
    throw std::invalid_argument("unknown compass direction: " + s);
}

// Disc mask on a (2r+1)^2 lattice, in-domain where (x-r)^2 + (y-r)^2 <= r^2.
// Every in-domain node is excitable.
inline Mask make_disc_mask(int radius) {
    if (radius < 1) throw std::invalid_argument("disc mask: radius must be >= 1");
    const int n = 2 * radius + 1;
    Mask m;
    m.width = n;
    m.height = n;
    m.in_domain.assign(static_cast<std::size_t>(n) * n, 0);
    m.excitable.assign(static_cast<std::size_t>(n) * n, 0);
    const long r2 = static_cast<long>(radius) * radius;
    for (int y = 0; y < n; ++y) {
        const long dy = y - radius;
        for (int x = 0; x < n; ++x) {
            const long dx = x - radius;
            if (dx * dx + dy * dy <= r2) {
                m.in_domain[m.index(x, y)] = 1;
                m.excitable[m.index(x, y)] = 1;
            }
        }
    }
    return m;
}

// Full disc in-domain, but only the ring with node radius > inner_radius
// reacts; the interior diffuses passively.
inline Mask make_annulus_mask(int outer_radius, int inner_radius) {
    if (inner_radius <= 0)
        throw std::invalid_argument("annulus mask: inner_radius must be > 0");
    if (inner_radius >= outer_radius)
        throw std::invalid_argument("annulus mask: inner_radius must be < outer_radius");
    Mask m = make_disc_mask(outer_radius);
    const long i2 = static_cast<long>(inner_radius) * inner_radius;
    for (int y = 0; y < m.height; ++y) {
        const long dy = y - outer_radius;
        for (int x = 0; x < m.width; ++x) {
            const long dx = x - outer_radius;
            if (m.in_domain[m.index(x, y)] && dx * dx + dy * dy <= i2)
                m.excitable[m.index(x, y)] = 0;
        }
    }
    return m;
}

// Row-major list of in-domain node indices within the site disc.
inline std::vector<std::int32_t> site_nodes(const StimulusSite& site, const Mask& mask) {
    std::vector<std::int32_t> nodes;
    const long r2 = static_cast<long>(site.radius) * site.radius;
    for (int y = site.cy - site.radius; y <= site.cy + site.radius; ++y) {
        for (int x = site.cx - site.radius; x <= site.cx + site.radius; ++x) {
            const long dx = x - site.cx;
            const long dy = y - site.cy;
            if (dx * dx + dy * dy <= r2 && mask.is_in_domain(x, y))
                nodes.push_back(static_cast<std::int32_t>(mask.index(x, y)));
        }
    }
    return nodes;
}

// Set u = 1 on the in-domain part of the site. Held sources are additionally
// re-imposed every iteration by the stepper they are registered with; v is
// never touched.
inline SimState& stimulate(SimState& state, const StimulusSite& site, const Mask& mask) {
    const auto nodes = site_nodes(site, mask);
    if (nodes.empty())
        throw std::invalid_argument("stimulate: site lies entirely outside the domain");
    for (auto i : nodes) state.u.values[static_cast<std::size_t>(i)] = 1.0;
    return state;
}

// Site of the given radius centered on the in-domain node nearest the ideal
// boundary point in the named compass direction. Assumes a disc/annulus mask
// (center and radius inferred from the lattice dimensions). Near-ties resolve
// deterministically by row-major scan order.
inline StimulusSite edge_site(const Mask& mask, Compass compass, int radius = 3,
                              StimulusMode mode = StimulusMode::one_shot) {
    const double c = (mask.width - 1) / 2.0;
    const double r = c;
    const double diag = 1.0 / std::sqrt(2.0);
    double ux = 0.0, uy = 0.0;
    switch (compass) {
        case Compass::N: ux = 0.0; uy = -1.0; break;
        case Compass::NE: ux = diag; uy = -diag; break;
        case Compass::E: ux = 1.0; uy = 0.0; break;
        case Compass::SE: ux = diag; uy = diag; break;
        case Compass::S: ux = 0.0; uy = 1.0; break;
        case Compass::SW: ux = -diag; uy = diag; break;
        case Compass::W: ux = -1.0; uy = 0.0; break;
        case Compass::NW: ux = -diag; uy = -diag; break;
    }
    const double px = c + r * ux;
    const double py = c + r * uy;

    double best = -1.0;
    int bx = -1, by = -1;
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            if (!mask.in_domain[mask.index(x, y)]) continue;
            const double d = (x - px) * (x - px) + (y - py) * (y - py);
            if (bx < 0 || d < best) {
                best = d;
                bx = x;
                by = y;
            }
        }
    }
    if (bx < 0) throw std::invalid_argument("edge_site: mask has no in-domain nodes");
    return StimulusSite{bx, by, radius, mode};
}

}  // namespace bzlm
