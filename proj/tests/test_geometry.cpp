#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "bzlm/dynamics.hpp"
#include "bzlm/geometry.hpp"

using namespace bzlm;

namespace {

// Independent brute-force count of lattice points with x^2 + y^2 <= r^2,
// done per scanline rather than via the mask construction loop.
long circle_point_count(int r) {
    long n = 0;
    for (int dy = -r; dy <= r; ++dy) {
        const double span = std::sqrt(static_cast<double>(r) * r - static_cast<double>(dy) * dy);
        n += 2 * static_cast<long>(std::floor(span)) + 1;
    }
    return n;
}

}  // namespace

TEST_CASE("disc mask counts match the enumeration oracle", "[geometry]") {
    REQUIRE(make_disc_mask(1).in_domain_count() == 5);
    REQUIRE(make_disc_mask(5).in_domain_count() == 81);
    REQUIRE(circle_point_count(5) == 81);
    REQUIRE(make_disc_mask(50).in_domain_count() == circle_point_count(50));
    REQUIRE(make_disc_mask(50).in_domain_count() == 7845);
    const Mask big = make_disc_mask(185);
    REQUIRE(big.in_domain_count() == circle_point_count(185));
    REQUIRE(big.in_domain_count() == 107501);
    REQUIRE(big.excitable_count() == big.in_domain_count());
}

TEST_CASE("disc mask is symmetric under 90-degree rotation", "[geometry]") {
    const Mask m = make_disc_mask(185);
    const int n = m.width;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            REQUIRE(m.in_domain[m.index(x, y)] == m.in_domain[m.index(n - 1 - y, x)]);
}

TEST_CASE("disc mask rejects radius below one", "[geometry]") {
    REQUIRE_THROWS_AS(make_disc_mask(0), std::invalid_argument);
    REQUIRE_THROWS_AS(make_disc_mask(-5), std::invalid_argument);
}

TEST_CASE("annulus keeps the full disc in-domain but restricts excitability",
          "[geometry]") {
    const Mask m = make_annulus_mask(185, 150);
    REQUIRE(m.in_domain_count() == 107501);
    REQUIRE(m.excitable_count() == 36820);  // 107501 - 70681 interior points
    // Center node diffuses but does not react.
    REQUIRE(m.is_in_domain(185, 185));
    REQUIRE_FALSE(m.is_excitable(185, 185));
    // A ring node does both.
    REQUIRE(m.is_in_domain(370, 185));
    REQUIRE(m.is_excitable(370, 185));
}

TEST_CASE("annulus rejects degenerate radii", "[geometry]") {
    REQUIRE_THROWS_AS(make_annulus_mask(185, 0), std::invalid_argument);
    REQUIRE_THROWS_AS(make_annulus_mask(150, 185), std::invalid_argument);
    REQUIRE_THROWS_AS(make_annulus_mask(150, 150), std::invalid_argument);
}

TEST_CASE("excitable nodes are always a subset of in-domain nodes", "[geometry]") {
    for (const Mask& m : {make_disc_mask(7), make_annulus_mask(30, 12)}) {
        for (std::size_t i = 0; i < m.in_domain.size(); ++i)
            if (m.excitable[i]) REQUIRE(m.in_domain[i] == 1);
    }
}

TEST_CASE("edge sites land on the compass boundary nodes", "[geometry]") {
    const Mask m = make_disc_mask(185);
    const StimulusSite south = edge_site(m, Compass::S);
    REQUIRE(south.cx == 185);
    REQUIRE(south.cy == 370);
    const StimulusSite east = edge_site(m, Compass::E);
    REQUIRE(east.cx == 370);
    REQUIRE(east.cy == 185);
    // The ideal NE point (315.81, 54.19) has two near-equidistant in-domain
    // neighbors; with the 1/sqrt(2) diagonal, (315, 54) wins.
    const StimulusSite ne = edge_site(m, Compass::NE);
    REQUIRE(m.is_in_domain(ne.cx, ne.cy));
    const double dx = ne.cx - (185.0 + 185.0 / std::sqrt(2.0));
    const double dy = ne.cy - (185.0 - 185.0 / std::sqrt(2.0));
    REQUIRE(std::sqrt(dx * dx + dy * dy) < 1.0);
    REQUIRE(ne.cx == 315);
    REQUIRE(ne.cy == 54);
    REQUIRE(ne.radius == 3);
}

TEST_CASE("one-shot stimulation sets exactly the in-domain site to one", "[geometry]") {
    const Mask m = make_disc_mask(20);
    OregonatorParams p;
    SimState s = make_steady_state(m, p);
    const double ustar = s.u.at(20, 20);
    const StimulusSite site = edge_site(m, Compass::E);
    stimulate(s, site, m);
    long changed = 0;
    for (std::size_t i = 0; i < m.in_domain.size(); ++i)
        if (s.u.values[i] == 1.0) ++changed;
    REQUIRE(changed == static_cast<long>(site_nodes(site, m).size()));
    REQUIRE(changed > 0);
    // v untouched, far nodes untouched, nothing outside the domain written.
    REQUIRE(s.v.at(site.cx, site.cy) == ustar);
    REQUIRE(s.u.at(20, 20) == ustar);
    for (std::size_t i = 0; i < m.in_domain.size(); ++i)
        if (!m.in_domain[i]) REQUIRE(s.u.values[i] == 0.0);
}

TEST_CASE("stimulation is idempotent", "[geometry]") {
    const Mask m = make_disc_mask(10);
    OregonatorParams p;
    SimState s = make_steady_state(m, p);
    const StimulusSite site = edge_site(m, Compass::N);
    stimulate(s, site, m);
    const auto u_once = s.u.values;
    stimulate(s, site, m);
    REQUIRE(s.u.values == u_once);
}

TEST_CASE("stimulating fully outside the domain is an error", "[geometry]") {
    const Mask m = make_disc_mask(10);
    OregonatorParams p;
    SimState s = make_steady_state(m, p);
    const StimulusSite site{0, 0, 1, StimulusMode::one_shot};  // corner, outside disc
    REQUIRE_THROWS_AS(stimulate(s, site, m), std::invalid_argument);
}

TEST_CASE("compass names round-trip", "[geometry]") {
    for (Compass c : {Compass::N, Compass::NE, Compass::E, Compass::SE, Compass::S,
                      Compass::SW, Compass::W, Compass::NW})
        REQUIRE(compass_from_string(to_string(c)) == c);
    REQUIRE_THROWS_AS(compass_from_string("NNE"), std::invalid_argument);
}
