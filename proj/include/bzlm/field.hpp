#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace bzlm {

// Row-major scalar lattice: index = y * width + x.
struct ScalarField2D {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    ScalarField2D() = default;
    ScalarField2D(int w, int h, double fill = 0.0)
        : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {
        if (w <= 0 || h <= 0)
            throw std::invalid_argument("ScalarField2D: dimensions must be positive");
    }

    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * width + x;
    }
    double& at(int x, int y) { return values[index(x, y)]; }
    double at(int x, int y) const { return values[index(x, y)]; }
    std::size_t size() const { return values.size(); }

    bool same_shape(const ScalarField2D& other) const {
        return width == other.width && height == other.height;
    }
};

// Two-variable Oregonator kinetics:
//   du/dt = (1/epsilon) * (u - u^2 - (f*v + phi) * (u - q)/(u + q)) + d_u * lap(u)
//   dv/dt = u - v                   (the inhibitor does not diffuse)
// phi is the excitability knob: larger phi, less excitable medium.
struct OregonatorParams {
    double epsilon = 0.02;
    double f = 1.4;
    double q = 0.002;
    double d_u = 1.0;
    double phi = 0.05;

    void validate() const {
        if (!(epsilon > 0.0)) throw std::invalid_argument("params: epsilon must be > 0");
        if (!(q > 0.0)) throw std::invalid_argument("params: q must be > 0");
        if (!(f > 0.0)) throw std::invalid_argument("params: f must be > 0");
        if (!(d_u >= 0.0)) throw std::invalid_argument("params: d_u must be >= 0");
        if (!(phi >= 0.0)) throw std::invalid_argument("params: phi must be >= 0");
    }
};

struct IntegratorConfig {
    double dt = 0.001;
    double dx = 0.25;
    double divergence_bound = 1e3;

    void validate() const {
        if (!(dt > 0.0)) throw std::invalid_argument("integrator: dt must be > 0");
        if (!(dx > 0.0)) throw std::invalid_argument("integrator: dx must be > 0");
        if (!(divergence_bound > 0.0))
            throw std::invalid_argument("integrator: divergence_bound must be > 0");
    }
};

struct SimState {
    ScalarField2D u;
    ScalarField2D v;
    long long iteration = 0;
    double sim_time = 0.0;  // always iteration * dt
};

// A blown-up explicit Euler step; reports where and when it happened.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(long long iteration_, int x_, int y_, double value_)
        : std::runtime_error("divergence at iteration " + std::to_string(iteration_) +
                             ", node (" + std::to_string(x_) + "," + std::to_string(y_) +
                             "), value " + std::to_string(value_)),
          iteration(iteration_), x(x_), y(y_), value(value_) {}

    long long iteration;
    int x;
    int y;
    double value;
};

}  // namespace bzlm
