#pragma once

#include <cmath>
#include <cstddef>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bzlm/experiments.hpp"
#include "bzlm/field.hpp"
#include "bzlm/geometry.hpp"
#include "bzlm/measurement.hpp"
#include "bzlm/schedule.hpp"

namespace bzlm {

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what_) : std::runtime_error(what_) {}
};

struct GeometrySpec {
    enum class Shape { disc, annulus };
    Shape shape = Shape::disc;
    int radius = 185;
    int inner_radius = 150;
};

inline Mask make_mask(const GeometrySpec& g) {
    if (g.shape == GeometrySpec::Shape::disc) return make_disc_mask(g.radius);
    return make_annulus_mask(g.radius, g.inner_radius);
}

// A stimulus given either by compass direction (resolved against the mask
// boundary) or by an explicit center node.
struct StimulusSpec {
    bool by_compass = true;
    Compass compass = Compass::NE;
    int cx = 0;
    int cy = 0;
    int radius = 3;
    StimulusMode mode = StimulusMode::one_shot;
};

inline StimulusSite resolve_stimulus(const StimulusSpec& spec, const Mask& mask) {
    if (spec.by_compass) return edge_site(mask, spec.compass, spec.radius, spec.mode);
    return StimulusSite{spec.cx, spec.cy, spec.radius, spec.mode};
}

// One declarative document describing a run; every omitted key gets its
// default filled in and echoed back, so the echo alone reproduces the run.
struct RunConfig {
    std::string scenario = "custom";  // custom | spike-shape | sweep-phi | cooling-cycle
    Compass origin = Compass::NE;     // spike-shape
    std::vector<double> phi_values;   // sweep-phi
    GeometrySpec geometry;
    OregonatorParams params;
    IntegratorConfig integrator;
    ElectrodePair electrodes = default_disc_electrodes();
    std::vector<StimulusSpec> stimuli;
    PhiSchedule schedule = PhiSchedule::constant(0.05);
    long long n_steps = 10000;
    long long record_stride = 10;
    long long snapshot_stride = 0;  // 0 = no snapshots
    double snapshot_threshold = 0.04;
    double seconds_per_time_unit = 10.0;
    int threads = 1;
    std::string output_dir = "out";

    ExperimentSetup setup() const {
        ExperimentSetup s;
        s.disc_radius = geometry.radius;
        s.annulus_inner = geometry.inner_radius;
        s.electrodes = electrodes;
        s.record_stride = record_stride;
        s.snapshot_stride = snapshot_stride;
        s.snapshot_threshold = snapshot_threshold;
        s.threads = threads;
        if (!stimuli.empty()) {
            if (stimuli.front().mode == StimulusMode::held_source)
                s.source_radius = stimuli.front().radius;
            else
                s.stimulus_radius = stimuli.front().radius;
        }
        return s;
    }
};

namespace detail {

using json = nlohmann::ordered_json;

inline void check_keys(const json& node, const std::string& path,
                       const std::set<std::string>& allowed) {
    for (const auto& item : node.items())
        if (!allowed.count(item.key()))
            throw ConfigError("unknown key '" + item.key() + "' in " + path);
}

template <typename T>
inline T get_or(const json& node, const std::string& key, T fallback) {
    if (!node.contains(key)) return fallback;
    try {
        return node.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("key '" + key + "' has the wrong type");
    }
}

inline RectDomain parse_rect(const json& node, const std::string& path) {
    if (!node.is_object()) throw ConfigError(path + " must be an object");
    check_keys(node, path, {"x0", "y0", "x1", "y1"});
    for (const char* k : {"x0", "y0", "x1", "y1"})
        if (!node.contains(k)) throw ConfigError(path + " is missing '" + k + "'");
    return RectDomain{node.at("x0").get<int>(), node.at("y0").get<int>(),
                      node.at("x1").get<int>(), node.at("y1").get<int>()};
}

inline json rect_to_json(const RectDomain& r) {
    return json{{"x0", r.x0}, {"y0", r.y0}, {"x1", r.x1}, {"y1", r.y1}};
}

}  // namespace detail

// Parse and fully validate a configuration document. Unknown keys anywhere
// are hard errors; omitted optional keys receive defaults (some depending on
// the scenario) which the echo makes explicit.
inline RunConfig parse_config(const std::string& text) {
    using detail::check_keys;
    using detail::get_or;
    using json = detail::json;

    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        // Recover line/column from the byte offset for a usable diagnostic.
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError("parse error at line " + std::to_string(line) + ", column " +
                          std::to_string(col) + ": " + e.what());
    }
    if (!doc.is_object()) throw ConfigError("top-level document must be an object");

    check_keys(doc, "top level",
               {"scenario", "origin", "phi_values", "geometry", "params", "integrator",
                "electrodes", "stimuli", "schedule", "n_steps", "record_stride",
                "snapshot_stride", "snapshot_threshold", "seconds_per_time_unit",
                "threads", "output_dir"});

    RunConfig cfg;
    cfg.scenario = get_or<std::string>(doc, "scenario", "custom");
    if (cfg.scenario != "custom" && cfg.scenario != "spike-shape" &&
        cfg.scenario != "sweep-phi" && cfg.scenario != "cooling-cycle")
        throw ConfigError("key 'scenario': unknown scenario '" + cfg.scenario + "'");

    try {
        cfg.origin = compass_from_string(get_or<std::string>(doc, "origin", "NE"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("key 'origin': ") + e.what());
    }

    if (doc.contains("geometry")) {
        const auto& g = doc.at("geometry");
        check_keys(g, "geometry", {"shape", "radius", "inner_radius"});
        const std::string shape = get_or<std::string>(g, "shape", "disc");
        if (shape == "disc")
            cfg.geometry.shape = GeometrySpec::Shape::disc;
        else if (shape == "annulus")
            cfg.geometry.shape = GeometrySpec::Shape::annulus;
        else
            throw ConfigError("key 'geometry.shape': must be 'disc' or 'annulus'");
        cfg.geometry.radius = get_or<int>(g, "radius", 185);
        cfg.geometry.inner_radius = get_or<int>(g, "inner_radius", 150);
    } else if (cfg.scenario == "sweep-phi" || cfg.scenario == "cooling-cycle") {
        cfg.geometry.shape = GeometrySpec::Shape::annulus;
    }
    if (cfg.geometry.radius < 1)
        throw ConfigError("key 'geometry.radius': must be >= 1");
    if (cfg.geometry.shape == GeometrySpec::Shape::annulus &&
        (cfg.geometry.inner_radius <= 0 ||
         cfg.geometry.inner_radius >= cfg.geometry.radius))
        throw ConfigError("key 'geometry.inner_radius': must lie in (0, radius)");

    if (doc.contains("params")) {
        const auto& p = doc.at("params");
        check_keys(p, "params", {"epsilon", "f", "q", "d_u", "phi"});
        cfg.params.epsilon = get_or<double>(p, "epsilon", cfg.params.epsilon);
        cfg.params.f = get_or<double>(p, "f", cfg.params.f);
        cfg.params.q = get_or<double>(p, "q", cfg.params.q);
        cfg.params.d_u = get_or<double>(p, "d_u", cfg.params.d_u);
        cfg.params.phi = get_or<double>(p, "phi", cfg.params.phi);
    }
    try {
        cfg.params.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("key 'params': ") + e.what());
    }

    if (doc.contains("integrator")) {
        const auto& n = doc.at("integrator");
        check_keys(n, "integrator", {"dt", "dx", "divergence_bound"});
        cfg.integrator.dt = get_or<double>(n, "dt", cfg.integrator.dt);
        cfg.integrator.dx = get_or<double>(n, "dx", cfg.integrator.dx);
        cfg.integrator.divergence_bound =
            get_or<double>(n, "divergence_bound", cfg.integrator.divergence_bound);
    }
    try {
        cfg.integrator.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("key 'integrator': ") + e.what());
    }

    if (doc.contains("electrodes")) {
        const auto& e = doc.at("electrodes");
        check_keys(e, "electrodes", {"e1", "e2"});
        if (!e.contains("e1") || !e.contains("e2"))
            throw ConfigError("key 'electrodes': needs both 'e1' and 'e2'");
        cfg.electrodes.e1 = detail::parse_rect(e.at("e1"), "electrodes.e1");
        cfg.electrodes.e2 = detail::parse_rect(e.at("e2"), "electrodes.e2");
    } else if (cfg.geometry.shape == GeometrySpec::Shape::annulus) {
        cfg.electrodes = default_ring_electrodes();
    }

    if (doc.contains("stimuli")) {
        const auto& arr = doc.at("stimuli");
        if (!arr.is_array()) throw ConfigError("key 'stimuli': must be an array");
        for (const auto& s : arr) {
            check_keys(s, "stimuli[]", {"compass", "center", "radius", "mode"});
            StimulusSpec spec;
            if (s.contains("compass") && s.contains("center"))
                throw ConfigError("stimuli[]: give either 'compass' or 'center', not both");
            if (s.contains("center")) {
                const auto& c = s.at("center");
                if (!c.is_array() || c.size() != 2)
                    throw ConfigError("stimuli[].center: must be [x, y]");
                spec.by_compass = false;
                spec.cx = c.at(0).get<int>();
                spec.cy = c.at(1).get<int>();
            } else {
                try {
                    spec.compass =
                        compass_from_string(get_or<std::string>(s, "compass", "NE"));
                } catch (const std::invalid_argument& e) {
                    throw ConfigError(std::string("stimuli[].compass: ") + e.what());
                }
            }
            spec.radius = get_or<int>(s, "radius", 3);
            if (spec.radius < 0) throw ConfigError("stimuli[].radius: must be >= 0");
            const std::string mode = get_or<std::string>(s, "mode", "one-shot");
            if (mode == "one-shot")
                spec.mode = StimulusMode::one_shot;
            else if (mode == "held-source")
                spec.mode = StimulusMode::held_source;
            else
                throw ConfigError("stimuli[].mode: must be 'one-shot' or 'held-source'");
            cfg.stimuli.push_back(spec);
        }
    }

    if (doc.contains("phi_values")) {
        const auto& arr = doc.at("phi_values");
        if (!arr.is_array() || arr.empty())
            throw ConfigError("key 'phi_values': must be a non-empty array");
        for (const auto& v : arr) {
            const double phi = v.get<double>();
            if (!(phi >= 0.0)) throw ConfigError("key 'phi_values': phi must be >= 0");
            cfg.phi_values.push_back(phi);
        }
    } else if (cfg.scenario == "sweep-phi") {
        cfg.phi_values = {0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07};
    }

    if (doc.contains("schedule")) {
        const auto& sch = doc.at("schedule");
        check_keys(sch, "schedule", {"segments"});
        if (!sch.contains("segments") || !sch.at("segments").is_array())
            throw ConfigError("key 'schedule': needs a 'segments' array");
        std::vector<PhiSegment> segments;
        for (const auto& s : sch.at("segments")) {
            check_keys(s, "schedule.segments[]", {"start", "phi", "ramp"});
            if (!s.contains("start") || !s.contains("phi"))
                throw ConfigError("schedule.segments[]: needs 'start' and 'phi'");
            segments.push_back({s.at("start").get<long long>(), s.at("phi").get<double>(),
                                get_or<bool>(s, "ramp", false)});
        }
        try {
            cfg.schedule = PhiSchedule(std::move(segments));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("key 'schedule': ") + e.what());
        }
    } else if (cfg.scenario == "cooling-cycle") {
        // Default freeze point: 30 time units of warm oscillation, then hold
        // cold, expressed in iterations of the configured dt.
        const long long freeze_at = std::llround(30.0 / cfg.integrator.dt);
        cfg.schedule = PhiSchedule(std::vector<PhiSegment>{
            {0, calibrated_phi_low, false}, {freeze_at, calibrated_phi_high, false}});
    } else {
        cfg.schedule = PhiSchedule::constant(cfg.params.phi);
    }

    // Iteration budget: the named scenarios stop early on their own criteria
    // (annihilation, enough events), so their defaults are generous caps; the
    // cooling default covers every segment plus a 30-time-unit tail.
    const long long default_steps = [&]() -> long long {
        if (cfg.scenario == "spike-shape") return 100000;
        if (cfg.scenario == "sweep-phi") return 1000000;
        if (cfg.scenario == "cooling-cycle")
            return cfg.schedule.segments().back().start_iteration +
                   std::llround(30.0 / cfg.integrator.dt);
        return 10000;
    }();
    cfg.n_steps = get_or<long long>(doc, "n_steps", default_steps);
    if (cfg.n_steps < 0) throw ConfigError("key 'n_steps': must be >= 0");
    cfg.record_stride = get_or<long long>(doc, "record_stride", 10);
    if (cfg.record_stride < 1) throw ConfigError("key 'record_stride': must be >= 1");
    // Spike-shape snapshots default to a 0.15-time-unit spacing (150 steps at
    // the default dt), expressed in iterations of the configured dt.
    const long long default_snapshots =
        cfg.scenario == "spike-shape"
            ? std::llround(0.15 / cfg.integrator.dt)
            : 0;
    cfg.snapshot_stride = get_or<long long>(doc, "snapshot_stride", default_snapshots);
    if (cfg.snapshot_stride < 0)
        throw ConfigError("key 'snapshot_stride': must be >= 0 (0 disables snapshots)");
    cfg.snapshot_threshold = get_or<double>(doc, "snapshot_threshold", 0.04);
    cfg.seconds_per_time_unit = get_or<double>(doc, "seconds_per_time_unit", 10.0);
    if (!(cfg.seconds_per_time_unit > 0.0))
        throw ConfigError("key 'seconds_per_time_unit': must be > 0");
    cfg.threads = get_or<int>(doc, "threads", 1);
    if (cfg.threads < 1) throw ConfigError("key 'threads': must be >= 1");
    cfg.output_dir = get_or<std::string>(doc, "output_dir", "out");

    // Cross-checks that need the actual lattice.
    const Mask mask = make_mask(cfg.geometry);
    try {
        cfg.electrodes.validate(mask);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("key 'electrodes': ") + e.what());
    }
    for (const auto& spec : cfg.stimuli) {
        if (!spec.by_compass &&
            (spec.cx < 0 || spec.cy < 0 || spec.cx >= mask.width || spec.cy >= mask.height))
            throw ConfigError("stimuli[].center: outside lattice bounds");
        const StimulusSite site = resolve_stimulus(spec, mask);
        if (site_nodes(site, mask).empty())
            throw ConfigError("stimuli[]: site lies entirely outside the domain");
    }
    return cfg;
}

// Canonical echo: every effective value, in a fixed key order, so two equal
// configs produce identical bytes and the echo re-parses to the same config.
inline std::string echo_config(const RunConfig& cfg) {
    using json = detail::json;
    json doc;
    doc["scenario"] = cfg.scenario;
    doc["origin"] = to_string(cfg.origin);
    if (!cfg.phi_values.empty()) doc["phi_values"] = cfg.phi_values;
    doc["geometry"] = {
        {"shape", cfg.geometry.shape == GeometrySpec::Shape::disc ? "disc" : "annulus"},
        {"radius", cfg.geometry.radius},
        {"inner_radius", cfg.geometry.inner_radius}};
    doc["params"] = {{"epsilon", cfg.params.epsilon},
                     {"f", cfg.params.f},
                     {"q", cfg.params.q},
                     {"d_u", cfg.params.d_u},
                     {"phi", cfg.params.phi}};
    doc["integrator"] = {{"dt", cfg.integrator.dt},
                         {"dx", cfg.integrator.dx},
                         {"divergence_bound", cfg.integrator.divergence_bound}};
    doc["electrodes"] = {{"e1", detail::rect_to_json(cfg.electrodes.e1)},
                         {"e2", detail::rect_to_json(cfg.electrodes.e2)}};
    json stimuli = json::array();
    for (const auto& s : cfg.stimuli) {
        json node;
        if (s.by_compass)
            node["compass"] = to_string(s.compass);
        else
            node["center"] = {s.cx, s.cy};
        node["radius"] = s.radius;
        node["mode"] = s.mode == StimulusMode::one_shot ? "one-shot" : "held-source";
        stimuli.push_back(node);
    }
    if (!stimuli.empty()) doc["stimuli"] = stimuli;
    json segments = json::array();
    for (const auto& seg : cfg.schedule.segments())
        segments.push_back({{"start", seg.start_iteration},
                            {"phi", seg.phi},
                            {"ramp", seg.ramp_to_next}});
    doc["schedule"] = {{"segments", segments}};
    doc["n_steps"] = cfg.n_steps;
    doc["record_stride"] = cfg.record_stride;
    doc["snapshot_stride"] = cfg.snapshot_stride;
    doc["snapshot_threshold"] = cfg.snapshot_threshold;
    doc["seconds_per_time_unit"] = cfg.seconds_per_time_unit;
    doc["threads"] = cfg.threads;
    doc["output_dir"] = cfg.output_dir;
    return doc.dump(2) + "\n";
}

}  // namespace bzlm
