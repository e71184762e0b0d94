#include <CLI11.hpp>

#include <bzlm/analysis.hpp>
#include <bzlm/config.hpp>
#include <bzlm/dynamics.hpp>
#include <bzlm/experiments.hpp>
#include <bzlm/io.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace bzlm;

namespace {

std::string slurp_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path, "cannot open for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Parse --config (or an empty document). A subcommand that implies a scenario
// injects it when the document names none and rejects a conflicting one.
RunConfig load_config(const std::string& path, const std::string& scenario,
                      const std::string& output_dir, int threads) {
    std::string text = path.empty() ? std::string("{}") : slurp_file(path);
    if (!scenario.empty()) {
        nlohmann::ordered_json doc;
        try {
            doc = nlohmann::ordered_json::parse(text);
        } catch (const nlohmann::json::parse_error&) {
            parse_config(text);  // rethrow with line/column context
        }
        if (doc.is_object() && !doc.contains("scenario")) {
            doc["scenario"] = scenario;
            text = doc.dump();
        }
    }
    RunConfig cfg = parse_config(text);
    if (!scenario.empty() && cfg.scenario != scenario)
        throw ConfigError("config declares scenario '" + cfg.scenario +
                          "' but this subcommand runs '" + scenario + "'");
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    if (threads > 0) cfg.threads = threads;
    return cfg;
}

ExperimentSetup setup_for(const RunConfig& cfg) {
    ExperimentSetup s = cfg.setup();
    s.step_cap = cfg.n_steps;
    const long long last = cfg.schedule.segments().back().start_iteration;
    if (cfg.n_steps > last) s.cooling_tail_steps = cfg.n_steps - last;
    return s;
}

// Create the output directory and drop the canonical echo, which alone
// suffices to reproduce the run.
std::filesystem::path prepare_output(const RunConfig& cfg) {
    const std::filesystem::path dir(cfg.output_dir);
    std::filesystem::create_directories(dir);
    const std::string echo_path = (dir / "config_echo.json").string();
    std::ofstream echo(echo_path, std::ios::binary);
    if (!echo) throw IoError(echo_path, "cannot open for writing");
    echo << echo_config(cfg);
    if (!echo.flush()) throw IoError(echo_path, "write failed");
    return dir;
}

void write_snapshots(const std::vector<Snapshot>& snapshots, const Mask& mask,
                     const std::filesystem::path& dir, const std::string& prefix) {
    for (const auto& s : snapshots) {
        char name[64];
        std::snprintf(name, sizeof name, "snapshot_%s%09lld.pgm", prefix.c_str(),
                      s.iteration);
        write_pgm(s.pixels, mask.width, mask.height, (dir / name).string());
    }
}

std::string opt_str(const std::optional<double>& v) {
    return v ? format_double(*v) : "nan";
}

void print_segment_table(std::ostream& os, const std::vector<PeriodStats>& stats,
                         const PhiSchedule& schedule, double dt) {
    os << "segment,phi,start_time,mean_period,sigma,n_events\n";
    for (std::size_t i = 0; i < stats.size(); ++i) {
        const auto& seg = schedule.segments()[i];
        os << i << ',' << format_double(seg.phi) << ','
           << format_double(static_cast<double>(seg.start_iteration) * dt) << ','
           << opt_str(stats[i].mean_period) << ',' << opt_str(stats[i].sigma) << ','
           << stats[i].n_events() << '\n';
    }
}

std::string spike_summary(const std::string& origin, const PotentialTrace& trace,
                          const ExperimentSetup& setup) {
    const double band =
        noise_band_for(trace, setup.noise_band_floor, setup.noise_band_frac);
    const SpikeShape shape = classify_spike(trace, band, setup.min_lobe_separation);
    std::ostringstream os;
    os << origin << ',' << to_string(shape.classification) << ','
       << format_double(shape.peak) << ',' << format_double(shape.trough);
    return os.str();
}

// Declarative run: stimuli and schedule straight from the document.
ScenarioResult run_custom(const RunConfig& cfg) {
    const Mask mask = make_mask(cfg.geometry);
    SimState state = make_steady_state(mask, cfg.params);
    Stepper stepper(mask, cfg.params, cfg.integrator);
    for (const auto& spec : cfg.stimuli) {
        const StimulusSite site = resolve_stimulus(spec, mask);
        stimulate(state, site, mask);
        if (spec.mode == StimulusMode::held_source) stepper.add_held_source(site);
    }
    stepper.set_schedule(&cfg.schedule);

    ScenarioResult result;
    result.trace.record_stride = cfg.record_stride;
    result.trace.dt = cfg.integrator.dt;
    record(result.trace, state, cfg.electrodes, mask);
    std::vector<Observer> observers{
        make_trace_observer(result.trace, cfg.electrodes, mask)};
    if (cfg.snapshot_stride > 0)
        observers.push_back(
            Observer{cfg.snapshot_stride, [&result, &mask, &cfg](const SimState& s) {
                         result.snapshots.push_back(
                             {s.iteration,
                              render_snapshot(s.u, mask, cfg.snapshot_threshold)});
                     }});
    stepper.run(state, cfg.n_steps, observers);
    result.stats =
        per_segment_stats(result.trace, cfg.schedule, cfg.integrator.dt, cfg.setup());
    return result;
}

int execute_custom(const RunConfig& cfg) {
    const auto dir = prepare_output(cfg);
    const Mask mask = make_mask(cfg.geometry);
    const ScenarioResult result = run_custom(cfg);
    write_trace_csv(result.trace, (dir / "trace.csv").string());
    write_snapshots(result.snapshots, mask, dir, "");
    print_segment_table(std::cout, result.stats, cfg.schedule, cfg.integrator.dt);
    return 0;
}

int execute_spike_single(const RunConfig& cfg) {
    const auto dir = prepare_output(cfg);
    const ExperimentSetup setup = setup_for(cfg);
    const Mask mask = make_disc_mask(cfg.geometry.radius);
    const ScenarioResult result =
        run_spike_shape(cfg.origin, cfg.params, cfg.integrator, setup);
    write_trace_csv(result.trace, (dir / "trace.csv").string());
    write_snapshots(result.snapshots, mask, dir, "");
    std::cout << "origin,classification,peak,trough\n"
              << spike_summary(to_string(cfg.origin), result.trace, setup) << '\n';
    return 0;
}

int execute_spike_trio(const RunConfig& cfg) {
    const auto dir = prepare_output(cfg);
    const ExperimentSetup setup = setup_for(cfg);
    const Mask mask = make_disc_mask(cfg.geometry.radius);
    std::cout << "origin,classification,peak,trough\n";
    for (const Compass origin : {Compass::S, Compass::E, Compass::NE}) {
        const ScenarioResult result =
            run_spike_shape(origin, cfg.params, cfg.integrator, setup);
        const std::string name = to_string(origin);
        write_trace_csv(result.trace, (dir / ("trace_" + name + ".csv")).string());
        write_snapshots(result.snapshots, mask, dir, name + "_");
        std::cout << spike_summary(name, result.trace, setup) << '\n';
    }
    return 0;
}

int execute_sweep(const RunConfig& cfg) {
    const auto dir = prepare_output(cfg);
    const ExperimentSetup setup = setup_for(cfg);
    std::vector<PotentialTrace> traces;
    const auto points =
        run_phi_sweep(cfg.phi_values, cfg.params, cfg.integrator, setup, &traces);

    std::ostringstream table;
    table << "phi,mean_period,sigma,n_events\n";
    for (const auto& point : points)
        table << format_double(point.phi) << ',' << opt_str(point.stats.mean_period)
              << ',' << opt_str(point.stats.sigma) << ',' << point.stats.n_events()
              << '\n';
    const std::string sweep_path = (dir / "sweep.csv").string();
    std::ofstream out(sweep_path, std::ios::binary);
    if (!out) throw IoError(sweep_path, "cannot open for writing");
    out << table.str();
    if (!out.flush()) throw IoError(sweep_path, "write failed");
    for (std::size_t i = 0; i < traces.size(); ++i)
        write_trace_csv(traces[i],
                        (dir / ("trace_phi_" + format_double(cfg.phi_values[i]) + ".csv"))
                            .string());
    std::cout << table.str();
    return 0;
}

int execute_cooling(const RunConfig& cfg) {
    const auto dir = prepare_output(cfg);
    const ExperimentSetup setup = setup_for(cfg);
    const Mask mask = make_annulus_mask(cfg.geometry.radius, cfg.geometry.inner_radius);
    const ScenarioResult result =
        run_cooling_cycle(cfg.schedule, cfg.params, cfg.integrator, setup);
    write_trace_csv(result.trace, (dir / "trace.csv").string());
    write_snapshots(result.snapshots, mask, dir, "");

    std::ostringstream table;
    print_segment_table(table, result.stats, cfg.schedule, cfg.integrator.dt);
    const std::string seg_path = (dir / "segments.csv").string();
    std::ofstream out(seg_path, std::ios::binary);
    if (!out) throw IoError(seg_path, "cannot open for writing");
    out << table.str();
    if (!out.flush()) throw IoError(seg_path, "write failed");
    std::cout << table.str();
    return 0;
}

int execute_run(const RunConfig& cfg) {
    if (cfg.scenario == "spike-shape") return execute_spike_single(cfg);
    if (cfg.scenario == "sweep-phi") return execute_sweep(cfg);
    if (cfg.scenario == "cooling-cycle") return execute_cooling(cfg);
    return execute_custom(cfg);
}

int execute_calibrate(const RunConfig& cfg, double target_ratio, double phi_low) {
    const auto result =
        calibrate_phi_for_ratio(target_ratio, phi_low, cfg.params, cfg.integrator,
                                setup_for(cfg));
    std::cout << "phi_high,achieved_ratio\n"
              << format_double(result.phi_high) << ','
              << format_double(result.achieved_ratio) << '\n';
    return 0;
}

int execute_analyze(const std::string& input, double hi, double lo, bool absolute,
                    long long detrend_window) {
    PotentialTrace trace = read_trace_csv(input);
    if (detrend_window > 0)
        trace = remove_baseline_median(trace, static_cast<std::size_t>(detrend_window));
    const PeriodStats stats = absolute ? detect_periods(trace, hi, lo)
                                       : detect_periods_relative(trace, hi, lo);
    std::cout << "mean_period,sigma,n_events\n"
              << opt_str(stats.mean_period) << ',' << opt_str(stats.sigma) << ','
              << stats.n_events() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic two-variable excitable-medium simulator with virtual "
                 "electrode readout"};
    app.require_subcommand(1);

    std::string config_path, output_dir, analyze_input;
    int threads = 0;
    double target_ratio = 2.1;
    double phi_low = calibrated_phi_low;
    double hi = 0.4, lo = 0.1;
    bool absolute = false;
    long long detrend_window = 0;

    const auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* opt = sub->add_option("-c,--config", config_path,
                                    "JSON configuration document");
        opt->check(CLI::ExistingFile);
        if (config_required) opt->required();
        sub->add_option("-o,--output-dir", output_dir, "where artifacts are written");
        sub->add_option("--threads", threads, "sweep-point parallelism")
            ->check(CLI::PositiveNumber);
    };

    auto* c_run = app.add_subcommand("run", "execute a configuration document");
    add_common(c_run, true);
    auto* c_spikes = app.add_subcommand(
        "spike-shapes", "one-shot wave trio from the S, E and NE disc edges");
    add_common(c_spikes, false);
    auto* c_sweep = app.add_subcommand(
        "sweep-phi", "period statistics across excitability values on the ring");
    add_common(c_sweep, false);
    auto* c_cool = app.add_subcommand(
        "cooling-cycle", "stepped excitability schedule emulating freeze and thaw");
    add_common(c_cool, false);

    auto* c_cal = app.add_subcommand(
        "calibrate", "find the phi step that multiplies the period by a target factor");
    add_common(c_cal, false);
    c_cal->add_option("--target-ratio", target_ratio, "period multiplication target")
        ->check(CLI::Range(1.0, 1000.0));
    c_cal->add_option("--phi-low", phi_low, "baseline excitability");

    auto* c_an = app.add_subcommand("analyze", "period statistics for a trace CSV");
    c_an->add_option("input", analyze_input, "trace CSV (time,potential)")
        ->required()
        ->check(CLI::ExistingFile);
    c_an->add_option("--hi", hi,
                     "upper detector threshold (fraction of the trace amplitude, or a "
                     "potential with --absolute)");
    c_an->add_option("--lo", lo, "lower detector threshold");
    c_an->add_flag("--absolute", absolute, "treat --hi/--lo as absolute potentials");
    c_an->add_option("--detrend-window", detrend_window,
                     "odd moving-median window removed before detection; 0 = off");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*c_run) return execute_run(load_config(config_path, "", output_dir, threads));
        if (*c_spikes)
            return execute_spike_trio(
                load_config(config_path, "spike-shape", output_dir, threads));
        if (*c_sweep)
            return execute_sweep(
                load_config(config_path, "sweep-phi", output_dir, threads));
        if (*c_cool)
            return execute_cooling(
                load_config(config_path, "cooling-cycle", output_dir, threads));
        if (*c_cal)
            return execute_calibrate(
                load_config(config_path, "sweep-phi", output_dir, threads),
                target_ratio, phi_low);
        if (*c_an)
            return execute_analyze(analyze_input, hi, lo, absolute, detrend_window);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
