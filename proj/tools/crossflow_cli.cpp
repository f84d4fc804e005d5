// crossflow command-line tool: simulate | dataset | train | evaluate | sweep.
//
// One --seed flag controls all randomness; sub-streams are derived from it:
//   run r of simulate        derive_seed(seed, 1, r)
//   train/test splitting     derive_seed(seed, 2)   (then (., k) per repetition)
//   forest training          derive_seed(seed, 3)   (then (., k) per repetition,
//                            (., dest, tree) per tree)
// Exit codes: 0 success, 2 configuration/validation error, 3 I/O error.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "crossflow/crossflow.hpp"

namespace fs = std::filesystem;
using namespace crossflow;

namespace {

constexpr std::uint64_t kRunStream = 1;
constexpr std::uint64_t kSplitStream = 2;
constexpr std::uint64_t kForestStream = 3;

struct GlobalOpts {
    std::string config_path;
    std::uint64_t seed = 1;
    unsigned jobs = 1;
};

AppConfig load_app_config(const GlobalOpts& g) {
    if (g.config_path.empty()) return AppConfig{};
    return parse_app_config(read_file(g.config_path), g.config_path);
}

std::string padded_index(std::size_t index, std::size_t total) {
    std::size_t width = 3;
    for (std::size_t v = total > 0 ? total - 1 : 0; v >= 1000; v /= 10) ++width;
    std::string digits = format_int(static_cast<long long>(index));
    while (digits.size() < width) digits.insert(digits.begin(), '0');
    return digits;
}

std::pair<double, double> parse_cutout_size(const std::string& s) {
    const auto pos = s.find('x');
    if (pos == std::string::npos || pos == 0 || pos + 1 >= s.size())
        throw ConfigError("--cutout expects WIDTHxHEIGHT, e.g. 10x10; got '" + s + "'");
    const double w = parse_double(std::string_view(s).substr(0, pos), "--cutout width");
    const double h = parse_double(std::string_view(s).substr(pos + 1), "--cutout height");
    if (w <= 0.0 || h <= 0.0) throw ConfigError("--cutout dimensions must be > 0");
    return {w, h};
}

fs::path sibling_file(const fs::path& out, const char* extension) {
    fs::path p = out;
    p.replace_extension(extension);
    return p;
}

std::vector<std::string> argv_vector(int argc, char** argv) {
    std::vector<std::string> v;
    v.reserve(static_cast<std::size_t>(argc));
    for (int i = 0; i < argc; ++i) v.emplace_back(argv[i]);
    return v;
}

/// All *.csv files in the directory, sorted by name; the position in this
/// list becomes the run id of the reconstructed log.
std::vector<TrajectoryLog> read_logs_dir(const std::string& dir, Manifest& manifest) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw ConfigError("--logs-dir is not a directory: " + dir);
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv")
            paths.push_back(entry.path().string());
    }
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) throw ConfigError("no .csv trajectory files in " + dir);
    std::vector<TrajectoryLog> logs;
    logs.reserve(paths.size());
    for (std::size_t i = 0; i < paths.size(); ++i) {
        const std::string content = read_file(paths[i]);
        manifest.add_input(paths[i], content);
        TrajectoryLog log = trajectory_from_csv(content, paths[i]);
        log.run_id = static_cast<int>(i);
        logs.push_back(std::move(log));
    }
    return logs;
}

// -- simulate -----------------------------------------------------------------

struct SimulateOpts {
    GlobalOpts global;
    int runs = 50;
    std::string out_dir;
    SimConfig overrides;
    CLI::Option* opt_duration = nullptr;
    CLI::Option* opt_time_step = nullptr;
    CLI::Option* opt_spawn_rate = nullptr;
    CLI::Option* opt_redistribution = nullptr;
    CLI::Option* opt_speed_mean = nullptr;
    CLI::Option* opt_speed_sd = nullptr;
    CLI::Option* opt_speed_min = nullptr;
    CLI::Option* opt_speed_max = nullptr;
};

void run_simulate(const SimulateOpts& o, const std::vector<std::string>& argv) {
    if (o.runs < 1) throw ConfigError("--runs must be >= 1");
    AppConfig cfg = load_app_config(o.global);
    SimConfig sim = cfg.sim;
    if (o.opt_duration->count()) sim.duration = o.overrides.duration;
    if (o.opt_time_step->count()) sim.time_step = o.overrides.time_step;
    if (o.opt_spawn_rate->count()) sim.spawn_rate = o.overrides.spawn_rate;
    if (o.opt_redistribution->count())
        sim.redistribution_period = o.overrides.redistribution_period;
    if (o.opt_speed_mean->count()) sim.speed_mean = o.overrides.speed_mean;
    if (o.opt_speed_sd->count()) sim.speed_sd = o.overrides.speed_sd;
    if (o.opt_speed_min->count()) sim.speed_min = o.overrides.speed_min;
    if (o.opt_speed_max->count()) sim.speed_max = o.overrides.speed_max;
    validate(cfg.layout.scenario);
    validate(sim);

    std::error_code ec;
    fs::create_directories(o.out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + o.out_dir + ": " + ec.message());

    const FloorFieldSet fields = build_floor_fields(cfg.layout.scenario);

    struct RunOutput {
        std::string path;
        std::string hash;
        int deferred = 0;
    };
    std::vector<RunOutput> outputs(static_cast<std::size_t>(o.runs));
    parallel_for(outputs.size(), o.global.jobs, [&](std::size_t r) {
        SimConfig run_cfg = sim;
        run_cfg.rng_seed = derive_seed(o.global.seed, kRunStream, r);
        RunResult result = run_simulation(cfg.layout.scenario, run_cfg, fields);
        result.log.run_id = static_cast<int>(r);
        const std::string csv = trajectory_to_csv(result.log);
        const fs::path path =
            fs::path(o.out_dir) / ("run_" + padded_index(r, outputs.size()) + ".csv");
        write_file(path.string(), csv);
        outputs[r] = {path.string(), content_hash(csv), result.deferred_spawns};
    });

    Manifest manifest;
    manifest.command = "simulate";
    manifest.argv = argv;
    manifest.config["scenario"] = scenario_to_json(cfg.layout.scenario);
    manifest.config["sim"] = sim_config_to_json(sim);
    manifest.config["runs"] = o.runs;
    manifest.seeds["master"] = o.global.seed;
    manifest.seeds["run_rule"] = "derive_seed(master, 1, run_index)";
    int deferred_total = 0;
    for (const RunOutput& out : outputs) {
        manifest.outputs.emplace_back(out.path, out.hash);
        deferred_total += out.deferred;
    }
    write_manifest((fs::path(o.out_dir) / "manifest.json").string(), manifest);
    if (deferred_total > 0)
        std::cerr << "warning: " << deferred_total
                  << " spawn attempts were deferred to a later tick\n";
    std::cout << "wrote " << o.runs << " trajectory files to " << o.out_dir << "\n";
}

// -- dataset ------------------------------------------------------------------

struct DatasetOpts {
    GlobalOpts global;
    std::string logs_dir;
    std::string out;
    std::string cutout_size = "10x10";
    double cutout_top = 0.0;
    double cutout_center_x = 0.0;
    double resolution = 0.5;
    double interval = 8.0;
    double warmup = 12.0;
    KernelParams kernel;
    bool permissive = false;
    CLI::Option* opt_top = nullptr;
    CLI::Option* opt_center = nullptr;
};

CameraCutout resolve_cutout(const AppConfig& cfg, const std::string& size_arg, double resolution,
                            const CLI::Option* opt_top, double top_flag,
                            const CLI::Option* opt_center, double center_flag) {
    const auto [w, h] = parse_cutout_size(size_arg);
    double top = cfg.layout.crossing_lower_y;
    double cx = 0.5 * (cfg.layout.corridor_xmin + cfg.layout.corridor_xmax);
    const bool top_given = opt_top != nullptr && opt_top->count() > 0;
    const bool center_given = opt_center != nullptr && opt_center->count() > 0;
    if (!cfg.layout_known && (!top_given || !center_given))
        throw ConfigError(
            "custom scenario without a layout block: pass --cutout-top and --cutout-center-x "
            "explicitly or add \"layout\" to the config file");
    if (top_given) top = top_flag;
    if (center_given) cx = center_flag;
    CameraCutout cutout;
    cutout.rect = Rect{cx - w / 2.0, top - h, cx + w / 2.0, top};
    cutout.resolution = resolution;
    validate(cutout, cfg.layout.scenario);
    return cutout;
}

void run_dataset(const DatasetOpts& o, const std::vector<std::string>& argv) {
    AppConfig cfg = load_app_config(o.global);
    const CameraCutout cutout = resolve_cutout(cfg, o.cutout_size, o.resolution, o.opt_top,
                                               o.cutout_top, o.opt_center, o.cutout_center_x);
    validate(o.kernel);

    Manifest manifest;
    manifest.command = "dataset";
    manifest.argv = argv;
    const std::vector<TrajectoryLog> logs = read_logs_dir(o.logs_dir, manifest);

    const Dataset ds =
        extract_dataset(logs, cutout, o.interval, o.warmup, o.kernel,
                        o.permissive ? EmptyCutoutPolicy::Skip : EmptyCutoutPolicy::Error);
    const std::string csv = dataset_to_csv(ds);
    write_file(o.out, csv);
    manifest.add_output(o.out, csv);

    manifest.config["cutout"] = {{"xmin", cutout.rect.xmin},
                                 {"ymin", cutout.rect.ymin},
                                 {"xmax", cutout.rect.xmax},
                                 {"ymax", cutout.rect.ymax},
                                 {"resolution", cutout.resolution}};
    manifest.config["frame_interval"] = o.interval;
    manifest.config["warmup"] = o.warmup;
    manifest.config["kernel"] = {{"torso_diameter", o.kernel.torso_diameter},
                                 {"scale", o.kernel.scale}};
    manifest.config["permissive"] = o.permissive;
    write_manifest(sibling_file(o.out, ".manifest.json").string(), manifest);

    if (ds.samples.empty())
        std::cerr << "warning: sampling window is empty, dataset has no rows\n";
    if (ds.skipped_frames > 0)
        std::cerr << "warning: skipped " << ds.skipped_frames << " empty-cutout frames\n";
    std::cout << "wrote " << ds.samples.size() << " samples ("
              << (ds.samples.empty() ? 0 : ds.feature_dim()) << " features) to " << o.out << "\n";
}

// -- train --------------------------------------------------------------------

struct ForestFlags {
    int trees = 20;
    int mtry = 0;
    int min_samples_split = 2;
    int max_depth = 0;
    bool no_bootstrap = false;

    ForestParams params(std::uint64_t forest_seed) const {
        ForestParams p;
        p.n_trees = trees;
        p.mtry = mtry;
        p.min_samples_split = min_samples_split;
        p.max_depth = max_depth;
        p.bootstrap = !no_bootstrap;
        p.rng_seed = forest_seed;
        return p;
    }
};

void add_forest_flags(CLI::App* sub, ForestFlags& ff) {
    sub->add_option("--trees", ff.trees, "Trees per forest")->capture_default_str();
    sub->add_option("--mtry", ff.mtry, "Features considered per split (0 = all)")
        ->capture_default_str();
    sub->add_option("--min-samples-split", ff.min_samples_split,
                    "Minimum node size eligible for splitting")
        ->capture_default_str();
    sub->add_option("--max-depth", ff.max_depth, "Maximum tree depth (0 = unbounded)")
        ->capture_default_str();
    sub->add_flag("--no-bootstrap", ff.no_bootstrap, "Train each tree on the full training set");
}

struct SeedOpts {
    std::uint64_t split_seed = 0;
    std::uint64_t forest_seed = 0;
    CLI::Option* opt_split = nullptr;
    CLI::Option* opt_forest = nullptr;

    std::uint64_t split(std::uint64_t master) const {
        return opt_split->count() ? split_seed : derive_seed(master, kSplitStream);
    }
    std::uint64_t forest(std::uint64_t master) const {
        return opt_forest->count() ? forest_seed : derive_seed(master, kForestStream);
    }
};

void add_seed_opts(CLI::App* sub, SeedOpts& so) {
    so.opt_split = sub->add_option("--split-seed", so.split_seed,
                                   "Override the derived train/test split seed");
    so.opt_forest =
        sub->add_option("--forest-seed", so.forest_seed, "Override the derived forest seed");
}

struct TrainOpts {
    GlobalOpts global;
    std::string dataset_path;
    std::string out;
    double train_fraction = 0.8;
    ForestFlags forest;
    SeedOpts seeds;
};

void note_split_and_forest(Manifest& manifest, const SplitSpec& spec, const ForestParams& params) {
    manifest.config["split"] = {{"train_fraction", spec.train_fraction}};
    manifest.config["forest"] = {{"n_trees", params.n_trees},
                                 {"mtry", params.mtry},
                                 {"min_samples_split", params.min_samples_split},
                                 {"max_depth", params.max_depth},
                                 {"bootstrap", params.bootstrap}};
    manifest.seeds["split"] = spec.rng_seed;
    manifest.seeds["forest"] = params.rng_seed;
}

void run_train(const TrainOpts& o, const std::vector<std::string>& argv) {
    Manifest manifest;
    manifest.command = "train";
    manifest.argv = argv;
    const std::string content = read_file(o.dataset_path);
    manifest.add_input(o.dataset_path, content);
    const Dataset ds = dataset_from_csv(content, o.dataset_path);

    const SplitSpec spec{o.train_fraction, o.seeds.split(o.global.seed)};
    const ForestParams params = o.forest.params(o.seeds.forest(o.global.seed));
    auto [train, test] = split_dataset(ds, spec);
    const DestinationPredictor predictor = fit_predictor(train, params, o.global.jobs);

    std::ostringstream model;
    save_model(model, predictor);
    write_file(o.out, model.str());
    manifest.add_output(o.out, model.str());
    manifest.seeds["master"] = o.global.seed;
    note_split_and_forest(manifest, spec, params);
    manifest.config["dataset"] = {{"n_samples", ds.samples.size()},
                                  {"n_train", train.samples.size()},
                                  {"n_test", test.samples.size()},
                                  {"feature_dim", ds.feature_dim()}};
    write_manifest(sibling_file(o.out, ".manifest.json").string(), manifest);
    std::cout << "trained " << kNumDestinations << " forests of " << params.n_trees
              << " trees on " << train.samples.size() << " samples; wrote " << o.out << "\n";
}

// -- evaluate -------------------------------------------------------------------

struct EvaluateOpts {
    GlobalOpts global;
    std::string dataset_path;
    std::string model_path;
    std::string out;
    double train_fraction = 0.8;
    int repetitions = 0;
    ForestFlags forest;
    SeedOpts seeds;
    CLI::Option* opt_model = nullptr;
    CLI::Option* opt_reps = nullptr;
};

ErrorSummary baseline_summary(const Dataset& test) {
    std::vector<double> errors;
    errors.reserve(test.samples.size());
    for (const HeatmapSample& s : test.samples)
        errors.push_back(relative_error(s.response, kUniformResponse));
    return summarize_errors(std::move(errors));
}

void run_evaluate(const EvaluateOpts& o, const std::vector<std::string>& argv) {
    const bool model_mode = o.opt_model->count() > 0;
    if (model_mode == (o.opt_reps->count() > 0))
        throw ConfigError("evaluate needs exactly one of --model (saved model on the held-out "
                          "split) or --repetitions (full repeated protocol)");

    Manifest manifest;
    manifest.command = "evaluate";
    manifest.argv = argv;
    const std::string content = read_file(o.dataset_path);
    manifest.add_input(o.dataset_path, content);
    const Dataset ds = dataset_from_csv(content, o.dataset_path);

    std::vector<SummaryRow> rows;
    const SplitSpec spec{o.train_fraction, o.seeds.split(o.global.seed)};
    manifest.seeds["master"] = o.global.seed;

    if (model_mode) {
        const std::string model_text = read_file(o.model_path);
        manifest.add_input(o.model_path, model_text);
        std::istringstream in(model_text);
        const DestinationPredictor predictor = load_model(in);
        if (predictor.n_features != ds.feature_dim())
            throw DimensionMismatchError(
                "model expects " + std::to_string(predictor.n_features) +
                " features but the dataset has " + std::to_string(ds.feature_dim()));
        auto [train, test] = split_dataset(ds, spec);
        const ErrorSummary summary = evaluate(predictor, test);
        const ErrorSummary base = baseline_summary(test);
        rows.push_back({"test", summary.n_test, summary.mean_relative_error,
                        summary.std_relative_error});
        rows.push_back({"baseline_uniform", base.n_test, base.mean_relative_error,
                        base.std_relative_error});
        manifest.seeds["split"] = spec.rng_seed;
        manifest.config["split"] = {{"train_fraction", spec.train_fraction}};
        manifest.config["model"] = {{"n_features", predictor.n_features},
                                    {"n_trees", predictor.forests[0].params.n_trees}};
    } else {
        if (o.repetitions < 1) throw ConfigError("--repetitions must be >= 1");
        const ForestParams params = o.forest.params(o.seeds.forest(o.global.seed));
        const RepeatedEvaluation eval =
            repeated_evaluation(ds, params, spec, o.repetitions, o.global.jobs);
        for (std::size_t k = 0; k < eval.reps.size(); ++k)
            rows.push_back({"rep_" + format_int(static_cast<long long>(k)), eval.reps[k].n_test,
                            eval.reps[k].mean_relative_error, eval.reps[k].std_relative_error});
        rows.push_back({"pooled", eval.pooled.n_test, eval.pooled.mean_relative_error,
                        eval.pooled.std_relative_error});
        rows.push_back({"mean_of_rep_means", eval.reps.size(), eval.mean_of_means,
                        eval.std_of_means});
        rows.push_back({"baseline_uniform", eval.pooled.n_test, eval.baseline, 0.0});
        note_split_and_forest(manifest, spec, params);
        manifest.config["repetitions"] = o.repetitions;
    }

    const std::string csv = summaries_to_csv(rows);
    write_file(o.out, csv);
    manifest.add_output(o.out, csv);
    write_manifest(sibling_file(o.out, ".manifest.json").string(), manifest);
    for (const SummaryRow& r : rows)
        std::cout << r.label << ": mean " << format_double(r.mean_err) << "%, std "
                  << format_double(r.std_err) << "% (n=" << r.n_test << ")\n";
}

// -- sweep ----------------------------------------------------------------------

struct SweepCommonOpts {
    GlobalOpts global;
    std::string out;
    int repetitions = 5;
    double train_fraction = 0.8;
    ForestFlags forest;
    SeedOpts seeds;
};

void write_sweep_outputs(const SweepCommonOpts& o, const SweepReport& report, Manifest& manifest) {
    const std::string csv = sweep_to_csv(report);
    write_file(o.out, csv);
    manifest.add_output(o.out, csv);
    const std::string prov = provenance_to_json(report);
    const std::string prov_path = sibling_file(o.out, ".provenance.json").string();
    write_file(prov_path, prov);
    manifest.add_output(prov_path, prov);
    write_manifest(sibling_file(o.out, ".manifest.json").string(), manifest);
    for (const SweepRow& r : report.rows)
        std::cout << r.sweep << " " << format_double(r.value) << ": mean "
                  << format_double(r.mean_err) << "%, baseline "
                  << format_double(r.baseline_err) << "%, n=" << r.n_samples << "\n";
}

struct SweepTreesOpts {
    SweepCommonOpts common;
    std::string dataset_path;
    std::vector<int> counts = {1, 2, 5, 10, 20, 50};
};

void run_sweep_trees(const SweepTreesOpts& o, const std::vector<std::string>& argv) {
    Manifest manifest;
    manifest.command = "sweep trees";
    manifest.argv = argv;
    const std::string content = read_file(o.dataset_path);
    manifest.add_input(o.dataset_path, content);
    const Dataset ds = dataset_from_csv(content, o.dataset_path);

    const SplitSpec spec{o.common.train_fraction, o.common.seeds.split(o.common.global.seed)};
    const ForestParams params = o.common.forest.params(o.common.seeds.forest(o.common.global.seed));
    const SweepReport report =
        sweep_trees(ds, o.counts, params, spec, o.common.repetitions, o.common.global.jobs);
    manifest.seeds["master"] = o.common.global.seed;
    note_split_and_forest(manifest, spec, params);
    write_sweep_outputs(o.common, report, manifest);
}

struct SweepPositionOpts {
    SweepCommonOpts common;
    std::string logs_dir;
    std::vector<double> distances = {0.0, 2.5, 5.0, 7.5, 10.0};
    std::string cutout_size = "10x10";
    double resolution = 0.5;
    double interval = 8.0;
    double warmup = 12.0;
    KernelParams kernel;
};

void run_sweep_position(const SweepPositionOpts& o, const std::vector<std::string>& argv) {
    AppConfig cfg = load_app_config(o.common.global);
    if (!cfg.layout_known)
        throw ConfigError("sweep position needs the corridor layout; add a \"layout\" block "
                          "to the config file");
    Manifest manifest;
    manifest.command = "sweep position";
    manifest.argv = argv;
    const std::vector<TrajectoryLog> logs = read_logs_dir(o.logs_dir, manifest);
    const auto [w, h] = parse_cutout_size(o.cutout_size);

    const SplitSpec spec{o.common.train_fraction, o.common.seeds.split(o.common.global.seed)};
    const ForestParams params = o.common.forest.params(o.common.seeds.forest(o.common.global.seed));
    const SweepReport report =
        sweep_position(cfg.layout, logs, o.distances, w, h, o.resolution, o.kernel, o.interval,
                       o.warmup, params, spec, o.common.repetitions, o.common.global.jobs);
    manifest.seeds["master"] = o.common.global.seed;
    note_split_and_forest(manifest, spec, params);
    write_sweep_outputs(o.common, report, manifest);
}

struct SweepSizeOpts {
    SweepCommonOpts common;
    std::string logs_dir;
    std::vector<double> heights = {2.5, 5.0, 7.5, 10.0, 12.5, 15.0, 17.5, 20.0};
    double width = 10.0;
    double resolution = 0.5;
    double warmup = 12.0;
    double speed_mean = 1.34;
    KernelParams kernel;
    CLI::Option* opt_speed_mean = nullptr;
};

void run_sweep_size(const SweepSizeOpts& o, const std::vector<std::string>& argv) {
    AppConfig cfg = load_app_config(o.common.global);
    if (!cfg.layout_known)
        throw ConfigError("sweep size needs the corridor layout; add a \"layout\" block "
                          "to the config file");
    const double speed_mean =
        o.opt_speed_mean->count() ? o.speed_mean : cfg.sim.speed_mean;
    Manifest manifest;
    manifest.command = "sweep size";
    manifest.argv = argv;
    const std::vector<TrajectoryLog> logs = read_logs_dir(o.logs_dir, manifest);

    const SplitSpec spec{o.common.train_fraction, o.common.seeds.split(o.common.global.seed)};
    const ForestParams params = o.common.forest.params(o.common.seeds.forest(o.common.global.seed));
    const SweepReport report =
        sweep_size(cfg.layout, logs, o.heights, o.width, o.resolution, o.kernel, o.warmup,
                   speed_mean, params, spec, o.common.repetitions, o.common.global.jobs);
    manifest.seeds["master"] = o.common.global.seed;
    note_split_and_forest(manifest, spec, params);
    write_sweep_outputs(o.common, report, manifest);
}

void add_global_opts(CLI::App* sub, GlobalOpts& g) {
    sub->add_option("--config", g.config_path, "JSON config file (scenario, sim, layout)");
    sub->add_option("--seed", g.seed, "Master seed; all randomness derives from it")
        ->capture_default_str();
    sub->add_option("--jobs", g.jobs, "Worker threads (1 = fully sequential)")
        ->capture_default_str()
        ->check(CLI::Range(1u, 256u));
}

void add_split_opts(CLI::App* sub, SweepCommonOpts& c) {
    sub->add_option("--repetitions", c.repetitions, "Split/train/test repetitions per point")
        ->capture_default_str();
    sub->add_option("--train-fraction", c.train_fraction, "Training-set fraction")
        ->capture_default_str();
    add_forest_flags(sub, c.forest);
    add_seed_opts(sub, c.seeds);
    sub->add_option("--out", c.out, "Report CSV path")->required();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pedestrian-stream destination prediction pipeline"};
    app.require_subcommand(1);
    const std::vector<std::string> args = argv_vector(argc, argv);

    SimulateOpts sim_opts;
    CLI::App* sim = app.add_subcommand("simulate", "Run seeded crossroad simulations");
    add_global_opts(sim, sim_opts.global);
    sim->add_option("--runs", sim_opts.runs, "Number of simulation runs")->capture_default_str();
    sim->add_option("--out-dir", sim_opts.out_dir, "Directory for trajectory CSVs")->required();
    sim_opts.opt_duration =
        sim->add_option("--duration", sim_opts.overrides.duration, "Run length in seconds");
    sim_opts.opt_time_step =
        sim->add_option("--time-step", sim_opts.overrides.time_step, "Tick length in seconds");
    sim_opts.opt_spawn_rate =
        sim->add_option("--spawn-rate", sim_opts.overrides.spawn_rate, "Pedestrians per second");
    sim_opts.opt_redistribution =
        sim->add_option("--redistribution-period", sim_opts.overrides.redistribution_period,
                        "Pedestrians between destination-distribution redraws");
    sim_opts.opt_speed_mean =
        sim->add_option("--speed-mean", sim_opts.overrides.speed_mean, "Mean free-flow speed");
    sim_opts.opt_speed_sd =
        sim->add_option("--speed-sd", sim_opts.overrides.speed_sd, "Free-flow speed std dev");
    sim_opts.opt_speed_min =
        sim->add_option("--speed-min", sim_opts.overrides.speed_min, "Speed truncation lower bound");
    sim_opts.opt_speed_max =
        sim->add_option("--speed-max", sim_opts.overrides.speed_max, "Speed truncation upper bound");
    sim->callback([&] { run_simulate(sim_opts, args); });

    DatasetOpts ds_opts;
    CLI::App* ds = app.add_subcommand("dataset", "Extract a heatmap dataset from trajectories");
    add_global_opts(ds, ds_opts.global);
    ds->add_option("--logs-dir", ds_opts.logs_dir, "Directory of trajectory CSVs")->required();
    ds->add_option("--out", ds_opts.out, "Dataset CSV path")->required();
    ds->add_option("--cutout", ds_opts.cutout_size, "Cutout size WIDTHxHEIGHT in meters")
        ->capture_default_str();
    ds_opts.opt_top = ds->add_option("--cutout-top", ds_opts.cutout_top,
                                     "y of the cutout's upper edge (default: crossing lower edge)");
    ds_opts.opt_center = ds->add_option("--cutout-center-x", ds_opts.cutout_center_x,
                                        "x of the cutout center (default: corridor center)");
    ds->add_option("--resolution", ds_opts.resolution, "Heatmap pixel size in meters")
        ->capture_default_str();
    ds->add_option("--interval", ds_opts.interval, "Seconds between samples")
        ->capture_default_str();
    ds->add_option("--warmup", ds_opts.warmup, "Seconds discarded at the start of each run")
        ->capture_default_str();
    ds->add_option("--torso-diameter", ds_opts.kernel.torso_diameter, "Kernel torso diameter d_p")
        ->capture_default_str();
    ds->add_option("--kernel-scale", ds_opts.kernel.scale, "Kernel scale S")
        ->capture_default_str();
    ds->add_flag("--permissive", ds_opts.permissive,
                 "Skip empty-cutout frames instead of failing");
    ds->callback([&] { run_dataset(ds_opts, args); });

    TrainOpts train_opts;
    CLI::App* train = app.add_subcommand("train", "Train the per-destination forests");
    add_global_opts(train, train_opts.global);
    train->add_option("--dataset", train_opts.dataset_path, "Dataset CSV")->required();
    train->add_option("--out", train_opts.out, "Model file path")->required();
    train->add_option("--train-fraction", train_opts.train_fraction, "Training-set fraction")
        ->capture_default_str();
    add_forest_flags(train, train_opts.forest);
    add_seed_opts(train, train_opts.seeds);
    train->callback([&] { run_train(train_opts, args); });

    EvaluateOpts eval_opts;
    CLI::App* eval = app.add_subcommand("evaluate", "Evaluate a model or run the full protocol");
    add_global_opts(eval, eval_opts.global);
    eval->add_option("--dataset", eval_opts.dataset_path, "Dataset CSV")->required();
    eval_opts.opt_model =
        eval->add_option("--model", eval_opts.model_path, "Saved model to evaluate");
    eval->add_option("--out", eval_opts.out, "Summary CSV path")->required();
    eval->add_option("--train-fraction", eval_opts.train_fraction, "Training-set fraction")
        ->capture_default_str();
    eval_opts.opt_reps = eval->add_option(
        "--repetitions", eval_opts.repetitions,
        "Repeat split/train/test this many times instead of evaluating a saved model");
    add_forest_flags(eval, eval_opts.forest);
    add_seed_opts(eval, eval_opts.seeds);
    eval->callback([&] { run_evaluate(eval_opts, args); });

    CLI::App* sweep = app.add_subcommand("sweep", "Parameter sweeps with report CSVs");
    sweep->require_subcommand(1);

    SweepTreesOpts st_opts;
    CLI::App* st = sweep->add_subcommand("trees", "Error and train time vs forest size");
    add_global_opts(st, st_opts.common.global);
    st->add_option("--dataset", st_opts.dataset_path, "Dataset CSV")->required();
    st->add_option("--counts", st_opts.counts, "Comma-separated tree counts")
        ->delimiter(',')
        ->capture_default_str();
    add_split_opts(st, st_opts.common);
    st->callback([&] { run_sweep_trees(st_opts, args); });

    SweepPositionOpts sp_opts;
    CLI::App* sp = sweep->add_subcommand("position", "Error vs cutout distance to the crossing");
    add_global_opts(sp, sp_opts.common.global);
    sp->add_option("--logs-dir", sp_opts.logs_dir, "Directory of trajectory CSVs")->required();
    sp->add_option("--distances", sp_opts.distances,
                   "Comma-separated distances (m) of the cutout's top edge below the crossing")
        ->delimiter(',')
        ->capture_default_str();
    sp->add_option("--cutout", sp_opts.cutout_size, "Cutout size WIDTHxHEIGHT in meters")
        ->capture_default_str();
    sp->add_option("--resolution", sp_opts.resolution, "Heatmap pixel size")->capture_default_str();
    sp->add_option("--interval", sp_opts.interval, "Seconds between samples")
        ->capture_default_str();
    sp->add_option("--warmup", sp_opts.warmup, "Warmup seconds")->capture_default_str();
    sp->add_option("--torso-diameter", sp_opts.kernel.torso_diameter, "Kernel torso diameter")
        ->capture_default_str();
    sp->add_option("--kernel-scale", sp_opts.kernel.scale, "Kernel scale")->capture_default_str();
    add_split_opts(sp, sp_opts.common);
    sp->callback([&] { run_sweep_position(sp_opts, args); });

    SweepSizeOpts sz_opts;
    CLI::App* sz = sweep->add_subcommand("size", "Error vs cutout size");
    add_global_opts(sz, sz_opts.common.global);
    sz->add_option("--logs-dir", sz_opts.logs_dir, "Directory of trajectory CSVs")->required();
    sz->add_option("--heights", sz_opts.heights, "Comma-separated cutout heights in meters")
        ->delimiter(',')
        ->capture_default_str();
    sz->add_option("--width", sz_opts.width, "Cutout width in meters")->capture_default_str();
    sz->add_option("--resolution", sz_opts.resolution, "Heatmap pixel size")
        ->capture_default_str();
    sz->add_option("--warmup", sz_opts.warmup, "Warmup seconds")->capture_default_str();
    sz_opts.opt_speed_mean =
        sz->add_option("--speed-mean", sz_opts.speed_mean,
                       "Mean speed used to rescale the frame interval per size");
    sz->add_option("--torso-diameter", sz_opts.kernel.torso_diameter, "Kernel torso diameter")
        ->capture_default_str();
    sz->add_option("--kernel-scale", sz_opts.kernel.scale, "Kernel scale")->capture_default_str();
    add_split_opts(sz, sz_opts.common);
    sz->callback([&] { run_sweep_size(sz_opts, args); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
