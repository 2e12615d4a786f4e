#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <nlohmann/json.hpp>

#include "naap/dataset.hpp"
#include "naap/error.hpp"
#include "naap/harness.hpp"

namespace fs = std::filesystem;
using namespace naap;

namespace {

struct CommonOpts {
    std::string dataset;
    std::string out;
    std::uint64_t seed = 0;
    std::string cost = "sqrt_rounded";
    double p = 1.0;
    int branch = 3;
    bool no_dedup = false;
    bool no_standardize = false;
    std::string format = "all";
    int jobs = 0;  // 0 = hardware concurrency
    std::vector<int> levels = {0, 3, 6, 9};
    bool scatter = false;
};

void add_run_options(CLI::App* cmd, CommonOpts& opts, bool with_levels = true) {
    cmd->add_option("--dataset", opts.dataset, "NAAP-440e CSV path")->required();
    cmd->add_option("--out", opts.out, "Output directory")->required();
    cmd->add_option("--seed", opts.seed, "Global seed");
    cmd->add_option("--cost", opts.cost, "Cost function variant")
        ->check(CLI::IsMember({"product", "log", "sqrt", "sqrt_rounded"}));
    cmd->add_option("--p", opts.p, "Descent-step budget multiplier")->check(CLI::PositiveNumber);
    cmd->add_option("--branch", opts.branch, "Max branching factor b")
        ->check(CLI::Range(1, 1 << 20));
    cmd->add_flag("--no-dedup", opts.no_dedup, "Re-evaluate previously seen subsets");
    cmd->add_flag("--no-standardize", opts.no_standardize,
                  "Feed raw features to knn/linear regressors");
    cmd->add_option("--format", opts.format, "Report formats to write")
        ->check(CLI::IsMember({"md", "csv", "json", "all"}));
    cmd->add_option("--jobs", opts.jobs, "Worker threads (0 = auto)")->check(CLI::Range(0, 4096));
    if (with_levels)
        cmd->add_option("--levels", opts.levels, "Acceleration levels (epochs)")
            ->check(CLI::IsMember({0, 3, 6, 9}));
    cmd->add_flag("--scatter", opts.scatter, "Emit per-cell scatter CSV/SVG files");
}

harness::RunConfig to_config(const CommonOpts& opts) {
    harness::RunConfig cfg;
    cfg.dataset_path = opts.dataset;
    cfg.out_dir = opts.out;
    cfg.seed = opts.seed;
    cfg.search.cost_variant = metrics::cost_variant_from_string(opts.cost);
    cfg.search.p = opts.p;
    cfg.search.b = opts.branch;
    cfg.search.dedup = !opts.no_dedup;
    cfg.standardize = !opts.no_standardize;
    cfg.format = opts.format;
    cfg.jobs = opts.jobs > 0 ? opts.jobs
                             : std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
    cfg.levels = opts.levels;
    std::sort(cfg.levels.begin(), cfg.levels.end());
    cfg.levels.erase(std::unique(cfg.levels.begin(), cfg.levels.end()), cfg.levels.end());
    cfg.scatter = opts.scatter;
    return cfg;
}

regress::RegressorSpec spec_by_label(const std::string& label) {
    for (const regress::RegressorSpec& spec : regress::baseline_grid())
        if (spec.label() == label) return spec;
    std::string known;
    for (const regress::RegressorSpec& spec : regress::baseline_grid())
        known += "\n  " + spec.label();
    throw std::invalid_argument("unknown algorithm label '" + label + "'; known labels:" + known);
}

std::vector<regress::RegressorSpec> specs_by_labels(const std::vector<std::string>& labels) {
    std::vector<regress::RegressorSpec> specs;
    specs.reserve(labels.size());
    for (const std::string& label : labels) specs.push_back(spec_by_label(label));
    return specs;
}

void report_written(const std::vector<fs::path>& paths) {
    for (const fs::path& path : paths) std::cout << "wrote " << path.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"NAAP-440e accuracy-prediction benchmark harness"};
    app.require_subcommand(1);

    // extend
    std::string ext_schemes, ext_csv, ext_out;
    CLI::App* extend = app.add_subcommand(
        "extend", "Append the two new scheme columns to an original 6-feature CSV");
    extend->add_option("--schemes", ext_schemes, "Schemes JSONL file")->required();
    extend->add_option("--dataset", ext_csv, "Original 6-feature CSV")->required();
    extend->add_option("--out", ext_out, "Extended CSV path")->required();

    // synth
    struct {
        std::string out, meta;
        int samples = 440, informative = 3, distractors = 5, epochs = 9;
        double noise = 0.01;
        std::string target_fn = "linear";
        std::uint64_t seed = 0;
        bool generic_names = false;
    } sy;
    CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic dataset CSV");
    synth->add_option("--out", sy.out, "CSV path")->required();
    synth->add_option("--meta", sy.meta, "Metadata JSON path (default: <out>.meta.json)");
    synth->add_option("--samples", sy.samples)->check(CLI::PositiveNumber);
    synth->add_option("--informative", sy.informative)->check(CLI::NonNegativeNumber);
    synth->add_option("--distractors", sy.distractors)->check(CLI::NonNegativeNumber);
    synth->add_option("--epochs", sy.epochs)->check(CLI::Range(0, 9));
    synth->add_option("--noise", sy.noise)->check(CLI::NonNegativeNumber);
    synth->add_option("--target-fn", sy.target_fn)
        ->check(CLI::IsMember({"linear", "quadratic", "sigmoid"}));
    synth->add_option("--seed", sy.seed);
    synth->add_flag("--generic-names", sy.generic_names,
                    "Name columns x0..xN even when the shape matches the NAAP schema");

    // baseline
    CommonOpts base_opts;
    bool base_featsel = false;
    std::vector<std::string> base_algos;
    CLI::App* baseline =
        app.add_subcommand("baseline", "Uniform-split evaluation of the regressor grid");
    add_run_options(baseline, base_opts);
    baseline->add_flag("--featsel", base_featsel, "Search feature subsets per cell");
    baseline->add_option("--algo", base_algos, "Restrict to these algorithm labels");

    // ablation
    CommonOpts abl_opts;
    std::vector<std::string> abl_algos;
    CLI::App* ablation =
        app.add_subcommand("ablation", "Paired featsel-off/on rows per algorithm");
    add_run_options(ablation, abl_opts);
    ablation->add_option("--algo", abl_algos, "Restrict to these algorithm labels");

    // extrapolate
    CommonOpts ext_opts;
    std::string ext_kind;
    bool ext_featsel = false, ext_force_trees = false;
    std::vector<std::string> ext_algos;
    CLI::App* extrapolate =
        app.add_subcommand("extrapolate", "Left/right/dual extrapolation evaluation");
    extrapolate->add_option("--kind", ext_kind, "Extrapolation kind")
        ->required()
        ->check(CLI::IsMember({"left", "right", "dual"}));
    add_run_options(extrapolate, ext_opts);
    extrapolate->add_flag("--featsel", ext_featsel, "Search feature subsets per cell");
    extrapolate->add_flag("--force-trees", ext_force_trees,
                          "Run tree-family regressors despite the extrapolation limitation");
    extrapolate->add_option("--algo", ext_algos, "Restrict to these algorithm labels");

    // featsel
    CommonOpts fs_opts;
    std::string fs_algo, fs_kind = "uniform";
    int fs_level = 0;
    CLI::App* featsel_cmd =
        app.add_subcommand("featsel", "One feature-subset search for an algorithm and level");
    featsel_cmd->add_option("--algo", fs_algo, "Algorithm label")->required();
    featsel_cmd->add_option("--level", fs_level, "Acceleration level (epochs)")
        ->required()
        ->check(CLI::IsMember({0, 3, 6, 9}));
    featsel_cmd->add_option("--kind", fs_kind, "Split kind")
        ->check(CLI::IsMember({"uniform", "left", "right", "dual"}));
    add_run_options(featsel_cmd, fs_opts, /*with_levels=*/false);

    // importance
    std::vector<std::string> imp_traces;
    std::string imp_dir, imp_out;
    double imp_top = 0.08;
    bool imp_generic = false;
    CLI::App* importance =
        app.add_subcommand("importance", "Pool feature-selection traces into selection rates");
    importance->add_option("--traces", imp_traces, "Trace JSON files");
    importance->add_option("--dir", imp_dir, "Directory of trace JSON files");
    importance->add_option("--out", imp_out, "Output CSV path")->required();
    importance->add_option("--top-fraction", imp_top)->check(CLI::Range(1e-9, 1.0));
    importance->add_flag("--generic-names", imp_generic, "Use f0..fN feature names");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*extend) {
            const harness::ExtendStats stats = harness::extend_csv(ext_schemes, ext_csv, ext_out);
            std::cout << "extended " << stats.rows << " rows -> " << ext_out << "\n";
            return 0;
        }
        if (*synth) {
            data::SyntheticSpec spec;
            spec.n_samples = sy.samples;
            spec.n_informative = sy.informative;
            spec.n_distractor = sy.distractors;
            spec.n_epochs = sy.epochs;
            spec.noise_sd = sy.noise;
            spec.target_fn = data::target_fn_from_string(sy.target_fn);
            spec.seed = sy.seed;
            spec.naap_names =
                !sy.generic_names && sy.informative + sy.distractors == 8 && sy.epochs == 9;
            const data::Dataset ds = data::generate_synthetic(spec);
            data::save_csv(ds, sy.out);
            const std::string meta_path = sy.meta.empty() ? sy.out + ".meta.json" : sy.meta;
            nlohmann::ordered_json meta;
            meta["n_samples"] = spec.n_samples;
            meta["n_informative"] = spec.n_informative;
            meta["n_distractor"] = spec.n_distractor;
            meta["n_epochs"] = spec.n_epochs;
            meta["target_fn"] = data::to_string(spec.target_fn);
            meta["noise_sd"] = spec.noise_sd;
            meta["seed"] = spec.seed;
            meta["informative_columns"] = ds.informative;
            std::ofstream meta_out(meta_path);
            if (!meta_out) throw IoError("cannot write: " + meta_path);
            meta_out << meta.dump(2) << '\n';
            std::cout << "wrote " << sy.out << " and " << meta_path << "\n";
            return 0;
        }
        if (*baseline) {
            harness::RunConfig cfg = to_config(base_opts);
            cfg.featsel_on = base_featsel;
            cfg.specs = specs_by_labels(base_algos);
            const data::Dataset ds = data::load_csv(cfg.dataset_path);
            report_written(harness::write_report(harness::run_baseline(ds, cfg), cfg));
            return 0;
        }
        if (*ablation) {
            harness::RunConfig cfg = to_config(abl_opts);
            cfg.specs = specs_by_labels(abl_algos);
            const data::Dataset ds = data::load_csv(cfg.dataset_path);
            report_written(harness::write_report(harness::run_ablation(ds, cfg), cfg));
            return 0;
        }
        if (*extrapolate) {
            harness::RunConfig cfg = to_config(ext_opts);
            cfg.split_kind = data::split_kind_from_string(ext_kind);
            cfg.featsel_on = ext_featsel;
            cfg.force_trees = ext_force_trees;
            cfg.specs = specs_by_labels(ext_algos);
            const data::Dataset ds = data::load_csv(cfg.dataset_path);
            report_written(harness::write_report(harness::run_extrapolation(ds, cfg), cfg));
            return 0;
        }
        if (*featsel_cmd) {
            harness::RunConfig cfg = to_config(fs_opts);
            cfg.split_kind = data::split_kind_from_string(fs_kind);
            cfg.featsel_on = true;
            cfg.levels = {fs_level};
            const regress::RegressorSpec spec = spec_by_label(fs_algo);
            const data::Dataset ds = data::load_csv(cfg.dataset_path);
            const featsel::SearchTrace trace = harness::run_featsel_cell(ds, cfg, spec, fs_level);

            harness::RunReport report;
            report.command = "featsel";
            report.title = "Feature-subset search: " + spec.label() + ", " +
                           std::to_string(fs_level) + " epochs, " + fs_kind + " split";
            report.kind = cfg.split_kind;
            report.levels = {fs_level};
            report.seed = cfg.seed;
            report.cost_variant = cfg.search.cost_variant;
            report.split = harness::make_paper_split(ds, cfg.split_kind);
            report.feature_names = data::feature_matrix(ds, fs_level).names;
            harness::ReportRow row;
            row.algorithm = spec.label();
            row.level = fs_level;
            row.featsel = true;
            row.result = trace.best;
            row.mask = featsel::FeatureMask(trace.n_features, trace.best_mask).to_string();
            row.n_features = trace.n_features;
            report.rows.push_back(std::move(row));
            report.traces.push_back(trace);
            report_written(harness::write_report(report, cfg));
            std::cout << "best " << metrics::format_row(trace.best) << " mask "
                      << featsel::FeatureMask(trace.n_features, trace.best_mask).to_string()
                      << "\n";
            return 0;
        }
        if (*importance) {
            std::vector<std::string> files = imp_traces;
            if (!imp_dir.empty()) {
                std::vector<std::string> found;
                for (const auto& entry : fs::directory_iterator(imp_dir))
                    if (entry.path().extension() == ".json") found.push_back(entry.path().string());
                std::sort(found.begin(), found.end());
                files.insert(files.end(), found.begin(), found.end());
            }
            if (files.empty()) throw std::invalid_argument("no trace files given");
            std::vector<featsel::SearchTrace> traces;
            bool all_naap_sized = true;
            for (const std::string& file : files) {
                std::ifstream in(file);
                if (!in) throw IoError("cannot open trace: " + file);
                std::string text((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
                traces.push_back(featsel::SearchTrace::from_json(text));
                const int f = traces.back().n_features;
                all_naap_sized = all_naap_sized && (f == 8 || f == 17 || f == 26 || f == 35);
            }
            std::vector<std::string> names;
            if (all_naap_sized && !imp_generic) names = data::naap_feature_names(data::kMaxEpochs);
            harness::emit_importance(traces, names, imp_out);
            std::cout << "wrote " << imp_out << "\n";
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
