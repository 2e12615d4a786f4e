#include "naap/harness.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "naap/error.hpp"
#include "naap/rng.hpp"
#include "naap/scheme.hpp"

namespace naap::harness {

namespace {

std::span<const double> to_span(const Eigen::VectorXd& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    const auto worker = [&] {
        while (!failed.load(std::memory_order_relaxed)) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) break;
            try {
                body(i);
            } catch (...) {
                std::scoped_lock lock(error_mutex);
                if (!error) error = std::current_exception();
                failed.store(true, std::memory_order_relaxed);
            }
        }
    };
    std::vector<std::thread> threads;
    const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
    threads.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

void check_levels(const std::vector<int>& levels) {
    if (levels.empty()) throw std::invalid_argument("at least one acceleration level is required");
    for (int level : levels)
        if (level != 0 && level != 3 && level != 6 && level != 9)
            throw std::invalid_argument("levels must come from {0, 3, 6, 9}");
}

bool is_tree_family(regress::Family family) {
    return family == regress::Family::decision_tree || family == regress::Family::random_forest ||
           family == regress::Family::gradient_boosting || family == regress::Family::adaboost_r2;
}

struct LevelData {
    Eigen::MatrixXd x_train, x_test;
    Eigen::VectorXd y_train, y_test;
    int n_features = 0;
    std::vector<std::string> names;
};

std::map<int, LevelData> build_level_data(const data::Dataset& dataset, const data::Split& split,
                                          const std::vector<int>& levels) {
    std::map<int, LevelData> out;
    for (int level : levels) {
        if (out.contains(level)) continue;
        const data::FeatureMatrix fm = data::feature_matrix(dataset, level);
        LevelData ld;
        ld.x_train = data::take_rows(fm.X, split.train_idx);
        ld.x_test = data::take_rows(fm.X, split.test_idx);
        ld.y_train = data::take_rows(fm.y, split.train_idx);
        ld.y_test = data::take_rows(fm.y, split.test_idx);
        ld.n_features = static_cast<int>(fm.X.cols());
        ld.names = fm.names;
        out.emplace(level, std::move(ld));
    }
    return out;
}

Eigen::MatrixXd take_cols(const Eigen::MatrixXd& X, const featsel::FeatureMask& mask) {
    Eigen::MatrixXd out(X.rows(), mask.count());
    Eigen::Index c = 0;
    for (int f = 0; f < mask.size(); ++f)
        if (mask.test(f)) out.col(c++) = X.col(f);
    return out;
}

std::string cell_coordinates(const std::string& label, int level, data::SplitKind kind,
                             const char* stream) {
    return label + "|" + std::to_string(level) + "|" + data::to_string(kind) + "|" + stream;
}

struct CellJob {
    regress::RegressorSpec spec;
    int level = 0;
    bool with_featsel = false;
};

struct CellOut {
    ReportRow row;
    featsel::SearchTrace trace;
    bool has_trace = false;
};

CellOut run_cell(const LevelData& ld, const CellJob& job, const RunConfig& config,
                 data::SplitKind kind) {
    regress::RegressorSpec spec = job.spec;
    spec.standardize = config.standardize;
    spec.seed = derive_seed(config.seed, cell_coordinates(job.spec.label(), job.level, kind, "fit"));

    CellOut out;
    out.row.algorithm = job.spec.label();
    out.row.level = job.level;
    out.row.featsel = job.with_featsel;
    out.row.n_features = ld.n_features;

    const auto evaluate_mask = [&](const featsel::FeatureMask& mask) {
        const Eigen::MatrixXd xtr = take_cols(ld.x_train, mask);
        const Eigen::MatrixXd xte = take_cols(ld.x_test, mask);
        const regress::ModelPtr model = regress::fit(spec, xtr, ld.y_train);
        const Eigen::VectorXd pred = model->predict(xte);
        return metrics::evaluate(to_span(pred), to_span(ld.y_test), config.search.cost_variant);
    };

    if (!job.with_featsel) {
        const regress::ModelPtr model = regress::fit(spec, ld.x_train, ld.y_train);
        const Eigen::VectorXd pred = model->predict(ld.x_test);
        out.row.result =
            metrics::evaluate(to_span(pred), to_span(ld.y_test), config.search.cost_variant);
        if (config.scatter) {
            out.row.predictions.assign(pred.data(), pred.data() + pred.size());
            out.row.test_gt.assign(ld.y_test.data(), ld.y_test.data() + ld.y_test.size());
        }
        return out;
    }

    featsel::SearchConfig search = config.search;
    search.seed =
        derive_seed(config.seed, cell_coordinates(job.spec.label(), job.level, kind, "search"));
    out.trace = featsel::hill_climb(evaluate_mask, ld.n_features, search);
    out.trace.algorithm = job.spec.label();
    out.trace.level = job.level;
    out.has_trace = true;
    out.row.result = out.trace.best;
    out.row.mask = featsel::FeatureMask(ld.n_features, out.trace.best_mask).to_string();
    if (config.scatter) {
        const featsel::FeatureMask best(ld.n_features, out.trace.best_mask);
        const regress::ModelPtr model = regress::fit(spec, take_cols(ld.x_train, best), ld.y_train);
        const Eigen::VectorXd pred = model->predict(take_cols(ld.x_test, best));
        out.row.predictions.assign(pred.data(), pred.data() + pred.size());
        out.row.test_gt.assign(ld.y_test.data(), ld.y_test.data() + ld.y_test.size());
    }
    return out;
}

struct RowPlan {
    std::string placeholder_label;  // set for out-of-scope rows
    CellJob job;
    bool is_placeholder = false;
};

RunReport run_plan(const data::Dataset& dataset, const RunConfig& config,
                   const std::vector<RowPlan>& plans, const data::Split& split,
                   std::string command, std::string title) {
    check_levels(config.levels);
    const int max_level = *std::max_element(config.levels.begin(), config.levels.end());
    const std::map<int, LevelData> level_data = build_level_data(dataset, split, config.levels);

    std::vector<CellOut> outputs(plans.size());
    std::vector<std::size_t> computed;
    for (std::size_t i = 0; i < plans.size(); ++i)
        if (!plans[i].is_placeholder) computed.push_back(i);

    parallel_for(computed.size(), config.jobs, [&](std::size_t c) {
        const std::size_t i = computed[c];
        outputs[i] = run_cell(level_data.at(plans[i].job.level), plans[i].job, config,
                              split.kind);
    });

    RunReport report;
    report.command = std::move(command);
    report.title = std::move(title);
    report.kind = split.kind;
    report.levels = config.levels;
    report.seed = config.seed;
    report.cost_variant = config.search.cost_variant;
    report.split = split;
    report.feature_names = level_data.at(max_level).names;
    for (std::size_t i = 0; i < plans.size(); ++i) {
        if (plans[i].is_placeholder) {
            ReportRow row;
            row.algorithm = plans[i].placeholder_label;
            row.level = plans[i].job.level;
            row.featsel = plans[i].job.with_featsel;
            row.placeholder = true;
            report.rows.push_back(std::move(row));
            continue;
        }
        report.rows.push_back(std::move(outputs[i].row));
        if (outputs[i].has_trace) report.traces.push_back(std::move(outputs[i].trace));
    }
    return report;
}

std::vector<RowPlan> grid_plans(const std::vector<regress::RegressorSpec>& specs,
                                const std::vector<std::string>& placeholders_after,
                                const std::string& placeholder_marker,
                                const std::vector<int>& levels, bool with_featsel) {
    // placeholders_after: labels inserted when the spec list reaches the
    // marker label, keeping the published table shapes comparable.
    std::vector<RowPlan> plans;
    for (const regress::RegressorSpec& spec : specs) {
        for (int level : levels) {
            RowPlan plan;
            plan.job = {spec, level, with_featsel};
            plans.push_back(std::move(plan));
        }
        if (!placeholder_marker.empty() && spec.label() == placeholder_marker) {
            for (const std::string& label : placeholders_after) {
                for (int level : levels) {
                    RowPlan plan;
                    plan.placeholder_label = label;
                    plan.job.level = level;
                    plan.job.with_featsel = with_featsel;
                    plan.is_placeholder = true;
                    plans.push_back(std::move(plan));
                }
            }
        }
    }
    return plans;
}

data::Split make_split(const data::Dataset& dataset, data::SplitKind kind) {
    const auto bins = data::bin_by_accuracy(dataset, data::kBinCount);
    if (kind == data::SplitKind::uniform) return data::uniform_split(bins);
    return data::extrapolation_split(bins, kind, /*strict=*/true);
}

}  // namespace

data::Split make_paper_split(const data::Dataset& dataset, data::SplitKind kind) {
    return make_split(dataset, kind);
}

std::string acceleration_label(int level) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.1f", 100.0 - static_cast<double>(level) * 100.0 / 90.0);
    return buf;
}

RunReport run_baseline(const data::Dataset& dataset, const RunConfig& config) {
    if (config.split_kind != data::SplitKind::uniform)
        throw std::invalid_argument("baseline runs on the uniform split");
    const data::Split split = make_split(dataset, data::SplitKind::uniform);

    std::vector<regress::RegressorSpec> specs =
        config.specs.empty() ? regress::baseline_grid(config.seed) : config.specs;
    const bool default_grid = config.specs.empty();
    const std::vector<std::string> svr_labels = {"SVR (RBF kernel)", "SVR (Polynomial kernel)",
                                                 "SVR (Linear kernel)"};
    const std::vector<RowPlan> plans =
        grid_plans(specs, default_grid ? svr_labels : std::vector<std::string>{},
                   default_grid ? "AdaBoost (N=200)" : "", config.levels, config.featsel_on);

    return run_plan(dataset, config, plans, split, "baseline",
                    config.featsel_on ? "Uniform-split baseline (selected feature subsets)"
                                      : "Uniform-split baseline (all features)");
}

RunReport run_ablation(const data::Dataset& dataset, const RunConfig& config) {
    if (config.split_kind != data::SplitKind::uniform)
        throw std::invalid_argument("ablation runs on the uniform split");
    const data::Split split = make_split(dataset, data::SplitKind::uniform);

    std::vector<regress::RegressorSpec> specs;
    if (config.specs.empty()) {
        specs = {regress::knn(3),
                 regress::linear(regress::Activation::pow_quarter),
                 regress::decision_tree(),
                 regress::gradient_boosting(200),
                 regress::adaboost_r2(100)};
    } else {
        specs = config.specs;
    }

    std::vector<RowPlan> plans;
    const auto add_pair = [&](const RowPlan& base) {
        RowPlan off = base;
        off.job.with_featsel = false;
        plans.push_back(off);
        RowPlan on = base;
        on.job.with_featsel = true;
        plans.push_back(on);
    };
    for (std::size_t s = 0; s < specs.size(); ++s) {
        for (int level : config.levels) {
            RowPlan plan;
            plan.job = {specs[s], level, false};
            add_pair(plan);
        }
        // The published pairing slots the RBF-kernel SVR before the forest.
        if (config.specs.empty() && specs[s].label() == "AdaBoost (N=100)") {
            for (int level : config.levels) {
                RowPlan plan;
                plan.placeholder_label = "SVR (RBF kernel)";
                plan.is_placeholder = true;
                plan.job.level = level;
                add_pair(plan);
            }
        }
    }
    if (config.specs.empty()) {
        for (int level : config.levels) {
            RowPlan plan;
            plan.job = {regress::random_forest(200), level, false};
            add_pair(plan);
        }
    }

    return run_plan(dataset, config, plans, split, "ablation",
                    "Feature-selection ablation (all features vs selected subset)");
}

RunReport run_extrapolation(const data::Dataset& dataset, const RunConfig& config) {
    if (config.split_kind == data::SplitKind::uniform)
        throw std::invalid_argument("extrapolation runs need --kind left|right|dual");
    const data::Split split = make_split(dataset, config.split_kind);

    std::vector<regress::RegressorSpec> specs;
    if (config.specs.empty()) {
        for (regress::Activation a :
             {regress::Activation::identity, regress::Activation::pow_half,
              regress::Activation::pow_quarter, regress::Activation::pow_two,
              regress::Activation::exp, regress::Activation::log, regress::Activation::sigmoid})
            specs.push_back(regress::linear(a));
    } else {
        specs = config.specs;
        for (const regress::RegressorSpec& spec : specs)
            if (is_tree_family(spec.family) && !config.force_trees)
                throw ValidationError(
                    "tree-family regressor '" + spec.label() +
                    "' cannot predict outside its training target range and would not "
                    "extrapolate; pass --force-trees to run it anyway");
    }

    const bool default_grid = config.specs.empty();
    const std::vector<std::string> svr_labels = {"SVR (Polynomial kernel)", "SVR (Linear kernel)"};
    const std::vector<RowPlan> plans =
        grid_plans(specs, default_grid ? svr_labels : std::vector<std::string>{},
                   default_grid ? "Linear Regression (Sigmoid)" : "", config.levels,
                   config.featsel_on);

    const std::string kind_name = data::to_string(config.split_kind);
    std::string title = kind_name;
    title[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(title[0])));
    return run_plan(dataset, config, plans, split, "extrapolate-" + kind_name,
                    title + " extrapolation");
}

featsel::SearchTrace run_featsel_cell(const data::Dataset& dataset, const RunConfig& config,
                                      const regress::RegressorSpec& spec, int level) {
    check_levels({level});
    const data::Split split = make_split(dataset, config.split_kind);
    const std::map<int, LevelData> level_data = build_level_data(dataset, split, {level});
    CellJob job{spec, level, true};
    CellOut out = run_cell(level_data.at(level), job, config, split.kind);
    return std::move(out.trace);
}

ExtendStats extend_csv(const std::filesystem::path& schemes_path,
                       const std::filesystem::path& csv_path,
                       const std::filesystem::path& out_path) {
    std::ifstream schemes_in(schemes_path);
    if (!schemes_in) throw IoError("cannot open schemes file: " + schemes_path.string());
    std::map<std::string, scheme::ArchitectureScheme> schemes;
    for (scheme::ArchitectureScheme& s : scheme::parse_scheme_lines(schemes_in)) {
        const std::string name = s.name;
        if (!schemes.emplace(name, std::move(s)).second)
            throw ValidationError("duplicate scheme name: " + name);
    }

    data::Dataset ds = data::load_csv(csv_path, data::SchemaMode::generic);
    const std::vector<std::string> original(scheme::kSchemeFeatureNames.begin(),
                                            scheme::kSchemeFeatureNames.begin() + 6);
    if (ds.base_names != original) {
        if (ds.naap_layout())
            throw ValidationError(csv_path.string() + ": already carries the extended columns");
        throw ValidationError(csv_path.string() +
                              ": expected the original 6 scheme columns (depth, num_stages, "
                              "first_width, last_width, num_params, num_macs)");
    }

    ExtendStats stats;
    Eigen::MatrixXd extended(ds.size(), 8);
    extended.leftCols(6) = ds.base;
    for (Eigen::Index i = 0; i < ds.size(); ++i) {
        const std::string& id = ds.ids[static_cast<std::size_t>(i)];
        const auto it = schemes.find(id);
        if (it == schemes.end())
            throw ValidationError("no scheme named '" + id + "' in " + schemes_path.string());
        const scheme::ArchitectureScheme& s = it->second;
        extended(i, 6) = scheme::count_skip_connections(s);
        extended(i, 7) = scheme::count_lost_rf_layers(s);
        const scheme::ParamsMacs pm = scheme::count_params_macs(s);
        if (static_cast<double>(pm.params) != ds.base(i, 4)) ++stats.params_mismatches;
        if (static_cast<double>(pm.macs) != ds.base(i, 5)) ++stats.macs_mismatches;
        ++stats.rows;
    }
    if (stats.params_mismatches > 0 || stats.macs_mismatches > 0)
        std::cerr << "warning: derived params/MACs differ from the CSV for "
                  << stats.params_mismatches << "/" << stats.macs_mismatches
                  << " rows (CSV values kept)\n";

    ds.base = std::move(extended);
    ds.base_names.assign(scheme::kSchemeFeatureNames.begin(), scheme::kSchemeFeatureNames.end());
    data::save_csv(ds, out_path);
    return stats;
}

}  // namespace naap::harness
