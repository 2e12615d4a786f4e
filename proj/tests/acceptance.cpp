// Acceptance suite: one pass/fail line per criterion.
//
// The two criteria that reference the published NAAP-440e table need the real
// CSV; point NAAP440E_CSV (or --dataset, or data/naap-440e.csv next to the
// repo) at it. Without the file, criterion 8 runs on a synthetic stand-in of
// the same shape (the property it checks is dataset-independent) and
// criterion 9 reports SKIP with exit code 77.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <thread>

#include "naap/harness.hpp"
#include "naap/rng.hpp"
#include "oracles.hpp"
#include "reference_tables.hpp"
#include "testutil.hpp"

namespace fs = std::filesystem;
using namespace naap;

namespace {

enum class Status { pass, fail, skip };

struct Outcome {
    Status status = Status::fail;
    std::string detail;
};

struct Context {
    std::string cli;
    std::string data_dir;
    std::string dataset_flag;
    int jobs = 1;

    std::optional<fs::path> real_csv() const {
        if (!dataset_flag.empty()) return fs::path(dataset_flag);
        if (const char* env = std::getenv("NAAP440E_CSV"); env != nullptr && *env != '\0')
            return fs::path(env);
        if (!data_dir.empty()) {
            const fs::path candidate = fs::path(data_dir) / "naap-440e.csv";
            if (fs::exists(candidate)) return candidate;
        }
        return std::nullopt;
    }
};

data::Dataset synthetic_standin(std::uint64_t seed = 424240) {
    data::SyntheticSpec spec;
    spec.n_samples = 440;
    spec.n_informative = 3;
    spec.n_distractor = 5;
    spec.n_epochs = 9;
    spec.noise_sd = 0.01;
    spec.seed = seed;
    spec.naap_names = true;
    return data::generate_synthetic(spec);
}

bool distinct_accuracies(const data::Dataset& ds) {
    std::set<double> seen;
    for (Eigen::Index i = 0; i < ds.size(); ++i)
        if (!seen.insert(ds.gt(i)).second) return false;
    return true;
}

std::span<const double> to_span(const Eigen::VectorXd& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

// ---- criterion 1: split cardinalities ------------------------------------

Outcome criterion_splits(Context& ctx) {
    data::Dataset ds;
    std::string source = "synthetic";
    if (const auto real = ctx.real_csv()) {
        ds = data::load_csv(*real);
        source = real->filename().string();
    } else {
        ds = synthetic_standin();
    }
    if (ds.size() != 440) return {Status::fail, "dataset does not have 440 rows"};
    if (!distinct_accuracies(ds)) return {Status::fail, "accuracies are not distinct"};

    const auto bins = data::bin_by_accuracy(ds, 40);
    const data::Split uniform = data::uniform_split(bins);
    if (uniform.train_idx.size() != 400 || uniform.test_idx.size() != 40)
        return {Status::fail, "uniform split is not 400/40"};

    for (data::SplitKind kind :
         {data::SplitKind::left, data::SplitKind::right, data::SplitKind::dual}) {
        const data::Split split = data::extrapolation_split(bins, kind);
        if (split.train_idx.size() != 200 || split.test_idx.size() != 20)
            return {Status::fail, data::to_string(kind) + " split is not 200/20"};
        std::set<int> train(split.train_idx.begin(), split.train_idx.end());
        for (int t : split.test_idx)
            if (train.contains(t))
                return {Status::fail, data::to_string(kind) + " split is not disjoint"};
    }
    std::set<int> train(uniform.train_idx.begin(), uniform.train_idx.end());
    for (int t : uniform.test_idx)
        if (train.contains(t)) return {Status::fail, "uniform split is not disjoint"};
    return {Status::pass, "uniform 400/40; left/right/dual 200/20; all disjoint (" + source + ")"};
}

// ---- criterion 2: published-table arithmetic ------------------------------

Outcome criterion_table_consistency(Context&) {
    const auto check = [](std::span<const reference::Pair> pairs, int n_test,
                          const char* name) -> std::optional<std::string> {
        for (const reference::Pair& pair : pairs) {
            const double score =
                metrics::round3(metrics::monotonicity_score(pair.violations, n_test));
            if (std::llround(score * 1000.0) != std::llround(pair.score * 1000.0))
                return std::string(name) + ": " + std::to_string(pair.violations) + " -> " +
                       std::to_string(score) + " != " + std::to_string(pair.score);
        }
        return std::nullopt;
    };
    std::size_t total = reference::uniform_pairs().size() + reference::left_pairs().size() +
                        reference::right_pairs().size() + reference::dual_pairs().size();
    for (const auto& err : {check(reference::uniform_pairs(), 40, "uniform"),
                            check(reference::left_pairs(), 20, "left"),
                            check(reference::right_pairs(), 20, "right"),
                            check(reference::dual_pairs(), 20, "dual")})
        if (err) return {Status::fail, *err};
    return {Status::pass,
            std::to_string(total) + " published (violations, score) pairs consistent at 3 decimals"};
}

// ---- criterion 3: violation-counter oracle --------------------------------

Outcome criterion_counter_oracle(Context&) {
    Rng rng(31337);
    for (int instance = 0; instance < 200; ++instance) {
        const std::size_t n = 2 + rng.below(49);
        std::vector<double> pred(n), gt(n);
        const bool ties = instance % 2 == 0;
        for (std::size_t i = 0; i < n; ++i) {
            pred[i] = ties ? static_cast<double>(rng.below(6)) / 5.0 : rng.uniform();
            gt[i] = ties ? static_cast<double>(rng.below(6)) / 5.0 : rng.uniform();
        }
        const auto fast = metrics::count_violations(pred, gt);
        const auto slow = oracle::violations_bruteforce(pred, gt);
        if (fast != slow)
            return {Status::fail, "instance " + std::to_string(instance) + ": " +
                                      std::to_string(fast) + " != " + std::to_string(slow)};
    }
    return {Status::pass, "optimized counter == brute force on 200 instances, N in [2,50], with ties"};
}

// ---- criterion 4: activation recovery -------------------------------------

Outcome criterion_activation_recovery(Context&) {
    Rng rng(8844);
    Eigen::VectorXd w(5);
    w << 0.25, 0.15, 0.2, 0.1, 0.3;
    const auto fill = [&](Eigen::Index rows, double lo, double hi) {
        Eigen::MatrixXd X(rows, 5);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < 5; ++j) X(i, j) = lo + (hi - lo) * rng.uniform();
        return X;
    };
    double worst = 0.0;
    for (regress::Activation a :
         {regress::Activation::identity, regress::Activation::pow_half,
          regress::Activation::pow_quarter, regress::Activation::pow_two, regress::Activation::exp,
          regress::Activation::log, regress::Activation::sigmoid}) {
        const Eigen::MatrixXd X = fill(100, 0.0, 1.0);
        const Eigen::MatrixXd X_test = fill(50, -0.3, 1.5);  // beyond the training hull
        const auto apply = [&](const Eigen::MatrixXd& M) {
            Eigen::VectorXd y(M.rows());
            for (Eigen::Index i = 0; i < M.rows(); ++i)
                y(i) = regress::activation_forward(a, M.row(i).dot(w) + 0.5);
            return y;
        };
        const auto model = regress::fit(regress::linear(a), X, apply(X));
        const double mae = (model->predict(X_test) - apply(X_test)).cwiseAbs().mean();
        worst = std::max(worst, mae);
        if (!(mae < 1e-6))
            return {Status::fail, regress::to_string(a) + ": held-out MAE " + std::to_string(mae)};
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "all activations recovered; worst held-out MAE %.2e", worst);
    return {Status::pass, buf};
}

// ---- criterion 5: extrapolation dichotomy ---------------------------------

Outcome criterion_extrapolation_dichotomy(Context&) {
    data::SyntheticSpec spec;
    spec.n_samples = 440;
    spec.n_informative = 3;
    spec.n_distractor = 5;
    spec.noise_sd = 0.002;  // tight monotone relation
    spec.seed = 99;
    const data::Dataset ds = data::generate_synthetic(spec);
    const auto bins = data::bin_by_accuracy(ds, 40);
    const data::Split split = data::extrapolation_split(bins, data::SplitKind::left);

    const auto fm = data::feature_matrix(ds, 0);
    const Eigen::MatrixXd xtr = data::take_rows(fm.X, split.train_idx);
    const Eigen::MatrixXd xte = data::take_rows(fm.X, split.test_idx);
    const Eigen::VectorXd ytr = data::take_rows(fm.y, split.train_idx);
    const double lo = ytr.minCoeff(), hi = ytr.maxCoeff();

    for (regress::RegressorSpec rs :
         {regress::decision_tree(), regress::random_forest(100), regress::gradient_boosting(100),
          regress::adaboost_r2(50)}) {
        rs.seed = 1;
        const Eigen::VectorXd pred = regress::fit(rs, xtr, ytr)->predict(xte);
        for (Eigen::Index i = 0; i < pred.size(); ++i)
            if (pred(i) < lo || pred(i) > hi)
                return {Status::fail, rs.label() + " predicted outside the training range"};
    }
    const Eigen::VectorXd lin = regress::fit(regress::linear(), xtr, ytr)->predict(xte);
    if (lin.minCoeff() >= lo)
        return {Status::fail, "identity linear model never extrapolated below the training range"};
    char buf[128];
    std::snprintf(buf, sizeof(buf),
                  "tree families stayed in [%.4f, %.4f]; linear reached %.4f below it", lo, hi,
                  lin.minCoeff());
    return {Status::pass, buf};
}

// ---- criterion 6: hill climb vs exhaustive oracle --------------------------

struct PlantedProblem {
    data::Dataset dataset;
    Eigen::MatrixXd x_train, x_test;
    Eigen::VectorXd y_train, y_test;
};

PlantedProblem planted(std::uint64_t seed) {
    data::SyntheticSpec spec;
    spec.n_samples = 220;
    spec.n_informative = 3;
    spec.n_distractor = 5;
    spec.noise_sd = 0.02;
    spec.seed = seed;
    PlantedProblem p;
    p.dataset = data::generate_synthetic(spec);
    const data::Split split = data::uniform_split(data::bin_by_accuracy(p.dataset, 20));
    const auto fm = data::feature_matrix(p.dataset, 0);
    p.x_train = data::take_rows(fm.X, split.train_idx);
    p.x_test = data::take_rows(fm.X, split.test_idx);
    p.y_train = data::take_rows(fm.y, split.train_idx);
    p.y_test = data::take_rows(fm.y, split.test_idx);
    return p;
}

featsel::Evaluator linear_evaluator(const PlantedProblem& p) {
    return [&p](const featsel::FeatureMask& mask) {
        Eigen::MatrixXd xtr(p.x_train.rows(), mask.count());
        Eigen::MatrixXd xte(p.x_test.rows(), mask.count());
        Eigen::Index c = 0;
        for (int f = 0; f < mask.size(); ++f) {
            if (!mask.test(f)) continue;
            xtr.col(c) = p.x_train.col(f);
            xte.col(c) = p.x_test.col(f);
            ++c;
        }
        const auto model = regress::fit(regress::linear(), xtr, p.y_train);
        const Eigen::VectorXd pred = model->predict(xte);
        return metrics::evaluate(to_span(pred), to_span(p.y_test));
    };
}

Outcome criterion_hill_climb_oracle(Context&) {
    int optimum_hits = 0, full_mask_ok = 0;
    const int n_seeds = 20;
    for (int s = 0; s < n_seeds; ++s) {
        const PlantedProblem p = planted(1000 + static_cast<std::uint64_t>(s));
        const featsel::Evaluator eval = linear_evaluator(p);
        const auto exhaustive = featsel::exhaustive_search(eval, 8);
        featsel::SearchConfig config;
        config.seed = static_cast<std::uint64_t>(s);
        const featsel::SearchTrace trace = featsel::hill_climb(eval, 8, config);
        if (trace.best.cost <= exhaustive.best_result.cost + 1e-12) ++optimum_hits;
        if (trace.best.cost <= eval(featsel::FeatureMask::full(8)).cost) ++full_mask_ok;
    }
    char buf[96];
    std::snprintf(buf, sizeof(buf), "optimum found in %d/%d seeds; best <= full-mask cost in %d/%d",
                  optimum_hits, n_seeds, full_mask_ok, n_seeds);
    if (optimum_hits * 10 < n_seeds * 9 || full_mask_ok != n_seeds) return {Status::fail, buf};
    return {Status::pass, buf};
}

// ---- criterion 7: budget invariants ----------------------------------------

Outcome criterion_budgets(Context&) {
    const auto check_trace = [](const featsel::SearchTrace& trace, double p,
                                int b) -> std::optional<std::string> {
        const auto f = static_cast<std::size_t>(trace.n_features);
        const auto max_steps = static_cast<int>(std::floor(p * static_cast<double>(f)));
        const std::size_t budget = 1 + static_cast<std::size_t>(max_steps) * b * f;
        if (trace.descent_steps() > max_steps)
            return "steps " + std::to_string(trace.descent_steps()) + " > " +
                   std::to_string(max_steps);
        if (trace.n_eval_calls > budget)
            return "evaluations " + std::to_string(trace.n_eval_calls) + " > " +
                   std::to_string(budget);
        return std::nullopt;
    };

    // Heavy ties at |F| = 35 exercise the pruning cap (bound 3676).
    const featsel::Evaluator ties = [](const featsel::FeatureMask& mask) {
        metrics::EvalResult r;
        r.mae = 0.01 * static_cast<double>(splitmix64(mask.bits()) % 3);
        r.n_test = 20;
        r.cost = r.mae;
        return r;
    };
    featsel::SearchConfig config;
    config.seed = 12;
    const featsel::SearchTrace tie_trace = featsel::hill_climb(ties, 35, config);
    if (const auto err = check_trace(tie_trace, 1.0, 3))
        return {Status::fail, "|F|=35 tie-heavy search: " + *err};
    if (tie_trace.n_eval_calls > 3676)
        return {Status::fail, "|F|=35 evaluations exceed 3676"};

    // A real evaluator (3-NN, level 9) on the synthetic stand-in.
    const data::Dataset ds = synthetic_standin();
    harness::RunConfig run;
    run.seed = 5;
    const featsel::SearchTrace knn_trace =
        harness::run_featsel_cell(ds, run, regress::knn(3), 9);
    if (const auto err = check_trace(knn_trace, 1.0, 3))
        return {Status::fail, "3-NN level-9 search: " + *err};

    // Fractional p still obeys floor(p * |F|).
    config.p = 0.4;
    const featsel::SearchTrace frac = featsel::hill_climb(ties, 20, config);
    if (const auto err = check_trace(frac, 0.4, 3)) return {Status::fail, "p=0.4 search: " + *err};

    return {Status::pass,
            "steps <= p|F| and evaluations <= 1 + p|F|*b|F| on every trace (35-feature bound 3676: " +
                std::to_string(tie_trace.n_eval_calls) + " used)"};
}

// ---- criterion 8: feature selection never hurts ----------------------------

Outcome criterion_improvement(Context& ctx) {
    data::Dataset ds;
    std::string source = "synthetic stand-in (real CSV not available)";
    if (const auto real = ctx.real_csv()) {
        ds = data::load_csv(*real);
        source = "real dataset " + real->filename().string();
    } else {
        ds = synthetic_standin();
    }

    const auto t0 = std::chrono::steady_clock::now();
    testutil::TempDir tmp("naap-acceptance");
    harness::RunConfig cfg;
    cfg.dataset_path = source;
    cfg.out_dir = tmp.path();
    cfg.seed = 7;
    cfg.jobs = ctx.jobs;
    cfg.levels = {0, 3, 6, 9};

    const harness::RunReport off = harness::run_baseline(ds, cfg);
    cfg.featsel_on = true;
    const harness::RunReport on = harness::run_baseline(ds, cfg);

    int cells = 0;
    for (const harness::ReportRow& row : on.rows) {
        if (row.placeholder) continue;
        const auto counterpart = std::find_if(
            off.rows.begin(), off.rows.end(), [&](const harness::ReportRow& r) {
                return !r.placeholder && r.algorithm == row.algorithm && r.level == row.level;
            });
        if (counterpart == off.rows.end())
            return {Status::fail, "missing featsel-off counterpart for " + row.algorithm};
        if (row.result.cost > counterpart->result.cost) {
            char buf[160];
            std::snprintf(buf, sizeof(buf), "%s @ level %d: on-cost %.6g > off-cost %.6g",
                          row.algorithm.c_str(), row.level, row.result.cost,
                          counterpart->result.cost);
            return {Status::fail, buf};
        }
        ++cells;
    }
    const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
    return {Status::pass, "featsel-on cost <= featsel-off cost in all " + std::to_string(cells) +
                              " cells on " + source + " (" + std::to_string(seconds) + " s, " +
                              std::to_string(ctx.jobs) + " jobs)"};
}

// ---- criterion 9: ballpark reproduction on the real data -------------------

Outcome criterion_ballpark(Context& ctx) {
    const auto real = ctx.real_csv();
    if (!real)
        return {Status::skip,
                "requires the real NAAP-440e CSV; set NAAP440E_CSV or place data/naap-440e.csv "
                "(unavailable in this environment: github.com is unreachable)"};
    const data::Dataset ds = data::load_csv(*real);
    const data::Split split = harness::make_paper_split(ds, data::SplitKind::uniform);

    // 3-NN, 9 epochs, all features.
    const auto fm9 = data::feature_matrix(ds, 9);
    regress::RegressorSpec knn = regress::knn(3);
    knn.seed = 7;
    const auto model = regress::fit(knn, data::take_rows(fm9.X, split.train_idx),
                                    data::take_rows(fm9.y, split.train_idx));
    const Eigen::VectorXd pred = model->predict(data::take_rows(fm9.X, split.test_idx));
    const Eigen::VectorXd y_test = data::take_rows(fm9.y, split.test_idx);
    const metrics::EvalResult knn_result = metrics::evaluate(to_span(pred), to_span(y_test));
    if (knn_result.mae < 0.004 || knn_result.mae > 0.016)
        return {Status::fail, "3-NN level-9 MAE " + std::to_string(knn_result.mae) +
                                  " outside [0.004, 0.016]"};
    if (knn_result.monotonicity < 0.90)
        return {Status::fail,
                "3-NN level-9 monotonicity " + std::to_string(knn_result.monotonicity) + " < 0.90"};

    // Gradient boosting N=200, 3 epochs, with feature selection.
    harness::RunConfig cfg;
    cfg.seed = 7;
    cfg.jobs = ctx.jobs;
    const featsel::SearchTrace trace =
        harness::run_featsel_cell(ds, cfg, regress::gradient_boosting(200), 3);
    if (trace.best.monotonicity < 0.96)
        return {Status::fail, "GB(200) level-3 featsel monotonicity " +
                                  std::to_string(trace.best.monotonicity) + " < 0.96"};

    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "3-NN L9: MAE %.4f in [0.004,0.016], monotonicity %.3f >= 0.90; GB200 L3 "
                  "featsel monotonicity %.3f >= 0.96",
                  knn_result.mae, knn_result.monotonicity, trace.best.monotonicity);
    return {Status::pass, buf};
}

// ---- criterion 10: CLI determinism -----------------------------------------

Outcome criterion_determinism(Context& ctx) {
    if (ctx.cli.empty()) return {Status::fail, "--cli <path to naap binary> is required"};
    testutil::TempDir tmp("naap-determinism");
    const std::string csv = (tmp / "synth.csv").string();
    const auto shell = [&](const std::string& args) {
        const std::string cmd = "\"" + ctx.cli + "\" " + args + " >/dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) && WEXITSTATUS(status) == 0;
    };
    if (!shell("synth --out \"" + csv + "\" --samples 440 --seed 3"))
        return {Status::fail, "synth invocation failed"};

    const auto run = [&](const std::string& name, int jobs) {
        const std::string out = (tmp / name).string();
        return shell("baseline --dataset \"" + csv + "\" --out \"" + out + "\" --seed 7 --jobs " +
                     std::to_string(jobs))
                   ? out
                   : std::string{};
    };
    const std::string r1 = run("r1", 1);
    const std::string r2 = run("r2", 8);
    const std::string r3 = run("r3", 1);
    if (r1.empty() || r2.empty() || r3.empty())
        return {Status::fail, "baseline invocation failed"};

    for (const char* file : {"report.csv", "report.json", "report.md", "manifest.json"}) {
        const std::string a = testutil::read_file(fs::path(r1) / file);
        if (a != testutil::read_file(fs::path(r2) / file))
            return {Status::fail, std::string(file) + " differs between --jobs 1 and --jobs 8"};
        if (a != testutil::read_file(fs::path(r3) / file))
            return {Status::fail, std::string(file) + " differs between repeated runs"};
    }
    return {Status::pass, "baseline --seed 7 byte-identical across repeats and --jobs 1 vs 8"};
}

struct Criterion {
    int number;
    const char* summary;
    std::function<Outcome(Context&)> run;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"NAAP-440e acceptance suite"};
    int criterion = 0;  // 0 = all
    Context ctx;
    ctx.jobs = std::max(1u, std::thread::hardware_concurrency());
    app.add_option("--criterion", criterion, "Run a single criterion (1-10)")
        ->check(CLI::Range(0, 10));
    app.add_option("--cli", ctx.cli, "Path to the naap binary (criterion 10)");
    app.add_option("--data-dir", ctx.data_dir, "Directory that may hold naap-440e.csv");
    app.add_option("--dataset", ctx.dataset_flag, "Real NAAP-440e CSV (criteria 1, 8, 9)");
    app.add_option("--jobs", ctx.jobs, "Worker threads for the grid runs");
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> criteria = {
        {1, "split cardinalities", criterion_splits},
        {2, "published-table arithmetic", criterion_table_consistency},
        {3, "violation-counter oracle equivalence", criterion_counter_oracle},
        {4, "activation regression exact recovery", criterion_activation_recovery},
        {5, "extrapolation dichotomy", criterion_extrapolation_dichotomy},
        {6, "hill climb vs exhaustive oracle", criterion_hill_climb_oracle},
        {7, "search budget invariants", criterion_budgets},
        {8, "feature-selection improvement property", criterion_improvement},
        {9, "ballpark reproduction on the real data", criterion_ballpark},
        {10, "report determinism", criterion_determinism},
    };

    bool any_fail = false, any_skip = false;
    for (const Criterion& c : criteria) {
        if (criterion != 0 && c.number != criterion) continue;
        Outcome outcome;
        try {
            outcome = c.run(ctx);
        } catch (const std::exception& e) {
            outcome = {Status::fail, std::string("exception: ") + e.what()};
        }
        const char* tag = outcome.status == Status::pass ? "PASS"
                          : outcome.status == Status::skip ? "SKIP"
                                                           : "FAIL";
        std::cout << "criterion " << c.number << " (" << c.summary << "): " << tag << " — "
                  << outcome.detail << "\n";
        any_fail = any_fail || outcome.status == Status::fail;
        any_skip = any_skip || outcome.status == Status::skip;
    }
    if (any_fail) return 1;
    if (criterion != 0 && any_skip) return 77;
    return 0;
}
