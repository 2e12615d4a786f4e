#include <doctest.h>

#include <Eigen/Dense>
#include <bit>
#include <cmath>

#include "naap/dataset.hpp"
#include "naap/featsel.hpp"
#include "naap/regressors.hpp"
#include "naap/rng.hpp"
#include "oracles.hpp"

using namespace naap;
using featsel::FeatureMask;
using featsel::SearchConfig;
using featsel::SearchTrace;

namespace {

metrics::EvalResult result_with_cost(double cost) {
    metrics::EvalResult r;
    r.mae = cost;
    r.n_test = 20;
    r.cost = cost;
    return r;
}

/// Deterministic pseudo-random cost per mask, no ML involved.
featsel::Evaluator hashed_evaluator(std::uint64_t salt) {
    return [salt](const FeatureMask& mask) {
        const double u = static_cast<double>(splitmix64(mask.bits() ^ salt) >> 11) * 0x1.0p-53;
        return result_with_cost(0.01 + 0.1 * u);
    };
}

/// Few distinct costs, so many masks tie and pruning kicks in.
featsel::Evaluator tie_heavy_evaluator() {
    return [](const FeatureMask& mask) {
        return result_with_cost(0.01 * static_cast<double>(splitmix64(mask.bits()) % 3));
    };
}

struct Planted {
    data::Dataset dataset;
    data::Split split;
    Eigen::MatrixXd x_train, x_test;
    Eigen::VectorXd y_train, y_test;
};

Planted planted_problem(std::uint64_t seed) {
    data::SyntheticSpec spec;
    spec.n_samples = 220;
    spec.n_informative = 3;
    spec.n_distractor = 5;
    spec.noise_sd = 0.02;
    spec.seed = seed;
    Planted p;
    p.dataset = data::generate_synthetic(spec);
    p.split = data::uniform_split(data::bin_by_accuracy(p.dataset, 20));
    const auto fm = data::feature_matrix(p.dataset, 0);
    p.x_train = data::take_rows(fm.X, p.split.train_idx);
    p.x_test = data::take_rows(fm.X, p.split.test_idx);
    p.y_train = data::take_rows(fm.y, p.split.train_idx);
    p.y_test = data::take_rows(fm.y, p.split.test_idx);
    return p;
}

featsel::Evaluator linear_evaluator(const Planted& p, std::uint64_t seed) {
    return [&p, seed](const FeatureMask& mask) {
        Eigen::MatrixXd xtr(p.x_train.rows(), mask.count());
        Eigen::MatrixXd xte(p.x_test.rows(), mask.count());
        Eigen::Index c = 0;
        for (int f = 0; f < mask.size(); ++f) {
            if (!mask.test(f)) continue;
            xtr.col(c) = p.x_train.col(f);
            xte.col(c) = p.x_test.col(f);
            ++c;
        }
        regress::RegressorSpec spec = regress::linear();
        spec.seed = seed;
        const auto model = regress::fit(spec, xtr, p.y_train);
        const Eigen::VectorXd pred = model->predict(xte);
        return metrics::evaluate({pred.data(), static_cast<std::size_t>(pred.size())},
                                 {p.y_test.data(), static_cast<std::size_t>(p.y_test.size())});
    };
}

}  // namespace

TEST_SUITE("featsel") {

TEST_CASE("feature masks") {
    CHECK(FeatureMask::full(3).to_string() == "111");
    CHECK(FeatureMask::from_string("1101").bits() == 0b1011u);
    CHECK(FeatureMask::from_string("1101").count() == 3);
    CHECK(FeatureMask(4, 0b1011).to_string() == "1101");
    CHECK_THROWS_AS(FeatureMask(3, 0), std::invalid_argument);
    CHECK_THROWS_AS(FeatureMask(3, 0b1000), std::invalid_argument);
    CHECK_THROWS_AS(FeatureMask::from_string("10x"), std::invalid_argument);
    CHECK_THROWS_AS(FeatureMask(1, 1).with_flipped(0), std::invalid_argument);
}

TEST_CASE("neighbors flip one bit and skip the empty mask") {
    const auto to_strings = [](const std::vector<FeatureMask>& masks) {
        std::vector<std::string> out;
        for (const FeatureMask& m : masks) out.push_back(m.to_string());
        return out;
    };
    CHECK(to_strings(featsel::neighbors(FeatureMask::full(3))) ==
          std::vector<std::string>{"011", "101", "110"});
    CHECK(to_strings(featsel::neighbors(FeatureMask::from_string("100"))) ==
          std::vector<std::string>{"110", "101"});
    CHECK(featsel::neighbors(FeatureMask::full(35)).size() == 35);
}

TEST_CASE("a single feature needs exactly one evaluation") {
    const SearchTrace trace = hill_climb(hashed_evaluator(1), 1, SearchConfig{});
    CHECK(trace.n_eval_calls == 1);
    CHECK(trace.evaluations.size() == 1);
    CHECK(FeatureMask(1, trace.best_mask).to_string() == "1");
}

TEST_CASE("the full mask bounds the best cost from above") {
    for (std::uint64_t salt = 0; salt < 12; ++salt) {
        const featsel::Evaluator eval = hashed_evaluator(salt);
        SearchConfig config;
        config.seed = salt;
        const SearchTrace trace = hill_climb(eval, 8, config);
        CHECK(trace.best.cost <= eval(FeatureMask::full(8)).cost);
    }
}

TEST_CASE("budgets hold even under heavy ties") {
    SearchConfig config;
    config.seed = 3;
    const SearchTrace trace = hill_climb(tie_heavy_evaluator(), 35, config);
    CHECK(trace.descent_steps() <= 35);
    CHECK(trace.n_eval_calls <= 1 + 35 * 3 * 35);
    bool pruned_somewhere = false;
    for (const auto& step : trace.steps) pruned_somewhere = pruned_somewhere || step.pruned > 0;
    CHECK(pruned_somewhere);
}

TEST_CASE("dedup never evaluates a mask twice; disabling it may") {
    SearchConfig config;
    config.seed = 9;
    const SearchTrace dedup = hill_climb(tie_heavy_evaluator(), 8, config);
    CHECK(dedup.n_eval_calls == dedup.evaluations.size());

    config.dedup = false;
    const SearchTrace raw = hill_climb(tie_heavy_evaluator(), 8, config);
    CHECK(raw.n_eval_calls >= raw.evaluations.size());
}

TEST_CASE("identical configs give identical traces; the seed steers pruning") {
    SearchConfig config;
    config.seed = 21;
    const SearchTrace a = hill_climb(tie_heavy_evaluator(), 12, config);
    const SearchTrace b = hill_climb(tie_heavy_evaluator(), 12, config);
    CHECK(a.evaluations == b.evaluations);
    CHECK(a.best_mask == b.best_mask);
    REQUIRE(a.steps.size() == b.steps.size());
    for (std::size_t i = 0; i < a.steps.size(); ++i) {
        CHECK(a.steps[i].evaluated == b.steps[i].evaluated);
        CHECK(a.steps[i].pruned == b.steps[i].pruned);
    }

    config.seed = 22;
    const SearchTrace c = hill_climb(tie_heavy_evaluator(), 12, config);
    bool differs = a.evaluations.size() != c.evaluations.size();
    if (!differs)
        differs = !std::equal(a.evaluations.begin(), a.evaluations.end(), c.evaluations.begin(),
                              [](const auto& x, const auto& y) { return x.first == y.first; });
    CHECK(differs);
}

TEST_CASE("the best entry is the minimum of the evaluations map") {
    SearchConfig config;
    config.seed = 5;
    const SearchTrace trace = hill_climb(hashed_evaluator(17), 10, config);
    double min_cost = std::numeric_limits<double>::infinity();
    for (const auto& [bits, result] : trace.evaluations) min_cost = std::min(min_cost, result.cost);
    CHECK(trace.best.cost == min_cost);
    CHECK(trace.evaluations.at(trace.best_mask).cost == min_cost);
}

TEST_CASE("p scales the descent-step budget") {
    SearchConfig config;
    config.p = 0.5;
    const SearchTrace trace = hill_climb(hashed_evaluator(2), 10, config);
    CHECK(trace.descent_steps() <= 5);
    CHECK_THROWS_AS(hill_climb(hashed_evaluator(2), 10, SearchConfig{.p = 0.0}),
                    std::invalid_argument);
}

TEST_CASE("evaluator failures abort with the partial trace attached") {
    int calls = 0;
    const featsel::Evaluator flaky = [&calls](const FeatureMask& mask) {
        if (++calls > 4) throw std::runtime_error("boom");
        return result_with_cost(0.01);
    };
    try {
        hill_climb(flaky, 8, SearchConfig{});
        FAIL("expected SearchAborted");
    } catch (const featsel::SearchAborted& e) {
        CHECK(e.partial.n_eval_calls == 4);
        CHECK(e.partial.evaluations.size() == 4);
    }
}

TEST_CASE("exhaustive search") {
    SUBCASE("two features need three evaluations") {
        int calls = 0;
        const featsel::Evaluator counting = [&calls](const FeatureMask&) {
            ++calls;
            return result_with_cost(0.5);
        };
        const auto r = featsel::exhaustive_search(counting, 2);
        CHECK(calls == 3);
        CHECK(r.table.size() == 4);
    }
    SUBCASE("constant costs tie-break to the lowest single feature") {
        const featsel::Evaluator constant = [](const FeatureMask&) { return result_with_cost(0.5); };
        const auto r = featsel::exhaustive_search(constant, 3);
        CHECK(r.best.to_string() == "100");
    }
    SUBCASE("agrees with an independent double loop") {
        for (std::uint64_t salt : {1ULL, 2ULL, 3ULL, 4ULL, 5ULL}) {
            const featsel::Evaluator eval = hashed_evaluator(salt);
            const auto fast = featsel::exhaustive_search(eval, 9);
            const auto slow = oracle::exhaustive_bruteforce(
                [&](std::uint64_t bits) { return eval(FeatureMask(9, bits)).cost; }, 9);
            CHECK(fast.best.bits() == slow.mask);
            CHECK(fast.best_result.cost == slow.cost);
        }
    }
    SUBCASE("feature counts above 16 are rejected") {
        CHECK_THROWS_AS(featsel::exhaustive_search(hashed_evaluator(0), 17),
                        std::invalid_argument);
    }
}

TEST_CASE("hill climbing usually finds the planted optimum") {
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Planted p = planted_problem(1000 + seed);
        const featsel::Evaluator eval = linear_evaluator(p, seed);
        const auto exhaustive = featsel::exhaustive_search(eval, 8);
        SearchConfig config;
        config.seed = seed;
        const SearchTrace trace = hill_climb(eval, 8, config);
        CHECK(trace.best.cost >= exhaustive.best_result.cost - 1e-15);
        if (trace.best.cost <= exhaustive.best_result.cost + 1e-12) ++hits;
    }
    CHECK(hits >= 4);
}

TEST_CASE("feature importance rates") {
    SUBCASE("a single evaluated mask is its own indicator") {
        SearchTrace trace;
        trace.n_features = 4;
        trace.evaluations[FeatureMask::from_string("1010").bits()] = result_with_cost(0.1);
        trace.best_mask = FeatureMask::from_string("1010").bits();
        const auto rates = featsel::feature_importance({&trace, 1}, 1.0);
        CHECK(rates == std::vector<double>{1.0, 0.0, 1.0, 0.0});
    }
    SUBCASE("a feature in every kept mask rates 1.0") {
        SearchTrace trace;
        trace.n_features = 3;
        trace.evaluations[FeatureMask::from_string("100").bits()] = result_with_cost(0.1);
        trace.evaluations[FeatureMask::from_string("110").bits()] = result_with_cost(0.2);
        trace.evaluations[FeatureMask::from_string("101").bits()] = result_with_cost(0.3);
        const auto rates = featsel::feature_importance({&trace, 1}, 1.0);
        CHECK(rates[0] == 1.0);
        CHECK(rates[1] == doctest::Approx(1.0 / 3.0));
    }
    SUBCASE("planted informative features outrank the distractors") {
        const Planted p = planted_problem(42);
        SearchConfig config;
        config.seed = 42;
        const SearchTrace trace = hill_climb(linear_evaluator(p, 42), 8, config);
        const auto rates = featsel::feature_importance({&trace, 1});
        double min_informative = 1.0, max_distractor = 0.0;
        for (int f = 0; f < 8; ++f) {
            if (f < 3) min_informative = std::min(min_informative, rates[static_cast<std::size_t>(f)]);
            else max_distractor = std::max(max_distractor, rates[static_cast<std::size_t>(f)]);
        }
        CHECK(min_informative > max_distractor);
    }
    SUBCASE("input validation") {
        CHECK_THROWS_AS(featsel::feature_importance({}, 0.08), std::invalid_argument);
        SearchTrace trace;
        trace.n_features = 2;
        CHECK_THROWS_AS(featsel::feature_importance({&trace, 1}, 0.0), std::invalid_argument);
        CHECK_THROWS_AS(featsel::feature_importance({&trace, 1}, 0.08), ValidationError);
    }
}

TEST_CASE("trace JSON round trip") {
    SearchConfig config;
    config.seed = 8;
    SearchTrace trace = hill_climb(hashed_evaluator(8), 6, config);
    trace.algorithm = "3-NN";
    trace.level = 3;
    const SearchTrace back = SearchTrace::from_json(trace.to_json());
    CHECK(back.algorithm == trace.algorithm);
    CHECK(back.level == trace.level);
    CHECK(back.n_features == trace.n_features);
    CHECK(back.best_mask == trace.best_mask);
    CHECK(back.best.cost == trace.best.cost);
    CHECK(back.evaluations.size() == trace.evaluations.size());
    for (const auto& [bits, result] : trace.evaluations) {
        CHECK(back.evaluations.at(bits).cost == result.cost);
        CHECK(back.evaluations.at(bits).violations == result.violations);
    }
    REQUIRE(back.steps.size() == trace.steps.size());
    CHECK(back.steps.back().evaluated == trace.steps.back().evaluated);
    CHECK(back.n_eval_calls == trace.n_eval_calls);
    CHECK_THROWS_AS(SearchTrace::from_json("{"), ParseError);
}

}  // TEST_SUITE
