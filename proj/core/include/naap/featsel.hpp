#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "naap/error.hpp"
#include "naap/metrics.hpp"

namespace naap::featsel {

/// Nonempty subset of a feature set of up to 63 features. Bit i = feature i.
class FeatureMask {
public:
    FeatureMask(int n_features, std::uint64_t bits);
    static FeatureMask full(int n_features);
    /// Parses "1101..."-style text, feature 0 first.
    static FeatureMask from_string(std::string_view text);

    int size() const { return n_features_; }
    std::uint64_t bits() const { return bits_; }
    bool test(int feature) const { return (bits_ >> feature) & 1ULL; }
    int count() const;
    /// Throws std::invalid_argument when flipping the last set bit.
    FeatureMask with_flipped(int feature) const;
    std::string to_string() const;

    bool operator==(const FeatureMask&) const = default;

private:
    int n_features_ = 0;
    std::uint64_t bits_ = 0;
};

struct SearchConfig {
    double p = 1.0;  // descent-step budget multiplier: steps = floor(p * |F|)
    int b = 3;       // branching cap multiplier: at most b * |F| evaluations per step
    metrics::CostVariant cost_variant = metrics::CostVariant::sqrt_rounded;
    std::uint64_t seed = 0;
    bool dedup = true;  // skip masks that were already evaluated
};

using Evaluator = std::function<metrics::EvalResult(const FeatureMask&)>;

struct StepLog {
    int step = 0;  // 0 is the root expansion; descent steps count from 1
    std::vector<std::uint64_t> evaluated;
    std::size_t pruned = 0;  // entries returned to the queue this step
};

struct SearchTrace {
    int n_features = 0;
    std::map<std::uint64_t, metrics::EvalResult> evaluations;
    std::vector<StepLog> steps;
    std::uint64_t best_mask = 0;
    metrics::EvalResult best;
    std::size_t n_eval_calls = 0;

    // Run coordinates, filled by the harness for export/pooling.
    std::string algorithm;
    int level = -1;
    std::uint64_t seed = 0;
    metrics::CostVariant cost_variant = metrics::CostVariant::sqrt_rounded;

    int descent_steps() const;
    std::string to_json() const;
    static SearchTrace from_json(std::string_view text);
};

/// Raised when the evaluator throws; carries whatever was searched so far.
class SearchAborted : public Error {
public:
    SearchAborted(const std::string& what, SearchTrace partial_trace)
        : Error(what), partial(std::move(partial_trace)) {}
    SearchTrace partial;
};

/// All masks at Hamming distance 1, the empty mask excluded, ordered by
/// ascending flipped-bit index.
std::vector<FeatureMask> neighbors(const FeatureMask& mask);

/// Best-first hill climbing over feature subsets. Starts from the full mask,
/// dequeues every entry sharing the minimum priority per descent step, prunes
/// the step down to b*|F| uniformly sampled masks (the rest return to the
/// queue unchanged), evaluates survivors, and enqueues their neighbors at the
/// survivor's cost. Stops after floor(p*|F|) descent steps or queue
/// exhaustion. The root expansion consumes one evaluation but no step.
SearchTrace hill_climb(const Evaluator& evaluator, int n_features, const SearchConfig& config);

struct ExhaustiveResult {
    FeatureMask best;
    metrics::EvalResult best_result;
    /// Indexed by mask bits; entry 0 is unused.
    std::vector<metrics::EvalResult> table;
};

/// Evaluates every nonempty mask (n_features <= 16). Ties break toward the
/// smaller popcount, then the smaller mask value (lowest feature indices).
ExhaustiveResult exhaustive_search(const Evaluator& evaluator, int n_features);

/// Pools every evaluated (mask, cost) pair across the traces, keeps the
/// ceil(top_fraction * pool) lowest-cost masks, and returns per-feature
/// selection rates over the kept masks.
std::vector<double> feature_importance(std::span<const SearchTrace> traces,
                                       double top_fraction = 0.08);

}  // namespace naap::featsel
