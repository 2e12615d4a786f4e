#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace naap::metrics {

/// Feature-selection objective. `sqrt_rounded` (round(MAE,3) * sqrt(v)) is
/// the default; the others exist for the cost-function comparison.
enum class CostVariant { product, log, sqrt, sqrt_rounded };

CostVariant cost_variant_from_string(std::string_view name);
std::string to_string(CostVariant variant);

struct EvalResult {
    double mae = 0.0;
    std::int64_t violations = 0;
    int n_test = 0;
    double monotonicity = 1.0;
    double cost = 0.0;

    bool operator==(const EvalResult&) const = default;
};

/// Mean absolute error. Throws std::invalid_argument on length mismatch or
/// empty input.
double mae(std::span<const double> pred, std::span<const double> gt);

/// Number of index pairs (i < j) whose predicted ordering contradicts the
/// ground-truth ordering: (gt_i - gt_j) * (pred_i - pred_j) < 0. Ties on
/// either side are not violations. O(N log N) via inversion counting; equal
/// to the brute-force double loop by construction.
std::int64_t count_violations(std::span<const double> pred, std::span<const double> gt);

/// 1 - violations / C(n_test, 2).
double monotonicity_score(std::int64_t violations, int n_test);

/// Round half away from zero at 3 decimal places.
double round3(double x);

/// Cost of (MAE m, violation rate v) under the given variant.
/// The log variant is a domain error at v = 0.
double cost(double mae_value, double violation_rate, CostVariant variant);

EvalResult evaluate(std::span<const double> pred, std::span<const double> gt,
                    CostVariant variant = CostVariant::sqrt_rounded);

/// "MAE / Monotonicity / #Violations" cell, e.g. "0.004 / 0.983 / 13".
std::string format_row(const EvalResult& r);

}  // namespace naap::metrics
