#include "naap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace naap::metrics {

namespace {

void check_pair(std::span<const double> pred, std::span<const double> gt, std::size_t min_len) {
    if (pred.size() != gt.size())
        throw std::invalid_argument("prediction/ground-truth length mismatch");
    if (pred.size() < min_len)
        throw std::invalid_argument("too few samples");
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (std::isnan(pred[i]) || std::isnan(gt[i]))
            throw std::invalid_argument("NaN at index " + std::to_string(i));
}

// Counts pairs a < b (by position) with v[a] > v[b], strictly.
std::int64_t merge_count(std::vector<double>& v, std::vector<double>& buf,
                         std::size_t lo, std::size_t hi) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::int64_t inversions = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (v[j] < v[i]) {
            inversions += static_cast<std::int64_t>(mid - i);
            buf[k++] = v[j++];
        } else {
            buf[k++] = v[i++];
        }
    }
    while (i < mid) buf[k++] = v[i++];
    while (j < hi) buf[k++] = v[j++];
    std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo),
              buf.begin() + static_cast<std::ptrdiff_t>(hi),
              v.begin() + static_cast<std::ptrdiff_t>(lo));
    return inversions;
}

}  // namespace

CostVariant cost_variant_from_string(std::string_view name) {
    if (name == "product") return CostVariant::product;
    if (name == "log") return CostVariant::log;
    if (name == "sqrt") return CostVariant::sqrt;
    if (name == "sqrt_rounded") return CostVariant::sqrt_rounded;
    throw std::invalid_argument("unknown cost variant: " + std::string(name));
}

std::string to_string(CostVariant variant) {
    switch (variant) {
        case CostVariant::product: return "product";
        case CostVariant::log: return "log";
        case CostVariant::sqrt: return "sqrt";
        case CostVariant::sqrt_rounded: return "sqrt_rounded";
    }
    return "?";
}

double mae(std::span<const double> pred, std::span<const double> gt) {
    check_pair(pred, gt, 1);
    double total = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) total += std::abs(pred[i] - gt[i]);
    return total / static_cast<double>(pred.size());
}

std::int64_t count_violations(std::span<const double> pred, std::span<const double> gt) {
    check_pair(pred, gt, 2);
    const std::size_t n = pred.size();

    // Sort positions by (gt asc, pred asc). Equal-gt pairs end up pred-ascending
    // and equal-pred pairs are never strict inversions, so counting strict
    // inversions of the pred sequence counts exactly the contradicting pairs.
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (gt[a] != gt[b]) return gt[a] < gt[b];
        return pred[a] < pred[b];
    });

    std::vector<double> seq(n), buf(n);
    for (std::size_t r = 0; r < n; ++r) seq[r] = pred[idx[r]];
    return merge_count(seq, buf, 0, n);
}

double monotonicity_score(std::int64_t violations, int n_test) {
    if (n_test < 2) throw std::invalid_argument("monotonicity needs at least two test samples");
    const auto pairs = static_cast<std::int64_t>(n_test) * (n_test - 1) / 2;
    if (violations < 0 || violations > pairs)
        throw std::invalid_argument("violation count out of range");
    return 1.0 - static_cast<double>(violations) / static_cast<double>(pairs);
}

double round3(double x) { return std::round(x * 1000.0) / 1000.0; }

double cost(double mae_value, double violation_rate, CostVariant variant) {
    if (mae_value < 0.0) throw std::invalid_argument("MAE must be nonnegative");
    if (violation_rate < 0.0 || violation_rate > 1.0)
        throw std::invalid_argument("violation rate must lie in [0, 1]");
    switch (variant) {
        case CostVariant::product:
            return mae_value * violation_rate;
        case CostVariant::log:
            if (violation_rate == 0.0)
                throw std::domain_error("log cost is undefined at violation rate 0");
            return mae_value * std::log(violation_rate);
        case CostVariant::sqrt:
            return mae_value * std::sqrt(violation_rate);
        case CostVariant::sqrt_rounded:
            return round3(mae_value) * std::sqrt(violation_rate);
    }
    throw std::invalid_argument("unknown cost variant");
}

EvalResult evaluate(std::span<const double> pred, std::span<const double> gt,
                    CostVariant variant) {
    EvalResult r;
    r.mae = mae(pred, gt);
    r.violations = count_violations(pred, gt);
    r.n_test = static_cast<int>(pred.size());
    r.monotonicity = monotonicity_score(r.violations, r.n_test);
    const auto pairs = static_cast<std::int64_t>(r.n_test) * (r.n_test - 1) / 2;
    r.cost = cost(r.mae, static_cast<double>(r.violations) / static_cast<double>(pairs), variant);
    return r;
}

std::string format_row(const EvalResult& r) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f / %.3f / %lld", r.mae, r.monotonicity,
                  static_cast<long long>(r.violations));
    return buf;
}

}  // namespace naap::metrics
