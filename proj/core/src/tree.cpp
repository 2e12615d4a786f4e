#include "tree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace naap::regress::detail {

Presorted::Presorted(const Eigen::MatrixXd& X) {
    const auto n = static_cast<int>(X.rows());
    order.resize(static_cast<std::size_t>(X.cols()));
    for (Eigen::Index f = 0; f < X.cols(); ++f) {
        std::vector<int>& column = order[static_cast<std::size_t>(f)];
        column.resize(static_cast<std::size_t>(n));
        std::iota(column.begin(), column.end(), 0);
        std::sort(column.begin(), column.end(), [&](int a, int b) {
            if (X(a, f) != X(b, f)) return X(a, f) < X(b, f);
            return a < b;
        });
    }
}

namespace {

struct NodeStats {
    long long weight = 0;
    double sum = 0.0;
    double sum_sq = 0.0;
    double sse() const { return weight > 0 ? sum_sq - sum * sum / static_cast<double>(weight) : 0.0; }
    double mean() const { return weight > 0 ? sum / static_cast<double>(weight) : 0.0; }
};

struct Frame {
    int node;
    int lo;  // half-open segment of every per-feature array
    int hi;
    int depth;
    NodeStats stats;
};

}  // namespace

void RegressionTree::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         const TreeConfig& config, const Presorted& presorted,
                         const std::vector<int>& multiplicity) {
    if (X.rows() == 0) throw std::invalid_argument("cannot fit a tree on an empty matrix");
    if (X.rows() != y.size()) throw std::invalid_argument("X/y length mismatch");
    const auto n_features = static_cast<std::size_t>(X.cols());
    if (presorted.order.size() != n_features ||
        (n_features > 0 && presorted.order[0].size() != static_cast<std::size_t>(X.rows())))
        throw std::invalid_argument("presorted index does not match the matrix");

    const auto weight_of = [&](int row) -> int {
        return multiplicity.empty() ? 1 : multiplicity[static_cast<std::size_t>(row)];
    };

    // Per-feature working arrays: rows with nonzero weight, feature-sorted.
    std::vector<std::vector<int>> work(n_features);
    for (std::size_t f = 0; f < n_features; ++f) {
        work[f].reserve(presorted.order[f].size());
        for (int row : presorted.order[f])
            if (weight_of(row) > 0) work[f].push_back(row);
    }
    const int n_active = static_cast<int>(work.empty() ? 0 : work[0].size());
    if (n_active == 0) throw std::invalid_argument("no samples with positive weight");

    NodeStats root_stats;
    for (int row : work[0]) {
        const double w = weight_of(row);
        root_stats.weight += weight_of(row);
        root_stats.sum += w * y(row);
        root_stats.sum_sq += w * y(row) * y(row);
    }

    nodes_.clear();
    nodes_.push_back(Node{});
    std::vector<int> mark(static_cast<std::size_t>(X.rows()), 0);
    std::vector<int> scratch;
    scratch.reserve(static_cast<std::size_t>(n_active));

    std::vector<Frame> stack;
    stack.push_back({0, 0, n_active, 0, root_stats});

    while (!stack.empty()) {
        const Frame frame = stack.back();
        stack.pop_back();
        Node& node = nodes_[static_cast<std::size_t>(frame.node)];
        node.value = frame.stats.mean();

        const bool depth_reached = config.max_depth > 0 && frame.depth >= config.max_depth;
        if (depth_reached || frame.stats.weight < config.min_samples_split) continue;

        // Purity: exact-equality scan keeps the stop rule deterministic.
        {
            const double first = y(work[0][static_cast<std::size_t>(frame.lo)]);
            bool pure = true;
            for (int i = frame.lo + 1; i < frame.hi && pure; ++i)
                pure = y(work[0][static_cast<std::size_t>(i)]) == first;
            if (pure) continue;
        }

        int best_feature = -1;
        double best_threshold = 0.0;
        double best_sse = std::numeric_limits<double>::infinity();

        for (std::size_t f = 0; f < n_features; ++f) {
            const std::vector<int>& rows = work[f];
            NodeStats left;
            for (int i = frame.lo; i + 1 < frame.hi; ++i) {
                const int row = rows[static_cast<std::size_t>(i)];
                const double w = weight_of(row);
                left.weight += weight_of(row);
                left.sum += w * y(row);
                left.sum_sq += w * y(row) * y(row);

                const double value = X(row, static_cast<Eigen::Index>(f));
                const double next = X(rows[static_cast<std::size_t>(i + 1)], static_cast<Eigen::Index>(f));
                if (!(next > value)) continue;

                NodeStats right;
                right.weight = frame.stats.weight - left.weight;
                right.sum = frame.stats.sum - left.sum;
                right.sum_sq = frame.stats.sum_sq - left.sum_sq;
                const double sse = left.sse() + right.sse();
                if (sse < best_sse) {
                    best_sse = sse;
                    best_feature = static_cast<int>(f);
                    best_threshold = value + (next - value) / 2.0;
                }
            }
        }
        if (best_feature < 0) continue;  // all features constant on this node

        // Mark rows going left and compute child stats.
        NodeStats left_stats;
        int left_unique = 0;
        for (int i = frame.lo; i < frame.hi; ++i) {
            const int row = work[0][static_cast<std::size_t>(i)];
            const bool goes_left = X(row, best_feature) <= best_threshold;
            mark[static_cast<std::size_t>(row)] = goes_left ? 1 : 0;
            if (goes_left) {
                const double w = weight_of(row);
                left_stats.weight += weight_of(row);
                left_stats.sum += w * y(row);
                left_stats.sum_sq += w * y(row) * y(row);
                ++left_unique;
            }
        }
        NodeStats right_stats;
        right_stats.weight = frame.stats.weight - left_stats.weight;
        right_stats.sum = frame.stats.sum - left_stats.sum;
        right_stats.sum_sq = frame.stats.sum_sq - left_stats.sum_sq;

        // Stable partition of every feature-sorted segment.
        for (std::size_t f = 0; f < n_features; ++f) {
            std::vector<int>& rows = work[f];
            scratch.clear();
            for (int i = frame.lo; i < frame.hi; ++i)
                if (mark[static_cast<std::size_t>(rows[static_cast<std::size_t>(i)])])
                    scratch.push_back(rows[static_cast<std::size_t>(i)]);
            for (int i = frame.lo; i < frame.hi; ++i)
                if (!mark[static_cast<std::size_t>(rows[static_cast<std::size_t>(i)])])
                    scratch.push_back(rows[static_cast<std::size_t>(i)]);
            std::copy(scratch.begin(), scratch.end(),
                      rows.begin() + static_cast<std::ptrdiff_t>(frame.lo));
        }

        const int mid = frame.lo + left_unique;
        const int left_child = static_cast<int>(nodes_.size());
        nodes_.push_back(Node{});
        const int right_child = static_cast<int>(nodes_.size());
        nodes_.push_back(Node{});

        Node& parent = nodes_[static_cast<std::size_t>(frame.node)];
        parent.feature = best_feature;
        parent.threshold = best_threshold;
        parent.left = left_child;
        parent.right = right_child;

        stack.push_back({right_child, mid, frame.hi, frame.depth + 1, right_stats});
        stack.push_back({left_child, frame.lo, mid, frame.depth + 1, left_stats});
    }
}

double RegressionTree::predict_row(const Eigen::MatrixXd& X, Eigen::Index row) const {
    int node = 0;
    while (nodes_[static_cast<std::size_t>(node)].feature >= 0) {
        const Node& cur = nodes_[static_cast<std::size_t>(node)];
        node = X(row, cur.feature) <= cur.threshold ? cur.left : cur.right;
    }
    return nodes_[static_cast<std::size_t>(node)].value;
}

Eigen::VectorXd RegressionTree::predict(const Eigen::MatrixXd& X) const {
    Eigen::VectorXd out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) = predict_row(X, i);
    return out;
}

}  // namespace naap::regress::detail
