#pragma once

#include <Eigen/Dense>
#include <vector>

namespace naap::regress::detail {

struct TreeConfig {
    int max_depth = 0;  // 0 = unlimited
    int min_samples_split = 2;
};

/// Row indices sorted ascending per feature (ties broken by row index).
/// Built once per matrix and shared: boosting stages and bootstrap replicas
/// reuse the same ordering instead of re-sorting.
struct Presorted {
    explicit Presorted(const Eigen::MatrixXd& X);
    std::vector<std::vector<int>> order;  // [feature][rank] -> row
};

/// Variance-reduction CART regressor. Splits are "value <= threshold" with
/// the threshold at the midpoint between consecutive distinct values; ties in
/// impurity keep the lowest feature index, then the lowest threshold. Sample
/// multiplicities express bootstrap/resampled training sets.
class RegressionTree {
public:
    /// `multiplicity` holds a count per row; empty means all ones.
    void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const TreeConfig& config,
             const Presorted& presorted, const std::vector<int>& multiplicity);

    double predict_row(const Eigen::MatrixXd& X, Eigen::Index row) const;
    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;

private:
    struct Node {
        int feature = -1;  // -1 = leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        double value = 0.0;
    };
    std::vector<Node> nodes_;
};

}  // namespace naap::regress::detail
