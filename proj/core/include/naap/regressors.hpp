#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace naap::regress {

enum class Family { knn, linear, decision_tree, random_forest, gradient_boosting, adaboost_r2 };

Family family_from_string(std::string_view name);
std::string to_string(Family family);

/// Target activation of the linear family. pow_D means f(x) = (x+1)^D.
/// Every variant has a closed-form inverse applied to the targets before the
/// least-squares solve; predictions apply f forward.
enum class Activation { identity, pow_half, pow_quarter, pow_two, exp, log, sigmoid };

Activation activation_from_string(std::string_view name);
std::string to_string(Activation activation);

/// Clamp margin for inverse-domain boundaries (logit near 0/1, ln near 0).
inline constexpr double kClampEps = 1e-6;

/// f(x). Out-of-domain bases are clamped to the domain edge (fractional
/// powers below -1, logarithms at 0), so extrapolated predictions stay finite
/// and deterministic.
double activation_forward(Activation activation, double x);

/// f^-1(y) without clamping; the caller owns domain handling.
double activation_inverse(Activation activation, double y);

/// f^-1 applied elementwise after the documented clamping (logit: [eps,1-eps];
/// ln: [eps,inf); fractional powers: [0,inf)). Non-finite targets raise a
/// ValidationError naming the index. Clamped counts are reported on stderr.
Eigen::VectorXd transform_targets(Activation activation, const Eigen::VectorXd& y);

struct RegressorSpec {
    Family family = Family::linear;
    int k = 3;                           // knn
    Activation activation = Activation::identity;  // linear
    int n_estimators = 100;              // ensembles
    int max_depth = 0;                   // 0 = unlimited
    int min_samples_split = 2;
    double learning_rate = 0.1;          // gradient boosting
    bool standardize = true;             // knn + linear preprocessing
    std::uint64_t seed = 0;

    /// Display label, e.g. "3-NN", "Linear Regression (D=0.25)",
    /// "Gradient Boosting (N=200)".
    std::string label() const;

    std::string to_json() const;  // {"family": ..., "params": {...}, "seed": ...}
    static RegressorSpec from_json(std::string_view text);
};

RegressorSpec knn(int k);
RegressorSpec linear(Activation activation = Activation::identity);
RegressorSpec decision_tree();
RegressorSpec random_forest(int n_estimators);
RegressorSpec gradient_boosting(int n_estimators);
RegressorSpec adaboost_r2(int n_estimators);

/// The 25-spec evaluation grid: 1/3/5/7/9-NN, the 7 linear variants, the
/// decision tree, and gradient boosting / AdaBoost / random forest with
/// N in {25, 50, 100, 200}. Every spec carries `seed`.
std::vector<RegressorSpec> baseline_grid(std::uint64_t seed = 0);

/// Immutable fitted model; predict is deterministic and thread-safe.
class Model {
public:
    virtual ~Model() = default;
    virtual Eigen::VectorXd predict(const Eigen::MatrixXd& X) const = 0;
    virtual Eigen::Index n_features() const = 0;
};

using ModelPtr = std::unique_ptr<const Model>;

/// Fits a model. Deterministic given (spec, X, y) including the seed. The
/// linear family solves standardized least squares against f^-1(y) via a
/// complete orthogonal decomposition, so rank-deficient feature subsets get
/// the pseudo-solution instead of an error.
ModelPtr fit(const RegressorSpec& spec, const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

}  // namespace naap::regress
