#include "naap/regressors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "naap/error.hpp"
#include "naap/rng.hpp"
#include "tree.hpp"

namespace naap::regress {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

Family family_from_string(std::string_view name) {
    if (name == "knn") return Family::knn;
    if (name == "linear") return Family::linear;
    if (name == "decision_tree") return Family::decision_tree;
    if (name == "random_forest") return Family::random_forest;
    if (name == "gradient_boosting") return Family::gradient_boosting;
    if (name == "adaboost_r2") return Family::adaboost_r2;
    throw std::invalid_argument("unknown regressor family: " + std::string(name));
}

std::string to_string(Family family) {
    switch (family) {
        case Family::knn: return "knn";
        case Family::linear: return "linear";
        case Family::decision_tree: return "decision_tree";
        case Family::random_forest: return "random_forest";
        case Family::gradient_boosting: return "gradient_boosting";
        case Family::adaboost_r2: return "adaboost_r2";
    }
    return "?";
}

Activation activation_from_string(std::string_view name) {
    if (name == "identity") return Activation::identity;
    if (name == "pow_half") return Activation::pow_half;
    if (name == "pow_quarter") return Activation::pow_quarter;
    if (name == "pow_two") return Activation::pow_two;
    if (name == "exp") return Activation::exp;
    if (name == "log") return Activation::log;
    if (name == "sigmoid") return Activation::sigmoid;
    throw std::invalid_argument("unknown activation: " + std::string(name));
}

std::string to_string(Activation activation) {
    switch (activation) {
        case Activation::identity: return "identity";
        case Activation::pow_half: return "pow_half";
        case Activation::pow_quarter: return "pow_quarter";
        case Activation::pow_two: return "pow_two";
        case Activation::exp: return "exp";
        case Activation::log: return "log";
        case Activation::sigmoid: return "sigmoid";
    }
    return "?";
}

double activation_forward(Activation activation, double x) {
    switch (activation) {
        case Activation::identity: return x;
        case Activation::pow_half: return std::sqrt(std::max(x + 1.0, 0.0));
        case Activation::pow_quarter: return std::pow(std::max(x + 1.0, 0.0), 0.25);
        case Activation::pow_two: return (x + 1.0) * (x + 1.0);
        case Activation::exp: return std::exp(x);
        case Activation::log: return std::log(std::max(x, kClampEps));
        case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
    }
    return x;
}

double activation_inverse(Activation activation, double y) {
    switch (activation) {
        case Activation::identity: return y;
        case Activation::pow_half: return y * y - 1.0;
        case Activation::pow_quarter: return y * y * y * y - 1.0;
        case Activation::pow_two: return std::sqrt(y) - 1.0;
        case Activation::exp: return std::log(y);
        case Activation::log: return std::exp(y);
        case Activation::sigmoid: return std::log(y / (1.0 - y));
    }
    return y;
}

Eigen::VectorXd transform_targets(Activation activation, const Eigen::VectorXd& y) {
    Eigen::VectorXd out(y.size());
    int clamped = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        double v = y(i);
        if (!std::isfinite(v))
            throw ValidationError("target at index " + std::to_string(i) + " is not finite");
        switch (activation) {
            case Activation::identity:
            case Activation::log:
                break;
            case Activation::pow_half:
            case Activation::pow_quarter:
            case Activation::pow_two:
                if (v < 0.0) { v = 0.0; ++clamped; }
                break;
            case Activation::exp:
                if (v < kClampEps) { v = kClampEps; ++clamped; }
                break;
            case Activation::sigmoid:
                if (v < kClampEps) { v = kClampEps; ++clamped; }
                else if (v > 1.0 - kClampEps) { v = 1.0 - kClampEps; ++clamped; }
                break;
        }
        out(i) = activation_inverse(activation, v);
        if (!std::isfinite(out(i)))
            throw ValidationError("target at index " + std::to_string(i) +
                                  " is outside the invertible domain of " + to_string(activation));
    }
    if (clamped > 0)
        std::cerr << "note: clamped " << clamped << " target(s) into the domain of "
                  << to_string(activation) << "\n";
    return out;
}

std::string RegressorSpec::label() const {
    char buf[64];
    switch (family) {
        case Family::knn:
            std::snprintf(buf, sizeof(buf), "%d-NN", k);
            return buf;
        case Family::linear:
            switch (activation) {
                case Activation::identity: return "Linear Regression";
                case Activation::pow_half: return "Linear Regression (D=0.5)";
                case Activation::pow_quarter: return "Linear Regression (D=0.25)";
                case Activation::pow_two: return "Linear Regression (D=2)";
                case Activation::exp: return "Linear Regression (Exp)";
                case Activation::log: return "Linear Regression (Log)";
                case Activation::sigmoid: return "Linear Regression (Sigmoid)";
            }
            return "Linear Regression";
        case Family::decision_tree: return "Decision Tree";
        case Family::gradient_boosting:
            std::snprintf(buf, sizeof(buf), "Gradient Boosting (N=%d)", n_estimators);
            return buf;
        case Family::adaboost_r2:
            std::snprintf(buf, sizeof(buf), "AdaBoost (N=%d)", n_estimators);
            return buf;
        case Family::random_forest:
            std::snprintf(buf, sizeof(buf), "Random Forest (N=%d)", n_estimators);
            return buf;
    }
    return "?";
}

std::string RegressorSpec::to_json() const {
    ordered_json params;
    switch (family) {
        case Family::knn:
            params["k"] = k;
            params["standardize"] = standardize;
            break;
        case Family::linear:
            params["activation"] = regress::to_string(activation);
            params["standardize"] = standardize;
            break;
        case Family::decision_tree:
            params["max_depth"] = max_depth;
            params["min_samples_split"] = min_samples_split;
            break;
        case Family::random_forest:
        case Family::adaboost_r2:
            params["n_estimators"] = n_estimators;
            params["max_depth"] = max_depth;
            params["min_samples_split"] = min_samples_split;
            break;
        case Family::gradient_boosting:
            params["n_estimators"] = n_estimators;
            params["max_depth"] = max_depth;
            params["min_samples_split"] = min_samples_split;
            params["learning_rate"] = learning_rate;
            break;
    }
    ordered_json doc;
    doc["family"] = regress::to_string(family);
    doc["params"] = params;
    doc["seed"] = seed;
    return doc.dump();
}

RegressorSpec RegressorSpec::from_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("regressor spec: ") + e.what());
    }
    if (!doc.contains("family"))
        throw ParseError("regressor spec: missing field 'family'");
    RegressorSpec spec;
    spec.family = family_from_string(doc["family"].get<std::string>());
    switch (spec.family) {
        case Family::decision_tree: spec.max_depth = 0; break;
        case Family::gradient_boosting:
        case Family::adaboost_r2: spec.max_depth = 3; break;
        default: break;
    }
    const json params = doc.value("params", json::object());
    spec.k = params.value("k", spec.k);
    if (params.contains("activation"))
        spec.activation = activation_from_string(params["activation"].get<std::string>());
    spec.n_estimators = params.value("n_estimators", spec.n_estimators);
    spec.max_depth = params.value("max_depth", spec.max_depth);
    spec.min_samples_split = params.value("min_samples_split", spec.min_samples_split);
    spec.learning_rate = params.value("learning_rate", spec.learning_rate);
    spec.standardize = params.value("standardize", spec.standardize);
    spec.seed = doc.value("seed", std::uint64_t{0});
    return spec;
}

RegressorSpec knn(int k) {
    RegressorSpec spec;
    spec.family = Family::knn;
    spec.k = k;
    return spec;
}

RegressorSpec linear(Activation activation) {
    RegressorSpec spec;
    spec.family = Family::linear;
    spec.activation = activation;
    return spec;
}

RegressorSpec decision_tree() {
    RegressorSpec spec;
    spec.family = Family::decision_tree;
    spec.max_depth = 0;
    return spec;
}

RegressorSpec random_forest(int n_estimators) {
    RegressorSpec spec;
    spec.family = Family::random_forest;
    spec.n_estimators = n_estimators;
    spec.max_depth = 0;
    return spec;
}

RegressorSpec gradient_boosting(int n_estimators) {
    RegressorSpec spec;
    spec.family = Family::gradient_boosting;
    spec.n_estimators = n_estimators;
    spec.max_depth = 3;
    spec.learning_rate = 0.1;
    return spec;
}

RegressorSpec adaboost_r2(int n_estimators) {
    RegressorSpec spec;
    spec.family = Family::adaboost_r2;
    spec.n_estimators = n_estimators;
    spec.max_depth = 3;
    return spec;
}

std::vector<RegressorSpec> baseline_grid(std::uint64_t seed) {
    std::vector<RegressorSpec> grid;
    for (int k : {1, 3, 5, 7, 9}) grid.push_back(knn(k));
    for (Activation a : {Activation::identity, Activation::pow_half, Activation::pow_quarter,
                         Activation::pow_two, Activation::exp, Activation::log,
                         Activation::sigmoid})
        grid.push_back(linear(a));
    grid.push_back(decision_tree());
    for (int n : {25, 50, 100, 200}) grid.push_back(gradient_boosting(n));
    for (int n : {25, 50, 100, 200}) grid.push_back(adaboost_r2(n));
    for (int n : {25, 50, 100, 200}) grid.push_back(random_forest(n));
    for (RegressorSpec& spec : grid) spec.seed = seed;
    return grid;
}

namespace {

struct Standardizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;  // sd with zeros replaced by 1

    static Standardizer fit(const Eigen::MatrixXd& X) {
        Standardizer s;
        s.mean = X.colwise().mean();
        s.scale.resize(X.cols());
        const double n = static_cast<double>(X.rows());
        for (Eigen::Index c = 0; c < X.cols(); ++c) {
            const double var = (X.col(c).array() - s.mean(c)).square().sum() / n;
            const double sd = std::sqrt(var);
            s.scale(c) = sd > 0.0 ? sd : 1.0;
        }
        return s;
    }

    static Standardizer identity(Eigen::Index cols) {
        Standardizer s;
        s.mean = Eigen::VectorXd::Zero(cols);
        s.scale = Eigen::VectorXd::Ones(cols);
        return s;
    }

    Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const {
        return (X.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
    }
};

void check_fit_inputs(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (X.rows() == 0 || X.cols() == 0) throw std::invalid_argument("fit: empty feature matrix");
    if (X.rows() != y.size()) throw std::invalid_argument("fit: X/y length mismatch");
}

void check_predict_inputs(const Eigen::MatrixXd& X, Eigen::Index expected_cols) {
    if (X.cols() != expected_cols)
        throw std::invalid_argument("predict: expected " + std::to_string(expected_cols) +
                                    " feature columns, got " + std::to_string(X.cols()));
}

std::uint64_t member_seed(std::uint64_t seed, int index) {
    return splitmix64(seed + splitmix64(static_cast<std::uint64_t>(index) + 1));
}

class LinearModel final : public Model {
public:
    LinearModel(Standardizer scaler, Eigen::VectorXd w, double intercept, Activation activation)
        : scaler_(std::move(scaler)), w_(std::move(w)), intercept_(intercept),
          activation_(activation) {}

    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override {
        check_predict_inputs(X, w_.size());
        Eigen::VectorXd z = scaler_.apply(X) * w_;
        z.array() += intercept_;
        for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = activation_forward(activation_, z(i));
        return z;
    }

    Eigen::Index n_features() const override { return w_.size(); }

private:
    Standardizer scaler_;
    Eigen::VectorXd w_;
    double intercept_;
    Activation activation_;
};

class KnnModel final : public Model {
public:
    KnnModel(Standardizer scaler, Eigen::MatrixXd train, Eigen::VectorXd y, int k)
        : scaler_(std::move(scaler)), train_(std::move(train)), y_(std::move(y)), k_(k) {}

    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override {
        check_predict_inputs(X, train_.cols());
        const Eigen::MatrixXd queries = scaler_.apply(X);
        const auto n_train = train_.rows();
        Eigen::VectorXd out(X.rows());
        std::vector<int> idx(static_cast<std::size_t>(n_train));
        Eigen::VectorXd d2(n_train);
        for (Eigen::Index q = 0; q < queries.rows(); ++q) {
            d2.setZero();
            for (Eigen::Index f = 0; f < train_.cols(); ++f)
                d2 += (train_.col(f).array() - queries(q, f)).square().matrix();
            std::iota(idx.begin(), idx.end(), 0);
            // Distance ties break toward the lower training index.
            std::partial_sort(idx.begin(), idx.begin() + k_, idx.end(), [&](int a, int b) {
                if (d2(a) != d2(b)) return d2(a) < d2(b);
                return a < b;
            });
            double sum = 0.0;
            for (int i = 0; i < k_; ++i) sum += y_(idx[static_cast<std::size_t>(i)]);
            out(q) = sum / k_;
        }
        return out;
    }

    Eigen::Index n_features() const override { return train_.cols(); }

private:
    Standardizer scaler_;
    Eigen::MatrixXd train_;
    Eigen::VectorXd y_;
    int k_;
};

class TreeModel final : public Model {
public:
    TreeModel(detail::RegressionTree tree, Eigen::Index cols)
        : tree_(std::move(tree)), cols_(cols) {}

    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override {
        check_predict_inputs(X, cols_);
        return tree_.predict(X);
    }

    Eigen::Index n_features() const override { return cols_; }

private:
    detail::RegressionTree tree_;
    Eigen::Index cols_;
};

class ForestModel final : public Model {
public:
    ForestModel(std::vector<detail::RegressionTree> trees, Eigen::Index cols)
        : trees_(std::move(trees)), cols_(cols) {}

    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override {
        check_predict_inputs(X, cols_);
        Eigen::VectorXd out = Eigen::VectorXd::Zero(X.rows());
        for (const auto& tree : trees_) out += tree.predict(X);
        return out / static_cast<double>(trees_.size());
    }

    Eigen::Index n_features() const override { return cols_; }

private:
    std::vector<detail::RegressionTree> trees_;
    Eigen::Index cols_;
};

class BoostingModel final : public Model {
public:
    BoostingModel(double base, double learning_rate, std::vector<detail::RegressionTree> trees,
                  Eigen::Index cols, double target_min, double target_max)
        : base_(base), learning_rate_(learning_rate), trees_(std::move(trees)), cols_(cols),
          target_min_(target_min), target_max_(target_max) {}

    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override {
        check_predict_inputs(X, cols_);
        Eigen::VectorXd out = Eigen::VectorXd::Constant(X.rows(), base_);
        for (const auto& tree : trees_) out += learning_rate_ * tree.predict(X);
        // The staged sums can drift past the observed targets near the feature
        // boundary; the tree family contract is non-extrapolating, so clamp.
        for (Eigen::Index i = 0; i < out.size(); ++i)
            out(i) = std::clamp(out(i), target_min_, target_max_);
        return out;
    }

    Eigen::Index n_features() const override { return cols_; }

private:
    double base_;
    double learning_rate_;
    std::vector<detail::RegressionTree> trees_;
    Eigen::Index cols_;
    double target_min_;
    double target_max_;
};

class AdaBoostModel final : public Model {
public:
    AdaBoostModel(std::vector<detail::RegressionTree> trees, std::vector<double> stage_weights,
                  Eigen::Index cols)
        : trees_(std::move(trees)), stage_weights_(std::move(stage_weights)), cols_(cols) {}

    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override {
        check_predict_inputs(X, cols_);
        const auto n_stages = trees_.size();
        Eigen::VectorXd out(X.rows());
        std::vector<std::pair<double, std::size_t>> preds(n_stages);
        const double total = std::accumulate(stage_weights_.begin(), stage_weights_.end(), 0.0);
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            for (std::size_t t = 0; t < n_stages; ++t)
                preds[t] = {trees_[t].predict_row(X, i), t};
            std::sort(preds.begin(), preds.end());
            // Weighted median over stage predictions.
            double cum = 0.0;
            double value = preds.back().first;
            for (const auto& [p, t] : preds) {
                cum += stage_weights_[t];
                if (cum >= 0.5 * total) {
                    value = p;
                    break;
                }
            }
            out(i) = value;
        }
        return out;
    }

    Eigen::Index n_features() const override { return cols_; }

private:
    std::vector<detail::RegressionTree> trees_;
    std::vector<double> stage_weights_;
    Eigen::Index cols_;
};

ModelPtr fit_linear(const RegressorSpec& spec, const Eigen::MatrixXd& X,
                    const Eigen::VectorXd& y) {
    Standardizer scaler =
        spec.standardize ? Standardizer::fit(X) : Standardizer::identity(X.cols());
    const Eigen::MatrixXd Xs = scaler.apply(X);
    Eigen::MatrixXd design(X.rows(), X.cols() + 1);
    design.leftCols(X.cols()) = Xs;
    design.col(X.cols()).setOnes();
    const Eigen::VectorXd targets = transform_targets(spec.activation, y);
    const Eigen::VectorXd solution =
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(design).solve(targets);
    return std::make_unique<LinearModel>(std::move(scaler), solution.head(X.cols()),
                                         solution(X.cols()), spec.activation);
}

ModelPtr fit_knn(const RegressorSpec& spec, const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (spec.k < 1) throw std::invalid_argument("knn: k must be >= 1");
    if (spec.k > X.rows())
        throw std::invalid_argument("knn: k exceeds the training-set size");
    Standardizer scaler =
        spec.standardize ? Standardizer::fit(X) : Standardizer::identity(X.cols());
    return std::make_unique<KnnModel>(scaler, scaler.apply(X), y, spec.k);
}

ModelPtr fit_decision_tree(const RegressorSpec& spec, const Eigen::MatrixXd& X,
                           const Eigen::VectorXd& y) {
    const detail::Presorted presorted(X);
    detail::RegressionTree tree;
    tree.fit(X, y, {spec.max_depth, spec.min_samples_split}, presorted, {});
    return std::make_unique<TreeModel>(std::move(tree), X.cols());
}

ModelPtr fit_random_forest(const RegressorSpec& spec, const Eigen::MatrixXd& X,
                           const Eigen::VectorXd& y) {
    if (spec.n_estimators < 1) throw std::invalid_argument("random forest: n_estimators >= 1");
    const detail::Presorted presorted(X);
    const auto n = static_cast<std::size_t>(X.rows());
    std::vector<detail::RegressionTree> trees(static_cast<std::size_t>(spec.n_estimators));
    std::vector<int> counts(n);
    for (int t = 0; t < spec.n_estimators; ++t) {
        Rng rng(member_seed(spec.seed, t));
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(rng.below(n))];
        trees[static_cast<std::size_t>(t)].fit(X, y, {spec.max_depth, spec.min_samples_split},
                                               presorted, counts);
    }
    return std::make_unique<ForestModel>(std::move(trees), X.cols());
}

ModelPtr fit_gradient_boosting(const RegressorSpec& spec, const Eigen::MatrixXd& X,
                               const Eigen::VectorXd& y) {
    if (spec.n_estimators < 1) throw std::invalid_argument("gradient boosting: n_estimators >= 1");
    const detail::Presorted presorted(X);
    const double base = y.mean();
    Eigen::VectorXd residual = y.array() - base;
    std::vector<detail::RegressionTree> trees(static_cast<std::size_t>(spec.n_estimators));
    for (int t = 0; t < spec.n_estimators; ++t) {
        detail::RegressionTree& tree = trees[static_cast<std::size_t>(t)];
        tree.fit(X, residual, {spec.max_depth, spec.min_samples_split}, presorted, {});
        residual -= spec.learning_rate * tree.predict(X);
    }
    return std::make_unique<BoostingModel>(base, spec.learning_rate, std::move(trees), X.cols(),
                                           y.minCoeff(), y.maxCoeff());
}

ModelPtr fit_adaboost_r2(const RegressorSpec& spec, const Eigen::MatrixXd& X,
                         const Eigen::VectorXd& y) {
    if (spec.n_estimators < 1) throw std::invalid_argument("adaboost: n_estimators >= 1");
    const detail::Presorted presorted(X);
    const auto n = static_cast<std::size_t>(X.rows());

    std::vector<double> weights(n, 1.0 / static_cast<double>(n));
    std::vector<double> cumulative(n);
    std::vector<int> counts(n);
    std::vector<detail::RegressionTree> trees;
    std::vector<double> stage_weights;

    for (int t = 0; t < spec.n_estimators; ++t) {
        Rng rng(member_seed(spec.seed, t));
        // Resample the training set proportionally to the current weights.
        std::partial_sum(weights.begin(), weights.end(), cumulative.begin());
        const double total = cumulative.back();
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const double u = rng.uniform() * total;
            const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
            const auto pick = std::min(static_cast<std::size_t>(it - cumulative.begin()), n - 1);
            ++counts[pick];
        }

        detail::RegressionTree tree;
        tree.fit(X, y, {spec.max_depth, spec.min_samples_split}, presorted, counts);
        const Eigen::VectorXd pred = tree.predict(X);
        const Eigen::VectorXd err = (pred - y).cwiseAbs();
        const double max_err = err.maxCoeff();
        if (max_err <= 0.0) {
            // Perfect stage: it alone decides the prediction.
            trees.clear();
            stage_weights.clear();
            trees.push_back(std::move(tree));
            stage_weights.push_back(1.0);
            break;
        }

        double avg_loss = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            avg_loss += weights[i] * (err(static_cast<Eigen::Index>(i)) / max_err);
        if (avg_loss >= 0.5) {
            if (trees.empty()) {
                trees.push_back(std::move(tree));
                stage_weights.push_back(1.0);
            }
            break;
        }
        avg_loss = std::max(avg_loss, 1e-12);
        const double beta = avg_loss / (1.0 - avg_loss);

        trees.push_back(std::move(tree));
        stage_weights.push_back(std::log(1.0 / beta));

        double weight_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            weights[i] *= std::pow(beta, 1.0 - err(static_cast<Eigen::Index>(i)) / max_err);
            weight_sum += weights[i];
        }
        for (double& w : weights) w /= weight_sum;
    }
    return std::make_unique<AdaBoostModel>(std::move(trees), std::move(stage_weights), X.cols());
}

}  // namespace

ModelPtr fit(const RegressorSpec& spec, const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    check_fit_inputs(X, y);
    switch (spec.family) {
        case Family::knn: return fit_knn(spec, X, y);
        case Family::linear: return fit_linear(spec, X, y);
        case Family::decision_tree: return fit_decision_tree(spec, X, y);
        case Family::random_forest: return fit_random_forest(spec, X, y);
        case Family::gradient_boosting: return fit_gradient_boosting(spec, X, y);
        case Family::adaboost_r2: return fit_adaboost_r2(spec, X, y);
    }
    throw std::invalid_argument("unknown regressor family");
}

}  // namespace naap::regress
