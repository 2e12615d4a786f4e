#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "naap/error.hpp"
#include "naap/regressors.hpp"
#include "naap/rng.hpp"

using namespace naap;
using regress::Activation;
using regress::RegressorSpec;

namespace {

Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double lo = 0.0,
                              double hi = 1.0) {
    Eigen::MatrixXd X(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) X(i, j) = lo + (hi - lo) * rng.uniform();
    return X;
}

constexpr Activation kAllActivations[] = {
    Activation::identity, Activation::pow_half, Activation::pow_quarter, Activation::pow_two,
    Activation::exp,      Activation::log,      Activation::sigmoid};

}  // namespace

TEST_SUITE("regressors") {

TEST_CASE("target transforms hit their fixed points") {
    Eigen::VectorXd y(1);
    y << 0.5;
    CHECK(regress::transform_targets(Activation::sigmoid, y)(0) == doctest::Approx(0.0));
    y << 1.0;
    CHECK(regress::transform_targets(Activation::pow_quarter, y)(0) == doctest::Approx(0.0));
    y << std::exp(1.0);
    CHECK(regress::transform_targets(Activation::exp, y)(0) == doctest::Approx(1.0));
}

TEST_CASE("forward(inverse(y)) is the identity on valid targets") {
    for (Activation a : kAllActivations) {
        for (double y = 0.05; y < 0.96; y += 0.1) {
            const double z = regress::activation_inverse(a, y);
            CHECK(regress::activation_forward(a, z) == doctest::Approx(y).epsilon(1e-12));
        }
    }
}

TEST_CASE("non-finite targets are rejected with their index") {
    Eigen::VectorXd y(3);
    y << 0.2, std::numeric_limits<double>::quiet_NaN(), 0.4;
    try {
        regress::transform_targets(Activation::identity, y);
        FAIL("expected a validation error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("index 1") != std::string::npos);
    }
}

TEST_CASE("linear regression interpolates affine data exactly") {
    Rng rng(31);
    const Eigen::MatrixXd X = random_matrix(rng, 80, 5);
    Eigen::VectorXd w(5);
    w << 0.3, -0.2, 0.5, 0.1, -0.4;
    const Eigen::VectorXd y = (X * w).array() + 0.25;
    const auto model = regress::fit(regress::linear(), X, y);
    CHECK((model->predict(X) - y).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("noiseless activation data is recovered through the inverse transform") {
    Rng rng(77);
    Eigen::VectorXd w(5);
    w << 0.25, 0.15, 0.2, 0.1, 0.3;  // positive, so z stays in a safe domain
    for (Activation a : kAllActivations) {
        const Eigen::MatrixXd X = random_matrix(rng, 100, 5);
        // Held-out points extend beyond the training hull on purpose.
        const Eigen::MatrixXd X_test = random_matrix(rng, 50, 5, -0.3, 1.5);
        const auto z_of = [&](const Eigen::MatrixXd& M) {
            return Eigen::VectorXd((M * w).array() + 0.5);
        };
        const auto apply = [&](const Eigen::VectorXd& z) {
            Eigen::VectorXd y(z.size());
            for (Eigen::Index i = 0; i < z.size(); ++i)
                y(i) = regress::activation_forward(a, z(i));
            return y;
        };
        const Eigen::VectorXd y = apply(z_of(X));
        const Eigen::VectorXd y_test = apply(z_of(X_test));
        const auto model = regress::fit(regress::linear(a), X, y);
        const double mae = (model->predict(X_test) - y_test).cwiseAbs().mean();
        INFO("activation ", regress::to_string(a));
        CHECK(mae < 1e-6);
    }
}

TEST_CASE("sigmoid predictions stay inside (0, 1)") {
    Rng rng(5);
    const Eigen::MatrixXd X = random_matrix(rng, 60, 4);
    Eigen::VectorXd y(60);
    for (Eigen::Index i = 0; i < 60; ++i) y(i) = 0.05 + 0.9 * rng.uniform();
    const auto model = regress::fit(regress::linear(Activation::sigmoid), X, y);
    const Eigen::MatrixXd far = random_matrix(rng, 20, 4, -3.0, 4.0);
    const Eigen::VectorXd pred = model->predict(far);
    for (Eigen::Index i = 0; i < pred.size(); ++i) {
        CHECK(pred(i) > 0.0);
        CHECK(pred(i) < 1.0);
    }
}

TEST_CASE("1-NN predicts a training point's own target") {
    Rng rng(13);
    const Eigen::MatrixXd X = random_matrix(rng, 30, 6);
    Eigen::VectorXd y(30);
    for (Eigen::Index i = 0; i < 30; ++i) y(i) = rng.uniform();
    const auto model = regress::fit(regress::knn(1), X, y);
    CHECK((model->predict(X) - y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("KNN is invariant to the order of training rows") {
    Rng rng(41);
    const Eigen::MatrixXd X = random_matrix(rng, 50, 5);
    Eigen::VectorXd y(50);
    for (Eigen::Index i = 0; i < 50; ++i) y(i) = rng.uniform();
    const Eigen::MatrixXd queries = random_matrix(rng, 15, 5);

    std::vector<int> perm(50);
    std::iota(perm.begin(), perm.end(), 0);
    std::reverse(perm.begin(), perm.end());
    Eigen::MatrixXd Xp(50, 5);
    Eigen::VectorXd yp(50);
    for (int i = 0; i < 50; ++i) {
        Xp.row(i) = X.row(perm[static_cast<std::size_t>(i)]);
        yp(i) = y(perm[static_cast<std::size_t>(i)]);
    }
    const auto a = regress::fit(regress::knn(5), X, y);
    const auto b = regress::fit(regress::knn(5), Xp, yp);
    CHECK((a->predict(queries) - b->predict(queries)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("KNN distance ties break toward the lower training index") {
    Eigen::MatrixXd X(2, 1);
    X << 0.0, 2.0;
    Eigen::VectorXd y(2);
    y << 0.1, 0.9;
    RegressorSpec spec = regress::knn(1);
    spec.standardize = false;
    const auto model = regress::fit(spec, X, y);
    Eigen::MatrixXd q(1, 1);
    q << 1.0;  // equidistant
    CHECK(model->predict(q)(0) == doctest::Approx(0.1));
}

TEST_CASE("trees cannot leave the training target range; linear models can") {
    Rng rng(3);
    const Eigen::MatrixXd X = random_matrix(rng, 120, 3);
    Eigen::VectorXd w(3);
    w << 0.4, 0.3, 0.2;
    Eigen::VectorXd y = (X * w).array() + 0.1;
    const double lo = y.minCoeff(), hi = y.maxCoeff();

    Eigen::MatrixXd beyond(5, 3);
    beyond.setConstant(4.0);  // far above the training hull

    for (const RegressorSpec& spec :
         {regress::decision_tree(), regress::random_forest(30), regress::gradient_boosting(30),
          regress::adaboost_r2(30)}) {
        const auto model = regress::fit(spec, X, y);
        const Eigen::VectorXd pred = model->predict(beyond);
        for (Eigen::Index i = 0; i < pred.size(); ++i) {
            CHECK(pred(i) >= lo - 1e-9);
            CHECK(pred(i) <= hi + 1e-9);
        }
    }
    const auto lin = regress::fit(regress::linear(), X, y);
    CHECK(lin->predict(beyond).maxCoeff() > hi);
}

TEST_CASE("gradient boosting keeps reducing the training error with more stages") {
    Rng rng(29);
    const Eigen::MatrixXd X = random_matrix(rng, 150, 6);
    Eigen::VectorXd y(150);
    for (Eigen::Index i = 0; i < 150; ++i)
        y(i) = 0.3 * X(i, 0) + 0.2 * X(i, 1) * X(i, 1) + 0.05 * rng.normal();
    const auto small = regress::fit(regress::gradient_boosting(25), X, y);
    const auto large = regress::fit(regress::gradient_boosting(200), X, y);
    const double mae_small = (small->predict(X) - y).cwiseAbs().mean();
    const double mae_large = (large->predict(X) - y).cwiseAbs().mean();
    CHECK(mae_large <= mae_small);
}

TEST_CASE("fits are deterministic; the forest seed matters") {
    Rng rng(101);
    const Eigen::MatrixXd X = random_matrix(rng, 90, 5);
    Eigen::VectorXd y(90);
    for (Eigen::Index i = 0; i < 90; ++i) y(i) = rng.uniform();
    const Eigen::MatrixXd queries = random_matrix(rng, 20, 5);

    for (RegressorSpec spec :
         {regress::knn(3), regress::linear(Activation::pow_quarter), regress::decision_tree(),
          regress::random_forest(20), regress::gradient_boosting(20), regress::adaboost_r2(20)}) {
        spec.seed = 42;
        const Eigen::VectorXd a = regress::fit(spec, X, y)->predict(queries);
        const Eigen::VectorXd b = regress::fit(spec, X, y)->predict(queries);
        INFO(spec.label());
        CHECK(a == b);  // bitwise
    }

    RegressorSpec forest = regress::random_forest(20);
    forest.seed = 1;
    const Eigen::VectorXd s1 = regress::fit(forest, X, y)->predict(queries);
    forest.seed = 2;
    const Eigen::VectorXd s2 = regress::fit(forest, X, y)->predict(queries);
    CHECK(s1 != s2);
    forest.seed = 1;
    CHECK(regress::fit(forest, X, y)->predict(queries) == s1);
}

TEST_CASE("the evaluation grid matches the published row list") {
    const auto grid = regress::baseline_grid(7);
    CHECK(grid.size() == 25);
    std::vector<std::string> labels;
    for (const RegressorSpec& spec : grid) {
        labels.push_back(spec.label());
        CHECK(spec.seed == 7);
    }
    CHECK(labels[0] == "1-NN");
    CHECK(labels[4] == "9-NN");
    CHECK(labels[5] == "Linear Regression");
    CHECK(std::find(labels.begin(), labels.end(), "Linear Regression (D=0.25)") != labels.end());
    CHECK(labels[12] == "Decision Tree");
    CHECK(labels[16] == "Gradient Boosting (N=200)");
    CHECK(labels[20] == "AdaBoost (N=200)");
    CHECK(labels[24] == "Random Forest (N=200)");
}

TEST_CASE("spec JSON round trip") {
    for (const RegressorSpec& spec : regress::baseline_grid(3)) {
        const RegressorSpec back = RegressorSpec::from_json(spec.to_json());
        CHECK(back.label() == spec.label());
        CHECK(back.family == spec.family);
        CHECK(back.seed == spec.seed);
        CHECK(back.max_depth == spec.max_depth);
    }
    CHECK_THROWS_AS(RegressorSpec::from_json("{"), ParseError);
    CHECK_THROWS_AS(RegressorSpec::from_json("{}"), ParseError);
}

TEST_CASE("input validation") {
    Eigen::MatrixXd X(0, 3);
    Eigen::VectorXd y(0);
    CHECK_THROWS_AS(regress::fit(regress::linear(), X, y), std::invalid_argument);

    Rng rng(1);
    const Eigen::MatrixXd X2 = random_matrix(rng, 4, 2);
    Eigen::VectorXd y2(4);
    y2 << 0.1, 0.2, 0.3, 0.4;
    CHECK_THROWS_AS(regress::fit(regress::knn(9), X2, y2), std::invalid_argument);

    const auto model = regress::fit(regress::linear(), X2, y2);
    const Eigen::MatrixXd wrong = random_matrix(rng, 3, 5);
    CHECK_THROWS_AS(model->predict(wrong), std::invalid_argument);
}

TEST_CASE("rank-deficient subsets still solve") {
    Rng rng(55);
    Eigen::MatrixXd X = random_matrix(rng, 40, 3);
    X.col(2) = X.col(0);  // collinear
    Eigen::VectorXd y = (X.col(0) * 0.5).array() + 0.2;
    const auto model = regress::fit(regress::linear(), X, y);
    CHECK((model->predict(X) - y).cwiseAbs().maxCoeff() < 1e-8);
}

}  // TEST_SUITE
