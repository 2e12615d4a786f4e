#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "naap/regressors.hpp"
#include "naap/rng.hpp"

namespace {

struct Fixture {
    Eigen::MatrixXd x_train{400, 35};
    Eigen::VectorXd y_train{400};
    Eigen::MatrixXd x_test{40, 35};

    Fixture() {
        naap::Rng rng(7);
        for (Eigen::Index i = 0; i < x_train.rows(); ++i)
            for (Eigen::Index j = 0; j < x_train.cols(); ++j) x_train(i, j) = rng.uniform();
        for (Eigen::Index i = 0; i < x_test.rows(); ++i)
            for (Eigen::Index j = 0; j < x_test.cols(); ++j) x_test(i, j) = rng.uniform();
        for (Eigen::Index i = 0; i < y_train.size(); ++i)
            y_train(i) = 0.4 * x_train(i, 0) + 0.3 * x_train(i, 1) + 0.05 * rng.normal();
    }
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

void FitPredict(benchmark::State& state, naap::regress::RegressorSpec spec) {
    const Fixture& f = fixture();
    spec.seed = 3;
    for (auto _ : state) {
        const auto model = naap::regress::fit(spec, f.x_train, f.y_train);
        benchmark::DoNotOptimize(model->predict(f.x_test));
    }
}

}  // namespace

BENCHMARK_CAPTURE(FitPredict, knn3, naap::regress::knn(3));
BENCHMARK_CAPTURE(FitPredict, linear_quarter,
                  naap::regress::linear(naap::regress::Activation::pow_quarter));
BENCHMARK_CAPTURE(FitPredict, decision_tree, naap::regress::decision_tree());
BENCHMARK_CAPTURE(FitPredict, gradient_boosting_200, naap::regress::gradient_boosting(200));
BENCHMARK_CAPTURE(FitPredict, adaboost_100, naap::regress::adaboost_r2(100));
BENCHMARK_CAPTURE(FitPredict, random_forest_200, naap::regress::random_forest(200));

BENCHMARK_MAIN();
