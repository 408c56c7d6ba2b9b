#include "support/temp_dir.hpp"

#include "triage/error.hpp"
#include "triage/feedforward.hpp"
#include "triage/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace triage;

namespace {

Eigen::MatrixXd gate_inputs() {
    Eigen::MatrixXd x(4, 2);
    x << 0, 0, 0, 1, 1, 0, 1, 1;
    return x;
}

Eigen::MatrixXd column(std::initializer_list<double> v) {
    Eigen::MatrixXd m(static_cast<long>(v.size()), 1);
    long i = 0;
    for (double x : v) m(i++, 0) = x;
    return m;
}

double logistic(double a) { return 1.0 / (1.0 + std::exp(-a)); }

// 0.5 ||d - y||^2 by straight evaluation
double half_sse(const MLPModel& m, const Eigen::VectorXd& x, const Eigen::VectorXd& d) {
    return 0.5 * (d - mlp_forward(m, x).output()).squaredNorm();
}

MLPModel random_net(std::vector<int> sizes, std::uint64_t seed) {
    TrainConfig cfg;
    cfg.seed = seed;
    cfg.init_range = 2.0;
    return mlp_init(sizes, cfg);
}

}  // namespace

TEST_CASE("activations") {
    CHECK(activate(Activation::logistic, 0.0) == 0.5);
    CHECK(activate(Activation::step, 0.0) == 1.0);
    CHECK(activate(Activation::step, -1e-9) == 0.0);
    CHECK(activate(Activation::tanh, 0.3) == std::tanh(0.3));
    for (double a : {-2.0, -0.1, 0.0, 0.7, 3.0}) {
        const double y = activate(Activation::logistic, a);
        CHECK(derivative_from_output(Activation::logistic, y) == doctest::Approx(activation_derivative(Activation::logistic, a)));
        const double t = activate(Activation::tanh, a);
        CHECK(derivative_from_output(Activation::tanh, t) == doctest::Approx(activation_derivative(Activation::tanh, a)));
    }
    CHECK(parse_activation("tanh") == Activation::tanh);
    CHECK_THROWS_AS(parse_activation("relu"), std::invalid_argument);
}

TEST_CASE("perceptron learns AND") {
    TrainConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.seed = 1;
    const auto x = gate_inputs();
    const auto d = column({0, 0, 0, 1});
    const auto res = perceptron_train(x, d, cfg);
    CHECK(res.converged);
    for (long l = 0; l < 4; ++l) CHECK(perceptron_output(res.model, x.row(l).transpose())(0) == d(l, 0));
}

TEST_CASE("perceptron does not converge on XOR") {
    TrainConfig cfg;
    cfg.max_epochs = 2000;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        cfg.seed = seed;
        const auto res = perceptron_train(gate_inputs(), column({0, 1, 1, 0}), cfg);
        CHECK_FALSE(res.converged);
        CHECK(res.epochs == 2000);
    }
}

TEST_CASE("perceptron with zero learning rate keeps its weights") {
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    cfg.max_epochs = 3;
    cfg.seed = 8;
    const auto res = perceptron_train(gate_inputs(), column({0, 1, 1, 0}), cfg);
    TrainConfig untouched = cfg;
    untouched.max_epochs = 0;
    CHECK(res.model.weights == perceptron_train(gate_inputs(), column({0, 1, 1, 0}), untouched).model.weights);
    CHECK_THROWS_AS(perceptron_train(gate_inputs(), column({0, 2, 1, 0}), cfg), DataError);
}

TEST_CASE("forward pass") {
    auto m = random_net({3, 4, 2}, 1);
    for (auto& w : m.weights) w.setZero();
    const auto y = mlp_forward(m, Eigen::Vector3d(0.3, -1.0, 2.0)).output();
    CHECK((y.array() == 0.5).all());

    TrainConfig one;
    one.bias = false;
    auto chain = mlp_init(std::vector<int>{1, 1}, one);
    chain.weights[0](0, 0) = 1.0;
    CHECK(mlp_forward(chain, Eigen::VectorXd::Constant(1, 0.8)).output()(0) == logistic(0.8));
}

TEST_CASE("forward pass matches a hand-rolled evaluation") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto m = random_net({2, 3, 2}, seed);
        const Eigen::Vector2d x(0.4, -0.7);
        const auto& w1 = m.weights[0];
        const auto& w2 = m.weights[1];
        double h[3], out[2];
        for (int i = 0; i < 3; ++i) h[i] = logistic(w1(i, 0) * x(0) + w1(i, 1) * x(1) + w1(i, 2));
        for (int i = 0; i < 2; ++i) out[i] = logistic(w2(i, 0) * h[0] + w2(i, 1) * h[1] + w2(i, 2) * h[2] + w2(i, 3));
        const auto y = mlp_forward(m, x).output();
        CHECK(std::abs(y(0) - out[0]) < 1e-12);
        CHECK(std::abs(y(1) - out[1]) < 1e-12);
    }
}

TEST_CASE("gradient is zero at the target") {
    const auto m = random_net({2, 3, 1}, 4);
    const Eigen::Vector2d x(0.1, 0.9);
    const auto y = mlp_forward(m, x).output();
    for (const auto& g : mlp_gradient(m, x, y)) CHECK(g.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single-weight gradient in closed form") {
    TrainConfig cfg;
    cfg.bias = false;
    auto m = mlp_init(std::vector<int>{1, 1}, cfg);
    m.weights[0](0, 0) = 0.6;
    const double x = 0.9, d = 1.0;
    const double y = logistic(0.6 * x);
    const auto g = mlp_gradient(m, Eigen::VectorXd::Constant(1, x), Eigen::VectorXd::Constant(1, d));
    CHECK(g[0](0, 0) == doctest::Approx((d - y) * y * (1 - y) * x).epsilon(1e-14));
}

TEST_CASE("gradient matches central finite differences") {
    Rng rng(501);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double h = 1e-6;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto m = random_net({2, 3, 1}, seed);
        const Eigen::Vector2d x(u(rng), u(rng));
        const Eigen::VectorXd d = Eigen::VectorXd::Constant(1, u(rng) > 0 ? 1.0 : 0.0);
        const auto g = mlp_gradient(m, x, d);
        for (std::size_t k = 0; k < m.layers(); ++k)
            for (long i = 0; i < m.weights[k].size(); ++i) {
                const double w0 = m.weights[k](i);
                m.weights[k](i) = w0 + h;
                const double up = half_sse(m, x, d);
                m.weights[k](i) = w0 - h;
                const double down = half_sse(m, x, d);
                m.weights[k](i) = w0;
                const double numeric = -(up - down) / (2 * h);
                const double scale = std::max({std::abs(numeric), std::abs(g[k](i)), 1e-7});
                CHECK(std::abs(numeric - g[k](i)) / scale < 1e-4);
            }
    }
}

TEST_CASE("update applies eta times the gradient") {
    auto m = random_net({3, 2, 2}, 9);
    const Eigen::Vector3d x(0.2, 0.5, -0.3);
    const Eigen::Vector2d d(1, 0);
    const auto g = mlp_gradient(m, x, d);
    const auto before = m.weights;
    mlp_update(m, x, d, 0.25);
    for (std::size_t k = 0; k < m.layers(); ++k)
        CHECK((m.weights[k] - (before[k] + 0.25 * g[k])).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("MLP learns XOR with bias inputs") {
    TrainConfig cfg;
    cfg.learning_rate = 0.5;
    cfg.max_epochs = 5000;
    cfg.validation_fraction = 0.0;
    cfg.tolerance = 0.0;
    const auto x = gate_inputs();
    const std::vector<int> cls{0, 1, 1, 0};
    int solved = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        cfg.seed = seed;
        const auto res = mlp_train(x, one_hot(cls, 2), std::vector<int>{2, 3, 2}, cfg);
        solved += mlp_accuracy(res.model, x, cls) == 1.0;
    }
    CHECK(solved >= 16);
}

TEST_CASE("training trace and limits") {
    TrainConfig cfg;
    cfg.max_epochs = 0;
    cfg.seed = 3;
    const auto x = gate_inputs();
    const auto t = one_hot(std::vector<int>{0, 1, 1, 0}, 2);
    const std::vector<int> sizes{2, 3, 2};
    const auto untouched = mlp_train(x, t, sizes, cfg);
    const auto init = mlp_init(sizes, cfg);
    for (std::size_t k = 0; k < init.layers(); ++k) CHECK(untouched.model.weights[k] == init.weights[k]);
    CHECK(untouched.trace.epoch_error.empty());

    cfg.max_epochs = 30;
    cfg.validation_fraction = 0.0;
    cfg.tolerance = 0.0;
    const auto res = mlp_train(x, t, sizes, cfg);
    CHECK(res.trace.epoch_error.size() == 30);
    CHECK(res.trace.mean_error.size() == 30);
    for (std::size_t i = 0; i < 30; ++i) {
        CHECK(std::isfinite(res.trace.epoch_error[i]));
        CHECK(res.trace.mean_error[i] <= res.trace.epoch_error[i]);
    }
    CHECK(res.trace.stop_reason == "max_epochs");

    const auto again = mlp_train(x, t, sizes, cfg);
    CHECK(again.model.weights[0] == res.model.weights[0]);

    CHECK_THROWS_AS(mlp_train(x, t, std::vector<int>{3, 2}, cfg), DataError);
    CHECK_THROWS_AS(mlp_init(std::vector<int>{2}, cfg), std::invalid_argument);
}

TEST_CASE("early stopping returns the best validation weights") {
    Rng rng(502);
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd x(40, 2);
    std::vector<int> cls;
    for (int i = 0; i < 40; ++i) {
        cls.push_back(i % 2);
        x.row(i) << n(rng) + 2.0 * (i % 2), n(rng);
    }
    TrainConfig cfg;
    cfg.seed = 2;
    cfg.max_epochs = 400;
    cfg.patience = 5;
    cfg.tolerance = 0.0;
    const auto res = mlp_train(x, one_hot(cls, 2), std::vector<int>{2, 4, 2}, cfg);
    CHECK(res.trace.validation_accuracy.size() == res.trace.epoch_error.size());
    if (res.trace.best_epoch > 0) {
        const double best = res.trace.validation_accuracy[static_cast<std::size_t>(res.trace.best_epoch - 1)];
        for (double a : res.trace.validation_accuracy) CHECK(a <= best);
    }
}

TEST_CASE("bias-free networks") {
    TrainConfig cfg;
    cfg.bias = false;
    const auto m = mlp_init(std::vector<int>{4, 3, 2}, cfg);
    CHECK(m.weights[0].cols() == 4);
    CHECK(m.weights[1].cols() == 3);
    const auto pass = mlp_forward(m, Eigen::VectorXd::Zero(4));
    CHECK((pass.values[1].array() == 0.5).all());
}

TEST_CASE("MLP persistence") {
    fixtures::TempDir dir("mlp");
    const auto m = random_net({3, 5, 2}, 12);
    save_mlp(m, dir / "m.json");
    const auto l = load_mlp(dir / "m.json");
    CHECK(l.layer_sizes == m.layer_sizes);
    CHECK(l.bias == m.bias);
    for (std::size_t k = 0; k < m.layers(); ++k) CHECK(l.weights[k] == m.weights[k]);
    CHECK_THROWS_AS(load_mlp(dir / "none.json"), IoError);
    CHECK(one_hot(std::vector<int>{1, 0}, 2) == (Eigen::MatrixXd(2, 2) << 0, 1, 1, 0).finished());
}
