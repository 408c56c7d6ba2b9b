#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace triage {

enum class Activation { logistic, tanh, step };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

/// g(a)
double activate(Activation kind, double a);
/// dg/da at pre-activation a. The step function has derivative 0.
double activation_derivative(Activation kind, double a);
/// g'(.) expressed through the output y = g(a), as used by backpropagation:
/// y(1 - y) for logistic, 1 - y^2 for tanh.
double derivative_from_output(Activation kind, double y);

struct TrainConfig {
    double learning_rate = 0.1;  // eta
    int max_epochs = 1000;       // N_max
    double tolerance = 1e-3;     // epsilon on the epoch error delta(t)
    double validation_fraction = 0.2;
    int patience = 20;
    std::uint64_t seed = 0;
    double init_range = 0.5;  // weights ~ U(-r, r) / sqrt(fan_in)
    bool bias = true;         // append a constant-1 input to every layer
};

// --- single-layer perceptron ------------------------------------------------

struct PerceptronModel {
    Eigen::MatrixXd weights;  // m x (n + bias)
    bool bias = true;

    Eigen::Index inputs() const noexcept { return weights.cols() - (bias ? 1 : 0); }
    Eigen::Index outputs() const noexcept { return weights.rows(); }
};

struct PerceptronResult {
    PerceptronModel model;
    bool converged = false;
    int epochs = 0;
};

/// Step-activation outputs (1 where the weighted sum is >= 0).
Eigen::VectorXd perceptron_output(const PerceptronModel& model, const Eigen::VectorXd& x);

/// Per-pattern delta rule: delta_i = d_i - y_i, w_ij += eta delta_i x_j. The
/// epoch error is the largest |delta_i| seen during the epoch; training stops
/// as converged once it is <= tolerance. Rows of `inputs` / `targets` are
/// patterns; targets must be 0/1. Validation settings are ignored.
PerceptronResult perceptron_train(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                                  const TrainConfig& cfg);

// --- multilayer perceptron ---------------------------------------------------

struct MLPModel {
    std::vector<int> layer_sizes;          // N_0 .. N_M
    std::vector<Eigen::MatrixXd> weights;  // weights[k]: N_{k+1} x (N_k + bias)
    std::vector<Activation> activations;   // one per weight layer
    bool bias = true;

    int inputs() const { return layer_sizes.front(); }
    int outputs() const { return layer_sizes.back(); }
    std::size_t layers() const noexcept { return weights.size(); }
};

/// Seeded U(-r, r) / sqrt(fan_in) initialization; logistic everywhere.
MLPModel mlp_init(std::span<const int> layer_sizes, const TrainConfig& cfg);

/// Outputs of every layer: values[0] is x, values.back() the network output.
struct ForwardPass {
    std::vector<Eigen::VectorXd> values;

    const Eigen::VectorXd& output() const { return values.back(); }
};

ForwardPass mlp_forward(const MLPModel& model, const Eigen::VectorXd& x);

/// delta_i^(k) x_j^(k) for every layer: the weight change per unit learning
/// rate prescribed by the generalized delta rule. Equals minus the gradient of
/// 0.5 * ||d - y||^2.
std::vector<Eigen::MatrixXd> mlp_gradient(const MLPModel& model, const Eigen::VectorXd& x, const Eigen::VectorXd& d);

/// One stochastic step w += eta * mlp_gradient(x, d). Returns max_i |delta_i^(M)|.
double mlp_update(MLPModel& model, const Eigen::VectorXd& x, const Eigen::VectorXd& d, double eta);

struct TrainingTrace {
    std::vector<double> epoch_error;  // delta(t): largest |output delta| over the epoch
    std::vector<double> mean_error;   // mean over patterns of the largest |output delta|
    std::vector<double> validation_accuracy;
    int best_epoch = 0;  // epoch whose weights were returned (0 = initial)
    std::string stop_reason;
};

struct MLPTrainResult {
    MLPModel model;
    TrainingTrace trace;
};

/// Stochastic backpropagation with a shuffled pattern order every epoch.
/// Stops when delta(t) <= tolerance, after max_epochs, or when the held-out
/// validation accuracy has not improved for `patience` epochs; with a
/// validation split the best-validation weights are returned.
MLPTrainResult mlp_train(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                         std::span<const int> layer_sizes, const TrainConfig& cfg);

/// Index of the largest output.
int mlp_predict(const MLPModel& model, const Eigen::VectorXd& x);
double mlp_accuracy(const MLPModel& model, const Eigen::MatrixXd& inputs, std::span<const int> classes);

/// Row i has a 1 in column classes[i].
Eigen::MatrixXd one_hot(std::span<const int> classes, int n_classes);

void save_mlp(const MLPModel& model, const std::filesystem::path& path);
MLPModel load_mlp(const std::filesystem::path& path);

}  // namespace triage
