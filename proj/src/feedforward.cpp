#include "triage/feedforward.hpp"

#include "triage/error.hpp"
#include "triage/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace triage {

using json = nlohmann::json;

std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::logistic: return "logistic";
        case Activation::tanh: return "tanh";
        case Activation::step: return "step";
    }
    return "?";
}

Activation parse_activation(std::string_view name) {
    if (name == "logistic") return Activation::logistic;
    if (name == "tanh") return Activation::tanh;
    if (name == "step") return Activation::step;
    throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

double activate(Activation kind, double a) {
    switch (kind) {
        case Activation::logistic: return 1.0 / (1.0 + std::exp(-a));
        case Activation::tanh: return std::tanh(a);
        case Activation::step: return a >= 0.0 ? 1.0 : 0.0;
    }
    return 0.0;
}

double activation_derivative(Activation kind, double a) {
    return kind == Activation::step ? 0.0 : derivative_from_output(kind, activate(kind, a));
}

double derivative_from_output(Activation kind, double y) {
    switch (kind) {
        case Activation::logistic: return y * (1.0 - y);
        case Activation::tanh: return 1.0 - y * y;
        case Activation::step: return 0.0;
    }
    return 0.0;
}

namespace {

Eigen::MatrixXd random_weights(Eigen::Index rows, Eigen::Index cols, double range, Rng& rng) {
    std::uniform_real_distribution<double> u(-range, range);
    const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
    Eigen::MatrixXd w(rows, cols);
    // Row-major fill keeps the draw order independent of Eigen's storage order.
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) w(r, c) = u(rng) * scale;
    return w;
}

void check_dataset(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets) {
    if (inputs.rows() == 0) throw DataError("empty training set");
    if (inputs.rows() != targets.rows())
        throw DataError("inputs and targets have different pattern counts");
}

// Weighted input for one layer: W [x; 1] (or W x without bias).
Eigen::VectorXd weighted_sum(const Eigen::MatrixXd& w, const Eigen::VectorXd& x, bool bias) {
    if (bias) return w.leftCols(x.size()) * x + w.col(x.size());
    return w * x;
}

Eigen::VectorXd augmented(const Eigen::VectorXd& x, bool bias) {
    if (!bias) return x;
    Eigen::VectorXd out(x.size() + 1);
    out << x, 1.0;
    return out;
}

std::vector<Eigen::Index> shuffled_indices(Eigen::Index n, Rng& rng) {
    std::vector<Eigen::Index> idx(n);
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    return idx;
}

int argmax(const Eigen::VectorXd& v) {
    Eigen::Index i = 0;
    v.maxCoeff(&i);
    return static_cast<int>(i);
}

}  // namespace

Eigen::VectorXd perceptron_output(const PerceptronModel& model, const Eigen::VectorXd& x) {
    if (x.size() != model.inputs()) throw DataError("perceptron input dimension mismatch");
    return weighted_sum(model.weights, x, model.bias).unaryExpr([](double a) { return activate(Activation::step, a); });
}

PerceptronResult perceptron_train(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                                  const TrainConfig& cfg) {
    check_dataset(inputs, targets);
    if (((targets.array() != 0.0) && (targets.array() != 1.0)).any())
        throw DataError("perceptron targets must be 0 or 1");

    Rng rng(derive_seed(cfg.seed, {0}));
    PerceptronResult res;
    res.model.bias = cfg.bias;
    res.model.weights = random_weights(targets.cols(), inputs.cols() + (cfg.bias ? 1 : 0), cfg.init_range, rng);

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        double epoch_error = 0;
        for (Eigen::Index l = 0; l < inputs.rows(); ++l) {
            const Eigen::VectorXd x = inputs.row(l).transpose();
            const Eigen::VectorXd delta = targets.row(l).transpose() - perceptron_output(res.model, x);
            res.model.weights.noalias() += cfg.learning_rate * delta * augmented(x, cfg.bias).transpose();
            epoch_error = std::max(epoch_error, delta.cwiseAbs().maxCoeff());
        }
        res.epochs = epoch + 1;
        if (epoch_error <= cfg.tolerance) {
            res.converged = true;
            break;
        }
    }
    return res;
}

MLPModel mlp_init(std::span<const int> layer_sizes, const TrainConfig& cfg) {
    if (layer_sizes.size() < 2) throw std::invalid_argument("an MLP needs at least input and output layers");
    if (std::any_of(layer_sizes.begin(), layer_sizes.end(), [](int n) { return n < 1; }))
        throw std::invalid_argument("MLP layer sizes must be >= 1");
    Rng rng(derive_seed(cfg.seed, {0}));
    MLPModel m;
    m.layer_sizes.assign(layer_sizes.begin(), layer_sizes.end());
    m.bias = cfg.bias;
    for (std::size_t k = 0; k + 1 < layer_sizes.size(); ++k) {
        m.weights.push_back(random_weights(layer_sizes[k + 1], layer_sizes[k] + (cfg.bias ? 1 : 0), cfg.init_range, rng));
        m.activations.push_back(Activation::logistic);
    }
    return m;
}

ForwardPass mlp_forward(const MLPModel& model, const Eigen::VectorXd& x) {
    if (x.size() != model.inputs())
        throw DataError("MLP expects " + std::to_string(model.inputs()) + " inputs, got " + std::to_string(x.size()));
    ForwardPass pass;
    pass.values.reserve(model.layers() + 1);
    pass.values.push_back(x);
    for (std::size_t k = 0; k < model.layers(); ++k) {
        const Activation g = model.activations[k];
        pass.values.push_back(
            weighted_sum(model.weights[k], pass.values.back(), model.bias).unaryExpr([g](double a) { return activate(g, a); }));
    }
    return pass;
}

namespace {

// Backpropagated deltas, output layer last.
std::vector<Eigen::VectorXd> deltas(const MLPModel& model, const ForwardPass& pass, const Eigen::VectorXd& d) {
    const std::size_t layers = model.layers();
    std::vector<Eigen::VectorXd> delta(layers);
    auto gprime = [&](std::size_t k) {
        const Activation g = model.activations[k];
        return pass.values[k + 1].unaryExpr([g](double y) { return derivative_from_output(g, y); });
    };
    delta[layers - 1] = (d - pass.output()).cwiseProduct(gprime(layers - 1));
    for (std::size_t k = layers - 1; k-- > 0;) {
        const auto& w_next = model.weights[k + 1];
        delta[k] = gprime(k).cwiseProduct(w_next.leftCols(model.layer_sizes[k + 1]).transpose() * delta[k + 1]);
    }
    return delta;
}

}  // namespace

std::vector<Eigen::MatrixXd> mlp_gradient(const MLPModel& model, const Eigen::VectorXd& x, const Eigen::VectorXd& d) {
    if (d.size() != model.outputs()) throw DataError("MLP target dimension mismatch");
    const ForwardPass pass = mlp_forward(model, x);
    const auto delta = deltas(model, pass, d);
    std::vector<Eigen::MatrixXd> grads;
    grads.reserve(model.layers());
    for (std::size_t k = 0; k < model.layers(); ++k)
        grads.push_back(delta[k] * augmented(pass.values[k], model.bias).transpose());
    return grads;
}

double mlp_update(MLPModel& model, const Eigen::VectorXd& x, const Eigen::VectorXd& d, double eta) {
    if (d.size() != model.outputs()) throw DataError("MLP target dimension mismatch");
    const ForwardPass pass = mlp_forward(model, x);
    const auto delta = deltas(model, pass, d);
    for (std::size_t k = 0; k < model.layers(); ++k) {
        const Eigen::Index n = model.layer_sizes[k];
        auto& w = model.weights[k];
        w.leftCols(n).noalias() += eta * delta[k] * pass.values[k].transpose();
        if (model.bias) w.col(n) += eta * delta[k];
    }
    return delta.back().cwiseAbs().maxCoeff();
}

int mlp_predict(const MLPModel& model, const Eigen::VectorXd& x) {
    return argmax(mlp_forward(model, x).output());
}

double mlp_accuracy(const MLPModel& model, const Eigen::MatrixXd& inputs, std::span<const int> classes) {
    if (inputs.rows() == 0) return 0.0;
    Eigen::Index hits = 0;
    for (Eigen::Index i = 0; i < inputs.rows(); ++i)
        hits += mlp_predict(model, inputs.row(i).transpose()) == classes[i];
    return static_cast<double>(hits) / static_cast<double>(inputs.rows());
}

Eigen::MatrixXd one_hot(std::span<const int> classes, int n_classes) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(classes.size()), n_classes);
    for (std::size_t i = 0; i < classes.size(); ++i) {
        if (classes[i] < 0 || classes[i] >= n_classes) throw DataError("class index out of range");
        out(static_cast<Eigen::Index>(i), classes[i]) = 1.0;
    }
    return out;
}

MLPTrainResult mlp_train(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                         std::span<const int> layer_sizes, const TrainConfig& cfg) {
    check_dataset(inputs, targets);
    if (layer_sizes.front() != inputs.cols() || layer_sizes.back() != targets.cols())
        throw DataError("layer sizes do not match data dimensions");
    if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be > 0");
    if (!(cfg.validation_fraction >= 0.0 && cfg.validation_fraction < 1.0))
        throw std::invalid_argument("validation fraction must be in [0, 1)");

    MLPTrainResult res{mlp_init(layer_sizes, cfg), {}};
    auto& trace = res.trace;

    Rng split_rng(derive_seed(cfg.seed, {1}));
    Rng order_rng(derive_seed(cfg.seed, {2}));
    auto order = shuffled_indices(inputs.rows(), split_rng);
    Eigen::Index n_val = 0;
    if (cfg.validation_fraction > 0.0 && inputs.rows() >= 2)
        n_val = std::clamp<Eigen::Index>(std::llround(cfg.validation_fraction * inputs.rows()), 1, inputs.rows() - 1);
    std::vector<Eigen::Index> val(order.begin(), order.begin() + n_val);
    std::vector<Eigen::Index> fit(order.begin() + n_val, order.end());
    std::sort(fit.begin(), fit.end());

    std::vector<int> val_classes;
    for (auto i : val) val_classes.push_back(argmax(targets.row(i).transpose()));
    auto validation_accuracy = [&] {
        Eigen::Index hits = 0;
        for (std::size_t v = 0; v < val.size(); ++v)
            hits += mlp_predict(res.model, inputs.row(val[v]).transpose()) == val_classes[v];
        return static_cast<double>(hits) / static_cast<double>(val.size());
    };

    MLPModel best = res.model;
    double best_acc = n_val > 0 ? validation_accuracy() : 0.0;
    int stale = 0;
    trace.stop_reason = "max_epochs";

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::shuffle(fit.begin(), fit.end(), order_rng);
        double worst = 0, sum = 0;
        for (auto l : fit) {
            const double e = mlp_update(res.model, inputs.row(l).transpose(), targets.row(l).transpose(), cfg.learning_rate);
            worst = std::max(worst, e);
            sum += e;
        }
        if (!std::isfinite(worst)) throw std::runtime_error("MLP training diverged");
        trace.epoch_error.push_back(worst);
        trace.mean_error.push_back(sum / static_cast<double>(fit.size()));

        if (n_val > 0) {
            const double acc = validation_accuracy();
            trace.validation_accuracy.push_back(acc);
            if (acc > best_acc) {
                best_acc = acc;
                best = res.model;
                trace.best_epoch = epoch;
                stale = 0;
            } else if (++stale >= cfg.patience) {
                trace.stop_reason = "early_stopping";
                break;
            }
        } else {
            trace.best_epoch = epoch;
        }
        if (worst <= cfg.tolerance) {
            trace.stop_reason = "tolerance";
            break;
        }
    }
    if (n_val > 0) res.model = std::move(best);
    return res;
}

void save_mlp(const MLPModel& model, const std::filesystem::path& path) {
    json j;
    j["schema_version"] = 1;
    j["kind"] = "mlp";
    j["layer_sizes"] = model.layer_sizes;
    j["bias"] = model.bias;
    json acts = json::array();
    for (auto a : model.activations) acts.push_back(std::string(to_string(a)));
    j["activations"] = acts;
    json layers = json::array();
    for (const auto& w : model.weights) {
        std::vector<double> flat;
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) flat.push_back(w(r, c));
        layers.push_back({{"rows", w.rows()}, {"cols", w.cols()}, {"values", flat}});
    }
    j["weights"] = layers;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

MLPModel load_mlp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    try {
        const json j = json::parse(in);
        if (j.at("schema_version").get<int>() != 1 || j.at("kind") != "mlp")
            throw FormatError("unsupported MLP schema in " + path.string());
        MLPModel m;
        m.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
        m.bias = j.at("bias").get<bool>();
        for (const auto& a : j.at("activations")) m.activations.push_back(parse_activation(a.get<std::string>()));
        std::size_t k = 0;
        for (const auto& layer : j.at("weights")) {
            const auto rows = layer.at("rows").get<Eigen::Index>();
            const auto cols = layer.at("cols").get<Eigen::Index>();
            const auto values = layer.at("values").get<std::vector<double>>();
            if (k + 1 >= m.layer_sizes.size() || rows != m.layer_sizes[k + 1] ||
                cols != m.layer_sizes[k] + (m.bias ? 1 : 0) || static_cast<Eigen::Index>(values.size()) != rows * cols)
                throw FormatError("inconsistent MLP weight shapes in " + path.string());
            m.weights.push_back(
                Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(values.data(), rows, cols));
            ++k;
        }
        if (m.weights.size() + 1 != m.layer_sizes.size() || m.activations.size() != m.weights.size())
            throw FormatError("MLP layer count mismatch in " + path.string());
        return m;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed MLP file: ") + e.what());
    }
}

}  // namespace triage
