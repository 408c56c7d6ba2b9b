#include "triage/kohonen.hpp"

#include "triage/error.hpp"
#include "triage/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace triage {

using json = nlohmann::json;

double SOMSchedule::sigma(double t) const { return sigma0 * std::exp(-t / tau1); }

double SOMSchedule::eta(double t) const { return eta0 * std::exp(-t / tau2); }

double SOMSchedule::neighborhood(double grid_distance, double t) const {
    const double s = sigma(t);
    return std::exp(-grid_distance * grid_distance / (2.0 * s * s));
}

SOMSchedule default_schedule(int grid_rows, int grid_cols, int max_epochs) {
    const double budget = std::max(1, max_epochs);
    SOMSchedule s;
    s.eta0 = 0.1;
    s.sigma0 = std::max(0.5, 0.5 * std::hypot(grid_rows - 1, grid_cols - 1));
    s.tau1 = s.sigma0 > 1.0 ? budget / std::log(s.sigma0) : budget;
    s.tau2 = budget;
    return s;
}

SOMModel som_init(int grid_rows, int grid_cols, const Eigen::MatrixXd& data, const SOMSchedule& schedule,
                  std::uint64_t seed) {
    if (grid_rows < 1 || grid_cols < 1) throw std::invalid_argument("SOM grid must be at least 1 x 1");
    if (data.rows() == 0) throw DataError("SOM initialization needs data");
    const Eigen::Index m = static_cast<Eigen::Index>(grid_rows) * grid_cols;

    SOMModel model;
    model.grid_rows = grid_rows;
    model.grid_cols = grid_cols;
    model.schedule = schedule;
    model.positions.resize(m, 2);
    for (int r = 0; r < grid_rows; ++r)
        for (int c = 0; c < grid_cols; ++c) model.positions.row(r * grid_cols + c) << r, c;

    Eigen::RowVectorXd lo = data.colwise().minCoeff();
    Eigen::RowVectorXd hi = data.colwise().maxCoeff();
    for (Eigen::Index j = 0; j < lo.size(); ++j)
        if (hi[j] == lo[j]) {
            lo[j] -= 0.5;
            hi[j] += 0.5;
        }

    Rng rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    model.codebook.resize(m, data.cols());
    for (Eigen::Index i = 0; i < m; ++i) {
        for (;;) {
            for (Eigen::Index j = 0; j < data.cols(); ++j) model.codebook(i, j) = lo[j] + u(rng) * (hi[j] - lo[j]);
            bool distinct = true;
            for (Eigen::Index p = 0; p < i && distinct; ++p)
                distinct = model.codebook.row(p) != model.codebook.row(i);
            if (distinct) break;
        }
    }
    return model;
}

Eigen::VectorXd som_outputs(const SOMModel& model, const Eigen::VectorXd& x) {
    if (x.size() != model.dim()) throw DataError("SOM input dimension mismatch");
    return (-(model.codebook.rowwise() - x.transpose()).rowwise().squaredNorm()).array().exp();
}

Eigen::Index som_winner(const SOMModel& model, const Eigen::VectorXd& x) {
    if (x.size() != model.dim()) throw DataError("SOM input dimension mismatch");
    Eigen::Index best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < model.neurons(); ++i) {
        const double d = (model.codebook.row(i) - x.transpose()).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

SOMTrainResult som_train(const Eigen::MatrixXd& data, SOMModel model, const SOMTrainConfig& cfg) {
    if (data.rows() == 0) throw DataError("SOM training on empty data");
    if (data.cols() != model.dim()) throw DataError("SOM data dimension mismatch");
    const double threshold = cfg.stop_threshold.value_or(1e-9 * static_cast<double>(model.codebook.size()));

    Rng rng(cfg.seed);
    std::vector<Eigen::Index> order(data.rows());
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    // Squared grid distances between every pair of neurons.
    const Eigen::Index m = model.neurons();
    Eigen::MatrixXd grid_d2(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index k = 0; k < m; ++k) grid_d2(i, k) = (model.positions.row(i) - model.positions.row(k)).squaredNorm();

    SOMTrainResult res;
    for (int t = 0; t < cfg.max_epochs; ++t) {
        const double eta = model.schedule.eta(t);
        const double s = model.schedule.sigma(t);
        std::shuffle(order.begin(), order.end(), rng);
        double adjustment = 0;
        for (auto l : order) {
            const Eigen::VectorXd x = data.row(l).transpose();
            const Eigen::Index k = som_winner(model, x);
            for (Eigen::Index i = 0; i < m; ++i) {
                const double h = std::exp(-grid_d2(i, k) / (2.0 * s * s));
                const Eigen::RowVectorXd dw = eta * h * (x.transpose() - model.codebook.row(i));
                model.codebook.row(i) += dw;
                adjustment += dw.cwiseAbs().sum();
            }
        }
        res.adjustment.push_back(adjustment);
        res.epochs = t + 1;
        if (adjustment <= threshold) break;
    }
    res.model = std::move(model);
    return res;
}

double quantization_error(const SOMModel& model, const Eigen::MatrixXd& data) {
    if (data.rows() == 0) return 0.0;
    double total = 0;
    for (Eigen::Index l = 0; l < data.rows(); ++l) {
        const Eigen::VectorXd x = data.row(l).transpose();
        total += (model.codebook.row(som_winner(model, x)) - x.transpose()).norm();
    }
    return total / static_cast<double>(data.rows());
}

namespace {

void check_classes(std::span<const int> classes, Eigen::Index rows, int n_classes) {
    if (static_cast<Eigen::Index>(classes.size()) != rows) throw DataError("class list does not match pattern count");
    for (int c : classes)
        if (c < 0 || c >= n_classes) throw DataError("pattern class " + std::to_string(c) + " outside the class universe");
}

}  // namespace

NeuronClassMap label_neurons(const SOMModel& model, const Eigen::MatrixXd& data, std::span<const int> classes,
                             int n_classes) {
    if (data.rows() == 0) throw DataError("cannot label neurons without data");
    check_classes(classes, data.rows(), n_classes);
    const Eigen::Index m = model.neurons();
    Eigen::MatrixXi votes = Eigen::MatrixXi::Zero(m, n_classes);
    for (Eigen::Index l = 0; l < data.rows(); ++l) ++votes(som_winner(model, data.row(l).transpose()), classes[l]);

    NeuronClassMap map{std::vector<int>(m, -1), n_classes};
    for (Eigen::Index i = 0; i < m; ++i) {
        int best = -1;
        for (int c = 0; c < n_classes; ++c)
            if (votes(i, c) > 0 && (best < 0 || votes(i, c) > votes(i, best))) best = c;
        map.labels[i] = best;
    }
    const std::vector<int> voted = map.labels;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (voted[i] >= 0) continue;
        double best_d = std::numeric_limits<double>::infinity();
        int best_c = -1;
        for (Eigen::Index k = 0; k < m; ++k) {
            if (voted[k] < 0) continue;
            const double d = (model.positions.row(i) - model.positions.row(k)).squaredNorm();
            if (d < best_d || (d == best_d && voted[k] < best_c)) {
                best_d = d;
                best_c = voted[k];
            }
        }
        map.labels[i] = best_c;
    }
    return map;
}

void lvq_update(SOMModel& model, const NeuronClassMap& map, const Eigen::VectorXd& x, int cls, double eta) {
    if (cls < 0 || cls >= map.n_classes) throw DataError("pattern class outside the class universe");
    const Eigen::Index i = som_winner(model, x);
    const double sign = map.labels[i] == cls ? 1.0 : -1.0;
    model.codebook.row(i) += sign * eta * (x.transpose() - model.codebook.row(i));
}

int som_lvq_classify(const SOMModel& model, const NeuronClassMap& map, const Eigen::VectorXd& x) {
    return map.labels.at(som_winner(model, x));
}

double som_lvq_accuracy(const SOMModel& model, const NeuronClassMap& map, const Eigen::MatrixXd& data,
                        std::span<const int> classes) {
    if (data.rows() == 0) return 0.0;
    Eigen::Index hits = 0;
    for (Eigen::Index l = 0; l < data.rows(); ++l) hits += som_lvq_classify(model, map, data.row(l).transpose()) == classes[l];
    return static_cast<double>(hits) / static_cast<double>(data.rows());
}

LVQTrainResult lvq_train(SOMModel model, const NeuronClassMap& map, const Eigen::MatrixXd& data,
                         std::span<const int> classes, const LVQConfig& cfg) {
    if (data.rows() == 0) throw DataError("LVQ training on empty data");
    check_classes(classes, data.rows(), map.n_classes);
    if (static_cast<Eigen::Index>(map.labels.size()) != model.neurons()) throw DataError("class map does not match SOM");

    Rng rng(cfg.seed);
    std::vector<Eigen::Index> order(data.rows());
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    LVQTrainResult res;
    double error = 1.0 - som_lvq_accuracy(model, map, data, classes);
    for (int e = 0; e < cfg.epochs && error > cfg.error_threshold; ++e) {
        const double eta = cfg.eta_start * (1.0 - static_cast<double>(e) / cfg.epochs);
        std::shuffle(order.begin(), order.end(), rng);
        for (auto l : order) lvq_update(model, map, data.row(l).transpose(), classes[l], eta);
        error = 1.0 - som_lvq_accuracy(model, map, data, classes);
        res.error_rate.push_back(error);
        res.epochs = e + 1;
    }
    res.model = std::move(model);
    return res;
}

void save_som(const SOMModel& model, const NeuronClassMap& map, const std::filesystem::path& path) {
    json j;
    j["schema_version"] = 1;
    j["kind"] = "som_lvq";
    j["grid"] = {model.grid_rows, model.grid_cols};
    j["dim"] = model.dim();
    std::vector<double> pos, book;
    for (Eigen::Index i = 0; i < model.neurons(); ++i) {
        pos.push_back(model.positions(i, 0));
        pos.push_back(model.positions(i, 1));
        for (Eigen::Index c = 0; c < model.dim(); ++c) book.push_back(model.codebook(i, c));
    }
    j["positions"] = pos;
    j["codebook"] = book;
    j["schedule"] = {{"eta0", model.schedule.eta0},
                     {"sigma0", model.schedule.sigma0},
                     {"tau1", model.schedule.tau1},
                     {"tau2", model.schedule.tau2}};
    j["n_classes"] = map.n_classes;
    j["neuron_classes"] = map.labels;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

std::pair<SOMModel, NeuronClassMap> load_som(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    try {
        const json j = json::parse(in);
        if (j.at("schema_version").get<int>() != 1 || j.at("kind") != "som_lvq")
            throw FormatError("unsupported SOM schema in " + path.string());
        SOMModel m;
        const auto grid = j.at("grid").get<std::vector<int>>();
        if (grid.size() != 2) throw FormatError("bad SOM grid in " + path.string());
        m.grid_rows = grid[0];
        m.grid_cols = grid[1];
        const auto dim = j.at("dim").get<Eigen::Index>();
        const Eigen::Index n = static_cast<Eigen::Index>(m.grid_rows) * m.grid_cols;
        const auto pos = j.at("positions").get<std::vector<double>>();
        const auto book = j.at("codebook").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(pos.size()) != 2 * n || static_cast<Eigen::Index>(book.size()) != n * dim)
            throw FormatError("inconsistent SOM sizes in " + path.string());
        using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
        m.positions = Eigen::Map<const RowMajor>(pos.data(), n, 2);
        m.codebook = Eigen::Map<const RowMajor>(book.data(), n, dim);
        const auto& s = j.at("schedule");
        m.schedule = {s.at("eta0").get<double>(), s.at("sigma0").get<double>(), s.at("tau1").get<double>(),
                      s.at("tau2").get<double>()};
        NeuronClassMap map{j.at("neuron_classes").get<std::vector<int>>(), j.at("n_classes").get<int>()};
        if (static_cast<Eigen::Index>(map.labels.size()) != n) throw FormatError("bad neuron class map in " + path.string());
        return {std::move(m), std::move(map)};
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed SOM file: ") + e.what());
    }
}

}  // namespace triage
