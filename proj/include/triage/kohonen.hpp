#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace triage {

struct SOMSchedule {
    double eta0 = 0.1;    // initial learning rate, 0 < eta0 < 1
    double sigma0 = 1.0;  // initial neighborhood width
    double tau1 = 1.0;    // width time constant
    double tau2 = 1.0;    // learning-rate time constant

    /// sigma(t) = sigma0 exp(-t / tau1)
    double sigma(double t) const;
    /// eta(t) = eta0 exp(-t / tau2)
    double eta(double t) const;
    /// h(t) = exp(-d^2 / (2 sigma(t)^2)) for grid distance d.
    double neighborhood(double grid_distance, double t) const;
};

/// Defaults for an epoch budget: sigma0 = half the grid diagonal (at least
/// 0.5), tau1 = max_epochs / ln(sigma0) (max_epochs when sigma0 <= 1),
/// tau2 = max_epochs, eta0 = 0.1.
SOMSchedule default_schedule(int grid_rows, int grid_cols, int max_epochs);

/// Kohonen map: neurons on a rows x cols grid (a 1 x m grid is a line).
struct SOMModel {
    int grid_rows = 1;
    int grid_cols = 1;
    Eigen::MatrixXd positions;  // m x 2 grid coordinates (row, col)
    Eigen::MatrixXd codebook;   // m x n, one weight vector per neuron
    SOMSchedule schedule;

    Eigen::Index neurons() const noexcept { return codebook.rows(); }
    Eigen::Index dim() const noexcept { return codebook.cols(); }
};

/// Codebook drawn uniformly inside the per-dimension range of `data`; all
/// vectors are distinct. Neurons are numbered row-major over the grid.
SOMModel som_init(int grid_rows, int grid_cols, const Eigen::MatrixXd& data, const SOMSchedule& schedule,
                  std::uint64_t seed);

/// y_i = exp(-||x - w_i||^2)
Eigen::VectorXd som_outputs(const SOMModel& model, const Eigen::VectorXd& x);
/// argmin_i ||x - w_i||, lowest index on ties.
Eigen::Index som_winner(const SOMModel& model, const Eigen::VectorXd& x);

struct SOMTrainConfig {
    int max_epochs = 100;
    /// Stop once the epoch adjustment sum_ij |dw_ij| is at or below this.
    /// Unset means 1e-9 times the number of weights.
    std::optional<double> stop_threshold;
    std::uint64_t seed = 0;  // pattern order
};

struct SOMTrainResult {
    SOMModel model;
    std::vector<double> adjustment;  // delta(t) per epoch
    int epochs = 0;
};

/// Online training: for each pattern, every neuron moves by
/// eta(t) h_ik(t) (x - w_i) toward it, k being the winner; t counts epochs.
SOMTrainResult som_train(const Eigen::MatrixXd& data, SOMModel model, const SOMTrainConfig& cfg);

/// Mean distance from each pattern to its winning codebook vector.
double quantization_error(const SOMModel& model, const Eigen::MatrixXd& data);

/// Class per neuron, or -1 while unlabeled.
struct NeuronClassMap {
    std::vector<int> labels;
    int n_classes = 0;
};

/// Majority class among the patterns each neuron wins (lowest class index on
/// ties). Neurons that win nothing take the class of the nearest labeled
/// neuron on the grid (lowest class index among equally near ones).
NeuronClassMap label_neurons(const SOMModel& model, const Eigen::MatrixXd& data, std::span<const int> classes,
                             int n_classes);

struct LVQConfig {
    int epochs = 50;
    double eta_start = 0.05;  // decays linearly to 0 over the epoch budget
    /// Stop once the training error rate is at or below this.
    double error_threshold = 0.0;
    std::uint64_t seed = 0;
};

/// Moves only the winner: w += eta (x - w) when its class matches, w -= eta (x - w) otherwise.
void lvq_update(SOMModel& model, const NeuronClassMap& map, const Eigen::VectorXd& x, int cls, double eta);

struct LVQTrainResult {
    SOMModel model;
    std::vector<double> error_rate;  // training error after each epoch
    int epochs = 0;
};

LVQTrainResult lvq_train(SOMModel model, const NeuronClassMap& map, const Eigen::MatrixXd& data,
                         std::span<const int> classes, const LVQConfig& cfg);

/// Class of the winning neuron.
int som_lvq_classify(const SOMModel& model, const NeuronClassMap& map, const Eigen::VectorXd& x);
double som_lvq_accuracy(const SOMModel& model, const NeuronClassMap& map, const Eigen::MatrixXd& data,
                        std::span<const int> classes);

void save_som(const SOMModel& model, const NeuronClassMap& map, const std::filesystem::path& path);
std::pair<SOMModel, NeuronClassMap> load_som(const std::filesystem::path& path);

}  // namespace triage
