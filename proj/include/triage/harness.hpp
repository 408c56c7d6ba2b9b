#pragma once

#include "triage/features.hpp"
#include "triage/feedforward.hpp"
#include "triage/kohonen.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace triage {

// --- split ---------------------------------------------------------------------

struct SplitSpec {
    double test_fraction = 0.19;
    bool stratified = true;
    std::uint64_t seed = 0;
};

/// Row indices of the two partitions, each sorted ascending.
struct Split {
    std::vector<Eigen::Index> train;
    std::vector<Eigen::Index> test;
};

/// Seeded shuffle then partition. The test set holds ceil(fraction * rows)
/// rows. When stratified, those rows are spread evenly over the classes if
/// that keeps every class within one row of its proportional share
/// (fraction * class size); otherwise they are allocated proportionally by
/// largest remainder.
Split split_dataset(const LabeledFeatureMatrix& m, const SplitSpec& spec);

/// Test rows per class (indexed like LabeledFeatureMatrix::classes()).
std::vector<Eigen::Index> test_allocation(std::span<const Eigen::Index> class_sizes, double test_fraction);

// --- classifiers and trials -------------------------------------------------------

enum class ClassifierKind { mlp, som_lvq };

std::string_view to_string(ClassifierKind kind);
ClassifierKind parse_classifier(std::string_view name);

struct ClassifierConfig {
    TrainConfig mlp;
    int som_epochs = 100;
    std::optional<double> som_eta0;  // default_schedule() when unset
    LVQConfig lvq;
};

/// Train/test matrices with integer class labels for one attribute set.
struct Dataset {
    Eigen::MatrixXd train_x;
    std::vector<int> train_y;
    Eigen::MatrixXd test_x;
    std::vector<int> test_y;
    int n_classes = 0;
    std::vector<std::string> class_names;

    Eigen::Index attributes() const noexcept { return train_x.cols(); }
};

Dataset make_dataset(const LabeledFeatureMatrix& m, const Split& split);

struct TrainedModel {
    ClassifierKind kind = ClassifierKind::mlp;
    MLPModel mlp;
    SOMModel som;
    NeuronClassMap classes;
};

struct TrialOutcome {
    double accuracy = 0;
    std::optional<TrainedModel> model;
};

/// Trains one network with `hidden` hidden units (MLP) or neurons (SOM-LVQ
/// line) and scores it on the test rows.
using Trainer = std::function<TrialOutcome(const Dataset&, ClassifierKind, int hidden, std::uint64_t seed,
                                           const ClassifierConfig&)>;

TrialOutcome train_and_score(const Dataset& data, ClassifierKind kind, int hidden, std::uint64_t seed,
                             const ClassifierConfig& cfg);

struct TrialResult {
    ClassifierKind kind = ClassifierKind::mlp;
    int attributes = 0;  // m
    int hidden = 0;      // n
    int rep = 0;
    std::uint64_t seed = 0;
    double accuracy = 0;  // eta in [0, 1]
    double seconds = 0;
    bool failed = false;
    std::string error;
};

enum class Selection {
    peak,  // highest single-trial accuracy
    mean,  // hidden size with the best mean accuracy, then its best trial
};

struct SweepConfig {
    ClassifierKind kind = ClassifierKind::mlp;
    std::vector<int> hidden_sizes;
    int reps = 20;
    std::uint64_t master_seed = 0;
    unsigned workers = 1;
    Selection selection = Selection::peak;
    bool record_timing = false;
    ClassifierConfig classifier;
};

struct SweepResult {
    std::vector<TrialResult> trials;  // hidden-major, then rep
    TrialResult best;
    std::optional<TrainedModel> best_model;
};

std::vector<int> hidden_range(int from, int to);

/// Seed for one trial, derived only from the master seed and the trial's coordinates.
std::uint64_t trial_seed(std::uint64_t master, int stage, ClassifierKind kind, int attributes, int hidden, int rep);

/// |hidden_sizes| x reps independent trials. Failures are recorded, not
/// thrown. Best trial: highest accuracy, then smaller hidden size, then lower
/// seed. The best network is retrained from its seed to return the model.
SweepResult run_sweep(const Dataset& data, const SweepConfig& cfg, const Trainer& trainer = train_and_score);

struct Stats {
    double mean = 0;
    double stddev = 0;  // sample (n - 1) standard deviation; 0 for one value
    double median = 0;
};

Stats describe(std::span<const double> values);

/// One row of the results tables.
struct SweepSummary {
    ClassifierKind kind = ClassifierKind::mlp;
    int attributes = 0;
    double best_accuracy = 0;  // eta_OTM
    int best_hidden = 0;       // n_OTM
    Stats stats;               // over `accuracies`
    std::vector<double> accuracies;
};

SweepSummary summarize_sweep(const SweepResult& sweep);

/// Retrains the chosen architecture `reps` times with fresh seeds and
/// summarizes the test accuracies. best_accuracy is the best rerun. reps >= 2.
SweepSummary rerun_best(const Dataset& data, ClassifierKind kind, int hidden, int reps, std::uint64_t master_seed,
                        const ClassifierConfig& cfg, unsigned workers = 1, const Trainer& trainer = train_and_score);

enum class ReportFormat { text, markdown };

/// Rows ordered MLP before SOM-LVQ, then by m ascending; percentages with two decimals.
std::string render_report(std::span<const SweepSummary> summaries, ReportFormat format = ReportFormat::text,
                          std::string_view title = {});
std::string render_row(const SweepSummary& s, ReportFormat format = ReportFormat::text);

// Versioned JSON list of summaries.
void save_summaries(std::span<const SweepSummary> summaries, const std::filesystem::path& path);
std::vector<SweepSummary> load_summaries(const std::filesystem::path& path);

// CSV "classifier,m,hidden,rep,seed,accuracy,seconds".
void write_results_csv(std::ostream& out, std::span<const TrialResult> trials);
std::vector<TrialResult> read_results_csv(std::istream& in);

/// Accuracy of assigning each test row to the class with the nearest training
/// mean; a reference point for the networks.
double nearest_centroid_accuracy(const Dataset& data);

// --- experiment configuration ----------------------------------------------

enum class PcaFit { all_rows, train_rows };

struct ExperimentConfig {
    std::uint64_t seed = 0;
    bool has_seed = false;
    SplitSpec split;
    int hidden_from = 10;
    int hidden_to = 30;
    int reps = 20;
    int rerun_reps = 20;
    std::vector<ClassifierKind> classifiers{ClassifierKind::mlp, ClassifierKind::som_lvq};
    bool raw_arm = true;  // m = all attributes
    bool pca_arm = true;  // m = pca_components
    int pca_components = 50;
    std::optional<double> pca_variance;  // overrides pca_components when set
    PcaFit pca_fit = PcaFit::all_rows;
    Selection selection = Selection::peak;
    unsigned workers = 1;
    bool record_timing = false;
    ClassifierConfig classifier;
};

/// JSON object; every key is optional and falls back to the defaults above.
ExperimentConfig parse_experiment_config(std::string_view json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
std::string dump_experiment_config(const ExperimentConfig& cfg);

struct Arm {
    int attributes = 0;
    Dataset data;
    std::optional<PCABasis> basis;
};

/// Splits once with the master seed, then builds the PCA arm and the raw arm
/// (PCA first, matching the report order 50 before 75).
std::vector<Arm> prepare_arms(const LabeledFeatureMatrix& m, const ExperimentConfig& cfg);

}  // namespace triage
