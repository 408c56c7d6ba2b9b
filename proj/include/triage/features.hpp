#pragma once

#include "triage/image.hpp"
#include "triage/morphology.hpp"
#include "triage/segmentation.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace triage {

struct FeatureConfig {
    int clusters = 4;
    int spectrum_bins = 25;  // K per band
    SeKind se = SeKind::cross3;
    BackgroundRule background = BackgroundRule::largest;
    std::uint64_t seed = 0;
    double kmeans_tol = 1e-6;
    int kmeans_max_iter = 300;
};

/// Concatenated per-band pattern spectra (R | G | B).
struct FeatureVector {
    Eigen::VectorXd values;
    std::string label;
    /// Set when a band had no usable foreground and its block was zero-filled.
    bool degenerate = false;
    std::vector<std::string> warnings;
};

/// Split into bands, cluster each band, drop its background cluster, and
/// take the pattern spectrum of what remains. Every band uses the same
/// k-means seed, so identical bands give identical blocks.
///
/// A band whose clustering has a single populated cluster, or whose masked
/// band has zero mass, contributes an all-zero block and marks the vector
/// degenerate instead of failing.
FeatureVector extract_feature_vector(const NormalizedImage& img, const FeatureConfig& cfg, std::string label = {});

/// Rows are images, columns are attributes.
struct LabeledFeatureMatrix {
    Eigen::MatrixXd data;
    std::vector<std::string> labels;
    std::vector<std::string> column_names;

    Eigen::Index rows() const noexcept { return data.rows(); }
    Eigen::Index cols() const noexcept { return data.cols(); }

    /// Distinct labels in lexicographic order.
    std::vector<std::string> classes() const;
    /// Position of each row's label in classes().
    std::vector<int> class_indices() const;
    LabeledFeatureMatrix select_rows(std::span<const Eigen::Index> rows) const;
};

/// f000, f001, ...
std::vector<std::string> default_column_names(Eigen::Index cols);

LabeledFeatureMatrix assemble_matrix(std::span<const FeatureVector> vectors);

// CSV: header "label,f000,...", one row per image, shortest round-trip decimals.
void write_feature_csv(std::ostream& out, const LabeledFeatureMatrix& m);
LabeledFeatureMatrix read_feature_csv(std::istream& in);
void save_feature_csv(const LabeledFeatureMatrix& m, const std::filesystem::path& path);
LabeledFeatureMatrix load_feature_csv(const std::filesystem::path& path);

struct PCABasis {
    Eigen::RowVectorXd mean;
    Eigen::MatrixXd components;  // input_dim x n_components, orthonormal columns
    Eigen::VectorXd explained_variance;

    Eigen::Index input_dim() const noexcept { return components.rows(); }
    Eigen::Index n_components() const noexcept { return components.cols(); }
};

/// Principal directions of the mean-centered columns (no scaling). Each
/// component's largest-magnitude coordinate is made positive.
/// Requires 1 <= n_components <= min(rows - 1, cols).
PCABasis pca_fit(const Eigen::MatrixXd& data, Eigen::Index n_components);
PCABasis pca_fit(const LabeledFeatureMatrix& m, Eigen::Index n_components);

/// Smallest component count whose cumulative explained variance reaches
/// `fraction` of the total.
Eigen::Index components_for_variance(const Eigen::MatrixXd& data, double fraction);

Eigen::MatrixXd pca_project(const PCABasis& b, const Eigen::MatrixXd& data);
Eigen::MatrixXd pca_reconstruct(const PCABasis& b, const Eigen::MatrixXd& scores);
LabeledFeatureMatrix pca_transform(const PCABasis& b, const LabeledFeatureMatrix& m);

// Versioned JSON: schema_version, mean, components (row-major), explained_variance.
void save_pca_basis(const PCABasis& b, const std::filesystem::path& path);
PCABasis load_pca_basis(const std::filesystem::path& path);

}  // namespace triage
