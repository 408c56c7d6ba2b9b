#pragma once

#include "triage/image.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace triage {

struct KMeansConfig {
    int k = 4;
    std::uint64_t seed = 0;
    double tol = 1e-6;  // on the largest centroid movement
    int max_iter = 300;
};

/// Scalar k-means result over the pixels of one band.
struct Clustering {
    Eigen::VectorXd centroids;
    Eigen::ArrayXXi labels;          // same grid as the band
    std::vector<Eigen::Index> sizes;  // pixel count per cluster
    int iterations = 0;
    bool degenerate = false;  // some cluster stayed empty after re-seeding
    std::vector<double> inertia;  // within-cluster SSE after every assignment

    int k() const noexcept { return static_cast<int>(centroids.size()); }
    int populated() const;
};

/// Lloyd iterations with k-means++ seeding. Ties in assignment go to the
/// lowest cluster index. An empty cluster is re-seeded at the pixel farthest
/// from its centroid, at most 3 times, after which the result is flagged
/// degenerate.
Clustering kmeans(const Band& band, const KMeansConfig& cfg);

enum class BackgroundRule {
    largest,    // most pixels
    brightest,  // highest centroid
};

/// Index of the background cluster; ties go to the lowest index.
int background_cluster(const Clustering& c, BackgroundRule rule = BackgroundRule::largest);

/// Zeroes the background cluster's pixels and keeps the rest untouched.
/// Throws DataError if fewer than two clusters are populated.
Band remove_largest_cluster(const Band& band, const Clustering& c, BackgroundRule rule = BackgroundRule::largest);

/// Cluster labels as an 8-bit PGM, index i drawn as gray 255 * i / (k - 1).
void save_label_map(const Clustering& c, const std::filesystem::path& path);

}  // namespace triage
