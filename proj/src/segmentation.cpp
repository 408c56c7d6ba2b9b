#include "triage/segmentation.hpp"

#include "triage/error.hpp"
#include "triage/image_io.hpp"
#include "triage/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace triage {

int Clustering::populated() const {
    return static_cast<int>(std::count_if(sizes.begin(), sizes.end(), [](auto s) { return s > 0; }));
}

namespace {

struct Assignment {
    std::vector<int> labels;
    double inertia = 0;
};

template <typename Derived>
int nearest(double x, const Eigen::MatrixBase<Derived>& centroids) {
    int best = 0;
    double best_d = std::abs(x - centroids[0]);
    for (Eigen::Index j = 1; j < centroids.size(); ++j) {
        const double d = std::abs(x - centroids[j]);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(j);
        }
    }
    return best;
}

Assignment assign(const double* x, Eigen::Index n, const Eigen::VectorXd& centroids) {
    Assignment a{std::vector<int>(n), 0.0};
    for (Eigen::Index i = 0; i < n; ++i) {
        a.labels[i] = nearest(x[i], centroids);
        const double d = x[i] - centroids[a.labels[i]];
        a.inertia += d * d;
    }
    return a;
}

Eigen::VectorXd plus_plus_seeds(const double* x, Eigen::Index n, int k, Rng& rng) {
    Eigen::VectorXd c(k);
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    c[0] = x[pick(rng)];
    std::vector<double> d2(n);
    for (int j = 1; j < k; ++j) {
        double total = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double d = x[i] - c[nearest(x[i], c.head(j))];
            d2[i] = d * d;
            total += d2[i];
        }
        if (total == 0.0) {
            // Every pixel already sits on a centroid.
            c[j] = c[0];
            continue;
        }
        double target = std::uniform_real_distribution<double>(0.0, total)(rng);
        Eigen::Index chosen = n - 1;
        for (Eigen::Index i = 0; i < n; ++i) {
            target -= d2[i];
            if (target < 0) {
                chosen = i;
                break;
            }
        }
        c[j] = x[chosen];
    }
    return c;
}

}  // namespace

Clustering kmeans(const Band& band, const KMeansConfig& cfg) {
    if (cfg.k < 1) throw std::invalid_argument("k-means needs k >= 1");
    if (cfg.max_iter < 1) throw std::invalid_argument("k-means needs max_iter >= 1");
    const Eigen::Index n = band.size();
    if (n == 0) throw DataError("k-means on an empty band");
    const double* x = band.values().data();

    Rng rng(cfg.seed);
    Clustering out;
    out.centroids = plus_plus_seeds(x, n, cfg.k, rng);
    std::vector<int> reseeds(cfg.k, 0);
    constexpr int max_reseeds = 3;

    Assignment a = assign(x, n, out.centroids);
    out.inertia.push_back(a.inertia);
    for (int it = 1; it <= cfg.max_iter; ++it) {
        out.iterations = it;
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(cfg.k);
        std::vector<Eigen::Index> count(cfg.k, 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            sum[a.labels[i]] += x[i];
            ++count[a.labels[i]];
        }
        Eigen::VectorXd next = out.centroids;
        bool reseeded = false;
        for (int j = 0; j < cfg.k; ++j) {
            if (count[j] > 0) {
                next[j] = sum[j] / static_cast<double>(count[j]);
            } else if (reseeds[j] < max_reseeds) {
                ++reseeds[j];
                reseeded = true;
                Eigen::Index far = 0;
                double far_d = -1;
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double d = std::abs(x[i] - out.centroids[a.labels[i]]);
                    if (d > far_d) {
                        far_d = d;
                        far = i;
                    }
                }
                next[j] = x[far];
            }
        }
        const double moved = (next - out.centroids).cwiseAbs().maxCoeff();
        out.centroids = next;
        a = assign(x, n, out.centroids);
        out.inertia.push_back(a.inertia);
        if (moved < cfg.tol && !reseeded) break;
    }

    out.labels.resize(band.rows(), band.cols());
    std::copy(a.labels.begin(), a.labels.end(), out.labels.data());
    out.sizes.assign(cfg.k, 0);
    for (int l : a.labels) ++out.sizes[l];
    out.degenerate = out.populated() < cfg.k;
    return out;
}

int background_cluster(const Clustering& c, BackgroundRule rule) {
    int best = -1;
    for (int j = 0; j < c.k(); ++j) {
        if (c.sizes[j] == 0) continue;
        if (best < 0) {
            best = j;
            continue;
        }
        const bool better = rule == BackgroundRule::largest ? c.sizes[j] > c.sizes[best]
                                                            : c.centroids[j] > c.centroids[best];
        if (better) best = j;
    }
    return best;
}

Band remove_largest_cluster(const Band& band, const Clustering& c, BackgroundRule rule) {
    if (c.labels.rows() != band.rows() || c.labels.cols() != band.cols())
        throw GridMismatch("clustering does not match band grid");
    if (c.populated() < 2) throw DataError("only one populated cluster; nothing would remain after background removal");
    const int bg = background_cluster(c, rule);
    return make_trusted_band((c.labels == bg).select(0.0, band.values()), band.origin());
}

void save_label_map(const Clustering& c, const std::filesystem::path& path) {
    const double scale = c.k() > 1 ? 1.0 / (c.k() - 1) : 0.0;
    Eigen::ArrayXXd gray = c.labels.cast<double>() * scale;
    save_pnm(NormalizedImage({Band(std::move(gray))}), path);
}

}  // namespace triage
