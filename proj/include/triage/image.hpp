#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <vector>

namespace triage {

/// Matrix-notation origin: pixel (row, col) of the array sits at absolute
/// coordinate (row - origin.row, col - origin.col). Metadata only.
struct GridOrigin {
    int row = 0;
    int col = 0;

    friend bool operator==(const GridOrigin&, const GridOrigin&) = default;
};

/// One spectral band: a rows x cols grid of values in [0, 1].
///
/// Immutable after construction. Every constructor checks that all values are
/// finite and inside the unit interval.
class Band {
public:
    Band() = default;
    explicit Band(Eigen::ArrayXXd values, GridOrigin origin = {});

    static Band zeros(Eigen::Index rows, Eigen::Index cols, GridOrigin origin = {});
    static Band ones(Eigen::Index rows, Eigen::Index cols, GridOrigin origin = {});
    static Band constant(Eigen::Index rows, Eigen::Index cols, double value, GridOrigin origin = {});

    const Eigen::ArrayXXd& values() const noexcept { return values_; }
    double operator()(Eigen::Index row, Eigen::Index col) const { return values_(row, col); }

    Eigen::Index rows() const noexcept { return values_.rows(); }
    Eigen::Index cols() const noexcept { return values_.cols(); }
    Eigen::Index size() const noexcept { return values_.size(); }
    GridOrigin origin() const noexcept { return origin_; }

    bool same_grid(const Band& other) const noexcept {
        return rows() == other.rows() && cols() == other.cols() && origin_ == other.origin_;
    }
    bool is_binary() const;
    double mass() const { return values_.sum(); }

    friend bool operator==(const Band& a, const Band& b) {
        return a.same_grid(b) && (a.values_ == b.values_).all();
    }

private:
    struct Trusted {};
    Band(Trusted, Eigen::ArrayXXd values, GridOrigin origin)
        : values_(std::move(values)), origin_(origin) {}

    Eigen::ArrayXXd values_;
    GridOrigin origin_;

    // Operators whose outputs are in [0, 1] by construction skip re-validation.
    friend Band make_trusted_band(Eigen::ArrayXXd values, GridOrigin origin);
};

/// Internal: wraps values already known to lie in [0, 1].
Band make_trusted_band(Eigen::ArrayXXd values, GridOrigin origin);

/// A p-band normalized image f: S -> [0,1]^p; all bands share one grid.
class NormalizedImage {
public:
    NormalizedImage() = default;
    explicit NormalizedImage(std::vector<Band> bands);

    Eigen::Index width() const noexcept { return bands_.empty() ? 0 : bands_.front().cols(); }
    Eigen::Index height() const noexcept { return bands_.empty() ? 0 : bands_.front().rows(); }
    std::size_t band_count() const noexcept { return bands_.size(); }
    GridOrigin origin() const noexcept { return bands_.empty() ? GridOrigin{} : bands_.front().origin(); }

    const Band& band(std::size_t j) const { return bands_.at(j); }
    std::span<const Band> bands() const noexcept { return bands_; }

    friend bool operator==(const NormalizedImage&, const NormalizedImage&) = default;

private:
    std::vector<Band> bands_;
};

std::vector<Band> split_bands(const NormalizedImage& img);
NormalizedImage merge_bands(std::vector<Band> bands);

// Pixelwise lattice operations. Binary operations require identical grids and
// throw GridMismatch otherwise.
Band complement(const Band& f);
Band unite(const Band& f1, const Band& f2);
Band intersect(const Band& f1, const Band& f2);
/// f1 AND NOT f2, i.e. min(f1, 1 - f2).
Band subtract(const Band& f1, const Band& f2);
/// Binary band: 1 where f1(u) <= f2(u), else 0.
Band compare_leq(const Band& f1, const Band& f2);

/// True when f(u) <= g(u) at every pixel (grids must match).
bool pointwise_leq(const Band& f, const Band& g);

}  // namespace triage
