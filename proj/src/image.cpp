#include "triage/image.hpp"

#include "triage/error.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace triage {

namespace {

void check_unit_interval(const Eigen::ArrayXXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double x = v.data()[i];
        if (!(x >= 0.0 && x <= 1.0))
            throw std::invalid_argument("band value " + std::to_string(x) + " outside [0, 1]");
    }
}

void require_same_grid(const Band& a, const Band& b) {
    if (!a.same_grid(b))
        throw GridMismatch("band grids differ: " + std::to_string(a.rows()) + "x" +
                           std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                           std::to_string(b.cols()));
}

}  // namespace

Band::Band(Eigen::ArrayXXd values, GridOrigin origin) : values_(std::move(values)), origin_(origin) {
    check_unit_interval(values_);
}

Band make_trusted_band(Eigen::ArrayXXd values, GridOrigin origin) {
    return Band(Band::Trusted{}, std::move(values), origin);
}

Band Band::zeros(Eigen::Index rows, Eigen::Index cols, GridOrigin origin) {
    return make_trusted_band(Eigen::ArrayXXd::Zero(rows, cols), origin);
}

Band Band::ones(Eigen::Index rows, Eigen::Index cols, GridOrigin origin) {
    return make_trusted_band(Eigen::ArrayXXd::Ones(rows, cols), origin);
}

Band Band::constant(Eigen::Index rows, Eigen::Index cols, double value, GridOrigin origin) {
    return Band(Eigen::ArrayXXd::Constant(rows, cols, value), origin);
}

bool Band::is_binary() const {
    return ((values_ == 0.0) || (values_ == 1.0)).all();
}

NormalizedImage::NormalizedImage(std::vector<Band> bands) : bands_(std::move(bands)) {
    if (bands_.empty()) throw std::invalid_argument("image needs at least one band");
    for (const auto& b : bands_) require_same_grid(bands_.front(), b);
}

std::vector<Band> split_bands(const NormalizedImage& img) {
    return {img.bands().begin(), img.bands().end()};
}

NormalizedImage merge_bands(std::vector<Band> bands) {
    return NormalizedImage(std::move(bands));
}

Band complement(const Band& f) {
    return make_trusted_band(1.0 - f.values(), f.origin());
}

Band unite(const Band& f1, const Band& f2) {
    require_same_grid(f1, f2);
    return make_trusted_band(f1.values().max(f2.values()), f1.origin());
}

Band intersect(const Band& f1, const Band& f2) {
    require_same_grid(f1, f2);
    return make_trusted_band(f1.values().min(f2.values()), f1.origin());
}

Band subtract(const Band& f1, const Band& f2) {
    require_same_grid(f1, f2);
    return make_trusted_band(f1.values().min(1.0 - f2.values()), f1.origin());
}

Band compare_leq(const Band& f1, const Band& f2) {
    require_same_grid(f1, f2);
    return make_trusted_band((f1.values() <= f2.values()).cast<double>(), f1.origin());
}

bool pointwise_leq(const Band& f, const Band& g) {
    require_same_grid(f, g);
    return (f.values() <= g.values()).all();
}

}  // namespace triage
