#include "triage/granulometry.hpp"

#include "triage/error.hpp"

#include <stdexcept>

namespace triage {

GranulometricCurve granulometric_curve(const Band& f, SeKind se_kind, int depth) {
    if (depth < 1) throw std::invalid_argument("granulometry depth must be >= 1");
    const auto se = standard_se(se_kind);

    GranulometricCurve curve{Eigen::VectorXd::Zero(depth + 1), se_kind, depth};
    curve.values[0] = f.mass();

    Band eroded = f;
    for (int k = 1; k <= depth; ++k) {
        eroded = erode(eroded, se);
        // dilate^k(0) == 0, and every deeper erosion is zero too.
        if ((eroded.values() == 0.0).all()) break;
        curve.values[k] = dilate(eroded, se, k).mass();
    }
    return curve;
}

Eigen::VectorXd size_distribution(const GranulometricCurve& curve) {
    const double total = curve.values[0];
    if (!(total > 0.0)) throw EmptyImage();
    return 1.0 - curve.values.array() / total;
}

PatternSpectrum pattern_spectrum(const GranulometricCurve& curve) {
    const Eigen::VectorXd cdf = size_distribution(curve);
    const Eigen::Index k = curve.depth;
    return {cdf.tail(k) - cdf.head(k), curve.se, curve.depth};
}

PatternSpectrum pattern_spectrum(const Band& f, SeKind se, int depth) {
    return pattern_spectrum(granulometric_curve(f, se, depth));
}

}  // namespace triage
