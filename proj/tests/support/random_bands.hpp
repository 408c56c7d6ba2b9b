#pragma once

#include "triage/image.hpp"
#include "triage/rng.hpp"

#include <random>

namespace fixtures {

/// Values j/1024: exact under 1 - x, so complement identities can be checked with ==.
inline triage::Band dyadic_band(triage::Rng& rng, long rows, long cols) {
    std::uniform_int_distribution<int> d(0, 1024);
    Eigen::ArrayXXd v(rows, cols);
    for (long i = 0; i < v.size(); ++i) v(i) = d(rng) / 1024.0;
    return triage::Band(v);
}

inline triage::Band uniform_band(triage::Rng& rng, long rows, long cols) {
    std::uniform_real_distribution<double> d(0.0, 1.0);
    Eigen::ArrayXXd v(rows, cols);
    for (long i = 0; i < v.size(); ++i) v(i) = d(rng);
    return triage::Band(v);
}

inline triage::Band binary_band(triage::Rng& rng, long rows, long cols, double p = 0.5) {
    std::bernoulli_distribution d(p);
    Eigen::ArrayXXd v(rows, cols);
    for (long i = 0; i < v.size(); ++i) v(i) = d(rng) ? 1.0 : 0.0;
    return triage::Band(v);
}

/// 3x3 binary image number `code` (bit i is pixel i in column-major order).
inline triage::Band binary3x3(int code) {
    Eigen::ArrayXXd v(3, 3);
    for (int i = 0; i < 9; ++i) v(i) = (code >> i) & 1;
    return triage::Band(v);
}

inline triage::Band impulse(long rows, long cols, long r, long c, double value = 1.0) {
    Eigen::ArrayXXd v = Eigen::ArrayXXd::Zero(rows, cols);
    v(r, c) = value;
    return triage::Band(v);
}

}  // namespace fixtures
