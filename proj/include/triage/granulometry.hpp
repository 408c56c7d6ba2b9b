#pragma once

#include "triage/image.hpp"
#include "triage/morphology.hpp"

#include <Eigen/Core>

namespace triage {

/// V[k] = total mass of the k-opening, k = 0..K (V[0] is the mass of f).
struct GranulometricCurve {
    Eigen::VectorXd values;
    SeKind se = SeKind::cross3;
    int depth = 0;  // K
};

/// Discrete density xi[k] = Xi[k+1] - Xi[k], k = 0..K-1.
struct PatternSpectrum {
    Eigen::VectorXd values;
    SeKind se = SeKind::cross3;
    int depth = 0;  // K
};

/// Mass after 0..K openings. The erosion chain is shared across levels and
/// evaluation stops early once an erosion is identically zero.
GranulometricCurve granulometric_curve(const Band& f, SeKind se, int depth);

/// Xi[k] = 1 - V[k] / V[0], k = 0..K. Throws EmptyImage when V[0] == 0.
Eigen::VectorXd size_distribution(const GranulometricCurve& curve);

PatternSpectrum pattern_spectrum(const GranulometricCurve& curve);
PatternSpectrum pattern_spectrum(const Band& f, SeKind se, int depth);

}  // namespace triage
