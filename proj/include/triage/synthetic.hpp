#pragma once

#include "triage/image.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace triage {

/// RGB images of non-overlapping disk-shaped grains on a dark noisy
/// background. The two classes share colors and coverage ranges and differ
/// only in grain radius.
struct SyntheticSpec {
    int per_class = 100;
    int width = 64;
    int height = 64;
    int small_radius_min = 1;
    int small_radius_max = 2;
    int large_radius_min = 4;
    int large_radius_max = 6;
    double coverage_min = 0.10;
    double coverage_max = 0.20;
    double noise = 0.02;
    std::uint64_t seed = 0;
};

/// Class directory names: "large", "small".
inline const std::vector<std::string>& synthetic_class_names() {
    static const std::vector<std::string> names{"large", "small"};
    return names;
}

/// Image `index` of class `large` (true) or small grains.
NormalizedImage synthetic_grain_image(bool large, int index, const SyntheticSpec& spec);

/// Writes <dir>/<class>/img_NNN.png for both classes; returns the files written.
std::vector<std::filesystem::path> write_synthetic_corpus(const std::filesystem::path& dir, const SyntheticSpec& spec);

}  // namespace triage
