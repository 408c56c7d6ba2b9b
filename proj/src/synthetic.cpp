#include "triage/synthetic.hpp"

#include "triage/error.hpp"
#include "triage/image_io.hpp"
#include "triage/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace triage {

namespace {

struct Grain {
    int row, col, radius;
};

}  // namespace

NormalizedImage synthetic_grain_image(bool large, int index, const SyntheticSpec& spec) {
    if (spec.width < 8 || spec.height < 8) throw std::invalid_argument("synthetic images must be at least 8x8");
    const int rmin = large ? spec.large_radius_min : spec.small_radius_min;
    const int rmax = large ? spec.large_radius_max : spec.small_radius_max;
    if (rmin < 1 || rmax < rmin || 2 * rmax + 3 > std::min(spec.width, spec.height))
        throw std::invalid_argument("invalid grain radius range");

    Rng rng(derive_seed(spec.seed, {large ? 1u : 0u, static_cast<std::uint64_t>(index)}));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, spec.noise);
    std::uniform_int_distribution<int> radius(rmin, rmax);

    const double coverage = spec.coverage_min + (spec.coverage_max - spec.coverage_min) * unit(rng);
    const double target = coverage * spec.width * spec.height;

    std::vector<Grain> grains;
    double area = 0;
    for (int attempt = 0; attempt < 5000 && area < target; ++attempt) {
        const int r = radius(rng);
        // keep one pixel of background around every grain and the border
        std::uniform_int_distribution<int> row(r + 1, spec.height - r - 2);
        std::uniform_int_distribution<int> col(r + 1, spec.width - r - 2);
        const Grain g{row(rng), col(rng), r};
        const bool clear = std::none_of(grains.begin(), grains.end(), [&](const Grain& o) {
            const double d = std::hypot(g.row - o.row, g.col - o.col);
            return d < g.radius + o.radius + 2;
        });
        if (!clear) continue;
        grains.push_back(g);
        area += M_PI * r * r;
    }

    std::vector<Eigen::ArrayXXd> planes(3, Eigen::ArrayXXd(spec.height, spec.width));
    const double bg[3] = {0.12, 0.10, 0.08};
    for (int b = 0; b < 3; ++b)
        for (int c = 0; c < spec.width; ++c)
            for (int r = 0; r < spec.height; ++r) planes[b](r, c) = bg[b] + noise(rng);
    for (const auto& g : grains) {
        double color[3];
        for (double& v : color) v = 0.55 + 0.4 * unit(rng);
        for (int r = g.row - g.radius; r <= g.row + g.radius; ++r)
            for (int c = g.col - g.radius; c <= g.col + g.radius; ++c)
                if ((r - g.row) * (r - g.row) + (c - g.col) * (c - g.col) <= g.radius * g.radius)
                    for (int b = 0; b < 3; ++b) planes[b](r, c) = color[b] + noise(rng);
    }
    std::vector<Band> bands;
    for (auto& p : planes) bands.emplace_back(p.cwiseMax(0.0).cwiseMin(1.0));
    return NormalizedImage(std::move(bands));
}

std::vector<std::filesystem::path> write_synthetic_corpus(const std::filesystem::path& dir, const SyntheticSpec& spec) {
    if (spec.per_class < 1) throw std::invalid_argument("per_class must be positive");
    std::vector<std::filesystem::path> written;
    std::error_code ec;
    for (const auto& name : synthetic_class_names()) {
        const auto sub = dir / name;
        std::filesystem::create_directories(sub, ec);
        if (ec) throw IoError("cannot create " + sub.string() + ": " + ec.message());
        for (int i = 0; i < spec.per_class; ++i) {
            char file[32];
            std::snprintf(file, sizeof file, "img_%03d.png", i);
            const auto path = sub / file;
            save_png(synthetic_grain_image(name == "large", i, spec), path);
            written.push_back(path);
        }
    }
    return written;
}

}  // namespace triage
