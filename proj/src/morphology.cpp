#include "triage/morphology.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <utility>

namespace triage {

std::string_view to_string(SeKind kind) {
    return kind == SeKind::cross3 ? "cross3" : "square3";
}

SeKind parse_se_kind(std::string_view name) {
    if (name == "cross3") return SeKind::cross3;
    if (name == "square3") return SeKind::square3;
    throw std::invalid_argument("unknown structuring element '" + std::string(name) + "'");
}

StructuringElement::StructuringElement(Mask mask, int origin_row, int origin_col)
    : mask_(std::move(mask)), origin_row_(origin_row), origin_col_(origin_col) {
    if (origin_row_ < 0 || origin_row_ >= mask_.rows() || origin_col_ < 0 || origin_col_ >= mask_.cols())
        throw std::invalid_argument("structuring element origin outside its mask");
    if ((mask_ > 1).any()) throw std::invalid_argument("structuring element must be binary");
    for (Eigen::Index c = 0; c < mask_.cols(); ++c)
        for (Eigen::Index r = 0; r < mask_.rows(); ++r)
            if (mask_(r, c)) offsets_.push_back({static_cast<int>(r) - origin_row_, static_cast<int>(c) - origin_col_});
    if (offsets_.empty()) throw std::invalid_argument("structuring element has no active pixel");
}

bool StructuringElement::symmetric() const {
    auto key = [](const Offset& o) { return std::pair(o.row, o.col); };
    auto sorted = [&](std::vector<Offset> v) {
        std::sort(v.begin(), v.end(), [&](const Offset& a, const Offset& b) { return key(a) < key(b); });
        return v;
    };
    const auto mine = sorted(offsets_);
    const auto mirror = sorted(reflected().offsets_);
    return std::equal(mine.begin(), mine.end(), mirror.begin(), mirror.end(),
                      [&](const Offset& a, const Offset& b) { return key(a) == key(b); });
}

StructuringElement StructuringElement::reflected() const {
    // Reflection through the origin, re-embedded in the smallest box holding it.
    const int top = static_cast<int>(mask_.rows()) - 1 - origin_row_;
    const int left = static_cast<int>(mask_.cols()) - 1 - origin_col_;
    return StructuringElement(mask_.reverse(), top, left);
}

StructuringElement standard_se(SeKind kind) {
    StructuringElement::Mask m(3, 3);
    if (kind == SeKind::cross3)
        m << 0, 1, 0,
             1, 1, 1,
             0, 1, 0;
    else
        m.setOnes();
    return StructuringElement(std::move(m), 1, 1);
}

namespace {

// One pass of a flat max (Dilate) or min (erode) filter over the given offsets.
// Neighbors outside the grid are ignored, which is the same as padding with the
// neutral element of the reduction.
template <bool Dilate>
Eigen::ArrayXXd flat_pass(const Eigen::ArrayXXd& in, const std::vector<StructuringElement::Offset>& offsets) {
    const Eigen::Index rows = in.rows(), cols = in.cols();
    Eigen::ArrayXXd out(rows, cols);
    const double neutral = Dilate ? 0.0 : 1.0;
    auto reduce = [](double a, double b) { return Dilate ? std::max(a, b) : std::min(a, b); };

    int min_dr = 0, max_dr = 0, min_dc = 0, max_dc = 0;
    for (const auto& o : offsets) {
        min_dr = std::min(min_dr, o.row);
        max_dr = std::max(max_dr, o.row);
        min_dc = std::min(min_dc, o.col);
        max_dc = std::max(max_dc, o.col);
    }
    // Interior box where every neighbor is in bounds.
    const Eigen::Index r0 = std::min<Eigen::Index>(-min_dr, rows), r1 = std::max<Eigen::Index>(rows - max_dr, r0);
    const Eigen::Index c0 = std::min<Eigen::Index>(-min_dc, cols), c1 = std::max<Eigen::Index>(cols - max_dc, c0);

    std::vector<Eigen::Index> linear;
    linear.reserve(offsets.size());
    for (const auto& o : offsets) linear.push_back(static_cast<Eigen::Index>(o.col) * rows + o.row);

    const double* src = in.data();
    double* dst = out.data();

    auto checked = [&](Eigen::Index r, Eigen::Index c) {
        double acc = neutral;
        for (const auto& o : offsets) {
            const Eigen::Index rr = r + o.row, cc = c + o.col;
            if (rr >= 0 && rr < rows && cc >= 0 && cc < cols) acc = reduce(acc, src[cc * rows + rr]);
        }
        dst[c * rows + r] = acc;
    };

    for (Eigen::Index c = 0; c < cols; ++c) {
        if (c < c0 || c >= c1) {
            for (Eigen::Index r = 0; r < rows; ++r) checked(r, c);
            continue;
        }
        for (Eigen::Index r = 0; r < r0; ++r) checked(r, c);
        const double* base = src + c * rows;
        for (Eigen::Index r = r0; r < r1; ++r) {
            double acc = base[r + linear[0]];
            for (std::size_t k = 1; k < linear.size(); ++k) acc = reduce(acc, base[r + linear[k]]);
            dst[c * rows + r] = acc;
        }
        for (Eigen::Index r = r1; r < rows; ++r) checked(r, c);
    }
    return out;
}

void require_positive(int n) {
    if (n < 1) throw std::invalid_argument("iteration count must be >= 1, got " + std::to_string(n));
}

std::vector<StructuringElement::Offset> negated(const std::vector<StructuringElement::Offset>& offsets) {
    std::vector<StructuringElement::Offset> out;
    out.reserve(offsets.size());
    for (const auto& o : offsets) out.push_back({-o.row, -o.col});
    return out;
}

Eigen::ArrayXXd dilate_values(Eigen::ArrayXXd v, const StructuringElement& se, int n) {
    // f(u - b) for b in the SE: the reflected offsets.
    const auto offsets = negated(se.offsets());
    for (int i = 0; i < n; ++i) v = flat_pass<true>(v, offsets);
    return v;
}

Eigen::ArrayXXd erode_values(Eigen::ArrayXXd v, const StructuringElement& se, int n) {
    for (int i = 0; i < n; ++i) v = flat_pass<false>(v, se.offsets());
    return v;
}

}  // namespace

Band dilate(const Band& f, const StructuringElement& se, int n) {
    require_positive(n);
    return make_trusted_band(dilate_values(f.values(), se, n), f.origin());
}

Band erode(const Band& f, const StructuringElement& se, int n) {
    require_positive(n);
    return make_trusted_band(erode_values(f.values(), se, n), f.origin());
}

Band anti_dilate(const Band& f, const StructuringElement& se, int n) {
    return complement(dilate(f, se, n));
}

Band anti_erode(const Band& f, const StructuringElement& se, int n) {
    return complement(erode(f, se, n));
}

Band open(const Band& f, const StructuringElement& se, int n) {
    require_positive(n);
    return make_trusted_band(dilate_values(erode_values(f.values(), se, n), se, n), f.origin());
}

Band close(const Band& f, const StructuringElement& se, int n) {
    require_positive(n);
    return make_trusted_band(erode_values(dilate_values(f.values(), se, n), se, n), f.origin());
}

}  // namespace triage
