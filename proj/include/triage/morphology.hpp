#pragma once

#include "triage/image.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace triage {

enum class SeKind { cross3, square3 };

std::string_view to_string(SeKind kind);
SeKind parse_se_kind(std::string_view name);

/// Flat structuring element: a binary mask plus an origin pixel inside it.
class StructuringElement {
public:
    using Mask = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

    struct Offset {
        int row;
        int col;
    };

    /// `origin_row`/`origin_col` are zero-based array indices.
    StructuringElement(Mask mask, int origin_row, int origin_col);

    const Mask& mask() const noexcept { return mask_; }
    int origin_row() const noexcept { return origin_row_; }
    int origin_col() const noexcept { return origin_col_; }

    /// Offsets b (relative to the origin) with g(b) = 1.
    const std::vector<Offset>& offsets() const noexcept { return offsets_; }

    bool contains_origin() const { return mask_(origin_row_, origin_col_) != 0; }
    /// Equal to its reflection through the origin.
    bool symmetric() const;
    StructuringElement reflected() const;

    friend bool operator==(const StructuringElement& a, const StructuringElement& b) {
        return a.origin_row_ == b.origin_row_ && a.origin_col_ == b.origin_col_ &&
               a.mask_.rows() == b.mask_.rows() && a.mask_.cols() == b.mask_.cols() &&
               (a.mask_ == b.mask_).all();
    }

private:
    Mask mask_;
    int origin_row_;
    int origin_col_;
    std::vector<Offset> offsets_;
};

StructuringElement standard_se(SeKind kind);

// Flat dilation/erosion over the band's own grid. Pixels outside the grid are
// neutral: 0 for the supremum in dilation, 1 for the infimum in erosion.
// `n` > 1 iterates the operator; n == 0 throws std::invalid_argument.

/// (f (+) g)(u) = max over v in S with g(u - v) = 1 of f(v).
Band dilate(const Band& f, const StructuringElement& se, int n = 1);
/// (f (-) g)(u) = min over v in S with g(v - u) = 1 of f(v).
Band erode(const Band& f, const StructuringElement& se, int n = 1);

Band anti_dilate(const Band& f, const StructuringElement& se, int n = 1);
Band anti_erode(const Band& f, const StructuringElement& se, int n = 1);

/// n-opening: n erosions followed by n dilations.
Band open(const Band& f, const StructuringElement& se, int n = 1);
/// n-closing: n dilations followed by n erosions.
Band close(const Band& f, const StructuringElement& se, int n = 1);

}  // namespace triage
