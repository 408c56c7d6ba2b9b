#pragma once

#include "triage/image.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace triage {

/// Reads PNG or binary PGM/PPM (P5/P6). Samples of bit depth N are mapped to
/// value / (2^N - 1); for PNM the file's maxval is the divisor.
NormalizedImage load_image(const std::filesystem::path& path);

/// Writes 8-bit PNG (1 or 3 bands), quantizing with round(v * 255).
void save_png(const NormalizedImage& img, const std::filesystem::path& path);
/// Writes 8-bit binary PGM (1 band) or PPM (3 bands).
void save_pnm(const NormalizedImage& img, const std::filesystem::path& path);

// Plain-text matrix dump used for fixtures:
//   triage-matrix 1
//   <width> <height> <bands> <origin_row> <origin_col>
//   one line per image row: pixel values in (col, band) order
// Values are written in shortest round-trip form, so read(write(x)) == x bit for bit.
void write_matrix(std::ostream& out, const NormalizedImage& img);
NormalizedImage read_matrix(std::istream& in);

/// One value per line at full precision.
void write_values(std::ostream& out, std::span<const double> values);
std::vector<double> read_values(std::istream& in);

/// Shortest decimal form that parses back to exactly `x`.
std::string format_double(double x);
/// Strict parse of a whole token; throws FormatError on junk.
double parse_double(std::string_view token, std::size_t line = 0);

}  // namespace triage
