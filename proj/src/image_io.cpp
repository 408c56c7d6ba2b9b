#include "triage/image_io.hpp"

#include "triage/error.hpp"

#include <png.h>

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>

namespace triage {

namespace fs = std::filesystem;

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const fs::path& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw IoError("cannot open " + path.string());
    return f;
}

NormalizedImage from_interleaved(const std::vector<double>& samples, int width, int height, int bands) {
    std::vector<Eigen::ArrayXXd> planes(bands, Eigen::ArrayXXd(height, width));
    std::size_t i = 0;
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c)
            for (int b = 0; b < bands; ++b) planes[b](r, c) = samples[i++];
    std::vector<Band> out;
    out.reserve(bands);
    for (auto& p : planes) out.push_back(make_trusted_band(std::move(p), {}));
    return NormalizedImage(std::move(out));
}

struct PngRaster {
    int width = 0;
    int height = 0;
    int bands = 0;
    int depth = 0;
    std::size_t stride = 0;
    std::vector<png_byte> pixels;
};

// Returns false on a libpng error. Keeps only trivially destructible locals
// in the setjmp frame.
bool decode_png(std::FILE* file, PngRaster* out) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) return false;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        return false;
    }
    png_bytep* volatile rows = nullptr;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        delete[] rows;
        return false;
    }
    png_init_io(png, file);
    png_read_info(png, info);

    const auto color = png_get_color_type(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_bit_depth(png, info) == 16) png_set_swap(png);
    png_read_update_info(png, info);

    out->width = static_cast<int>(png_get_image_width(png, info));
    out->height = static_cast<int>(png_get_image_height(png, info));
    out->bands = png_get_channels(png, info);
    out->depth = png_get_bit_depth(png, info);
    out->stride = png_get_rowbytes(png, info);
    out->pixels.resize(out->stride * out->height);
    rows = new png_bytep[out->height];
    for (int r = 0; r < out->height; ++r) rows[r] = out->pixels.data() + r * out->stride;
    png_read_image(png, rows);
    png_destroy_read_struct(&png, &info, nullptr);
    delete[] rows;
    return true;
}

NormalizedImage load_png(const fs::path& path) {
    auto file = open_file(path, "rb");
    PngRaster raster;
    if (!decode_png(file.get(), &raster)) throw IoError("corrupt PNG: " + path.string());
    const int width = raster.width, height = raster.height, bands = raster.bands, depth = raster.depth;
    if (width == 0 || height == 0) throw IoError("zero-size image: " + path.string());

    const double maxval = std::pow(2.0, depth) - 1.0;
    std::vector<double> samples(static_cast<std::size_t>(width) * height * bands);
    const std::size_t per_row = static_cast<std::size_t>(width) * bands;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const std::size_t k = i % per_row;
        const png_byte* row = raster.pixels.data() + (i / per_row) * raster.stride;
        const unsigned v = depth == 16 ? (row[2 * k] | (row[2 * k + 1] << 8)) : row[k];
        samples[i] = v / maxval;
    }
    return from_interleaved(samples, width, height, bands);
}

// Skips whitespace and '#' comments between PNM header tokens.
int read_pnm_int(std::istream& in) {
    for (;;) {
        int c = in.peek();
        if (c == '#') {
            std::string dummy;
            std::getline(in, dummy);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
    int v = -1;
    if (!(in >> v)) throw FormatError("bad PNM header");
    return v;
}

NormalizedImage load_pnm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[2] = {};
    in.read(magic, 2);
    if (magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6'))
        throw FormatError("unsupported PNM variant in " + path.string());
    const int bands = magic[1] == '6' ? 3 : 1;
    const int width = read_pnm_int(in);
    const int height = read_pnm_int(in);
    const int maxval = read_pnm_int(in);
    in.get();
    if (width <= 0 || height <= 0) throw IoError("zero-size image: " + path.string());
    if (maxval <= 0 || maxval > 65535) throw FormatError("bad PNM maxval in " + path.string());

    const int bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(static_cast<std::size_t>(width) * height * bands * bytes);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size()))
        throw FormatError("truncated PNM data in " + path.string());

    std::vector<double> samples(raw.size() / bytes);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const unsigned v = bytes == 2 ? (raw[2 * i] << 8) | raw[2 * i + 1] : raw[i];
        if (v > static_cast<unsigned>(maxval)) throw FormatError("PNM sample exceeds maxval");
        samples[i] = static_cast<double>(v) / maxval;
    }
    return from_interleaved(samples, width, height, bands);
}

std::vector<unsigned char> quantize8(const NormalizedImage& img) {
    std::vector<unsigned char> out;
    out.reserve(img.width() * img.height() * img.band_count());
    for (Eigen::Index r = 0; r < img.height(); ++r)
        for (Eigen::Index c = 0; c < img.width(); ++c)
            for (const auto& b : img.bands())
                out.push_back(static_cast<unsigned char>(std::lround(b(r, c) * 255.0)));
    return out;
}

void require_writable_bands(const NormalizedImage& img) {
    if (img.band_count() != 1 && img.band_count() != 3)
        throw std::invalid_argument("only 1- or 3-band images can be written");
}

}  // namespace

NormalizedImage load_image(const fs::path& path) {
    if (!fs::exists(path)) throw IoError("no such file: " + path.string());
    std::ifstream probe(path, std::ios::binary);
    unsigned char sig[8] = {};
    probe.read(reinterpret_cast<char*>(sig), 8);
    if (probe.gcount() == 8 && png_sig_cmp(sig, 0, 8) == 0) return load_png(path);
    if (probe.gcount() >= 2 && sig[0] == 'P' && (sig[1] == '5' || sig[1] == '6')) return load_pnm(path);
    throw FormatError("unsupported raster format: " + path.string());
}

void save_png(const NormalizedImage& img, const fs::path& path) {
    require_writable_bands(img);
    auto data = quantize8(img);
    auto file = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed writing " + path.string());
    }
    png_init_io(png, file.get());
    const int bands = static_cast<int>(img.band_count());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), 8,
                 bands == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t stride = static_cast<std::size_t>(img.width()) * bands;
    for (Eigen::Index r = 0; r < img.height(); ++r) png_write_row(png, data.data() + r * stride);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void save_pnm(const NormalizedImage& img, const fs::path& path) {
    require_writable_bands(img);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << (img.band_count() == 3 ? "P6" : "P5") << '\n' << img.width() << ' ' << img.height() << "\n255\n";
    auto data = quantize8(img);
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

std::string format_double(double x) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, end);
}

double parse_double(std::string_view token, std::size_t line) {
    double v = 0;
    auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc{} || end != token.data() + token.size())
        throw FormatError("not a number: '" + std::string(token) + "'", line);
    return v;
}

void write_matrix(std::ostream& out, const NormalizedImage& img) {
    out << "triage-matrix 1\n"
        << img.width() << ' ' << img.height() << ' ' << img.band_count() << ' ' << img.origin().row << ' '
        << img.origin().col << '\n';
    for (Eigen::Index r = 0; r < img.height(); ++r) {
        bool first = true;
        for (Eigen::Index c = 0; c < img.width(); ++c)
            for (const auto& b : img.bands()) {
                if (!first) out << ' ';
                out << format_double(b(r, c));
                first = false;
            }
        out << '\n';
    }
}

NormalizedImage read_matrix(std::istream& in) {
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != "triage-matrix" || version != 1)
        throw FormatError("not a triage-matrix v1 stream", 1);
    long width = 0, height = 0, bands = 0;
    GridOrigin origin;
    if (!(in >> width >> height >> bands >> origin.row >> origin.col) || width <= 0 || height <= 0 || bands <= 0)
        throw FormatError("bad matrix header", 2);
    std::vector<double> samples(static_cast<std::size_t>(width * height * bands));
    std::string token;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!(in >> token)) throw FormatError("truncated matrix data", 3 + i / (width * bands));
        samples[i] = parse_double(token, 3 + i / (width * bands));
    }
    std::vector<Eigen::ArrayXXd> planes(bands, Eigen::ArrayXXd(height, width));
    std::size_t i = 0;
    for (long r = 0; r < height; ++r)
        for (long c = 0; c < width; ++c)
            for (long b = 0; b < bands; ++b) planes[b](r, c) = samples[i++];
    std::vector<Band> out;
    for (auto& p : planes) out.emplace_back(std::move(p), origin);
    return NormalizedImage(std::move(out));
}

void write_values(std::ostream& out, std::span<const double> values) {
    for (double v : values) out << format_double(v) << '\n';
}

std::vector<double> read_values(std::istream& in) {
    std::vector<double> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        out.push_back(parse_double(line, n));
    }
    return out;
}

}  // namespace triage
