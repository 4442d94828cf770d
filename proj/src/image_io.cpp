#include "glisson/image_io.hpp"

#include <png.h>

#include <cctype>
#include <cstdio>
#include <fstream>
#include <memory>
#include <vector>

#include "glisson/error.hpp"

namespace glisson {

namespace {

std::uint8_t quantize(double v) {
    double q = v * 255.0 + 0.5; // round half up
    if (q < 0.0) q = 0.0;
    if (q > 255.0) q = 255.0;
    return std::uint8_t(q);
}

// Reads one whitespace/comment-delimited PGM header token.
std::string next_token(std::istream& in, const std::string& path) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {}
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(char(c));
    }
    if (tok.empty()) throw DataError(path + ": truncated PGM header");
    return tok;
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

} // namespace

ImageFormat format_from_path(const std::string& path) {
    auto dot = path.rfind('.');
    std::string ext = dot == std::string::npos ? "" : path.substr(dot);
    for (auto& ch : ext) ch = char(std::tolower(ch));
    if (ext == ".pgm" || ext == ".pnm") return ImageFormat::pgm;
    if (ext == ".png") return ImageFormat::png;
    throw DataError(path + ": unsupported image extension (expected .pgm or .png)");
}

std::string extension_for(ImageFormat format) {
    return format == ImageFormat::pgm ? ".pgm" : ".png";
}

GrayImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(path + ": cannot open file");
    if (next_token(in, path) != "P5") throw DataError(path + ": not a binary PGM (P5)");
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(next_token(in, path));
        h = std::stoi(next_token(in, path));
        maxval = std::stoi(next_token(in, path));
    } catch (const std::exception&) {
        throw DataError(path + ": malformed PGM header");
    }
    if (w < 3 || h < 3) throw DataError(path + ": image smaller than 3x3");
    if (maxval <= 0 || maxval > 255) throw DataError(path + ": expected 8-bit PGM (maxval <= 255)");

    std::vector<unsigned char> raw(std::size_t(w) * std::size_t(h));
    in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size()));
    if (std::size_t(in.gcount()) != raw.size()) throw DataError(path + ": truncated PGM payload");

    std::vector<double> pixels(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) pixels[i] = double(raw[i]) / double(maxval);
    return GrayImage::from_pixels(w, h, std::move(pixels));
}

void write_pgm(const GrayImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(path + ": cannot open file for writing");
    out << "P5\n" << img.width() << " " << img.height() << "\n255\n";
    std::vector<unsigned char> raw(img.pixels().size());
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = quantize(img.pixels()[i]);
    out.write(reinterpret_cast<const char*>(raw.data()), std::streamsize(raw.size()));
    if (!out) throw DataError(path + ": write failed");
}

GrayImage read_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw DataError(path + ": cannot open file");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw DataError(path + ": libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw DataError(path + ": libpng init failed");
    }
    std::vector<unsigned char> raw;
    std::vector<png_bytep> rows;
    int w = 0, h = 0;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError(path + ": corrupt PNG stream");
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    w = int(png_get_image_width(png, info));
    h = int(png_get_image_height(png, info));
    int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);

    if (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_GRAY_ALPHA) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError(path + ": expected grayscale PNG");
    }
    if (depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    raw.assign(std::size_t(w) * std::size_t(h), 0);
    rows.resize(std::size_t(h));
    for (int y = 0; y < h; ++y) rows[std::size_t(y)] = raw.data() + std::size_t(y) * std::size_t(w);
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    if (w < 3 || h < 3) throw DataError(path + ": image smaller than 3x3");
    std::vector<double> pixels(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) pixels[i] = double(raw[i]) / 255.0;
    return GrayImage::from_pixels(w, h, std::move(pixels));
}

void write_png(const GrayImage& img, const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw DataError(path + ": cannot open file for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw DataError(path + ": libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw DataError(path + ": libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw DataError(path + ": PNG write failed");
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, png_uint_32(img.width()), png_uint_32(img.height()), 8,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<unsigned char> row(std::size_t(img.width()));
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) row[std::size_t(x)] = quantize(img(y, x));
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

GrayImage load_image(const std::string& path) {
    return format_from_path(path) == ImageFormat::pgm ? read_pgm(path) : read_png(path);
}

void save_image(const GrayImage& img, const std::string& path) {
    if (format_from_path(path) == ImageFormat::pgm) {
        write_pgm(img, path);
    } else {
        write_png(img, path);
    }
}

} // namespace glisson
