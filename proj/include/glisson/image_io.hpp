#pragma once

#include <string>

#include "glisson/image.hpp"

namespace glisson {

enum class ImageFormat { pgm, png };

/// Maps a file extension (.pgm/.pnm/.png) to a format; throws DataError otherwise.
ImageFormat format_from_path(const std::string& path);
std::string extension_for(ImageFormat format);

/// 8-bit binary PGM (P5). Intensities map to [0,1] by /maxval on read and
/// round-half-up quantization to 0..255 on write.
GrayImage read_pgm(const std::string& path);
void write_pgm(const GrayImage& img, const std::string& path);

/// 8-bit grayscale PNG. Low-bit-depth gray is expanded, 16-bit is stripped to
/// 8, alpha is dropped; color PNGs are rejected with a DataError naming the file.
GrayImage read_png(const std::string& path);
void write_png(const GrayImage& img, const std::string& path);

GrayImage load_image(const std::string& path);
void save_image(const GrayImage& img, const std::string& path);

} // namespace glisson
