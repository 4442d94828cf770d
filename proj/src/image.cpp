#include "glisson/image.hpp"

#include <string>

#include "glisson/error.hpp"

namespace glisson {

namespace {

void check_dims(int width, int height) {
    if (width < 3 || height < 3) {
        throw ParamError("image dimensions must be at least 3x3, got " +
                         std::to_string(width) + "x" + std::to_string(height));
    }
}

} // namespace

GrayImage::GrayImage(int width, int height, double fill) {
    check_dims(width, height);
    if (fill < 0.0 || fill > 1.0) {
        throw ParamError("fill intensity " + std::to_string(fill) + " outside [0,1]");
    }
    width_ = width;
    height_ = height;
    pixels_.assign(std::size_t(width) * std::size_t(height), fill);
}

GrayImage GrayImage::from_pixels(int width, int height, std::vector<double> pixels) {
    check_dims(width, height);
    if (pixels.size() != std::size_t(width) * std::size_t(height)) {
        throw ParamError("pixel buffer size " + std::to_string(pixels.size()) +
                         " does not match " + std::to_string(width) + "x" +
                         std::to_string(height));
    }
    for (double v : pixels) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw ParamError("pixel intensity " + std::to_string(v) + " outside [0,1]");
        }
    }
    GrayImage img;
    img.width_ = width;
    img.height_ = height;
    img.pixels_ = std::move(pixels);
    return img;
}

} // namespace glisson
