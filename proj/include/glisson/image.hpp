#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace glisson {

/// 2-D grayscale raster with row-major unit-interval intensities.
/// Every pipeline stage consumes and produces this type; instances are
/// immutable values in practice and safe to share across threads.
class GrayImage {
public:
    GrayImage() = default;

    /// Allocates width x height pixels filled with `fill`. Throws ParamError
    /// on dimensions below 3x3 or a fill outside [0, 1].
    GrayImage(int width, int height, double fill = 0.0);

    /// Adopts a pixel buffer, validating size and the [0, 1] range.
    static GrayImage from_pixels(int width, int height, std::vector<double> pixels);

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return pixels_.empty(); }

    double operator()(int y, int x) const { return pixels_[index(y, x)]; }
    double& operator()(int y, int x) { return pixels_[index(y, x)]; }

    /// Replicate-padded access: coordinates are clamped to the raster.
    double clamped(int y, int x) const {
        y = std::clamp(y, 0, height_ - 1);
        x = std::clamp(x, 0, width_ - 1);
        return pixels_[index(y, x)];
    }

    const std::vector<double>& pixels() const { return pixels_; }
    std::vector<double>& pixels() { return pixels_; }

    bool operator==(const GrayImage& other) const = default;

private:
    std::size_t index(int y, int x) const {
        return std::size_t(y) * std::size_t(width_) + std::size_t(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> pixels_;
};

/// Prewitt responses and their magnitude, all sharing the source dimensions.
struct GradientField {
    int width = 0;
    int height = 0;
    std::vector<double> gx;
    std::vector<double> gy;
    std::vector<double> magnitude;

    double mag(int y, int x) const {
        return magnitude[std::size_t(y) * std::size_t(width) + std::size_t(x)];
    }
};

} // namespace glisson
