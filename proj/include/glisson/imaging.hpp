#pragma once

#include <vector>

#include "glisson/image.hpp"

namespace glisson {

/// Fixed output size of the region-of-interest band around the capsule line.
inline constexpr int kRoiWidth = 310;
inline constexpr int kRoiHeight = 90;

/// Parameters of the speckle-reducing anisotropic diffusion filter.
/// The edge threshold decays as q0 * exp(-rho * t) with t = iteration * time_step.
struct SradParams {
    int iterations = 100;
    double time_step = 0.2; // explicit 4-neighbour scheme is stable up to 0.25
    double q0 = 0.3;
    double rho = 0.1;

    void validate() const;
};

/// Iterative edge-preserving despeckling. Each step computes the per-pixel
/// instantaneous coefficient of variation, maps it to a diffusion coefficient
/// (1 in homogeneous regions, 0 at edges) and applies an explicit divergence
/// update scaled by time_step. Borders use replicate padding; output is
/// clamped to [0,1]. A constant image is an exact fixed point.
GrayImage srad_despeckle(const GrayImage& img, const SradParams& params);

/// 3x3 Prewitt responses with replicate padding.
/// gx uses the column-weight kernel (-1,0,+1 per row), gy its transpose.
GradientField prewitt_gradient(const GrayImage& img);

struct ContrastResult {
    GrayImage image;
    bool degenerate = false; // percentile values coincided; image returned unchanged
};

/// Linear stretch mapping the low percentile to 0 and the high percentile
/// to 1, clamped to [0,1]. The map is monotone in pixel intensity.
ContrastResult enhance_contrast(const GrayImage& img, double low_percentile = 1.0,
                                double high_percentile = 99.0);

/// Crops rows [band_top, band_bottom) at full width, then resizes the band
/// to the fixed 310x90 region of interest.
GrayImage extract_roi(const GrayImage& img, int band_top, int band_bottom);

/// Bilinear resize with pixel-center alignment. Constant images map to
/// constant images and identical dimensions copy pixels exactly.
GrayImage resize(const GrayImage& img, int new_width, int new_height);

/// Linear-interpolation percentile (p in [0,100]) of a value set.
double percentile(std::vector<double> values, double p);

} // namespace glisson
