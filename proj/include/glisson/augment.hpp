#pragma once

#include <cstdint>
#include <string>

#include "glisson/image.hpp"
#include "glisson/manifest.hpp"

namespace glisson {

enum class AugmentKind { identity, crop_zoom, rotate };

struct AugmentSpec {
    AugmentKind kind = AugmentKind::identity;
    double zoom_fraction = 0.9;  // linear crop scale, [0.85, 0.98], < 1 for crop_zoom
    double angle_degrees = 0.0;  // non-zero, |angle| <= 5 for rotate
    std::uint64_t seed = 0;

    void validate() const;
};

struct CropRect {
    int left = 0, top = 0, width = 0, height = 0;
};

/// The crop window crop_and_zoom will use: a centered rect of linear scale
/// zoom_fraction whose center is jittered by at most 2% of each dimension,
/// derived deterministically from the spec seed.
CropRect crop_rect_for(int width, int height, const AugmentSpec& spec);

/// Centered (jittered) crop scaled back to the original dimensions.
GrayImage crop_and_zoom(const GrayImage& img, const AugmentSpec& spec);

/// Rotation about the top-center of the raster, where a linear probe contacts
/// the skin. Bilinear sampling; out-of-support samples replicate the edge.
GrayImage rotate_about_probe_axis(const GrayImage& img, const AugmentSpec& spec);

/// Expands a manifest: each source element yields itself plus
/// variants_per_image augmented elements (alternating crop-and-zoom and
/// rotation, deterministically seeded). Labels and patient identity are
/// preserved; augmented images are written next to out_dir/images.
DatasetManifest augment_dataset(const DatasetManifest& manifest, int variants_per_image,
                                std::uint64_t seed, const std::string& out_dir);

} // namespace glisson
