#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "glisson/image.hpp"
#include "glisson/image_io.hpp"
#include "glisson/line.hpp"
#include "glisson/manifest.hpp"

namespace glisson {

/// Stage-parameterized synthetic capsule image. The clinical roster is not
/// available, so these phantoms stand in: a bright quasi-horizontal line over
/// a dark background, fragmented and dimmed as the stage increases, under
/// multiplicative gamma speckle.
struct PhantomParams {
    int stage = 0;
    double line_brightness = 0.90; // peak of the rendered line profile
    double gap_fraction = 0.02;    // expected fraction of gap columns
    double jitter_sigma = 0.5;     // row-jitter scale in pixels
    int looks = 4;                 // gamma speckle looks; larger means cleaner
    int width = 310;
    int height = 90;
    std::uint64_t seed = 0;

    void validate() const;
};

struct PhantomTruth {
    GrayImage image;
    LinePath truth_path; // pre-noise geometry, gap columns absent
    int stage = 0;
};

/// Linear interpolation between the F0 endpoints (brightness 0.90, gap 0.02,
/// jitter 0.5) and the F4 endpoints (0.55, 0.35, 2.5); looks 4, size 310x90.
PhantomParams stage_defaults(int stage);

PhantomTruth generate_phantom(const PhantomParams& params);

/// Writes per_stage[s] phantoms per stage (images plus truth-line CSVs under
/// out_dir) with unique synthetic patient ids and saves out_dir/manifest.csv.
/// width/height of 0 keep the stage defaults.
DatasetManifest generate_dataset(const std::vector<int>& per_stage, std::uint64_t seed,
                                 const std::string& out_dir,
                                 ImageFormat format = ImageFormat::pgm, int width = 0,
                                 int height = 0);

} // namespace glisson
