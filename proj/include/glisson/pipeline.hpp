#pragma once

#include <optional>
#include <string>

#include "glisson/eval.hpp"
#include "glisson/imaging.hpp"
#include "glisson/line.hpp"
#include "glisson/manifest.hpp"

namespace glisson {

/// Model input resolutions per image mode (roi keeps the 310:90 aspect).
int model_input_height(ImageMode mode);
int model_input_width(ImageMode mode);

struct PreprocessOptions {
    SradParams srad;
    double percentile_low = 1.0;
    double percentile_high = 99.0;
    ImageMode mode = ImageMode::roi;
    std::optional<int> band_top;    // roi crop band; full height when absent
    std::optional<int> band_bottom;
    bool force = false; // rewrite outputs that already exist
};

/// Despeckles, optionally crops/resizes to the ROI, and contrast-enhances
/// every manifest element. Processed images land in out_dir/images; returns
/// the manifest rewritten to point at them (also saved as
/// out_dir/manifest_proc.csv).
DatasetManifest preprocess_manifest(const DatasetManifest& manifest,
                                    const PreprocessOptions& options,
                                    const std::string& out_dir);

struct ExtractOptions {
    TrackParams track;
    bool force = false;
};

/// Runs the edge detector and line tracker on each processed image, writing
/// out_dir/lines/<stem>.csv and <stem>_line.pgm.
void extract_lines(const DatasetManifest& processed, const ExtractOptions& options,
                   const std::string& out_dir);

/// Computes the five line features per element against the extracted lines
/// and writes the feature CSV to csv_path.
void compute_feature_csv(const DatasetManifest& processed, const std::string& lines_dir,
                         const std::string& csv_path);

/// Path of the line CSV extract_lines writes for a processed element.
std::string line_csv_path(const std::string& lines_dir, const std::string& image_path);

/// (1,dst_h,dst_w) tensor of a bilinearly resized image.
nn::Tensor image_tensor(const GrayImage& img, int dst_h, int dst_w);

/// (1,dst_h,dst_w) binary raster of a line path scaled from src_h rows,
/// dilated one row so the sparse channel survives 3x3 filters.
nn::Tensor rasterize_line(const LinePath& path, int src_h, int dst_h, int dst_w);

/// Loads model-ready artifacts for one image mode. Images and line rasters
/// are resized/rasterized to the model input resolution. Pass empty strings
/// for artifacts a model kind does not need.
ElementStore load_element_store(const DatasetManifest& processed, ImageMode mode,
                                bool need_images, const std::string& lines_dir,
                                const std::string& features_csv);

} // namespace glisson
