#pragma once

#include <array>
#include <string>
#include <vector>

#include "glisson/image.hpp"
#include "glisson/line.hpp"

namespace glisson {

inline constexpr int kFeatureCount = 5;

/// The five scalar line descriptors. An undetected line yields the all-zero
/// vector with `empty` set; continuity is zero exactly in that case.
struct FeatureVector {
    double grad_mean = 0.0;  // mean edge magnitude at detected line pixels
    double grad_var = 0.0;   // sample variance (n-1) of the same
    double continuity = 0.0; // detected-column fraction in [0,1]
    double length = 0.0;     // arc length of detected runs, normalized by width-1
    double contrast = 0.0;   // mean Michelson-style line/background contrast
    bool empty = true;

    std::array<double, kFeatureCount> as_array() const {
        return {grad_mean, grad_var, continuity, length, contrast};
    }
    static FeatureVector from_array(const std::array<double, kFeatureCount>& a, bool empty_flag);
};

/// Features are sampled on the raster the line was extracted from (the
/// despeckled, contrast-enhanced image) and its gradient field.
FeatureVector compute_features(const GrayImage& img, const GradientField& grad,
                               const LinePath& path);

/// Per-feature training-set statistics for z-score normalization.
struct FeatureStats {
    std::array<double, kFeatureCount> mean{};
    std::array<double, kFeatureCount> stddev{};
    std::array<bool, kFeatureCount> zero_std{}; // flagged features pass through unscaled
};

FeatureStats fit_feature_stats(const std::vector<FeatureVector>& vectors);
FeatureVector normalize(const FeatureVector& v, const FeatureStats& stats);
FeatureVector denormalize(const FeatureVector& v, const FeatureStats& stats);

/// Feature CSV record and serialization
/// (`path,patient_id,stage,grad_mean,grad_var,continuity,length,contrast,empty_flag`).
struct FeatureRecord {
    std::string path;
    std::string patient_id;
    int stage = 0;
    FeatureVector features;
};

void save_feature_csv(const std::vector<FeatureRecord>& records, const std::string& file);
std::vector<FeatureRecord> load_feature_csv(const std::string& file);

} // namespace glisson
