#include "glisson/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "glisson/error.hpp"
#include "glisson/manifest.hpp"

namespace glisson {

FeatureVector FeatureVector::from_array(const std::array<double, kFeatureCount>& a,
                                        bool empty_flag) {
    FeatureVector v;
    v.grad_mean = a[0];
    v.grad_var = a[1];
    v.continuity = a[2];
    v.length = a[3];
    v.contrast = a[4];
    v.empty = empty_flag;
    return v;
}

FeatureVector compute_features(const GrayImage& img, const GradientField& grad,
                               const LinePath& path) {
    if (grad.width != img.width() || grad.height != img.height() || path.width != img.width()) {
        throw ParamError("compute_features: image, gradient and path dimensions disagree");
    }

    std::vector<int> detected;
    detected.reserve(std::size_t(path.width));
    for (int c = 0; c < path.width; ++c) {
        if (path.rows[std::size_t(c)]) detected.push_back(c);
    }
    if (detected.empty()) return {}; // all-zero vector, empty flag set

    FeatureVector v;
    v.empty = false;

    double sum = 0.0;
    for (int c : detected) sum += grad.mag(*path.rows[std::size_t(c)], c);
    v.grad_mean = sum / double(detected.size());

    if (detected.size() > 1) {
        double ss = 0.0;
        for (int c : detected) {
            const double d = grad.mag(*path.rows[std::size_t(c)], c) - v.grad_mean;
            ss += d * d;
        }
        v.grad_var = ss / double(detected.size() - 1);
    }

    v.continuity = double(detected.size()) / double(path.width);

    double arc = 0.0;
    for (std::size_t i = 0; i + 1 < detected.size(); ++i) {
        if (detected[i + 1] != detected[i] + 1) continue; // only consecutive pairs
        const double dr = double(*path.rows[std::size_t(detected[i + 1])] -
                                 *path.rows[std::size_t(detected[i])]);
        arc += std::sqrt(1.0 + dr * dr);
    }
    v.length = arc / double(path.width - 1);

    // Michelson-style contrast against a band offset 4..6 rows above and below.
    constexpr double kEps = 1e-6;
    double contrast_sum = 0.0;
    for (int c : detected) {
        const int r = *path.rows[std::size_t(c)];
        const double line_val = img(r, c);
        double bg = 0.0;
        for (int d = 4; d <= 6; ++d) {
            bg += img.clamped(r - d, c);
            bg += img.clamped(r + d, c);
        }
        bg /= 6.0;
        contrast_sum += (line_val - bg) / (line_val + bg + kEps);
    }
    v.contrast = contrast_sum / double(detected.size());
    return v;
}

FeatureStats fit_feature_stats(const std::vector<FeatureVector>& vectors) {
    if (vectors.empty()) throw ParamError("fit_feature_stats: empty vector list");

    FeatureStats stats;
    const double n = double(vectors.size());
    for (const auto& v : vectors) {
        const auto a = v.as_array();
        for (int f = 0; f < kFeatureCount; ++f) stats.mean[std::size_t(f)] += a[std::size_t(f)];
    }
    for (int f = 0; f < kFeatureCount; ++f) stats.mean[std::size_t(f)] /= n;

    if (vectors.size() > 1) {
        for (const auto& v : vectors) {
            const auto a = v.as_array();
            for (int f = 0; f < kFeatureCount; ++f) {
                const double d = a[std::size_t(f)] - stats.mean[std::size_t(f)];
                stats.stddev[std::size_t(f)] += d * d;
            }
        }
        for (int f = 0; f < kFeatureCount; ++f) {
            stats.stddev[std::size_t(f)] = std::sqrt(stats.stddev[std::size_t(f)] / (n - 1.0));
        }
    }
    for (int f = 0; f < kFeatureCount; ++f) {
        stats.zero_std[std::size_t(f)] = stats.stddev[std::size_t(f)] < 1e-12;
    }
    return stats;
}

FeatureVector normalize(const FeatureVector& v, const FeatureStats& stats) {
    auto a = v.as_array();
    for (int f = 0; f < kFeatureCount; ++f) {
        if (stats.zero_std[std::size_t(f)]) continue;
        a[std::size_t(f)] = (a[std::size_t(f)] - stats.mean[std::size_t(f)]) /
                            stats.stddev[std::size_t(f)];
    }
    return FeatureVector::from_array(a, v.empty);
}

FeatureVector denormalize(const FeatureVector& v, const FeatureStats& stats) {
    auto a = v.as_array();
    for (int f = 0; f < kFeatureCount; ++f) {
        if (stats.zero_std[std::size_t(f)]) continue;
        a[std::size_t(f)] = a[std::size_t(f)] * stats.stddev[std::size_t(f)] +
                            stats.mean[std::size_t(f)];
    }
    return FeatureVector::from_array(a, v.empty);
}

void save_feature_csv(const std::vector<FeatureRecord>& records, const std::string& file) {
    std::ofstream out(file);
    if (!out) throw DataError(file + ": cannot open file for writing");
    out << "path,patient_id,stage,grad_mean,grad_var,continuity,length,contrast,empty_flag\n";
    char buf[64];
    for (const auto& rec : records) {
        out << rec.path << "," << rec.patient_id << "," << stage_label(rec.stage);
        for (double x : rec.features.as_array()) {
            std::snprintf(buf, sizeof(buf), "%.17g", x);
            out << "," << buf;
        }
        out << "," << (rec.features.empty ? 1 : 0) << "\n";
    }
    if (!out) throw DataError(file + ": write failed");
}

std::vector<FeatureRecord> load_feature_csv(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw DataError(file + ": cannot open file");
    std::string header;
    if (!std::getline(in, header) || header.rfind("path,patient_id,stage,", 0) != 0) {
        throw DataError(file + ": not a feature CSV");
    }
    std::vector<FeatureRecord> records;
    std::string row;
    while (std::getline(in, row)) {
        if (row.empty()) continue;
        std::stringstream ss(row);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 9) throw DataError(file + ": malformed feature CSV row");
        FeatureRecord rec;
        rec.path = fields[0];
        rec.patient_id = fields[1];
        rec.stage = parse_stage_label(fields[2]);
        std::array<double, kFeatureCount> a{};
        try {
            for (int f = 0; f < kFeatureCount; ++f) a[std::size_t(f)] = std::stod(fields[std::size_t(3 + f)]);
            rec.features = FeatureVector::from_array(a, std::stoi(fields[8]) != 0);
        } catch (const std::exception&) {
            throw DataError(file + ": malformed numeric field");
        }
        records.push_back(std::move(rec));
    }
    return records;
}

} // namespace glisson
