#include "glisson/line.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "glisson/error.hpp"

namespace glisson {

void TrackParams::validate(int image_height) const {
    if (!(tau > 0.0 && tau < 1.0)) throw ParamError("track: tau must lie in (0,1)");
    if (lambda < 0.0) throw ParamError("track: lambda must be non-negative");
    if (max_jump <= 0) throw ParamError("track: max_jump must be positive");
    const int top = band_top.value_or(0);
    const int bottom = band_bottom.value_or(image_height);
    if (top < 0 || bottom > image_height || top >= bottom) {
        throw ParamError("track: band [" + std::to_string(top) + ", " + std::to_string(bottom) +
                         ") invalid for image height " + std::to_string(image_height));
    }
}

LinePath extract_line(const GradientField& grad, const TrackParams& params) {
    params.validate(grad.height);
    const int w = grad.width;
    const int top = params.band_top.value_or(0);
    const int bottom = params.band_bottom.value_or(grad.height);
    const int bh = bottom - top;

    LinePath path;
    path.width = w;
    path.rows.assign(std::size_t(w), std::nullopt);

    double mmax = 0.0;
    for (double v : grad.magnitude) mmax = std::max(mmax, v);
    if (mmax <= 0.0) return path; // featureless field: no detections

    auto norm_mag = [&](int r, int c) {
        return grad.magnitude[std::size_t(top + r) * std::size_t(w) + std::size_t(c)] / mmax;
    };

    // Column-wise DP. cand = prev + lambda*step and cost = cand - m are kept
    // as two separate additions so the enumeration oracle can reproduce the
    // exact floating-point accumulation.
    std::vector<double> prev(std::size_t(bh), 0.0), curc(std::size_t(bh), 0.0);
    std::vector<int> back(std::size_t(w) * std::size_t(bh), -1);
    for (int r = 0; r < bh; ++r) prev[std::size_t(r)] = -norm_mag(r, 0);

    for (int c = 1; c < w; ++c) {
        for (int r = 0; r < bh; ++r) {
            double best = std::numeric_limits<double>::infinity();
            int best_prev = -1;
            const int lo = std::max(0, r - params.max_jump);
            const int hi = std::min(bh - 1, r + params.max_jump);
            for (int rp = lo; rp <= hi; ++rp) { // ascending: ties go to the smaller row
                const double cand = prev[std::size_t(rp)] + params.lambda * std::abs(r - rp);
                if (cand < best) {
                    best = cand;
                    best_prev = rp;
                }
            }
            curc[std::size_t(r)] = best - norm_mag(r, c);
            back[std::size_t(c) * std::size_t(bh) + std::size_t(r)] = best_prev;
        }
        prev.swap(curc);
    }

    int r = 0;
    for (int cand = 1; cand < bh; ++cand) {
        if (prev[std::size_t(cand)] < prev[std::size_t(r)]) r = cand;
    }
    std::vector<int> chosen(std::size_t(w), 0);
    for (int c = w - 1; c >= 0; --c) {
        chosen[std::size_t(c)] = r;
        if (c > 0) r = back[std::size_t(c) * std::size_t(bh) + std::size_t(r)];
    }

    // Gap demotion happens after the global optimization so a weak column
    // cannot derail the path through its neighbours.
    for (int c = 0; c < w; ++c) {
        if (norm_mag(chosen[std::size_t(c)], c) >= params.tau) {
            path.rows[std::size_t(c)] = top + chosen[std::size_t(c)];
        }
    }
    path.segments = path_segments(path.rows);
    return path;
}

GrayImage line_to_binary(const LinePath& path, int width, int height) {
    if (path.width != width) {
        throw ParamError("line_to_binary: path width " + std::to_string(path.width) +
                         " does not match raster width " + std::to_string(width));
    }
    GrayImage img(width, height, 0.0);
    for (int c = 0; c < width; ++c) {
        if (!path.rows[std::size_t(c)]) continue;
        const int r = *path.rows[std::size_t(c)];
        if (r < 0 || r >= height) {
            throw ParamError("line_to_binary: row " + std::to_string(r) +
                             " outside raster height " + std::to_string(height));
        }
        img(r, c) = 1.0;
    }
    return img;
}

std::vector<std::pair<int, int>> path_segments(const std::vector<std::optional<int>>& rows) {
    std::vector<std::pair<int, int>> segments;
    int start = -1;
    for (int c = 0; c <= int(rows.size()); ++c) {
        const bool detected = c < int(rows.size()) && rows[std::size_t(c)].has_value();
        if (detected && start < 0) start = c;
        if (!detected && start >= 0) {
            segments.emplace_back(start, c - 1);
            start = -1;
        }
    }
    return segments;
}

void save_line_csv(const LinePath& path, const std::string& file) {
    std::ofstream out(file);
    if (!out) throw DataError(file + ": cannot open file for writing");
    out << "column,row\n";
    for (int c = 0; c < path.width; ++c) {
        out << c << ",";
        if (path.rows[std::size_t(c)]) out << *path.rows[std::size_t(c)];
        out << "\n";
    }
    if (!out) throw DataError(file + ": write failed");
}

LinePath load_line_csv(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw DataError(file + ": cannot open file");
    std::string header;
    if (!std::getline(in, header) || header.rfind("column,row", 0) != 0) {
        throw DataError(file + ": not a line CSV (missing column,row header)");
    }
    LinePath path;
    std::string row;
    while (std::getline(in, row)) {
        if (row.empty()) continue;
        const auto comma = row.find(',');
        if (comma == std::string::npos) throw DataError(file + ": malformed line CSV row");
        int column = 0;
        try {
            column = std::stoi(row.substr(0, comma));
        } catch (const std::exception&) {
            throw DataError(file + ": malformed column index");
        }
        if (column != int(path.rows.size())) throw DataError(file + ": non-contiguous columns");
        const std::string value = row.substr(comma + 1);
        if (value.empty()) {
            path.rows.emplace_back(std::nullopt);
        } else {
            try {
                path.rows.emplace_back(std::stoi(value));
            } catch (const std::exception&) {
                throw DataError(file + ": malformed row index");
            }
        }
    }
    path.width = int(path.rows.size());
    path.segments = path_segments(path.rows);
    return path;
}

} // namespace glisson
