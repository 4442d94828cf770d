#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "glisson/image.hpp"

namespace glisson {

/// Per-column row index of the detected capsule line. Columns demoted to
/// gaps hold nullopt; segments are the maximal runs of consecutive detected
/// columns (inclusive start/end column pairs, ascending).
struct LinePath {
    int width = 0;
    std::vector<std::optional<int>> rows;
    std::vector<std::pair<int, int>> segments;

    int detected_count() const {
        int n = 0;
        for (const auto& r : rows) n += r.has_value();
        return n;
    }
};

struct TrackParams {
    double tau = 0.2;    // gap threshold, fraction of the global max edge magnitude
    double lambda = 0.5; // smoothness penalty per row of vertical deviation
    int max_jump = 3;    // largest inter-column row step the path may take
    std::optional<int> band_top;
    std::optional<int> band_bottom;

    void validate(int image_height) const;
};

/// Tracks the line as the minimum-cost left-to-right path over the normalized
/// edge magnitude: sum_c [-m(r_c, c) + lambda * |r_c - r_{c-1}|], restricted
/// to the band and to steps of at most max_jump. Cost ties resolve to the
/// smaller row. After backtracking, columns whose magnitude falls below tau
/// are demoted to gaps; an all-zero field yields an empty path.
LinePath extract_line(const GradientField& grad, const TrackParams& params);

/// Rasterizes a path: 1.0 at each detected (row, column), 0.0 elsewhere.
GrayImage line_to_binary(const LinePath& path, int width, int height);

/// Maximal runs of consecutive detected columns, ascending.
std::vector<std::pair<int, int>> path_segments(const std::vector<std::optional<int>>& rows);

/// CSV serialization: header `column,row`, absent rows encoded as empty.
void save_line_csv(const LinePath& path, const std::string& file);
LinePath load_line_csv(const std::string& file);

} // namespace glisson
