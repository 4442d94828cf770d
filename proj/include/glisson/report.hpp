#pragma once

#include <string>
#include <vector>

#include "glisson/eval.hpp"
#include "glisson/image.hpp"

namespace glisson {

/// Per-cell CSV: `model,mode,classes,permutation,fold,acc,mae`.
void write_cells_csv(const ExperimentReport& report, const std::string& path);

/// Aggregate CSV: `model,mode,classes,acc_mean,acc_std,mae_mean,mae_std`.
void write_aggregate_csv(const ExperimentReport& report, const std::string& path);

struct AggregateRow {
    std::string model;
    std::string mode;
    int classes = 0;
    double acc_mean = 0.0, acc_std = 0.0, mae_mean = 0.0, mae_std = 0.0;
};

/// Collects every aggregate_*.csv under a reports directory.
std::vector<AggregateRow> load_aggregate_rows(const std::string& reports_dir);

/// Aligned text table grouped by class count, one Acc/MAE pair per model.
std::string render_table(const std::vector<AggregateRow>& rows);

/// Grayscale bar chart of aggregate accuracies (one bar per row).
GrayImage render_accuracy_chart(const std::vector<AggregateRow>& rows);

} // namespace glisson
