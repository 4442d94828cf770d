#include "glisson/report.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "glisson/error.hpp"

namespace glisson {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

} // namespace

void write_cells_csv(const ExperimentReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError(path + ": cannot open file for writing");
    out << "model,mode,classes,permutation,fold,acc,mae\n";
    for (const CellResult& c : report.cells) {
        out << nn::to_string(report.model) << "," << to_string(report.mode) << ","
            << report.class_count << "," << c.permutation << "," << c.fold << "," << fmt(c.acc)
            << "," << fmt(c.mae) << "\n";
    }
    if (!out) throw DataError(path + ": write failed");
}

void write_aggregate_csv(const ExperimentReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError(path + ": cannot open file for writing");
    out << "model,mode,classes,acc_mean,acc_std,mae_mean,mae_std\n";
    out << nn::to_string(report.model) << "," << to_string(report.mode) << ","
        << report.class_count << "," << fmt(report.acc_mean) << "," << fmt(report.acc_std) << ","
        << fmt(report.mae_mean) << "," << fmt(report.mae_std) << "\n";
    if (!out) throw DataError(path + ": write failed");
}

std::vector<AggregateRow> load_aggregate_rows(const std::string& reports_dir) {
    std::vector<std::string> files;
    if (!fs::is_directory(reports_dir)) throw DataError(reports_dir + ": not a directory");
    for (const auto& entry : fs::directory_iterator(reports_dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("aggregate_", 0) == 0 && entry.path().extension() == ".csv") {
            files.push_back(entry.path().string());
        }
    }
    std::sort(files.begin(), files.end());

    std::vector<AggregateRow> rows;
    for (const auto& file : files) {
        std::ifstream in(file);
        if (!in) throw DataError(file + ": cannot open file");
        std::string line;
        std::getline(in, line); // header
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::stringstream ss(line);
            std::string field;
            std::vector<std::string> fields;
            while (std::getline(ss, field, ',')) fields.push_back(field);
            if (fields.size() != 7) throw DataError(file + ": malformed aggregate row");
            AggregateRow row;
            row.model = fields[0];
            row.mode = fields[1];
            try {
                row.classes = std::stoi(fields[2]);
                row.acc_mean = std::stod(fields[3]);
                row.acc_std = std::stod(fields[4]);
                row.mae_mean = std::stod(fields[5]);
                row.mae_std = std::stod(fields[6]);
            } catch (const std::exception&) {
                throw DataError(file + ": malformed numeric field");
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::string render_table(const std::vector<AggregateRow>& rows) {
    std::ostringstream out;
    const char* class_names[] = {"", "", "Two classes", "Three classes", "", "Five classes"};
    for (const std::string& mode : {std::string("full"), std::string("roi")}) {
        for (int classes : {2, 3, 5}) {
            std::vector<AggregateRow> cell;
            for (const auto& r : rows) {
                if (r.mode == mode && r.classes == classes) cell.push_back(r);
            }
            if (cell.empty()) continue;
            std::sort(cell.begin(), cell.end(),
                      [](const AggregateRow& a, const AggregateRow& b) { return a.model < b.model; });
            out << "== " << class_names[classes] << " (" << mode << " images) ==\n";
            char buf[128];
            std::snprintf(buf, sizeof(buf), "%-8s %-18s %-18s\n", "model", "Acc", "MAE");
            out << buf;
            for (const auto& r : cell) {
                std::snprintf(buf, sizeof(buf), "%-8s %6.2f%% +/- %-5.2f %6.3f +/- %-5.3f\n",
                              r.model.c_str(), 100.0 * r.acc_mean, 100.0 * r.acc_std, r.mae_mean,
                              r.mae_std);
                out << buf;
            }
            out << "\n";
        }
    }
    if (out.str().empty()) return "(no aggregate reports found)\n";
    return out.str();
}

GrayImage render_accuracy_chart(const std::vector<AggregateRow>& rows) {
    const int bar_w = 24, gap = 8, margin = 12, height = 120;
    const int n = std::max<int>(1, int(rows.size()));
    const int width = std::max(64, 2 * margin + n * bar_w + (n - 1) * gap);
    GrayImage img(width, height, 1.0);

    for (int i = 0; i < int(rows.size()); ++i) {
        const int x0 = margin + i * (bar_w + gap);
        const int bar_h = int(rows[std::size_t(i)].acc_mean * (height - 2 * margin));
        for (int y = height - margin - bar_h; y < height - margin; ++y) {
            for (int x = x0; x < x0 + bar_w; ++x) img(y, x) = 0.2;
        }
    }
    // baseline
    for (int x = margin / 2; x < width - margin / 2; ++x) img(height - margin, x) = 0.0;
    return img;
}

} // namespace glisson
