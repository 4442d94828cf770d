#include "glisson/manifest.hpp"

#include <fstream>
#include <sstream>

#include "glisson/error.hpp"

namespace glisson {

std::string stage_label(int stage) {
    if (stage < 0 || stage > 4) throw ParamError("stage index must lie in 0..4");
    return "F" + std::to_string(stage);
}

int parse_stage_label(const std::string& label) {
    if (label.size() == 2 && label[0] == 'F' && label[1] >= '0' && label[1] <= '4') {
        return label[1] - '0';
    }
    throw DataError("invalid stage label '" + label + "' (expected F0..F4)");
}

void save_manifest(const DatasetManifest& manifest, const std::string& file) {
    std::ofstream out(file);
    if (!out) throw DataError(file + ": cannot open file for writing");
    out << "path,patient_id,stage,variant,origin_path\n";
    for (const auto& row : manifest.rows) {
        for (const std::string* s : {&row.path, &row.patient_id, &row.variant, &row.origin_path}) {
            if (s->find(',') != std::string::npos) {
                throw DataError(file + ": manifest field contains a comma: " + *s);
            }
        }
        out << row.path << "," << row.patient_id << "," << stage_label(row.stage) << ","
            << row.variant << "," << row.origin_path << "\n";
    }
    if (!out) throw DataError(file + ": write failed");
}

DatasetManifest load_manifest(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw DataError(file + ": cannot open file");
    std::string header;
    if (!std::getline(in, header) || header.rfind("path,patient_id,stage,variant,origin_path", 0) != 0) {
        throw DataError(file + ": not a dataset manifest CSV");
    }
    DatasetManifest manifest;
    std::string row;
    std::size_t lineno = 1;
    while (std::getline(in, row)) {
        ++lineno;
        if (row.empty()) continue;
        std::stringstream ss(row);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() == 4) fields.push_back(""); // allow empty trailing origin
        if (fields.size() != 5) {
            throw DataError(file + ":" + std::to_string(lineno) + ": malformed manifest row");
        }
        ManifestRow r;
        r.path = fields[0];
        r.patient_id = fields[1];
        r.stage = parse_stage_label(fields[2]);
        r.variant = fields[3];
        r.origin_path = fields[4];
        manifest.rows.push_back(std::move(r));
    }
    return manifest;
}

} // namespace glisson
