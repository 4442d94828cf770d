#pragma once

#include <string>
#include <vector>

namespace glisson {

/// One dataset element. `variant` is "orig" for source images or a short
/// augmentation tag; `origin_path` points at the source element (itself for
/// originals). Stage is the Metavir index 0..4, serialized as F0..F4.
struct ManifestRow {
    std::string path;
    std::string patient_id;
    int stage = 0;
    std::string variant = "orig";
    std::string origin_path;
};

struct DatasetManifest {
    std::vector<ManifestRow> rows;

    bool empty() const { return rows.empty(); }
    std::size_t size() const { return rows.size(); }
};

std::string stage_label(int stage);
int parse_stage_label(const std::string& label);

/// CSV with header `path,patient_id,stage,variant,origin_path`.
void save_manifest(const DatasetManifest& manifest, const std::string& file);
DatasetManifest load_manifest(const std::string& file);

} // namespace glisson
