#include "glisson/pipeline.hpp"

#include <cmath>
#include <exception>
#include <filesystem>
#include <map>

#include "glisson/error.hpp"
#include "glisson/image_io.hpp"

namespace glisson {

namespace fs = std::filesystem;

int model_input_height(ImageMode mode) { return mode == ImageMode::roi ? 64 : 128; }
int model_input_width(ImageMode mode) { return mode == ImageMode::roi ? 192 : 128; }

namespace {

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

// Runs fn(i) over [0, n) in parallel, surfacing the first captured exception
// after the loop (exceptions must not cross the omp region).
template <typename Fn>
void parallel_for_each(std::size_t n, Fn&& fn) {
    std::exception_ptr first_error = nullptr;
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < std::int64_t(n); ++i) {
        try {
            fn(std::size_t(i));
        } catch (...) {
#pragma omp critical
            if (!first_error) first_error = std::current_exception();
        }
    }
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace

DatasetManifest preprocess_manifest(const DatasetManifest& manifest,
                                    const PreprocessOptions& options,
                                    const std::string& out_dir) {
    options.srad.validate();
    std::error_code ec;
    fs::create_directories(fs::path(out_dir) / "images", ec);
    if (ec) throw DataError(out_dir + ": cannot create output directories");

    DatasetManifest out = manifest;
    for (std::size_t i = 0; i < out.rows.size(); ++i) {
        const std::string ext = extension_for(format_from_path(out.rows[i].path));
        out.rows[i].origin_path = manifest.rows[i].path;
        out.rows[i].path =
            (fs::path(out_dir) / "images" / ("proc_" + stem_of(manifest.rows[i].path) + ext))
                .string();
    }

    parallel_for_each(manifest.rows.size(), [&](std::size_t i) {
        if (!options.force && fs::exists(out.rows[i].path)) return;
        GrayImage img = load_image(manifest.rows[i].path);
        img = srad_despeckle(img, options.srad);
        if (options.mode == ImageMode::roi) {
            img = extract_roi(img, options.band_top.value_or(0),
                              options.band_bottom.value_or(img.height()));
        }
        img = enhance_contrast(img, options.percentile_low, options.percentile_high).image;
        save_image(img, out.rows[i].path);
    });

    save_manifest(out, (fs::path(out_dir) / "manifest_proc.csv").string());
    return out;
}

std::string line_csv_path(const std::string& lines_dir, const std::string& image_path) {
    return (fs::path(lines_dir) / (stem_of(image_path) + ".csv")).string();
}

void extract_lines(const DatasetManifest& processed, const ExtractOptions& options,
                   const std::string& out_dir) {
    std::error_code ec;
    fs::create_directories(fs::path(out_dir) / "lines", ec);
    if (ec) throw DataError(out_dir + ": cannot create output directories");
    const std::string lines_dir = (fs::path(out_dir) / "lines").string();

    parallel_for_each(processed.rows.size(), [&](std::size_t i) {
        const std::string& src = processed.rows[i].path;
        const std::string csv = line_csv_path(lines_dir, src);
        const std::string raster =
            (fs::path(lines_dir) / (stem_of(src) + "_line.pgm")).string();
        if (!options.force && fs::exists(csv) && fs::exists(raster)) return;

        const GrayImage img = load_image(src);
        options.track.validate(img.height());
        const GradientField grad = prewitt_gradient(img);
        const LinePath path = extract_line(grad, options.track);
        save_line_csv(path, csv);
        write_pgm(line_to_binary(path, img.width(), img.height()), raster);
    });
}

void compute_feature_csv(const DatasetManifest& processed, const std::string& lines_dir,
                         const std::string& csv_path) {
    std::vector<FeatureRecord> records(processed.rows.size());
    parallel_for_each(processed.rows.size(), [&](std::size_t i) {
        const ManifestRow& row = processed.rows[i];
        const GrayImage img = load_image(row.path);
        const LinePath path = load_line_csv(line_csv_path(lines_dir, row.path));
        const GradientField grad = prewitt_gradient(img);

        FeatureRecord rec;
        rec.path = row.path;
        rec.patient_id = row.patient_id;
        rec.stage = row.stage;
        rec.features = compute_features(img, grad, path);
        records[i] = std::move(rec);
    });
    std::error_code ec;
    fs::create_directories(fs::path(csv_path).parent_path(), ec);
    save_feature_csv(records, csv_path);
}

nn::Tensor image_tensor(const GrayImage& img, int dst_h, int dst_w) {
    const GrayImage small = resize(img, dst_w, dst_h);
    nn::Tensor t({1, dst_h, dst_w});
    t.data = small.pixels();
    return t;
}

nn::Tensor rasterize_line(const LinePath& path, int src_h, int dst_h, int dst_w) {
    nn::Tensor raster({1, dst_h, dst_w});
    const double sy = double(dst_h) / double(src_h);
    const double sx = double(dst_w) / double(path.width);
    for (int c = 0; c < path.width; ++c) {
        if (!path.rows[std::size_t(c)]) continue;
        const int y = std::clamp(
            int(std::lround((double(*path.rows[std::size_t(c)]) + 0.5) * sy - 0.5)), 0,
            dst_h - 1);
        const int x =
            std::clamp(int(std::lround((double(c) + 0.5) * sx - 0.5)), 0, dst_w - 1);
        for (int dy = -1; dy <= 1; ++dy) {
            const int yy = std::clamp(y + dy, 0, dst_h - 1);
            raster.data[std::size_t(yy) * std::size_t(dst_w) + std::size_t(x)] = 1.0;
        }
    }
    return raster;
}

ElementStore load_element_store(const DatasetManifest& processed, ImageMode mode,
                                bool need_images, const std::string& lines_dir,
                                const std::string& features_csv) {
    ElementStore store;
    store.manifest = processed;
    store.mode = mode;
    store.img_h = model_input_height(mode);
    store.img_w = model_input_width(mode);

    if (need_images) {
        store.images.resize(processed.rows.size());
        if (!lines_dir.empty()) store.lines.resize(processed.rows.size());
        parallel_for_each(processed.rows.size(), [&](std::size_t i) {
            const GrayImage img = load_image(processed.rows[i].path);
            store.images[i] = image_tensor(img, store.img_h, store.img_w);
            if (!lines_dir.empty()) {
                const LinePath path =
                    load_line_csv(line_csv_path(lines_dir, processed.rows[i].path));
                store.lines[i] = rasterize_line(path, img.height(), store.img_h, store.img_w);
            }
        });
        store.has_images = true;
        store.has_lines = !lines_dir.empty();
    }

    if (!features_csv.empty()) {
        const std::vector<FeatureRecord> records = load_feature_csv(features_csv);
        std::map<std::string, FeatureVector> by_path;
        for (const auto& rec : records) by_path[rec.path] = rec.features;
        store.features.resize(processed.rows.size());
        for (std::size_t i = 0; i < processed.rows.size(); ++i) {
            auto it = by_path.find(processed.rows[i].path);
            if (it == by_path.end()) {
                throw DataError(features_csv + ": no feature row for " + processed.rows[i].path);
            }
            store.features[i] = it->second;
        }
        store.has_features = true;
    }
    return store;
}

} // namespace glisson
