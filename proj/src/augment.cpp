#include "glisson/augment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "glisson/error.hpp"
#include "glisson/image_io.hpp"
#include "glisson/imaging.hpp"
#include "glisson/rng.hpp"

namespace glisson {

void AugmentSpec::validate() const {
    switch (kind) {
        case AugmentKind::identity:
            return;
        case AugmentKind::crop_zoom:
            if (!(zoom_fraction >= 0.85 && zoom_fraction < 1.0)) {
                throw ParamError("augment: zoom_fraction must lie in [0.85, 1)");
            }
            return;
        case AugmentKind::rotate:
            if (angle_degrees == 0.0 || std::abs(angle_degrees) > 5.0) {
                throw ParamError("augment: rotation angle must be non-zero and at most 5 degrees");
            }
            return;
    }
    throw ParamError("augment: unknown kind");
}

CropRect crop_rect_for(int width, int height, const AugmentSpec& spec) {
    const int cw = int(std::floor(spec.zoom_fraction * width));
    const int ch = int(std::floor(spec.zoom_fraction * height));
    if (cw < 3 || ch < 3) throw ParamError("augment: crop window smaller than 3x3");

    Rng rng(mix_seed(spec.seed, 0xc209));
    const double jx = rng.uniform(-0.02, 0.02) * width;
    const double jy = rng.uniform(-0.02, 0.02) * height;

    CropRect rect;
    rect.width = cw;
    rect.height = ch;
    rect.left = std::clamp(int(std::lround((width - cw) / 2.0 + jx)), 0, width - cw);
    rect.top = std::clamp(int(std::lround((height - ch) / 2.0 + jy)), 0, height - ch);
    return rect;
}

GrayImage crop_and_zoom(const GrayImage& img, const AugmentSpec& spec) {
    if (spec.kind != AugmentKind::crop_zoom) throw ParamError("augment: spec kind is not crop_zoom");
    spec.validate();
    const CropRect rect = crop_rect_for(img.width(), img.height(), spec);

    std::vector<double> crop(std::size_t(rect.width) * std::size_t(rect.height));
    for (int y = 0; y < rect.height; ++y) {
        for (int x = 0; x < rect.width; ++x) {
            crop[std::size_t(y) * std::size_t(rect.width) + std::size_t(x)] =
                img(rect.top + y, rect.left + x);
        }
    }
    return resize(GrayImage::from_pixels(rect.width, rect.height, std::move(crop)), img.width(),
                  img.height());
}

GrayImage rotate_about_probe_axis(const GrayImage& img, const AugmentSpec& spec) {
    if (spec.kind != AugmentKind::rotate) throw ParamError("augment: spec kind is not rotate");
    spec.validate();

    const double theta = spec.angle_degrees * 3.14159265358979323846 / 180.0;
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const double cx = double(img.width()) / 2.0; // probe sits at the top of the raster
    const double cy = 0.0;

    const int w = img.width(), h = img.height();
    std::vector<double> out(std::size_t(w) * std::size_t(h));
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double dx = double(x) - cx;
            const double dy = double(y) - cy;
            // inverse map, so each output pixel samples the source
            double sxf = cx + c * dx + s * dy;
            double syf = cy - s * dx + c * dy;
            sxf = std::clamp(sxf, 0.0, double(w - 1)); // edge replication fill
            syf = std::clamp(syf, 0.0, double(h - 1));
            const int x0 = std::min(int(sxf), w - 2);
            const int y0 = std::min(int(syf), h - 2);
            const double fx = sxf - x0;
            const double fy = syf - y0;
            const double top = (1.0 - fx) * img(y0, x0) + fx * img(y0, x0 + 1);
            const double bot = (1.0 - fx) * img(y0 + 1, x0) + fx * img(y0 + 1, x0 + 1);
            out[std::size_t(y) * std::size_t(w) + std::size_t(x)] =
                std::clamp((1.0 - fy) * top + fy * bot, 0.0, 1.0);
        }
    }
    return GrayImage::from_pixels(w, h, std::move(out));
}

namespace {

std::string stem_of(const std::string& path) {
    return std::filesystem::path(path).stem().string();
}

} // namespace

DatasetManifest augment_dataset(const DatasetManifest& manifest, int variants_per_image,
                                std::uint64_t seed, const std::string& out_dir) {
    if (manifest.empty()) throw ParamError("augment: manifest is empty");
    if (variants_per_image < 0) throw ParamError("augment: variant count must be non-negative");

    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(fs::path(out_dir) / "images", ec);
    if (ec) throw DataError(out_dir + ": cannot create output directories");

    DatasetManifest out;
    for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
        const ManifestRow& src = manifest.rows[i];
        out.rows.push_back(src);
        if (variants_per_image == 0) continue;

        GrayImage img;
        try {
            img = load_image(src.path);
        } catch (const DataError&) {
            throw;
        }
        const std::string ext = extension_for(format_from_path(src.path));

        for (int v = 1; v <= variants_per_image; ++v) {
            AugmentSpec spec;
            spec.seed = mix_seed(mix_seed(seed, i), std::uint64_t(v));
            Rng rng(mix_seed(spec.seed, 0xa06));

            GrayImage variant;
            std::string tag;
            if (v % 2 == 1) { // alternate crop-and-zoom / rotation
                spec.kind = AugmentKind::crop_zoom;
                spec.zoom_fraction = rng.uniform(0.85, 0.98);
                variant = crop_and_zoom(img, spec);
                tag = "cz" + std::to_string(v);
            } else {
                spec.kind = AugmentKind::rotate;
                const double magnitude = rng.uniform(1.0, 5.0);
                spec.angle_degrees = rng.unit() < 0.5 ? -magnitude : magnitude;
                variant = rotate_about_probe_axis(img, spec);
                tag = "rot" + std::to_string(v);
            }

            const std::string path =
                (fs::path(out_dir) / "images" / (stem_of(src.path) + "_" + tag + ext)).string();
            save_image(variant, path);

            ManifestRow row;
            row.path = path;
            row.patient_id = src.patient_id;
            row.stage = src.stage;
            row.variant = tag;
            row.origin_path = src.path;
            out.rows.push_back(std::move(row));
        }
    }
    return out;
}

} // namespace glisson
