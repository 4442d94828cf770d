#include "glisson/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "glisson/error.hpp"
#include "glisson/rng.hpp"

namespace glisson {

// Every phantom constant lives here so the acceptance thresholds that depend
// on them stay stable.
namespace {
constexpr double kBackgroundLevel = 0.25;
constexpr double kLineProfileSigma = 0.5;  // rendered line is ~1 px wide
constexpr double kMeanGapRunLength = 10.0;  // geometric gap runs, in columns
constexpr double kJitterSmoothSigma = 5.0; // column-wise smoothing of row jitter
} // namespace

void PhantomParams::validate() const {
    if (stage < 0 || stage > 4) throw ParamError("phantom: stage must lie in 0..4");
    if (!(line_brightness > kBackgroundLevel && line_brightness <= 1.0)) {
        throw ParamError("phantom: line_brightness must exceed the background mean " +
                         std::to_string(kBackgroundLevel) + " and stay within (0,1]");
    }
    if (!(gap_fraction >= 0.0 && gap_fraction < 1.0)) {
        throw ParamError("phantom: gap_fraction must lie in [0,1)");
    }
    if (jitter_sigma < 0.0) throw ParamError("phantom: jitter_sigma must be non-negative");
    if (looks <= 0) throw ParamError("phantom: looks must be positive");
    if (width < 3 || height < 3) throw ParamError("phantom: raster must be at least 3x3");
}

PhantomParams stage_defaults(int stage) {
    if (stage < 0 || stage > 4) throw ParamError("phantom: stage must lie in 0..4");
    const double s = double(stage) / 4.0;
    PhantomParams p;
    p.stage = stage;
    p.line_brightness = 0.90 + s * (0.55 - 0.90);
    p.gap_fraction = 0.02 + s * (0.35 - 0.02);
    p.jitter_sigma = 0.5 + s * (2.5 - 0.5);
    p.looks = 4;
    p.width = 310;
    p.height = 90;
    return p;
}

PhantomTruth generate_phantom(const PhantomParams& params) {
    params.validate();
    const int w = params.width;
    const int h = params.height;

    // Smoothed per-column row jitter: white noise convolved with a normalized
    // Gaussian, rescaled so the smoothed process keeps std = jitter_sigma.
    Rng jitter_rng(mix_seed(params.seed, 0x6a177e5));
    std::vector<double> jitter(std::size_t(w), 0.0);
    if (params.jitter_sigma > 0.0) {
        std::vector<double> white(std::size_t(w), 0.0);
        for (auto& v : white) v = jitter_rng.normal();
        const int radius = int(std::ceil(3.0 * kJitterSmoothSigma));
        std::vector<double> kernel(std::size_t(2 * radius + 1));
        double ksum = 0.0;
        for (int i = -radius; i <= radius; ++i) {
            kernel[std::size_t(i + radius)] =
                std::exp(-0.5 * double(i) * double(i) / (kJitterSmoothSigma * kJitterSmoothSigma));
            ksum += kernel[std::size_t(i + radius)];
        }
        double knorm2 = 0.0;
        for (auto& k : kernel) {
            k /= ksum;
            knorm2 += k * k;
        }
        const double gain = params.jitter_sigma / std::sqrt(knorm2);
        for (int c = 0; c < w; ++c) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int cc = std::clamp(c + i, 0, w - 1);
                acc += kernel[std::size_t(i + radius)] * white[std::size_t(cc)];
            }
            jitter[std::size_t(c)] = gain * acc;
        }
    }

    // Line geometry: gentle arc plus jitter.
    const double amplitude = double(h) / 8.0;
    std::vector<double> center(std::size_t(w), 0.0);
    for (int c = 0; c < w; ++c) {
        center[std::size_t(c)] = double(h) / 2.0 +
                                 amplitude * std::sin(3.14159265358979323846 * c / double(w)) +
                                 jitter[std::size_t(c)];
    }

    // Gap mask as a two-state Markov chain over columns: geometric run lengths
    // with stationary gap probability = gap_fraction.
    Rng gap_rng(mix_seed(params.seed, 0x9a75));
    std::vector<bool> gap(std::size_t(w), false);
    if (params.gap_fraction > 0.0) {
        const double p_exit = 1.0 / kMeanGapRunLength;
        const double p_enter = params.gap_fraction * p_exit / (1.0 - params.gap_fraction);
        bool in_gap = gap_rng.unit() < params.gap_fraction;
        for (int c = 0; c < w; ++c) {
            gap[std::size_t(c)] = in_gap;
            in_gap = in_gap ? (gap_rng.unit() >= p_exit) : (gap_rng.unit() < p_enter);
        }
    }

    // Clean raster, then multiplicative gamma speckle with unit mean.
    std::vector<double> pixels(std::size_t(w) * std::size_t(h), kBackgroundLevel);
    const double peak = params.line_brightness - kBackgroundLevel;
    const int reach = int(std::ceil(5.0 * kLineProfileSigma));
    for (int c = 0; c < w; ++c) {
        if (gap[std::size_t(c)]) continue;
        const double r = center[std::size_t(c)];
        const int lo = std::max(0, int(std::floor(r)) - reach);
        const int hi = std::min(h - 1, int(std::ceil(r)) + reach);
        for (int y = lo; y <= hi; ++y) {
            const double d = double(y) - r;
            pixels[std::size_t(y) * std::size_t(w) + std::size_t(c)] +=
                peak * std::exp(-0.5 * d * d / (kLineProfileSigma * kLineProfileSigma));
        }
    }
    Rng speckle_rng(mix_seed(params.seed, 0x57ec1e));
    for (auto& v : pixels) {
        v = std::clamp(v * (speckle_rng.gamma(double(params.looks)) / double(params.looks)), 0.0,
                       1.0);
    }

    PhantomTruth truth;
    truth.stage = params.stage;
    truth.image = GrayImage::from_pixels(w, h, std::move(pixels));
    truth.truth_path.width = w;
    truth.truth_path.rows.assign(std::size_t(w), std::nullopt);
    for (int c = 0; c < w; ++c) {
        if (gap[std::size_t(c)]) continue;
        const int r = std::clamp(int(std::floor(center[std::size_t(c)] + 0.5)), 0, h - 1);
        truth.truth_path.rows[std::size_t(c)] = r;
    }
    truth.truth_path.segments = path_segments(truth.truth_path.rows);
    return truth;
}

DatasetManifest generate_dataset(const std::vector<int>& per_stage, std::uint64_t seed,
                                 const std::string& out_dir, ImageFormat format, int width,
                                 int height) {
    if (per_stage.size() != 5) throw ParamError("generate_dataset: need 5 per-stage counts");
    for (int n : per_stage) {
        if (n < 0) throw ParamError("generate_dataset: per-stage counts must be non-negative");
    }

    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(fs::path(out_dir) / "images", ec);
    fs::create_directories(fs::path(out_dir) / "lines" / "truth", ec);
    if (ec) throw DataError(out_dir + ": cannot create output directories");

    DatasetManifest manifest;
    std::size_t element = 0;
    for (int stage = 0; stage < 5; ++stage) {
        for (int i = 0; i < per_stage[std::size_t(stage)]; ++i, ++element) {
            PhantomParams params = stage_defaults(stage);
            if (width > 0) params.width = width;
            if (height > 0) params.height = height;
            params.seed = mix_seed(seed, element);

            const PhantomTruth truth = generate_phantom(params);

            char patient[16];
            std::snprintf(patient, sizeof(patient), "p%04zu", element + 1);
            char stem[64];
            std::snprintf(stem, sizeof(stem), "ph_%s_F%d_%08llx", patient, stage,
                          (unsigned long long)(params.seed & 0xffffffffULL));

            const std::string image_path =
                (fs::path(out_dir) / "images" / (std::string(stem) + extension_for(format)))
                    .string();
            const std::string truth_path =
                (fs::path(out_dir) / "lines" / "truth" / (std::string(stem) + ".csv")).string();
            save_image(truth.image, image_path);
            save_line_csv(truth.truth_path, truth_path);

            ManifestRow row;
            row.path = image_path;
            row.patient_id = patient;
            row.stage = stage;
            row.variant = "orig";
            row.origin_path = image_path;
            manifest.rows.push_back(std::move(row));
        }
    }
    save_manifest(manifest, (fs::path(out_dir) / "manifest.csv").string());
    return manifest;
}

} // namespace glisson
