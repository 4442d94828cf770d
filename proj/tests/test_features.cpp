#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "glisson/error.hpp"
#include "glisson/features.hpp"
#include "glisson/imaging.hpp"
#include "glisson/phantom.hpp"
#include "glisson/rng.hpp"

using namespace glisson;

namespace {

LinePath straight_path(int width, int row) {
    LinePath path;
    path.width = width;
    for (int c = 0; c < width; ++c) path.rows.emplace_back(row);
    path.segments = path_segments(path.rows);
    return path;
}

FeatureVector pipeline_features(const GrayImage& raw, const TrackParams& track = {}) {
    const GrayImage img = enhance_contrast(srad_despeckle(raw, {})).image;
    const GradientField grad = prewitt_gradient(img);
    return compute_features(img, grad, extract_line(grad, track));
}

// Spearman rank correlation of (0..n-1) against values (all values distinct).
double spearman_against_index(const std::vector<double>& values) {
    const int n = int(values.size());
    double d2 = 0.0;
    for (int i = 0; i < n; ++i) {
        int rank = 0;
        for (int j = 0; j < n; ++j) {
            if (values[std::size_t(j)] < values[std::size_t(i)]) ++rank;
        }
        d2 += double((i - rank) * (i - rank));
    }
    return 1.0 - 6.0 * d2 / (double(n) * (double(n) * n - 1.0));
}

} // namespace

TEST_CASE("compute_features: full straight line has continuity 1 and length 1") {
    const GrayImage img(32, 20, 0.5);
    const GradientField grad = prewitt_gradient(img);
    const FeatureVector v = compute_features(img, grad, straight_path(32, 10));
    CHECK_FALSE(v.empty);
    CHECK(v.continuity == doctest::Approx(1.0));
    CHECK(v.length == doctest::Approx(1.0));
    CHECK(v.grad_mean == doctest::Approx(0.0));
    CHECK(v.grad_var == doctest::Approx(0.0));
}

TEST_CASE("compute_features: half coverage gives continuity one half") {
    LinePath path;
    path.width = 40;
    for (int c = 0; c < 40; ++c) {
        path.rows.emplace_back(c < 20 ? std::optional<int>(8) : std::nullopt);
    }
    path.segments = path_segments(path.rows);
    const GrayImage img(40, 16, 0.4);
    const FeatureVector v = compute_features(img, prewitt_gradient(img), path);
    CHECK(v.continuity == doctest::Approx(0.5));
}

TEST_CASE("compute_features: empty path yields the flagged all-zero vector") {
    LinePath path;
    path.width = 16;
    path.rows.assign(16, std::nullopt);
    const GrayImage img(16, 16, 0.4);
    const FeatureVector v = compute_features(img, prewitt_gradient(img), path);
    CHECK(v.empty);
    for (double x : v.as_array()) CHECK(x == 0.0);
    CHECK(v.continuity == 0.0);
}

TEST_CASE("compute_features: bright line over dark background has positive contrast") {
    GrayImage img(32, 32, 0.1);
    for (int x = 0; x < 32; ++x) img(16, x) = 0.9;
    const GradientField grad = prewitt_gradient(img);
    const FeatureVector v = compute_features(img, grad, straight_path(32, 16));
    CHECK(v.contrast > 0.5);
    CHECK(v.contrast <= 1.0);
}

TEST_CASE("compute_features: continuity and length ignore intensity remapping") {
    Rng rng(41);
    std::vector<double> px(48 * 24);
    for (auto& v : px) v = rng.unit();
    const GrayImage img = GrayImage::from_pixels(48, 24, px);
    for (auto& v : px) v = std::sqrt(v); // monotone remap
    const GrayImage remapped = GrayImage::from_pixels(48, 24, std::move(px));

    LinePath path;
    path.width = 48;
    for (int c = 0; c < 48; ++c) {
        if (c % 7 == 3) {
            path.rows.emplace_back(std::nullopt);
        } else {
            path.rows.emplace_back(10 + (c % 3));
        }
    }
    path.segments = path_segments(path.rows);

    const FeatureVector a = compute_features(img, prewitt_gradient(img), path);
    const FeatureVector b = compute_features(remapped, prewitt_gradient(remapped), path);
    CHECK(a.continuity == b.continuity);
    CHECK(a.length == b.length);
}

TEST_CASE("compute_features: grad_mean scales linearly with clamp-free intensity scaling") {
    Rng rng(42);
    std::vector<double> px(40 * 20);
    for (auto& v : px) v = rng.uniform(0.2, 0.5);
    const GrayImage img = GrayImage::from_pixels(40, 20, px);
    std::vector<double> scaled = px;
    for (auto& v : scaled) v *= 2.0; // stays within [0,1]
    const GrayImage img2 = GrayImage::from_pixels(40, 20, std::move(scaled));

    const LinePath path = straight_path(40, 9);
    const FeatureVector a = compute_features(img, prewitt_gradient(img), path);
    const FeatureVector b = compute_features(img2, prewitt_gradient(img2), path);
    CHECK(b.grad_mean == doctest::Approx(2.0 * a.grad_mean).epsilon(1e-9));
}

TEST_CASE("compute_features: low stages score higher continuity and gradient than high stages") {
    const int per_stage = 25;
    double c0 = 0, c4 = 0, g0 = 0, g4 = 0;
    for (int i = 0; i < per_stage; ++i) {
        PhantomParams p0 = stage_defaults(0);
        p0.seed = mix_seed(51, std::uint64_t(i));
        PhantomParams p4 = stage_defaults(4);
        p4.seed = mix_seed(52, std::uint64_t(i));
        const FeatureVector f0 = pipeline_features(generate_phantom(p0).image);
        const FeatureVector f4 = pipeline_features(generate_phantom(p4).image);
        c0 += f0.continuity;
        c4 += f4.continuity;
        g0 += f0.grad_mean;
        g4 += f4.grad_mean;
    }
    CHECK(c0 / per_stage > c4 / per_stage);
    CHECK(g0 / per_stage > g4 / per_stage);
}

TEST_CASE("feature/stage monotonicity: Spearman of per-stage means is -1 on phantom batches") {
    const int per_stage = 25; // the acceptance suite runs the full 50
    std::vector<double> continuity_means, grad_means;
    for (int stage = 0; stage < 5; ++stage) {
        double c = 0, g = 0;
        for (int i = 0; i < per_stage; ++i) {
            PhantomParams p = stage_defaults(stage);
            p.seed = mix_seed(4242, std::uint64_t(stage * 1000 + i));
            const FeatureVector v = pipeline_features(generate_phantom(p).image);
            c += v.continuity;
            g += v.grad_mean;
        }
        continuity_means.push_back(c / per_stage);
        grad_means.push_back(g / per_stage);
    }
    CHECK(spearman_against_index(continuity_means) <= -0.8);
    CHECK(spearman_against_index(grad_means) <= -0.8);
}

TEST_CASE("fit_feature_stats: identical vectors flag zero std") {
    FeatureVector v;
    v.grad_mean = 0.5;
    v.continuity = 1.0;
    v.empty = false;
    const FeatureStats stats = fit_feature_stats({v, v, v});
    for (int f = 0; f < kFeatureCount; ++f) {
        CHECK(stats.stddev[std::size_t(f)] == 0.0);
        CHECK(stats.zero_std[std::size_t(f)]);
    }
    CHECK(stats.mean[0] == doctest::Approx(0.5));
}

TEST_CASE("fit_feature_stats: two-point batch has mean 1 and std sqrt(2)") {
    FeatureVector a = FeatureVector::from_array({0, 0, 0, 0, 0}, false);
    FeatureVector b = FeatureVector::from_array({2, 2, 2, 2, 2}, false);
    const FeatureStats stats = fit_feature_stats({a, b});
    for (int f = 0; f < kFeatureCount; ++f) {
        CHECK(stats.mean[std::size_t(f)] == doctest::Approx(1.0));
        CHECK(stats.stddev[std::size_t(f)] == doctest::Approx(std::sqrt(2.0)));
    }
}

TEST_CASE("fit_feature_stats: matches a streaming oracle on random batches") {
    Rng rng(43);
    std::vector<FeatureVector> batch;
    // streaming (Welford) oracle
    std::array<double, kFeatureCount> mean{}, m2{};
    for (int i = 0; i < 200; ++i) {
        std::array<double, kFeatureCount> a{};
        for (auto& x : a) x = rng.uniform(-3.0, 3.0);
        batch.push_back(FeatureVector::from_array(a, false));
        for (int f = 0; f < kFeatureCount; ++f) {
            const double delta = a[std::size_t(f)] - mean[std::size_t(f)];
            mean[std::size_t(f)] += delta / double(i + 1);
            m2[std::size_t(f)] += delta * (a[std::size_t(f)] - mean[std::size_t(f)]);
        }
    }
    const FeatureStats stats = fit_feature_stats(batch);
    for (int f = 0; f < kFeatureCount; ++f) {
        CHECK(stats.mean[std::size_t(f)] ==
              doctest::Approx(mean[std::size_t(f)]).epsilon(1e-12));
        CHECK(stats.stddev[std::size_t(f)] ==
              doctest::Approx(std::sqrt(m2[std::size_t(f)] / 199.0)).epsilon(1e-12));
    }
}

TEST_CASE("fit_feature_stats: rejects an empty batch") {
    CHECK_THROWS_AS(fit_feature_stats({}), ParamError);
}

TEST_CASE("normalize: the mean vector maps to zero and round-trips") {
    Rng rng(44);
    std::vector<FeatureVector> batch;
    for (int i = 0; i < 50; ++i) {
        std::array<double, kFeatureCount> a{};
        for (auto& x : a) x = rng.uniform(0.0, 2.0);
        batch.push_back(FeatureVector::from_array(a, false));
    }
    const FeatureStats stats = fit_feature_stats(batch);

    const FeatureVector mean_vec = FeatureVector::from_array(stats.mean, false);
    for (double x : normalize(mean_vec, stats).as_array()) {
        CHECK(x == doctest::Approx(0.0).epsilon(1e-12));
    }
    const FeatureVector v = batch[7];
    const FeatureVector round = denormalize(normalize(v, stats), stats);
    for (int f = 0; f < kFeatureCount; ++f) {
        CHECK(round.as_array()[std::size_t(f)] ==
              doctest::Approx(v.as_array()[std::size_t(f)]).epsilon(1e-12));
    }
}

TEST_CASE("normalize: a normalized batch has mean 0 and std 1 per feature") {
    Rng rng(45);
    std::vector<FeatureVector> batch;
    for (int i = 0; i < 64; ++i) {
        std::array<double, kFeatureCount> a{};
        for (auto& x : a) x = rng.normal(2.0, 3.0);
        batch.push_back(FeatureVector::from_array(a, false));
    }
    const FeatureStats stats = fit_feature_stats(batch);
    std::vector<FeatureVector> normed;
    for (const auto& v : batch) normed.push_back(normalize(v, stats));
    const FeatureStats after = fit_feature_stats(normed);
    for (int f = 0; f < kFeatureCount; ++f) {
        CHECK(after.mean[std::size_t(f)] == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(after.stddev[std::size_t(f)] == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("normalize: zero-std features pass through unscaled") {
    FeatureVector v = FeatureVector::from_array({1, 1, 1, 1, 1}, false);
    const FeatureStats stats = fit_feature_stats({v, v});
    FeatureVector probe = FeatureVector::from_array({7, 7, 7, 7, 7}, false);
    const FeatureVector out = normalize(probe, stats);
    for (double x : out.as_array()) CHECK(x == 7.0);
}
