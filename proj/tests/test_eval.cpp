#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "glisson/error.hpp"
#include "glisson/eval.hpp"
#include "glisson/report.hpp"
#include "glisson/rng.hpp"

using namespace glisson;
namespace fs = std::filesystem;

namespace {

// Synthetic augmented manifest: `patients` patients per stage, each with
// 1 + variants elements, mirroring the augment module's output shape.
DatasetManifest synthetic_manifest(int patients_per_stage, int variants) {
    DatasetManifest manifest;
    int patient = 0;
    for (int stage = 0; stage < 5; ++stage) {
        for (int p = 0; p < patients_per_stage; ++p, ++patient) {
            const std::string id = "p" + std::to_string(patient);
            for (int v = 0; v <= variants; ++v) {
                ManifestRow row;
                row.path = "img/" + id + "_" + std::to_string(v) + ".pgm";
                row.patient_id = id;
                row.stage = stage;
                row.variant = v == 0 ? "orig" : "aug" + std::to_string(v);
                row.origin_path = "img/" + id + "_0.pgm";
                manifest.rows.push_back(std::move(row));
            }
        }
    }
    return manifest;
}

// Feature store whose class signal is carried by the feature vector, with a
// pinch of noise; lets MLNN experiments run with no image artifacts.
ElementStore synthetic_store(const DatasetManifest& manifest, std::uint64_t seed) {
    ElementStore store;
    store.manifest = manifest;
    store.has_features = true;
    Rng rng(seed);
    for (const auto& row : manifest.rows) {
        FeatureVector v;
        v.empty = false;
        v.grad_mean = 1.0 - 0.15 * row.stage + 0.03 * rng.normal();
        v.grad_var = 0.05 + 0.02 * row.stage + 0.01 * rng.normal();
        v.continuity = 1.0 - 0.08 * row.stage + 0.02 * rng.normal();
        v.length = 1.0 - 0.05 * row.stage + 0.02 * rng.normal();
        v.contrast = 0.5 - 0.05 * row.stage + 0.02 * rng.normal();
        store.features.push_back(v);
    }
    return store;
}

} // namespace

TEST_CASE("group_stage: the paper's groupings") {
    // two classes: F0-F1 vs F2-F4
    CHECK(group_stage(0, 2) == 0);
    CHECK(group_stage(1, 2) == 0);
    CHECK(group_stage(2, 2) == 1);
    CHECK(group_stage(4, 2) == 1);
    // three classes: F0 / F1-F2 / F3-F4
    CHECK(group_stage(0, 3) == 0);
    CHECK(group_stage(1, 3) == 1);
    CHECK(group_stage(2, 3) == 1);
    CHECK(group_stage(3, 3) == 2);
    CHECK(group_stage(4, 3) == 2);
    // five classes: identity
    for (int s = 0; s < 5; ++s) CHECK(group_stage(s, 5) == s);

    CHECK_THROWS_AS(group_stage(5, 2), ParamError);
    CHECK_THROWS_AS(group_stage(1, 4), ParamError);
}

TEST_CASE("group_stage: monotone non-decreasing in stage for every class count") {
    for (int k : {2, 3, 5}) {
        for (int s = 0; s < 4; ++s) CHECK(group_stage(s, k) <= group_stage(s + 1, k));
        CHECK(group_stage(0, k) == 0);
        CHECK(group_stage(4, k) == k - 1);
    }
}

TEST_CASE("make_splits: complete patient groups and no leakage") {
    const DatasetManifest manifest = synthetic_manifest(12, 3);
    const auto plans = make_splits(manifest, 10, 3, 99);
    REQUIRE(plans.size() == 3);
    for (const auto& plan : plans) {
        REQUIRE(plan.folds.size() == 10);
        assert_no_leakage(plan, manifest);
        for (const auto& fold : plan.folds) {
            CHECK(fold.train.size() + fold.val.size() + fold.test.size() == manifest.size());
            // every patient's variants stay together
            std::set<std::string> test_patients;
            for (int i : fold.test) test_patients.insert(manifest.rows[std::size_t(i)].patient_id);
            int expected = 0;
            for (const auto& row : manifest.rows) expected += test_patients.count(row.patient_id);
            CHECK(int(fold.test.size()) == expected);
        }
    }
}

TEST_CASE("make_splits: fold sizes stay within one patient of the 80/10/10 split") {
    // the paper's roster: 44/31/35/20/27 patients, 4 elements each
    DatasetManifest manifest;
    const int roster[5] = {44, 31, 35, 20, 27};
    int patient = 0;
    for (int stage = 0; stage < 5; ++stage) {
        for (int p = 0; p < roster[stage]; ++p, ++patient) {
            const std::string id = "p" + std::to_string(patient);
            for (int v = 0; v < 4; ++v) {
                manifest.rows.push_back({id + "_" + std::to_string(v), id, stage, "orig", id});
            }
        }
    }
    const auto plans = make_splits(manifest, 10, 2, 7);
    for (const auto& plan : plans) {
        for (const auto& fold : plan.folds) {
            std::set<std::string> test_p, val_p;
            for (int i : fold.test) test_p.insert(manifest.rows[std::size_t(i)].patient_id);
            for (int i : fold.val) val_p.insert(manifest.rows[std::size_t(i)].patient_id);
            // 157 patients over 10 folds: 15.7 per fold, so 15..17 per side
            CHECK(test_p.size() >= 15);
            CHECK(test_p.size() <= 17);
            CHECK(val_p.size() >= 15);
            CHECK(val_p.size() <= 17);
        }
    }
}

TEST_CASE("make_splits: deterministic for a fixed seed") {
    const DatasetManifest manifest = synthetic_manifest(11, 2);
    const auto a = make_splits(manifest, 10, 4, 123);
    const auto b = make_splits(manifest, 10, 4, 123);
    REQUIRE(a.size() == b.size());
    for (std::size_t p = 0; p < a.size(); ++p) {
        for (std::size_t f = 0; f < a[p].folds.size(); ++f) {
            CHECK(a[p].folds[f].train == b[p].folds[f].train);
            CHECK(a[p].folds[f].val == b[p].folds[f].val);
            CHECK(a[p].folds[f].test == b[p].folds[f].test);
        }
    }
}

TEST_CASE("make_splits: rejects manifests with too few patients per stage") {
    const DatasetManifest manifest = synthetic_manifest(4, 0); // 4 patients per stage
    CHECK_THROWS_WITH_AS(make_splits(manifest, 10, 1, 1), doctest::Contains("patients"),
                         ParamError);
}

TEST_CASE("accuracy and mae: worked examples") {
    CHECK(accuracy({0, 1, 2}, {0, 1, 2}) == doctest::Approx(1.0));
    CHECK(accuracy({0, 1, 2}, {0, 2, 2}) == doctest::Approx(2.0 / 3.0));
    CHECK(accuracy({1, 0}, {0, 1}) == doctest::Approx(0.0));

    CHECK(mae({0, 1, 2}, {0, 1, 2}) == doctest::Approx(0.0));
    CHECK(mae({0, 1, 2}, {0, 2, 2}) == doctest::Approx(1.0 / 3.0));
    CHECK(mae({0, 0, 0}, {4, 4, 4}) == doctest::Approx(4.0));

    CHECK_THROWS_AS(accuracy({0}, {0, 1}), ParamError);
    CHECK_THROWS_AS(mae({}, {}), ParamError);
}

TEST_CASE("accuracy and mae: match a naive oracle on random vectors") {
    Rng rng(55);
    for (int trial = 0; trial < 200; ++trial) {
        const int k = (trial % 2 == 0) ? 2 : 5;
        const int n = rng.uniform_int(1, 40);
        std::vector<int> pred, truth;
        for (int i = 0; i < n; ++i) {
            pred.push_back(rng.uniform_int(0, k - 1));
            truth.push_back(rng.uniform_int(0, k - 1));
        }
        double correct = 0.0, abs_sum = 0.0;
        for (int i = 0; i < n; ++i) {
            correct += pred[std::size_t(i)] == truth[std::size_t(i)] ? 1.0 : 0.0;
            abs_sum += std::abs(pred[std::size_t(i)] - truth[std::size_t(i)]);
        }
        CHECK(std::abs(accuracy(pred, truth) - correct / n) <= 1e-12);
        CHECK(std::abs(mae(pred, truth) - abs_sum / n) <= 1e-12);
    }
}

TEST_CASE("run_experiment: degenerate 1-permutation 2-fold smoke run") {
    const DatasetManifest manifest = synthetic_manifest(6, 1);
    const ElementStore store = synthetic_store(manifest, 1);
    ExperimentConfig cfg;
    cfg.model = nn::ModelKind::mlnn;
    cfg.class_count = 2;
    cfg.folds = 2;
    cfg.permutations = 1;
    cfg.seed = 5;
    cfg.train.max_epochs = 30;
    cfg.train.patience = 30;
    const ExperimentReport report = run_experiment(store, cfg);
    REQUIRE(report.cells.size() == 2);
    for (const auto& cell : report.cells) {
        CHECK(cell.acc >= 0.0);
        CHECK(cell.acc <= 1.0);
        CHECK(cell.mae >= 0.0);
        CHECK(cell.mae <= 1.0); // class_count - 1
    }
}

TEST_CASE("run_experiment: cell count is permutations x folds") {
    const DatasetManifest manifest = synthetic_manifest(10, 1);
    const ElementStore store = synthetic_store(manifest, 2);
    ExperimentConfig cfg;
    cfg.model = nn::ModelKind::mlnn;
    cfg.class_count = 3;
    cfg.folds = 5;
    cfg.permutations = 3;
    cfg.seed = 6;
    cfg.train.max_epochs = 15;
    cfg.train.patience = 15;
    const ExperimentReport report = run_experiment(store, cfg);
    CHECK(report.cells.size() == 15);
    // deterministic (permutation, fold) order
    for (std::size_t i = 0; i < report.cells.size(); ++i) {
        CHECK(report.cells[i].permutation == int(i) / 5);
        CHECK(report.cells[i].fold == int(i) % 5);
    }
    CHECK(report.acc_mean >= 0.0);
    CHECK(report.acc_mean <= 1.0);
    CHECK(report.mae_mean <= 2.0);
}

TEST_CASE("run_experiment: missing artifacts name the stage to run first") {
    const DatasetManifest manifest = synthetic_manifest(10, 1);
    ElementStore store;
    store.manifest = manifest;
    ExperimentConfig cfg;
    cfg.model = nn::ModelKind::mlnn;
    CHECK_THROWS_WITH_AS(run_experiment(store, cfg), doctest::Contains("features"), DataError);

    cfg.model = nn::ModelKind::cnn;
    CHECK_THROWS_WITH_AS(run_experiment(store, cfg), doctest::Contains("preprocess"), DataError);
}

TEST_CASE("report csvs: cells and aggregate round trip through the loader") {
    ExperimentReport report;
    report.model = nn::ModelKind::mlnn;
    report.mode = ImageMode::roi;
    report.class_count = 2;
    report.cells = {{0, 0, 0.9, 0.1}, {0, 1, 1.0, 0.0}};
    report.acc_mean = 0.95;
    report.acc_std = 0.05;
    report.mae_mean = 0.05;
    report.mae_std = 0.05;

    const fs::path dir = fs::temp_directory_path() / "glisson_report_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    write_cells_csv(report, (dir / "cells_mlnn_roi_K2.csv").string());
    write_aggregate_csv(report, (dir / "aggregate_mlnn_roi_K2.csv").string());

    const auto rows = load_aggregate_rows(dir.string());
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].model == "mlnn");
    CHECK(rows[0].mode == "roi");
    CHECK(rows[0].classes == 2);
    CHECK(rows[0].acc_mean == doctest::Approx(0.95));

    const std::string table = render_table(rows);
    CHECK(table.find("mlnn") != std::string::npos);
    CHECK(table.find("Two classes") != std::string::npos);

    // cells CSV has one row per cell plus a header
    std::ifstream cells((dir / "cells_mlnn_roi_K2.csv").string());
    std::string line;
    int lines = 0;
    while (std::getline(cells, line)) ++lines;
    CHECK(lines == 3);
    fs::remove_all(dir);
}

TEST_CASE("run_experiment: image models assemble channels and train end to end") {
    // tiny 16x24 rasters keep the conv models fast; the line channel rides
    // along for cnnl/concat
    const DatasetManifest manifest = synthetic_manifest(4, 0);
    ElementStore store = synthetic_store(manifest, 9);
    store.img_h = 16;
    store.img_w = 24;
    Rng rng(71);
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        nn::Tensor img({1, 16, 24});
        for (auto& v : img.data) v = rng.unit();
        nn::Tensor line({1, 16, 24});
        const int row = 4 + manifest.rows[i].stage;
        for (int x = 0; x < 24; ++x) line.data[std::size_t(row) * 24 + std::size_t(x)] = 1.0;
        store.images.push_back(std::move(img));
        store.lines.push_back(std::move(line));
    }
    store.has_images = true;
    store.has_lines = true;

    for (auto kind : {nn::ModelKind::cnn, nn::ModelKind::cnnl, nn::ModelKind::concat}) {
        ExperimentConfig cfg;
        cfg.model = kind;
        cfg.class_count = 2;
        cfg.folds = 2;
        cfg.permutations = 1;
        cfg.seed = 17;
        cfg.train.batch_size = 8;
        cfg.train.max_epochs = 3;
        cfg.train.patience = 3;
        const ExperimentReport report = run_experiment(store, cfg);
        REQUIRE(report.cells.size() == 2);
        for (const auto& cell : report.cells) {
            CHECK(cell.acc >= 0.0);
            CHECK(cell.acc <= 1.0);
        }
    }
}

TEST_CASE("report table: renders one row per (model, mode, classes) aggregate") {
    const fs::path dir = fs::temp_directory_path() / "glisson_report_grid";
    fs::remove_all(dir);
    fs::create_directories(dir);
    // the full study grid: 4 models x {2,3,5} classes x {full,roi}
    int written = 0;
    for (const std::string model : {"cnn", "cnnl", "mlnn", "concat"}) {
        for (int classes : {2, 3, 5}) {
            for (const std::string mode : {"full", "roi"}) {
                ExperimentReport r;
                r.model = nn::parse_model_kind(model);
                r.mode = parse_image_mode(mode);
                r.class_count = classes;
                r.cells = {{0, 0, 0.8, 0.2}};
                r.acc_mean = 0.8;
                r.mae_mean = 0.2;
                write_aggregate_csv(
                    r, (dir / ("aggregate_" + model + "_" + mode + "_K" +
                               std::to_string(classes) + ".csv")).string());
                ++written;
            }
        }
    }
    CHECK(written == 24);
    const auto rows = load_aggregate_rows(dir.string());
    CHECK(rows.size() == 24);
    const std::string table = render_table(rows);
    // six section headers: {two,three,five} x {full,roi}
    std::size_t sections = 0, pos = 0;
    while ((pos = table.find("==", pos)) != std::string::npos) {
        ++sections;
        pos += 2;
    }
    CHECK(sections == 12); // two "==" markers per header line
    fs::remove_all(dir);
}

TEST_CASE("run_experiment: feature normalization is fit per training split") {
    // If stats leaked from the full set, the degenerate all-equal feature
    // batch below would still train; this simply asserts the experiment runs
    // and produces finite aggregates with per-fold stats.
    const DatasetManifest manifest = synthetic_manifest(8, 0);
    ElementStore store = synthetic_store(manifest, 3);
    ExperimentConfig cfg;
    cfg.model = nn::ModelKind::mlnn;
    cfg.class_count = 5;
    cfg.folds = 4;
    cfg.permutations = 1;
    cfg.train.max_epochs = 10;
    cfg.train.patience = 10;
    const ExperimentReport report = run_experiment(store, cfg);
    CHECK(std::isfinite(report.acc_mean));
    CHECK(std::isfinite(report.mae_std));
    CHECK(report.mae_mean <= 4.0);
}
