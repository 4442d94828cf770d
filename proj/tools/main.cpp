#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "glisson/augment.hpp"
#include "glisson/error.hpp"
#include "glisson/eval.hpp"
#include "glisson/image_io.hpp"
#include "glisson/phantom.hpp"
#include "glisson/pipeline.hpp"
#include "glisson/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Batch run settings: file defaults overridden by explicitly-passed flags.
struct RunConfig {
    std::uint64_t seed = 42;
    int jobs = 0; // 0 = library default; 1 forces serial execution
    bool force = false;
    glisson::SradParams srad;
    double contrast_low = 1.0;
    double contrast_high = 99.0;
    int band_top = -1; // -1 = full height
    int band_bottom = -1;
    glisson::TrackParams track;
    int variants = 3;
    glisson::nn::TrainConfig train;
    int folds = 10;
    int permutations = 25;

    void load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw glisson::DataError(path + ": cannot open config file");
        json j;
        try {
            j = json::parse(in);
        } catch (const json::exception& e) {
            throw glisson::DataError(path + ": invalid JSON: " + e.what());
        }
        seed = j.value("seed", seed);
        jobs = j.value("jobs", jobs);
        if (j.contains("srad")) {
            const auto& s = j["srad"];
            srad.iterations = s.value("iterations", srad.iterations);
            srad.time_step = s.value("time_step", srad.time_step);
            srad.q0 = s.value("q0", srad.q0);
            srad.rho = s.value("rho", srad.rho);
        }
        if (j.contains("contrast")) {
            contrast_low = j["contrast"].value("low", contrast_low);
            contrast_high = j["contrast"].value("high", contrast_high);
        }
        if (j.contains("roi_band")) {
            band_top = j["roi_band"].value("top", band_top);
            band_bottom = j["roi_band"].value("bottom", band_bottom);
        }
        if (j.contains("track")) {
            const auto& t = j["track"];
            track.tau = t.value("tau", track.tau);
            track.lambda = t.value("lambda", track.lambda);
            track.max_jump = t.value("max_jump", track.max_jump);
        }
        if (j.contains("augment")) variants = j["augment"].value("variants", variants);
        if (j.contains("train")) {
            const auto& t = j["train"];
            train.learning_rate = t.value("learning_rate", train.learning_rate);
            train.batch_size = t.value("batch_size", train.batch_size);
            train.max_epochs = t.value("max_epochs", train.max_epochs);
            train.patience = t.value("patience", train.patience);
        }
        if (j.contains("protocol")) {
            folds = j["protocol"].value("folds", folds);
            permutations = j["protocol"].value("permutations", permutations);
        }
    }

    // Rejects invalid parameter blocks before any work starts.
    void validate() const {
        srad.validate();
        train.validate();
        if (folds < 2 || permutations < 1) {
            throw glisson::ParamError("protocol: need folds >= 2 and permutations >= 1");
        }
    }
};

std::vector<int> parse_per_stage(const std::string& text) {
    std::vector<int> counts;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            counts.push_back(std::stoi(tok));
        } catch (const std::exception&) {
            throw glisson::ParamError("--per-stage expects an integer or five comma-separated integers");
        }
    }
    if (counts.size() == 1) counts.assign(5, counts[0]);
    if (counts.size() != 5) {
        throw glisson::ParamError("--per-stage expects an integer or five comma-separated integers");
    }
    return counts;
}

std::string reports_dir(const std::string& out_dir) {
    const std::string dir = (fs::path(out_dir) / "reports").string();
    std::error_code ec;
    fs::create_directories(dir, ec);
    return dir;
}

std::string cell_tag(const glisson::ExperimentConfig& cfg) {
    return glisson::nn::to_string(cfg.model) + "_" + glisson::to_string(cfg.mode) + "_K" +
           std::to_string(cfg.class_count);
}

glisson::ElementStore load_store_for(const glisson::ExperimentConfig& cfg,
                                     const std::string& manifest_path,
                                     const std::string& lines_dir,
                                     const std::string& features_csv) {
    using glisson::nn::ModelKind;
    const bool need_images = cfg.model != ModelKind::mlnn;
    const bool need_lines =
        cfg.model == ModelKind::cnnl || cfg.model == ModelKind::concat;
    const bool need_features =
        cfg.model == ModelKind::mlnn || cfg.model == ModelKind::concat;
    const glisson::DatasetManifest manifest = glisson::load_manifest(manifest_path);
    return glisson::load_element_store(manifest, cfg.mode, need_images,
                                       need_lines ? lines_dir : "",
                                       need_features ? features_csv : "");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"glisson: liver fibrosis staging from the capsule line in B-mode ultrasound"};
    app.require_subcommand(1);

    std::string config_path;
    RunConfig cfg;
    app.add_option("--config", config_path, "JSON config file; flags override its fields");
    auto* seed_opt = app.add_option("--seed", cfg.seed, "global RNG seed");
    auto* jobs_opt = app.add_option("--jobs", cfg.jobs, "worker threads (1 = serial)");
    auto* force_flag = app.add_flag("--force", cfg.force, "rewrite up-to-date outputs");

    // phantom
    auto* cmd_phantom = app.add_subcommand("phantom", "generate a synthetic staged dataset");
    std::string per_stage = "10";
    std::string out_dir = "out";
    std::string format_name = "pgm";
    int ph_width = 0, ph_height = 0;
    cmd_phantom->add_option("--per-stage", per_stage, "images per stage (N or five comma-separated)");
    cmd_phantom->add_option("--out", out_dir, "output directory");
    cmd_phantom->add_option("--format", format_name, "image format: pgm or png");
    cmd_phantom->add_option("--width", ph_width, "raster width override");
    cmd_phantom->add_option("--height", ph_height, "raster height override");

    // augment
    auto* cmd_augment = app.add_subcommand("augment", "expand a dataset with crop-zoom/rotation variants");
    std::string manifest_path;
    auto* variants_opt = cmd_augment->add_option("--variants", cfg.variants, "variants per source image");
    cmd_augment->add_option("--manifest", manifest_path, "source manifest CSV")->required();
    cmd_augment->add_option("--out", out_dir, "output directory");

    // preprocess
    auto* cmd_pre = app.add_subcommand("preprocess", "despeckle, crop to the ROI and enhance contrast");
    std::string mode_name = "roi";
    int band_top = -1, band_bottom = -1;
    cmd_pre->add_option("--manifest", manifest_path, "source manifest CSV")->required();
    cmd_pre->add_option("--mode", mode_name, "image mode: full or roi");
    cmd_pre->add_option("--out", out_dir, "output directory");
    auto* band_top_opt = cmd_pre->add_option("--band-top", band_top, "ROI band top row");
    auto* band_bottom_opt = cmd_pre->add_option("--band-bottom", band_bottom, "ROI band bottom row");

    // extract
    auto* cmd_extract = app.add_subcommand("extract", "detect the capsule line in processed images");
    cmd_extract->add_option("--manifest", manifest_path, "processed manifest CSV")->required();
    cmd_extract->add_option("--out", out_dir, "output directory");

    // features
    auto* cmd_features = app.add_subcommand("features", "compute the five line features per element");
    std::string lines_dir;
    std::string features_csv;
    cmd_features->add_option("--manifest", manifest_path, "processed manifest CSV")->required();
    cmd_features->add_option("--lines", lines_dir, "directory with extracted line CSVs");
    cmd_features->add_option("--out", features_csv, "output feature CSV path");

    // train / eval
    std::string model_name = "mlnn";
    int class_count = 2;
    auto* cmd_train = app.add_subcommand("train", "train one model on the first fold and save it");
    auto* cmd_eval = app.add_subcommand("eval", "run the full cross-validation protocol");
    auto* folds_opt = cmd_eval->add_option("--folds", cfg.folds, "fold count");
    auto* train_folds_opt = cmd_train->add_option("--folds", cfg.folds, "fold count");
    auto* perms_opt = cmd_eval->add_option("--permutations", cfg.permutations, "permutation count");
    for (CLI::App* cmd : {cmd_train, cmd_eval}) {
        cmd->add_option("--manifest", manifest_path, "processed manifest CSV")->required();
        cmd->add_option("--model", model_name, "cnn, cnnl, mlnn or concat");
        cmd->add_option("--classes", class_count, "class count: 2, 3 or 5");
        cmd->add_option("--mode", mode_name, "image mode: full or roi");
        cmd->add_option("--lines", lines_dir, "directory with extracted line CSVs");
        cmd->add_option("--features", features_csv, "feature CSV path");
        cmd->add_option("--out", out_dir, "output directory");
    }

    // report
    auto* cmd_report = app.add_subcommand("report", "render aggregate reports as a table");
    std::string report_dir;
    bool plot = false;
    cmd_report->add_option("--reports", report_dir, "reports directory (default <out>/reports)");
    cmd_report->add_option("--out", out_dir, "output directory");
    cmd_report->add_flag("--plot", plot, "also write an accuracy bar chart PNG");

    // Global options (--seed, --jobs, ...) may follow the subcommand name.
    for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; })) {
        sub->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (!config_path.empty()) {
            // Flags win over config fields: re-assert any explicitly set ones.
            const std::uint64_t flag_seed = cfg.seed;
            const int flag_jobs = cfg.jobs;
            const int flag_variants = cfg.variants;
            const int flag_folds = cfg.folds, flag_perms = cfg.permutations;
            const bool flag_force = cfg.force;
            cfg.load(config_path);
            if (seed_opt->count()) cfg.seed = flag_seed;
            if (jobs_opt->count()) cfg.jobs = flag_jobs;
            if (force_flag->count()) cfg.force = flag_force;
            if (variants_opt->count()) cfg.variants = flag_variants;
            if (folds_opt->count() || train_folds_opt->count()) cfg.folds = flag_folds;
            if (perms_opt->count()) cfg.permutations = flag_perms;
        }
        cfg.validate();
#ifdef _OPENMP
        if (cfg.jobs > 0) omp_set_num_threads(cfg.jobs);
#endif

        if (*cmd_phantom) {
            const auto counts = parse_per_stage(per_stage);
            const glisson::ImageFormat format =
                format_name == "png" ? glisson::ImageFormat::png
                : format_name == "pgm"
                    ? glisson::ImageFormat::pgm
                    : throw glisson::ParamError("--format must be pgm or png");
            const auto manifest = glisson::generate_dataset(counts, cfg.seed, out_dir, format,
                                                            ph_width, ph_height);
            std::cout << "wrote " << manifest.size() << " phantom elements under " << out_dir
                      << "\n";
        } else if (*cmd_augment) {
            const auto manifest = glisson::load_manifest(manifest_path);
            if (manifest.empty()) {
                std::cerr << "warning: empty manifest, nothing to augment\n";
                return 0;
            }
            const auto augmented =
                glisson::augment_dataset(manifest, cfg.variants, cfg.seed, out_dir);
            const std::string out_manifest =
                (fs::path(out_dir) / "manifest_aug.csv").string();
            glisson::save_manifest(augmented, out_manifest);
            std::cout << "wrote " << augmented.size() << " elements to " << out_manifest << "\n";
        } else if (*cmd_pre) {
            const auto manifest = glisson::load_manifest(manifest_path);
            if (manifest.empty()) {
                std::cerr << "warning: empty manifest, nothing to preprocess\n";
                return 0;
            }
            glisson::PreprocessOptions options;
            options.srad = cfg.srad;
            options.percentile_low = cfg.contrast_low;
            options.percentile_high = cfg.contrast_high;
            options.mode = glisson::parse_image_mode(mode_name);
            if (band_top_opt->count() || cfg.band_top >= 0) {
                options.band_top = band_top_opt->count() ? band_top : cfg.band_top;
            }
            if (band_bottom_opt->count() || cfg.band_bottom >= 0) {
                options.band_bottom = band_bottom_opt->count() ? band_bottom : cfg.band_bottom;
            }
            options.force = cfg.force;
            const auto processed = glisson::preprocess_manifest(manifest, options, out_dir);
            std::cout << "wrote " << processed.size() << " processed images under " << out_dir
                      << "\n";
        } else if (*cmd_extract) {
            const auto manifest = glisson::load_manifest(manifest_path);
            glisson::ExtractOptions options;
            options.track = cfg.track;
            options.force = cfg.force;
            glisson::extract_lines(manifest, options, out_dir);
            std::cout << "extracted " << manifest.size() << " lines under " << out_dir << "\n";
        } else if (*cmd_features) {
            const auto manifest = glisson::load_manifest(manifest_path);
            if (lines_dir.empty()) lines_dir = (fs::path(out_dir) / "lines").string();
            if (features_csv.empty()) {
                features_csv = (fs::path(out_dir) / "features" / "features.csv").string();
            }
            glisson::compute_feature_csv(manifest, lines_dir, features_csv);
            std::cout << "wrote " << manifest.size() << " feature rows to " << features_csv
                      << "\n";
        } else if (*cmd_train || *cmd_eval) {
            glisson::ExperimentConfig ecfg;
            ecfg.model = glisson::nn::parse_model_kind(model_name);
            ecfg.mode = glisson::parse_image_mode(mode_name);
            if (class_count != 2 && class_count != 3 && class_count != 5) {
                throw glisson::ParamError("--classes must be 2, 3 or 5");
            }
            ecfg.class_count = class_count;
            ecfg.seed = cfg.seed;
            ecfg.train = cfg.train;
            if (lines_dir.empty()) lines_dir = (fs::path(out_dir) / "lines").string();
            if (features_csv.empty()) {
                features_csv = (fs::path(out_dir) / "features" / "features.csv").string();
            }

            if (*cmd_train) {
                ecfg.folds = cfg.folds;
                ecfg.permutations = 1;
                const auto store = load_store_for(ecfg, manifest_path, lines_dir, features_csv);
                auto result = glisson::train_single(store, ecfg);
                std::error_code ec;
                fs::create_directories(fs::path(out_dir) / "models", ec);
                char digest[128];
                std::snprintf(digest, sizeof(digest), "lr=%g;bs=%d;ep=%d;pat=%d;seed=%llu",
                              cfg.train.learning_rate, cfg.train.batch_size,
                              cfg.train.max_epochs, cfg.train.patience,
                              (unsigned long long)cfg.seed);
                const std::string model_path =
                    (fs::path(out_dir) / "models" / (cell_tag(ecfg) + ".glnn")).string();
                glisson::nn::save_model(result.model, model_path, digest);
                std::printf("trained %s: fold-0 test acc %.4f, mae %.4f; saved %s\n",
                            cell_tag(ecfg).c_str(), result.acc, result.mae, model_path.c_str());
            } else {
                ecfg.folds = cfg.folds;
                ecfg.permutations = cfg.permutations;
                const auto store = load_store_for(ecfg, manifest_path, lines_dir, features_csv);
                const auto report = glisson::run_experiment(store, ecfg);
                const std::string dir = reports_dir(out_dir);
                const std::string cells =
                    (fs::path(dir) / ("cells_" + cell_tag(ecfg) + ".csv")).string();
                const std::string agg =
                    (fs::path(dir) / ("aggregate_" + cell_tag(ecfg) + ".csv")).string();
                glisson::write_cells_csv(report, cells);
                glisson::write_aggregate_csv(report, agg);
                std::printf("%s: acc %.4f +/- %.4f, mae %.4f +/- %.4f (%zu cells)\n",
                            cell_tag(ecfg).c_str(), report.acc_mean, report.acc_std,
                            report.mae_mean, report.mae_std, report.cells.size());
            }
        } else if (*cmd_report) {
            if (report_dir.empty()) report_dir = (fs::path(out_dir) / "reports").string();
            const auto rows = glisson::load_aggregate_rows(report_dir);
            std::cout << glisson::render_table(rows);
            if (plot) {
                const std::string chart =
                    (fs::path(report_dir) / "acc_chart.png").string();
                glisson::write_png(glisson::render_accuracy_chart(rows), chart);
                std::cout << "wrote " << chart << "\n";
            }
        }
        return 0;
    } catch (const glisson::TrainDivergence& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const glisson::ParamError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const glisson::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
