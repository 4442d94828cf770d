#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "glisson/features.hpp"
#include "glisson/manifest.hpp"
#include "glisson/nn/model.hpp"
#include "glisson/nn/train.hpp"

namespace glisson {

enum class ImageMode { full, roi };

std::string to_string(ImageMode mode);
ImageMode parse_image_mode(const std::string& name);

/// Maps a Metavir stage 0..4 onto the grouped class index.
///   K=2: {F0,F1} -> 0, {F2,F3,F4} -> 1
///   K=3: {F0} -> 0, {F1,F2} -> 1, {F3,F4} -> 2
///   K=5: identity
int group_stage(int stage, int class_count);

struct FoldSplit {
    std::vector<int> train, val, test; // element indices into the manifest
};

struct SplitPlan {
    int permutation = 0;
    std::vector<FoldSplit> folds;
};

/// Patient-grouped, stage-stratified rotating-fold cross-validation: fold f
/// is the test set, fold (f+1) mod folds the validation set, the rest train
/// (80/10/10 at patient granularity for 10 folds). All variants of a patient
/// land on the same side. Throws if any fold leaks a patient across sides.
std::vector<SplitPlan> make_splits(const DatasetManifest& manifest, int folds, int permutations,
                                   std::uint64_t seed);

/// Throws std::logic_error on patient leakage; called on every emitted plan.
void assert_no_leakage(const SplitPlan& plan, const DatasetManifest& manifest);

double accuracy(const std::vector<int>& pred, const std::vector<int>& truth);
double mae(const std::vector<int>& pred, const std::vector<int>& truth);

/// Per-element artifacts loaded for one image mode. Images and line rasters
/// are already resized to the model input resolution for that mode.
struct ElementStore {
    DatasetManifest manifest;
    std::vector<nn::Tensor> images; // (1,H,W), empty when not loaded
    std::vector<nn::Tensor> lines;  // (1,H,W), empty when not loaded
    std::vector<FeatureVector> features;
    ImageMode mode = ImageMode::roi;
    int img_h = 0, img_w = 0;
    bool has_images = false, has_lines = false, has_features = false;
};

struct ExperimentConfig {
    nn::ModelKind model = nn::ModelKind::mlnn;
    ImageMode mode = ImageMode::roi;
    int class_count = 2;
    int folds = 10;
    int permutations = 25;
    std::uint64_t seed = 0;
    nn::TrainConfig train;
};

struct CellResult {
    int permutation = 0;
    int fold = 0;
    double acc = 0.0;
    double mae = 0.0;
};

struct ExperimentReport {
    nn::ModelKind model = nn::ModelKind::mlnn;
    ImageMode mode = ImageMode::roi;
    int class_count = 2;
    std::vector<CellResult> cells; // deterministic (permutation, fold) order
    double acc_mean = 0.0, acc_std = 0.0;
    double mae_mean = 0.0, mae_std = 0.0;
};

/// Trains one model from scratch per (permutation, fold) cell and aggregates
/// test Acc/MAE (mean and sample std over all cells). Feature normalization
/// statistics are fit on each cell's training split only.
ExperimentReport run_experiment(const ElementStore& store, const ExperimentConfig& config);

struct SingleTrainResult {
    nn::Model model;
    double acc = 0.0;
    double mae = 0.0;
};

/// Trains just the first (permutation, fold) cell and hands back the model;
/// backs the CLI `train` subcommand.
SingleTrainResult train_single(const ElementStore& store, const ExperimentConfig& config);

} // namespace glisson
