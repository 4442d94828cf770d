#pragma once

#include <cstdint>
#include <vector>

#include "glisson/nn/model.hpp"
#include "glisson/nn/tensor.hpp"

namespace glisson::nn {

struct TrainConfig {
    double learning_rate = 1e-3;
    int batch_size = 32;
    int max_epochs = 200;
    int patience = 20; // epochs without validation-loss improvement
    std::uint64_t seed = 0;

    void validate() const;
};

/// Batch-first training data. `images` is (N,C,H,W) or empty, `features` is
/// (N,F) or empty; labels are class indices below the model's class count.
struct SampleSet {
    Tensor images;
    Tensor features;
    std::vector<int> labels;

    int size() const { return int(labels.size()); }
};

SampleSet subset(const SampleSet& set, const std::vector<int>& indices);

/// Minimizes categorical cross-entropy with adaptive-moment SGD, shuffling
/// per epoch from the seed. Early stopping restores the best-validation
/// weights; per-epoch stats land in model.history. Throws TrainDivergence
/// when the loss stops being finite.
void train(Model& model, const SampleSet& train_set, const SampleSet& val_set,
           const TrainConfig& config);

/// Mean cross-entropy and accuracy in inference mode.
double evaluate(Model& model, const SampleSet& set, double* accuracy_out);

std::vector<int> predict_set(Model& model, const SampleSet& set);

/// Compares analytic gradients with central finite differences (step eps) on
/// a downsized instance of the given architecture and returns the largest
/// relative error. Dropout is disabled; inputs are re-drawn until every relu
/// pre-activation and pooling margin sits away from its kink.
double grad_check(ModelKind kind, double eps, std::uint64_t seed);

/// The downsized architecture grad_check exercises (2x8x12 image inputs).
ModelSpec grad_check_spec(ModelKind kind);

} // namespace glisson::nn
