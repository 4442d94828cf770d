#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "glisson/nn/layers.hpp"
#include "glisson/nn/tensor.hpp"

namespace glisson::nn {

enum class ModelKind { mlnn, cnn, cnnl, concat };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

enum class LayerKind { dense, conv2d, relu, maxpool2, flatten, dropout, softmax };

struct LayerDesc {
    LayerKind kind = LayerKind::dense;
    int a = 0;         // dense: in, conv2d: in_channels
    int b = 0;         // dense: out, conv2d: out_channels
    double rate = 0.0; // dropout keep-out rate
};

/// Layer-graph description: an optional image branch, an optional feature
/// branch, a concatenation junction (implicit when both branches exist) and a
/// shared head ending in the single softmax.
struct ModelSpec {
    ModelKind kind = ModelKind::mlnn;
    int class_count = 2;
    int img_channels = 0, img_h = 0, img_w = 0; // zero when no image input
    int feat_dim = 0;                           // zero when no feature input
    std::vector<LayerDesc> image_branch;
    std::vector<LayerDesc> feature_branch;
    std::vector<LayerDesc> head;

    std::int64_t param_count() const;
    bool wants_images() const { return img_channels > 0; }
    bool wants_features() const { return feat_dim > 0; }
};

/// Builds one of the four classifier specs.
///   mlnn   5 -> 32 -> 16 -> K on the feature vector
///   cnn    three conv(3x3)/relu/pool blocks (8,16,32 filters) -> dense 64 -> K
///   cnnl   same trunk with two input channels (image + binary line)
///   concat cnnl trunk to its 64-wide dense joined with the mlnn trunk to its
///          16-wide dense; 80 -> 32 -> K head, trained jointly
/// Image inputs are img_h x img_w (both divisible by 8); class_count in {2,3,5}.
ModelSpec build_model(ModelKind kind, int class_count, int img_h = 64, int img_w = 192);

struct EpochStats {
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_loss = 0.0;
    double val_acc = 0.0;
};

class Model {
public:
    Model(ModelSpec spec, std::uint64_t init_seed);

    const ModelSpec& spec() const { return spec_; }

    /// Class probabilities (N,K) in inference mode; rows sum to 1.
    Tensor forward(const Tensor& images, const Tensor& features);

    /// Pre-softmax logits; pass a TrainContext to enable dropout.
    Tensor forward_logits(const Tensor& images, const Tensor& features, TrainContext* ctx);

    /// Backpropagates d(loss)/d(logits) through head and branches.
    void backward(const Tensor& dlogits);

    std::vector<Tensor*> parameters();
    std::vector<Tensor*> gradients();
    std::vector<Layer*> layers(); // introspection for the gradient check

    std::vector<double> snapshot_weights() const;
    void restore_weights(const std::vector<double>& weights);

    std::vector<EpochStats> history;

private:
    Tensor run_branch(std::vector<std::unique_ptr<Layer>>& branch, const Tensor& input,
                      TrainContext* ctx);

    ModelSpec spec_;
    std::vector<std::unique_ptr<Layer>> image_layers_;
    std::vector<std::unique_ptr<Layer>> feature_layers_;
    std::vector<std::unique_ptr<Layer>> head_layers_; // softmax omitted (applied in forward)
    int junction_image_dim_ = 0;
    int junction_feature_dim_ = 0;
};

/// Argmax of the forward probabilities; ties resolve to the smaller class.
int predict(Model& model, const Tensor& image, const Tensor& features);
std::vector<int> predict_batch(Model& model, const Tensor& images, const Tensor& features);

/// Self-describing container: a text header (format version + spec + config
/// digest) followed by raw little-endian 64-bit weights in layer order.
void save_model(const Model& model, const std::string& path,
                const std::string& config_digest = "");
Model load_model(const std::string& path);

} // namespace glisson::nn
