#pragma once

#include <memory>
#include <string>
#include <vector>

#include "glisson/nn/tensor.hpp"
#include "glisson/rng.hpp"

namespace glisson::nn {

/// Non-null during training: supplies the dropout stream.
struct TrainContext {
    Rng* dropout_rng = nullptr;
};

class Layer {
public:
    virtual ~Layer() = default;

    /// Runs the layer on a batch-first tensor, caching what backward needs.
    virtual Tensor forward(const Tensor& x, TrainContext* ctx) = 0;
    /// Gradient with respect to the input; parameter gradients are stored.
    virtual Tensor backward(const Tensor& dy) = 0;

    virtual std::vector<Tensor*> params() { return {}; }
    virtual std::vector<Tensor*> grads() { return {}; }
    virtual std::string name() const = 0;
};

/// Fully connected layer, (N,in) -> (N,out). He-initialized weights.
class DenseLayer final : public Layer {
public:
    DenseLayer(int in, int out, Rng& rng, double bias_init);

    Tensor forward(const Tensor& x, TrainContext* ctx) override;
    Tensor backward(const Tensor& dy) override;
    std::vector<Tensor*> params() override { return {&w_, &b_}; }
    std::vector<Tensor*> grads() override { return {&dw_, &db_}; }
    std::string name() const override;

private:
    int in_, out_;
    Tensor w_, b_, dw_, db_, x_;
};

/// 3x3 same-padding convolution, (N,Cin,H,W) -> (N,Cout,H,W).
class Conv2dLayer final : public Layer {
public:
    Conv2dLayer(int in_channels, int out_channels, Rng& rng, double bias_init, int kernel = 3);

    Tensor forward(const Tensor& x, TrainContext* ctx) override;
    Tensor backward(const Tensor& dy) override;
    std::vector<Tensor*> params() override { return {&w_, &b_}; }
    std::vector<Tensor*> grads() override { return {&dw_, &db_}; }
    std::string name() const override;

private:
    int cin_, cout_, k_, pad_;
    Tensor w_, b_, dw_, db_, x_;
};

class ReluLayer final : public Layer {
public:
    Tensor forward(const Tensor& x, TrainContext* ctx) override;
    Tensor backward(const Tensor& dy) override;
    std::string name() const override { return "relu"; }

    /// Smallest |pre-activation| of the last forward; used by the gradient
    /// check to keep inputs away from the kink.
    double last_min_abs_input() const { return min_abs_input_; }

private:
    Tensor x_;
    double min_abs_input_ = 0.0;
};

/// 2x2 max pooling with stride 2; odd trailing rows/columns are dropped.
class MaxPool2Layer final : public Layer {
public:
    Tensor forward(const Tensor& x, TrainContext* ctx) override;
    Tensor backward(const Tensor& dy) override;
    std::string name() const override { return "maxpool2"; }

    /// Smallest (max - runner-up) margin of the last forward.
    double last_min_margin() const { return min_margin_; }

private:
    std::vector<int> in_shape_;
    std::vector<std::int64_t> argmax_;
    double min_margin_ = 0.0;
};

class FlattenLayer final : public Layer {
public:
    Tensor forward(const Tensor& x, TrainContext* ctx) override;
    Tensor backward(const Tensor& dy) override;
    std::string name() const override { return "flatten"; }

private:
    std::vector<int> in_shape_;
};

/// Inverted dropout; identity outside training.
class DropoutLayer final : public Layer {
public:
    explicit DropoutLayer(double rate);

    Tensor forward(const Tensor& x, TrainContext* ctx) override;
    Tensor backward(const Tensor& dy) override;
    std::string name() const override;

private:
    double rate_;
    Tensor mask_;
    bool active_ = false;
};

/// Row-wise stable softmax over (N,K) logits.
Tensor softmax_rows(const Tensor& logits);

} // namespace glisson::nn
