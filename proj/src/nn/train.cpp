#include "glisson/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "glisson/error.hpp"

namespace glisson::nn {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ParamError("train: learning_rate must be positive");
    if (batch_size <= 0) throw ParamError("train: batch_size must be positive");
    if (max_epochs <= 0) throw ParamError("train: max_epochs must be positive");
    if (patience <= 0) throw ParamError("train: patience must be positive");
    if (patience > max_epochs) throw ParamError("train: patience must not exceed max_epochs");
}

SampleSet subset(const SampleSet& set, const std::vector<int>& indices) {
    SampleSet out;
    out.labels.reserve(indices.size());
    for (int idx : indices) out.labels.push_back(set.labels[std::size_t(idx)]);

    auto gather = [&](const Tensor& src, Tensor& dst) {
        if (src.empty()) return;
        const std::size_t row = std::size_t(src.numel() / src.dim(0));
        std::vector<int> shape = src.shape;
        shape[0] = int(indices.size());
        dst = Tensor(shape);
        for (std::size_t i = 0; i < indices.size(); ++i) {
            std::memcpy(dst.ptr() + i * row, src.ptr() + std::size_t(indices[i]) * row, row * 8);
        }
    };
    gather(set.images, out.images);
    gather(set.features, out.features);
    return out;
}

namespace {

// Adaptive-moment SGD (beta1 0.9, beta2 0.999) with bias correction.
class AdamOptimizer {
public:
    explicit AdamOptimizer(const std::vector<Tensor*>& params) {
        for (const Tensor* p : params) {
            m_.emplace_back(p->shape);
            v_.emplace_back(p->shape);
        }
    }

    void step(const std::vector<Tensor*>& params, const std::vector<Tensor*>& grads, double lr) {
        constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        ++t_;
        const double c1 = 1.0 - std::pow(b1, double(t_));
        const double c2 = 1.0 - std::pow(b2, double(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            double* p = params[i]->ptr();
            const double* g = grads[i]->ptr();
            double* m = m_[i].ptr();
            double* v = v_[i].ptr();
            const std::size_t n = params[i]->data.size();
            for (std::size_t j = 0; j < n; ++j) {
                m[j] = b1 * m[j] + (1.0 - b1) * g[j];
                v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
                p[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps);
            }
        }
    }

private:
    std::vector<Tensor> m_, v_;
    std::int64_t t_ = 0;
};

/// Mean cross-entropy over the batch plus d(loss)/d(logits); also counts hits.
double ce_loss_and_grad(const Tensor& logits, const std::vector<int>& labels, Tensor* dlogits,
                        int* correct) {
    const int n = logits.dim(0), k = logits.dim(1);
    Tensor probs = softmax_rows(logits);
    if (dlogits) *dlogits = probs;
    double loss = 0.0;
    int hits = 0;
    for (int ni = 0; ni < n; ++ni) {
        const double* row = probs.ptr() + std::size_t(ni) * std::size_t(k);
        const int y = labels[std::size_t(ni)];
        loss -= std::log(std::max(row[y], 1e-300));
        int best = 0;
        for (int j = 1; j < k; ++j) {
            if (row[j] > row[best]) best = j;
        }
        hits += best == y;
        if (dlogits) {
            double* drow = dlogits->ptr() + std::size_t(ni) * std::size_t(k);
            drow[y] -= 1.0;
            for (int j = 0; j < k; ++j) drow[j] /= double(n);
        }
    }
    if (correct) *correct = hits;
    return loss / double(n);
}

SampleSet slice_batch(const SampleSet& set, const std::vector<int>& order, int begin, int end) {
    std::vector<int> idx(order.begin() + begin, order.begin() + end);
    return subset(set, idx);
}

} // namespace

double evaluate(Model& model, const SampleSet& set, double* accuracy_out) {
    const int n = set.size();
    if (n == 0) throw ParamError("evaluate: empty sample set");
    double loss_sum = 0.0;
    int hits = 0;
    constexpr int kChunk = 64; // bounds activation memory
    std::vector<int> order(std::size_t(n), 0);
    for (int i = 0; i < n; ++i) order[std::size_t(i)] = i;
    for (int begin = 0; begin < n; begin += kChunk) {
        const int end = std::min(n, begin + kChunk);
        SampleSet batch = slice_batch(set, order, begin, end);
        const Tensor logits = model.forward_logits(batch.images, batch.features, nullptr);
        int correct = 0;
        const double loss = ce_loss_and_grad(logits, batch.labels, nullptr, &correct);
        loss_sum += loss * (end - begin);
        hits += correct;
    }
    if (accuracy_out) *accuracy_out = double(hits) / double(n);
    return loss_sum / double(n);
}

std::vector<int> predict_set(Model& model, const SampleSet& set) {
    std::vector<int> preds;
    preds.reserve(std::size_t(set.size()));
    constexpr int kChunk = 64;
    std::vector<int> order(std::size_t(set.size()));
    for (int i = 0; i < set.size(); ++i) order[std::size_t(i)] = i;
    for (int begin = 0; begin < set.size(); begin += kChunk) {
        const int end = std::min(set.size(), begin + kChunk);
        SampleSet batch = slice_batch(set, order, begin, end);
        const std::vector<int> p = predict_batch(model, batch.images, batch.features);
        preds.insert(preds.end(), p.begin(), p.end());
    }
    return preds;
}

void train(Model& model, const SampleSet& train_set, const SampleSet& val_set,
           const TrainConfig& config) {
    config.validate();
    if (train_set.size() == 0 || val_set.size() == 0) {
        throw ParamError("train: training and validation sets must be non-empty");
    }
    for (int y : train_set.labels) {
        if (y < 0 || y >= model.spec().class_count) {
            throw ParamError("train: label " + std::to_string(y) + " outside class range");
        }
    }

    Rng shuffle_rng(mix_seed(config.seed, 0x5f0e));
    Rng dropout_rng(mix_seed(config.seed, 0xd209));
    AdamOptimizer opt(model.parameters());

    std::vector<int> order(std::size_t(train_set.size()));
    for (int i = 0; i < train_set.size(); ++i) order[std::size_t(i)] = i;

    double best_val = std::numeric_limits<double>::infinity();
    std::vector<double> best_weights;
    int stale_epochs = 0;

    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        for (int i = train_set.size() - 1; i > 0; --i) {
            std::swap(order[std::size_t(i)], order[std::size_t(shuffle_rng.uniform_int(0, i))]);
        }

        double loss_sum = 0.0;
        int hits = 0;
        for (int begin = 0; begin < train_set.size(); begin += config.batch_size) {
            const int end = std::min(train_set.size(), begin + config.batch_size);
            SampleSet batch = slice_batch(train_set, order, begin, end);

            TrainContext ctx{&dropout_rng};
            const Tensor logits = model.forward_logits(batch.images, batch.features, &ctx);
            Tensor dlogits;
            int correct = 0;
            const double loss = ce_loss_and_grad(logits, batch.labels, &dlogits, &correct);
            if (!std::isfinite(loss)) throw TrainDivergence(epoch, config.learning_rate);

            model.backward(dlogits);
            opt.step(model.parameters(), model.gradients(), config.learning_rate);
            loss_sum += loss * (end - begin);
            hits += correct;
        }

        EpochStats stats;
        stats.train_loss = loss_sum / double(train_set.size());
        stats.train_acc = double(hits) / double(train_set.size());
        stats.val_loss = evaluate(model, val_set, &stats.val_acc);
        if (!std::isfinite(stats.val_loss)) throw TrainDivergence(epoch, config.learning_rate);
        model.history.push_back(stats);

        if (stats.val_loss < best_val) {
            best_val = stats.val_loss;
            best_weights = model.snapshot_weights();
            stale_epochs = 0;
        } else if (++stale_epochs >= config.patience) {
            break;
        }
    }
    if (!best_weights.empty()) model.restore_weights(best_weights);
}

// ---------------------------------------------------------------------------
// Gradient check

ModelSpec grad_check_spec(ModelKind kind) {
    if (kind == ModelKind::mlnn) return build_model(ModelKind::mlnn, 3);

    // Downsized conv trunk on 2x8x12 inputs: two conv/relu/pool blocks, then
    // an 8-wide dense. Same layer kinds as the full models, small enough for
    // finite differences over every parameter.
    ModelSpec spec;
    spec.kind = kind;
    spec.class_count = 3;
    spec.img_channels = kind == ModelKind::cnn ? 1 : 2;
    spec.img_h = 8;
    spec.img_w = 12;
    const int flat = (8 / 4) * (12 / 4) * 4;
    spec.image_branch = {{LayerKind::conv2d, spec.img_channels, 3},
                         {LayerKind::relu},
                         {LayerKind::maxpool2},
                         {LayerKind::conv2d, 3, 4},
                         {LayerKind::relu},
                         {LayerKind::maxpool2},
                         {LayerKind::flatten},
                         {LayerKind::dense, flat, 8},
                         {LayerKind::relu}};
    if (kind == ModelKind::concat) {
        spec.feat_dim = 5;
        spec.feature_branch = {{LayerKind::dense, 5, 32},
                               {LayerKind::relu},
                               {LayerKind::dense, 32, 16},
                               {LayerKind::relu}};
        spec.head = {{LayerKind::dense, 8 + 16, 8},
                     {LayerKind::relu},
                     {LayerKind::dense, 8, 3},
                     {LayerKind::softmax}};
    } else {
        spec.head = {{LayerKind::dense, 8, 3}, {LayerKind::softmax}};
    }
    return spec;
}

double grad_check(ModelKind kind, double eps, std::uint64_t seed) {
    const ModelSpec spec = grad_check_spec(kind);
    constexpr int kBatch = 4;
    constexpr double kKinkMargin = 1e-4;
    constexpr int kMaxAttempts = 64;

    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        const std::uint64_t attempt_seed = mix_seed(seed, std::uint64_t(attempt));
        Model model(spec, attempt_seed);
        Rng rng(mix_seed(attempt_seed, 0xfeed));

        SampleSet batch;
        if (spec.wants_images()) {
            batch.images = Tensor({kBatch, spec.img_channels, spec.img_h, spec.img_w});
            for (auto& v : batch.images.data) v = rng.uniform(0.05, 0.95);
        }
        if (spec.wants_features()) {
            batch.features = Tensor({kBatch, spec.feat_dim});
            for (auto& v : batch.features.data) v = rng.normal();
        }
        for (int i = 0; i < kBatch; ++i) {
            batch.labels.push_back(rng.uniform_int(0, spec.class_count - 1));
        }

        auto loss_of = [&]() {
            const Tensor logits = model.forward_logits(batch.images, batch.features, nullptr);
            return ce_loss_and_grad(logits, batch.labels, nullptr, nullptr);
        };

        // Re-draw the fixture until no pre-activation or pooling decision sits
        // close enough to its kink for the eps-perturbation to flip it.
        const Tensor logits = model.forward_logits(batch.images, batch.features, nullptr);
        double margin = std::numeric_limits<double>::infinity();
        for (Layer* layer : model.layers()) {
            if (auto* relu = dynamic_cast<ReluLayer*>(layer)) {
                margin = std::min(margin, relu->last_min_abs_input());
            }
            if (auto* pool = dynamic_cast<MaxPool2Layer*>(layer)) {
                margin = std::min(margin, pool->last_min_margin());
            }
        }
        if (margin < kKinkMargin && attempt + 1 < kMaxAttempts) continue;

        Tensor dlogits;
        ce_loss_and_grad(logits, batch.labels, &dlogits, nullptr);
        model.backward(dlogits);

        std::vector<double> analytic;
        for (Tensor* g : model.gradients()) {
            analytic.insert(analytic.end(), g->data.begin(), g->data.end());
        }

        double max_rel = 0.0;
        std::size_t flat_index = 0;
        for (Tensor* p : model.parameters()) {
            for (double& value : p->data) {
                const double saved = value;
                value = saved + eps;
                const double lp = loss_of();
                value = saved - eps;
                const double lm = loss_of();
                value = saved;
                const double numeric = (lp - lm) / (2.0 * eps);
                const double a = analytic[flat_index++];
                const double rel = std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), 1e-3);
                max_rel = std::max(max_rel, rel);
            }
        }
        return max_rel;
    }
    return std::numeric_limits<double>::infinity(); // unreachable
}

} // namespace glisson::nn
