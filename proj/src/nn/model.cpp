#include "glisson/nn/model.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <json.hpp>

#include "glisson/error.hpp"

namespace glisson::nn {

using nlohmann::json;

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::mlnn: return "mlnn";
        case ModelKind::cnn: return "cnn";
        case ModelKind::cnnl: return "cnnl";
        case ModelKind::concat: return "concat";
    }
    return "?";
}

ModelKind parse_model_kind(const std::string& name) {
    if (name == "mlnn") return ModelKind::mlnn;
    if (name == "cnn") return ModelKind::cnn;
    if (name == "cnnl") return ModelKind::cnnl;
    if (name == "concat") return ModelKind::concat;
    throw ParamError("unknown model '" + name + "' (expected one of cnn, cnnl, mlnn, concat)");
}

namespace {

const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::dense: return "dense";
        case LayerKind::conv2d: return "conv2d";
        case LayerKind::relu: return "relu";
        case LayerKind::maxpool2: return "maxpool2";
        case LayerKind::flatten: return "flatten";
        case LayerKind::dropout: return "dropout";
        case LayerKind::softmax: return "softmax";
    }
    return "?";
}

LayerKind parse_layer_kind(const std::string& name) {
    for (LayerKind k : {LayerKind::dense, LayerKind::conv2d, LayerKind::relu, LayerKind::maxpool2,
                        LayerKind::flatten, LayerKind::dropout, LayerKind::softmax}) {
        if (name == layer_kind_name(k)) return k;
    }
    throw DataError("model file: unknown layer kind '" + name + "'");
}

std::vector<LayerDesc> feature_trunk() {
    return {{LayerKind::dense, 5, 32}, {LayerKind::relu}, {LayerKind::dense, 32, 16},
            {LayerKind::relu}};
}

std::vector<LayerDesc> conv_trunk(int channels, int img_h, int img_w) {
    const int flat = (img_h / 8) * (img_w / 8) * 32;
    return {{LayerKind::conv2d, channels, 8}, {LayerKind::relu},    {LayerKind::maxpool2},
            {LayerKind::conv2d, 8, 16},       {LayerKind::relu},    {LayerKind::maxpool2},
            {LayerKind::conv2d, 16, 32},      {LayerKind::relu},    {LayerKind::maxpool2},
            {LayerKind::flatten},             {LayerKind::dense, flat, 64}, {LayerKind::relu}};
}

} // namespace

std::int64_t ModelSpec::param_count() const {
    std::int64_t n = 0;
    auto count = [&](const std::vector<LayerDesc>& descs) {
        for (const auto& d : descs) {
            if (d.kind == LayerKind::dense) n += std::int64_t(d.a) * d.b + d.b;
            if (d.kind == LayerKind::conv2d) n += std::int64_t(d.b) * d.a * 9 + d.b;
        }
    };
    count(image_branch);
    count(feature_branch);
    count(head);
    return n;
}

ModelSpec build_model(ModelKind kind, int class_count, int img_h, int img_w) {
    if (class_count != 2 && class_count != 3 && class_count != 5) {
        throw ParamError("class_count must be one of {2,3,5}");
    }
    ModelSpec spec;
    spec.kind = kind;
    spec.class_count = class_count;

    const bool needs_image = kind != ModelKind::mlnn;
    if (needs_image && (img_h % 8 != 0 || img_w % 8 != 0 || img_h < 8 || img_w < 8)) {
        throw ParamError("image input dimensions must be positive multiples of 8");
    }

    switch (kind) {
        case ModelKind::mlnn:
            spec.feat_dim = 5;
            spec.feature_branch = feature_trunk();
            spec.head = {{LayerKind::dense, 16, class_count}, {LayerKind::softmax}};
            break;
        case ModelKind::cnn:
        case ModelKind::cnnl:
            spec.img_channels = kind == ModelKind::cnn ? 1 : 2;
            spec.img_h = img_h;
            spec.img_w = img_w;
            spec.image_branch = conv_trunk(spec.img_channels, img_h, img_w);
            spec.head = {{LayerKind::dropout, 0, 0, 0.5},
                         {LayerKind::dense, 64, class_count},
                         {LayerKind::softmax}};
            break;
        case ModelKind::concat:
            spec.img_channels = 2;
            spec.img_h = img_h;
            spec.img_w = img_w;
            spec.feat_dim = 5;
            spec.image_branch = conv_trunk(2, img_h, img_w);
            spec.feature_branch = feature_trunk();
            spec.head = {{LayerKind::dense, 80, 32},
                         {LayerKind::relu},
                         {LayerKind::dense, 32, class_count},
                         {LayerKind::softmax}};
            break;
    }
    return spec;
}

namespace {

std::vector<std::unique_ptr<Layer>> instantiate(const std::vector<LayerDesc>& descs, Rng& rng,
                                                bool is_head, int class_count) {
    std::vector<std::unique_ptr<Layer>> layers;
    for (std::size_t i = 0; i < descs.size(); ++i) {
        const LayerDesc& d = descs[i];
        switch (d.kind) {
            case LayerKind::dense: {
                // classification head weights get zero bias, hidden layers a
                // small positive one to keep relu units initially alive
                const bool final_dense = is_head && d.b == class_count;
                layers.push_back(std::make_unique<DenseLayer>(d.a, d.b, rng,
                                                              final_dense ? 0.0 : 0.01));
                break;
            }
            case LayerKind::conv2d:
                layers.push_back(std::make_unique<Conv2dLayer>(d.a, d.b, rng, 0.01));
                break;
            case LayerKind::relu:
                layers.push_back(std::make_unique<ReluLayer>());
                break;
            case LayerKind::maxpool2:
                layers.push_back(std::make_unique<MaxPool2Layer>());
                break;
            case LayerKind::flatten:
                layers.push_back(std::make_unique<FlattenLayer>());
                break;
            case LayerKind::dropout:
                layers.push_back(std::make_unique<DropoutLayer>(d.rate));
                break;
            case LayerKind::softmax:
                if (!is_head || i + 1 != descs.size()) {
                    throw ParamError("model spec: softmax must be the final head layer");
                }
                break; // applied by Model::forward, not instantiated
        }
    }
    return layers;
}

int branch_output_dim(const std::vector<LayerDesc>& descs, int input_dim) {
    int dim = input_dim;
    for (const auto& d : descs) {
        if (d.kind == LayerKind::dense) dim = d.b;
    }
    return dim;
}

} // namespace

Model::Model(ModelSpec spec, std::uint64_t init_seed) : spec_(std::move(spec)) {
    if (spec_.head.empty() || spec_.head.back().kind != LayerKind::softmax) {
        throw ParamError("model spec: head must end with softmax");
    }
    Rng rng(mix_seed(init_seed, 0x1417));
    image_layers_ = instantiate(spec_.image_branch, rng, false, spec_.class_count);
    feature_layers_ = instantiate(spec_.feature_branch, rng, false, spec_.class_count);
    head_layers_ = instantiate(spec_.head, rng, true, spec_.class_count);

    junction_image_dim_ =
        spec_.wants_images() ? branch_output_dim(spec_.image_branch, 0) : 0;
    junction_feature_dim_ =
        spec_.wants_features() ? branch_output_dim(spec_.feature_branch, spec_.feat_dim) : 0;
}

Tensor Model::run_branch(std::vector<std::unique_ptr<Layer>>& branch, const Tensor& input,
                         TrainContext* ctx) {
    Tensor x = input;
    for (auto& layer : branch) x = layer->forward(x, ctx);
    return x;
}

Tensor Model::forward_logits(const Tensor& images, const Tensor& features, TrainContext* ctx) {
    Tensor merged;
    if (spec_.wants_images() && spec_.wants_features()) {
        const Tensor a = run_branch(image_layers_, images, ctx);
        const Tensor b = run_branch(feature_layers_, features, ctx);
        if (a.dim(0) != b.dim(0)) throw ParamError("concat: branch batch sizes disagree");
        const int n = a.dim(0), da = a.dim(1), db = b.dim(1);
        merged = Tensor({n, da + db});
        for (int ni = 0; ni < n; ++ni) {
            std::memcpy(merged.ptr() + std::size_t(ni) * std::size_t(da + db),
                        a.ptr() + std::size_t(ni) * std::size_t(da), std::size_t(da) * 8);
            std::memcpy(merged.ptr() + std::size_t(ni) * std::size_t(da + db) + da,
                        b.ptr() + std::size_t(ni) * std::size_t(db), std::size_t(db) * 8);
        }
    } else if (spec_.wants_images()) {
        merged = run_branch(image_layers_, images, ctx);
    } else {
        merged = run_branch(feature_layers_, features, ctx);
    }
    return run_branch(head_layers_, merged, ctx);
}

Tensor Model::forward(const Tensor& images, const Tensor& features) {
    return softmax_rows(forward_logits(images, features, nullptr));
}

void Model::backward(const Tensor& dlogits) {
    Tensor d = dlogits;
    for (auto it = head_layers_.rbegin(); it != head_layers_.rend(); ++it) d = (*it)->backward(d);

    if (spec_.wants_images() && spec_.wants_features()) {
        const int n = d.dim(0);
        const int da = junction_image_dim_, db = junction_feature_dim_;
        Tensor di({n, da}), df({n, db});
        for (int ni = 0; ni < n; ++ni) {
            std::memcpy(di.ptr() + std::size_t(ni) * std::size_t(da),
                        d.ptr() + std::size_t(ni) * std::size_t(da + db), std::size_t(da) * 8);
            std::memcpy(df.ptr() + std::size_t(ni) * std::size_t(db),
                        d.ptr() + std::size_t(ni) * std::size_t(da + db) + da,
                        std::size_t(db) * 8);
        }
        for (auto it = image_layers_.rbegin(); it != image_layers_.rend(); ++it) {
            di = (*it)->backward(di);
        }
        for (auto it = feature_layers_.rbegin(); it != feature_layers_.rend(); ++it) {
            df = (*it)->backward(df);
        }
    } else if (spec_.wants_images()) {
        for (auto it = image_layers_.rbegin(); it != image_layers_.rend(); ++it) {
            d = (*it)->backward(d);
        }
    } else {
        for (auto it = feature_layers_.rbegin(); it != feature_layers_.rend(); ++it) {
            d = (*it)->backward(d);
        }
    }
}

std::vector<Tensor*> Model::parameters() {
    std::vector<Tensor*> out;
    for (auto* group : {&image_layers_, &feature_layers_, &head_layers_}) {
        for (auto& layer : *group) {
            for (Tensor* t : layer->params()) out.push_back(t);
        }
    }
    return out;
}

std::vector<Tensor*> Model::gradients() {
    std::vector<Tensor*> out;
    for (auto* group : {&image_layers_, &feature_layers_, &head_layers_}) {
        for (auto& layer : *group) {
            for (Tensor* t : layer->grads()) out.push_back(t);
        }
    }
    return out;
}

std::vector<Layer*> Model::layers() {
    std::vector<Layer*> out;
    for (auto* group : {&image_layers_, &feature_layers_, &head_layers_}) {
        for (auto& layer : *group) out.push_back(layer.get());
    }
    return out;
}

std::vector<double> Model::snapshot_weights() const {
    std::vector<double> out;
    for (auto* group : {&image_layers_, &feature_layers_, &head_layers_}) {
        for (const auto& layer : *group) {
            for (Tensor* t : layer->params()) {
                out.insert(out.end(), t->data.begin(), t->data.end());
            }
        }
    }
    return out;
}

void Model::restore_weights(const std::vector<double>& weights) {
    std::size_t offset = 0;
    for (Tensor* t : parameters()) {
        if (offset + t->data.size() > weights.size()) {
            throw ParamError("restore_weights: weight blob too small");
        }
        std::copy(weights.begin() + std::ptrdiff_t(offset),
                  weights.begin() + std::ptrdiff_t(offset + t->data.size()), t->data.begin());
        offset += t->data.size();
    }
    if (offset != weights.size()) throw ParamError("restore_weights: weight blob too large");
}

int predict(Model& model, const Tensor& image, const Tensor& features) {
    return predict_batch(model, image, features).at(0);
}

std::vector<int> predict_batch(Model& model, const Tensor& images, const Tensor& features) {
    const Tensor p = model.forward(images, features);
    const int n = p.dim(0), k = p.dim(1);
    std::vector<int> out(std::size_t(n), 0);
    for (int ni = 0; ni < n; ++ni) {
        const double* row = p.ptr() + std::size_t(ni) * std::size_t(k);
        int best = 0;
        for (int j = 1; j < k; ++j) {
            if (row[j] > row[best]) best = j; // ties keep the smaller class
        }
        out[std::size_t(ni)] = best;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr char kMagic[] = "GLISSON-NN 1";
constexpr double kSentinel = 1048577.03125; // exact in binary; detects byte-order mismatch

json descs_to_json(const std::vector<LayerDesc>& descs) {
    json arr = json::array();
    for (const auto& d : descs) {
        json e;
        e["kind"] = layer_kind_name(d.kind);
        if (d.a || d.b) {
            e["a"] = d.a;
            e["b"] = d.b;
        }
        if (d.rate > 0.0) e["rate"] = d.rate;
        arr.push_back(e);
    }
    return arr;
}

std::vector<LayerDesc> descs_from_json(const json& arr) {
    std::vector<LayerDesc> out;
    for (const auto& e : arr) {
        LayerDesc d;
        d.kind = parse_layer_kind(e.at("kind").get<std::string>());
        d.a = e.value("a", 0);
        d.b = e.value("b", 0);
        d.rate = e.value("rate", 0.0);
        out.push_back(d);
    }
    return out;
}

} // namespace

void save_model(const Model& model, const std::string& path, const std::string& config_digest) {
    const ModelSpec& spec = model.spec();
    json header;
    header["kind"] = to_string(spec.kind);
    header["class_count"] = spec.class_count;
    header["img"] = {spec.img_channels, spec.img_h, spec.img_w};
    header["feat_dim"] = spec.feat_dim;
    header["image_branch"] = descs_to_json(spec.image_branch);
    header["feature_branch"] = descs_to_json(spec.feature_branch);
    header["head"] = descs_to_json(spec.head);
    header["config_digest"] = config_digest;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(path + ": cannot open file for writing");
    out << kMagic << "\n" << header.dump() << "\n";

    const std::vector<double> weights = model.snapshot_weights();
    const std::uint64_t count = weights.size();
    out.write(reinterpret_cast<const char*>(&kSentinel), 8);
    out.write(reinterpret_cast<const char*>(&count), 8);
    out.write(reinterpret_cast<const char*>(weights.data()), std::streamsize(count * 8));
    if (!out) throw DataError(path + ": write failed");
}

Model load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(path + ": cannot open file");
    std::string magic, header_line;
    if (!std::getline(in, magic) || magic != kMagic) {
        throw DataError(path + ": not a model file or unsupported format version");
    }
    if (!std::getline(in, header_line)) throw DataError(path + ": truncated model header");

    json header;
    try {
        header = json::parse(header_line);
    } catch (const json::exception&) {
        throw DataError(path + ": malformed model header");
    }

    ModelSpec spec;
    try {
        spec.kind = parse_model_kind(header.at("kind").get<std::string>());
        spec.class_count = header.at("class_count").get<int>();
        spec.img_channels = header.at("img")[0].get<int>();
        spec.img_h = header.at("img")[1].get<int>();
        spec.img_w = header.at("img")[2].get<int>();
        spec.feat_dim = header.at("feat_dim").get<int>();
        spec.image_branch = descs_from_json(header.at("image_branch"));
        spec.feature_branch = descs_from_json(header.at("feature_branch"));
        spec.head = descs_from_json(header.at("head"));
    } catch (const json::exception&) {
        throw DataError(path + ": incomplete model header");
    }

    Model model(spec, 0);

    double sentinel = 0.0;
    std::uint64_t count = 0;
    in.read(reinterpret_cast<char*>(&sentinel), 8);
    in.read(reinterpret_cast<char*>(&count), 8);
    if (!in || sentinel != kSentinel) {
        throw DataError(path + ": weight block sentinel mismatch (corrupt or wrong byte order)");
    }
    if (count != std::uint64_t(spec.param_count())) {
        throw DataError(path + ": weight count " + std::to_string(count) +
                        " does not match spec (" + std::to_string(spec.param_count()) + ")");
    }
    std::vector<double> weights(count);
    in.read(reinterpret_cast<char*>(weights.data()), std::streamsize(count * 8));
    if (std::size_t(in.gcount()) != count * 8) throw DataError(path + ": truncated weight block");
    model.restore_weights(weights);
    return model;
}

} // namespace glisson::nn
