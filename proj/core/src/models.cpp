#include "salience/models.hpp"

#include <cmath>

#include "salience/rng.hpp"

namespace salience {

Tensor* Model::find_param(const std::string& name) {
    for (auto& p : params_)
        if (p.name == name) return &p.value;
    return nullptr;
}

int Model::param_index(const std::string& name) const {
    if (param_index_.empty())
        for (size_t i = 0; i < params_.size(); ++i)
            param_index_[params_[i].name] = static_cast<int>(i);
    auto it = param_index_.find(name);
    if (it == param_index_.end()) throw ValidationError("unknown parameter: " + name);
    return it->second;
}

int64_t Model::param_count() const {
    int64_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
}

std::vector<Tape::NodeId> Model::bind_params(Tape& tape, bool with_grad) const {
    std::vector<Tape::NodeId> nodes;
    nodes.reserve(params_.size());
    for (const auto& p : params_) nodes.push_back(tape.leaf(p.value, with_grad));
    return nodes;
}

const Tensor& Model::buffer(const std::string& name) const {
    for (const auto& b : buffers_)
        if (b.name == name) return b.value;
    throw ValidationError("unknown buffer: " + name);
}

ModelOutput run_model(const Model& model, const Tensor& image) {
    Tape tape;
    auto fwd = model.forward(tape, image, false);
    ModelOutput out;
    const Tensor& logits = tape.value(fwd.logits);
    out.logits = {logits.data[0], logits.data[1]};
    const double m = std::max(out.logits[0], out.logits[1]);
    const double z = std::exp(out.logits[0] - m) + std::exp(out.logits[1] - m);
    out.probabilities = {std::exp(out.logits[0] - m) / z, std::exp(out.logits[1] - m) / z};
    out.features = tape.value(fwd.features);
    out.class_weights = tape.value(fwd.head_weight);
    const Tensor& b = tape.value(fwd.head_bias);
    out.biases = {b.data[0], b.data[1]};
    return out;
}

namespace {

Tensor he_normal(std::vector<int> shape, int fan_in, Rng& rng) {
    Tensor t(std::move(shape));
    const double std = std::sqrt(2.0 / fan_in);
    for (auto& v : t.data) v = std * rng.normal();
    return t;
}

} // namespace

TinyCamNet::TinyCamNet(int in_channels, uint64_t seed, Widths widths)
    : in_channels_(in_channels), w_(widths) {
    if (in_channels <= 0) throw ValidationError("tiny_cam_net: bad channel count");
    Rng rng(seed * 0x9e3779b97f4a7c15ull + 1);
    params_.push_back({"conv1.weight", he_normal({w_.c1, in_channels_, 3, 3}, in_channels_ * 9, rng)});
    params_.push_back({"conv1.bias", Tensor({w_.c1})});
    params_.push_back({"conv2.weight", he_normal({w_.c2, w_.c1, 3, 3}, w_.c1 * 9, rng)});
    params_.push_back({"conv2.bias", Tensor({w_.c2})});
    params_.push_back({"conv3.weight", he_normal({w_.c3, w_.c2, 3, 3}, w_.c2 * 9, rng)});
    params_.push_back({"conv3.bias", Tensor({w_.c3})});
    params_.push_back({"fc.weight", he_normal({2, w_.c3}, w_.c3, rng)});
    params_.push_back({"fc.bias", Tensor({2})});
}

Model::Forward TinyCamNet::forward(Tape& tape, const Tensor& image, bool with_grad) const {
    if (image.rank() != 3 || image.dim(0) != in_channels_)
        throw ValidationError("tiny_cam_net: input must be " + std::to_string(in_channels_) +
                              " x H x W");
    if (image.dim(1) % 4 != 0 || image.dim(2) % 4 != 0 || image.dim(1) < 4)
        throw ValidationError("tiny_cam_net: input sides must be multiples of 4");
    Forward f;
    f.param_nodes = bind_params(tape, with_grad);
    auto p = [&](const char* n) { return f.param_nodes[static_cast<size_t>(param_index(n))]; };

    Tape::NodeId x = tape.leaf(image, false);
    x = tape.relu(tape.conv2d(x, p("conv1.weight"), p("conv1.bias"), 1, 1));
    x = tape.avg_pool(x, 2, 2);
    x = tape.relu(tape.conv2d(x, p("conv2.weight"), p("conv2.bias"), 1, 1));
    x = tape.avg_pool(x, 2, 2);
    f.features = tape.relu(tape.conv2d(x, p("conv3.weight"), p("conv3.bias"), 1, 1));
    Tape::NodeId pooled = tape.global_avg_pool(f.features);
    f.head_weight = p("fc.weight");
    f.head_bias = p("fc.bias");
    f.logits = tape.linear(pooled, f.head_weight, f.head_bias);
    return f;
}

// ---------------------------------------------------------------------------
// DenseNet-121

namespace {
constexpr int kGrowth = 32;
constexpr int kBnSize = 4;
constexpr int kBlockSizes[4] = {6, 12, 24, 16};
constexpr double kBnEps = 1e-5;

void add_bn(std::vector<NamedTensor>& params, std::vector<NamedTensor>& buffers,
            const std::string& prefix, int ch) {
    params.push_back({prefix + ".weight", Tensor({ch})});
    params.push_back({prefix + ".bias", Tensor({ch})});
    buffers.push_back({prefix + ".running_mean", Tensor({ch})});
    buffers.push_back({prefix + ".running_var", Tensor({ch})});
}
} // namespace

DenseNet121::DenseNet121() {
    params_.push_back({"features.conv0.weight", Tensor({64, 3, 7, 7})});
    add_bn(params_, buffers_, "features.norm0", 64);
    int ch = 64;
    for (int b = 0; b < 4; ++b) {
        const std::string block = "features.denseblock" + std::to_string(b + 1);
        for (int l = 0; l < kBlockSizes[b]; ++l) {
            const std::string layer = block + ".denselayer" + std::to_string(l + 1);
            const int in_ch = ch + l * kGrowth;
            add_bn(params_, buffers_, layer + ".norm1", in_ch);
            params_.push_back({layer + ".conv1.weight", Tensor({kBnSize * kGrowth, in_ch, 1, 1})});
            add_bn(params_, buffers_, layer + ".norm2", kBnSize * kGrowth);
            params_.push_back({layer + ".conv2.weight", Tensor({kGrowth, kBnSize * kGrowth, 3, 3})});
        }
        ch += kBlockSizes[b] * kGrowth;
        if (b < 3) {
            const std::string trans = "features.transition" + std::to_string(b + 1);
            add_bn(params_, buffers_, trans + ".norm", ch);
            params_.push_back({trans + ".conv.weight", Tensor({ch / 2, ch, 1, 1})});
            ch /= 2;
        }
    }
    add_bn(params_, buffers_, "features.norm5", ch);
    params_.push_back({"classifier.weight", Tensor({2, ch})});
    params_.push_back({"classifier.bias", Tensor({2})});
}

void DenseNet121::init_random(uint64_t seed) {
    Rng rng(seed * 0x9e3779b97f4a7c15ull + 2);
    for (auto& p : params_) {
        if (p.name.find("conv") != std::string::npos && p.name.ends_with(".weight") &&
            p.value.rank() == 4) {
            const int fan_in = p.value.dim(1) * p.value.dim(2) * p.value.dim(3);
            const double std = std::sqrt(2.0 / fan_in);
            for (auto& v : p.value.data) v = std * rng.normal();
        } else if (p.name == "classifier.weight") {
            const double std = std::sqrt(1.0 / p.value.dim(1));
            for (auto& v : p.value.data) v = std * rng.normal();
        } else if (p.name.ends_with("norm0.weight") || p.name.find(".norm") != std::string::npos) {
            if (p.name.ends_with(".weight"))
                std::fill(p.value.data.begin(), p.value.data.end(), 1.0);
        }
    }
    for (auto& b : buffers_)
        if (b.name.ends_with(".running_var"))
            std::fill(b.value.data.begin(), b.value.data.end(), 1.0);
}

Model::Forward DenseNet121::forward(Tape& tape, const Tensor& image, bool with_grad) const {
    if (image.rank() != 3 || image.dim(0) != 3)
        throw ValidationError("densenet121: input must be 3 x H x W");
    if (image.dim(1) < 32 || image.dim(2) < 32)
        throw ValidationError("densenet121: input sides must be at least 32");
    Forward f;
    f.param_nodes = bind_params(tape, with_grad);
    auto p = [&](const std::string& n) {
        return f.param_nodes[static_cast<size_t>(param_index(n))];
    };
    auto conv_nb = [&](Tape::NodeId x, const std::string& w, int stride, int pad) {
        // torchvision DenseNet convs carry no bias
        Tape::NodeId zb = tape.leaf(Tensor({tape.value(p(w)).dim(0)}), false);
        return tape.conv2d(x, p(w), zb, stride, pad);
    };
    auto bn = [&](Tape::NodeId x, const std::string& prefix) {
        return tape.batch_norm_frozen(x, p(prefix + ".weight"), p(prefix + ".bias"),
                                      buffer(prefix + ".running_mean"),
                                      buffer(prefix + ".running_var"), kBnEps);
    };

    Tape::NodeId x = tape.leaf(image, false);
    x = conv_nb(x, "features.conv0.weight", 2, 3);
    x = tape.relu(bn(x, "features.norm0"));
    x = tape.max_pool(x, 3, 2, 1);

    for (int b = 0; b < 4; ++b) {
        const std::string block = "features.denseblock" + std::to_string(b + 1);
        for (int l = 0; l < kBlockSizes[b]; ++l) {
            const std::string layer = block + ".denselayer" + std::to_string(l + 1);
            Tape::NodeId y = tape.relu(bn(x, layer + ".norm1"));
            y = conv_nb(y, layer + ".conv1.weight", 1, 0);
            y = tape.relu(bn(y, layer + ".norm2"));
            y = conv_nb(y, layer + ".conv2.weight", 1, 1);
            x = tape.concat_channels({x, y});
        }
        if (b < 3) {
            const std::string trans = "features.transition" + std::to_string(b + 1);
            x = tape.relu(bn(x, trans + ".norm"));
            x = conv_nb(x, trans + ".conv.weight", 1, 0);
            x = tape.avg_pool(x, 2, 2);
        }
    }
    f.features = tape.relu(bn(x, "features.norm5"));
    Tape::NodeId pooled = tape.global_avg_pool(f.features);
    f.head_weight = p("classifier.weight");
    f.head_bias = p("classifier.bias");
    f.logits = tape.linear(pooled, f.head_weight, f.head_bias);
    return f;
}

} // namespace salience
