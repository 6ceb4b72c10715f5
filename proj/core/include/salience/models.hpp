#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "salience/autodiff.hpp"
#include "salience/cam.hpp"
#include "salience/tensor.hpp"

namespace salience {

struct NamedTensor {
    std::string name;
    Tensor value;
};

// A CAM-compatible binary classifier: convolutional trunk ending in a feature
// grid, global average pooling, and a 2-class linear head.
class Model {
public:
    virtual ~Model() = default;
    virtual std::string arch() const = 0;
    virtual int input_channels() const = 0;
    // Side length training/eval should resize images to; 0 means native size.
    virtual int expected_input_size() const = 0;

    struct Forward {
        Tape::NodeId features = -1; // channels x h x w, pre-GAP
        Tape::NodeId logits = -1;   // length 2
        Tape::NodeId head_weight = -1;
        Tape::NodeId head_bias = -1;
        std::vector<Tape::NodeId> param_nodes; // aligned with params()
    };
    virtual Forward forward(Tape& tape, const Tensor& image, bool with_grad) const = 0;

    std::vector<NamedTensor>& params() { return params_; }
    const std::vector<NamedTensor>& params() const { return params_; }
    std::vector<NamedTensor>& buffers() { return buffers_; }
    const std::vector<NamedTensor>& buffers() const { return buffers_; }

    Tensor* find_param(const std::string& name);
    int param_index(const std::string& name) const;
    int64_t param_count() const;

protected:
    std::vector<Tape::NodeId> bind_params(Tape& tape, bool with_grad) const;
    const Tensor& buffer(const std::string& name) const;

    std::vector<NamedTensor> params_;
    std::vector<NamedTensor> buffers_;

private:
    mutable std::unordered_map<std::string, int> param_index_;
};

// Non-differentiable forward pass packaged for the CAM/loss value-level APIs.
ModelOutput run_model(const Model& model, const Tensor& image);

// Small conv net: three conv+relu stages with two 2x2 average poolings in
// between, GAP, 2-class linear head. CAM grid is input_size/4.
struct TinyCamNetWidths {
    int c1 = 8, c2 = 12, c3 = 16;
};

class TinyCamNet : public Model {
public:
    using Widths = TinyCamNetWidths;
    TinyCamNet(int in_channels, uint64_t seed, Widths widths = Widths{});
    std::string arch() const override { return "tiny_cam_net"; }
    int input_channels() const override { return in_channels_; }
    int expected_input_size() const override { return 0; }
    Forward forward(Tape& tape, const Tensor& image, bool with_grad) const override;

private:
    int in_channels_;
    Widths w_;
};

// DenseNet-121 with a 2-class head, frozen batch-norm statistics, parameter
// names mirroring the torchvision state dict so exported checkpoints load
// directly.
class DenseNet121 : public Model {
public:
    // Parameters start zeroed; callers load a checkpoint or init_random().
    DenseNet121();
    void init_random(uint64_t seed);
    std::string arch() const override { return "densenet121_pretrained"; }
    int input_channels() const override { return 3; }
    int expected_input_size() const override { return 224; }
    Forward forward(Tape& tape, const Tensor& image, bool with_grad) const override;
};

} // namespace salience
