#pragma once

#include <functional>
#include <vector>

#include "salience/tensor.hpp"

namespace salience {

// Reverse-mode tape over Tensor nodes. A tape is built per sample, backward()
// runs the recorded closures in reverse construction order. Nodes are cheap;
// no graph reuse across samples.
class Tape {
public:
    using NodeId = int;

    NodeId leaf(Tensor value, bool requires_grad = false);
    // Leaf holding a copy of another node's value, cut off from gradients.
    NodeId detach(NodeId a);

    const Tensor& value(NodeId id) const { return nodes_[static_cast<size_t>(id)].val; }
    const Tensor& grad(NodeId id) const { return nodes_[static_cast<size_t>(id)].grad; }
    double scalar(NodeId id) const { return nodes_[static_cast<size_t>(id)].val.data[0]; }

    // Seed d(root)/d(root)=1 and propagate. Root must be a scalar node.
    void backward(NodeId root);

    // Elementwise.
    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId scale(NodeId a, double s);
    NodeId rsub_const(double c, NodeId a); // c - a
    NodeId relu(NodeId a);

    // Convolutional stack.
    NodeId conv2d(NodeId x, NodeId w, NodeId b, int stride, int pad);
    NodeId max_pool(NodeId x, int k, int stride, int pad);
    NodeId avg_pool(NodeId x, int k, int stride);
    NodeId global_avg_pool(NodeId x); // CxHxW -> C
    NodeId linear(NodeId v, NodeId w, NodeId b); // w: out x in
    NodeId concat_channels(const std::vector<NodeId>& xs);
    // Frozen-statistics batchnorm: (x - mean) / sqrt(var + eps) * gamma + beta,
    // gradients flow to x, gamma and beta only.
    NodeId batch_norm_frozen(NodeId x, NodeId gamma, NodeId beta,
                             const Tensor& running_mean, const Tensor& running_var, double eps);

    // CAM head.
    // Weighted channel sum: out(y,x) = sum_j w[class_index, j] * f[j, y, x].
    NodeId class_cam(NodeId features, NodeId class_weights, int class_index);
    // Min-max remap to [0,1] with subgradients routed to the first (row-major)
    // extremum. Constant input yields the constant 0.5 map with zero gradient.
    NodeId normalize_unit(NodeId a);

    // Scalars.
    NodeId mse_vs_const(NodeId a, const Tensor& target);
    NodeId mse(NodeId a, NodeId b);
    // Numerically stable -log softmax(logits)[label], logits of length 2.
    NodeId cross_entropy(NodeId logits, int label);
    // Weighted sum of scalar nodes.
    NodeId weighted_sum(const std::vector<NodeId>& terms, const std::vector<double>& coeffs);

    size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Tensor val;
        Tensor grad;
        bool requires_grad = false;
        std::function<void()> back; // empty for leaves
    };

    NodeId push(Tensor val, bool requires_grad, std::function<void()> back);
    Node& node(NodeId id) { return nodes_[static_cast<size_t>(id)]; }

    std::vector<Node> nodes_;
};

} // namespace salience
