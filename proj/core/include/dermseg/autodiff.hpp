#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "dermseg/image.hpp"
#include "dermseg/tensor.hpp"

namespace dermseg {

// Reverse-mode tape. Nodes are appended in evaluation order, so the creation
// order is already topological; backward() walks it in reverse and
// accumulates gradients, which makes fan-out sum for free.
class Graph {
public:
    using NodeId = int;

    NodeId input(Tensor value, bool requires_grad = false);
    // A tracked leaf; its gradient can be harvested by name after backward().
    NodeId param(const std::string& name, const Tensor& value);

    const Tensor& value(NodeId id) const { return node_at(id).value; }
    const Tensor& grad(NodeId id) const { return node_at(id).grad; }
    const std::vector<std::pair<std::string, NodeId>>& params() const { return params_; }

    // --- operations ---

    // input (C_in,H,W) x weight (C_out,C_in,k,k) + bias (C_out) -> valid
    // cross-correlation (C_out,H-k+1,W-k+1).
    NodeId conv2d_valid(NodeId input, NodeId weight, NodeId bias);

    // 2x2 max pool, stride 2; H and W must be even. Backward routes to the
    // first maximal element of each window.
    NodeId maxpool2(NodeId input);

    // Transposed convolution, kernel 2x2, stride 2 (non-overlapping blocks):
    // input (C_in,H,W) x weight (C_in,C_out,2,2) + bias -> (C_out,2H,2W).
    NodeId upconv2(NodeId input, NodeId weight, NodeId bias);

    NodeId relu(NodeId input);

    // Inverted dropout: zero with probability p, scale survivors by 1/(1-p).
    // Eval mode is an exact identity (returns the input node).
    NodeId dropout(NodeId input, double p, bool train, uint64_t seed);

    // Crops skip centrally to up's spatial size and stacks channels
    // (skip channels first). Crop margins must be even.
    NodeId center_crop_concat(NodeId skip, NodeId up);

    // Pixel-wise 2-class softmax + mean NLL against the target mask
    // (true = class 1). Max-subtraction stabilized.
    NodeId softmax_ce_loss(NodeId logits, const BinaryMask& target);

    NodeId add(NodeId a, NodeId b);
    NodeId sum(NodeId input);

    // Reverse accumulation from a scalar loss node.
    void backward(NodeId loss);

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        std::function<void(Graph&, const Node&)> backward_fn;
    };

    Node& node_at(NodeId id);
    const Tensor& checked_value(NodeId id) const;
    const Node& node_at(NodeId id) const;
    NodeId push(Tensor value, bool requires_grad, const char* op_name,
                std::function<void(Graph&, const Node&)> backward_fn);
    void accumulate(NodeId id, const Tensor& g);
    void accumulate_at(NodeId id, size_t flat_index, double g);
    bool wants_grad(NodeId id) const { return node_at(id).requires_grad; }

    std::vector<Node> nodes_;
    std::vector<std::pair<std::string, NodeId>> params_;
};

// Max relative central-difference error of d(loss)/dx over up to
// `max_coords` coordinates (all of them when the tensor is small).
// build must construct a scalar-valued graph from the given input node.
double grad_check(const std::function<Graph::NodeId(Graph&, Graph::NodeId)>& build,
                  const Tensor& x, double step = 1e-5, int max_coords = 64, uint64_t seed = 0);

}  // namespace dermseg
