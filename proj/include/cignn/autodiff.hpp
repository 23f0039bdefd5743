#pragma once
#include <utility>

#include <cstdint>
#include <map>
#include <vector>

#include "cignn/tensor.hpp"

namespace cignn {

/// Handle to a value recorded on a Tape.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

/// Gradient of a scalar loss with respect to every trainable leaf,
/// keyed by leaf id. Leaves the loss never touches map to zero tensors.
using GradMap = std::map<int, Tensor>;

/// Record-on-forward, replay-backward differentiation tape.
///
/// Values are immutable once recorded; node indices grow monotonically so a
/// reverse index sweep is a valid topological order. A tape is confined to
/// one thread for the duration of one forward/backward pass; independent
/// tapes may run concurrently.
///
/// Every operation validates shapes up front and checks its result for
/// NaN/Inf, so non-finite values surface as errors instead of propagating.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Trainable leaf; participates in backward().
    Var leaf(Tensor value);
    /// Non-trainable input; treated as a constant.
    Var constant(Tensor value);

    const Tensor& value(Var v) const;
    std::size_t node_count() const { return nodes_.size(); }

    // Elementwise, equal shapes.
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var sigmoid(Var a);
    Var tanh(Var a);
    Var abs(Var a);
    Var one_minus(Var a);
    Var scale(Var a, double s);

    /// Reduce to a scalar of shape (1).
    Var sum(Var a);

    /// View with a new shape of identical size.
    Var reshape(Var a, std::vector<std::size_t> shape);

    Var matmul(Var a, Var b);

    /// Concatenate along an axis; all other dimensions must agree.
    /// Gradients split back to the inputs.
    Var concat(std::size_t axis, const std::vector<Var>& parts);

    /// Dense layer over the channel axis of a (channels, nodes, features)
    /// tensor: out[o,n,p] = sum_c weight[o,c] * x[c,n,p] + bias[o].
    Var channel_fc(Var weight, Var bias, Var x);

    /// out[n,p] = sum_r z[r] * x[r,n,p].
    Var channel_contract(Var z, Var x);

    /// out[r,n,p] = z[r] * m[n,p].
    Var channel_outer(Var z, Var m);

    /// Cross-graph weight contraction: w has shape (Nj,Pj,Pi,Ni), u has
    /// shape (Nj,Pj); out[ni,pi] = sum_{nj,pj} w[nj,pj,pi,ni] * u[nj,pj].
    Var pair_contract(Var w, Var u);

    /// Polynomial node filter: out = sum_k theta[k] * basis[k] * x, where
    /// each basis matrix acts on the node axis of x (channels, nodes,
    /// features). The basis is captured by reference and must outlive the
    /// tape. Filtered products are cached for the backward pass.
    Var poly_filter(Var theta, const std::vector<Tensor>& basis, Var x);

    /// Reverse sweep from a scalar loss. Returns d(loss)/d(leaf) for every
    /// trainable leaf on the tape; gradient accumulation is additive over
    /// all uses of a node.
    GradMap backward(Var loss) const;

private:
    enum class Op : std::uint8_t {
        kLeaf,
        kConst,
        kAdd,
        kSub,
        kMul,
        kSigmoid,
        kTanh,
        kAbs,
        kOneMinus,
        kScale,
        kSum,
        kReshape,
        kMatmul,
        kConcat,
        kChannelFc,
        kChannelContract,
        kChannelOuter,
        kPairContract,
        kPolyFilter,
    };

    struct Node {
        explicit Node(Op o) : op(o) {}
        Node(Op o, Tensor v) : op(o), value(std::move(v)) {}

        Op op;
        Tensor value;
        int a = -1;
        int b = -1;
        int c = -1;
        std::vector<int> parts;                      // concat inputs
        double factor = 0.0;                         // scale
        std::size_t axis = 0;                        // concat
        const std::vector<Tensor>* basis = nullptr;  // poly_filter
        std::vector<Tensor> cached;                  // poly_filter products
        bool needs_grad = false;
    };

    Var push(Node node, const char* op_name);
    const Node& at(Var v) const;
    bool needs(int id) const { return id >= 0 && nodes_[static_cast<std::size_t>(id)].needs_grad; }

    std::vector<Node> nodes_;
    std::vector<int> trainable_;
};

}  // namespace cignn
