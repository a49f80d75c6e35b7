#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "latte/error.hpp"
#include "latte/random.hpp"

namespace latte {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& s);
std::string shape_str(const Shape& s);
std::vector<std::size_t> row_major_strides(const Shape& s);

class Tape;
class Gradients;

/// Dense row-major tensor of 64-bit floats. Value-semantic: copies own
/// their buffer. A tensor optionally participates in a tape; `node` is
/// its id on that tape (-1 when untaped). Copying a taped tensor keeps
/// the node id, so copies refer to the same recorded value.
struct Tensor {
    Shape shape;
    std::vector<double> data;
    Tape* tape = nullptr;
    int node = -1;

    Tensor() = default;
    Tensor(Shape s, std::vector<double> d);

    static Tensor zeros(Shape s);
    static Tensor full(Shape s, double v);
    static Tensor scalar(double v);  // shape {1}

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    double item() const;  // requires size() == 1
    bool taped() const { return node >= 0; }
};

/// Map of gradients produced by Tape::backward. Indexed by tape node;
/// every taped leaf has an entry (zero-filled if the loss does not
/// depend on it).
class Gradients {
public:
    const std::vector<double>& at(const Tensor& t) const;
    const std::vector<double>& at_node(int node) const;

private:
    friend class Tape;
    std::vector<std::vector<double>> bufs_;
};

/// Reverse-mode recording tape. Built per forward pass, consumed by
/// backward(), then discarded. Nodes are appended in execution order,
/// which is a topological order by construction. A tape must stay on
/// one thread for its lifetime.
class Tape {
public:
    using BackwardFn =
        std::function<void(const std::vector<double>& grad_out, Tape& tape)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Registers `t` as a differentiable leaf of this tape.
    void watch(Tensor& t);

    /// Records an interior node. `inputs` may contain -1 entries for
    /// untaped operands; the backward fn must skip those itself.
    int record(std::vector<int> inputs, std::size_t output_size, BackwardFn fn);

    /// Runs reverse accumulation from a scalar taped loss. Returns the
    /// gradient of the loss w.r.t. every node; leaves unreachable from
    /// the loss get zero gradients.
    Gradients backward(const Tensor& loss);

    /// Accumulation buffer for a node's gradient, allocated (zeroed) on
    /// first use. Only meaningful during backward().
    std::vector<double>& grad_buf(int node);

    std::size_t num_nodes() const { return nodes_.size(); }

private:
    struct NodeRec {
        std::vector<int> inputs;
        std::size_t size;
        BackwardFn backward;  // empty for leaves
    };
    std::vector<NodeRec> nodes_;
    std::vector<std::vector<double>> grads_;
};

// ---------------------------------------------------------------------------
// Kernels. Every op validates shapes (errors name the offending extents),
// computes the forward value, and — if any input is taped — records the
// matching backward rule. Mixing tensors from two different tapes is an
// error.
// ---------------------------------------------------------------------------

/// (m,k) x (k,n) -> (m,n)
Tensor matmul(const Tensor& a, const Tensor& b);

/// Element-wise with numpy-style broadcasting over equal-rank shapes
/// (each extent must match or be 1 on either side).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor neg(const Tensor& a);
Tensor add_scalar(const Tensor& a, double c);
Tensor mul_scalar(const Tensor& a, double c);

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
/// Contiguous range [start, start+len) along one axis (concat's adjoint).
Tensor slice(const Tensor& a, std::size_t axis, std::size_t start, std::size_t len);
Tensor reshape(const Tensor& a, Shape new_shape);
Tensor transpose(const Tensor& a, const std::vector<std::size_t>& perm);
/// rank-2 convenience: swaps the two axes
Tensor transpose2d(const Tensor& a);

/// Reductions over a set of axes (result drops those axes; scalar result
/// has shape {1}).
Tensor reduce_mean(const Tensor& a, std::vector<std::size_t> axes);
Tensor reduce_sum(const Tensor& a, std::vector<std::size_t> axes);

/// Max over one axis; ties resolve to the earliest index and the
/// subgradient routes there.
Tensor reduce_max(const Tensor& a, std::size_t axis);

/// Numerically stable softmax over one axis (per-slice max subtracted).
Tensor softmax(const Tensor& a, std::size_t axis);

Tensor sigmoid(const Tensor& a);
Tensor tanh_t(const Tensor& a);
Tensor swish(const Tensor& a);  // x * sigmoid(x)
/// Natural log; rejects non-positive inputs (callers clamp first).
Tensor log_t(const Tensor& a);
Tensor exp_t(const Tensor& a);
/// min(max(x, lo), hi); zero subgradient outside (lo, hi).
Tensor clamp(const Tensor& a, double lo, double hi);

/// Per-channel 2-D convolution, odd kernel, stride 1, zero padding that
/// preserves H and W. x: (C,H,W), k: (C,kh,kw) -> (C,H,W).
Tensor depthwise_conv2d(const Tensor& x, const Tensor& k);

/// Per-channel 1-D convolution along the last axis, odd width, zero
/// padding. x: (C,P), k: (C,r) -> (C,P).
Tensor depthwise_conv1d(const Tensor& x, const Tensor& k);

/// 1x1 convolution as a channel mix: x: (C_in,H,W), w: (C_out,C_in)
/// -> (C_out,H,W).
Tensor conv1x1(const Tensor& x, const Tensor& w);

/// Inverted dropout: surviving entries scaled by 1/(1-p) so evaluation
/// mode is the identity. p == 0 is the identity and consumes no
/// randomness. Mask sampled from the given stream.
Tensor dropout(const Tensor& x, double p, RandomStream& rng);

}  // namespace latte
