#include "latte/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace latte {

std::size_t numel(const Shape& s) {
    std::size_t n = 1;
    for (auto e : s) n *= e;
    return n;
}

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << ",";
        os << s[i];
    }
    os << ")";
    return os.str();
}

std::vector<std::size_t> row_major_strides(const Shape& s) {
    std::vector<std::size_t> st(s.size(), 1);
    for (std::size_t i = s.size(); i-- > 1;) st[i - 1] = st[i] * s[i];
    return st;
}

Tensor::Tensor(Shape s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    if (numel(shape) != data.size())
        throw ValidationError("tensor: shape " + shape_str(shape) + " does not match buffer length " +
                              std::to_string(data.size()));
}

Tensor Tensor::zeros(Shape s) {
    std::size_t n = numel(s);
    return Tensor(std::move(s), std::vector<double>(n, 0.0));
}

Tensor Tensor::full(Shape s, double v) {
    std::size_t n = numel(s);
    return Tensor(std::move(s), std::vector<double>(n, v));
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

double Tensor::item() const {
    if (size() != 1)
        throw ValidationError("item(): tensor has " + std::to_string(size()) + " elements, expected 1");
    return data[0];
}

// --------------------------------------------------------------------------
// Tape
// --------------------------------------------------------------------------

void Tape::watch(Tensor& t) {
    if (t.node >= 0) {
        if (t.tape == this) return;
        throw ValidationError("watch(): tensor already belongs to another tape");
    }
    nodes_.push_back(NodeRec{{}, t.size(), {}});
    t.tape = this;
    t.node = static_cast<int>(nodes_.size()) - 1;
}

int Tape::record(std::vector<int> inputs, std::size_t output_size, BackwardFn fn) {
    nodes_.push_back(NodeRec{std::move(inputs), output_size, std::move(fn)});
    return static_cast<int>(nodes_.size()) - 1;
}

std::vector<double>& Tape::grad_buf(int node) {
    auto& g = grads_[static_cast<std::size_t>(node)];
    if (g.empty()) g.assign(nodes_[static_cast<std::size_t>(node)].size, 0.0);
    return g;
}

Gradients Tape::backward(const Tensor& loss) {
    if (loss.node < 0) throw ValidationError("backward(): loss is not on a tape");
    if (loss.tape != this) throw ValidationError("backward(): loss belongs to a different tape");
    if (loss.size() != 1)
        throw ValidationError("backward(): loss must be scalar, got shape " + shape_str(loss.shape));

    grads_.assign(nodes_.size(), {});
    grad_buf(loss.node)[0] = 1.0;
    for (int i = loss.node; i >= 0; --i) {
        auto& rec = nodes_[static_cast<std::size_t>(i)];
        if (rec.backward && !grads_[static_cast<std::size_t>(i)].empty())
            rec.backward(grads_[static_cast<std::size_t>(i)], *this);
    }
    // Leaves untouched by the loss still get (zero) gradients.
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (!nodes_[i].backward && grads_[i].empty()) grads_[i].assign(nodes_[i].size, 0.0);

    Gradients out;
    out.bufs_ = std::move(grads_);
    grads_.clear();
    return out;
}

const std::vector<double>& Gradients::at(const Tensor& t) const {
    if (t.node < 0) throw ValidationError("gradients: tensor is not on a tape");
    return at_node(t.node);
}

const std::vector<double>& Gradients::at_node(int node) const {
    if (node < 0 || static_cast<std::size_t>(node) >= bufs_.size())
        throw ValidationError("gradients: node id " + std::to_string(node) + " out of range");
    return bufs_[static_cast<std::size_t>(node)];
}

// --------------------------------------------------------------------------
// op helpers
// --------------------------------------------------------------------------

namespace {

Tape* result_tape(std::initializer_list<const Tensor*> ins) {
    Tape* t = nullptr;
    for (const Tensor* p : ins) {
        if (!p->taped()) continue;
        if (t && t != p->tape)
            throw ValidationError("op mixes tensors from two different tapes");
        t = p->tape;
    }
    return t;
}

void finish(Tensor& out, Tape* tp, std::vector<int> inputs, Tape::BackwardFn fn) {
    if (!tp) return;
    out.tape = tp;
    out.node = tp->record(std::move(inputs), out.size(), std::move(fn));
}

void accumulate(std::vector<double>& acc, const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) acc[i] += v[i];
}

// Element-wise map with derivative expressed from (x, y).
template <typename F, typename DF>
Tensor unary_op(const Tensor& a, F f, DF dfdx) {
    Tensor out(a.shape, std::vector<double>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = f(a.data[i]);
    Tape* tp = result_tape({&a});
    if (tp) {
        std::vector<double> x = a.data, y = out.data;
        int an = a.node;
        finish(out, tp, {an}, [x = std::move(x), y = std::move(y), an, dfdx](
                                  const std::vector<double>& g, Tape& tape) {
            auto& ga = tape.grad_buf(an);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * dfdx(x[i], y[i]);
        });
    }
    return out;
}

struct BroadcastPlan {
    Shape out_shape;
    std::vector<std::size_t> a_strides, b_strides;  // zero on broadcast axes
};

BroadcastPlan broadcast_plan(const Tensor& a, const Tensor& b, const char* opname) {
    if (a.rank() != b.rank())
        throw ValidationError(std::string(opname) + ": rank mismatch " + shape_str(a.shape) + " vs " +
                              shape_str(b.shape));
    BroadcastPlan p;
    p.out_shape.resize(a.rank());
    for (std::size_t i = 0; i < a.rank(); ++i) {
        std::size_t ea = a.shape[i], eb = b.shape[i];
        if (ea != eb && ea != 1 && eb != 1)
            throw ValidationError(std::string(opname) + ": incompatible extents at axis " +
                                  std::to_string(i) + ": " + shape_str(a.shape) + " vs " +
                                  shape_str(b.shape));
        p.out_shape[i] = std::max(ea, eb);
    }
    auto sa = row_major_strides(a.shape);
    auto sb = row_major_strides(b.shape);
    p.a_strides.resize(a.rank());
    p.b_strides.resize(a.rank());
    for (std::size_t i = 0; i < a.rank(); ++i) {
        p.a_strides[i] = (a.shape[i] == 1 && p.out_shape[i] != 1) ? 0 : sa[i];
        p.b_strides[i] = (b.shape[i] == 1 && p.out_shape[i] != 1) ? 0 : sb[i];
    }
    return p;
}

// Walks an output shape while tracking two strided input offsets.
template <typename Fn>
void broadcast_walk(const Shape& out_shape, const std::vector<std::size_t>& sa,
                    const std::vector<std::size_t>& sb, Fn fn) {
    std::size_t n = numel(out_shape);
    std::size_t rank = out_shape.size();
    if (rank == 0) {
        fn(0, 0, 0);
        return;
    }
    std::vector<std::size_t> idx(rank, 0);
    std::size_t ia = 0, ib = 0;
    for (std::size_t flat = 0; flat < n; ++flat) {
        fn(flat, ia, ib);
        for (std::size_t ax = rank; ax-- > 0;) {
            idx[ax]++;
            ia += sa[ax];
            ib += sb[ax];
            if (idx[ax] < out_shape[ax]) break;
            ia -= sa[ax] * out_shape[ax];
            ib -= sb[ax] * out_shape[ax];
            idx[ax] = 0;
        }
    }
}

enum class BinKind { Add, Sub, Mul };

Tensor binary_broadcast(const Tensor& a, const Tensor& b, BinKind kind, const char* opname) {
    BroadcastPlan p = broadcast_plan(a, b, opname);
    Tensor out = Tensor::zeros(p.out_shape);
    broadcast_walk(p.out_shape, p.a_strides, p.b_strides,
                   [&](std::size_t o, std::size_t ia, std::size_t ib) {
                       double x = a.data[ia], y = b.data[ib];
                       out.data[o] = kind == BinKind::Add ? x + y
                                     : kind == BinKind::Sub ? x - y
                                                            : x * y;
                   });
    Tape* tp = result_tape({&a, &b});
    if (tp) {
        int an = a.node, bn = b.node;
        std::vector<double> av, bv;
        if (kind == BinKind::Mul) {  // only mul needs the operand values
            av = a.data;
            bv = b.data;
        }
        Shape osh = p.out_shape;
        auto sa = p.a_strides, sb = p.b_strides;
        finish(out, tp, {an, bn},
               [an, bn, kind, av = std::move(av), bv = std::move(bv), osh = std::move(osh),
                sa = std::move(sa), sb = std::move(sb)](const std::vector<double>& g, Tape& tape) {
                   std::vector<double>* ga = an >= 0 ? &tape.grad_buf(an) : nullptr;
                   std::vector<double>* gb = bn >= 0 ? &tape.grad_buf(bn) : nullptr;
                   broadcast_walk(osh, sa, sb, [&](std::size_t o, std::size_t ia, std::size_t ib) {
                       switch (kind) {
                           case BinKind::Add:
                               if (ga) (*ga)[ia] += g[o];
                               if (gb) (*gb)[ib] += g[o];
                               break;
                           case BinKind::Sub:
                               if (ga) (*ga)[ia] += g[o];
                               if (gb) (*gb)[ib] -= g[o];
                               break;
                           case BinKind::Mul:
                               if (ga) (*ga)[ia] += g[o] * bv[ib];
                               if (gb) (*gb)[ib] += g[o] * av[ia];
                               break;
                       }
                   });
               });
    }
    return out;
}

double stable_sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

// --------------------------------------------------------------------------
// kernels
// --------------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2)
        throw ValidationError("matmul: expects rank-2 operands, got " + shape_str(a.shape) + " and " +
                              shape_str(b.shape));
    if (a.shape[1] != b.shape[0])
        throw ValidationError("matmul: inner extents disagree: " + shape_str(a.shape) + " x " +
                              shape_str(b.shape));
    std::size_t m = a.shape[0], k = a.shape[1], n = b.shape[1];
    Tensor out = Tensor::zeros({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = &a.data[i * k];
        double* orow = &out.data[i * n];
        for (std::size_t kk = 0; kk < k; ++kk) {
            double av = arow[kk];
            if (av == 0.0) continue;
            const double* brow = &b.data[kk * n];
            for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    Tape* tp = result_tape({&a, &b});
    if (tp) {
        int an = a.node, bn = b.node;
        std::vector<double> av = a.data, bv = b.data;
        finish(out, tp, {an, bn},
               [an, bn, m, k, n, av = std::move(av), bv = std::move(bv)](
                   const std::vector<double>& g, Tape& tape) {
                   if (an >= 0) {  // dA = G * B^T
                       auto& ga = tape.grad_buf(an);
                       for (std::size_t i = 0; i < m; ++i)
                           for (std::size_t j = 0; j < n; ++j) {
                               double gv = g[i * n + j];
                               if (gv == 0.0) continue;
                               for (std::size_t kk = 0; kk < k; ++kk)
                                   ga[i * k + kk] += gv * bv[kk * n + j];
                           }
                   }
                   if (bn >= 0) {  // dB = A^T * G
                       auto& gb = tape.grad_buf(bn);
                       for (std::size_t i = 0; i < m; ++i)
                           for (std::size_t kk = 0; kk < k; ++kk) {
                               double avv = av[i * k + kk];
                               if (avv == 0.0) continue;
                               const double* grow = &g[i * n];
                               double* gbrow = &gb[kk * n];
                               for (std::size_t j = 0; j < n; ++j) gbrow[j] += avv * grow[j];
                           }
                   }
               });
    }
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) { return binary_broadcast(a, b, BinKind::Add, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary_broadcast(a, b, BinKind::Sub, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary_broadcast(a, b, BinKind::Mul, "mul"); }

Tensor neg(const Tensor& a) {
    return unary_op(a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Tensor add_scalar(const Tensor& a, double c) {
    return unary_op(a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Tensor mul_scalar(const Tensor& a, double c) {
    return unary_op(a, [c](double x) { return x * c; }, [c](double, double) { return c; });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
    if (parts.empty()) throw ValidationError("concat: no inputs");
    const Shape& ref = parts[0].shape;
    if (axis >= ref.size())
        throw ValidationError("concat: axis " + std::to_string(axis) + " out of range for rank " +
                              std::to_string(ref.size()));
    Shape out_shape = ref;
    std::size_t total_axis = 0;
    for (const auto& p : parts) {
        if (p.rank() != ref.size())
            throw ValidationError("concat: rank mismatch " + shape_str(p.shape) + " vs " + shape_str(ref));
        for (std::size_t i = 0; i < ref.size(); ++i)
            if (i != axis && p.shape[i] != ref[i])
                throw ValidationError("concat: extent mismatch at axis " + std::to_string(i) + ": " +
                                      shape_str(p.shape) + " vs " + shape_str(ref));
        total_axis += p.shape[axis];
    }
    out_shape[axis] = total_axis;

    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= ref[i];
    for (std::size_t i = axis + 1; i < ref.size(); ++i) inner *= ref[i];

    Tensor out = Tensor::zeros(out_shape);
    std::size_t offset = 0;  // in axis units
    for (const auto& p : parts) {
        std::size_t pa = p.shape[axis];
        for (std::size_t o = 0; o < outer; ++o)
            std::copy_n(&p.data[o * pa * inner], pa * inner,
                        &out.data[(o * total_axis + offset) * inner]);
        offset += pa;
    }

    std::vector<const Tensor*> ptrs;
    for (const auto& p : parts) ptrs.push_back(&p);
    Tape* tp = nullptr;
    for (const Tensor* p : ptrs) {
        if (!p->taped()) continue;
        if (tp && tp != p->tape) throw ValidationError("op mixes tensors from two different tapes");
        tp = p->tape;
    }
    if (tp) {
        std::vector<int> ids;
        std::vector<std::size_t> widths;
        for (const auto& p : parts) {
            ids.push_back(p.node);
            widths.push_back(p.shape[axis]);
        }
        finish(out, tp, ids,
               [ids, widths, outer, inner, total_axis](const std::vector<double>& g, Tape& tape) {
                   std::size_t offset = 0;
                   for (std::size_t pi = 0; pi < ids.size(); ++pi) {
                       std::size_t pa = widths[pi];
                       if (ids[pi] >= 0) {
                           auto& gp = tape.grad_buf(ids[pi]);
                           for (std::size_t o = 0; o < outer; ++o) {
                               const double* src = &g[(o * total_axis + offset) * inner];
                               double* dst = &gp[o * pa * inner];
                               for (std::size_t i = 0; i < pa * inner; ++i) dst[i] += src[i];
                           }
                       }
                       offset += pa;
                   }
               });
    }
    return out;
}

Tensor slice(const Tensor& a, std::size_t axis, std::size_t start, std::size_t len) {
    if (axis >= a.rank())
        throw ValidationError("slice: axis " + std::to_string(axis) + " out of range for shape " +
                              shape_str(a.shape));
    if (len == 0 || start + len > a.shape[axis])
        throw ValidationError("slice: range [" + std::to_string(start) + "," +
                              std::to_string(start + len) + ") exceeds extent " +
                              std::to_string(a.shape[axis]) + " on axis " + std::to_string(axis));
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= a.shape[i];
    for (std::size_t i = axis + 1; i < a.rank(); ++i) inner *= a.shape[i];
    std::size_t extent = a.shape[axis];

    Shape out_shape = a.shape;
    out_shape[axis] = len;
    Tensor out = Tensor::zeros(out_shape);
    for (std::size_t o = 0; o < outer; ++o)
        std::copy_n(&a.data[(o * extent + start) * inner], len * inner, &out.data[o * len * inner]);

    Tape* tp = result_tape({&a});
    if (tp) {
        int an = a.node;
        finish(out, tp, {an},
               [an, outer, inner, extent, start, len](const std::vector<double>& g, Tape& tape) {
                   auto& ga = tape.grad_buf(an);
                   for (std::size_t o = 0; o < outer; ++o) {
                       const double* src = &g[o * len * inner];
                       double* dst = &ga[(o * extent + start) * inner];
                       for (std::size_t i = 0; i < len * inner; ++i) dst[i] += src[i];
                   }
               });
    }
    return out;
}

Tensor reshape(const Tensor& a, Shape new_shape) {
    if (numel(new_shape) != a.size())
        throw ValidationError("reshape: cannot view " + shape_str(a.shape) + " as " +
                              shape_str(new_shape));
    Tensor out(new_shape, a.data);
    Tape* tp = result_tape({&a});
    if (tp) {
        int an = a.node;
        finish(out, tp, {an}, [an](const std::vector<double>& g, Tape& tape) {
            accumulate(tape.grad_buf(an), g);
        });
    }
    return out;
}

Tensor transpose(const Tensor& a, const std::vector<std::size_t>& perm) {
    if (perm.size() != a.rank())
        throw ValidationError("transpose: permutation length " + std::to_string(perm.size()) +
                              " does not match rank " + std::to_string(a.rank()));
    std::vector<bool> seen(a.rank(), false);
    for (auto p : perm) {
        if (p >= a.rank() || seen[p]) throw ValidationError("transpose: invalid permutation");
        seen[p] = true;
    }
    Shape out_shape(a.rank());
    for (std::size_t i = 0; i < a.rank(); ++i) out_shape[i] = a.shape[perm[i]];
    auto in_strides = row_major_strides(a.shape);
    std::vector<std::size_t> gather(a.rank());  // stride in input per output axis
    for (std::size_t i = 0; i < a.rank(); ++i) gather[i] = in_strides[perm[i]];

    Tensor out = Tensor::zeros(out_shape);
    std::size_t n = out.size();
    std::size_t rank = a.rank();
    std::vector<std::size_t> idx(rank, 0);
    std::size_t src = 0;
    for (std::size_t flat = 0; flat < n; ++flat) {
        out.data[flat] = a.data[src];
        for (std::size_t ax = rank; ax-- > 0;) {
            idx[ax]++;
            src += gather[ax];
            if (idx[ax] < out_shape[ax]) break;
            src -= gather[ax] * out_shape[ax];
            idx[ax] = 0;
        }
    }
    Tape* tp = result_tape({&a});
    if (tp) {
        int an = a.node;
        finish(out, tp, {an},
               [an, out_shape, gather, rank, n](const std::vector<double>& g, Tape& tape) {
                   auto& ga = tape.grad_buf(an);
                   std::vector<std::size_t> idx(rank, 0);
                   std::size_t src = 0;
                   for (std::size_t flat = 0; flat < n; ++flat) {
                       ga[src] += g[flat];
                       for (std::size_t ax = rank; ax-- > 0;) {
                           idx[ax]++;
                           src += gather[ax];
                           if (idx[ax] < out_shape[ax]) break;
                           src -= gather[ax] * out_shape[ax];
                           idx[ax] = 0;
                       }
                   }
               });
    }
    return out;
}

Tensor transpose2d(const Tensor& a) {
    if (a.rank() != 2) throw ValidationError("transpose2d: expects rank 2, got " + shape_str(a.shape));
    return transpose(a, {1, 0});
}

namespace {

// Shared machinery for sum/mean reductions.
Tensor reduce_impl(const Tensor& a, std::vector<std::size_t> axes, bool mean, const char* opname) {
    if (axes.empty()) throw ValidationError(std::string(opname) + ": no axes given");
    std::sort(axes.begin(), axes.end());
    axes.erase(std::unique(axes.begin(), axes.end()), axes.end());
    std::vector<bool> reduced(a.rank(), false);
    std::size_t count = 1;
    for (auto ax : axes) {
        if (ax >= a.rank())
            throw ValidationError(std::string(opname) + ": axis " + std::to_string(ax) +
                                  " out of range for shape " + shape_str(a.shape));
        reduced[ax] = true;
        count *= a.shape[ax];
    }
    if (count == 0) throw ValidationError(std::string(opname) + ": empty reduction extent");
    Shape out_shape;
    for (std::size_t i = 0; i < a.rank(); ++i)
        if (!reduced[i]) out_shape.push_back(a.shape[i]);
    if (out_shape.empty()) out_shape = {1};

    // Map each input element to its output slot.
    auto in_strides = row_major_strides(a.shape);
    Shape kept_extents;
    std::vector<std::size_t> kept_strides;
    for (std::size_t i = 0; i < a.rank(); ++i)
        if (!reduced[i]) {
            kept_extents.push_back(a.shape[i]);
            kept_strides.push_back(in_strides[i]);
        }
    auto out_strides = row_major_strides(out_shape);

    Tensor out = Tensor::zeros(out_shape);
    {
        std::vector<std::size_t> idx(a.rank(), 0);
        for (std::size_t flat = 0; flat < a.size(); ++flat) {
            std::size_t o = 0, kd = 0;
            for (std::size_t i = 0; i < a.rank(); ++i)
                if (!reduced[i]) o += idx[i] * out_strides[kd], ++kd;
            out.data[o] += a.data[flat];
            for (std::size_t ax = a.rank(); ax-- > 0;) {
                idx[ax]++;
                if (idx[ax] < a.shape[ax]) break;
                idx[ax] = 0;
            }
        }
    }
    double scale = mean ? 1.0 / static_cast<double>(count) : 1.0;
    if (mean)
        for (auto& v : out.data) v *= scale;

    Tape* tp = result_tape({&a});
    if (tp) {
        int an = a.node;
        Shape in_shape = a.shape;
        finish(out, tp, {an},
               [an, in_shape, reduced, out_strides, scale](const std::vector<double>& g, Tape& tape) {
                   auto& ga = tape.grad_buf(an);
                   std::size_t rank = in_shape.size();
                   std::vector<std::size_t> idx(rank, 0);
                   for (std::size_t flat = 0; flat < ga.size(); ++flat) {
                       std::size_t o = 0, kd = 0;
                       for (std::size_t i = 0; i < rank; ++i)
                           if (!reduced[i]) o += idx[i] * out_strides[kd], ++kd;
                       ga[flat] += g[o] * scale;
                       for (std::size_t ax = rank; ax-- > 0;) {
                           idx[ax]++;
                           if (idx[ax] < in_shape[ax]) break;
                           idx[ax] = 0;
                       }
                   }
               });
    }
    return out;
}

}  // namespace

Tensor reduce_mean(const Tensor& a, std::vector<std::size_t> axes) {
    return reduce_impl(a, std::move(axes), true, "reduce_mean");
}

Tensor reduce_sum(const Tensor& a, std::vector<std::size_t> axes) {
    return reduce_impl(a, std::move(axes), false, "reduce_sum");
}

Tensor reduce_max(const Tensor& a, std::size_t axis) {
    if (axis >= a.rank())
        throw ValidationError("reduce_max: axis " + std::to_string(axis) + " out of range for shape " +
                              shape_str(a.shape));
    std::size_t extent = a.shape[axis];
    if (extent == 0) throw ValidationError("reduce_max: empty axis");
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= a.shape[i];
    for (std::size_t i = axis + 1; i < a.rank(); ++i) inner *= a.shape[i];
    Shape out_shape;
    for (std::size_t i = 0; i < a.rank(); ++i)
        if (i != axis) out_shape.push_back(a.shape[i]);
    if (out_shape.empty()) out_shape = {1};

    Tensor out = Tensor::zeros(out_shape);
    std::vector<std::size_t> arg(out.size());
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t in = 0; in < inner; ++in) {
            double best = a.data[o * extent * inner + in];
            std::size_t bi = 0;
            for (std::size_t e = 1; e < extent; ++e) {
                double v = a.data[(o * extent + e) * inner + in];
                if (v > best) {  // strict: ties keep the earliest index
                    best = v;
                    bi = e;
                }
            }
            out.data[o * inner + in] = best;
            arg[o * inner + in] = bi;
        }
    Tape* tp = result_tape({&a});
    if (tp) {
        int an = a.node;
        finish(out, tp, {an},
               [an, arg, outer, inner, extent](const std::vector<double>& g, Tape& tape) {
                   auto& ga = tape.grad_buf(an);
                   for (std::size_t o = 0; o < outer; ++o)
                       for (std::size_t in = 0; in < inner; ++in) {
                           std::size_t slot = o * inner + in;
                           ga[(o * extent + arg[slot]) * inner + in] += g[slot];
                       }
               });
    }
    return out;
}

Tensor softmax(const Tensor& a, std::size_t axis) {
    if (axis >= a.rank())
        throw ValidationError("softmax: axis " + std::to_string(axis) + " out of range for shape " +
                              shape_str(a.shape));
    std::size_t extent = a.shape[axis];
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= a.shape[i];
    for (std::size_t i = axis + 1; i < a.rank(); ++i) inner *= a.shape[i];

    Tensor out = Tensor::zeros(a.shape);
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t in = 0; in < inner; ++in) {
            double mx = a.data[o * extent * inner + in];
            for (std::size_t e = 1; e < extent; ++e)
                mx = std::max(mx, a.data[(o * extent + e) * inner + in]);
            double sum = 0.0;
            for (std::size_t e = 0; e < extent; ++e) {
                double v = std::exp(a.data[(o * extent + e) * inner + in] - mx);
                out.data[(o * extent + e) * inner + in] = v;
                sum += v;
            }
            for (std::size_t e = 0; e < extent; ++e) out.data[(o * extent + e) * inner + in] /= sum;
        }
    Tape* tp = result_tape({&a});
    if (tp) {
        int an = a.node;
        std::vector<double> s = out.data;
        finish(out, tp, {an},
               [an, s = std::move(s), outer, inner, extent](const std::vector<double>& g, Tape& tape) {
                   auto& ga = tape.grad_buf(an);
                   for (std::size_t o = 0; o < outer; ++o)
                       for (std::size_t in = 0; in < inner; ++in) {
                           double dot = 0.0;
                           for (std::size_t e = 0; e < extent; ++e) {
                               std::size_t i = (o * extent + e) * inner + in;
                               dot += g[i] * s[i];
                           }
                           for (std::size_t e = 0; e < extent; ++e) {
                               std::size_t i = (o * extent + e) * inner + in;
                               ga[i] += s[i] * (g[i] - dot);
                           }
                       }
               });
    }
    return out;
}

Tensor sigmoid(const Tensor& a) {
    return unary_op(a, stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh_t(const Tensor& a) {
    return unary_op(a, [](double x) { return std::tanh(x); },
                    [](double, double y) { return 1.0 - y * y; });
}

Tensor swish(const Tensor& a) {
    return unary_op(a, [](double x) { return x * stable_sigmoid(x); },
                    [](double x, double) {
                        double s = stable_sigmoid(x);
                        return s + x * s * (1.0 - s);
                    });
}

Tensor log_t(const Tensor& a) {
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a.data[i] <= 0.0)
            throw ValidationError("log: non-positive input " + std::to_string(a.data[i]) + " at index " +
                                  std::to_string(i));
    return unary_op(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor exp_t(const Tensor& a) {
    return unary_op(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
    if (!(lo < hi)) throw ValidationError("clamp: lo must be < hi");
    return unary_op(a, [lo, hi](double x) { return std::min(std::max(x, lo), hi); },
                    [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Tensor depthwise_conv2d(const Tensor& x, const Tensor& k) {
    if (x.rank() != 3 || k.rank() != 3)
        throw ValidationError("depthwise_conv2d: expects x (C,H,W) and k (C,kh,kw), got " +
                              shape_str(x.shape) + " and " + shape_str(k.shape));
    std::size_t C = x.shape[0], H = x.shape[1], W = x.shape[2];
    std::size_t kh = k.shape[1], kw = k.shape[2];
    if (k.shape[0] != C)
        throw ValidationError("depthwise_conv2d: channel mismatch: x has " + std::to_string(C) +
                              ", kernel has " + std::to_string(k.shape[0]));
    if (kh % 2 == 0 || kw % 2 == 0)
        throw ValidationError("depthwise_conv2d: kernel extents must be odd, got " + shape_str(k.shape));
    if (H == 0 || W == 0) throw ValidationError("depthwise_conv2d: empty spatial extent");
    std::size_t ph = kh / 2, pw = kw / 2;

    Tensor out = Tensor::zeros({C, H, W});
    auto val = [&](std::size_t c, long i, long j) -> double {
        if (i < 0 || j < 0 || i >= static_cast<long>(H) || j >= static_cast<long>(W)) return 0.0;
        return x.data[(c * H + static_cast<std::size_t>(i)) * W + static_cast<std::size_t>(j)];
    };
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t i = 0; i < H; ++i)
            for (std::size_t j = 0; j < W; ++j) {
                double acc = 0.0;
                for (std::size_t u = 0; u < kh; ++u)
                    for (std::size_t v = 0; v < kw; ++v)
                        acc += val(c, static_cast<long>(i + u) - static_cast<long>(ph),
                                   static_cast<long>(j + v) - static_cast<long>(pw)) *
                               k.data[(c * kh + u) * kw + v];
                out.data[(c * H + i) * W + j] = acc;
            }
    Tape* tp = result_tape({&x, &k});
    if (tp) {
        int xn = x.node, kn = k.node;
        std::vector<double> xv = x.data, kv = k.data;
        finish(out, tp, {xn, kn},
               [xn, kn, C, H, W, kh, kw, ph, pw, xv = std::move(xv), kv = std::move(kv)](
                   const std::vector<double>& g, Tape& tape) {
                   auto in_range = [&](long i, long j) {
                       return i >= 0 && j >= 0 && i < static_cast<long>(H) && j < static_cast<long>(W);
                   };
                   if (xn >= 0) {
                       auto& gx = tape.grad_buf(xn);
                       for (std::size_t c = 0; c < C; ++c)
                           for (std::size_t i = 0; i < H; ++i)
                               for (std::size_t j = 0; j < W; ++j) {
                                   double gv = g[(c * H + i) * W + j];
                                   if (gv == 0.0) continue;
                                   for (std::size_t u = 0; u < kh; ++u)
                                       for (std::size_t v = 0; v < kw; ++v) {
                                           long pi = static_cast<long>(i + u) - static_cast<long>(ph);
                                           long pj = static_cast<long>(j + v) - static_cast<long>(pw);
                                           if (in_range(pi, pj))
                                               gx[(c * H + static_cast<std::size_t>(pi)) * W +
                                                  static_cast<std::size_t>(pj)] +=
                                                   gv * kv[(c * kh + u) * kw + v];
                                       }
                               }
                   }
                   if (kn >= 0) {
                       auto& gk = tape.grad_buf(kn);
                       for (std::size_t c = 0; c < C; ++c)
                           for (std::size_t i = 0; i < H; ++i)
                               for (std::size_t j = 0; j < W; ++j) {
                                   double gv = g[(c * H + i) * W + j];
                                   if (gv == 0.0) continue;
                                   for (std::size_t u = 0; u < kh; ++u)
                                       for (std::size_t v = 0; v < kw; ++v) {
                                           long pi = static_cast<long>(i + u) - static_cast<long>(ph);
                                           long pj = static_cast<long>(j + v) - static_cast<long>(pw);
                                           if (in_range(pi, pj))
                                               gk[(c * kh + u) * kw + v] +=
                                                   gv * xv[(c * H + static_cast<std::size_t>(pi)) * W +
                                                           static_cast<std::size_t>(pj)];
                                       }
                               }
                   }
               });
    }
    return out;
}

Tensor depthwise_conv1d(const Tensor& x, const Tensor& k) {
    if (x.rank() != 2 || k.rank() != 2)
        throw ValidationError("depthwise_conv1d: expects x (C,P) and k (C,r), got " +
                              shape_str(x.shape) + " and " + shape_str(k.shape));
    std::size_t C = x.shape[0], P = x.shape[1], r = k.shape[1];
    if (k.shape[0] != C)
        throw ValidationError("depthwise_conv1d: channel mismatch: x has " + std::to_string(C) +
                              ", kernel has " + std::to_string(k.shape[0]));
    if (r % 2 == 0)
        throw ValidationError("depthwise_conv1d: kernel width must be odd, got " + std::to_string(r));
    if (P == 0) throw ValidationError("depthwise_conv1d: empty positional extent");
    std::size_t pad = r / 2;

    Tensor out = Tensor::zeros({C, P});
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t p = 0; p < P; ++p) {
            double acc = 0.0;
            for (std::size_t u = 0; u < r; ++u) {
                long q = static_cast<long>(p + u) - static_cast<long>(pad);
                if (q >= 0 && q < static_cast<long>(P))
                    acc += x.data[c * P + static_cast<std::size_t>(q)] * k.data[c * r + u];
            }
            out.data[c * P + p] = acc;
        }
    Tape* tp = result_tape({&x, &k});
    if (tp) {
        int xn = x.node, kn = k.node;
        std::vector<double> xv = x.data, kv = k.data;
        finish(out, tp, {xn, kn},
               [xn, kn, C, P, r, pad, xv = std::move(xv), kv = std::move(kv)](
                   const std::vector<double>& g, Tape& tape) {
                   if (xn >= 0) {
                       auto& gx = tape.grad_buf(xn);
                       for (std::size_t c = 0; c < C; ++c)
                           for (std::size_t p = 0; p < P; ++p) {
                               double gv = g[c * P + p];
                               if (gv == 0.0) continue;
                               for (std::size_t u = 0; u < r; ++u) {
                                   long q = static_cast<long>(p + u) - static_cast<long>(pad);
                                   if (q >= 0 && q < static_cast<long>(P))
                                       gx[c * P + static_cast<std::size_t>(q)] += gv * kv[c * r + u];
                               }
                           }
                   }
                   if (kn >= 0) {
                       auto& gk = tape.grad_buf(kn);
                       for (std::size_t c = 0; c < C; ++c)
                           for (std::size_t p = 0; p < P; ++p) {
                               double gv = g[c * P + p];
                               if (gv == 0.0) continue;
                               for (std::size_t u = 0; u < r; ++u) {
                                   long q = static_cast<long>(p + u) - static_cast<long>(pad);
                                   if (q >= 0 && q < static_cast<long>(P))
                                       gk[c * r + u] += gv * xv[c * P + static_cast<std::size_t>(q)];
                               }
                           }
                   }
               });
    }
    return out;
}

Tensor conv1x1(const Tensor& x, const Tensor& w) {
    if (x.rank() != 3 || w.rank() != 2)
        throw ValidationError("conv1x1: expects x (C,H,W) and w (C_out,C_in), got " +
                              shape_str(x.shape) + " and " + shape_str(w.shape));
    std::size_t C = x.shape[0], H = x.shape[1], W = x.shape[2];
    if (w.shape[1] != C)
        throw ValidationError("conv1x1: input channels " + std::to_string(C) +
                              " do not match weight columns " + std::to_string(w.shape[1]));
    Tensor flat = reshape(x, {C, H * W});
    Tensor mixed = matmul(w, flat);
    return reshape(mixed, {w.shape[0], H, W});
}

Tensor dropout(const Tensor& x, double p, RandomStream& rng) {
    if (p < 0.0 || p >= 1.0)
        throw ValidationError("dropout: p must be in [0,1), got " + std::to_string(p));
    if (p == 0.0) return x;
    double keep_scale = 1.0 / (1.0 - p);
    std::vector<double> mask(x.size());
    for (auto& m : mask) m = (rng.uniform01() >= p) ? keep_scale : 0.0;
    Tensor out(x.shape, std::vector<double>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) out.data[i] = x.data[i] * mask[i];
    Tape* tp = result_tape({&x});
    if (tp) {
        int xn = x.node;
        finish(out, tp, {xn}, [xn, mask = std::move(mask)](const std::vector<double>& g, Tape& tape) {
            auto& gx = tape.grad_buf(xn);
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * mask[i];
        });
    }
    return out;
}

}  // namespace latte
