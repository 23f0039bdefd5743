#include "cignn/autodiff.hpp"

#include <cmath>
#include <string>

#include "cignn/errors.hpp"
#include "cignn/kernels.hpp"

namespace cignn {

namespace {

void accumulate(std::vector<Tensor>& grads, int id, const Tensor& delta) {
    Tensor& slot = grads[static_cast<std::size_t>(id)];
    if (slot.empty()) {
        slot = delta;
        return;
    }
    for (std::size_t i = 0; i < slot.size(); ++i) {
        slot[i] += delta[i];
    }
}

}  // namespace

Var Tape::push(Node node, const char* op_name) {
    require_finite(node.value, op_name);
    nodes_.push_back(std::move(node));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

const Tape::Node& Tape::at(Var v) const {
    if (!v.valid() || static_cast<std::size_t>(v.id) >= nodes_.size()) {
        throw Error("tape: invalid variable handle");
    }
    return nodes_[static_cast<std::size_t>(v.id)];
}

const Tensor& Tape::value(Var v) const { return at(v).value; }

Var Tape::leaf(Tensor value) {
    Node n{Op::kLeaf, std::move(value)};
    n.needs_grad = true;
    Var v = push(std::move(n), "leaf");
    trainable_.push_back(v.id);
    return v;
}

Var Tape::constant(Tensor value) {
    Node n{Op::kConst, std::move(value)};
    return push(std::move(n), "constant");
}

Var Tape::add(Var a, Var b) {
    Node n{Op::kAdd};
    kernels::add(value(a), value(b), n.value);
    n.a = a.id;
    n.b = b.id;
    n.needs_grad = needs(a.id) || needs(b.id);
    return push(std::move(n), "add");
}

Var Tape::sub(Var a, Var b) {
    Node n{Op::kSub};
    kernels::sub(value(a), value(b), n.value);
    n.a = a.id;
    n.b = b.id;
    n.needs_grad = needs(a.id) || needs(b.id);
    return push(std::move(n), "sub");
}

Var Tape::mul(Var a, Var b) {
    Node n{Op::kMul};
    kernels::mul(value(a), value(b), n.value);
    n.a = a.id;
    n.b = b.id;
    n.needs_grad = needs(a.id) || needs(b.id);
    return push(std::move(n), "mul");
}

Var Tape::sigmoid(Var a) {
    Node n{Op::kSigmoid};
    kernels::sigmoid(value(a), n.value);
    n.a = a.id;
    n.needs_grad = needs(a.id);
    return push(std::move(n), "sigmoid");
}

Var Tape::tanh(Var a) {
    Node n{Op::kTanh};
    kernels::tanh(value(a), n.value);
    n.a = a.id;
    n.needs_grad = needs(a.id);
    return push(std::move(n), "tanh");
}

Var Tape::abs(Var a) {
    const Tensor& x = value(a);
    Node n{Op::kAbs, Tensor(x.shape())};
    for (std::size_t i = 0; i < x.size(); ++i) {
        n.value[i] = std::abs(x[i]);
    }
    n.a = a.id;
    n.needs_grad = needs(a.id);
    return push(std::move(n), "abs");
}

Var Tape::one_minus(Var a) {
    const Tensor& x = value(a);
    Node n{Op::kOneMinus, Tensor(x.shape())};
    for (std::size_t i = 0; i < x.size(); ++i) {
        n.value[i] = 1.0 - x[i];
    }
    n.a = a.id;
    n.needs_grad = needs(a.id);
    return push(std::move(n), "one_minus");
}

Var Tape::scale(Var a, double s) {
    Node n{Op::kScale};
    kernels::scale(value(a), s, n.value);
    n.a = a.id;
    n.factor = s;
    n.needs_grad = needs(a.id);
    return push(std::move(n), "scale");
}

Var Tape::sum(Var a) {
    Node n{Op::kSum, Tensor::scalar(kernels::sum(value(a)))};
    n.a = a.id;
    n.needs_grad = needs(a.id);
    return push(std::move(n), "sum");
}

Var Tape::reshape(Var a, std::vector<std::size_t> shape) {
    const Tensor& x = value(a);
    if (shape_product(shape) != x.size()) {
        throw DimensionError("reshape: " + x.shape_string() + " cannot view as " +
                             Tensor::shape_string(shape));
    }
    Node n{Op::kReshape, Tensor(std::move(shape), std::vector<double>(x.data(), x.data() + x.size()))};
    n.a = a.id;
    n.needs_grad = needs(a.id);
    return push(std::move(n), "reshape");
}

Var Tape::matmul(Var a, Var b) {
    Node n{Op::kMatmul, kernels::matmul(value(a), value(b))};
    n.a = a.id;
    n.b = b.id;
    n.needs_grad = needs(a.id) || needs(b.id);
    return push(std::move(n), "matmul");
}

Var Tape::concat(std::size_t axis, const std::vector<Var>& parts) {
    if (parts.empty()) {
        throw DimensionError("concat: no inputs");
    }
    const Tensor& first = value(parts[0]);
    if (axis >= first.rank()) {
        throw DimensionError("concat: axis " + std::to_string(axis) + " out of range for " +
                             first.shape_string());
    }
    std::vector<std::size_t> shape = first.shape();
    for (std::size_t t = 1; t < parts.size(); ++t) {
        const Tensor& part = value(parts[t]);
        if (part.rank() != first.rank()) {
            throw DimensionError("concat: rank mismatch " + first.shape_string() + " vs " +
                                 part.shape_string());
        }
        for (std::size_t d = 0; d < first.rank(); ++d) {
            if (d != axis && part.dim(d) != first.dim(d)) {
                throw DimensionError("concat: incompatible shapes " + first.shape_string() + " vs " +
                                     part.shape_string() + " off axis " + std::to_string(axis));
            }
        }
        shape[axis] += part.dim(axis);
    }

    std::size_t outer = 1;
    for (std::size_t d = 0; d < axis; ++d) {
        outer *= shape[d];
    }
    std::size_t tail = 1;
    for (std::size_t d = axis + 1; d < shape.size(); ++d) {
        tail *= shape[d];
    }

    Node n{Op::kConcat, Tensor(shape)};
    double* out = n.value.data();
    std::size_t offset = 0;
    const std::size_t out_block = shape[axis] * tail;
    for (Var part_var : parts) {
        const Tensor& part = value(part_var);
        const std::size_t block = part.dim(axis) * tail;
        for (std::size_t o = 0; o < outer; ++o) {
            const double* src = part.data() + o * block;
            double* dst = out + o * out_block + offset;
            for (std::size_t i = 0; i < block; ++i) {
                dst[i] = src[i];
            }
        }
        offset += block;
        n.parts.push_back(part_var.id);
        n.needs_grad = n.needs_grad || needs(part_var.id);
    }
    n.axis = axis;
    return push(std::move(n), "concat");
}

Var Tape::channel_fc(Var weight, Var bias, Var x) {
    const Tensor& w = value(weight);
    const Tensor& b = value(bias);
    const Tensor& in = value(x);
    if (w.rank() != 2 || b.rank() != 1 || in.rank() != 3) {
        throw DimensionError("channel_fc: expected weight (out,in), bias (out), signal (in,N,P); got " +
                             w.shape_string() + ", " + b.shape_string() + ", " + in.shape_string());
    }
    const std::size_t out_ch = w.dim(0);
    const std::size_t in_ch = w.dim(1);
    if (in.dim(0) != in_ch || b.dim(0) != out_ch) {
        throw DimensionError("channel_fc: channel mismatch, weight " + w.shape_string() + ", bias " +
                             b.shape_string() + ", signal " + in.shape_string());
    }
    const std::size_t nodes = in.dim(1);
    const std::size_t features = in.dim(2);

    Node n{Op::kChannelFc, Tensor({out_ch, nodes, features})};
    for (std::size_t o = 0; o < out_ch; ++o) {
        for (std::size_t i = 0; i < nodes; ++i) {
            for (std::size_t p = 0; p < features; ++p) {
                double acc = b[o];
                for (std::size_t ci = 0; ci < in_ch; ++ci) {
                    acc += w.at2(o, ci) * in.at3(ci, i, p);
                }
                n.value.at3(o, i, p) = acc;
            }
        }
    }
    n.a = weight.id;
    n.b = bias.id;
    n.c = x.id;
    n.needs_grad = needs(weight.id) || needs(bias.id) || needs(x.id);
    return push(std::move(n), "channel_fc");
}

Var Tape::channel_contract(Var z, Var x) {
    const Tensor& zv = value(z);
    const Tensor& xv = value(x);
    if (zv.rank() != 1 || xv.rank() != 3 || zv.dim(0) != xv.dim(0)) {
        throw DimensionError("channel_contract: expected z (r), x (r,N,P); got " + zv.shape_string() +
                             ", " + xv.shape_string());
    }
    const std::size_t channels = xv.dim(0);
    const std::size_t nodes = xv.dim(1);
    const std::size_t features = xv.dim(2);

    Node n{Op::kChannelContract, Tensor({nodes, features})};
    for (std::size_t i = 0; i < nodes; ++i) {
        for (std::size_t p = 0; p < features; ++p) {
            double acc = 0.0;
            for (std::size_t r = 0; r < channels; ++r) {
                acc += zv[r] * xv.at3(r, i, p);
            }
            n.value.at2(i, p) = acc;
        }
    }
    n.a = z.id;
    n.b = x.id;
    n.needs_grad = needs(z.id) || needs(x.id);
    return push(std::move(n), "channel_contract");
}

Var Tape::channel_outer(Var z, Var m) {
    const Tensor& zv = value(z);
    const Tensor& mv = value(m);
    if (zv.rank() != 1 || mv.rank() != 2) {
        throw DimensionError("channel_outer: expected z (r), m (N,P); got " + zv.shape_string() + ", " +
                             mv.shape_string());
    }
    const std::size_t channels = zv.dim(0);
    const std::size_t nodes = mv.dim(0);
    const std::size_t features = mv.dim(1);

    Node n{Op::kChannelOuter, Tensor({channels, nodes, features})};
    for (std::size_t r = 0; r < channels; ++r) {
        for (std::size_t i = 0; i < nodes; ++i) {
            for (std::size_t p = 0; p < features; ++p) {
                n.value.at3(r, i, p) = zv[r] * mv.at2(i, p);
            }
        }
    }
    n.a = z.id;
    n.b = m.id;
    n.needs_grad = needs(z.id) || needs(m.id);
    return push(std::move(n), "channel_outer");
}

Var Tape::pair_contract(Var w, Var u) {
    const Tensor& wv = value(w);
    const Tensor& uv = value(u);
    if (wv.rank() != 4 || uv.rank() != 2 || wv.dim(0) != uv.dim(0) || wv.dim(1) != uv.dim(1)) {
        throw DimensionError("pair_contract: expected w (Nj,Pj,Pi,Ni), u (Nj,Pj); got " +
                             wv.shape_string() + ", " + uv.shape_string());
    }
    const std::size_t nj = wv.dim(0);
    const std::size_t pj = wv.dim(1);
    const std::size_t pi = wv.dim(2);
    const std::size_t ni = wv.dim(3);

    Node n{Op::kPairContract, Tensor({ni, pi})};
    for (std::size_t a = 0; a < nj; ++a) {
        for (std::size_t b = 0; b < pj; ++b) {
            const double uval = uv.at2(a, b);
            const double* wrow = wv.data() + (a * pj + b) * pi * ni;
            for (std::size_t c = 0; c < pi; ++c) {
                for (std::size_t d = 0; d < ni; ++d) {
                    n.value.at2(d, c) += wrow[c * ni + d] * uval;
                }
            }
        }
    }
    n.a = w.id;
    n.b = u.id;
    n.needs_grad = needs(w.id) || needs(u.id);
    return push(std::move(n), "pair_contract");
}

Var Tape::poly_filter(Var theta, const std::vector<Tensor>& basis, Var x) {
    const Tensor& tv = value(theta);
    const Tensor& xv = value(x);
    if (tv.rank() != 1 || tv.dim(0) != basis.size()) {
        throw DimensionError("poly_filter: theta " + tv.shape_string() + " must hold one coefficient per basis matrix (" +
                             std::to_string(basis.size()) + ")");
    }
    if (basis.empty()) {
        throw DimensionError("poly_filter: empty basis");
    }

    Node n{Op::kPolyFilter, Tensor(xv.shape())};
    n.cached.reserve(basis.size());
    for (std::size_t k = 0; k < basis.size(); ++k) {
        Tensor filtered = kernels::node_matrix_apply(basis[k], xv);
        for (std::size_t i = 0; i < filtered.size(); ++i) {
            n.value[i] += tv[k] * filtered[i];
        }
        n.cached.push_back(std::move(filtered));
    }
    n.a = theta.id;
    n.b = x.id;
    n.basis = &basis;
    n.needs_grad = needs(theta.id) || needs(x.id);
    return push(std::move(n), "poly_filter");
}

GradMap Tape::backward(Var loss) const {
    const Node& top = at(loss);
    if (top.value.size() != 1) {
        throw Error("backward: loss must be scalar-valued, got " + top.value.shape_string());
    }

    std::vector<Tensor> grads(nodes_.size());
    grads[static_cast<std::size_t>(loss.id)] = Tensor({1}, {1.0});

    for (int id = loss.id; id >= 0; --id) {
        const Node& node = nodes_[static_cast<std::size_t>(id)];
        const Tensor& g = grads[static_cast<std::size_t>(id)];
        if (!node.needs_grad || g.empty()) {
            continue;
        }
        switch (node.op) {
            case Op::kLeaf:
            case Op::kConst:
                break;
            case Op::kAdd: {
                if (needs(node.a)) accumulate(grads, node.a, g);
                if (needs(node.b)) accumulate(grads, node.b, g);
                break;
            }
            case Op::kSub: {
                if (needs(node.a)) accumulate(grads, node.a, g);
                if (needs(node.b)) {
                    Tensor neg;
                    kernels::scale(g, -1.0, neg);
                    accumulate(grads, node.b, neg);
                }
                break;
            }
            case Op::kMul: {
                if (needs(node.a)) {
                    Tensor d;
                    kernels::mul(nodes_[static_cast<std::size_t>(node.b)].value, g, d);
                    accumulate(grads, node.a, d);
                }
                if (needs(node.b)) {
                    Tensor d;
                    kernels::mul(nodes_[static_cast<std::size_t>(node.a)].value, g, d);
                    accumulate(grads, node.b, d);
                }
                break;
            }
            case Op::kSigmoid: {
                if (needs(node.a)) {
                    Tensor d(node.value.shape());
                    for (std::size_t i = 0; i < d.size(); ++i) {
                        const double s = node.value[i];
                        d[i] = g[i] * s * (1.0 - s);
                    }
                    accumulate(grads, node.a, d);
                }
                break;
            }
            case Op::kTanh: {
                if (needs(node.a)) {
                    Tensor d(node.value.shape());
                    for (std::size_t i = 0; i < d.size(); ++i) {
                        const double t = node.value[i];
                        d[i] = g[i] * (1.0 - t * t);
                    }
                    accumulate(grads, node.a, d);
                }
                break;
            }
            case Op::kAbs: {
                if (needs(node.a)) {
                    const Tensor& x = nodes_[static_cast<std::size_t>(node.a)].value;
                    Tensor d(x.shape());
                    for (std::size_t i = 0; i < d.size(); ++i) {
                        // subgradient 0 at the kink
                        d[i] = x[i] > 0.0 ? g[i] : (x[i] < 0.0 ? -g[i] : 0.0);
                    }
                    accumulate(grads, node.a, d);
                }
                break;
            }
            case Op::kOneMinus: {
                if (needs(node.a)) {
                    Tensor d;
                    kernels::scale(g, -1.0, d);
                    accumulate(grads, node.a, d);
                }
                break;
            }
            case Op::kScale: {
                if (needs(node.a)) {
                    Tensor d;
                    kernels::scale(g, node.factor, d);
                    accumulate(grads, node.a, d);
                }
                break;
            }
            case Op::kSum: {
                if (needs(node.a)) {
                    const Tensor& x = nodes_[static_cast<std::size_t>(node.a)].value;
                    accumulate(grads, node.a, Tensor::full(x.shape(), g[0]));
                }
                break;
            }
            case Op::kReshape: {
                if (needs(node.a)) {
                    const Tensor& x = nodes_[static_cast<std::size_t>(node.a)].value;
                    accumulate(grads, node.a,
                               Tensor(x.shape(), std::vector<double>(g.data(), g.data() + g.size())));
                }
                break;
            }
            case Op::kMatmul: {
                const Tensor& a = nodes_[static_cast<std::size_t>(node.a)].value;
                const Tensor& b = nodes_[static_cast<std::size_t>(node.b)].value;
                if (needs(node.a)) {
                    accumulate(grads, node.a, kernels::matmul(g, b, false, true));
                }
                if (needs(node.b)) {
                    accumulate(grads, node.b, kernels::matmul(a, g, true, false));
                }
                break;
            }
            case Op::kConcat: {
                std::size_t outer = 1;
                for (std::size_t d = 0; d < node.axis; ++d) {
                    outer *= node.value.dim(d);
                }
                std::size_t tail = 1;
                for (std::size_t d = node.axis + 1; d < node.value.rank(); ++d) {
                    tail *= node.value.dim(d);
                }
                const std::size_t out_block = node.value.dim(node.axis) * tail;
                std::size_t offset = 0;
                for (int part_id : node.parts) {
                    const Tensor& part = nodes_[static_cast<std::size_t>(part_id)].value;
                    const std::size_t block = part.dim(node.axis) * tail;
                    if (needs(part_id)) {
                        Tensor d(part.shape());
                        for (std::size_t o = 0; o < outer; ++o) {
                            const double* src = g.data() + o * out_block + offset;
                            double* dst = d.data() + o * block;
                            for (std::size_t i = 0; i < block; ++i) {
                                dst[i] = src[i];
                            }
                        }
                        accumulate(grads, part_id, d);
                    }
                    offset += block;
                }
                break;
            }
            case Op::kChannelFc: {
                const Tensor& w = nodes_[static_cast<std::size_t>(node.a)].value;
                const Tensor& x = nodes_[static_cast<std::size_t>(node.c)].value;
                const std::size_t out_ch = w.dim(0);
                const std::size_t in_ch = w.dim(1);
                const std::size_t nodes_n = x.dim(1);
                const std::size_t features = x.dim(2);
                if (needs(node.a)) {
                    Tensor dw(w.shape());
                    for (std::size_t o = 0; o < out_ch; ++o) {
                        for (std::size_t ci = 0; ci < in_ch; ++ci) {
                            double acc = 0.0;
                            for (std::size_t i = 0; i < nodes_n; ++i) {
                                for (std::size_t p = 0; p < features; ++p) {
                                    acc += g.at3(o, i, p) * x.at3(ci, i, p);
                                }
                            }
                            dw.at2(o, ci) = acc;
                        }
                    }
                    accumulate(grads, node.a, dw);
                }
                if (needs(node.b)) {
                    Tensor db({out_ch});
                    for (std::size_t o = 0; o < out_ch; ++o) {
                        double acc = 0.0;
                        for (std::size_t i = 0; i < nodes_n; ++i) {
                            for (std::size_t p = 0; p < features; ++p) {
                                acc += g.at3(o, i, p);
                            }
                        }
                        db[o] = acc;
                    }
                    accumulate(grads, node.b, db);
                }
                if (needs(node.c)) {
                    Tensor dx(x.shape());
                    for (std::size_t ci = 0; ci < in_ch; ++ci) {
                        for (std::size_t i = 0; i < nodes_n; ++i) {
                            for (std::size_t p = 0; p < features; ++p) {
                                double acc = 0.0;
                                for (std::size_t o = 0; o < out_ch; ++o) {
                                    acc += w.at2(o, ci) * g.at3(o, i, p);
                                }
                                dx.at3(ci, i, p) = acc;
                            }
                        }
                    }
                    accumulate(grads, node.c, dx);
                }
                break;
            }
            case Op::kChannelContract: {
                const Tensor& z = nodes_[static_cast<std::size_t>(node.a)].value;
                const Tensor& x = nodes_[static_cast<std::size_t>(node.b)].value;
                const std::size_t channels = x.dim(0);
                const std::size_t nodes_n = x.dim(1);
                const std::size_t features = x.dim(2);
                if (needs(node.a)) {
                    Tensor dz(z.shape());
                    for (std::size_t r = 0; r < channels; ++r) {
                        double acc = 0.0;
                        for (std::size_t i = 0; i < nodes_n; ++i) {
                            for (std::size_t p = 0; p < features; ++p) {
                                acc += x.at3(r, i, p) * g.at2(i, p);
                            }
                        }
                        dz[r] = acc;
                    }
                    accumulate(grads, node.a, dz);
                }
                if (needs(node.b)) {
                    Tensor dx(x.shape());
                    for (std::size_t r = 0; r < channels; ++r) {
                        for (std::size_t i = 0; i < nodes_n; ++i) {
                            for (std::size_t p = 0; p < features; ++p) {
                                dx.at3(r, i, p) = z[r] * g.at2(i, p);
                            }
                        }
                    }
                    accumulate(grads, node.b, dx);
                }
                break;
            }
            case Op::kChannelOuter: {
                const Tensor& z = nodes_[static_cast<std::size_t>(node.a)].value;
                const Tensor& m = nodes_[static_cast<std::size_t>(node.b)].value;
                const std::size_t channels = z.dim(0);
                const std::size_t nodes_n = m.dim(0);
                const std::size_t features = m.dim(1);
                if (needs(node.a)) {
                    Tensor dz(z.shape());
                    for (std::size_t r = 0; r < channels; ++r) {
                        double acc = 0.0;
                        for (std::size_t i = 0; i < nodes_n; ++i) {
                            for (std::size_t p = 0; p < features; ++p) {
                                acc += m.at2(i, p) * g.at3(r, i, p);
                            }
                        }
                        dz[r] = acc;
                    }
                    accumulate(grads, node.a, dz);
                }
                if (needs(node.b)) {
                    Tensor dm(m.shape());
                    for (std::size_t i = 0; i < nodes_n; ++i) {
                        for (std::size_t p = 0; p < features; ++p) {
                            double acc = 0.0;
                            for (std::size_t r = 0; r < channels; ++r) {
                                acc += z[r] * g.at3(r, i, p);
                            }
                            dm.at2(i, p) = acc;
                        }
                    }
                    accumulate(grads, node.b, dm);
                }
                break;
            }
            case Op::kPairContract: {
                const Tensor& w = nodes_[static_cast<std::size_t>(node.a)].value;
                const Tensor& u = nodes_[static_cast<std::size_t>(node.b)].value;
                const std::size_t nj = w.dim(0);
                const std::size_t pj = w.dim(1);
                const std::size_t pi = w.dim(2);
                const std::size_t ni = w.dim(3);
                if (needs(node.a)) {
                    Tensor dw(w.shape());
                    for (std::size_t a2 = 0; a2 < nj; ++a2) {
                        for (std::size_t b2 = 0; b2 < pj; ++b2) {
                            const double uval = u.at2(a2, b2);
                            double* row = dw.data() + (a2 * pj + b2) * pi * ni;
                            for (std::size_t c2 = 0; c2 < pi; ++c2) {
                                for (std::size_t d2 = 0; d2 < ni; ++d2) {
                                    row[c2 * ni + d2] = uval * g.at2(d2, c2);
                                }
                            }
                        }
                    }
                    accumulate(grads, node.a, dw);
                }
                if (needs(node.b)) {
                    Tensor du(u.shape());
                    for (std::size_t a2 = 0; a2 < nj; ++a2) {
                        for (std::size_t b2 = 0; b2 < pj; ++b2) {
                            const double* row = w.data() + (a2 * pj + b2) * pi * ni;
                            double acc = 0.0;
                            for (std::size_t c2 = 0; c2 < pi; ++c2) {
                                for (std::size_t d2 = 0; d2 < ni; ++d2) {
                                    acc += row[c2 * ni + d2] * g.at2(d2, c2);
                                }
                            }
                            du.at2(a2, b2) = acc;
                        }
                    }
                    accumulate(grads, node.b, du);
                }
                break;
            }
            case Op::kPolyFilter: {
                const Tensor& theta = nodes_[static_cast<std::size_t>(node.a)].value;
                if (needs(node.a)) {
                    Tensor dtheta(theta.shape());
                    for (std::size_t k = 0; k < node.cached.size(); ++k) {
                        double acc = 0.0;
                        const Tensor& filtered = node.cached[k];
                        for (std::size_t i = 0; i < filtered.size(); ++i) {
                            acc += filtered[i] * g[i];
                        }
                        dtheta[k] = acc;
                    }
                    accumulate(grads, node.a, dtheta);
                }
                if (needs(node.b)) {
                    const Tensor& x = nodes_[static_cast<std::size_t>(node.b)].value;
                    Tensor dx(x.shape());
                    for (std::size_t k = 0; k < node.basis->size(); ++k) {
                        Tensor back = kernels::node_matrix_apply((*node.basis)[k], g, /*transpose_m=*/true);
                        for (std::size_t i = 0; i < dx.size(); ++i) {
                            dx[i] += theta[k] * back[i];
                        }
                    }
                    accumulate(grads, node.b, dx);
                }
                break;
            }
        }
    }

    GradMap out;
    for (int id : trainable_) {
        Tensor& slot = grads[static_cast<std::size_t>(id)];
        if (slot.empty()) {
            out[id] = Tensor(nodes_[static_cast<std::size_t>(id)].value.shape());
        } else {
            out[id] = std::move(slot);
        }
    }
    return out;
}

}  // namespace cignn
