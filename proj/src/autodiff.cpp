#include "difmaml/autodiff.hpp"

#include <cassert>
#include <cstring>

namespace difmaml::autodiff {

NodeId Tape::push(Node n) {
    n.val = total_size_;
    total_size_ += n.size;
    nodes_.push_back(n);
    if (static_cast<int>(val_.size()) < total_size_) {
        val_.resize(static_cast<std::size_t>(total_size_));
        tan_.resize(static_cast<std::size_t>(total_size_));
        adj_.resize(static_cast<std::size_t>(total_size_));
        adj_tan_.resize(static_cast<std::size_t>(total_size_));
    }
    return static_cast<NodeId>(nodes_.size()) - 1;
}

NodeId Tape::leaf(int size) {
    assert(leaf_ < 0 && "tape holds a single parameter leaf");
    Node n{};
    n.op = Op::kLeaf;
    n.size = size;
    leaf_ = push(n);
    return leaf_;
}

NodeId Tape::constant(std::span<const double> data) {
    Node n{};
    n.op = Op::kConstant;
    n.size = static_cast<int>(data.size());
    n.payload = static_cast<int>(payload_.size());
    payload_.insert(payload_.end(), data.begin(), data.end());
    NodeId id = push(n);
    // Constant values never change; write them once.
    if (!data.empty())
        std::memcpy(val_.data() + nodes_[id].val, data.data(), data.size() * sizeof(double));
    return id;
}

NodeId Tape::affine_params(NodeId x, int w_offset, int b_offset, int out_dim, int in_dim) {
    assert(nodes_[x].size == in_dim);
    Node n{};
    n.op = Op::kAffineParams;
    n.size = out_dim;
    n.a = x;
    n.w_offset = w_offset;
    n.b_offset = b_offset;
    n.in_dim = in_dim;
    return push(n);
}

NodeId Tape::sub(NodeId a, NodeId b) {
    assert(nodes_[a].size == nodes_[b].size);
    Node n{};
    n.op = Op::kSub;
    n.size = nodes_[a].size;
    n.a = a;
    n.b = b;
    return push(n);
}

NodeId Tape::relu(NodeId x) {
    Node n{};
    n.op = Op::kRelu;
    n.size = nodes_[x].size;
    n.a = x;
    return push(n);
}

NodeId Tape::sum_sq(NodeId x) {
    Node n{};
    n.op = Op::kSumSq;
    n.size = 1;
    n.a = x;
    return push(n);
}

NodeId Tape::quad_form(NodeId d, const SymMatrix& h) {
    assert(nodes_[d].size == h.n);
    Node n{};
    n.op = Op::kQuadForm;
    n.size = 1;
    n.a = d;
    n.in_dim = h.n;
    n.payload = static_cast<int>(payload_.size());
    payload_.insert(payload_.end(), h.a.begin(), h.a.end());
    return push(n);
}

NodeId Tape::mean_scalars(std::span<const NodeId> terms) {
    Node n{};
    n.op = Op::kMeanScalars;
    n.size = 1;
    n.args_begin = static_cast<int>(args_.size());
    n.args_count = static_cast<int>(terms.size());
    for (NodeId t : terms) {
        assert(nodes_[t].size == 1);
        args_.push_back(t);
    }
    return push(n);
}

NodeId Tape::lin_comb(NodeId a, NodeId b, double ca, double cb) {
    assert(nodes_[a].size == 1 && nodes_[b].size == 1);
    Node n{};
    n.op = Op::kLinComb;
    n.size = 1;
    n.a = a;
    n.b = b;
    n.ca = ca;
    n.cb = cb;
    return push(n);
}

void Tape::set_output(NodeId id) {
    assert(nodes_[id].size == 1 && "output node must be scalar");
    output_ = id;
}

void Tape::clear() {
    nodes_.clear();
    args_.clear();
    payload_.clear();
    total_size_ = 0;
    leaf_ = -1;
    output_ = -1;
}

void Tape::run_forward(bool dual) {
    for (const Node& n : nodes_) {
        double* v = val_.data() + n.val;
        double* t = tan_.data() + n.val;
        switch (n.op) {
            case Op::kLeaf:
                break;  // filled by caller
            case Op::kConstant:
                // values written at build time; tangents are zero
                if (dual) std::memset(t, 0, static_cast<std::size_t>(n.size) * sizeof(double));
                break;
            case Op::kAffineParams: {
                const double* x = val_.data() + nodes_[n.a].val;
                const double* w = val_.data() + nodes_[leaf_].val + n.w_offset;
                const double* b = val_.data() + nodes_[leaf_].val + n.b_offset;
                for (int i = 0; i < n.size; ++i) {
                    const double* wrow = w + static_cast<std::size_t>(i) * n.in_dim;
                    double s = b[i];
                    for (int j = 0; j < n.in_dim; ++j) s += wrow[j] * x[j];
                    v[i] = s;
                }
                if (dual) {
                    const double* xt = tan_.data() + nodes_[n.a].val;
                    const double* wt = tan_.data() + nodes_[leaf_].val + n.w_offset;
                    const double* bt = tan_.data() + nodes_[leaf_].val + n.b_offset;
                    for (int i = 0; i < n.size; ++i) {
                        const double* wrow = w + static_cast<std::size_t>(i) * n.in_dim;
                        const double* wtrow = wt + static_cast<std::size_t>(i) * n.in_dim;
                        double s = bt[i];
                        for (int j = 0; j < n.in_dim; ++j) s += wtrow[j] * x[j] + wrow[j] * xt[j];
                        t[i] = s;
                    }
                }
                break;
            }
            case Op::kSub: {
                const double* a = val_.data() + nodes_[n.a].val;
                const double* b = val_.data() + nodes_[n.b].val;
                for (int i = 0; i < n.size; ++i) v[i] = a[i] - b[i];
                if (dual) {
                    const double* at = tan_.data() + nodes_[n.a].val;
                    const double* bt = tan_.data() + nodes_[n.b].val;
                    for (int i = 0; i < n.size; ++i) t[i] = at[i] - bt[i];
                }
                break;
            }
            case Op::kRelu: {
                // subgradient at 0 is 0, second derivative 0 everywhere
                const double* x = val_.data() + nodes_[n.a].val;
                for (int i = 0; i < n.size; ++i) v[i] = x[i] > 0.0 ? x[i] : 0.0;
                if (dual) {
                    const double* xt = tan_.data() + nodes_[n.a].val;
                    for (int i = 0; i < n.size; ++i) t[i] = x[i] > 0.0 ? xt[i] : 0.0;
                }
                break;
            }
            case Op::kSumSq: {
                const double* x = val_.data() + nodes_[n.a].val;
                const int m = nodes_[n.a].size;
                double s = 0.0;
                for (int i = 0; i < m; ++i) s += x[i] * x[i];
                v[0] = s;
                if (dual) {
                    const double* xt = tan_.data() + nodes_[n.a].val;
                    double st = 0.0;
                    for (int i = 0; i < m; ++i) st += 2.0 * x[i] * xt[i];
                    t[0] = st;
                }
                break;
            }
            case Op::kQuadForm: {
                const double* d = val_.data() + nodes_[n.a].val;
                const double* h = payload_.data() + n.payload;
                const int m = n.in_dim;
                double s = 0.0;
                for (int i = 0; i < m; ++i) {
                    const double* hrow = h + static_cast<std::size_t>(i) * m;
                    double r = 0.0;
                    for (int j = 0; j < m; ++j) r += hrow[j] * d[j];
                    s += d[i] * r;
                }
                v[0] = 0.5 * s;
                if (dual) {
                    // d/de 0.5 (d+e dt)'H(d+e dt) = dt'Hd for symmetric H
                    const double* dt = tan_.data() + nodes_[n.a].val;
                    double st = 0.0;
                    for (int i = 0; i < m; ++i) {
                        const double* hrow = h + static_cast<std::size_t>(i) * m;
                        double r = 0.0;
                        for (int j = 0; j < m; ++j) r += hrow[j] * d[j];
                        st += dt[i] * r;
                    }
                    t[0] = st;
                }
                break;
            }
            case Op::kMeanScalars: {
                const double inv = 1.0 / n.args_count;
                double s = 0.0;
                for (int k = 0; k < n.args_count; ++k)
                    s += val_[static_cast<std::size_t>(nodes_[args_[n.args_begin + k]].val)];
                v[0] = s * inv;
                if (dual) {
                    double st = 0.0;
                    for (int k = 0; k < n.args_count; ++k)
                        st += tan_[static_cast<std::size_t>(nodes_[args_[n.args_begin + k]].val)];
                    t[0] = st * inv;
                }
                break;
            }
            case Op::kLinComb: {
                v[0] = n.ca * val_[static_cast<std::size_t>(nodes_[n.a].val)] +
                       n.cb * val_[static_cast<std::size_t>(nodes_[n.b].val)];
                if (dual)
                    t[0] = n.ca * tan_[static_cast<std::size_t>(nodes_[n.a].val)] +
                           n.cb * tan_[static_cast<std::size_t>(nodes_[n.b].val)];
                break;
            }
        }
    }
}

void Tape::run_backward(bool dual) {
    assert(output_ >= 0);
    std::memset(adj_.data(), 0, static_cast<std::size_t>(total_size_) * sizeof(double));
    if (dual) std::memset(adj_tan_.data(), 0, static_cast<std::size_t>(total_size_) * sizeof(double));
    adj_[static_cast<std::size_t>(nodes_[output_].val)] = 1.0;

    for (int ni = static_cast<int>(nodes_.size()) - 1; ni >= 0; --ni) {
        const Node& n = nodes_[ni];
        const double* g = adj_.data() + n.val;
        const double* gt = adj_tan_.data() + n.val;
        switch (n.op) {
            case Op::kLeaf:
            case Op::kConstant:
                break;
            case Op::kAffineParams: {
                const double* x = val_.data() + nodes_[n.a].val;
                const double* w = val_.data() + nodes_[leaf_].val + n.w_offset;
                double* xa = adj_.data() + nodes_[n.a].val;
                double* wa = adj_.data() + nodes_[leaf_].val + n.w_offset;
                double* ba = adj_.data() + nodes_[leaf_].val + n.b_offset;
                for (int i = 0; i < n.size; ++i) {
                    const double gi = g[i];
                    const double* wrow = w + static_cast<std::size_t>(i) * n.in_dim;
                    double* warow = wa + static_cast<std::size_t>(i) * n.in_dim;
                    for (int j = 0; j < n.in_dim; ++j) {
                        xa[j] += wrow[j] * gi;
                        warow[j] += x[j] * gi;
                    }
                    ba[i] += gi;
                }
                if (dual) {
                    const double* xt = tan_.data() + nodes_[n.a].val;
                    const double* wt = tan_.data() + nodes_[leaf_].val + n.w_offset;
                    double* xat = adj_tan_.data() + nodes_[n.a].val;
                    double* wat = adj_tan_.data() + nodes_[leaf_].val + n.w_offset;
                    double* bat = adj_tan_.data() + nodes_[leaf_].val + n.b_offset;
                    for (int i = 0; i < n.size; ++i) {
                        const double gi = g[i];
                        const double gti = gt[i];
                        const double* wrow = w + static_cast<std::size_t>(i) * n.in_dim;
                        const double* wtrow = wt + static_cast<std::size_t>(i) * n.in_dim;
                        double* watrow = wat + static_cast<std::size_t>(i) * n.in_dim;
                        for (int j = 0; j < n.in_dim; ++j) {
                            xat[j] += wtrow[j] * gi + wrow[j] * gti;
                            watrow[j] += xt[j] * gi + x[j] * gti;
                        }
                        bat[i] += gti;
                    }
                }
                break;
            }
            case Op::kSub: {
                double* aa = adj_.data() + nodes_[n.a].val;
                double* bb = adj_.data() + nodes_[n.b].val;
                for (int i = 0; i < n.size; ++i) {
                    aa[i] += g[i];
                    bb[i] -= g[i];
                }
                if (dual) {
                    double* aat = adj_tan_.data() + nodes_[n.a].val;
                    double* bbt = adj_tan_.data() + nodes_[n.b].val;
                    for (int i = 0; i < n.size; ++i) {
                        aat[i] += gt[i];
                        bbt[i] -= gt[i];
                    }
                }
                break;
            }
            case Op::kRelu: {
                const double* x = val_.data() + nodes_[n.a].val;
                double* xa = adj_.data() + nodes_[n.a].val;
                for (int i = 0; i < n.size; ++i)
                    if (x[i] > 0.0) xa[i] += g[i];
                if (dual) {
                    double* xat = adj_tan_.data() + nodes_[n.a].val;
                    for (int i = 0; i < n.size; ++i)
                        if (x[i] > 0.0) xat[i] += gt[i];
                }
                break;
            }
            case Op::kSumSq: {
                const double* x = val_.data() + nodes_[n.a].val;
                double* xa = adj_.data() + nodes_[n.a].val;
                const int m = nodes_[n.a].size;
                const double g0 = g[0];
                for (int i = 0; i < m; ++i) xa[i] += 2.0 * x[i] * g0;
                if (dual) {
                    const double* xt = tan_.data() + nodes_[n.a].val;
                    double* xat = adj_tan_.data() + nodes_[n.a].val;
                    const double gt0 = gt[0];
                    for (int i = 0; i < m; ++i) xat[i] += 2.0 * (xt[i] * g0 + x[i] * gt0);
                }
                break;
            }
            case Op::kQuadForm: {
                const double* d = val_.data() + nodes_[n.a].val;
                const double* h = payload_.data() + n.payload;
                double* da = adj_.data() + nodes_[n.a].val;
                const int m = n.in_dim;
                const double g0 = g[0];
                for (int i = 0; i < m; ++i) {
                    const double* hrow = h + static_cast<std::size_t>(i) * m;
                    double r = 0.0;
                    for (int j = 0; j < m; ++j) r += hrow[j] * d[j];
                    da[i] += r * g0;
                }
                if (dual) {
                    const double* dt = tan_.data() + nodes_[n.a].val;
                    double* dat = adj_tan_.data() + nodes_[n.a].val;
                    const double gt0 = gt[0];
                    for (int i = 0; i < m; ++i) {
                        const double* hrow = h + static_cast<std::size_t>(i) * m;
                        double r = 0.0, rt = 0.0;
                        for (int j = 0; j < m; ++j) {
                            r += hrow[j] * d[j];
                            rt += hrow[j] * dt[j];
                        }
                        dat[i] += rt * g0 + r * gt0;
                    }
                }
                break;
            }
            case Op::kMeanScalars: {
                const double s = g[0] / n.args_count;
                for (int k = 0; k < n.args_count; ++k)
                    adj_[static_cast<std::size_t>(nodes_[args_[n.args_begin + k]].val)] += s;
                if (dual) {
                    const double st = gt[0] / n.args_count;
                    for (int k = 0; k < n.args_count; ++k)
                        adj_tan_[static_cast<std::size_t>(nodes_[args_[n.args_begin + k]].val)] += st;
                }
                break;
            }
            case Op::kLinComb: {
                adj_[static_cast<std::size_t>(nodes_[n.a].val)] += n.ca * g[0];
                adj_[static_cast<std::size_t>(nodes_[n.b].val)] += n.cb * g[0];
                if (dual) {
                    adj_tan_[static_cast<std::size_t>(nodes_[n.a].val)] += n.ca * gt[0];
                    adj_tan_[static_cast<std::size_t>(nodes_[n.b].val)] += n.cb * gt[0];
                }
                break;
            }
        }
    }
}

void Tape::forward(std::span<const double> leaf_values) {
    assert(leaf_ >= 0 && static_cast<int>(leaf_values.size()) == nodes_[leaf_].size);
    std::memcpy(val_.data() + nodes_[leaf_].val, leaf_values.data(),
                leaf_values.size() * sizeof(double));
    run_forward(false);
}

void Tape::forward_dual(std::span<const double> leaf_values,
                        std::span<const double> leaf_tangents) {
    assert(leaf_ >= 0 && leaf_values.size() == leaf_tangents.size());
    std::memcpy(val_.data() + nodes_[leaf_].val, leaf_values.data(),
                leaf_values.size() * sizeof(double));
    std::memcpy(tan_.data() + nodes_[leaf_].val, leaf_tangents.data(),
                leaf_tangents.size() * sizeof(double));
    run_forward(true);
}

void Tape::backward() { run_backward(false); }

void Tape::backward_dual() { run_backward(true); }

double Tape::output_value() const {
    return val_[static_cast<std::size_t>(nodes_[output_].val)];
}

bool Tape::values_finite() const {
    return all_finite({val_.data(), static_cast<std::size_t>(total_size_)});
}

std::span<const double> Tape::leaf_adjoint() const {
    const Node& n = nodes_[static_cast<std::size_t>(leaf_)];
    return {adj_.data() + n.val, static_cast<std::size_t>(n.size)};
}

std::span<const double> Tape::leaf_adjoint_tangent() const {
    const Node& n = nodes_[static_cast<std::size_t>(leaf_)];
    return {adj_tan_.data() + n.val, static_cast<std::size_t>(n.size)};
}

namespace {

Tape& scratch_tape() {
    thread_local Tape tape;
    tape.clear();
    return tape;
}

void build_and_check(Tape& tape, const LossFunction& f, const ParamVector& w,
                     const DataBatch& batch, NodeId& w_id) {
    if (static_cast<int>(w.size()) != f.param_dim())
        throw DimensionMismatch("parameter vector does not match loss dimension");
    if (batch.count <= 0) throw DimensionMismatch("empty batch");
    w_id = tape.leaf(static_cast<int>(w.size()));
    NodeId out = f.build(tape, w_id, batch);
    tape.set_output(out);
}

}  // namespace

ValueGrad value_and_gradient(const LossFunction& f, const ParamVector& w,
                             const DataBatch& batch) {
    Tape& tape = scratch_tape();
    NodeId w_id = -1;
    build_and_check(tape, f, w, batch, w_id);
    tape.forward(w);
    if (!tape.values_finite()) throw NonFiniteValue("non-finite value in loss evaluation");
    tape.backward();
    auto adj = tape.leaf_adjoint();
    return {tape.output_value(), ParamVector(adj.begin(), adj.end())};
}

ParamVector gradient(const LossFunction& f, const ParamVector& w, const DataBatch& batch) {
    return value_and_gradient(f, w, batch).grad;
}

ParamVector hvp(const LossFunction& f, const ParamVector& w, const ParamVector& v,
                const DataBatch& batch) {
    if (v.size() != w.size()) throw DimensionMismatch("hvp direction dimension mismatch");
    Tape& tape = scratch_tape();
    NodeId w_id = -1;
    build_and_check(tape, f, w, batch, w_id);
    tape.forward_dual(w, v);
    if (!tape.values_finite()) throw NonFiniteValue("non-finite value in loss evaluation");
    tape.backward_dual();
    auto ht = tape.leaf_adjoint_tangent();
    return ParamVector(ht.begin(), ht.end());
}

}  // namespace difmaml::autodiff
