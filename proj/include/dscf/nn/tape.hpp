#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "dscf/errors.hpp"
#include "dscf/nn/ops.hpp"
#include "dscf/nn/parameter.hpp"
#include "dscf/rng.hpp"

namespace dscf::nn {

/// Handle to a vector recorded on a Tape.
struct Var {
    static constexpr std::uint32_t npos = UINT32_MAX;
    std::uint32_t id = npos;
    bool valid() const noexcept { return id != npos; }
};

/// Reverse-mode differentiation over dense vectors.
///
/// Every operation appends a node holding its value; backward() walks the
/// nodes in reverse and accumulates gradients. Gradients for parameters
/// are added into Parameter::grad, so several backward passes (one per
/// sample) sum into the same buffers until the optimizer clears them.
/// Values live in one arena that is reused across clear() calls.
template <std::floating_point Real>
class Tape {
public:
    using Param = Parameter<Real>;

    void clear() {
        nodes_.clear();
        vals_.clear();
        grads_.clear();
        lists_.clear();
        masks_.clear();
        has_grads_ = false;
    }

    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t dim(Var v) const { return node(v).n; }

    std::span<const Real> value(Var v) const { return {vals_.data() + node(v).off, node(v).n}; }
    Real scalar(Var v) const {
        if (node(v).n != 1) throw DimensionError("scalar(): node has size " + std::to_string(node(v).n));
        return vals_[node(v).off];
    }
    /// Gradient of the last backward() loss with respect to `v`.
    std::span<const Real> grad(Var v) const {
        if (!has_grads_) throw StateError("grad() requested before backward()");
        return {grads_.data() + node(v).off, node(v).n};
    }

    // ---- leaves ---------------------------------------------------------

    Var input(std::span<const Real> x) {
        auto v = push(Op::input, x.size());
        std::copy(x.begin(), x.end(), out(v));
        return v;
    }
    Var input(std::initializer_list<Real> x) { return input(std::span<const Real>(x.begin(), x.size())); }

    Var zeros(std::size_t n) {
        auto v = push(Op::input, n);
        std::fill_n(out(v), n, Real(0));
        return v;
    }

    /// Whole parameter as a flat vector.
    Var param(Param& p) {
        auto v = push(Op::param, p.size());
        nodes_[v.id].p = &p;
        std::copy(p.value.begin(), p.value.end(), out(v));
        return v;
    }

    /// One row of a table (embedding lookup).
    Var row(Param& p, std::size_t r) {
        if (r >= p.rows)
            throw DomainError("row " + std::to_string(r) + " outside table '" + p.name + "' with " +
                              std::to_string(p.rows) + " rows");
        auto v = push(Op::row, p.cols);
        nodes_[v.id].p = &p;
        nodes_[v.id].aux = r;
        const auto src = p.row(r);
        std::copy(src.begin(), src.end(), out(v));
        return v;
    }

    // ---- linear algebra -------------------------------------------------

    /// W x for a rows x cols parameter W.
    Var matvec(Param& W, Var x) {
        if (W.cols != dim(x))
            throw DimensionError("matvec: " + W.name + W.shape_string() + " vs [" + std::to_string(dim(x)) + "]");
        auto v = push(Op::matvec, W.rows, x);
        nodes_[v.id].p = &W;
        gemv(W, in(x), out(v), nullptr);
        return v;
    }

    /// W x + b.
    Var affine(Param& W, Param& b, Var x) {
        if (W.cols != dim(x))
            throw DimensionError("affine: " + W.name + W.shape_string() + " vs [" + std::to_string(dim(x)) + "]");
        if (b.size() != W.rows)
            throw DimensionError("affine: bias " + b.name + b.shape_string() + " vs " + W.name + W.shape_string());
        auto v = push(Op::affine, W.rows, x);
        nodes_[v.id].p = &W;
        nodes_[v.id].p2 = &b;
        gemv(W, in(x), out(v), b.value.data());
        return v;
    }

    Var add_bias(Var x, Param& b) {
        check_same_size(dim(x), b.size(), "add_bias");
        auto v = push(Op::add_bias, dim(x), x);
        nodes_[v.id].p = &b;
        const Real* a = in(x);
        Real* o = out(v);
        for (std::size_t i = 0; i < b.size(); ++i) o[i] = a[i] + b.value[i];
        return v;
    }

    // ---- elementwise ----------------------------------------------------

    Var add(Var a, Var b) { return binary(Op::add, a, b, "add"); }
    Var sub(Var a, Var b) { return binary(Op::sub, a, b, "sub"); }
    Var mul(Var a, Var b) { return binary(Op::mul, a, b, "mul"); }

    Var scale(Var a, Real c) {
        auto v = push(Op::scale, dim(a), a);
        nodes_[v.id].c = c;
        const Real* x = in(a);
        Real* o = out(v);
        for (std::size_t i = 0; i < dim(a); ++i) o[i] = c * x[i];
        return v;
    }

    Var relu(Var a) {
        return unary(Op::relu, a, [](Real x) { return x > 0 ? x : Real(0); });
    }
    Var tanh(Var a) {
        return unary(Op::tanh, a, [](Real x) { return std::tanh(x); });
    }
    Var sigmoid(Var a) {
        return unary(Op::sigmoid, a, [](Real x) { return nn::sigmoid(x); });
    }

    /// Inverted dropout. Returns `a` unchanged when rate is 0.
    Var dropout(Var a, double rate, Rng& rng) {
        if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
        if (rate == 0.0) return a;
        auto v = push(Op::dropout, dim(a), a);
        nodes_[v.id].aux = masks_.size();
        const Real keep_scale = static_cast<Real>(1.0 / (1.0 - rate));
        for (std::size_t i = 0; i < dim(a); ++i) masks_.push_back(rng.uniform01() < rate ? Real(0) : keep_scale);
        const Real* x = in(a);
        const Real* m = masks_.data() + nodes_[v.id].aux;
        Real* o = out(v);
        for (std::size_t i = 0; i < dim(a); ++i) o[i] = x[i] * m[i];
        return v;
    }

    // ---- structure ------------------------------------------------------

    Var concat(std::span<const Var> parts) {
        std::size_t n = 0;
        for (auto p : parts) n += dim(p);
        auto v = push(Op::concat, n);
        set_list(v, parts);
        Real* o = out(v);
        for (auto p : parts) o = std::copy_n(in(p), dim(p), o);
        return v;
    }
    Var concat(std::initializer_list<Var> parts) { return concat(std::span<const Var>(parts.begin(), parts.size())); }

    Var slice(Var a, std::size_t start, std::size_t len) {
        if (start + len > dim(a))
            throw DimensionError("slice [" + std::to_string(start) + ", " + std::to_string(start + len) +
                                 ") of [" + std::to_string(dim(a)) + "]");
        auto v = push(Op::slice, len, a);
        nodes_[v.id].aux = start;
        std::copy_n(in(a) + start, len, out(v));
        return v;
    }

    // ---- reductions -----------------------------------------------------

    Var sum(Var a) {
        auto v = push(Op::sum, 1, a);
        Real s = 0;
        const Real* x = in(a);
        for (std::size_t i = 0; i < dim(a); ++i) s += x[i];
        *out(v) = s;
        return v;
    }

    Var dot(Var a, Var b) {
        check_same_size(dim(a), dim(b), "dot");
        auto v = push(Op::dot, 1, a, b);
        Real s = 0;
        const Real* x = in(a);
        const Real* y = in(b);
        for (std::size_t i = 0; i < dim(a); ++i) s += x[i] * y[i];
        *out(v) = s;
        return v;
    }

    Var softmax(Var a) {
        auto v = push(Op::softmax, dim(a), a);
        nn::softmax<Real>(std::span<const Real>(in(a), dim(a)), std::span<Real>(out(v), dim(a)));
        return v;
    }

    /// sum_k w[k] * xs[k]; all xs share one size.
    Var weighted_sum(Var w, std::span<const Var> xs) {
        check_same_size(dim(w), xs.size(), "weighted_sum");
        if (xs.empty()) throw DimensionError("weighted_sum: no inputs");
        const auto n = dim(xs[0]);
        for (auto x : xs) check_same_size(n, dim(x), "weighted_sum");
        auto v = push(Op::weighted_sum, n, w);
        set_list(v, xs);
        Real* o = out(v);
        std::fill_n(o, n, Real(0));
        const Real* wk = in(w);
        for (std::size_t k = 0; k < xs.size(); ++k) {
            const Real* x = in(xs[k]);
            for (std::size_t i = 0; i < n; ++i) o[i] += wk[k] * x[i];
        }
        return v;
    }

    Var mean(std::span<const Var> xs) {
        if (xs.empty()) throw DimensionError("mean: no inputs");
        const auto n = dim(xs[0]);
        for (auto x : xs) check_same_size(n, dim(x), "mean");
        auto v = push(Op::mean, n);
        set_list(v, xs);
        Real* o = out(v);
        std::fill_n(o, n, Real(0));
        const Real inv = Real(1) / static_cast<Real>(xs.size());
        for (auto x : xs) {
            const Real* p = in(x);
            for (std::size_t i = 0; i < n; ++i) o[i] += inv * p[i];
        }
        return v;
    }

    // ---- reverse pass ---------------------------------------------------

    /// Propagates d(seed * loss) to every node and into parameter gradients.
    void backward(Var loss, Real seed = Real(1)) {
        if (nodes_.empty() || !loss.valid() || loss.id >= nodes_.size())
            throw StateError("backward() called before a loss was recorded");
        if (node(loss).n != 1) throw StateError("backward() requires a scalar loss");
        grads_.assign(vals_.size(), Real(0));
        grads_[node(loss).off] = seed;
        for (std::uint32_t id = loss.id + 1; id-- > 0;) backprop(nodes_[id]);
        has_grads_ = true;
    }

private:
    enum class Op : std::uint8_t {
        input, param, row, matvec, affine, add_bias, add, sub, mul, scale,
        relu, tanh, sigmoid, dropout, concat, slice, sum, dot, softmax, weighted_sum, mean
    };

    struct Node {
        Op op = Op::input;
        std::uint32_t a = Var::npos;
        std::uint32_t b = Var::npos;
        std::size_t off = 0;
        std::size_t n = 0;
        Param* p = nullptr;
        Param* p2 = nullptr;
        std::size_t aux = 0;
        Real c = 0;
        std::uint32_t list_off = 0;
        std::uint32_t list_n = 0;
    };

    const Node& node(Var v) const {
        if (!v.valid() || v.id >= nodes_.size()) throw StateError("invalid tape variable");
        return nodes_[v.id];
    }

    Var push(Op op, std::size_t n, Var a = {}, Var b = {}) {
        Node nd;
        nd.op = op;
        nd.a = a.id;
        nd.b = b.id;
        nd.off = vals_.size();
        nd.n = n;
        vals_.resize(vals_.size() + n);
        nodes_.push_back(nd);
        return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
    }

    Real* out(Var v) { return vals_.data() + nodes_[v.id].off; }
    const Real* in(Var v) const { return vals_.data() + node(v).off; }

    void set_list(Var v, std::span<const Var> xs) {
        nodes_[v.id].list_off = static_cast<std::uint32_t>(lists_.size());
        nodes_[v.id].list_n = static_cast<std::uint32_t>(xs.size());
        for (auto x : xs) lists_.push_back(x.id);
    }

    static void gemv(const Param& W, const Real* x, Real* y, const Real* bias) {
        const Real* w = W.value.data();
        for (std::size_t r = 0; r < W.rows; ++r) {
            Real s = bias ? bias[r] : Real(0);
            const Real* wr = w + r * W.cols;
            for (std::size_t c = 0; c < W.cols; ++c) s += wr[c] * x[c];
            y[r] = s;
        }
    }

    Var binary(Op op, Var a, Var b, const char* name) {
        check_same_size(dim(a), dim(b), name);
        auto v = push(op, dim(a), a, b);
        const Real* x = in(a);
        const Real* y = in(b);
        Real* o = out(v);
        for (std::size_t i = 0; i < dim(a); ++i) {
            switch (op) {
            case Op::add: o[i] = x[i] + y[i]; break;
            case Op::sub: o[i] = x[i] - y[i]; break;
            default: o[i] = x[i] * y[i]; break;
            }
        }
        return v;
    }

    template <class F>
    Var unary(Op op, Var a, F f) {
        auto v = push(op, dim(a), a);
        const Real* x = in(a);
        Real* o = out(v);
        for (std::size_t i = 0; i < dim(a); ++i) o[i] = f(x[i]);
        return v;
    }

    void backprop(const Node& nd) {
        const Real* g = grads_.data() + nd.off;
        const Real* y = vals_.data() + nd.off;
        const std::size_t n = nd.n;
        auto ga = [&] { return grads_.data() + nodes_[nd.a].off; };
        auto xa = [&] { return vals_.data() + nodes_[nd.a].off; };
        switch (nd.op) {
        case Op::input: break;
        case Op::param:
            for (std::size_t i = 0; i < n; ++i) nd.p->grad[i] += g[i];
            break;
        case Op::row: {
            Real* pg = nd.p->grad.data() + nd.aux * nd.p->cols;
            for (std::size_t i = 0; i < n; ++i) pg[i] += g[i];
            break;
        }
        case Op::matvec:
        case Op::affine: {
            const Param& W = *nd.p;
            Real* wg = nd.p->grad.data();
            const Real* x = xa();
            Real* gx = ga();
            for (std::size_t r = 0; r < W.rows; ++r) {
                const Real gr = g[r];
                if (gr == Real(0)) continue;
                const Real* wr = W.value.data() + r * W.cols;
                Real* wgr = wg + r * W.cols;
                for (std::size_t c = 0; c < W.cols; ++c) {
                    wgr[c] += gr * x[c];
                    gx[c] += gr * wr[c];
                }
            }
            if (nd.op == Op::affine)
                for (std::size_t r = 0; r < W.rows; ++r) nd.p2->grad[r] += g[r];
            break;
        }
        case Op::add_bias: {
            Real* gx = ga();
            for (std::size_t i = 0; i < n; ++i) {
                gx[i] += g[i];
                nd.p->grad[i] += g[i];
            }
            break;
        }
        case Op::add:
        case Op::sub: {
            Real* gx = ga();
            for (std::size_t i = 0; i < n; ++i) gx[i] += g[i];
            Real* gy = grads_.data() + nodes_[nd.b].off;
            const Real sign = nd.op == Op::add ? Real(1) : Real(-1);
            for (std::size_t i = 0; i < n; ++i) gy[i] += sign * g[i];
            break;
        }
        case Op::mul: {
            const Real* x = xa();
            const Real* yb = vals_.data() + nodes_[nd.b].off;
            Real* gx = ga();
            for (std::size_t i = 0; i < n; ++i) gx[i] += g[i] * yb[i];
            Real* gy = grads_.data() + nodes_[nd.b].off;
            for (std::size_t i = 0; i < n; ++i) gy[i] += g[i] * x[i];
            break;
        }
        case Op::scale: {
            Real* gx = ga();
            for (std::size_t i = 0; i < n; ++i) gx[i] += nd.c * g[i];
            break;
        }
        case Op::relu: {
            Real* gx = ga();
            for (std::size_t i = 0; i < n; ++i)
                if (y[i] > 0) gx[i] += g[i];
            break;
        }
        case Op::tanh: {
            Real* gx = ga();
            for (std::size_t i = 0; i < n; ++i) gx[i] += g[i] * (Real(1) - y[i] * y[i]);
            break;
        }
        case Op::sigmoid: {
            Real* gx = ga();
            for (std::size_t i = 0; i < n; ++i) gx[i] += g[i] * y[i] * (Real(1) - y[i]);
            break;
        }
        case Op::dropout: {
            Real* gx = ga();
            const Real* m = masks_.data() + nd.aux;
            for (std::size_t i = 0; i < n; ++i) gx[i] += g[i] * m[i];
            break;
        }
        case Op::concat: {
            const Real* gp = g;
            for (std::uint32_t k = 0; k < nd.list_n; ++k) {
                const Node& part = nodes_[lists_[nd.list_off + k]];
                Real* gx = grads_.data() + part.off;
                for (std::size_t i = 0; i < part.n; ++i) gx[i] += gp[i];
                gp += part.n;
            }
            break;
        }
        case Op::slice: {
            Real* gx = ga() + nd.aux;
            for (std::size_t i = 0; i < n; ++i) gx[i] += g[i];
            break;
        }
        case Op::sum: {
            Real* gx = ga();
            for (std::size_t i = 0; i < nodes_[nd.a].n; ++i) gx[i] += g[0];
            break;
        }
        case Op::dot: {
            const std::size_t m = nodes_[nd.a].n;
            const Real* x = xa();
            const Real* yb = vals_.data() + nodes_[nd.b].off;
            Real* gx = ga();
            Real* gy = grads_.data() + nodes_[nd.b].off;
            for (std::size_t i = 0; i < m; ++i) gx[i] += g[0] * yb[i];
            for (std::size_t i = 0; i < m; ++i) gy[i] += g[0] * x[i];
            break;
        }
        case Op::softmax: {
            Real s = 0;
            for (std::size_t i = 0; i < n; ++i) s += g[i] * y[i];
            Real* gx = ga();
            for (std::size_t i = 0; i < n; ++i) gx[i] += y[i] * (g[i] - s);
            break;
        }
        case Op::weighted_sum: {
            const Real* w = xa();
            Real* gw = ga();
            for (std::uint32_t k = 0; k < nd.list_n; ++k) {
                const Node& xk = nodes_[lists_[nd.list_off + k]];
                const Real* x = vals_.data() + xk.off;
                Real* gx = grads_.data() + xk.off;
                Real d = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    d += g[i] * x[i];
                    gx[i] += w[k] * g[i];
                }
                gw[k] += d;
            }
            break;
        }
        case Op::mean: {
            const Real inv = Real(1) / static_cast<Real>(nd.list_n);
            for (std::uint32_t k = 0; k < nd.list_n; ++k) {
                Real* gx = grads_.data() + nodes_[lists_[nd.list_off + k]].off;
                for (std::size_t i = 0; i < n; ++i) gx[i] += inv * g[i];
            }
            break;
        }
        }
    }

    std::vector<Node> nodes_;
    std::vector<Real> vals_;
    std::vector<Real> grads_;
    std::vector<std::uint32_t> lists_;
    std::vector<Real> masks_;
    bool has_grads_ = false;
};

} // namespace dscf::nn
