#pragma once

#include <concepts>
#include <span>
#include <string>
#include <vector>

#include "dscf/nn/parameter.hpp"
#include "dscf/nn/tape.hpp"
#include "dscf/rng.hpp"

namespace dscf::nn {

/// Dropout switch threaded through forward passes.
struct ForwardMode {
    bool training = false;
    double dropout = 0.0;
    Rng* rng = nullptr;

    bool dropout_active() const noexcept { return training && dropout > 0.0 && rng != nullptr; }
};

/// Feed-forward stack: `hidden` ReLU layers of width `width`, each followed
/// by dropout, then a linear output layer.
template <std::floating_point Real>
class Mlp {
public:
    using Param = Parameter<Real>;

    Mlp() = default;

    Mlp(ParameterStore<Real>& store, const std::string& prefix, std::size_t in, std::size_t width,
        std::size_t hidden, std::size_t out) {
        std::size_t fan_in = in;
        for (std::size_t k = 0; k < hidden; ++k) {
            const auto tag = prefix + ".h" + std::to_string(k);
            layers_.push_back({&store.add(tag + ".W", width, fan_in), &store.add(tag + ".b", width)});
            fan_in = width;
        }
        layers_.push_back({&store.add(prefix + ".out.W", out, fan_in), &store.add(prefix + ".out.b", out)});
    }

    void init(Rng& rng) {
        for (auto& l : layers_) {
            init_fan_in(*l.W, rng);
            init_uniform(*l.b, 1.0 / std::sqrt(static_cast<double>(l.W->cols)), rng);
        }
    }

    Var forward(Tape<Real>& tape, Var x, const ForwardMode& mode) const {
        for (std::size_t k = 0; k + 1 < layers_.size(); ++k) {
            x = tape.relu(tape.affine(*layers_[k].W, *layers_[k].b, x));
            if (mode.dropout_active()) x = tape.dropout(x, mode.dropout, *mode.rng);
        }
        return tape.affine(*layers_.back().W, *layers_.back().b, x);
    }

    std::size_t input_size() const { return layers_.front().W->cols; }
    std::size_t output_size() const { return layers_.back().W->rows; }
    Param& output_weight() const { return *layers_.back().W; }
    Param& output_bias() const { return *layers_.back().b; }

private:
    struct Layer {
        Param* W;
        Param* b;
    };
    std::vector<Layer> layers_;
};

/// Single-direction LSTM with gates stacked as [input, forget, cell, output]:
///   z = W [x; h] + b
///   i = sigmoid(z_i), f = sigmoid(z_f), g = tanh(z_g), o = sigmoid(z_o)
///   c' = f * c + i * g,  h' = o * tanh(c')
template <std::floating_point Real>
class Lstm {
public:
    using Param = Parameter<Real>;

    Lstm() = default;

    Lstm(ParameterStore<Real>& store, const std::string& prefix, std::size_t in, std::size_t hidden)
        : hidden_(hidden), W_(&store.add(prefix + ".W", 4 * hidden, in + hidden)), b_(&store.add(prefix + ".b", 4 * hidden)) {}

    /// Fan-in uniform weights; forget-gate bias starts at 1.
    void init(Rng& rng) {
        init_fan_in(*W_, rng);
        std::fill(b_->value.begin(), b_->value.end(), Real(0));
        for (std::size_t j = hidden_; j < 2 * hidden_; ++j) b_->value[j] = Real(1);
    }

    struct State {
        Var h;
        Var c;
    };

    State step(Tape<Real>& tape, Var x, State s) const {
        const auto z = tape.affine(*W_, *b_, tape.concat({x, s.h}));
        const auto i = tape.sigmoid(tape.slice(z, 0, hidden_));
        const auto f = tape.sigmoid(tape.slice(z, hidden_, hidden_));
        const auto g = tape.tanh(tape.slice(z, 2 * hidden_, hidden_));
        const auto o = tape.sigmoid(tape.slice(z, 3 * hidden_, hidden_));
        const auto c = tape.add(tape.mul(f, s.c), tape.mul(i, g));
        return {tape.mul(o, tape.tanh(c)), c};
    }

    /// Hidden state at each position. With `reverse`, the sequence is read
    /// from the last element to the first; out[k] is still the state at
    /// position k.
    std::vector<Var> run(Tape<Real>& tape, std::span<const Var> xs, bool reverse) const {
        std::vector<Var> out(xs.size());
        State s{tape.zeros(hidden_), tape.zeros(hidden_)};
        for (std::size_t t = 0; t < xs.size(); ++t) {
            const auto k = reverse ? xs.size() - 1 - t : t;
            s = step(tape, xs[k], s);
            out[k] = s.h;
        }
        return out;
    }

    std::size_t hidden_size() const noexcept { return hidden_; }
    Param& weight() const { return *W_; }
    Param& bias() const { return *b_; }

private:
    std::size_t hidden_ = 0;
    Param* W_ = nullptr;
    Param* b_ = nullptr;
};

} // namespace dscf::nn
