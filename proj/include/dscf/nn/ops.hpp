#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <span>
#include <string>
#include <vector>

#include "dscf/errors.hpp"
#include "dscf/rng.hpp"

namespace dscf::nn {

inline void check_same_size(std::size_t a, std::size_t b, const char* op) {
    if (a != b)
        throw DimensionError(std::string(op) + ": shape mismatch [" + std::to_string(a) + "] vs [" +
                             std::to_string(b) + "]");
}

template <std::floating_point Real>
Real sigmoid(Real x) {
    // split on sign so exp never overflows
    if (x >= 0) return Real(1) / (Real(1) + std::exp(-x));
    const Real e = std::exp(x);
    return e / (Real(1) + e);
}

/// Max-shifted softmax.
template <std::floating_point Real>
void softmax(std::span<const Real> in, std::span<Real> out) {
    check_same_size(in.size(), out.size(), "softmax");
    if (in.empty()) return;
    const Real m = *std::max_element(in.begin(), in.end());
    Real z = 0;
    for (std::size_t i = 0; i < in.size(); ++i) z += (out[i] = std::exp(in[i] - m));
    for (auto& o : out) o /= z;
}

template <std::floating_point Real>
std::vector<Real> softmax(std::span<const Real> in) {
    std::vector<Real> out(in.size());
    softmax<Real>(in, out);
    return out;
}

template <std::floating_point Real>
std::vector<Real> relu(std::span<const Real> in) {
    std::vector<Real> out(in.begin(), in.end());
    for (auto& v : out) v = v > 0 ? v : Real(0);
    return out;
}

/// Inverted dropout: kept units are scaled by 1/(1-rate) during training;
/// identity when `training` is false or rate is 0.
template <std::floating_point Real>
std::vector<Real> dropout(std::span<const Real> x, double rate, bool training, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
    std::vector<Real> out(x.begin(), x.end());
    if (!training || rate == 0.0) return out;
    const Real keep_scale = static_cast<Real>(1.0 / (1.0 - rate));
    for (auto& v : out) v = rng.uniform01() < rate ? Real(0) : v * keep_scale;
    return out;
}

} // namespace dscf::nn
