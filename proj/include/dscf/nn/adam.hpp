#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <vector>

#include "dscf/errors.hpp"
#include "dscf/nn/parameter.hpp"

namespace dscf::nn {

struct AdamConfig {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adam with bias correction. Moments are allocated lazily to match the
/// store they are first stepped with.
template <std::floating_point Real>
class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    const AdamConfig& config() const noexcept { return cfg_; }
    std::uint64_t step_count() const noexcept { return steps_; }
    const std::vector<std::vector<Real>>& first_moment() const noexcept { return m_; }
    const std::vector<std::vector<Real>>& second_moment() const noexcept { return v_; }

    /// Applies one update from the accumulated gradients, then clears them.
    /// Throws TrainingError naming the parameter if any gradient is not finite;
    /// in that case no parameter is modified.
    void step(ParameterStore<Real>& store) {
        if (m_.size() != store.size()) {
            m_.clear();
            v_.clear();
            for (const auto& p : store) {
                m_.emplace_back(p->size(), Real(0));
                v_.emplace_back(p->size(), Real(0));
            }
        }
        for (const auto& p : store)
            for (const auto g : p->grad)
                if (!std::isfinite(g)) throw TrainingError("non-finite gradient in parameter '" + p->name + "'");

        ++steps_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
        const Real b1 = static_cast<Real>(cfg_.beta1);
        const Real b2 = static_cast<Real>(cfg_.beta2);
        const Real step_size = static_cast<Real>(cfg_.learning_rate / bc1);
        const Real inv_sqrt_bc2 = static_cast<Real>(1.0 / std::sqrt(bc2));
        const Real eps = static_cast<Real>(cfg_.epsilon);
        for (std::size_t k = 0; k < store.size(); ++k) {
            auto& p = store[k];
            auto& m = m_[k];
            auto& v = v_[k];
            for (std::size_t i = 0; i < p.size(); ++i) {
                const Real g = p.grad[i];
                m[i] = b1 * m[i] + (Real(1) - b1) * g;
                v[i] = b2 * v[i] + (Real(1) - b2) * g * g;
                p.value[i] -= step_size * m[i] / (std::sqrt(v[i]) * inv_sqrt_bc2 + eps);
                p.grad[i] = Real(0);
            }
        }
    }

private:
    AdamConfig cfg_;
    std::uint64_t steps_ = 0;
    std::vector<std::vector<Real>> m_;
    std::vector<std::vector<Real>> v_;
};

} // namespace dscf::nn
