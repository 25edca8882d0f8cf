#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dscf/errors.hpp"
#include "dscf/rng.hpp"

namespace dscf::nn {

/// A learnable rows x cols array (row-major) with its gradient buffer.
/// Vectors are stored as rows x 1.
template <std::floating_point Real>
struct Parameter {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<Real> value;
    std::vector<Real> grad;

    Parameter(std::string n, std::size_t r, std::size_t c)
        : name(std::move(n)), rows(r), cols(c), value(r * c, Real(0)), grad(r * c, Real(0)) {}

    std::size_t size() const noexcept { return value.size(); }
    std::span<Real> row(std::size_t r) { return {value.data() + r * cols, cols}; }
    std::span<const Real> row(std::size_t r) const { return {value.data() + r * cols, cols}; }
    std::span<Real> grad_row(std::size_t r) { return {grad.data() + r * cols, cols}; }

    std::string shape_string() const { return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]"; }
};

/// Owns every learnable array of a model in registration order. Addresses
/// of registered parameters are stable.
template <std::floating_point Real>
class ParameterStore {
public:
    using Param = Parameter<Real>;

    ParameterStore() = default;
    ParameterStore(const ParameterStore&) = delete;
    ParameterStore& operator=(const ParameterStore&) = delete;
    ParameterStore(ParameterStore&&) noexcept = default;
    ParameterStore& operator=(ParameterStore&&) noexcept = default;

    Param& add(const std::string& name, std::size_t rows, std::size_t cols = 1) {
        if (by_name_.count(name)) throw ConfigError("duplicate parameter name '" + name + "'");
        params_.push_back(std::make_unique<Param>(name, rows, cols));
        by_name_.emplace(name, params_.size() - 1);
        return *params_.back();
    }

    Param& get(const std::string& name) {
        auto it = by_name_.find(name);
        if (it == by_name_.end()) throw ConfigError("no parameter named '" + name + "'");
        return *params_[it->second];
    }
    const Param& get(const std::string& name) const { return const_cast<ParameterStore*>(this)->get(name); }
    bool contains(const std::string& name) const { return by_name_.count(name) > 0; }

    std::size_t size() const noexcept { return params_.size(); }
    Param& operator[](std::size_t i) { return *params_[i]; }
    const Param& operator[](std::size_t i) const { return *params_[i]; }

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

    std::size_t total_values() const {
        std::size_t n = 0;
        for (const auto& p : params_) n += p->size();
        return n;
    }

    void zero_grad() {
        for (auto& p : params_) std::fill(p->grad.begin(), p->grad.end(), Real(0));
    }

    using Snapshot = std::vector<std::vector<Real>>;

    Snapshot snapshot() const {
        Snapshot s;
        s.reserve(params_.size());
        for (const auto& p : params_) s.push_back(p->value);
        return s;
    }

    void restore(const Snapshot& s) {
        if (s.size() != params_.size()) throw DimensionError("snapshot does not match parameter store");
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i].size() != params_[i]->size())
                throw DimensionError("snapshot shape mismatch for '" + params_[i]->name + "'");
            params_[i]->value = s[i];
        }
    }

private:
    std::vector<std::unique_ptr<Param>> params_;
    std::unordered_map<std::string, std::size_t> by_name_;
};

template <std::floating_point Real>
void init_uniform(Parameter<Real>& p, double bound, Rng& rng) {
    for (auto& v : p.value) v = static_cast<Real>(rng.uniform(-bound, bound));
}

/// Weight matrices: uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], fan_in = cols.
template <std::floating_point Real>
void init_fan_in(Parameter<Real>& p, Rng& rng) {
    init_uniform(p, 1.0 / std::sqrt(static_cast<double>(p.cols)), rng);
}

} // namespace dscf::nn
