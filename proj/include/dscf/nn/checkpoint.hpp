#pragma once

#include <concepts>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>

#include "dscf/errors.hpp"
#include "dscf/io.hpp"
#include "dscf/nn/parameter.hpp"

namespace dscf::nn {

// Checkpoint layout (all integers little-endian):
//   "DSCFCKPT"                          8-byte magic
//   u32 format version (1)
//   u32 metadata entry count, then per entry: string key, string value
//   u32 parameter count, then per parameter: string name, u64 rows, u64 cols
//   f64 values of every parameter, in manifest order, row-major
// Strings are u32 length + bytes.

inline constexpr std::string_view kCheckpointMagic = "DSCFCKPT";
inline constexpr std::uint32_t kCheckpointVersion = 1;

using Metadata = std::map<std::string, std::string>;

template <std::floating_point Real>
void save_checkpoint(std::ostream& os, const ParameterStore<Real>& store, const Metadata& meta = {}) {
    io::write_magic(os, kCheckpointMagic);
    io::write_le<std::uint32_t>(os, kCheckpointVersion);
    io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(meta.size()));
    for (const auto& [k, v] : meta) {
        io::write_string(os, k);
        io::write_string(os, v);
    }
    io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(store.size()));
    for (const auto& p : store) {
        io::write_string(os, p->name);
        io::write_le<std::uint64_t>(os, p->rows);
        io::write_le<std::uint64_t>(os, p->cols);
    }
    for (const auto& p : store)
        for (const auto v : p->value) io::write_le<double>(os, static_cast<double>(v));
    if (!os) throw std::runtime_error("checkpoint write failed");
}

/// Reads only the metadata block.
inline Metadata read_checkpoint_metadata(std::istream& is) {
    io::expect_magic(is, kCheckpointMagic, "checkpoint");
    const auto version = io::read_le<std::uint32_t>(is);
    if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
    Metadata meta;
    const auto n = io::read_le<std::uint32_t>(is);
    for (std::uint32_t i = 0; i < n; ++i) {
        auto k = io::read_string(is);
        meta[k] = io::read_string(is);
    }
    return meta;
}

/// Loads values into an already-built store. The manifest must list the
/// store's parameters in the same order with identical shapes.
template <std::floating_point Real>
Metadata load_checkpoint(std::istream& is, ParameterStore<Real>& store) {
    auto meta = read_checkpoint_metadata(is);
    const auto count = io::read_le<std::uint32_t>(is);
    if (count != store.size())
        throw FormatError("checkpoint has " + std::to_string(count) + " parameters, model expects " +
                          std::to_string(store.size()));
    for (std::size_t i = 0; i < count; ++i) {
        const auto name = io::read_string(is);
        const auto rows = io::read_le<std::uint64_t>(is);
        const auto cols = io::read_le<std::uint64_t>(is);
        const auto& p = store[i];
        if (name != p.name || rows != p.rows || cols != p.cols)
            throw FormatError("checkpoint entry " + name + "[" + std::to_string(rows) + "x" + std::to_string(cols) +
                              "] does not match model parameter " + p.name + p.shape_string());
    }
    for (auto& p : store)
        for (auto& v : p->value) v = static_cast<Real>(io::read_le<double>(is));
    return meta;
}

} // namespace dscf::nn
