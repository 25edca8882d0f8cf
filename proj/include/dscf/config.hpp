#pragma once

#include <charconv>
#include <istream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "dscf/data.hpp"
#include "dscf/errors.hpp"
#include "dscf/model.hpp"
#include "dscf/train.hpp"

namespace dscf {

/// Everything a command needs. Serialized as flat `key = value` lines;
/// the keys are listed in RunConfig::keys().
struct RunConfig {
    std::string dataset = "dataset";  // label used in logs and summaries
    std::string ratings;              // raw ratings file
    std::string trust;                // raw trust file
    std::string format = "tsv";       // tsv | mat-text
    int levels = 5;
    bool directed = false;
    double split = 0.8;
    std::string variant = "full";
    bool mask_padding = false;
    std::size_t neumf_factors = 8;
    std::size_t neumf_epochs = 50;
    std::string features = "neumf";   // neumf | pmf (cheaper item features)
    bool resample_walks = false;      // fresh walks every epoch instead of the cache
    std::string out = "run";
    TrainConfig train;

    using Entries = std::vector<std::pair<std::string, std::string>>;

    static const std::vector<std::string>& keys() {
        static const std::vector<std::string> k{
            "dataset",     "ratings",     "trust",         "format",       "levels", "directed", "split",
            "seed",        "d",           "batch",         "lr",           "dropout", "walk_length",
            "num_walks",   "max_epochs",  "patience",      "variant",      "mask_padding",
            "neumf_factors", "neumf_epochs", "features", "resample_walks", "out"};
        return k;
    }

    void set(const std::string& key, const std::string& value);
    std::string get(const std::string& key) const;

    void validate() const {
        train.validate();
        if (!(split > 0.0 && split < 1.0)) throw ConfigError("split must lie in (0, 1)");
        if (levels < 2) throw ConfigError("levels must be at least 2");
        if (neumf_factors == 0 || neumf_epochs == 0) throw ConfigError("neumf_factors and neumf_epochs must be positive");
        if (features != "neumf" && features != "pmf")
            throw ConfigError("unknown features '" + features + "' (expected neumf or pmf)");
        parse_variant(variant);
        parse_ingest_format(format);
    }
};

namespace detail {

inline std::string fmt_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

template <class T>
T parse_value(const std::string& key, const std::string& s) {
    T v{};
    const auto* end = s.data() + s.size();
    const auto r = std::from_chars(s.data(), end, v);
    if (r.ec != std::errc{} || r.ptr != end) throw ConfigError("bad value for '" + key + "': '" + s + "'");
    return v;
}

inline bool parse_bool(const std::string& key, const std::string& s) {
    if (s == "1" || s == "true" || s == "yes") return true;
    if (s == "0" || s == "false" || s == "no") return false;
    throw ConfigError("bad value for '" + key + "': '" + s + "' (expected true or false)");
}

} // namespace detail

inline void RunConfig::set(const std::string& key, const std::string& value) {
    using detail::parse_value;
    if (key == "dataset") dataset = value;
    else if (key == "ratings") ratings = value;
    else if (key == "trust") trust = value;
    else if (key == "format") format = value;
    else if (key == "levels") levels = parse_value<int>(key, value);
    else if (key == "directed") directed = detail::parse_bool(key, value);
    else if (key == "split") split = parse_value<double>(key, value);
    else if (key == "seed") train.seed = parse_value<std::uint64_t>(key, value);
    else if (key == "d") train.d = parse_value<std::size_t>(key, value);
    else if (key == "batch") train.batch_size = parse_value<std::size_t>(key, value);
    else if (key == "lr") train.learning_rate = parse_value<double>(key, value);
    else if (key == "dropout") train.dropout = parse_value<double>(key, value);
    else if (key == "walk_length") train.walk_length = parse_value<std::size_t>(key, value);
    else if (key == "num_walks") train.num_walks = parse_value<std::size_t>(key, value);
    else if (key == "max_epochs") train.max_epochs = parse_value<std::size_t>(key, value);
    else if (key == "patience") train.patience = parse_value<std::size_t>(key, value);
    else if (key == "variant") variant = value;
    else if (key == "mask_padding") mask_padding = detail::parse_bool(key, value);
    else if (key == "neumf_factors") neumf_factors = parse_value<std::size_t>(key, value);
    else if (key == "neumf_epochs") neumf_epochs = parse_value<std::size_t>(key, value);
    else if (key == "features") features = value;
    else if (key == "resample_walks") resample_walks = detail::parse_bool(key, value);
    else if (key == "out") out = value;
    else throw ConfigError("unknown config key '" + key + "'");
}

inline std::string RunConfig::get(const std::string& key) const {
    using detail::fmt_double;
    if (key == "dataset") return dataset;
    if (key == "ratings") return ratings;
    if (key == "trust") return trust;
    if (key == "format") return format;
    if (key == "levels") return std::to_string(levels);
    if (key == "directed") return directed ? "true" : "false";
    if (key == "split") return fmt_double(split);
    if (key == "seed") return std::to_string(train.seed);
    if (key == "d") return std::to_string(train.d);
    if (key == "batch") return std::to_string(train.batch_size);
    if (key == "lr") return fmt_double(train.learning_rate);
    if (key == "dropout") return fmt_double(train.dropout);
    if (key == "walk_length") return std::to_string(train.walk_length);
    if (key == "num_walks") return std::to_string(train.num_walks);
    if (key == "max_epochs") return std::to_string(train.max_epochs);
    if (key == "patience") return std::to_string(train.patience);
    if (key == "variant") return variant;
    if (key == "mask_padding") return mask_padding ? "true" : "false";
    if (key == "neumf_factors") return std::to_string(neumf_factors);
    if (key == "neumf_epochs") return std::to_string(neumf_epochs);
    if (key == "features") return features;
    if (key == "resample_walks") return resample_walks ? "true" : "false";
    if (key == "out") return out;
    throw ConfigError("unknown config key '" + key + "'");
}

/// Parses `key = value` lines. Blank lines and lines starting with '#'
/// are skipped; keys are checked against RunConfig::keys().
inline RunConfig::Entries read_config_entries(std::istream& is, const std::string& name) {
    RunConfig::Entries out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto view = detail::trim(line);
        if (view.empty() || view.front() == '#') continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos) throw ParseError(name, lineno, "expected key = value");
        const std::string key(detail::trim(view.substr(0, eq)));
        const std::string value(detail::trim(view.substr(eq + 1)));
        bool known = false;
        for (const auto& k : RunConfig::keys()) known |= k == key;
        if (!known) throw ParseError(name, lineno, "unknown key '" + key + "'");
        out.emplace_back(key, value);
    }
    return out;
}

inline void write_config(std::ostream& os, const RunConfig& cfg) {
    for (const auto& k : RunConfig::keys()) os << k << " = " << cfg.get(k) << '\n';
}

/// defaults, then the file entries, then flags given on the command line.
inline RunConfig resolve_config(const RunConfig& defaults, const RunConfig::Entries& file,
                                const RunConfig::Entries& flags) {
    RunConfig c = defaults;
    for (const auto& [k, v] : file) c.set(k, v);
    for (const auto& [k, v] : flags) c.set(k, v);
    return c;
}

inline void to_json(nlohmann::json& j, const RunConfig& c) {
    j = nlohmann::json::object();
    for (const auto& k : RunConfig::keys()) j[k] = c.get(k);
}

} // namespace dscf
