#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "dqf/dqfnd.hpp"

namespace dqf {

/// Bundle layout:
///   { "ids": [...], "delta_grid": [...],
///     "angles": [ { "alpha", "q_bar", "q_tilde", "dq", "zero_interval_mean", "zero_norm_rows" } ],
///     "config": {...}, "flags": {...} }
/// Matrices are row-major by observation; NaN is written as null.
nlohmann::json to_json(const DQFBundle& bundle);

/// Throws ParseError on a malformed bundle.
DQFBundle bundle_from_json(const nlohmann::json& j);

/// Canonical serialisation: compact, keys sorted, shortest round-trip numbers.
std::string serialize_bundle(const DQFBundle& bundle);

DQFBundle read_bundle(const std::string& path);
void write_text(const std::string& path, std::string_view text);
std::string read_text(const std::string& path);

/// Lower-case hex SHA-256 of the bytes.
std::string sha256_hex(std::string_view bytes);

}  // namespace dqf
