#pragma once

#include <string>

#include "json.hpp"

namespace smoothek {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchemaVersion = "smoothek/1";

/// Serializes `j` deterministically: keys in insertion order, floats with 17
/// significant digits (%.17g), non-finite floats as null.
std::string dump_json(const Json& j, int indent = 2);

/// Shortest "%.17g" rendering used by the JSON and CSV writers.
std::string format_double(double v);

}  // namespace smoothek
