#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace lifespan {

/// Shortest decimal that round-trips to the same double. Locale independent,
/// so CSV output is byte-stable across runs.
std::string format_double(double x);

/// Splits on a delimiter without trimming; empty fields are kept.
std::vector<std::string_view> split_fields(std::string_view line, char delim = ',');

/// Parses a full field as a double; throws std::invalid_argument otherwise.
double parse_double(std::string_view field);

}  // namespace lifespan
