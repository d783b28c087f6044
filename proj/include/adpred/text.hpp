#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace adpred {

// Shortest decimal form that parses back to the same double ("1.5", "1e300").
std::string shortest_double(double v);

// C hexfloat form ("%a"); parses back bit-exactly via strtod.
std::string hex_double(double v);

std::vector<std::string> split_tabs(const std::string& line);

// Backslash-escapes \, tab, newline, carriage return so a field can sit in a
// tab-separated line.
std::string escape_field(const std::string& s);
bool try_unescape_field(const std::string& s, std::string& out);

// Strict full-string parses; false on any trailing or malformed input.
bool try_parse_u64(const std::string& s, std::uint64_t& out);
bool try_parse_double(const std::string& s, double& out);

}  // namespace adpred
