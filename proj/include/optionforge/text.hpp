#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace optionforge {

/// Flat `dotted.key=value` document. Lines starting with '#' and blank lines
/// are ignored; later keys override earlier ones.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(std::istream& in);
KeyValues parse_key_values(std::string_view text);
void write_key_values(std::ostream& out, const KeyValues& values);

/// Shortest round-trip decimal form, independent of the global locale.
std::string format_double(double value);
double parse_double(std::string_view text);
std::size_t parse_size(std::string_view text);
std::int64_t parse_int(std::string_view text);

std::string_view trim(std::string_view text);
std::vector<std::string> split(std::string_view text, char separator);

}  // namespace optionforge
