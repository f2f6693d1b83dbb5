#include "optionforge/text.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "optionforge/types.hpp"

namespace optionforge {

std::string_view trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

std::vector<std::string> split(std::string_view text, char separator) {
  std::vector<std::string> parts;
  std::size_t begin = 0;
  while (true) {
    const auto end = text.find(separator, begin);
    parts.emplace_back(trim(text.substr(begin, end - begin)));
    if (end == std::string_view::npos) break;
    begin = end + 1;
  }
  return parts;
}

KeyValues parse_key_values(std::istream& in) {
  KeyValues values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto content = trim(line);
    if (content.empty() || content.front() == '#') continue;
    const auto eq = content.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidSpecError("line " + std::to_string(line_no) + ": expected key=value");
    }
    const auto key = trim(content.substr(0, eq));
    if (key.empty()) {
      throw InvalidSpecError("line " + std::to_string(line_no) + ": empty key");
    }
    values[std::string(key)] = std::string(trim(content.substr(eq + 1)));
  }
  return values;
}

KeyValues parse_key_values(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_key_values(in);
}

void write_key_values(std::ostream& out, const KeyValues& values) {
  for (const auto& [key, value] : values) out << key << '=' << value << '\n';
}

std::string format_double(double value) {
  char buffer[64];
  const auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return {buffer, end};
}

double parse_double(std::string_view text) {
  text = trim(text);
  double value = 0.0;
  // from_chars rejects a leading '+'.
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw InvalidSpecError("not a number: '" + std::string(text) + "'");
  }
  return value;
}

std::int64_t parse_int(std::string_view text) {
  text = trim(text);
  std::int64_t value = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw InvalidSpecError("not an integer: '" + std::string(text) + "'");
  }
  return value;
}

std::size_t parse_size(std::string_view text) {
  const auto value = parse_int(text);
  if (value < 0) throw InvalidSpecError("expected a non-negative integer, got " + std::to_string(value));
  return static_cast<std::size_t>(value);
}

}  // namespace optionforge
