#include "nlemu/ingest/input.hpp"

#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include "nlemu/error.hpp"

namespace nlemu {

std::optional<InputFormat> parse_input_format(std::string_view name) {
  if (name == "raw") return InputFormat::raw;
  if (name == "hex") return InputFormat::hex;
  return std::nullopt;
}

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

std::vector<std::uint8_t> decode_hex(std::string_view text) {
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 2);
  int high = -1;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (is_space(c)) continue;
    const int v = hex_value(c);
    if (v < 0) {
      throw FormatError("non-hex character at position " + std::to_string(i));
    }
    if (high < 0) {
      high = v;
    } else {
      out.push_back(static_cast<std::uint8_t>((high << 4) | v));
      high = -1;
    }
  }
  if (high >= 0) throw FormatError("odd number of hex digits");
  return out;
}

std::vector<std::uint8_t> load_input(std::istream& in, InputFormat format) {
  std::string data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (in.bad()) throw IoError("read failed");
  if (format == InputFormat::hex) return decode_hex(data);
  return {data.begin(), data.end()};
}

std::vector<std::uint8_t> load_input(const std::string& source, InputFormat format) {
  if (source == "-") return load_input(std::cin, format);
  std::ifstream file(source, std::ios::binary);
  if (!file) throw IoError("cannot open " + source);
  return load_input(file, format);
}

}  // namespace nlemu
