#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nlemu {

enum class InputFormat : std::uint8_t { raw, hex };

std::optional<InputFormat> parse_input_format(std::string_view name);

// Hex pairs with arbitrary interleaved whitespace. Throws FormatError on a
// non-hex character or an odd digit count.
std::vector<std::uint8_t> decode_hex(std::string_view text);

std::vector<std::uint8_t> load_input(std::istream& in, InputFormat format);

// `source` is a file path, or "-" for standard input. Throws IoError when the
// file cannot be read and FormatError on malformed hex.
std::vector<std::uint8_t> load_input(const std::string& source, InputFormat format);

}  // namespace nlemu
