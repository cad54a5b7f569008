#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace nlemu {

enum class BackgroundKind : std::uint8_t { uniform_random, ascii_text, http_like };

std::string_view background_kind_name(BackgroundKind k);
std::optional<BackgroundKind> parse_background_kind(std::string_view name);

// Benign filler, a pure function of (kind, length, seed). ascii_text uses
// printable characters, spaces and newlines only; http_like starts with a
// request line and continues with header lines and form bodies. Throws
// ParamError when length is 0.
std::vector<std::uint8_t> generate_background(BackgroundKind kind, std::size_t length,
                                              std::uint64_t seed);

}  // namespace nlemu
