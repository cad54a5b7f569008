#include "nlemu/corpus/background.hpp"

#include <array>
#include <string>

#include "nlemu/error.hpp"
#include "parts.hpp"

namespace nlemu {

using corpus_detail::Rng;

std::string_view background_kind_name(BackgroundKind k) {
  switch (k) {
    case BackgroundKind::uniform_random: return "uniform_random";
    case BackgroundKind::ascii_text: return "ascii_text";
    case BackgroundKind::http_like: return "http_like";
  }
  return "?";
}

std::optional<BackgroundKind> parse_background_kind(std::string_view name) {
  for (auto k : {BackgroundKind::uniform_random, BackgroundKind::ascii_text,
                 BackgroundKind::http_like}) {
    if (background_kind_name(k) == name) return k;
  }
  return std::nullopt;
}

namespace {

constexpr std::array<std::string_view, 32> kWords = {
    "the",     "network", "packet", "server", "client", "request", "session", "data",
    "stream",  "buffer",  "value",  "report", "index",  "header",  "content", "table",
    "Account", "Status",  "update", "query",  "mode",   "READY",   "level",   "user",
    "config",  "time",    "page",   "token",  "result", "node",    "item",    "list"};

std::string word(Rng& rng) { return std::string(kWords[rng.below(kWords.size())]); }

void append_text(std::string& out, Rng& rng, std::size_t limit) {
  while (out.size() < limit) {
    const std::size_t n = 4 + rng.below(12);
    for (std::size_t i = 0; i < n && out.size() < limit; ++i) {
      std::string w = word(rng);
      if (rng.chance(0.1)) w += std::to_string(rng.below(10000));
      if (rng.chance(0.08)) w += rng.chance(0.5) ? "," : ";";
      out += w;
      out += ' ';
    }
    out.back() = rng.chance(0.3) ? '\n' : '.';
    out += rng.chance(0.5) ? "\n" : " ";
  }
}

std::string path(Rng& rng) {
  std::string p;
  const std::size_t depth = 1 + rng.below(3);
  for (std::size_t i = 0; i < depth; ++i) p += "/" + word(rng);
  if (rng.chance(0.5)) p += ".html";
  if (rng.chance(0.3)) p += "?" + word(rng) + "=" + std::to_string(rng.below(100000));
  return p;
}

void append_http(std::string& out, Rng& rng, std::size_t limit) {
  static constexpr std::array<std::string_view, 4> kMethods = {"GET", "POST", "PUT", "HEAD"};
  static constexpr std::array<std::string_view, 6> kHeaders = {
      "Host", "User-Agent", "Accept", "Accept-Language", "Cookie", "Connection"};
  while (out.size() < limit) {
    const std::string_view method = kMethods[rng.below(kMethods.size())];
    out += std::string(method) + " " + path(rng) + " HTTP/1.1\r\n";
    const std::size_t headers = 3 + rng.below(6);
    for (std::size_t i = 0; i < headers; ++i) {
      out += std::string(kHeaders[rng.below(kHeaders.size())]) + ": " + word(rng) + "/" +
             std::to_string(rng.below(100)) + "." + std::to_string(rng.below(10)) + "\r\n";
    }
    if (method == "POST" || method == "PUT") {
      std::string body;
      const std::size_t fields = 1 + rng.below(6);
      for (std::size_t i = 0; i < fields; ++i) {
        if (i > 0) body += '&';
        body += word(rng) + "=" + word(rng) + std::to_string(rng.below(1000));
      }
      out += "Content-Length: " + std::to_string(body.size()) + "\r\n\r\n" + body + "\r\n";
    } else {
      out += "\r\n";
    }
  }
}

}  // namespace

std::vector<std::uint8_t> generate_background(BackgroundKind kind, std::size_t length,
                                              std::uint64_t seed) {
  if (length == 0) throw ParamError("background length must be positive");
  Rng rng(seed);
  std::vector<std::uint8_t> out;
  if (kind == BackgroundKind::uniform_random) {
    out.resize(length);
    std::size_t i = 0;
    while (i < length) {
      std::uint64_t v = rng.engine()();
      for (int b = 0; b < 8 && i < length; ++b, v >>= 8) out[i++] = static_cast<std::uint8_t>(v);
    }
    return out;
  }
  std::string text;
  text.reserve(length + 512);
  if (kind == BackgroundKind::ascii_text) {
    append_text(text, rng, length);
  } else {
    append_http(text, rng, length);
  }
  out.assign(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(length));
  return out;
}

}  // namespace nlemu
