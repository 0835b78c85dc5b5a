#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chgat::utf8 {

// Length in bytes of the sequence introduced by lead byte `c`, 0 if invalid.
inline std::size_t sequence_length(unsigned char c) noexcept {
  if (c < 0x80) return 1;
  if ((c >> 5) == 0x6) return 2;
  if ((c >> 4) == 0xE) return 3;
  if ((c >> 3) == 0x1E) return 4;
  return 0;
}

/// Splits UTF-8 text into one string per code point. Returns nullopt on
/// malformed input.
inline std::optional<std::vector<std::string>> split(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t n = sequence_length(static_cast<unsigned char>(text[i]));
    if (n == 0 || i + n > text.size()) return std::nullopt;
    for (std::size_t k = 1; k < n; ++k) {
      if ((static_cast<unsigned char>(text[i + k]) >> 6) != 0x2) return std::nullopt;
    }
    out.emplace_back(text.substr(i, n));
    i += n;
  }
  return out;
}

inline bool is_single_code_point(std::string_view text) {
  auto parts = split(text);
  return parts && parts->size() == 1;
}

inline std::string join(const std::vector<std::string>& chars) {
  std::string out;
  for (const auto& c : chars) out += c;
  return out;
}

}  // namespace chgat::utf8
