#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace plateflow {

class EncodingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// Strict UTF-8 decode (rejects overlongs, surrogates, and truncated sequences).
std::u32string utf8_decode(std::string_view text);
std::string utf8_encode(std::u32string_view codepoints);

}  // namespace plateflow
