#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "plateflow/image.hpp"

namespace plateflow::io {

/// Binary PGM (P5, maxval 255).
GrayFrame read_pgm(const std::filesystem::path& path, std::int64_t frame_index = 0);
void write_pgm(const std::filesystem::path& path, const GrayFrame& frame);

/// 8-bit PNG, gray or RGB. Palette and 16-bit inputs are converted on read; alpha is dropped.
std::vector<std::uint8_t> encode_png(const Image& image);
Image decode_png(std::span<const std::uint8_t> bytes);

Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& image);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

}  // namespace plateflow::io
