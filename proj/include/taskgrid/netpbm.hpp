#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace taskgrid::netpbm {

/// Binary PPM (P6, maxval 255).
std::string encode_ppm(int width, int height, std::span<const std::uint8_t> rgb);
/// Binary PGM (P5, maxval 65535, big-endian samples).
std::string encode_pgm16(int width, int height,
                         std::span<const std::uint16_t> values);

struct Image8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;
};

struct Image16 {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> data;
};

Image8 decode_ppm(std::string_view bytes);
Image16 decode_pgm16(std::string_view bytes);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view bytes);

}  // namespace taskgrid::netpbm
