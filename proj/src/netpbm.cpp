#include "taskgrid/netpbm.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "taskgrid/errors.hpp"

namespace taskgrid::netpbm {

namespace {

std::string header(const char* magic, int w, int h, int maxval) {
  return std::string(magic) + "\n" + std::to_string(w) + " " +
         std::to_string(h) + "\n" + std::to_string(maxval) + "\n";
}

struct Header {
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::size_t data_offset = 0;
};

Header parse_header(std::string_view bytes, std::string_view magic) {
  if (bytes.substr(0, 2) != magic)
    throw ParseError("netpbm", "expected magic " + std::string(magic));
  std::size_t pos = 2;
  int fields[3] = {0, 0, 0};
  for (int& f : fields) {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    if (pos >= bytes.size() ||
        !std::isdigit(static_cast<unsigned char>(bytes[pos])))
      throw ParseError("netpbm", "truncated header");
    while (pos < bytes.size() &&
           std::isdigit(static_cast<unsigned char>(bytes[pos])))
      f = f * 10 + (bytes[pos++] - '0');
  }
  // Exactly one whitespace byte separates the header from the raster.
  if (pos >= bytes.size()) throw ParseError("netpbm", "truncated header");
  return {fields[0], fields[1], fields[2], pos + 1};
}

}  // namespace

std::string encode_ppm(int width, int height,
                       std::span<const std::uint8_t> rgb) {
  std::string out = header("P6", width, height, 255);
  out.append(reinterpret_cast<const char*>(rgb.data()), rgb.size());
  return out;
}

std::string encode_pgm16(int width, int height,
                         std::span<const std::uint16_t> values) {
  std::string out = header("P5", width, height, 65535);
  out.reserve(out.size() + values.size() * 2);
  for (std::uint16_t v : values) {
    out.push_back(static_cast<char>(v >> 8));
    out.push_back(static_cast<char>(v & 0xff));
  }
  return out;
}

Image8 decode_ppm(std::string_view bytes) {
  Header h = parse_header(bytes, "P6");
  if (h.maxval != 255) throw ParseError("netpbm", "unsupported maxval");
  const std::size_t n = static_cast<std::size_t>(h.width) * h.height * 3;
  if (bytes.size() - h.data_offset != n)
    throw ParseError("netpbm", "raster size mismatch");
  Image8 img{h.width, h.height, {}};
  img.data.assign(bytes.begin() + h.data_offset, bytes.end());
  return img;
}

Image16 decode_pgm16(std::string_view bytes) {
  Header h = parse_header(bytes, "P5");
  if (h.maxval != 65535) throw ParseError("netpbm", "unsupported maxval");
  const std::size_t n = static_cast<std::size_t>(h.width) * h.height;
  if (bytes.size() - h.data_offset != n * 2)
    throw ParseError("netpbm", "raster size mismatch");
  Image16 img{h.width, h.height, std::vector<std::uint16_t>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    auto hi = static_cast<unsigned char>(bytes[h.data_offset + 2 * i]);
    auto lo = static_cast<unsigned char>(bytes[h.data_offset + 2 * i + 1]);
    img.data[i] = static_cast<std::uint16_t>((hi << 8) | lo);
  }
  return img;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to '" + path + "'");
}

}  // namespace taskgrid::netpbm
