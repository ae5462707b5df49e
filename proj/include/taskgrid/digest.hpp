#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace taskgrid {

/// Lower-case hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

std::string base64_encode(std::span<const unsigned char> bytes);
std::string base64_encode(std::string_view bytes);
/// Throws ParseError on malformed input.
std::vector<unsigned char> base64_decode(std::string_view text);

}  // namespace taskgrid
