#include <doctest.h>

#include <random>

#include "taskgrid/digest.hpp"
#include "taskgrid/errors.hpp"

using namespace taskgrid;

TEST_CASE("sha256 known vectors") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq") ==
        "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
  CHECK(sha256_hex(std::string(1000000, 'a')) ==
        "cdc76e5c9914fb9281a1c7e284d73e67f1809a48a497200e046d39ccc7112cd0");
}

TEST_CASE("base64 RFC 4648 vectors") {
  const std::pair<const char*, const char*> v[] = {
      {"", ""},           {"f", "Zg=="},         {"fo", "Zm8="},
      {"foo", "Zm9v"},    {"foob", "Zm9vYg=="},  {"fooba", "Zm9vYmE="},
      {"foobar", "Zm9vYmFy"},
  };
  for (const auto& [plain, enc] : v) {
    CHECK(base64_encode(std::string_view(plain)) == enc);
    const auto back = base64_decode(enc);
    CHECK(std::string(back.begin(), back.end()) == plain);
  }
}

TEST_CASE("base64 round trips arbitrary bytes") {
  std::mt19937_64 rng(5);
  for (int len = 0; len < 300; ++len) {
    std::vector<unsigned char> bytes(len);
    for (auto& b : bytes) b = static_cast<unsigned char>(rng());
    CHECK(base64_decode(base64_encode(bytes)) == bytes);
  }
}

TEST_CASE("malformed base64 is a ParseError") {
  CHECK_THROWS_AS(base64_decode("Zm9"), ParseError);
  CHECK_THROWS_AS(base64_decode("Zm9v!A=="), ParseError);
  CHECK_THROWS_AS(base64_decode("Z==="), ParseError);
  CHECK_THROWS_AS(base64_decode("=Zm9"), ParseError);
}
