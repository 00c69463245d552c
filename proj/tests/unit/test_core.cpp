#include <doctest.h>

#include <filesystem>
#include <random>

#include "plateflow/encoding.hpp"
#include "plateflow/image.hpp"
#include "plateflow/image_io.hpp"

using namespace plateflow;

TEST_CASE("png encode/decode preserves pixels for gray and rgb") {
  std::mt19937 rng(7);
  for (int channels : {1, 3}) {
    Image img(17, 9, channels);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng());
    const auto bytes = io::encode_png(img);
    CHECK(io::decode_png(bytes) == img);
    // Encoding is a pure function of the pixels.
    CHECK(io::encode_png(img) == bytes);
  }
}

TEST_CASE("decode_png rejects garbage") {
  std::vector<std::uint8_t> junk(64, 0x42);
  CHECK_THROWS_AS(io::decode_png(junk), ImageError);
  auto bytes = io::encode_png(Image(4, 4, 1, 9));
  bytes.resize(bytes.size() / 2);
  CHECK_THROWS_AS(io::decode_png(bytes), ImageError);
}

TEST_CASE("pgm round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "plateflow_test_core";
  std::filesystem::create_directories(dir);
  GrayFrame f(5, 3, 0, 4);
  for (std::size_t i = 0; i < f.data.size(); ++i) f.data[i] = static_cast<std::uint8_t>(i * 17);
  io::write_pgm(dir / "a.pgm", f);
  const auto back = io::read_pgm(dir / "a.pgm", 4);
  CHECK(back.width == 5);
  CHECK(back.height == 3);
  CHECK(back.data == f.data);
  std::filesystem::remove_all(dir);
}

TEST_CASE("resize to the same size is the identity; upscale of a constant stays constant") {
  Image img(6, 4, 3, 0);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<std::uint8_t>(i);
  CHECK(resize_bilinear(img, 6, 4) == img);
  const auto flat = resize_bilinear(Image(3, 2, 1, 77), 30, 20);
  for (auto p : flat.pixels) CHECK(p == 77);
}

TEST_CASE("to_gray weights sum to unity") {
  Image white(2, 2, 3, 255);
  for (auto p : to_gray(white).data) CHECK(p == 255);
  Image red(1, 1, 3, 0);
  red.at(0, 0, 0) = 255;
  CHECK(to_gray(red).data[0] == 77);
}

TEST_CASE("base64 round trip over random payloads") {
  std::mt19937 rng(1);
  for (int len = 0; len < 40; ++len) {
    std::vector<std::uint8_t> data(static_cast<std::size_t>(len));
    for (auto& b : data) b = static_cast<std::uint8_t>(rng());
    CHECK(base64_decode(base64_encode(data)) == data);
  }
  CHECK(base64_encode(std::vector<std::uint8_t>{'M', 'a'}) == "TWE=");
  CHECK_THROWS_AS(base64_decode("abc"), EncodingError);
}

TEST_CASE("utf8 decode validates input") {
  CHECK(utf8_decode("A\xC3\xA9") == U"Aé");
  CHECK(utf8_encode(U"ঢা") == "\xE0\xA6\xA2\xE0\xA6\xBE");
  CHECK_THROWS_AS(utf8_decode("\xC3"), EncodingError);
  CHECK_THROWS_AS(utf8_decode("\xC0\x80"), EncodingError);
  CHECK_THROWS_AS(utf8_decode("\xED\xA0\x80"), EncodingError);
  CHECK_THROWS_AS(utf8_decode("\xFF"), EncodingError);
}
