#include <doctest.h>

#include <filesystem>

#include "dkg/codec.hpp"
#include "dkg/key/image_key.hpp"
#include "support.hpp"

using namespace dkg;
using namespace dkg::key;
using dkg::test::check_error;

namespace {

ImageKey random_key(int w, int h, Rng& rng) {
  std::vector<std::uint8_t> b(static_cast<std::size_t>(w) * h * 3);
  for (auto& v : b) v = static_cast<std::uint8_t>(rng.next_u32());
  return ImageKey(w, h, std::move(b));
}

std::filesystem::path scratch(const char* name) {
  auto dir = std::filesystem::temp_directory_path() / "dkg_test_key";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("ImageKey rejects a payload of the wrong length") {
  check_error(ErrorCode::InvalidShape, [] { ImageKey(2, 2, std::vector<std::uint8_t>(11)); });
}

TEST_CASE("quadruple view layout") {
  Rng rng(3);
  const auto k = random_key(4, 3, rng);
  CHECK(quadruple_view(k, 0) == Quadruple{k.bytes()[0], 0, 0, 0});
  CHECK(quadruple_view(k, 3) == Quadruple{k.bytes()[3], 1, 0, 0});
  CHECK(quadruple_view(k, 14) == Quadruple{k.bytes()[14], 0, 1, 2});
  for (std::size_t i = 0; i < k.size(); ++i) {
    const auto q = quadruple_view(k, i);
    CHECK(q.channel >= 0);
    CHECK(q.channel <= 2);
    CHECK(quadruple_index(k, q.x, q.y, q.channel) == i);
  }
  check_error(ErrorCode::OutOfRange, [&] { quadruple_view(k, k.size()); });
  check_error(ErrorCode::OutOfRange, [&] { quadruple_index(k, 4, 0, 0); });
}

TEST_CASE("keyspace") {
  CHECK(keyspace(256).exponent == 196608);
  CHECK(keyspace(256).alphabet_size == 256);
  CHECK(keyspace(1).exponent == 3);
  CHECK(keyspace(1).keyspace_log2 == 24);
  CHECK(keyspace(64).exponent == 12288);
  CHECK(keyspace(64).keyspace_log2 == 98304);
  check_error(ErrorCode::InvalidArgument, [] { keyspace(0); });
}

TEST_CASE("perturb_seed changes exactly one byte") {
  Rng data(9);
  RasterImage img(64, 64, 3);
  for (auto& b : img.bytes()) b = static_cast<std::uint8_t>(data.next_u32());
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const auto [out, change] = perturb_seed(img, rng);
    std::size_t diffs = 0;
    for (std::size_t i = 0; i < img.size(); ++i) diffs += img.bytes()[i] != out.bytes()[i];
    CHECK(diffs == 1);
    CHECK(change.old_value != change.new_value);
    CHECK(out.at(change.x, change.y, change.channel) == change.new_value);
    CHECK(img.at(change.x, change.y, change.channel) == change.old_value);
  }
  check_error(ErrorCode::EmptyInput, [] {
    Rng rng(0);
    perturb_seed(RasterImage(), rng);
  });
}

TEST_CASE(".dkey round trip and corruption") {
  Rng rng(5);
  const auto k = random_key(7, 5, rng);
  const auto path = scratch("k.dkey");
  save_key(path, k);
  CHECK(load_key(path) == k);
  CHECK(io::read_file(path) == encode_key(k));

  auto bytes = encode_key(k);
  SUBCASE("payload bit flip is an integrity error") {
    bytes[20] ^= 1;
    check_error(ErrorCode::IntegrityError, [&] { decode_key(bytes); });
  }
  SUBCASE("bad magic") {
    bytes[0] = 'X';
    check_error(ErrorCode::FormatError, [&] { decode_key(bytes); });
  }
  SUBCASE("truncated") {
    bytes.resize(bytes.size() - 6);
    check_error(ErrorCode::FormatError, [&] { decode_key(bytes); });
  }
  SUBCASE("trailing bytes") {
    bytes.push_back(0);
    check_error(ErrorCode::FormatError, [&] { decode_key(bytes); });
  }
}

TEST_CASE("PNG export is lossless") {
  Rng rng(6);
  const auto k = random_key(9, 4, rng);
  const auto path = scratch("k.png");
  export_key_png(path, k);
  CHECK(import_key_png(path) == k);
}
