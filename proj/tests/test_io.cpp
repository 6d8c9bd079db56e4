#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "dkg/codec.hpp"
#include "dkg/io/dataset.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace dkg;
using dkg::test::check_error;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "dkg_test_io" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("codecs round-trip") {
  const auto dir = fresh_dir("codec");
  Rng rng(1);
  for (const char* ext : {".png", ".pgm", ".ppm"}) {
    const int c = std::string(ext) == ".pgm" ? 1 : 3;
    const auto img = oracle::random_image(13, 7, c, rng);
    const auto path = dir / (std::string("img") + ext);
    io::write_image(path, img);
    CHECK(io::read_image(path) == img);
  }
  // the grayscale tag survives both container types
  auto gray = to_rgb(oracle::random_image(5, 5, 1, rng));
  for (const char* ext : {".png", ".ppm"}) {
    const auto path = dir / (std::string("gray") + ext);
    io::write_image(path, gray);
    CHECK(io::read_image(path).original_channels() == 1);
  }
  check_error(ErrorCode::IoError, [&] { io::read_image(dir / "missing.png"); });
}

TEST_CASE("bilinear resize") {
  Rng rng(2);
  const auto img = oracle::random_image(9, 9, 3, rng);
  CHECK(resize_bilinear(img, 9, 9) == img);
  RasterImage flat(8, 8, 1, std::vector<std::uint8_t>(64, 77));
  const auto small = resize_bilinear(flat, 3, 5);
  CHECK(small.width() == 3);
  CHECK(small.height() == 5);
  for (auto b : small.bytes()) CHECK(b == 77);
  // halving averages 2x2 blocks exactly under half-pixel centers
  RasterImage checker(2, 2, 1, {0, 100, 100, 200});
  CHECK(resize_bilinear(checker, 1, 1).bytes()[0] == 100);
}

TEST_CASE("ingest normalizes, orders and skips") {
  const auto dir = fresh_dir("ingest");
  Rng rng(3);
  const auto big_gray = oracle::random_image(64, 64, 1, rng);
  const auto exact_rgb = oracle::random_image(32, 32, 3, rng);
  io::write_image(dir / "b.pgm", big_gray);
  io::write_image(dir / "a.png", exact_rgb);
  io::write_image(dir / "C.ppm", oracle::random_image(16, 8, 3, rng));
  std::ofstream(dir / "broken.png") << "not a png";
  std::ofstream(dir / "notes.txt") << "ignored";

  const auto set = io::ingest(dir, 32);
  CHECK(set.names == std::vector<std::string>{"C.ppm", "a.png", "b.pgm"});
  REQUIRE(set.images.size() == 3);
  for (const auto& img : set.images) {
    CHECK(img.width() == 32);
    CHECK(img.height() == 32);
    CHECK(img.channels() == 3);
  }
  CHECK(set.images[1] == exact_rgb);
  const auto& g = set.images[2];
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      CHECK(g.at(x, y, 0) == g.at(x, y, 1));
      CHECK(g.at(x, y, 1) == g.at(x, y, 2));
    }
  }
  REQUIRE(set.skipped.size() == 1);
  CHECK(set.skipped[0].name == "broken.png");
  CHECK(io::ingest(dir, 32).images == set.images);
}

TEST_CASE("ingest errors") {
  const auto dir = fresh_dir("empty");
  check_error(ErrorCode::EmptyDomain, [&] { io::ingest(dir, 32); });
  std::ofstream(dir / "x.png") << "junk";
  check_error(ErrorCode::EmptyDomain, [&] { io::ingest(dir, 32); });
  check_error(ErrorCode::IoError, [&] { io::ingest(dir / "nope", 32); });
}

TEST_CASE("validation split") {
  const auto s = io::split_validation(20, 0.1, 4);
  CHECK(s.validation.size() == 2);
  CHECK(s.train.size() == 18);
  std::vector<bool> seen(20);
  for (auto i : s.train) seen[i] = true;
  for (auto i : s.validation) {
    CHECK_FALSE(seen[i]);
    seen[i] = true;
  }
  for (bool b : seen) CHECK(b);
  CHECK(io::split_validation(20, 0.1, 4).validation == s.validation);
  CHECK(io::split_validation(20, 0.0, 4).validation.empty());
  check_error(ErrorCode::InvalidArgument, [] { io::split_validation(5, 1.0, 0); });
}
