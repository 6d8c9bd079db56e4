#include <doctest.h>

#include <algorithm>
#include <nlohmann/json.hpp>
#include <numeric>

#include "dkg/analysis/metrics.hpp"
#include "dkg/baseline/keystreams.hpp"
#include "support.hpp"

using namespace dkg;
using namespace dkg::baseline;
using dkg::test::check_error;

namespace {

constexpr std::size_t kTableLength = 196608;

RasterImage gradient_image(int w, int h) {
  RasterImage img(w, h, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      img.at(x, y, 0) = static_cast<std::uint8_t>(x);
      img.at(x, y, 1) = static_cast<std::uint8_t>(y);
      img.at(x, y, 2) = static_cast<std::uint8_t>((x + y) / 2);
    }
  }
  return img;
}

}  // namespace

TEST_CASE("logistic map single step") {
  ChaosSpec s;
  s.r = 3.99;
  s.x0 = 0.5;
  s.burn_in = 0;
  CHECK(logistic_sequence(s, 1)[0] == doctest::Approx(0.9975).epsilon(1e-15));
}

TEST_CASE("chaotic stream parameter validation") {
  auto with = [](double r, double x0) {
    ChaosSpec s;
    s.r = r;
    s.x0 = x0;
    return s;
  };
  check_error(ErrorCode::InvalidChaosParams, [&] { chaotic_stream(with(3.5, 0.3), 8); });
  check_error(ErrorCode::InvalidChaosParams, [&] { chaotic_stream(with(4.01, 0.3), 8); });
  check_error(ErrorCode::InvalidChaosParams, [&] { chaotic_stream(with(3.99, 0.0), 8); });
  check_error(ErrorCode::InvalidChaosParams, [&] { chaotic_stream(with(3.99, 1.0), 8); });
  for (double x0 : {0.25, 0.5, 0.75}) {
    check_error(ErrorCode::InvalidChaosParams, [&] { chaotic_stream(with(4.0, x0), 8); });
  }
  CHECK_NOTHROW(chaotic_stream(with(3.99, 0.5), 8));
  CHECK_NOTHROW(chaotic_stream(with(4.0, 0.3), 8));
}

TEST_CASE("chaotic stream is reproducible and near-uniform") {
  ChaosSpec s;
  const auto a = chaotic_stream(s, kTableLength);
  CHECK(a == chaotic_stream(s, kTableLength));
  CHECK(analysis::entropy(a) >= 7.99);
  // the top-byte extraction inherits the logistic map's skewed density
  s.extraction = ChaosExtraction::msb;
  const double msb = analysis::entropy(chaotic_stream(s, kTableLength));
  CHECK(msb < 7.9);
  CHECK(msb > 7.5);
}

TEST_CASE("LCG recurrence and high-byte output") {
  const auto b = lcg_stream({}, 2);
  CHECK(b[0] == 60);  // 1013904223 >> 24
  CHECK(b[1] == ((1664525u * 1013904223u + 1013904223u) >> 24));
  CHECK(analysis::entropy(lcg_stream({}, kTableLength)) >= 7.99);
}

TEST_CASE("MT19937 reference outputs") {
  const auto b = mt_stream(5489, 4 * 10000);
  auto word = [&](std::size_t i) {
    return std::uint32_t{b[4 * i]} | std::uint32_t{b[4 * i + 1]} << 8 | std::uint32_t{b[4 * i + 2]} << 16 |
           std::uint32_t{b[4 * i + 3]} << 24;
  };
  CHECK(word(0) == 3499211612u);
  CHECK(word(9999) == 4123659995u);
  CHECK(mt_stream(5489, 7) == std::vector<std::uint8_t>(b.begin(), b.begin() + 7));
  CHECK(analysis::entropy(mt_stream(5489, kTableLength)) >= 7.99);
}

TEST_CASE("RC4 published vectors") {
  auto rc4 = [](std::string_view key, std::size_t n) {
    return rc4_stream(std::span(reinterpret_cast<const std::uint8_t*>(key.data()), key.size()), n);
  };
  CHECK(rc4("Key", 4) == std::vector<std::uint8_t>{0xEB, 0x9F, 0x77, 0x81});
  CHECK(rc4("Wiki", 4) == std::vector<std::uint8_t>{0x60, 0x44, 0xDB, 0x6D});
  CHECK(rc4("Secret", 4) == std::vector<std::uint8_t>{0x04, 0xD4, 0x6B, 0x05});
  check_error(ErrorCode::InvalidKey, [] { rc4_stream({}, 4); });
  CHECK(analysis::entropy(rc4("Key", kTableLength)) >= 7.99);
}

TEST_CASE("keystream spec JSON and dispatch") {
  for (auto kind : {KeystreamKind::chaotic, KeystreamKind::lcg, KeystreamKind::mt19937, KeystreamKind::rc4}) {
    KeystreamSpec s;
    s.kind = kind;
    s.length = 64;
    const nlohmann::json j = s;
    const auto back = j.get<KeystreamSpec>();
    CHECK(generate(back) == generate(s));
  }
  check_error(ErrorCode::InvalidArgument, [] { nlohmann::json{{"kind", "rsa"}}.get<KeystreamSpec>(); });
}

TEST_CASE("chaotic permutation is a bijection") {
  const auto p = chaotic_permutation({}, 4096);
  auto sorted = p;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::uint32_t> ids(4096);
  std::iota(ids.begin(), ids.end(), 0u);
  CHECK(sorted == ids);
}

TEST_CASE("transformation domain is invertible and high-entropy") {
  std::vector<RasterImage> src = {gradient_image(256, 256), gradient_image(64, 64)};
  RasterImage gray(32, 32, 1);
  for (std::size_t i = 0; i < gray.size(); ++i) gray.bytes()[i] = static_cast<std::uint8_t>(i / 7);
  src.push_back(gray);
  const auto domain = build_transformation_domain(src, {}, 99);
  REQUIRE(domain.size() == src.size());
  CHECK(analysis::entropy(domain[0].bytes()) >= 7.9);
  CHECK(invert_transformation_domain(domain, {}, 99) == src);
  CHECK(build_transformation_domain(src, {}, 99) == domain);
  CHECK_FALSE(build_transformation_domain(src, {}, 100)[0] == domain[0]);
  check_error(ErrorCode::EmptyDomain, [] { build_transformation_domain({}, {}, 1); });
}
