#include <doctest.h>

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <sodium.h>

#include "dkg/randomness/nist.hpp"
#include "support.hpp"

using namespace dkg;
using namespace dkg::randomness;
using dkg::test::check_error;

namespace {

BitStream crypto_bits(std::size_t bits, std::uint64_t trial) {
  std::array<unsigned char, randombytes_SEEDBYTES> seed{};
  for (int i = 0; i < 8; ++i) seed[i] = static_cast<unsigned char>(trial >> (8 * i));
  std::vector<std::uint8_t> bytes(bits / 8);
  randombytes_buf_deterministic(bytes.data(), bytes.size(), seed.data());
  return BitStream(std::move(bytes));
}

BitStream repeat_bits(std::string_view pattern, std::size_t n) {
  std::vector<std::uint8_t> b(n);
  for (std::size_t i = 0; i < n; ++i) b[i] = pattern[i % pattern.size()] == '1';
  return BitStream::from_bits(b);
}

}  // namespace

TEST_CASE("bit stream extraction") {
  const std::vector<std::uint8_t> one = {0xA5};
  const auto s = to_bitstream(one);
  CHECK(s.unpack() == std::vector<std::uint8_t>{1, 0, 1, 0, 0, 1, 0, 1});
  const std::vector<std::uint8_t> three = {1, 2, 3};
  const auto t = to_bitstream(three);
  CHECK(t.size() == 24);
  CHECK(BitStream::from_bits(t.unpack()).bytes() == three);
  check_error(ErrorCode::EmptyInput, [] { to_bitstream({}); });
}

TEST_CASE("igamc against boost") {
  for (double a : {0.5, 1.0, 2.0, 4.0, 9.0, 30.0, 150.0}) {
    for (double x : {1e-3, 0.1, 0.5, 1.0, 2.5, 4.0, 10.0, 25.0, 80.0, 200.0}) {
      const double expected = boost::math::gamma_q(a, x);
      INFO("a=" << a << " x=" << x);
      CHECK(std::abs(igamc(a, x) - expected) < 1e-10);
    }
  }
  CHECK(igamc(1.0, 0.0) == 1.0);
  CHECK(igamc(1.0, 3.0) == doctest::Approx(std::exp(-3.0)).epsilon(1e-13));
}

TEST_CASE("template test") {
  const NistParams p;
  CHECK((1024.0 - 9 + 1) / 512 == doctest::Approx(1.984375));
  const auto zeros = BitStream(std::vector<std::uint8_t>(125000, 0));
  const auto r = non_overlapping_template(zeros, p);
  CHECK(r.p_value < 0.01);
  CHECK_FALSE(r.pass);
  for (int w : r.statistics["W"]) CHECK(w == 0);
  CHECK(non_overlapping_template(crypto_bits(1'000'000, 1), p).p_value > 0.0);
  check_error(ErrorCode::InsufficientData, [] { non_overlapping_template(BitStream(std::vector<std::uint8_t>(10))); });
  // the NIST matching rule skips past a hit: 000000001000000001 holds two
  const auto w = repeat_bits("000000001", 9 * 8 * 8 * 8);
  CHECK(non_overlapping_template(w).statistics["W"][0] == 64);
}

TEST_CASE("aperiodic templates") {
  CHECK(aperiodic_templates(9).size() == 148);
  CHECK(aperiodic_templates(2) == std::vector<std::string>{"01", "10"});
  NistParams p;
  p.all_templates = true;
  const auto r = non_overlapping_template(crypto_bits(1'000'000, 2), p);
  CHECK(r.p_values.size() == 148);
}

TEST_CASE("GF(2) rank") {
  std::vector<std::uint8_t> identity(32 * 32, 0);
  for (int i = 0; i < 32; ++i) identity[i * 32 + i] = 1;
  CHECK(gf2_rank(identity, 32, 32) == 32);
  CHECK(gf2_rank(std::vector<std::uint8_t>(32 * 32, 0), 32, 32) == 0);
  CHECK(gf2_rank(std::vector<std::uint8_t>(32 * 32, 1), 32, 32) == 1);
  const std::vector<std::uint8_t> m = {1, 1, 0, 0, 1, 1, 1, 0, 1};  // row3 = row1 ^ row2
  CHECK(gf2_rank(m, 3, 3) == 2);
}

TEST_CASE("rank probabilities") {
  CHECK(rank_probability(32, 32, 32) == doctest::Approx(0.2888).epsilon(1e-3));
  CHECK(rank_probability(31, 32, 32) == doctest::Approx(0.5776).epsilon(1e-3));
  CHECK(1 - rank_probability(32, 32, 32) - rank_probability(31, 32, 32) == doctest::Approx(0.1336).epsilon(1e-3));
  double total = 0;
  for (int r = 0; r <= 5; ++r) total += rank_probability(r, 5, 5);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("matrix rank test") {
  CHECK_FALSE(binary_matrix_rank(BitStream(std::vector<std::uint8_t>(125000, 0))).pass);
  CHECK_FALSE(binary_matrix_rank(repeat_bits("01", 1'000'000)).pass);
  check_error(ErrorCode::InsufficientData,
              [] { binary_matrix_rank(BitStream(std::vector<std::uint8_t>(37 * 128, 0))); });
  CHECK(binary_matrix_rank(crypto_bits(1'000'000, 3)).parameters["N"] == 976);
}

TEST_CASE("Maurer's universal test") {
  CHECK(maurer_constants(7).expected == doctest::Approx(6.1962507));
  // one block repeated: every distance is 1
  const auto r = maurers_universal(repeat_bits("1011001", 1'000'006));
  CHECK(r.statistics["fn"].get<double>() == 0.0);
  CHECK(r.p_value < 1e-10);
  CHECK_FALSE(maurers_universal(repeat_bits("01", 1'000'000)).pass);
  check_error(ErrorCode::InsufficientData, [] { maurers_universal(BitStream(std::vector<std::uint8_t>(1000))); });
}

TEST_CASE("random excursions variant") {
  const auto alt = random_excursions_variant(repeat_bits("01", 10000));
  CHECK(alt.statistics["J"] == 5000);
  CHECK(alt.statistics["xi"]["-1"] == 5000);
  CHECK(alt.statistics["xi"]["1"] == 0);
  CHECK(alt.p_values.size() == 18);
  CHECK(alt.p_values[8] == 1.0);  // state -1: xi == J
  CHECK_FALSE(alt.pass);
  check_error(ErrorCode::NoCycles,
              [] { random_excursions_variant(BitStream(std::vector<std::uint8_t>(1000, 0))); });
  const auto short_walk = random_excursions_variant(crypto_bits(8000, 4));
  CHECK(short_walk.warning.has_value());
}

TEST_CASE("battery") {
  const auto zeros = BitStream(std::vector<std::uint8_t>(196608, 0));
  const auto r = run_battery(zeros);
  REQUIRE(r.size() == 4);
  int failed = 0;
  for (const auto& t : r) failed += !t.pass;
  CHECK(failed >= 3);
  CHECK(r[3].error.has_value());

  const auto good = crypto_bits(1'572'864, 5);
  const auto a = run_battery(good);
  const auto b = run_battery(good);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(a[i].p_value == b[i].p_value);
    CHECK(a[i].p_value >= 0.0);
    CHECK(a[i].p_value <= 1.0);
  }
}

TEST_CASE("NIST parameter overrides") {
  const auto p = nlohmann::json{{"maurer_l", 6}, {"maurer_q", 640}}.get<NistParams>();
  CHECK(p.maurer_l == 6);
  CHECK(p.matrix_rows == 32);
  check_error(ErrorCode::InvalidArgument, [] { nlohmann::json{{"block", 3}}.get<NistParams>(); });
  check_error(ErrorCode::InvalidArgument, [] {
    nlohmann::json{{"template_bits", "0001"}}.get<NistParams>();
  });
}
