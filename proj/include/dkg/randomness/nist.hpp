#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace dkg::randomness {

/// Bits of a byte sequence, MSB first within each byte.
class BitStream {
 public:
  BitStream() = default;
  explicit BitStream(std::vector<std::uint8_t> bytes, std::string provenance = {});
  /// From individual 0/1 values; the last byte is zero-padded.
  static BitStream from_bits(std::span<const std::uint8_t> bits, std::string provenance = {});

  std::size_t size() const noexcept { return n_; }
  int operator[](std::size_t i) const noexcept { return (bytes_[i >> 3] >> (7 - (i & 7))) & 1; }
  const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }
  const std::string& provenance() const noexcept { return provenance_; }
  /// One 0/1 byte per bit.
  std::vector<std::uint8_t> unpack() const;

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t n_ = 0;
  std::string provenance_;
};

/// Throws EmptyInput on no bytes.
BitStream to_bitstream(std::span<const std::uint8_t> bytes, std::string provenance = {});

/// Regularized upper incomplete gamma Q(a, x) = Γ(a, x) / Γ(a).
double igamc(double a, double x);

inline constexpr double kAlpha = 0.01;

struct PValueResult {
  std::string test;
  nlohmann::json parameters;
  nlohmann::json statistics;
  double p_value = 0.0;          // the single p-value, or the minimum over states/templates
  std::vector<double> p_values;  // per state (excursions) or per template (full sweep)
  bool pass = false;             // every reported p-value >= kAlpha
  std::optional<std::string> error;    // degenerate input: the test could not be evaluated
  std::optional<std::string> warning;  // evaluated, but outside recommended conditions
};

void to_json(nlohmann::json& j, const PValueResult& r);

struct NistParams {
  int template_length = 9;
  std::string template_bits = "000000001";
  int template_blocks = 8;
  bool all_templates = false;  // sweep every aperiodic template of the given length
  int matrix_rows = 32;
  int matrix_cols = 32;
  int maurer_l = 7;
  int maurer_q = 1280;
  int excursions_min_cycles = 500;
};

void to_json(nlohmann::json& j, const NistParams& p);
/// Missing keys keep defaults; unknown keys are rejected.
void from_json(const nlohmann::json& j, NistParams& p);

/// Templates of length m that cannot overlap a shifted copy of themselves,
/// in increasing numeric order.
std::vector<std::string> aperiodic_templates(int m);

PValueResult non_overlapping_template(const BitStream& bits, const NistParams& params = {});
PValueResult binary_matrix_rank(const BitStream& bits, const NistParams& params = {});
PValueResult maurers_universal(const BitStream& bits, const NistParams& params = {});
/// Per-state p-values for x in -9..-1, 1..9 (in that order). Throws NoCycles
/// when the walk never returns to zero.
PValueResult random_excursions_variant(const BitStream& bits, const NistParams& params = {});

/// Rank over GF(2) of a rows x cols matrix filled row-major from `bits`.
int gf2_rank(std::span<const std::uint8_t> bits, int rows, int cols);
/// Probability that a random rows x cols binary matrix has rank r.
double rank_probability(int r, int rows, int cols);

struct MaurerConstants {
  double expected;
  double variance;
};
MaurerConstants maurer_constants(int l);

/// All four tests; InsufficientData and NoCycles become failed entries with
/// `error` set instead of aborting the battery.
std::vector<PValueResult> run_battery(const BitStream& bits, const NistParams& params = {});

}  // namespace dkg::randomness
