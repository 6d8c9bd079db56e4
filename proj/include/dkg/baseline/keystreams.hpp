#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dkg/image.hpp"

namespace dkg::baseline {

/// How a logistic-map state in (0,1) becomes a byte.
enum class ChaosExtraction {
  digits,  // floor(x * 1e14) mod 256: low-order digits, near-uniform
  msb,     // floor(x * 256): top byte, inherits the map's arcsine density
};

struct ChaosSpec {
  double r = 3.99;
  double x0 = 0.3;
  int burn_in = 1000;
  ChaosExtraction extraction = ChaosExtraction::digits;
};

/// Throws InvalidChaosParams unless r is in (3.57, 4], x0 in (0,1), and x0
/// is not one of the collapsing orbits {0.25, 0.5, 0.75} at r = 4.
void validate(const ChaosSpec& spec);

/// Logistic-map states x_{burn_in+1}, ..., x_{burn_in+n}.
std::vector<double> logistic_sequence(const ChaosSpec& spec, std::size_t n);
std::vector<std::uint8_t> chaotic_stream(const ChaosSpec& spec, std::size_t n);

/// X_{n+1} = (a X_n + c) mod 2^32, emitting bits 31..24 of each new state.
struct LcgSpec {
  std::uint32_t a = 1664525;
  std::uint32_t c = 1013904223;
  std::uint32_t x0 = 0;
};
std::vector<std::uint8_t> lcg_stream(const LcgSpec& spec, std::size_t n);

/// MT19937 tempered words, little-endian.
std::vector<std::uint8_t> mt_stream(std::uint32_t seed, std::size_t n);

/// RC4 KSA + PRGA; key length 1..256.
std::vector<std::uint8_t> rc4_stream(std::span<const std::uint8_t> key, std::size_t n);

enum class KeystreamKind { chaotic, lcg, mt19937, rc4 };

std::string_view to_string(KeystreamKind k) noexcept;
KeystreamKind keystream_kind_from_string(std::string_view s);

struct KeystreamSpec {
  KeystreamKind kind = KeystreamKind::chaotic;
  std::size_t length = 196608;
  ChaosSpec chaos;
  LcgSpec lcg;
  std::uint32_t mt_seed = 5489;
  std::vector<std::uint8_t> rc4_key = {'K', 'e', 'y'};
};

std::vector<std::uint8_t> generate(const KeystreamSpec& spec);

void to_json(nlohmann::json& j, const KeystreamSpec& spec);
void from_json(const nlohmann::json& j, KeystreamSpec& spec);

// ---------------------------------------------------------------------------
// chaotic image encryption used to build the transformation domain

/// Pixel permutation (output pixel i takes input pixel permutation[i]) and
/// the XOR keystream applied after it.
struct DomainTransform {
  std::vector<std::uint32_t> permutation;
  std::vector<std::uint8_t> keystream;
};

/// Argsort of a chaotic sequence; ties keep index order.
std::vector<std::uint32_t> chaotic_permutation(const ChaosSpec& spec, std::size_t n);

/// The transform for image `index` of a set: both chaotic orbits start from
/// x0 values drawn from (master_seed, index), with `base` supplying r,
/// burn-in and extraction.
DomainTransform domain_transform(int width, int height, int channels, const ChaosSpec& base,
                                 std::uint64_t master_seed, std::size_t index);

RasterImage chaotic_encrypt(const RasterImage& image, const DomainTransform& t);
RasterImage chaotic_decrypt(const RasterImage& image, const DomainTransform& t);

std::vector<RasterImage> build_transformation_domain(const std::vector<RasterImage>& sources, const ChaosSpec& base,
                                                     std::uint64_t master_seed);
/// Undoes build_transformation_domain given the same seed and spec.
std::vector<RasterImage> invert_transformation_domain(const std::vector<RasterImage>& domain, const ChaosSpec& base,
                                                      std::uint64_t master_seed);

}  // namespace dkg::baseline
