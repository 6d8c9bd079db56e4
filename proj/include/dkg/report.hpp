#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "dkg/image.hpp"
#include "dkg/key/image_key.hpp"
#include "dkg/randomness/nist.hpp"

namespace dkg::report {

inline constexpr int kSchemaVersion = 1;

struct AnalysisOptions {
  randomness::NistParams nist;
  std::uint64_t seed = 0;  // correlation sampling
  std::size_t samples = 256;
  bool randomness = true;  // run the four bitstream tests
};

/// Common header of every emitted report: schema name and version, report
/// kind, the seed and configuration that produced it.
nlohmann::json envelope(std::string_view kind, std::uint64_t seed, const nlohmann::json& config);

/// {file, size, crc32} identifying an input by content.
nlohmann::json input_record(std::string_view name, std::span<const std::uint8_t> bytes);

/// Entropy, histogram and per-channel adjacent correlations of an image.
nlohmann::json image_statistics(const RasterImage& image, const AnalysisOptions& opts);

/// Image statistics plus key-space accounting and the randomness battery
/// over the row-major, MSB-first bitstream of the key bytes.
nlohmann::json key_analysis(const key::ImageKey& key, const AnalysisOptions& opts);

/// Statistics of both images, their NPCR/UACI and MSE/SSIM, and the battery
/// over the ciphertext bytes.
nlohmann::json cipher_analysis(const RasterImage& plain, const RasterImage& cipher, const AnalysisOptions& opts);

/// Entropy and battery for the chaotic, LCG, MT19937 and RC4 keystreams at
/// their default settings and the given length.
nlohmann::json baseline_comparison(std::size_t length, const AnalysisOptions& opts);

/// Histogram rows and correlation rows as CSV, for plotting.
std::string statistics_csv(const nlohmann::json& image_statistics);

}  // namespace dkg::report
