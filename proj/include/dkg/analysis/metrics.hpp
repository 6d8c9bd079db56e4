#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dkg/image.hpp"

namespace dkg::analysis {

struct Histogram256 {
  std::array<std::uint64_t, 256> counts{};
  std::uint64_t total = 0;

  std::array<double, 256> frequencies() const noexcept;
};

Histogram256 histogram(std::span<const std::uint8_t> bytes);

/// Shannon entropy in bits per byte. Throws EmptyInput on no data.
double entropy(std::span<const std::uint8_t> bytes);
double entropy(const Histogram256& h);

struct DiffMetrics {
  double npcr = 0.0;  // percent of positions that differ
  double uaci = 0.0;  // mean |a-b| / 255, percent
};

struct SimilarityMetrics {
  double mse = 0.0;
  double ssim = 0.0;
};

/// All four compare every byte position of two equally sized images and
/// throw DimensionMismatch otherwise.
double npcr(const RasterImage& a, const RasterImage& b);
double uaci(const RasterImage& a, const RasterImage& b);
double mse(const RasterImage& a, const RasterImage& b);
/// Single-window SSIM per channel, averaged over channels.
double ssim(const RasterImage& a, const RasterImage& b);

DiffMetrics diff_metrics(const RasterImage& a, const RasterImage& b);
SimilarityMetrics similarity(const RasterImage& a, const RasterImage& b);

enum class Direction { horizontal, vertical, diagonal };
std::string_view to_string(Direction d) noexcept;

inline constexpr std::size_t kCorrelationSamples = 256;

struct PixelPairs {
  std::vector<double> first;   // anchor values
  std::vector<double> second;  // neighbor values
};

/// `samples` anchors drawn uniformly with replacement from the positions
/// that have a neighbor in `direction`, with their neighbors, in one channel.
PixelPairs adjacent_pairs(const RasterImage& image, Direction direction, std::size_t samples, std::uint64_t seed,
                          int channel = 0);

/// cov(x,y) / sqrt(D(x) D(y)) with population moments. Throws
/// DegenerateSeries when either series is constant.
double pearson(std::span<const double> x, std::span<const double> y);

/// pearson(adjacent_pairs(...)).
double adjacent_correlation(const RasterImage& image, Direction direction, std::size_t samples = kCorrelationSamples,
                            std::uint64_t seed = 0, int channel = 0);

struct CorrelationReport {
  // nullopt when the sampled series was degenerate
  std::optional<double> horizontal;
  std::optional<double> vertical;
  std::optional<double> diagonal;
  std::size_t samples = kCorrelationSamples;
  std::uint64_t seed = 0;
  int channel = 0;

  std::optional<double> get(Direction d) const noexcept;
};

CorrelationReport correlation_report(const RasterImage& image, std::size_t samples = kCorrelationSamples,
                                     std::uint64_t seed = 0, int channel = 0);

void to_json(nlohmann::json& j, const Histogram256& h);
void to_json(nlohmann::json& j, const DiffMetrics& m);
void to_json(nlohmann::json& j, const SimilarityMetrics& m);
void to_json(nlohmann::json& j, const CorrelationReport& r);

/// "value,count" rows for plotting.
std::string histogram_csv(const Histogram256& h);

}  // namespace dkg::analysis
