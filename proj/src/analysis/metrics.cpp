#include "dkg/analysis/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <vector>

#include <nlohmann/json.hpp>

#include "dkg/error.hpp"
#include "dkg/rng.hpp"

namespace dkg::analysis {

std::array<double, 256> Histogram256::frequencies() const noexcept {
  std::array<double, 256> f{};
  if (total == 0) return f;
  for (std::size_t i = 0; i < 256; ++i) f[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  return f;
}

Histogram256 histogram(std::span<const std::uint8_t> bytes) {
  Histogram256 h;
  for (auto b : bytes) ++h.counts[b];
  h.total = bytes.size();
  return h;
}

double entropy(const Histogram256& h) {
  if (h.total == 0) throw Error(ErrorCode::EmptyInput, "entropy of an empty sample");
  const double n = static_cast<double>(h.total);
  double e = 0.0;
  for (auto c : h.counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    e -= p * std::log2(p);
  }
  return e;
}

double entropy(std::span<const std::uint8_t> bytes) { return entropy(histogram(bytes)); }

namespace {

void require_same(const RasterImage& a, const RasterImage& b) {
  if (a.width() != b.width() || a.height() != b.height() || a.channels() != b.channels()) {
    throw Error(ErrorCode::DimensionMismatch,
                "images differ in size: " + std::to_string(a.width()) + "x" + std::to_string(a.height()) + "x" +
                    std::to_string(a.channels()) + " vs " + std::to_string(b.width()) + "x" +
                    std::to_string(b.height()) + "x" + std::to_string(b.channels()));
  }
  if (a.empty()) throw Error(ErrorCode::EmptyInput, "empty image");
}

}  // namespace

double npcr(const RasterImage& a, const RasterImage& b) {
  require_same(a, b);
  std::size_t diff = 0;
  for (std::size_t i = 0; i < a.size(); ++i) diff += a.bytes()[i] != b.bytes()[i];
  return 100.0 * static_cast<double>(diff) / static_cast<double>(a.size());
}

double uaci(const RasterImage& a, const RasterImage& b) {
  require_same(a, b);
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(int{a.bytes()[i]} - int{b.bytes()[i]});
  return 100.0 * static_cast<double>(sum) / (255.0 * static_cast<double>(a.size()));
}

double mse(const RasterImage& a, const RasterImage& b) {
  require_same(a, b);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a.bytes()[i]) - b.bytes()[i];
    sum += d * d;
  }
  return sum / static_cast<double>(a.size());
}

double ssim(const RasterImage& a, const RasterImage& b) {
  require_same(a, b);
  constexpr double c1 = (0.01 * 255) * (0.01 * 255);
  constexpr double c2 = (0.03 * 255) * (0.03 * 255);
  const int channels = a.channels();
  const std::size_t n = a.size() / channels;
  double total = 0.0;
  for (int c = 0; c < channels; ++c) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
      mx += a.bytes()[i * channels + c];
      my += b.bytes()[i * channels + c];
    }
    mx /= n;
    my /= n;
    double vx = 0, vy = 0, cov = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = a.bytes()[i * channels + c] - mx;
      const double dy = b.bytes()[i * channels + c] - my;
      vx += dx * dx;
      vy += dy * dy;
      cov += dx * dy;
    }
    vx /= n;
    vy /= n;
    cov /= n;
    total += ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
  }
  return total / channels;
}

DiffMetrics diff_metrics(const RasterImage& a, const RasterImage& b) { return {npcr(a, b), uaci(a, b)}; }

SimilarityMetrics similarity(const RasterImage& a, const RasterImage& b) { return {mse(a, b), ssim(a, b)}; }

std::string_view to_string(Direction d) noexcept {
  switch (d) {
    case Direction::horizontal: return "horizontal";
    case Direction::vertical: return "vertical";
    case Direction::diagonal: return "diagonal";
  }
  return "horizontal";
}

PixelPairs adjacent_pairs(const RasterImage& image, Direction direction, std::size_t samples, std::uint64_t seed,
                          int channel) {
  if (image.width() < 2 || image.height() < 2) {
    throw Error(ErrorCode::InvalidShape, "correlation needs an image of at least 2x2");
  }
  if (channel < 0 || channel >= image.channels()) throw Error(ErrorCode::OutOfRange, "channel out of range");
  const int dx = direction == Direction::vertical ? 0 : 1;
  const int dy = direction == Direction::horizontal ? 0 : 1;
  Rng rng(seed);
  PixelPairs p;
  p.first.resize(samples);
  p.second.resize(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    const int x = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(image.width() - dx)));
    const int y = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(image.height() - dy)));
    p.first[i] = image.at(x, y, channel);
    p.second[i] = image.at(x + dx, y + dy, channel);
  }
  return p;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::DimensionMismatch, "series lengths differ");
  if (x.size() < 2) throw Error(ErrorCode::InvalidArgument, "correlation needs at least 2 samples");
  const double n = static_cast<double>(x.size());
  double ex = 0, ey = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    ex += x[i];
    ey += y[i];
  }
  ex /= n;
  ey /= n;
  double dxx = 0, dyy = 0, cov = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dxx += (x[i] - ex) * (x[i] - ex);
    dyy += (y[i] - ey) * (y[i] - ey);
    cov += (x[i] - ex) * (y[i] - ey);
  }
  if (dxx == 0.0 || dyy == 0.0) throw Error(ErrorCode::DegenerateSeries, "a sampled series is constant");
  return std::clamp(cov / (std::sqrt(dxx) * std::sqrt(dyy)), -1.0, 1.0);
}

double adjacent_correlation(const RasterImage& image, Direction direction, std::size_t samples, std::uint64_t seed,
                            int channel) {
  const auto p = adjacent_pairs(image, direction, samples, seed, channel);
  try {
    return pearson(p.first, p.second);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateSeries) throw;
    throw Error(ErrorCode::DegenerateSeries,
                std::string(to_string(direction)) + " correlation: a sampled series is constant");
  }
}

std::optional<double> CorrelationReport::get(Direction d) const noexcept {
  switch (d) {
    case Direction::horizontal: return horizontal;
    case Direction::vertical: return vertical;
    case Direction::diagonal: return diagonal;
  }
  return std::nullopt;
}

CorrelationReport correlation_report(const RasterImage& image, std::size_t samples, std::uint64_t seed, int channel) {
  CorrelationReport r;
  r.samples = samples;
  r.seed = seed;
  r.channel = channel;
  auto one = [&](Direction d) -> std::optional<double> {
    try {
      // each direction draws from its own stream so reports are stable if
      // one direction is skipped
      return adjacent_correlation(image, d, samples, Rng::derive(seed, static_cast<std::uint64_t>(d)).next_u64(),
                                  channel);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateSeries) throw;
      return std::nullopt;
    }
  };
  r.horizontal = one(Direction::horizontal);
  r.vertical = one(Direction::vertical);
  r.diagonal = one(Direction::diagonal);
  return r;
}

void to_json(nlohmann::json& j, const Histogram256& h) {
  j = {{"total", h.total}, {"counts", h.counts}};
}

void to_json(nlohmann::json& j, const DiffMetrics& m) { j = {{"npcr", m.npcr}, {"uaci", m.uaci}}; }

void to_json(nlohmann::json& j, const SimilarityMetrics& m) { j = {{"mse", m.mse}, {"ssim", m.ssim}}; }

void to_json(nlohmann::json& j, const CorrelationReport& r) {
  auto value = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json("degenerate"); };
  j = {{"horizontal", value(r.horizontal)},
       {"vertical", value(r.vertical)},
       {"diagonal", value(r.diagonal)},
       {"samples", r.samples},
       {"seed", r.seed},
       {"channel", r.channel}};
}

std::string histogram_csv(const Histogram256& h) {
  std::string out = "value,count\n";
  for (std::size_t i = 0; i < 256; ++i) out += std::to_string(i) + "," + std::to_string(h.counts[i]) + "\n";
  return out;
}

}  // namespace dkg::analysis
