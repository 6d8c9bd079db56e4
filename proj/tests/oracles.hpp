#pragma once

// Naive long-double reference implementations of the image metrics. They
// share no code with the library and use different formulas where possible
// (one-pass raw moments instead of centered sums, per-pixel indexing instead
// of flat scans).

#include <cmath>
#include <map>
#include <span>
#include <vector>

#include "dkg/image.hpp"
#include "dkg/rng.hpp"

namespace dkg::oracle {

inline double entropy(std::span<const std::uint8_t> bytes) {
  std::map<int, long> counts;
  for (auto b : bytes) ++counts[b];
  long double h = 0;
  for (const auto& [v, c] : counts) {
    const long double p = static_cast<long double>(c) / bytes.size();
    h += p * std::log2(1.0L / p);
  }
  return static_cast<double>(h);
}

template <typename Fn>
inline long double sum_positions(const RasterImage& a, Fn&& fn) {
  long double s = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      for (int c = 0; c < a.channels(); ++c) s += fn(x, y, c);
    }
  }
  return s;
}

inline double npcr(const RasterImage& a, const RasterImage& b) {
  const auto d = sum_positions(a, [&](int x, int y, int c) { return a.at(x, y, c) == b.at(x, y, c) ? 0.0L : 1.0L; });
  return static_cast<double>(100.0L * d / a.size());
}

inline double uaci(const RasterImage& a, const RasterImage& b) {
  const auto d = sum_positions(a, [&](int x, int y, int c) {
    return std::fabs(static_cast<long double>(a.at(x, y, c)) - b.at(x, y, c)) / 255.0L;
  });
  return static_cast<double>(100.0L * d / a.size());
}

inline double mse(const RasterImage& a, const RasterImage& b) {
  const auto d = sum_positions(a, [&](int x, int y, int c) {
    const long double e = static_cast<long double>(a.at(x, y, c)) - b.at(x, y, c);
    return e * e;
  });
  return static_cast<double>(d / a.size());
}

inline double ssim(const RasterImage& a, const RasterImage& b) {
  const long double c1 = 6.5025L, c2 = 58.5225L;  // (0.01*255)^2, (0.03*255)^2
  const long double n = static_cast<long double>(a.width()) * a.height();
  long double total = 0;
  for (int c = 0; c < a.channels(); ++c) {
    long double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (int y = 0; y < a.height(); ++y) {
      for (int x = 0; x < a.width(); ++x) {
        const long double u = a.at(x, y, c), v = b.at(x, y, c);
        sx += u;
        sy += v;
        sxx += u * u;
        syy += v * v;
        sxy += u * v;
      }
    }
    const long double mx = sx / n, my = sy / n;
    const long double vx = sxx / n - mx * mx, vy = syy / n - my * my, cov = sxy / n - mx * my;
    total += (2 * mx * my + c1) * (2 * cov + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
  }
  return static_cast<double>(total / a.channels());
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  const long double n = x.size();
  long double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += static_cast<long double>(x[i]) * x[i];
    syy += static_cast<long double>(y[i]) * y[i];
    sxy += static_cast<long double>(x[i]) * y[i];
  }
  const long double cov = sxy / n - (sx / n) * (sy / n);
  const long double dx = sxx / n - (sx / n) * (sx / n);
  const long double dy = syy / n - (sy / n) * (sy / n);
  return static_cast<double>(cov / std::sqrt(dx * dy));
}

inline RasterImage random_image(int w, int h, int channels, Rng& rng) {
  RasterImage img(w, h, channels);
  for (auto& b : img.bytes()) b = static_cast<std::uint8_t>(rng.next_u64() >> 56);
  return img;
}

}  // namespace dkg::oracle
