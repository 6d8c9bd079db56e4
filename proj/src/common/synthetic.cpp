#include "dkg/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "dkg/error.hpp"
#include "dkg/rng.hpp"

namespace dkg::synthetic {

RasterImage phantom(int resolution, std::uint64_t seed) {
  if (resolution < 2) throw Error(ErrorCode::InvalidArgument, "phantom resolution must be >= 2");
  Rng rng(seed);
  struct Ellipse {
    double cx, cy, rx, ry, angle, level;
  };
  std::vector<Ellipse> shapes;
  const int count = 3 + static_cast<int>(rng.uniform_int(4));
  for (int i = 0; i < count; ++i) {
    shapes.push_back({0.2 + 0.6 * rng.uniform01(), 0.2 + 0.6 * rng.uniform01(), 0.08 + 0.3 * rng.uniform01(),
                      0.08 + 0.3 * rng.uniform01(), 3.14159 * rng.uniform01(), 40 + 120 * rng.uniform01()});
  }
  const double gx = 40 * (rng.uniform01() - 0.5);
  const double gy = 40 * (rng.uniform01() - 0.5);
  RasterImage img(resolution, resolution, 1);
  for (int y = 0; y < resolution; ++y) {
    for (int x = 0; x < resolution; ++x) {
      const double u = (x + 0.5) / resolution;
      const double v = (y + 0.5) / resolution;
      double value = 30 + gx * u + gy * v;
      for (const auto& e : shapes) {
        const double c = std::cos(e.angle), s = std::sin(e.angle);
        const double du = ((u - e.cx) * c + (v - e.cy) * s) / e.rx;
        const double dv = (-(u - e.cx) * s + (v - e.cy) * c) / e.ry;
        if (du * du + dv * dv <= 1.0) value += e.level * (1.0 - 0.5 * (du * du + dv * dv));
      }
      value += 4.0 * (rng.uniform01() - 0.5);
      img.at(x, y, 0) = static_cast<std::uint8_t>(std::clamp(std::lround(value), 0L, 255L));
    }
  }
  return to_rgb(img);
}

std::vector<RasterImage> phantom_set(int count, int resolution, std::uint64_t seed) {
  std::vector<RasterImage> out;
  for (int i = 0; i < count; ++i) out.push_back(phantom(resolution, Rng::derive(seed, i).next_u64()));
  return out;
}

}  // namespace dkg::synthetic
