#include "dkg/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dkg/error.hpp"

namespace dkg {

RasterImage::RasterImage(int width, int height, int channels)
    : RasterImage(width, height, channels,
                  std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(width, 0)) *
                                            std::max(height, 0) * std::max(channels, 0))) {}

RasterImage::RasterImage(int width, int height, int channels, std::vector<std::uint8_t> bytes)
    : width_(width), height_(height), channels_(channels), bytes_(std::move(bytes)) {
  if (width <= 0 || height <= 0 || (channels != 1 && channels != 3)) {
    throw Error(ErrorCode::InvalidShape, "image must be non-empty with 1 or 3 channels, got " +
                                             std::to_string(width) + "x" + std::to_string(height) + "x" +
                                             std::to_string(channels));
  }
  if (bytes_.size() != static_cast<std::size_t>(width) * height * channels) {
    throw Error(ErrorCode::InvalidShape, "pixel buffer length does not match W*H*C");
  }
}

RasterImage to_rgb(const RasterImage& image) {
  if (image.channels() == 3) return image;
  RasterImage out(image.width(), image.height(), 3);
  auto src = image.bytes();
  auto dst = out.bytes();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[3 * i] = dst[3 * i + 1] = dst[3 * i + 2] = src[i];
  }
  out.set_original_channels(image.original_channels());
  return out;
}

RasterImage first_channel(const RasterImage& image) {
  if (image.channels() == 1) return image;
  RasterImage out(image.width(), image.height(), 1);
  auto src = image.bytes();
  auto dst = out.bytes();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[3 * i];
  return out;
}

RasterImage resize_bilinear(const RasterImage& image, int width, int height) {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidShape, "resize target must be positive");
  if (image.width() == width && image.height() == height) return image;

  const int c = image.channels();
  RasterImage out(width, height, c);
  const double sx = static_cast<double>(image.width()) / width;
  const double sy = static_cast<double>(image.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(image.height() - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, image.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(image.width() - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, image.width() - 1);
      const double wx = fx - x0;
      for (int ch = 0; ch < c; ++ch) {
        const double top = image.at(x0, y0, ch) * (1.0 - wx) + image.at(x1, y0, ch) * wx;
        const double bottom = image.at(x0, y1, ch) * (1.0 - wx) + image.at(x1, y1, ch) * wx;
        const double v = top * (1.0 - wy) + bottom * wy;
        out.at(x, y, ch) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return out;
}

}  // namespace dkg
