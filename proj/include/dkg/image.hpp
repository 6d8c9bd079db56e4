#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dkg {

/// Decoded 8-bit raster, row-major, channels interleaved per pixel.
class RasterImage {
 public:
  RasterImage() = default;
  RasterImage(int width, int height, int channels);
  RasterImage(int width, int height, int channels, std::vector<std::uint8_t> bytes);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return bytes_.size(); }
  bool empty() const noexcept { return bytes_.empty(); }

  std::span<const std::uint8_t> bytes() const noexcept { return bytes_; }
  std::span<std::uint8_t> bytes() noexcept { return bytes_; }

  std::size_t index(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }
  std::uint8_t at(int x, int y, int c) const noexcept { return bytes_[index(x, y, c)]; }
  std::uint8_t& at(int x, int y, int c) noexcept { return bytes_[index(x, y, c)]; }

  /// Channel count of the image this one was derived from (1 for a grayscale
  /// plaintext that was replicated to RGB before encryption).
  int original_channels() const noexcept { return original_channels_ ? original_channels_ : channels_; }
  void set_original_channels(int c) noexcept { original_channels_ = c; }

  friend bool operator==(const RasterImage& a, const RasterImage& b) noexcept {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.channels_ == b.channels_ &&
           a.bytes_ == b.bytes_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  int original_channels_ = 0;
  std::vector<std::uint8_t> bytes_;
};

/// Replicates a single-channel image into three identical channels.
RasterImage to_rgb(const RasterImage& image);

/// Collapses an RGB image to its first channel.
RasterImage first_channel(const RasterImage& image);

/// Bilinear resize with half-pixel centers; identity when the size already
/// matches.
RasterImage resize_bilinear(const RasterImage& image, int width, int height);

}  // namespace dkg
