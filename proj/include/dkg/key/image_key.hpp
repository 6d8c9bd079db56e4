#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dkg/image.hpp"
#include "dkg/rng.hpp"

namespace dkg::key {

/// One entry of the key seen as a pixel-position-channel quadruple.
struct Quadruple {
  std::uint8_t value;
  int x;
  int y;
  int channel;

  friend bool operator==(const Quadruple&, const Quadruple&) = default;
};

/// Private key in image form: width x height x 3 bytes, row-major, channels
/// interleaved per pixel. Immutable once built.
class ImageKey {
 public:
  static constexpr int kChannels = 3;

  ImageKey(int width, int height, std::vector<std::uint8_t> bytes);
  static ImageKey from_image(const RasterImage& image);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return kChannels; }
  std::size_t size() const noexcept { return bytes_.size(); }
  std::span<const std::uint8_t> bytes() const noexcept { return bytes_; }

  RasterImage to_image() const;

  friend bool operator==(const ImageKey& a, const ImageKey& b) noexcept {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.bytes_ == b.bytes_;
  }

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> bytes_;
};

Quadruple quadruple_view(const ImageKey& key, std::size_t index);
std::size_t quadruple_index(const ImageKey& key, int x, int y, int channel);

struct KeySpaceReport {
  int resolution;
  int alphabet_size;           // 256 values per byte
  std::uint64_t exponent;      // number of key bytes: 3 * resolution^2
  std::uint64_t keyspace_log2; // 8 * exponent
};

KeySpaceReport keyspace(int resolution);

struct PixelChange {
  int x;
  int y;
  int channel;
  std::uint8_t old_value;
  std::uint8_t new_value;
};

/// Returns a copy of `image` with exactly one byte replaced by a uniformly
/// chosen different value.
std::pair<RasterImage, PixelChange> perturb_seed(const RasterImage& image, Rng& rng);

/// Canonical ".dkey" container: "DKEY", u32 W, u32 H, u8 C=3, payload, CRC32.
std::vector<std::uint8_t> encode_key(const ImageKey& key);
ImageKey decode_key(std::span<const std::uint8_t> bytes);

void save_key(const std::filesystem::path& path, const ImageKey& key);
ImageKey load_key(const std::filesystem::path& path);

/// Lossless PNG export / import of the same pixel content.
void export_key_png(const std::filesystem::path& path, const ImageKey& key);
ImageKey import_key_png(const std::filesystem::path& path);

}  // namespace dkg::key
