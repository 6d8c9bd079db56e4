#include "dkg/key/image_key.hpp"

#include <string>

#include "dkg/binary.hpp"
#include "dkg/codec.hpp"
#include "dkg/error.hpp"

namespace dkg::key {
namespace {

constexpr char kMagic[4] = {'D', 'K', 'E', 'Y'};

}  // namespace

ImageKey::ImageKey(int width, int height, std::vector<std::uint8_t> bytes)
    : width_(width), height_(height), bytes_(std::move(bytes)) {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidShape, "key dimensions must be positive");
  if (bytes_.size() != static_cast<std::size_t>(width) * height * kChannels) {
    throw Error(ErrorCode::InvalidShape, "key payload must hold W*H*3 bytes");
  }
}

ImageKey ImageKey::from_image(const RasterImage& image) {
  const RasterImage rgb = to_rgb(image);
  return ImageKey(rgb.width(), rgb.height(), std::vector<std::uint8_t>(rgb.bytes().begin(), rgb.bytes().end()));
}

RasterImage ImageKey::to_image() const { return RasterImage(width_, height_, kChannels, bytes_); }

Quadruple quadruple_view(const ImageKey& key, std::size_t index) {
  if (index >= key.size()) {
    throw Error(ErrorCode::OutOfRange, "key index " + std::to_string(index) + " outside [0, " +
                                           std::to_string(key.size()) + ")");
  }
  const int channel = static_cast<int>(index % ImageKey::kChannels);
  const std::size_t pixel = index / ImageKey::kChannels;
  return {key.bytes()[index], static_cast<int>(pixel % key.width()), static_cast<int>(pixel / key.width()), channel};
}

std::size_t quadruple_index(const ImageKey& key, int x, int y, int channel) {
  if (x < 0 || x >= key.width() || y < 0 || y >= key.height() || channel < 0 || channel >= ImageKey::kChannels) {
    throw Error(ErrorCode::OutOfRange, "quadruple coordinates outside the key");
  }
  return (static_cast<std::size_t>(y) * key.width() + x) * ImageKey::kChannels + channel;
}

KeySpaceReport keyspace(int resolution) {
  if (resolution < 1) throw Error(ErrorCode::InvalidArgument, "resolution must be >= 1");
  const std::uint64_t exponent = 3ULL * resolution * resolution;
  return {resolution, 256, exponent, 8 * exponent};
}

std::pair<RasterImage, PixelChange> perturb_seed(const RasterImage& image, Rng& rng) {
  if (image.empty()) throw Error(ErrorCode::EmptyInput, "cannot perturb an empty image");
  RasterImage out = image;
  const std::size_t index = rng.uniform_int(image.size());
  const std::uint8_t old_value = image.bytes()[index];
  // a uniform draw over the 255 values different from the old one
  const auto shift = static_cast<std::uint8_t>(1 + rng.uniform_int(255));
  const auto new_value = static_cast<std::uint8_t>(old_value + shift);
  out.bytes()[index] = new_value;
  const std::size_t pixel = index / image.channels();
  return {std::move(out),
          {static_cast<int>(pixel % image.width()), static_cast<int>(pixel / image.width()),
           static_cast<int>(index % image.channels()), old_value, new_value}};
}

std::vector<std::uint8_t> encode_key(const ImageKey& key) {
  io::ByteWriter w;
  w.put_string(std::string_view(kMagic, 4));
  w.put_u32(static_cast<std::uint32_t>(key.width()));
  w.put_u32(static_cast<std::uint32_t>(key.height()));
  w.put_u8(ImageKey::kChannels);
  w.put_bytes(key.bytes());
  w.put_u32(io::crc32(w.bytes()));
  return w.take();
}

ImageKey decode_key(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  if (r.string(4) != std::string_view(kMagic, 4)) throw Error(ErrorCode::FormatError, "not a .dkey file (bad magic)");
  const std::uint32_t w = r.u32();
  const std::uint32_t h = r.u32();
  const std::uint8_t c = r.u8();
  if (c != ImageKey::kChannels || w == 0 || h == 0 || w > 65536 || h > 65536) {
    throw Error(ErrorCode::FormatError, "bad .dkey header");
  }
  auto payload = r.take(static_cast<std::size_t>(w) * h * c);
  const std::size_t body = r.position();
  const std::uint32_t crc = r.u32();
  if (r.remaining() != 0) throw Error(ErrorCode::FormatError, "trailing bytes after .dkey payload");
  if (crc != io::crc32(bytes.first(body))) throw Error(ErrorCode::IntegrityError, ".dkey CRC mismatch");
  return ImageKey(static_cast<int>(w), static_cast<int>(h), std::vector<std::uint8_t>(payload.begin(), payload.end()));
}

void save_key(const std::filesystem::path& path, const ImageKey& key) { io::write_file(path, encode_key(key)); }

ImageKey load_key(const std::filesystem::path& path) { return decode_key(io::read_file(path)); }

void export_key_png(const std::filesystem::path& path, const ImageKey& key) { io::write_png(path, key.to_image()); }

ImageKey import_key_png(const std::filesystem::path& path) { return ImageKey::from_image(io::read_image(path)); }

}  // namespace dkg::key
