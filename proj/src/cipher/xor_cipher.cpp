#include "dkg/cipher/xor_cipher.hpp"

#include <string>

#include "dkg/error.hpp"

namespace dkg::cipher {
namespace {

RasterImage apply(const RasterImage& in, const key::ImageKey& key) {
  if (in.channels() != 1 && in.channels() != 3) throw Error(ErrorCode::InvalidShape, "images must have 1 or 3 channels");
  RasterImage out = in.channels() == 1 ? to_rgb(in) : in;
  if (out.width() != key.width() || out.height() != key.height()) {
    // larger images are not served by repeating the keystream
    throw Error(ErrorCode::DimensionMismatch, "image is " + std::to_string(in.width()) + "x" +
                                                  std::to_string(in.height()) + " but the key is " +
                                                  std::to_string(key.width()) + "x" + std::to_string(key.height()));
  }
  auto bytes = out.bytes();
  const auto k = key.bytes();
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] ^= k[i];
  out.set_original_channels(in.original_channels());
  return out;
}

}  // namespace

RasterImage xor_encrypt(const RasterImage& plain, const key::ImageKey& key) { return apply(plain, key); }

RasterImage xor_decrypt(const RasterImage& cipher, const key::ImageKey& key) {
  RasterImage out = apply(cipher, key);
  if (out.original_channels() == 1) return first_channel(out);
  return out;
}

}  // namespace dkg::cipher
