#pragma once

#include "dkg/image.hpp"
#include "dkg/key/image_key.hpp"

namespace dkg::cipher {

/// c_i = p_i XOR k_i over the canonical byte layout. A grayscale plaintext is
/// replicated to three channels first and the ciphertext remembers that its
/// original had one channel.
RasterImage xor_encrypt(const RasterImage& plain, const key::ImageKey& key);

/// The same XOR; a ciphertext tagged as originally grayscale decrypts back to
/// a single-channel image.
RasterImage xor_decrypt(const RasterImage& cipher, const key::ImageKey& key);

}  // namespace dkg::cipher
