#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dkg/image.hpp"

namespace dkg::io {

/// Reads PNG, PGM (P5) or PPM (P6), 8-bit. The format is sniffed from the
/// file's magic bytes, not its extension.
RasterImage read_image(const std::filesystem::path& path);

/// Writes PNG or PGM/PPM depending on the extension (.png, .pgm, .ppm, .pnm).
/// A non-default original channel count is stored as a text chunk (PNG) or a
/// header comment (PNM) so decryption can restore grayscale output.
void write_image(const std::filesystem::path& path, const RasterImage& image);

void write_png(const std::filesystem::path& path, const RasterImage& image);
void write_pnm(const std::filesystem::path& path, const RasterImage& image);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

std::uint32_t crc32(std::span<const std::uint8_t> bytes) noexcept;

}  // namespace dkg::io
