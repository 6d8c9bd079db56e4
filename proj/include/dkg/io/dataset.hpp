#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dkg/image.hpp"

namespace dkg::io {

struct SkippedFile {
  std::string name;
  std::string reason;
};

struct ImageSet {
  std::vector<RasterImage> images;  // RGB, resolution x resolution
  std::vector<std::string> names;   // file names, same order as images
  std::vector<SkippedFile> skipped; // undecodable files
};

/// Decodes every .png/.pgm/.ppm/.pnm file directly in `dir` in byte-wise
/// lexicographic order of file name, replicates grayscale to RGB and resizes
/// bilinearly to resolution x resolution. Undecodable files are skipped and
/// listed. Throws IoError if `dir` is not a directory and EmptyDomain if
/// nothing decodes.
ImageSet ingest(const std::filesystem::path& dir, int resolution);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

/// Seeded uniform hold-out of round(fraction * count) indices, both lists
/// ascending. fraction must be in [0, 1).
Split split_validation(std::size_t count, double fraction, std::uint64_t seed);

void to_json(nlohmann::json& j, const SkippedFile& s);

}  // namespace dkg::io
