#include "dkg/io/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "dkg/codec.hpp"
#include "dkg/error.hpp"
#include "dkg/rng.hpp"

namespace dkg::io {

namespace {

bool is_image_name(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

}  // namespace

ImageSet ingest(const std::filesystem::path& dir, int resolution) {
  if (resolution < 1) throw Error(ErrorCode::InvalidArgument, "resolution must be positive");
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw Error(ErrorCode::IoError, "not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_image_name(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const auto& a, const auto& b) { return a.filename().string() < b.filename().string(); });

  ImageSet set;
  for (const auto& f : files) {
    RasterImage img;
    try {
      img = read_image(f);
    } catch (const Error& e) {
      set.skipped.push_back({f.filename().string(), e.what()});
      continue;
    }
    if (img.channels() == 1) img = to_rgb(img);
    img = resize_bilinear(img, resolution, resolution);
    img.set_original_channels(3);
    set.images.push_back(std::move(img));
    set.names.push_back(f.filename().string());
  }
  if (set.images.empty()) throw Error(ErrorCode::EmptyDomain, "no decodable images in " + dir.string());
  return set;
}

Split split_validation(std::size_t count, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw Error(ErrorCode::InvalidArgument, "val fraction must be in [0,1)");
  const auto held = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(count)));
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = count; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_int(i)]);
  Split s;
  s.validation.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(held));
  s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(held), order.end());
  std::sort(s.validation.begin(), s.validation.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

void to_json(nlohmann::json& j, const SkippedFile& s) { j = {{"name", s.name}, {"reason", s.reason}}; }

}  // namespace dkg::io
