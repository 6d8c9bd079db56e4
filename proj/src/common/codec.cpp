#include "dkg/codec.hpp"

#include <png.h>
#include <zlib.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>

#include "dkg/error.hpp"

namespace dkg::io {
namespace {

constexpr const char* kChannelsTag = "dkg-original-channels";

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return f;
}

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

// libpng reports errors through longjmp. The decode/encode cores below keep
// only trivially destructible locals between setjmp and the last libpng call.
struct PngDecoded {
  int width = 0;
  int height = 0;
  int channels = 0;
  int original_channels = 0;
  std::vector<std::uint8_t> bytes;
};

bool decode_png_core(std::FILE* fp, PngDecoded& out, char* message) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::snprintf(message, 128, "corrupt PNG stream");
    return false;
  }
  png_init_io(png, fp);
  png_read_info(png, info);

  png_uint_32 w = 0, h = 0;
  int bit_depth = 0, color_type = 0;
  png_get_IHDR(png, info, &w, &h, &bit_depth, &color_type, nullptr, nullptr, nullptr);
  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  const int passes = png_set_interlace_handling(png);
  png_read_update_info(png, info);

  const int channels = png_get_channels(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  if ((channels != 1 && channels != 3) || rowbytes != static_cast<std::size_t>(w) * channels) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::snprintf(message, 128, "unsupported PNG layout");
    return false;
  }
  out.width = static_cast<int>(w);
  out.height = static_cast<int>(h);
  out.channels = channels;
  out.bytes.resize(rowbytes * h);
  for (int pass = 0; pass < passes; ++pass) {
    for (png_uint_32 y = 0; y < h; ++y) png_read_row(png, out.bytes.data() + y * rowbytes, nullptr);
  }
  png_read_end(png, info);

  png_textp text = nullptr;
  int num_text = 0;
  if (png_get_text(png, info, &text, &num_text) > 0) {
    for (int i = 0; i < num_text; ++i) {
      if (std::strcmp(text[i].key, kChannelsTag) == 0) out.original_channels = std::atoi(text[i].text);
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

bool encode_png_core(std::FILE* fp, const RasterImage& image, png_bytep* rows, char* channels_text) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, image.width(), image.height(), 8,
               image.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  if (channels_text) {
    png_text text{};
    text.compression = PNG_TEXT_COMPRESSION_NONE;
    text.key = const_cast<char*>(kChannelsTag);
    text.text = channels_text;
    png_set_text(png, info, &text, 1);
  }
  png_write_info(png, info);
  png_write_image(png, rows);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

RasterImage read_png(const std::filesystem::path& path) {
  auto fp = open_file(path, "rb");
  PngDecoded decoded;
  char message[128] = "cannot initialise libpng";
  if (!decode_png_core(fp.get(), decoded, message)) {
    throw Error(ErrorCode::FormatError, path.string() + ": " + message);
  }
  RasterImage image(decoded.width, decoded.height, decoded.channels, std::move(decoded.bytes));
  if (decoded.original_channels == 1 || decoded.original_channels == 3) {
    image.set_original_channels(decoded.original_channels);
  }
  return image;
}

// Netpbm header token reader that skips '#' comments and records our tag.
struct PnmHeader {
  std::size_t pos = 2;
  int original_channels = 0;

  long next_int(std::span<const std::uint8_t> data) {
    for (;;) {
      while (pos < data.size() && std::isspace(data[pos])) ++pos;
      if (pos < data.size() && data[pos] == '#') {
        const std::size_t start = pos;
        while (pos < data.size() && data[pos] != '\n') ++pos;
        std::string comment(reinterpret_cast<const char*>(data.data()) + start, pos - start);
        const auto tag = comment.find(kChannelsTag);
        if (tag != std::string::npos) {
          original_channels = std::atoi(comment.c_str() + tag + std::strlen(kChannelsTag));
        }
        continue;
      }
      break;
    }
    if (pos >= data.size() || !std::isdigit(data[pos])) throw Error(ErrorCode::FormatError, "bad PNM header");
    long v = 0;
    while (pos < data.size() && std::isdigit(data[pos])) {
      v = v * 10 + (data[pos++] - '0');
      if (v > 1'000'000) throw Error(ErrorCode::FormatError, "PNM dimension too large");
    }
    return v;
  }
};

RasterImage read_pnm(std::span<const std::uint8_t> data) {
  const int channels = data[1] == '5' ? 1 : 3;
  PnmHeader header;
  const long w = header.next_int(data);
  const long h = header.next_int(data);
  const long maxval = header.next_int(data);
  if (maxval != 255) throw Error(ErrorCode::FormatError, "only maxval 255 PNM is supported");
  ++header.pos;  // single whitespace before the raster
  const std::size_t n = static_cast<std::size_t>(w) * h * channels;
  if (w <= 0 || h <= 0 || header.pos + n > data.size()) throw Error(ErrorCode::FormatError, "truncated PNM");
  std::vector<std::uint8_t> bytes(data.begin() + header.pos, data.begin() + header.pos + n);
  RasterImage image(static_cast<int>(w), static_cast<int>(h), channels, std::move(bytes));
  if (header.original_channels == 1 || header.original_channels == 3) {
    image.set_original_channels(header.original_channels);
  }
  return image;
}

}  // namespace

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes) noexcept {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks for very large buffers
  std::size_t off = 0;
  while (off < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
    crc = ::crc32(crc, bytes.data() + off, chunk);
    off += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

RasterImage read_image(const std::filesystem::path& path) {
  const auto head = [&] {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::array<char, 8> b{};
    in.read(b.data(), b.size());
    return std::string(b.data(), static_cast<std::size_t>(in.gcount()));
  }();
  if (head.size() >= 8 && png_sig_cmp(reinterpret_cast<png_const_bytep>(head.data()), 0, 8) == 0) {
    return read_png(path);
  }
  if (head.size() >= 2 && head[0] == 'P' && (head[1] == '5' || head[1] == '6')) {
    const auto data = read_file(path);
    return read_pnm(data);
  }
  throw Error(ErrorCode::FormatError, path.string() + ": not a PNG/PGM/PPM file");
}

void write_png(const std::filesystem::path& path, const RasterImage& image) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto fp = open_file(path, "wb");
  const std::size_t stride = static_cast<std::size_t>(image.width()) * image.channels();
  std::vector<png_bytep> rows(image.height());
  auto* base = const_cast<std::uint8_t*>(image.bytes().data());
  for (int y = 0; y < image.height(); ++y) rows[y] = base + y * stride;
  char channels_text[4] = {0};
  const bool tagged = image.original_channels() != image.channels();
  if (tagged) std::snprintf(channels_text, sizeof channels_text, "%d", image.original_channels());
  if (!encode_png_core(fp.get(), image, rows.data(), tagged ? channels_text : nullptr)) {
    throw Error(ErrorCode::IoError, "PNG encoding failed for " + path.string());
  }
}

void write_pnm(const std::filesystem::path& path, const RasterImage& image) {
  std::string header = image.channels() == 1 ? "P5\n" : "P6\n";
  if (image.original_channels() != image.channels()) {
    header += "# " + std::string(kChannelsTag) + " " + std::to_string(image.original_channels()) + "\n";
  }
  header += std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.insert(bytes.end(), image.bytes().begin(), image.bytes().end());
  write_file(path, bytes);
}

void write_image(const std::filesystem::path& path, const RasterImage& image) {
  const std::string ext = lower_extension(path);
  if (ext == ".png") return write_png(path, image);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return write_pnm(path, image);
  throw Error(ErrorCode::FormatError, "unsupported output extension '" + ext + "'");
}

}  // namespace dkg::io
