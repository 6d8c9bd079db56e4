#include "dkg/baseline/keystreams.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "dkg/error.hpp"
#include "dkg/rng.hpp"

namespace dkg::baseline {

void validate(const ChaosSpec& s) {
  if (!(s.r > 3.57 && s.r <= 4.0)) {
    throw Error(ErrorCode::InvalidChaosParams, "logistic r must lie in (3.57, 4], got " + std::to_string(s.r));
  }
  if (!(s.x0 > 0.0 && s.x0 < 1.0)) {
    throw Error(ErrorCode::InvalidChaosParams, "logistic x0 must lie in (0, 1), got " + std::to_string(s.x0));
  }
  if (s.r == 4.0 && (s.x0 == 0.25 || s.x0 == 0.5 || s.x0 == 0.75)) {
    throw Error(ErrorCode::InvalidChaosParams, "x0 = " + std::to_string(s.x0) + " falls onto a fixed point at r = 4");
  }
  if (s.burn_in < 0) throw Error(ErrorCode::InvalidChaosParams, "burn_in must be >= 0");
}

std::vector<double> logistic_sequence(const ChaosSpec& spec, std::size_t n) {
  validate(spec);
  double x = spec.x0;
  for (int i = 0; i < spec.burn_in; ++i) x = spec.r * x * (1.0 - x);
  std::vector<double> out(n);
  for (auto& v : out) {
    x = spec.r * x * (1.0 - x);
    v = x;
  }
  return out;
}

std::vector<std::uint8_t> chaotic_stream(const ChaosSpec& spec, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "keystream length must be >= 1");
  const auto xs = logistic_sequence(spec, n);
  std::vector<std::uint8_t> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (spec.extraction == ChaosExtraction::msb) {
      out[i] = static_cast<std::uint8_t>(std::min(255.0, std::floor(xs[i] * 256.0)));
    } else {
      out[i] = static_cast<std::uint8_t>(static_cast<std::uint64_t>(std::floor(xs[i] * 1e14)) & 0xFF);
    }
  }
  return out;
}

std::vector<std::uint8_t> lcg_stream(const LcgSpec& spec, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "keystream length must be >= 1");
  std::vector<std::uint8_t> out(n);
  std::uint32_t x = spec.x0;
  for (auto& b : out) {
    x = spec.a * x + spec.c;  // wraps mod 2^32
    b = static_cast<std::uint8_t>(x >> 24);
  }
  return out;
}

std::vector<std::uint8_t> mt_stream(std::uint32_t seed, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "keystream length must be >= 1");
  std::mt19937 mt(seed);
  std::vector<std::uint8_t> out(n);
  for (std::size_t i = 0; i < n; i += 4) {
    const std::uint32_t w = mt();
    for (std::size_t k = 0; k < 4 && i + k < n; ++k) out[i + k] = static_cast<std::uint8_t>(w >> (8 * k));
  }
  return out;
}

std::vector<std::uint8_t> rc4_stream(std::span<const std::uint8_t> key, std::size_t n) {
  if (key.empty() || key.size() > 256) throw Error(ErrorCode::InvalidKey, "RC4 key must be 1..256 bytes");
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "keystream length must be >= 1");
  std::array<std::uint8_t, 256> s;
  std::iota(s.begin(), s.end(), 0);
  for (std::size_t i = 0, j = 0; i < 256; ++i) {
    j = (j + s[i] + key[i % key.size()]) & 0xFF;
    std::swap(s[i], s[j]);
  }
  std::vector<std::uint8_t> out(n);
  std::size_t i = 0, j = 0;
  for (auto& b : out) {
    i = (i + 1) & 0xFF;
    j = (j + s[i]) & 0xFF;
    std::swap(s[i], s[j]);
    b = s[(s[i] + s[j]) & 0xFF];
  }
  return out;
}

std::string_view to_string(KeystreamKind k) noexcept {
  switch (k) {
    case KeystreamKind::chaotic: return "chaotic";
    case KeystreamKind::lcg: return "lcg";
    case KeystreamKind::mt19937: return "mt19937";
    case KeystreamKind::rc4: return "rc4";
  }
  return "chaotic";
}

KeystreamKind keystream_kind_from_string(std::string_view s) {
  for (auto k : {KeystreamKind::chaotic, KeystreamKind::lcg, KeystreamKind::mt19937, KeystreamKind::rc4}) {
    if (to_string(k) == s) return k;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown keystream kind '" + std::string(s) + "'");
}

std::vector<std::uint8_t> generate(const KeystreamSpec& spec) {
  switch (spec.kind) {
    case KeystreamKind::chaotic: return chaotic_stream(spec.chaos, spec.length);
    case KeystreamKind::lcg: return lcg_stream(spec.lcg, spec.length);
    case KeystreamKind::mt19937: return mt_stream(spec.mt_seed, spec.length);
    case KeystreamKind::rc4: return rc4_stream(spec.rc4_key, spec.length);
  }
  return {};
}

void to_json(nlohmann::json& j, const KeystreamSpec& s) {
  j = {{"kind", to_string(s.kind)}, {"length", s.length}};
  switch (s.kind) {
    case KeystreamKind::chaotic:
      j["r"] = s.chaos.r;
      j["x0"] = s.chaos.x0;
      j["burn_in"] = s.chaos.burn_in;
      j["extraction"] = s.chaos.extraction == ChaosExtraction::digits ? "digits" : "msb";
      break;
    case KeystreamKind::lcg:
      j["a"] = s.lcg.a;
      j["c"] = s.lcg.c;
      j["x0"] = s.lcg.x0;
      break;
    case KeystreamKind::mt19937: j["seed"] = s.mt_seed; break;
    case KeystreamKind::rc4: j["key"] = s.rc4_key; break;
  }
}

void from_json(const nlohmann::json& j, KeystreamSpec& s) {
  try {
    s = KeystreamSpec{};
    s.kind = keystream_kind_from_string(j.at("kind").get<std::string>());
    s.length = j.value("length", s.length);
    switch (s.kind) {
      case KeystreamKind::chaotic: {
        s.chaos.r = j.value("r", s.chaos.r);
        s.chaos.x0 = j.value("x0", s.chaos.x0);
        s.chaos.burn_in = j.value("burn_in", s.chaos.burn_in);
        const auto ex = j.value("extraction", std::string("digits"));
        if (ex != "digits" && ex != "msb") throw Error(ErrorCode::InvalidArgument, "unknown extraction '" + ex + "'");
        s.chaos.extraction = ex == "digits" ? ChaosExtraction::digits : ChaosExtraction::msb;
        break;
      }
      case KeystreamKind::lcg:
        s.lcg.a = j.value("a", s.lcg.a);
        s.lcg.c = j.value("c", s.lcg.c);
        s.lcg.x0 = j.value("x0", s.lcg.x0);
        break;
      case KeystreamKind::mt19937: s.mt_seed = j.value("seed", s.mt_seed); break;
      case KeystreamKind::rc4: s.rc4_key = j.value("key", s.rc4_key); break;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("keystream spec: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

std::vector<std::uint32_t> chaotic_permutation(const ChaosSpec& spec, std::size_t n) {
  const auto xs = logistic_sequence(spec, n);
  std::vector<std::uint32_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0u);
  std::stable_sort(perm.begin(), perm.end(), [&](std::uint32_t a, std::uint32_t b) { return xs[a] < xs[b]; });
  return perm;
}

DomainTransform domain_transform(int width, int height, int channels, const ChaosSpec& base,
                                 std::uint64_t master_seed, std::size_t index) {
  Rng rng = Rng::derive(master_seed, index);
  // Keep x0 well inside (0,1); an exact fixed point has probability ~0 but is
  // still rejected by validate().
  ChaosSpec perm_spec = base;
  perm_spec.x0 = 0.05 + 0.9 * rng.uniform01();
  ChaosSpec xor_spec = base;
  xor_spec.x0 = 0.05 + 0.9 * rng.uniform01();
  const std::size_t pixels = static_cast<std::size_t>(width) * height;
  return {chaotic_permutation(perm_spec, pixels), chaotic_stream(xor_spec, pixels * channels)};
}

namespace {

void check_fit(const RasterImage& image, const DomainTransform& t) {
  if (image.empty()) throw Error(ErrorCode::EmptyInput, "empty image");
  const std::size_t pixels = static_cast<std::size_t>(image.width()) * image.height();
  if (t.permutation.size() != pixels || t.keystream.size() != image.size()) {
    throw Error(ErrorCode::DimensionMismatch, "domain transform does not match image dimensions");
  }
}

}  // namespace

RasterImage chaotic_encrypt(const RasterImage& image, const DomainTransform& t) {
  check_fit(image, t);
  RasterImage out(image.width(), image.height(), image.channels());
  const int c = image.channels();
  auto src = image.bytes();
  auto dst = out.bytes();
  for (std::size_t i = 0; i < t.permutation.size(); ++i) {
    for (int k = 0; k < c; ++k) dst[i * c + k] = src[t.permutation[i] * c + k];
  }
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] ^= t.keystream[i];
  return out;
}

RasterImage chaotic_decrypt(const RasterImage& image, const DomainTransform& t) {
  check_fit(image, t);
  RasterImage out(image.width(), image.height(), image.channels());
  const int c = image.channels();
  auto src = image.bytes();
  auto dst = out.bytes();
  for (std::size_t i = 0; i < t.permutation.size(); ++i) {
    for (int k = 0; k < c; ++k) dst[t.permutation[i] * c + k] = src[i * c + k] ^ t.keystream[i * c + k];
  }
  return out;
}

std::vector<RasterImage> build_transformation_domain(const std::vector<RasterImage>& sources, const ChaosSpec& base,
                                                     std::uint64_t master_seed) {
  if (sources.empty()) throw Error(ErrorCode::EmptyDomain, "no source images for the transformation domain");
  validate(base);
  std::vector<RasterImage> out;
  out.reserve(sources.size());
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto& img = sources[i];
    out.push_back(chaotic_encrypt(img, domain_transform(img.width(), img.height(), img.channels(), base,
                                                        master_seed, i)));
  }
  return out;
}

std::vector<RasterImage> invert_transformation_domain(const std::vector<RasterImage>& domain, const ChaosSpec& base,
                                                      std::uint64_t master_seed) {
  std::vector<RasterImage> out;
  out.reserve(domain.size());
  for (std::size_t i = 0; i < domain.size(); ++i) {
    const auto& img = domain[i];
    out.push_back(chaotic_decrypt(img, domain_transform(img.width(), img.height(), img.channels(), base,
                                                        master_seed, i)));
  }
  return out;
}

}  // namespace dkg::baseline
