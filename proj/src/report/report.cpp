#include "dkg/report.hpp"

#include <sstream>

#include "dkg/analysis/metrics.hpp"
#include "dkg/baseline/keystreams.hpp"
#include "dkg/codec.hpp"
#include "dkg/error.hpp"

namespace dkg::report {

namespace {

nlohmann::json battery(std::span<const std::uint8_t> bytes, const AnalysisOptions& opts) {
  const auto results = randomness::run_battery(randomness::to_bitstream(bytes), opts.nist);
  nlohmann::json out = {{"bits", bytes.size() * 8}, {"alpha", randomness::kAlpha}, {"params", opts.nist}};
  out["tests"] = results;
  return out;
}

}  // namespace

nlohmann::json envelope(std::string_view kind, std::uint64_t seed, const nlohmann::json& config) {
  return {{"schema", "dkg-report"}, {"schema_version", kSchemaVersion}, {"kind", kind}, {"seed", seed},
          {"config", config}};
}

nlohmann::json input_record(std::string_view name, std::span<const std::uint8_t> bytes) {
  return {{"file", name}, {"size", bytes.size()}, {"crc32", io::crc32(bytes)}};
}

nlohmann::json image_statistics(const RasterImage& image, const AnalysisOptions& opts) {
  const auto h = analysis::histogram(image.bytes());
  nlohmann::json out = {{"width", image.width()},
                        {"height", image.height()},
                        {"channels", image.channels()},
                        {"entropy", analysis::entropy(h)},
                        {"histogram", h}};
  auto per_channel = nlohmann::json::array();
  for (int c = 0; c < image.channels(); ++c) {
    std::vector<std::uint8_t> plane;
    plane.reserve(image.size() / image.channels());
    for (std::size_t i = c; i < image.size(); i += image.channels()) plane.push_back(image.bytes()[i]);
    per_channel.push_back({{"channel", c},
                           {"entropy", analysis::entropy(plane)},
                           {"correlation", analysis::correlation_report(image, opts.samples, opts.seed, c)}});
  }
  out["per_channel"] = per_channel;
  return out;
}

nlohmann::json key_analysis(const key::ImageKey& key, const AnalysisOptions& opts) {
  nlohmann::json out = image_statistics(key.to_image(), opts);
  if (key.width() == key.height()) {
    const auto ks = key::keyspace(key.width());
    out["keyspace"] = {{"alphabet", ks.alphabet_size}, {"exponent", ks.exponent}, {"log2", ks.keyspace_log2}};
  }
  if (opts.randomness) out["randomness"] = battery(key.bytes(), opts);
  return out;
}

nlohmann::json cipher_analysis(const RasterImage& plain, const RasterImage& cipher, const AnalysisOptions& opts) {
  // a grayscale plaintext is encrypted as its RGB replication
  const RasterImage p = plain.channels() == 1 && cipher.channels() == 3 ? to_rgb(plain) : plain;
  nlohmann::json out = {{"plain", image_statistics(p, opts)},
                        {"cipher", image_statistics(cipher, opts)},
                        {"difference", analysis::diff_metrics(p, cipher)},
                        {"similarity", analysis::similarity(p, cipher)}};
  if (opts.randomness) out["randomness"] = battery(cipher.bytes(), opts);
  return out;
}

nlohmann::json baseline_comparison(std::size_t length, const AnalysisOptions& opts) {
  if (length == 0) throw Error(ErrorCode::InvalidArgument, "length must be positive");
  auto rows = nlohmann::json::array();
  for (auto kind : {baseline::KeystreamKind::chaotic, baseline::KeystreamKind::lcg, baseline::KeystreamKind::mt19937,
                    baseline::KeystreamKind::rc4}) {
    baseline::KeystreamSpec spec;
    spec.kind = kind;
    spec.length = length;
    const auto bytes = baseline::generate(spec);
    nlohmann::json row = {{"generator", baseline::to_string(kind)},
                          {"spec", spec},
                          {"entropy", analysis::entropy(bytes)}};
    if (opts.randomness) row["randomness"] = battery(bytes, opts);
    rows.push_back(row);
  }
  return rows;
}

std::string statistics_csv(const nlohmann::json& stats) {
  std::ostringstream out;
  out.precision(17);
  out << "section,key,value\n";
  out << "entropy,all," << stats.at("entropy").get<double>() << '\n';
  const auto& counts = stats.at("histogram").at("counts");
  for (std::size_t v = 0; v < counts.size(); ++v) out << "histogram," << v << ',' << counts[v].get<std::uint64_t>() << '\n';
  for (const auto& ch : stats.at("per_channel")) {
    const auto c = ch.at("channel").get<int>();
    for (const char* dir : {"horizontal", "vertical", "diagonal"}) {
      const auto& v = ch.at("correlation").at(dir);
      out << "correlation," << dir << '_' << c << ',';
      if (v.is_number()) out << v.get<double>();
      else out << "nan";
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace dkg::report
