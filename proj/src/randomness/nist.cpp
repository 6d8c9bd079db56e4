#include "dkg/randomness/nist.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "dkg/error.hpp"

namespace dkg::randomness {

BitStream::BitStream(std::vector<std::uint8_t> bytes, std::string provenance)
    : bytes_(std::move(bytes)), n_(bytes_.size() * 8), provenance_(std::move(provenance)) {}

BitStream BitStream::from_bits(std::span<const std::uint8_t> bits, std::string provenance) {
  std::vector<std::uint8_t> bytes((bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) bytes[i >> 3] |= static_cast<std::uint8_t>(0x80 >> (i & 7));
  }
  BitStream s(std::move(bytes), std::move(provenance));
  s.n_ = bits.size();
  return s;
}

std::vector<std::uint8_t> BitStream::unpack() const {
  std::vector<std::uint8_t> out(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = static_cast<std::uint8_t>((*this)[i]);
  return out;
}

BitStream to_bitstream(std::span<const std::uint8_t> bytes, std::string provenance) {
  if (bytes.empty()) throw Error(ErrorCode::EmptyInput, "no bytes to convert to a bit stream");
  return BitStream(std::vector<std::uint8_t>(bytes.begin(), bytes.end()), std::move(provenance));
}

// ---------------------------------------------------------------------------
// special functions

double igamc(double a, double x) {
  if (!(a > 0.0)) throw Error(ErrorCode::InvalidArgument, "igamc requires a > 0");
  if (std::isnan(x)) throw Error(ErrorCode::InvalidArgument, "igamc of NaN");
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  constexpr double eps = 1e-16;
  constexpr double tiny = 1e-300;
  const double log_prefactor = -x + a * std::log(x) - std::lgamma(a);
  if (x < a + 1.0) {
    // series for the lower function P, then Q = 1 - P
    double ap = a;
    double del = 1.0 / a;
    double sum = del;
    for (int i = 0; i < 10000; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * eps) break;
    }
    return std::clamp(1.0 - sum * std::exp(log_prefactor), 0.0, 1.0);
  }
  // continued fraction for Q (modified Lentz)
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return std::clamp(std::exp(log_prefactor) * h, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// parameters and results

void to_json(nlohmann::json& j, const PValueResult& r) {
  j = {{"test", r.test},
       {"parameters", r.parameters},
       {"statistics", r.statistics},
       {"p_value", r.p_value},
       {"pass", r.pass}};
  if (!r.p_values.empty()) j["p_values"] = r.p_values;
  if (r.error) j["error"] = *r.error;
  if (r.warning) j["warning"] = *r.warning;
}

void to_json(nlohmann::json& j, const NistParams& p) {
  j = {{"template_length", p.template_length},
       {"template_bits", p.template_bits},
       {"template_blocks", p.template_blocks},
       {"all_templates", p.all_templates},
       {"matrix_rows", p.matrix_rows},
       {"matrix_cols", p.matrix_cols},
       {"maurer_l", p.maurer_l},
       {"maurer_q", p.maurer_q},
       {"excursions_min_cycles", p.excursions_min_cycles}};
}

void from_json(const nlohmann::json& j, NistParams& p) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "NIST parameters must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "template_length") p.template_length = v.get<int>();
      else if (key == "template_bits") p.template_bits = v.get<std::string>();
      else if (key == "template_blocks") p.template_blocks = v.get<int>();
      else if (key == "all_templates") p.all_templates = v.get<bool>();
      else if (key == "matrix_rows") p.matrix_rows = v.get<int>();
      else if (key == "matrix_cols") p.matrix_cols = v.get<int>();
      else if (key == "maurer_l") p.maurer_l = v.get<int>();
      else if (key == "maurer_q") p.maurer_q = v.get<int>();
      else if (key == "excursions_min_cycles") p.excursions_min_cycles = v.get<int>();
      else throw Error(ErrorCode::InvalidArgument, "unknown NIST parameter '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("NIST parameters: ") + e.what());
  }
  if (static_cast<int>(p.template_bits.size()) != p.template_length ||
      p.template_bits.find_first_not_of("01") != std::string::npos) {
    throw Error(ErrorCode::InvalidArgument, "template_bits must be template_length characters of 0/1");
  }
}

namespace {

PValueResult finish(PValueResult r) {
  if (r.p_values.empty()) {
    r.pass = r.p_value >= kAlpha;
  } else {
    r.p_value = *std::min_element(r.p_values.begin(), r.p_values.end());
    r.pass = r.p_value >= kAlpha;
  }
  return r;
}

[[noreturn]] void insufficient(const std::string& test, std::size_t have, std::size_t need) {
  throw Error(ErrorCode::InsufficientData,
              test + " needs at least " + std::to_string(need) + " bits, got " + std::to_string(have));
}

std::vector<std::uint8_t> parse_template(const std::string& s) {
  std::vector<std::uint8_t> t;
  for (char ch : s) {
    if (ch != '0' && ch != '1') throw Error(ErrorCode::InvalidArgument, "template must be 0/1 characters");
    t.push_back(static_cast<std::uint8_t>(ch - '0'));
  }
  return t;
}

}  // namespace

// ---------------------------------------------------------------------------
// non-overlapping template matching

std::vector<std::string> aperiodic_templates(int m) {
  if (m < 2 || m > 21) throw Error(ErrorCode::InvalidArgument, "template length must be in 2..21");
  std::vector<std::string> out;
  for (std::uint32_t v = 0; v < (1u << m); ++v) {
    std::string t(m, '0');
    for (int i = 0; i < m; ++i) t[i] = ((v >> (m - 1 - i)) & 1) ? '1' : '0';
    bool periodic = false;
    for (int k = 1; k < m && !periodic; ++k) periodic = t.compare(k, m - k, t, 0, m - k) == 0;
    if (!periodic) out.push_back(std::move(t));
  }
  return out;
}

PValueResult non_overlapping_template(const BitStream& bits, const NistParams& params) {
  const int m = params.template_length;
  const int blocks = params.template_blocks;
  if (m < 2 || blocks < 1) throw Error(ErrorCode::InvalidArgument, "bad template test parameters");
  const std::size_t need = static_cast<std::size_t>(8) * m * blocks;
  if (bits.size() < need) insufficient("non-overlapping template", bits.size(), need);

  const auto b = bits.unpack();
  const std::size_t block_len = b.size() / blocks;
  const double mu = static_cast<double>(block_len - m + 1) / std::pow(2.0, m);
  const double sigma2 =
      static_cast<double>(block_len) * (1.0 / std::pow(2.0, m) - (2.0 * m - 1.0) / std::pow(2.0, 2.0 * m));

  const std::vector<std::string> templates =
      params.all_templates ? aperiodic_templates(m) : std::vector<std::string>{params.template_bits};

  PValueResult r;
  r.test = "non_overlapping_template";
  r.parameters = {{"m", m}, {"N", blocks}, {"M", block_len}};
  r.parameters["templates"] = params.all_templates ? nlohmann::json(templates.size()) : nlohmann::json(templates[0]);
  std::vector<double> chi2s;
  std::vector<std::vector<int>> all_counts;
  for (const auto& tpl : templates) {
    const auto t = parse_template(tpl);
    if (static_cast<int>(t.size()) != m) throw Error(ErrorCode::InvalidArgument, "template length mismatch");
    std::vector<int> w(blocks, 0);
    double chi2 = 0.0;
    for (int j = 0; j < blocks; ++j) {
      const std::uint8_t* base = b.data() + j * block_len;
      for (std::size_t i = 0; i + m <= block_len;) {
        if (std::equal(t.begin(), t.end(), base + i)) {
          ++w[j];
          i += m;
        } else {
          ++i;
        }
      }
      chi2 += (w[j] - mu) * (w[j] - mu) / sigma2;
    }
    chi2s.push_back(chi2);
    all_counts.push_back(std::move(w));
    r.p_values.push_back(igamc(blocks / 2.0, chi2 / 2.0));
  }
  r.statistics = {{"mu", mu}, {"sigma2", sigma2}};
  if (templates.size() == 1) {
    r.statistics["chi2"] = chi2s[0];
    r.statistics["W"] = all_counts[0];
    r.p_value = r.p_values[0];
    r.p_values.clear();
  } else {
    r.statistics["chi2"] = chi2s;
  }
  return finish(std::move(r));
}

// ---------------------------------------------------------------------------
// binary matrix rank

int gf2_rank(std::span<const std::uint8_t> bits, int rows, int cols) {
  if (rows < 1 || cols < 1 || cols > 64) throw Error(ErrorCode::InvalidArgument, "matrix must be rows x (1..64)");
  if (bits.size() < static_cast<std::size_t>(rows) * cols) throw Error(ErrorCode::InvalidShape, "too few bits");
  std::vector<std::uint64_t> m(rows, 0);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (bits[static_cast<std::size_t>(r) * cols + c]) m[r] |= std::uint64_t{1} << (cols - 1 - c);
    }
  }
  int rank = 0;
  for (int c = cols - 1; c >= 0 && rank < rows; --c) {
    const std::uint64_t mask = std::uint64_t{1} << c;
    int pivot = -1;
    for (int r = rank; r < rows; ++r) {
      if (m[r] & mask) {
        pivot = r;
        break;
      }
    }
    if (pivot < 0) continue;
    std::swap(m[rank], m[pivot]);
    for (int r = 0; r < rows; ++r) {
      if (r != rank && (m[r] & mask)) m[r] ^= m[rank];
    }
    ++rank;
  }
  return rank;
}

double rank_probability(int r, int rows, int cols) {
  if (r < 0 || r > std::min(rows, cols)) return 0.0;
  double log2p = static_cast<double>(r) * (rows + cols - r) - static_cast<double>(rows) * cols;
  double prod = 1.0;
  for (int i = 0; i < r; ++i) {
    prod *= (1.0 - std::pow(2.0, i - rows)) * (1.0 - std::pow(2.0, i - cols)) / (1.0 - std::pow(2.0, i - r));
  }
  return std::exp2(log2p) * prod;
}

PValueResult binary_matrix_rank(const BitStream& bits, const NistParams& params) {
  const int rows = params.matrix_rows;
  const int cols = params.matrix_cols;
  if (rows < 2 || cols < 2 || cols > 64) throw Error(ErrorCode::InvalidArgument, "bad matrix dimensions");
  const std::size_t per = static_cast<std::size_t>(rows) * cols;
  if (bits.size() < 38 * per) insufficient("binary matrix rank", bits.size(), 38 * per);

  const auto b = bits.unpack();
  const std::size_t count = b.size() / per;
  const int full = std::min(rows, cols);
  std::array<std::size_t, 3> f{};  // rank == full, full - 1, lower
  for (std::size_t k = 0; k < count; ++k) {
    const int rank = gf2_rank(std::span(b).subspan(k * per, per), rows, cols);
    ++f[rank == full ? 0 : rank == full - 1 ? 1 : 2];
  }
  const double p_full = rank_probability(full, rows, cols);
  const double p_minus = rank_probability(full - 1, rows, cols);
  const std::array<double, 3> p = {p_full, p_minus, 1.0 - p_full - p_minus};
  double chi2 = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double expect = count * p[i];
    chi2 += (f[i] - expect) * (f[i] - expect) / expect;
  }
  PValueResult r;
  r.test = "binary_matrix_rank";
  r.parameters = {{"M", rows}, {"Q", cols}, {"N", count}};
  r.statistics = {{"F_full", f[0]}, {"F_full_minus_1", f[1]}, {"F_rest", f[2]}, {"chi2", chi2}, {"probabilities", p}};
  r.p_value = igamc(1.0, chi2 / 2.0);
  return finish(std::move(r));
}

// ---------------------------------------------------------------------------
// Maurer's universal statistical test

MaurerConstants maurer_constants(int l) {
  static constexpr std::array<MaurerConstants, 16> table = {{{0.7326495, 0.690},
                                                             {1.5374383, 1.338},
                                                             {2.4016068, 1.901},
                                                             {3.3112247, 2.358},
                                                             {4.2534266, 2.705},
                                                             {5.2177052, 2.954},
                                                             {6.1962507, 3.125},
                                                             {7.1836656, 3.238},
                                                             {8.1764248, 3.311},
                                                             {9.1723243, 3.356},
                                                             {10.170032, 3.384},
                                                             {11.168765, 3.401},
                                                             {12.168070, 3.410},
                                                             {13.167693, 3.416},
                                                             {14.167488, 3.419},
                                                             {15.167379, 3.421}}};
  if (l < 1 || l > 16) throw Error(ErrorCode::InvalidArgument, "Maurer block length must be in 1..16");
  return table[l - 1];
}

PValueResult maurers_universal(const BitStream& bits, const NistParams& params) {
  const int l = params.maurer_l;
  const int q = params.maurer_q;
  const auto constants = maurer_constants(l);
  if (q < 1) throw Error(ErrorCode::InvalidArgument, "Maurer Q must be >= 1");
  const std::size_t need = static_cast<std::size_t>(q + 1000) * l;
  if (bits.size() < need) insufficient("Maurer's universal", bits.size(), need);

  const std::size_t blocks = bits.size() / l;
  const std::size_t k = blocks - q;
  auto block = [&](std::size_t i) {  // i is 1-based
    std::uint32_t v = 0;
    for (int j = 0; j < l; ++j) v = (v << 1) | static_cast<std::uint32_t>(bits[(i - 1) * l + j]);
    return v;
  };
  std::vector<std::size_t> last(std::size_t{1} << l, 0);
  for (std::size_t i = 1; i <= static_cast<std::size_t>(q); ++i) last[block(i)] = i;
  double sum = 0.0;
  for (std::size_t i = q + 1; i <= blocks; ++i) {
    const auto v = block(i);
    sum += std::log2(static_cast<double>(i - last[v]));
    last[v] = i;
  }
  const double fn = sum / static_cast<double>(k);
  const double c = 0.7 - 0.8 / l + (4.0 + 32.0 / l) * std::pow(static_cast<double>(k), -3.0 / l) / 15.0;
  const double sigma = c * std::sqrt(constants.variance / static_cast<double>(k));
  PValueResult r;
  r.test = "maurers_universal";
  r.parameters = {{"L", l}, {"Q", q}, {"K", k}};
  r.statistics = {{"fn", fn}, {"expected", constants.expected}, {"sigma", sigma}};
  r.p_value = std::erfc(std::abs(fn - constants.expected) / (std::sqrt(2.0) * sigma));
  return finish(std::move(r));
}

// ---------------------------------------------------------------------------
// random excursions variant

PValueResult random_excursions_variant(const BitStream& bits, const NistParams& params) {
  if (bits.size() == 0) throw Error(ErrorCode::EmptyInput, "empty bit stream");
  constexpr int kMaxState = 9;
  std::array<std::uint64_t, 2 * kMaxState + 1> visits{};  // index state + 9
  std::uint64_t returns = 0;
  long long s = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    s += bits[i] ? 1 : -1;
    if (s == 0) ++returns;
    if (s >= -kMaxState && s <= kMaxState) ++visits[s + kMaxState];
  }
  if (returns == 0) throw Error(ErrorCode::NoCycles, "the cumulative-sum walk never returns to zero");
  // cycles: every return closes one; a walk ending away from zero leaves one
  // more, incomplete cycle
  const std::uint64_t j = returns + (s != 0 ? 1 : 0);

  PValueResult r;
  r.test = "random_excursions_variant";
  r.parameters = {{"states", "-9..-1,1..9"}, {"min_cycles", params.excursions_min_cycles}};
  nlohmann::json xi = nlohmann::json::object();
  for (int x = -kMaxState; x <= kMaxState; ++x) {
    if (x == 0) continue;
    const double count = static_cast<double>(visits[x + kMaxState]);
    const double p = std::erfc(std::abs(count - static_cast<double>(j)) /
                               std::sqrt(2.0 * static_cast<double>(j) * (4.0 * std::abs(x) - 2.0)));
    r.p_values.push_back(p);
    xi[std::to_string(x)] = visits[x + kMaxState];
  }
  r.statistics = {{"J", j}, {"xi", xi}};
  if (j < static_cast<std::uint64_t>(params.excursions_min_cycles)) {
    r.warning = "only " + std::to_string(j) + " cycles (recommended >= " +
                std::to_string(params.excursions_min_cycles) + "); p-values are unreliable";
  }
  return finish(std::move(r));
}

// ---------------------------------------------------------------------------

std::vector<PValueResult> run_battery(const BitStream& bits, const NistParams& params) {
  using Test = PValueResult (*)(const BitStream&, const NistParams&);
  const std::array<std::pair<const char*, Test>, 4> tests = {{
      {"non_overlapping_template", &non_overlapping_template},
      {"binary_matrix_rank", &binary_matrix_rank},
      {"maurers_universal", &maurers_universal},
      {"random_excursions_variant", &random_excursions_variant},
  }};
  std::vector<PValueResult> out;
  for (const auto& [name, fn] : tests) {
    try {
      out.push_back(fn(bits, params));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InsufficientData && e.code() != ErrorCode::NoCycles) throw;
      PValueResult r;
      r.test = name;
      r.p_value = 0.0;
      r.pass = false;
      r.error = e.what();
      out.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace dkg::randomness
