#include "dkg/attack/lab.hpp"

#include <algorithm>
#include <atomic>
#include <set>
#include <sstream>
#include <thread>

#include "dkg/cipher/xor_cipher.hpp"
#include "dkg/codec.hpp"
#include "dkg/error.hpp"
#include "dkg/rng.hpp"
#include "dkg/synthetic.hpp"

namespace dkg::attack {

namespace {

constexpr std::string_view kScenarioNames[] = {"domain_leak",  "structure_leak",   "both_leak",        "one_time_pad",
                                               "sensitivity",  "chosen_plaintext", "chosen_ciphertext"};

bool is_matrix_scenario(Scenario s) {
  return s == Scenario::domain_leak || s == Scenario::structure_leak || s == Scenario::both_leak ||
         s == Scenario::one_time_pad;
}

[[noreturn]] void bad_plan(const std::string& what) { throw Error(ErrorCode::InvalidArgument, "plan: " + what); }

nlohmann::json chaos_json(const baseline::ChaosSpec& c) {
  return {{"r", c.r},
          {"burn_in", c.burn_in},
          {"extraction", c.extraction == baseline::ChaosExtraction::digits ? "digits" : "msb"}};
}

baseline::ChaosSpec chaos_from_json(const nlohmann::json& j) {
  baseline::ChaosSpec c;
  for (const auto& [key, value] : j.items()) {
    if (key == "r") c.r = value.get<double>();
    else if (key == "burn_in") c.burn_in = value.get<int>();
    else if (key == "extraction") {
      const auto ex = value.get<std::string>();
      if (ex != "digits" && ex != "msb") bad_plan("unknown extraction '" + ex + "'");
      c.extraction = ex == "digits" ? baseline::ChaosExtraction::digits : baseline::ChaosExtraction::msb;
    } else bad_plan("unknown chaos key '" + key + "'");
  }
  return c;
}

// The keystream spec with its seeding parameter replaced by one drawn from
// (seed, index), so every domain image gets its own stream.
baseline::KeystreamSpec seeded_keystream(baseline::KeystreamSpec spec, std::uint64_t seed, std::size_t index,
                                         std::size_t length) {
  Rng rng = Rng::derive(seed, index);
  spec.length = length;
  switch (spec.kind) {
    case baseline::KeystreamKind::chaotic: spec.chaos.x0 = 0.05 + 0.9 * rng.uniform01(); break;
    case baseline::KeystreamKind::lcg: spec.lcg.x0 = rng.next_u32(); break;
    case baseline::KeystreamKind::mt19937: spec.mt_seed = rng.next_u32(); break;
    case baseline::KeystreamKind::rc4: {
      const auto v = rng.next_u64();
      for (int b = 0; b < 8; ++b) spec.rc4_key.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
      if (spec.rc4_key.size() > 256) spec.rc4_key.erase(spec.rc4_key.begin(), spec.rc4_key.end() - 256);
      break;
    }
  }
  return spec;
}

analysis::DiffMetrics mean_of(const std::vector<analysis::DiffMetrics>& xs) {
  analysis::DiffMetrics m;
  if (xs.empty()) return m;
  for (const auto& x : xs) {
    m.npcr += x.npcr;
    m.uaci += x.uaci;
  }
  m.npcr /= static_cast<double>(xs.size());
  m.uaci /= static_cast<double>(xs.size());
  return m;
}

bool xor_identity(const RasterImage& a, const RasterImage& b, const key::ImageKey& k1, const key::ImageKey& k2) {
  if (a.size() != k1.size() || b.size() != k2.size()) return false;
  const auto ab = a.bytes(), bb = b.bytes(), x = k1.bytes(), y = k2.bytes();
  for (std::size_t i = 0; i < ab.size(); ++i) {
    if ((ab[i] ^ bb[i]) != (x[i] ^ y[i])) return false;
  }
  return true;
}

template <typename Fn>
DifferentialReport differential(const net::Network& generator, const RasterImage& seed_image, int trials,
                                std::uint64_t seed, Fn&& outputs_for) {
  if (trials < 1) throw Error(ErrorCode::InvalidArgument, "trials must be >= 1");
  const auto k1 = net::generate_key(generator, seed_image);
  DifferentialReport report;
  report.identity_holds = true;
  std::vector<analysis::DiffMetrics> outs, keys;
  for (int t = 0; t < trials; ++t) {
    Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(t));
    auto [perturbed, change] = key::perturb_seed(seed_image, rng);
    const auto k2 = net::generate_key(generator, perturbed);
    const auto [o1, o2] = outputs_for(k1, k2);
    DifferentialTrial trial{change, analysis::diff_metrics(k1.to_image(), k2.to_image()),
                            analysis::diff_metrics(o1, o2), false};
    trial.identity_holds = xor_identity(o1, o2, k1, k2) && trial.outputs.npcr == trial.keys.npcr;
    report.identity_holds = report.identity_holds && trial.identity_holds;
    outs.push_back(trial.outputs);
    keys.push_back(trial.keys);
    report.trials.push_back(trial);
  }
  report.mean_outputs = mean_of(outs);
  report.mean_keys = mean_of(keys);
  return report;
}

nlohmann::json change_json(const key::PixelChange& c) {
  return {{"x", c.x}, {"y", c.y}, {"channel", c.channel}, {"old", c.old_value}, {"new", c.new_value}};
}

nlohmann::json diff_json(const analysis::DiffMetrics& m) { return m; }

// The plaintext as decryption gives it back: grayscale-tagged RGB collapses.
RasterImage as_recovered(const RasterImage& p) {
  return p.channels() == 3 && p.original_channels() == 1 ? first_channel(p) : p;
}

const DomainSpec& find_domain(const ExperimentPlan& plan, const std::string& name) {
  for (const auto& d : plan.domains) {
    if (d.name == name) return d;
  }
  bad_plan("unknown domain '" + name + "'");
}

}  // namespace

std::string_view to_string(Scenario s) noexcept { return kScenarioNames[static_cast<int>(s)]; }

Scenario scenario_from_string(std::string_view s) {
  for (int i = 0; i < 7; ++i) {
    if (kScenarioNames[i] == s) return static_cast<Scenario>(i);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown scenario '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// plans

void ExperimentPlan::validate() const {
  if (source_count < 1 || domain_count < 1) bad_plan("source_count and domain_count must be >= 1");
  if (trials < 1) bad_plan("trials must be >= 1");
  if (threads < 1) bad_plan("threads must be >= 1");
  if (domains.empty()) bad_plan("at least one domain is required");
  std::set<std::string> names;
  for (const auto& d : domains) {
    if (!names.insert(d.name).second) bad_plan("duplicate domain '" + d.name + "'");
    if (d.style == DomainStyle::chaotic) {
      baseline::ChaosSpec probe = d.chaos;
      probe.x0 = 0.3;
      baseline::validate(probe);
    }
  }
  names.clear();
  for (const auto& v : variants) {
    if (!names.insert(v.name).second) bad_plan("duplicate variant '" + v.name + "'");
    v.config.validate();
    if (v.config.resolution != resolution) bad_plan("variant '" + v.name + "' resolution differs from the plan's");
    find_domain(*this, v.domain);
  }
  const std::size_t need = is_matrix_scenario(scenario) ? 2 : 1;
  if (variants.size() < need) {
    bad_plan(std::string(to_string(scenario)) + " needs at least " + std::to_string(need) + " variants");
  }
}

void to_json(nlohmann::json& j, const ExperimentPlan& p) {
  auto domains = nlohmann::json::array();
  for (const auto& d : p.domains) {
    nlohmann::json dj = {{"name", d.name}, {"style", d.style == DomainStyle::chaotic ? "chaotic" : "keystream"},
                         {"seed", d.seed}};
    if (d.style == DomainStyle::chaotic) dj["chaos"] = chaos_json(d.chaos);
    else dj["keystream"] = d.keystream;
    domains.push_back(dj);
  }
  auto variants = nlohmann::json::array();
  for (const auto& v : p.variants) variants.push_back({{"name", v.name}, {"domain", v.domain}, {"config", v.config}});
  j = {{"scenario", to_string(p.scenario)},
       {"resolution", p.resolution},
       {"data_seed", p.data_seed},
       {"source_count", p.source_count},
       {"domain_count", p.domain_count},
       {"domains", domains},
       {"variants", variants},
       {"seed_image", p.seed_image},
       {"trials", p.trials},
       {"trial_seed", p.trial_seed},
       {"threads", p.threads}};
}

void from_json(const nlohmann::json& j, ExperimentPlan& p) {
  if (!j.is_object()) throw Error(ErrorCode::FormatError, "plan must be a JSON object");
  p = ExperimentPlan{};
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "scenario") p.scenario = scenario_from_string(value.get<std::string>());
      else if (key == "resolution") p.resolution = value.get<int>();
      else if (key == "data_seed") p.data_seed = value.get<std::uint64_t>();
      else if (key == "source_count") p.source_count = value.get<int>();
      else if (key == "domain_count") p.domain_count = value.get<int>();
      else if (key == "seed_image") p.seed_image = value.get<std::size_t>();
      else if (key == "trials") p.trials = value.get<int>();
      else if (key == "trial_seed") p.trial_seed = value.get<std::uint64_t>();
      else if (key == "threads") p.threads = value.get<int>();
      else if (key == "domains") {
        p.domains.clear();
        for (const auto& dj : value) {
          DomainSpec d;
          for (const auto& [dk, dv] : dj.items()) {
            if (dk == "name") d.name = dv.get<std::string>();
            else if (dk == "style") {
              const auto style = dv.get<std::string>();
              if (style != "chaotic" && style != "keystream") bad_plan("unknown domain style '" + style + "'");
              d.style = style == "chaotic" ? DomainStyle::chaotic : DomainStyle::keystream;
            } else if (dk == "seed") d.seed = dv.get<std::uint64_t>();
            else if (dk == "chaos") d.chaos = chaos_from_json(dv);
            else if (dk == "keystream") d.keystream = dv.get<baseline::KeystreamSpec>();
            else bad_plan("unknown domain key '" + dk + "'");
          }
          p.domains.push_back(std::move(d));
        }
      } else if (key == "variants") {
        for (const auto& vj : value) {
          Variant v;
          v.config.resolution = p.resolution;
          for (const auto& [vk, vv] : vj.items()) {
            if (vk == "name") v.name = vv.get<std::string>();
            else if (vk == "domain") v.domain = vv.get<std::string>();
            else if (vk == "config") v.config = vv.get<net::TrainConfig>();
            else bad_plan("unknown variant key '" + vk + "'");
          }
          p.variants.push_back(std::move(v));
        }
      } else {
        bad_plan("unknown key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("plan: ") + e.what());
  }
}

ExperimentPlan residual_study_plan(const net::TrainConfig& base) {
  ExperimentPlan p;
  p.scenario = Scenario::domain_leak;
  p.resolution = base.resolution;
  const char* names[] = {"A", "B", "C", "D"};
  for (int i = 0; i < 4; ++i) {
    Variant v{names[i], base, "chaotic"};
    v.config.residual_blocks = 3 * (i + 1);
    v.config.seed = base.seed + static_cast<std::uint64_t>(i);
    p.variants.push_back(v);
  }
  return p;
}

ExperimentPlan repeated_training_plan(Scenario scenario, const net::TrainConfig& base, int count) {
  ExperimentPlan p;
  p.scenario = scenario;
  p.resolution = base.resolution;
  for (int i = 0; i < count; ++i) {
    Variant v{"run" + std::to_string(i + 1), base, "chaotic"};
    v.config.seed = base.seed + static_cast<std::uint64_t>(i);
    p.variants.push_back(v);
  }
  return p;
}

ExperimentPlan two_domain_plan(const net::TrainConfig& base) {
  ExperimentPlan p;
  p.scenario = Scenario::structure_leak;
  p.resolution = base.resolution;
  DomainSpec alt;
  alt.name = "rc4";
  alt.style = DomainStyle::keystream;
  alt.keystream.kind = baseline::KeystreamKind::rc4;
  alt.seed = 8;
  p.domains.push_back(alt);
  p.variants = {Variant{"A", base, "chaotic"}, Variant{"B", base, "rc4"}};
  return p;
}

// ---------------------------------------------------------------------------
// inputs

ExperimentInputs synthetic_inputs(const ExperimentPlan& plan) {
  ExperimentInputs in;
  in.source = synthetic::phantom_set(plan.source_count, plan.resolution, Rng::derive(plan.data_seed, 1).next_u64());
  in.domain_plain =
      synthetic::phantom_set(plan.domain_count, plan.resolution, Rng::derive(plan.data_seed, 2).next_u64());
  in.probe = synthetic::phantom(plan.resolution, Rng::derive(plan.data_seed, 3).next_u64());
  return in;
}

std::vector<RasterImage> build_domain(const DomainSpec& spec, const std::vector<RasterImage>& plain) {
  if (plain.empty()) throw Error(ErrorCode::EmptyDomain, "no images to build a domain from");
  if (spec.style == DomainStyle::chaotic) return baseline::build_transformation_domain(plain, spec.chaos, spec.seed);
  std::vector<RasterImage> out;
  out.reserve(plain.size());
  for (std::size_t i = 0; i < plain.size(); ++i) {
    RasterImage img = plain[i];
    const auto ks = baseline::generate(seeded_keystream(spec.keystream, spec.seed, i, img.size()));
    auto bytes = img.bytes();
    for (std::size_t b = 0; b < bytes.size(); ++b) bytes[b] ^= ks[b];
    img.set_original_channels(img.channels());
    out.push_back(std::move(img));
  }
  return out;
}

// ---------------------------------------------------------------------------
// decryption matrix

bool DecryptionMatrix::diagonal_exact() const noexcept {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i][i].mse != 0.0 || cells[i][i].ssim != 1.0) return false;
  }
  return true;
}

std::optional<double> DecryptionMatrix::max_off_diagonal_ssim() const noexcept {
  std::optional<double> best;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (i != j && (!best || cells[i][j].ssim > *best)) best = cells[i][j].ssim;
    }
  }
  return best;
}

std::string DecryptionMatrix::csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "encrypt_key,decrypt_key,mse,ssim\n";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (std::size_t j = 0; j < cells.size(); ++j) {
      out << labels[i] << ',' << labels[j] << ',' << cells[i][j].mse << ',' << cells[i][j].ssim << '\n';
    }
  }
  return out.str();
}

DecryptionMatrix decryption_matrix(const RasterImage& plaintext, const std::vector<key::ImageKey>& keys,
                                   const std::vector<std::string>& labels) {
  if (keys.size() != labels.size()) throw Error(ErrorCode::InvalidArgument, "one label per key is required");
  DecryptionMatrix m;
  m.labels = labels;
  m.cells.assign(keys.size(), std::vector<analysis::SimilarityMetrics>(keys.size()));
  const auto reference = as_recovered(plaintext);
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const auto c = cipher::xor_encrypt(plaintext, keys[i]);
    for (std::size_t j = 0; j < keys.size(); ++j) {
      m.cells[i][j] = analysis::similarity(reference, cipher::xor_decrypt(c, keys[j]));
    }
  }
  return m;
}

void to_json(nlohmann::json& j, const DecryptionMatrix& m) {
  auto mse = nlohmann::json::array(), ssim = nlohmann::json::array();
  for (const auto& row : m.cells) {
    auto mr = nlohmann::json::array(), sr = nlohmann::json::array();
    for (const auto& c : row) {
      mr.push_back(c.mse);
      sr.push_back(c.ssim);
    }
    mse.push_back(mr);
    ssim.push_back(sr);
  }
  j = {{"labels", m.labels}, {"mse", mse}, {"ssim", ssim}, {"diagonal_exact", m.diagonal_exact()}};
  if (const auto off = m.max_off_diagonal_ssim()) j["max_off_diagonal_ssim"] = *off;
}

// ---------------------------------------------------------------------------
// training

std::vector<VariantOutcome> train_variants(const ExperimentPlan& plan, const ExperimentInputs& inputs) {
  plan.validate();
  if (plan.seed_image >= inputs.source.size()) bad_plan("seed_image is outside the source set");
  std::vector<std::pair<std::string, std::vector<RasterImage>>> domains;
  for (const auto& d : plan.domains) domains.emplace_back(d.name, build_domain(d, inputs.domain_plain));
  auto domain_for = [&](const std::string& name) -> const std::vector<RasterImage>& {
    for (const auto& [n, images] : domains) {
      if (n == name) return images;
    }
    bad_plan("unknown domain '" + name + "'");
  };

  std::vector<VariantOutcome> out(plan.variants.size());
  std::vector<std::exception_ptr> failures(plan.variants.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < plan.variants.size(); i = next++) {
      const auto& v = plan.variants[i];
      out[i].name = v.name;
      try {
        net::Trainer trainer(v.config, inputs.source, domain_for(v.domain));
        trainer.run();
        out[i].final_losses = trainer.history().back();
        out[i].key = net::generate_key(trainer.checkpoint(), inputs.source[plan.seed_image]);
        out[i].checkpoint = trainer.checkpoint();
      } catch (const Error& e) {
        if (e.code() != ErrorCode::DivergenceError) {
          failures[i] = std::current_exception();
          continue;
        }
        out[i].error = e.what();
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const int n = std::min<int>(plan.threads, static_cast<int>(plan.variants.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return out;
}

// ---------------------------------------------------------------------------
// differential experiments

DifferentialReport chosen_plaintext(const net::Network& generator, const RasterImage& seed_image,
                                    const RasterImage& plaintext, int trials, std::uint64_t seed) {
  return differential(generator, seed_image, trials, seed, [&](const key::ImageKey& k1, const key::ImageKey& k2) {
    return std::pair{cipher::xor_encrypt(plaintext, k1), cipher::xor_encrypt(plaintext, k2)};
  });
}

DifferentialReport chosen_ciphertext(const net::Network& generator, const RasterImage& seed_image,
                                     const RasterImage& ciphertext, int trials, std::uint64_t seed) {
  // decrypt to all three channels so the plaintexts cover every key byte
  RasterImage c = ciphertext;
  c.set_original_channels(c.channels());
  return differential(generator, seed_image, trials, seed, [&](const key::ImageKey& k1, const key::ImageKey& k2) {
    return std::pair{cipher::xor_decrypt(c, k1), cipher::xor_decrypt(c, k2)};
  });
}

std::vector<SensitivityTrial> sensitivity(const net::Network& generator, const RasterImage& seed_image,
                                          const RasterImage& plaintext, int trials, std::uint64_t seed) {
  if (trials < 1) throw Error(ErrorCode::InvalidArgument, "trials must be >= 1");
  const auto k0 = net::generate_key(generator, seed_image);
  const auto c = cipher::xor_encrypt(plaintext, k0);
  std::vector<SensitivityTrial> out;
  for (int t = 0; t < trials; ++t) {
    Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(t));
    auto [perturbed, change] = key::perturb_seed(seed_image, rng);
    const auto k = net::generate_key(generator, perturbed);
    out.push_back({change, analysis::diff_metrics(k0.to_image(), k.to_image()),
                   analysis::similarity(as_recovered(plaintext), cipher::xor_decrypt(c, k))});
  }
  return out;
}

void to_json(nlohmann::json& j, const DifferentialReport& r) {
  auto trials = nlohmann::json::array();
  for (const auto& t : r.trials) {
    trials.push_back({{"change", change_json(t.change)},
                      {"keys", diff_json(t.keys)},
                      {"outputs", diff_json(t.outputs)},
                      {"identity_holds", t.identity_holds}});
  }
  j = {{"trials", trials},
       {"mean_outputs", diff_json(r.mean_outputs)},
       {"mean_keys", diff_json(r.mean_keys)},
       {"identity_holds", r.identity_holds}};
}

void to_json(nlohmann::json& j, const SensitivityTrial& t) {
  j = {{"change", change_json(t.change)}, {"keys", t.keys}, {"wrong_key_decryption", t.wrong_key_decryption}};
}

// ---------------------------------------------------------------------------

ExperimentReport run_experiment(const ExperimentPlan& plan, const ExperimentInputs& inputs) {
  ExperimentReport report;
  report.plan = plan;
  report.variants = train_variants(plan, inputs);
  report.details = nlohmann::json::object();

  std::vector<key::ImageKey> keys;
  std::vector<std::string> labels;
  const net::Checkpoint* first = nullptr;
  for (const auto& v : report.variants) {
    if (!v.key) continue;
    keys.push_back(*v.key);
    labels.push_back(v.name);
    if (!first) first = &*v.checkpoint;
  }

  if (is_matrix_scenario(plan.scenario)) {
    if (keys.size() >= 2) {
      report.matrix = decryption_matrix(inputs.probe, keys, labels);
      auto pairs = nlohmann::json::array();
      for (std::size_t a = 0; a < keys.size(); ++a) {
        for (std::size_t b = a + 1; b < keys.size(); ++b) {
          pairs.push_back({{"a", labels[a]},
                           {"b", labels[b]},
                           {"metrics", analysis::diff_metrics(keys[a].to_image(), keys[b].to_image())}});
        }
      }
      report.details["key_pairs"] = pairs;
    } else {
      report.details["error"] = "fewer than two variants trained successfully";
    }
    if (plan.scenario == Scenario::structure_leak) {
      auto doms = nlohmann::json::array();
      for (const auto& d : plan.domains) {
        double total = 0;
        const auto images = build_domain(d, inputs.domain_plain);
        for (const auto& img : images) total += analysis::entropy(img.bytes());
        doms.push_back({{"name", d.name}, {"mean_entropy", total / static_cast<double>(images.size())}});
      }
      report.details["domains"] = doms;
    }
    return report;
  }

  if (!first) throw Error(ErrorCode::DivergenceError, "no variant trained successfully");
  const auto& seed_image = inputs.source[plan.seed_image];
  const auto& g = first->generator;
  switch (plan.scenario) {
    case Scenario::chosen_plaintext:
      report.details["chosen_plaintext"] = chosen_plaintext(g, seed_image, inputs.probe, plan.trials, plan.trial_seed);
      break;
    case Scenario::chosen_ciphertext: {
      const auto c = cipher::xor_encrypt(inputs.probe, keys.front());
      report.details["chosen_ciphertext"] = chosen_ciphertext(g, seed_image, c, plan.trials, plan.trial_seed);
      break;
    }
    case Scenario::sensitivity:
      report.details["sensitivity"] = sensitivity(g, seed_image, inputs.probe, plan.trials, plan.trial_seed);
      break;
    default: break;
  }
  return report;
}

void to_json(nlohmann::json& j, const ExperimentReport& r) {
  auto variants = nlohmann::json::array();
  for (const auto& v : r.variants) {
    nlohmann::json vj = {{"name", v.name}, {"diverged", v.error.has_value()}};
    if (v.error) vj["error"] = *v.error;
    if (v.final_losses) {
      vj["final_losses"] = {{"l_g", v.final_losses->l_g},
                            {"l_d", v.final_losses->l_d},
                            {"d_real", v.final_losses->d_real},
                            {"d_fake", v.final_losses->d_fake}};
    }
    if (v.key) {
      vj["key_entropy"] = analysis::entropy(v.key->bytes());
      vj["key_crc32"] = io::crc32(v.key->bytes());
    }
    variants.push_back(vj);
  }
  j = {{"plan", r.plan}, {"variants", variants}, {"details", r.details}};
  if (r.matrix) j["matrix"] = *r.matrix;
}

}  // namespace dkg::attack
