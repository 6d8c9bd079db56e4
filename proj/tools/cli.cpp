#include "cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dkg/analysis/metrics.hpp"
#include "dkg/attack/lab.hpp"
#include "dkg/baseline/keystreams.hpp"
#include "dkg/cipher/xor_cipher.hpp"
#include "dkg/codec.hpp"
#include "dkg/error.hpp"
#include "dkg/io/dataset.hpp"
#include "dkg/key/image_key.hpp"
#include "dkg/net/gan.hpp"
#include "dkg/report.hpp"
#include "dkg/synthetic.hpp"

namespace dkg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// helpers

json read_json(const fs::path& path) {
  const auto bytes = io::read_file(path);
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::FormatError, path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  io::write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void emit(const json& j, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) out << j.dump(2) << '\n';
  else write_json(out_path, j);
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

/// An explicit --seed wins, then DKG_SEED, then the configured value.
std::uint64_t resolve_seed(const CLI::Option* flag, std::uint64_t flag_value, std::uint64_t configured) {
  if (flag && flag->count() > 0) return flag_value;
  if (const char* env = std::getenv("DKG_SEED"); env && *env) {
    char* end = nullptr;
    const auto v = std::strtoull(env, &end, 10);
    if (*end != '\0') throw Error(ErrorCode::InvalidArgument, "DKG_SEED must be an unsigned integer");
    return v;
  }
  return configured;
}

RasterImage normalize(RasterImage img, int resolution) {
  if (img.channels() == 1) img = to_rgb(img);
  return resize_bilinear(img, resolution, resolution);
}

key::ImageKey read_key(const fs::path& path) {
  return path.extension() == ".png" ? key::import_key_png(path) : key::load_key(path);
}

randomness::NistParams nist_params(const std::string& path) {
  if (path.empty()) return {};
  return read_json(path).get<randomness::NistParams>();
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
std::vector<T> parse_list(const std::string& s, const char* what) {
  std::vector<T> out;
  for (const auto& item : split_list(s)) {
    std::istringstream in(item);
    T v{};
    if (!(in >> v) || !in.eof()) throw Error(ErrorCode::InvalidArgument, std::string("bad value in ") + what + ": " + item);
    out.push_back(v);
  }
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, std::string(what) + " is empty");
  return out;
}

json skipped_json(const io::ImageSet& set) {
  json j = json::array();
  for (const auto& s : set.skipped) j.push_back(s);
  return j;
}

void warn_skipped(const io::ImageSet& set, const std::string& dir, std::ostream& err) {
  for (const auto& s : set.skipped) err << "warning: skipped " << dir << "/" << s.name << " (" << s.reason << ")\n";
}

std::vector<RasterImage> pick(const std::vector<RasterImage>& images, const std::vector<std::size_t>& idx) {
  std::vector<RasterImage> out;
  for (auto i : idx) out.push_back(images[i]);
  return out;
}

double mean_key_entropy(const net::Network& g, const std::vector<RasterImage>& seeds) {
  double total = 0;
  for (const auto& s : seeds) total += analysis::entropy(net::generate_key(g, s).bytes());
  return total / static_cast<double>(seeds.size());
}

std::string losses_csv(const std::vector<net::GanLosses>& history, std::uint64_t first_iteration) {
  std::ostringstream s;
  s.precision(9);
  s << "iteration,l_g,l_d,l_total,d_real,d_fake\n";
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& l = history[i];
    s << first_iteration + i + 1 << ',' << l.l_g << ',' << l.l_d << ',' << l.l_total << ',' << l.d_real << ','
      << l.d_fake << '\n';
  }
  return s.str();
}

RasterImage contact_sheet(const RasterImage& probe, const std::vector<key::ImageKey>& keys) {
  const int n = static_cast<int>(keys.size());
  const int w = probe.width(), h = probe.height();
  RasterImage sheet(w * n, h * n, 3);
  for (int i = 0; i < n; ++i) {
    const auto c = cipher::xor_encrypt(probe, keys[i]);
    for (int j = 0; j < n; ++j) {
      auto d = cipher::xor_decrypt(c, keys[j]);
      if (d.channels() == 1) d = to_rgb(d);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          for (int ch = 0; ch < 3; ++ch) sheet.at(j * w + x, i * h + y, ch) = d.at(x, y, ch);
        }
      }
    }
  }
  return sheet;
}

// ---------------------------------------------------------------------------
// subcommands

struct Common {
  std::string out;
  bool timestamp = false;
};

void stamp(json& report, const Common& common) {
  if (common.timestamp) report["created"] = utc_now();
}

struct PhantomsArgs {
  std::string out;
  int count = 32;
  int resolution = 64;
  std::uint64_t seed = 1;
  CLI::Option* seed_opt = nullptr;
};

void cmd_phantoms(const PhantomsArgs& a, std::ostream& out) {
  const auto seed = resolve_seed(a.seed_opt, a.seed, 1);
  fs::create_directories(a.out);
  const auto images = synthetic::phantom_set(a.count, a.resolution, seed);
  for (std::size_t i = 0; i < images.size(); ++i) {
    std::ostringstream name;
    name << "phantom_" << std::setw(4) << std::setfill('0') << i << ".png";
    io::write_image(fs::path(a.out) / name.str(), first_channel(images[i]));
  }
  out << "wrote " << images.size() << " images to " << a.out << " (seed " << seed << ")\n";
}

struct DomainArgs {
  std::string in, out;
  int resolution = 64;
  std::uint64_t seed = 7;
  CLI::Option* seed_opt = nullptr;
  double r = 3.99;
  int burn_in = 1000;
  std::string extraction = "digits";
};

void cmd_build_domain(const DomainArgs& a, std::ostream& out, std::ostream& err) {
  const auto seed = resolve_seed(a.seed_opt, a.seed, 7);
  baseline::ChaosSpec spec;
  spec.r = a.r;
  spec.burn_in = a.burn_in;
  if (a.extraction != "digits" && a.extraction != "msb") {
    throw Error(ErrorCode::InvalidArgument, "extraction must be digits or msb");
  }
  spec.extraction = a.extraction == "digits" ? baseline::ChaosExtraction::digits : baseline::ChaosExtraction::msb;
  const auto set = io::ingest(a.in, a.resolution);
  warn_skipped(set, a.in, err);
  const auto domain = baseline::build_transformation_domain(set.images, spec, seed);
  fs::create_directories(a.out);
  double total = 0;
  json files = json::array();
  for (std::size_t i = 0; i < domain.size(); ++i) {
    const auto name = fs::path(set.names[i]).stem().string() + ".png";
    io::write_image(fs::path(a.out) / name, domain[i]);
    total += analysis::entropy(domain[i].bytes());
    files.push_back(name);
  }
  json manifest = report::envelope("domain", seed, {{"resolution", a.resolution},
                                                    {"r", spec.r},
                                                    {"burn_in", spec.burn_in},
                                                    {"extraction", a.extraction}});
  manifest["files"] = files;
  manifest["skipped"] = skipped_json(set);
  manifest["mean_entropy"] = total / static_cast<double>(domain.size());
  write_json(fs::path(a.out) / "domain.json", manifest);
  out << "wrote " << domain.size() << " domain images to " << a.out << ", mean entropy "
      << manifest["mean_entropy"].get<double>() << "\n";
}

struct TrainArgs {
  std::string source, domain, out, config, resume;
  net::TrainConfig cfg;
  CLI::Option* seed_opt = nullptr;
  std::vector<CLI::Option*> overrides;
  double val_fraction = 0.0;
  Common common;
};

int cmd_train(TrainArgs& a, const CLI::App& sub, std::ostream& out, std::ostream& err) {
  net::TrainConfig cfg;
  if (!a.config.empty()) cfg = read_json(a.config).get<net::TrainConfig>();
  auto given = [&](const char* name) { return sub.get_option(name)->count() > 0; };
  if (given("--resolution")) cfg.resolution = a.cfg.resolution;
  if (given("--iterations")) cfg.iterations = a.cfg.iterations;
  if (given("--lr")) cfg.lr = a.cfg.lr;
  if (given("--batch")) cfg.batch_size = a.cfg.batch_size;
  if (given("--residual-blocks")) cfg.residual_blocks = a.cfg.residual_blocks;
  if (given("--checkpoint-every")) cfg.checkpoint_every = a.cfg.checkpoint_every;
  if (given("--non-saturating")) cfg.non_saturating_g_loss = a.cfg.non_saturating_g_loss;
  cfg.seed = resolve_seed(a.seed_opt, a.cfg.seed, cfg.seed);

  std::optional<net::Checkpoint> resume;
  if (!a.resume.empty()) {
    resume = net::load_checkpoint(a.resume);
    const auto iterations = given("--iterations") ? cfg.iterations : resume->config.iterations;
    cfg = resume->config;
    cfg.iterations = iterations;
    resume->config.iterations = iterations;
  }
  cfg.validate();

  const auto source_set = io::ingest(a.source, cfg.resolution);
  const auto domain_set = io::ingest(a.domain, cfg.resolution);
  warn_skipped(source_set, a.source, err);
  warn_skipped(domain_set, a.domain, err);
  const auto split = io::split_validation(source_set.images.size(), a.val_fraction, Rng::derive(cfg.seed, 4).next_u64());
  if (split.train.empty()) throw Error(ErrorCode::EmptyDomain, "validation split leaves no training images");
  const auto train_images = pick(source_set.images, split.train);

  fs::create_directories(a.out);
  write_json(fs::path(a.out) / "config.json", cfg);
  net::Trainer trainer = resume ? net::Trainer(*resume, train_images, domain_set.images)
                                : net::Trainer(cfg, train_images, domain_set.images);
  const auto start = trainer.checkpoint().iteration;
  const fs::path snapshots = fs::path(a.out) / "snapshots";
  int status = kOk;
  std::optional<std::string> failure;
  try {
    trainer.run([&](std::uint64_t it, const net::GanLosses&) {
      if (cfg.checkpoint_every > 0 && it % static_cast<std::uint64_t>(cfg.checkpoint_every) == 0) {
        std::ostringstream name;
        name << "iter_" << std::setw(6) << std::setfill('0') << it << ".dkgn";
        fs::create_directories(snapshots);
        net::save_checkpoint(snapshots / name.str(), trainer.checkpoint());
      }
    });
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DivergenceError) throw;
    failure = e.what();
    status = kDivergence;
  }
  write_text(fs::path(a.out) / "losses.csv", losses_csv(trainer.history(), start));

  json rep = report::envelope("training", cfg.seed, cfg);
  stamp(rep, a.common);
  json sources = json::array(), domains = json::array();
  for (const auto& n : source_set.names) sources.push_back(n);
  for (const auto& n : domain_set.names) domains.push_back(n);
  rep["inputs"] = {{"source", sources},
                   {"domain", domains},
                   {"skipped_source", skipped_json(source_set)},
                   {"skipped_domain", skipped_json(domain_set)}};
  rep["resumed_from"] = a.resume.empty() ? json(nullptr) : json(a.resume);
  rep["iterations_run"] = trainer.history().size();
  if (failure) {
    rep["diverged"] = *failure;
    err << "error: " << *failure << "\n";
  } else {
    net::save_checkpoint(fs::path(a.out) / "final.dkgn", trainer.checkpoint());
    const auto& last = trainer.history().empty() ? net::GanLosses{} : trainer.history().back();
    rep["final_losses"] = {{"l_g", last.l_g}, {"l_d", last.l_d}, {"d_real", last.d_real}, {"d_fake", last.d_fake}};
    rep["train_key_entropy"] = mean_key_entropy(trainer.checkpoint().generator, train_images);
    if (!split.validation.empty()) {
      rep["validation"] = {
          {"indices", split.validation},
          {"fraction", a.val_fraction},
          {"mean_key_entropy", mean_key_entropy(trainer.checkpoint().generator, pick(source_set.images, split.validation))}};
    }
    out << "trained " << trainer.history().size() << " iterations; checkpoint " << (fs::path(a.out) / "final.dkgn").string()
        << "\n";
  }
  write_json(fs::path(a.out) / "train.json", rep);
  return status;
}

struct GenkeyArgs {
  std::string ckpt, seed_image, out, png;
};

void cmd_genkey(const GenkeyArgs& a, std::ostream& out) {
  const auto ck = net::load_checkpoint(a.ckpt);
  const auto seed = normalize(io::read_image(a.seed_image), ck.config.resolution);
  const auto k = net::generate_key(ck, seed);
  key::save_key(a.out, k);
  if (!a.png.empty()) key::export_key_png(a.png, k);
  out << "key " << k.width() << "x" << k.height() << " entropy " << analysis::entropy(k.bytes()) << " -> " << a.out
      << "\n";
}

struct XorArgs {
  std::string key, in, out;
};

void cmd_xor(const XorArgs& a, bool encrypt) {
  const auto k = read_key(a.key);
  const auto img = io::read_image(a.in);
  io::write_image(a.out, encrypt ? cipher::xor_encrypt(img, k) : cipher::xor_decrypt(img, k));
}

struct AnalyzeArgs {
  std::string key, plain, cipher, nist, csv;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  std::size_t samples = analysis::kCorrelationSamples;
  bool no_randomness = false;
  Common common;
};

report::AnalysisOptions analysis_options(const AnalyzeArgs& a) {
  report::AnalysisOptions o;
  o.nist = nist_params(a.nist);
  o.seed = resolve_seed(a.seed_opt, a.seed, 0);
  o.samples = a.samples;
  o.randomness = !a.no_randomness;
  return o;
}

json options_json(const report::AnalysisOptions& o) {
  return {{"nist", o.nist}, {"correlation_samples", o.samples}, {"randomness", o.randomness}};
}

void cmd_analyze_key(const AnalyzeArgs& a, std::ostream& out) {
  const auto o = analysis_options(a);
  const auto bytes = io::read_file(a.key);
  const auto k = fs::path(a.key).extension() == ".png" ? key::import_key_png(a.key) : key::decode_key(bytes);
  json rep = report::envelope("key", o.seed, options_json(o));
  stamp(rep, a.common);
  rep["inputs"] = json::array({report::input_record(fs::path(a.key).filename().string(), bytes)});
  rep["key"] = report::key_analysis(k, o);
  if (!a.csv.empty()) write_text(a.csv, report::statistics_csv(rep["key"]));
  emit(rep, a.common.out, out);
}

void cmd_analyze_cipher(const AnalyzeArgs& a, std::ostream& out) {
  const auto o = analysis_options(a);
  const auto pb = io::read_file(a.plain), cb = io::read_file(a.cipher);
  const auto plain = io::read_image(a.plain), cipher = io::read_image(a.cipher);
  json rep = report::envelope("cipher", o.seed, options_json(o));
  stamp(rep, a.common);
  rep["inputs"] = json::array({report::input_record(fs::path(a.plain).filename().string(), pb),
                               report::input_record(fs::path(a.cipher).filename().string(), cb)});
  rep["analysis"] = report::cipher_analysis(plain, cipher, o);
  if (!a.csv.empty()) write_text(a.csv, report::statistics_csv(rep["analysis"]["cipher"]));
  emit(rep, a.common.out, out);
}

struct BaselineArgs {
  std::size_t length = 196608;
  std::string nist, csv;
  bool no_randomness = false;
  Common common;
};

void cmd_compare_baselines(const BaselineArgs& a, std::ostream& out) {
  report::AnalysisOptions o;
  o.nist = nist_params(a.nist);
  o.randomness = !a.no_randomness;
  json rep = report::envelope("baselines", 0, {{"length", a.length}, {"nist", o.nist}});
  stamp(rep, a.common);
  rep["rows"] = report::baseline_comparison(a.length, o);
  if (!a.csv.empty()) {
    std::ostringstream s;
    s.precision(17);
    s << "generator,entropy";
    if (o.randomness) {
      for (const auto& t : rep["rows"][0]["randomness"]["tests"]) s << ',' << t["test"].get<std::string>();
    }
    s << '\n';
    for (const auto& row : rep["rows"]) {
      s << row["generator"].get<std::string>() << ',' << row["entropy"].get<double>();
      if (o.randomness) {
        for (const auto& t : row["randomness"]["tests"]) s << ',' << t["p_value"].get<double>();
      }
      s << '\n';
    }
    write_text(a.csv, s.str());
  }
  emit(rep, a.common.out, out);
}

struct AttackArgs {
  std::string plan, scenario, out, source, domain_plain, probe;
  int iterations = 0;
  int variants = 4;
  int threads = 1;
  int resolution = 64;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  bool contact = false;
  Common common;
};

int cmd_attack_lab(const AttackArgs& a, std::ostream& out, std::ostream& err) {
  attack::ExperimentPlan plan;
  if (!a.plan.empty()) {
    plan = read_json(a.plan).get<attack::ExperimentPlan>();
  } else {
    if (a.scenario.empty()) throw Error(ErrorCode::InvalidArgument, "either --plan or --scenario is required");
    net::TrainConfig base;
    base.resolution = a.resolution;
    const auto s = attack::scenario_from_string(a.scenario);
    switch (s) {
      case attack::Scenario::domain_leak: plan = attack::residual_study_plan(base); break;
      case attack::Scenario::structure_leak: plan = attack::two_domain_plan(base); break;
      case attack::Scenario::both_leak:
      case attack::Scenario::one_time_pad: plan = attack::repeated_training_plan(s, base, a.variants); break;
      default: plan = attack::repeated_training_plan(s, base, 1); break;
    }
  }
  if (a.iterations > 0) {
    for (auto& v : plan.variants) v.config.iterations = a.iterations;
  }
  if (a.threads > 1) plan.threads = a.threads;
  if ((a.seed_opt && a.seed_opt->count() > 0) || std::getenv("DKG_SEED")) {
    plan.data_seed = resolve_seed(a.seed_opt, a.seed, plan.data_seed);
  }
  plan.validate();

  attack::ExperimentInputs inputs = attack::synthetic_inputs(plan);
  json inputs_json = {{"source", "synthetic"}, {"domain_plain", "synthetic"}, {"probe", "synthetic"}};
  if (!a.source.empty()) {
    const auto set = io::ingest(a.source, plan.resolution);
    warn_skipped(set, a.source, err);
    inputs.source = set.images;
    inputs_json["source"] = a.source;
  }
  if (!a.domain_plain.empty()) {
    const auto set = io::ingest(a.domain_plain, plan.resolution);
    warn_skipped(set, a.domain_plain, err);
    inputs.domain_plain = set.images;
    inputs_json["domain_plain"] = a.domain_plain;
  }
  if (!a.probe.empty()) {
    inputs.probe = normalize(io::read_image(a.probe), plan.resolution);
    inputs_json["probe"] = report::input_record(fs::path(a.probe).filename().string(), io::read_file(a.probe));
  }

  const auto result = attack::run_experiment(plan, inputs);
  fs::create_directories(a.out);
  write_json(fs::path(a.out) / "plan.json", plan);
  json rep = report::envelope("attack", plan.data_seed, plan);
  stamp(rep, a.common);
  rep["inputs"] = inputs_json;
  rep["result"] = result;
  write_json(fs::path(a.out) / "report.json", rep);
  std::vector<key::ImageKey> keys;
  for (const auto& v : result.variants) {
    if (v.key) {
      key::save_key(fs::path(a.out) / (v.name + ".dkey"), *v.key);
      keys.push_back(*v.key);
    }
    if (v.error) err << "warning: variant " << v.name << " diverged: " << *v.error << "\n";
  }
  if (result.matrix) {
    write_text(fs::path(a.out) / "matrix.csv", result.matrix->csv());
    if (a.contact) io::write_image(fs::path(a.out) / "contact_sheet.png", contact_sheet(inputs.probe, keys));
    out << "decryption matrix " << result.matrix->labels.size() << "x" << result.matrix->labels.size()
        << ", diagonal exact: " << (result.matrix->diagonal_exact() ? "yes" : "no");
    if (const auto off = result.matrix->max_off_diagonal_ssim()) out << ", max off-diagonal SSIM " << *off;
    out << "\n";
  } else {
    out << "wrote " << (fs::path(a.out) / "report.json").string() << "\n";
  }
  return keys.empty() ? kDivergence : kOk;
}

struct SweepArgs {
  std::string source, domain, out, lrs = "0.02,0.002,0.0002", batches = "1,6,10", iterations = "200,500";
  int resolution = 64;
  int synthetic = 32;
  double val_fraction = 0.1;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  Common common;
};

void cmd_sweep(const SweepArgs& a, std::ostream& out, std::ostream& err) {
  const auto seed = resolve_seed(a.seed_opt, a.seed, 0);
  const auto lrs = parse_list<float>(a.lrs, "--lrs");
  const auto batches = parse_list<int>(a.batches, "--batches");
  auto iterations = parse_list<int>(a.iterations, "--iterations");
  std::sort(iterations.begin(), iterations.end());

  std::vector<RasterImage> source, domain;
  if (!a.source.empty()) {
    const auto set = io::ingest(a.source, a.resolution);
    warn_skipped(set, a.source, err);
    source = set.images;
  } else {
    source = synthetic::phantom_set(a.synthetic, a.resolution, Rng::derive(seed, 1).next_u64());
  }
  if (!a.domain.empty()) {
    const auto set = io::ingest(a.domain, a.resolution);
    warn_skipped(set, a.domain, err);
    domain = set.images;
  } else {
    domain = baseline::build_transformation_domain(
        synthetic::phantom_set(a.synthetic, a.resolution, Rng::derive(seed, 2).next_u64()), {}, 7);
  }
  const auto split = io::split_validation(source.size(), a.val_fraction, Rng::derive(seed, 4).next_u64());
  if (split.train.empty()) throw Error(ErrorCode::EmptyDomain, "validation split leaves no training images");
  const auto train = pick(source, split.train);
  const auto val = split.validation.empty() ? train : pick(source, split.validation);

  json cells = json::array();
  std::ostringstream csv;
  csv.precision(9);
  csv << "lr,batch,iterations,mean_key_entropy\n";
  for (float lr : lrs) {
    for (int batch : batches) {
      net::TrainConfig cfg;
      cfg.resolution = a.resolution;
      cfg.lr = lr;
      cfg.batch_size = batch;
      cfg.seed = seed;
      cfg.iterations = iterations.back();
      cfg.validate();
      net::Trainer trainer(cfg, train, domain);
      std::size_t next = 0;
      bool diverged = false;
      // evaluate each requested iteration count along one run
      auto record = [&](int at, std::optional<double> value) {
        cells.push_back({{"lr", lr}, {"batch", batch}, {"iterations", at},
                         {"mean_key_entropy", value ? json(*value) : json(nullptr)}});
        csv << std::setprecision(6) << lr << std::setprecision(9) << ',' << batch << ',' << at << ',';
        if (value) csv << *value;
        else csv << "nan";
        csv << '\n';
      };
      try {
        trainer.run([&](std::uint64_t it, const net::GanLosses&) {
          while (next < iterations.size() && static_cast<int>(it) == iterations[next]) {
            record(iterations[next], mean_key_entropy(trainer.checkpoint().generator, val));
            ++next;
          }
        });
      } catch (const Error& e) {
        if (e.code() != ErrorCode::DivergenceError) throw;
        diverged = true;
      }
      for (; next < iterations.size(); ++next) record(iterations[next], std::nullopt);
      out << "lr " << lr << " batch " << batch << (diverged ? " diverged" : " done") << "\n";
    }
  }
  fs::create_directories(a.out);
  json rep = report::envelope("sweep", seed, {{"lrs", lrs}, {"batches", batches}, {"iterations", iterations},
                                              {"resolution", a.resolution}, {"val_fraction", a.val_fraction},
                                              {"source", a.source.empty() ? json("synthetic") : json(a.source)},
                                              {"domain", a.domain.empty() ? json("synthetic") : json(a.domain)}});
  stamp(rep, a.common);
  rep["validation_indices"] = split.validation;
  rep["cells"] = cells;
  write_json(fs::path(a.out) / "sweep.json", rep);
  write_text(fs::path(a.out) / "sweep.csv", csv.str());
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::InvalidArgument: return kUsage;
    case ErrorCode::DivergenceError:
    case ErrorCode::NonFinite: return kDivergence;
    default: return kDataError;
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Image-form key generation, XOR image encryption and security analysis"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  auto add_common = [](CLI::App* sub, Common& c, bool with_out = true) {
    if (with_out) sub->add_option("--out", c.out, "Write the JSON report here instead of stdout");
    sub->add_flag("--timestamp", c.timestamp, "Add a creation time to the report (breaks byte-identical reruns)");
  };

  PhantomsArgs ph;
  auto* s_ph = app.add_subcommand("phantoms", "Write synthetic grayscale test images");
  s_ph->add_option("--out", ph.out, "Output directory")->required();
  s_ph->add_option("--count", ph.count)->check(CLI::PositiveNumber);
  s_ph->add_option("--resolution", ph.resolution)->check(CLI::Range(2, 4096));
  ph.seed_opt = s_ph->add_option("--seed", ph.seed);

  DomainArgs dm;
  auto* s_dm = app.add_subcommand("build-domain", "Chaotically encrypt a directory of images into a transformation domain");
  s_dm->add_option("--in", dm.in, "Plain image directory")->required();
  s_dm->add_option("--out", dm.out, "Output directory")->required();
  s_dm->add_option("--resolution", dm.resolution);
  dm.seed_opt = s_dm->add_option("--seed", dm.seed, "Master seed for the per-image chaotic keys");
  s_dm->add_option("--r", dm.r, "Logistic-map parameter");
  s_dm->add_option("--burn-in", dm.burn_in);
  s_dm->add_option("--extraction", dm.extraction, "digits or msb");

  TrainArgs tr;
  auto* s_tr = app.add_subcommand("train", "Train a key generator");
  s_tr->add_option("--source", tr.source, "Seed (source-domain) image directory")->required();
  s_tr->add_option("--domain", tr.domain, "Transformation-domain image directory")->required();
  s_tr->add_option("--out", tr.out, "Output directory")->required();
  s_tr->add_option("--config", tr.config, "Training configuration JSON");
  s_tr->add_option("--resume", tr.resume, "Continue from a checkpoint");
  s_tr->add_option("--resolution", tr.cfg.resolution);
  s_tr->add_option("--iterations", tr.cfg.iterations);
  s_tr->add_option("--lr", tr.cfg.lr);
  s_tr->add_option("--batch", tr.cfg.batch_size);
  s_tr->add_option("--residual-blocks", tr.cfg.residual_blocks);
  s_tr->add_option("--checkpoint-every", tr.cfg.checkpoint_every, "Snapshot interval in iterations (0 = off)");
  s_tr->add_flag("--non-saturating", tr.cfg.non_saturating_g_loss, "Use -log D(G(x)) as the generator loss");
  tr.seed_opt = s_tr->add_option("--seed", tr.cfg.seed);
  s_tr->add_option("--val-fraction", tr.val_fraction, "Hold out this fraction of source images")
      ->check(CLI::Range(0.0, 0.99));
  add_common(s_tr, tr.common, false);

  GenkeyArgs gk;
  auto* s_gk = app.add_subcommand("genkey", "Generate a key from a seed image");
  s_gk->add_option("--ckpt", gk.ckpt)->required();
  s_gk->add_option("--seed-image", gk.seed_image)->required();
  s_gk->add_option("--out", gk.out, ".dkey output")->required();
  s_gk->add_option("--png", gk.png, "Also export the key as a PNG");

  XorArgs enc, dec;
  auto* s_enc = app.add_subcommand("encrypt", "XOR-encrypt an image with a key");
  auto* s_dec = app.add_subcommand("decrypt", "XOR-decrypt an image with a key");
  for (auto [sub, args] : {std::pair{s_enc, &enc}, std::pair{s_dec, &dec}}) {
    sub->add_option("--key", args->key, ".dkey or key PNG")->required();
    sub->add_option("--in", args->in)->required();
    sub->add_option("--out", args->out)->required();
  }

  AnalyzeArgs ak, ac;
  auto* s_ak = app.add_subcommand("analyze-key", "Entropy, histogram, correlation and randomness tests of a key");
  s_ak->add_option("key", ak.key, ".dkey or key PNG")->required();
  auto* s_ac = app.add_subcommand("analyze-cipher", "Statistics of a ciphertext against its plaintext");
  s_ac->add_option("--plain", ac.plain)->required();
  s_ac->add_option("--cipher", ac.cipher)->required();
  for (auto [sub, args] : {std::pair{s_ak, &ak}, std::pair{s_ac, &ac}}) {
    sub->add_option("--nist-params", args->nist, "JSON overrides for the randomness tests");
    args->seed_opt = sub->add_option("--seed", args->seed, "Correlation sampling seed");
    sub->add_option("--samples", args->samples, "Correlation pairs per direction");
    sub->add_option("--csv", args->csv, "Histogram and correlation rows as CSV");
    sub->add_flag("--no-randomness", args->no_randomness, "Skip the bitstream tests");
    add_common(sub, args->common);
  }

  BaselineArgs bl;
  auto* s_bl = app.add_subcommand("compare-baselines", "Entropy and randomness of chaotic/LCG/MT19937/RC4 keystreams");
  s_bl->add_option("--length", bl.length, "Bytes per keystream")->check(CLI::PositiveNumber);
  s_bl->add_option("--nist-params", bl.nist);
  s_bl->add_option("--csv", bl.csv);
  s_bl->add_flag("--no-randomness", bl.no_randomness);
  add_common(s_bl, bl.common);

  AttackArgs at;
  auto* s_at = app.add_subcommand("attack-lab", "Leakage, one-time-pad and differential experiments");
  s_at->add_option("--plan", at.plan, "Experiment plan JSON");
  s_at->add_option("--scenario", at.scenario,
                   "domain_leak, structure_leak, both_leak, one_time_pad, sensitivity, chosen_plaintext, "
                   "chosen_ciphertext");
  s_at->add_option("--out", at.out, "Output directory")->required();
  s_at->add_option("--iterations", at.iterations, "Override every variant's iteration count");
  s_at->add_option("--variants", at.variants, "Trainings for both_leak/one_time_pad")->check(CLI::Range(2, 64));
  s_at->add_option("--resolution", at.resolution);
  s_at->add_option("--threads", at.threads, "Variants trained concurrently")->check(CLI::PositiveNumber);
  s_at->add_option("--source", at.source, "Seed image directory (default: synthetic)");
  s_at->add_option("--domain-plain", at.domain_plain, "Images the domains are built from (default: synthetic)");
  s_at->add_option("--probe", at.probe, "Probe plaintext (default: synthetic)");
  at.seed_opt = s_at->add_option("--seed", at.seed, "Data seed");
  s_at->add_flag("--contact-sheet", at.contact, "Write a PNG grid of all decryption attempts");
  add_common(s_at, at.common, false);

  SweepArgs sw;
  auto* s_sw = app.add_subcommand("sweep", "Mean key entropy over a learning-rate x batch x iteration grid");
  s_sw->add_option("--out", sw.out, "Output directory")->required();
  s_sw->add_option("--source", sw.source);
  s_sw->add_option("--domain", sw.domain);
  s_sw->add_option("--lrs", sw.lrs, "Comma-separated learning rates");
  s_sw->add_option("--batches", sw.batches, "Comma-separated batch sizes");
  s_sw->add_option("--iterations", sw.iterations, "Comma-separated iteration counts");
  s_sw->add_option("--resolution", sw.resolution);
  s_sw->add_option("--synthetic", sw.synthetic, "Synthetic images per set when no directories are given");
  s_sw->add_option("--val-fraction", sw.val_fraction)->check(CLI::Range(0.0, 0.99));
  sw.seed_opt = s_sw->add_option("--seed", sw.seed);
  add_common(s_sw, sw.common, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*s_ph) cmd_phantoms(ph, out);
    else if (*s_dm) cmd_build_domain(dm, out, err);
    else if (*s_tr) return cmd_train(tr, *s_tr, out, err);
    else if (*s_gk) cmd_genkey(gk, out);
    else if (*s_enc) cmd_xor(enc, true);
    else if (*s_dec) cmd_xor(dec, false);
    else if (*s_ak) cmd_analyze_key(ak, out);
    else if (*s_ac) cmd_analyze_cipher(ac, out);
    else if (*s_bl) cmd_compare_baselines(bl, out);
    else if (*s_at) return cmd_attack_lab(at, out, err);
    else if (*s_sw) cmd_sweep(sw, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kOk;
}

}  // namespace dkg::cli
