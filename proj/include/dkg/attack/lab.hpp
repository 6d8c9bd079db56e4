#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dkg/analysis/metrics.hpp"
#include "dkg/baseline/keystreams.hpp"
#include "dkg/image.hpp"
#include "dkg/key/image_key.hpp"
#include "dkg/net/gan.hpp"

namespace dkg::attack {

enum class Scenario {
  domain_leak,
  structure_leak,
  both_leak,
  one_time_pad,
  sensitivity,
  chosen_plaintext,
  chosen_ciphertext,
};

std::string_view to_string(Scenario s) noexcept;
Scenario scenario_from_string(std::string_view s);

/// How a transformation domain is made from plain images: the chaotic
/// permute-and-XOR cipher, or a plain XOR with a baseline keystream.
enum class DomainStyle { chaotic, keystream };

struct DomainSpec {
  std::string name = "chaotic";
  DomainStyle style = DomainStyle::chaotic;
  baseline::ChaosSpec chaos;          // chaotic style
  baseline::KeystreamSpec keystream;  // keystream style; length is set per image
  std::uint64_t seed = 7;
};

struct Variant {
  std::string name;
  net::TrainConfig config;
  std::string domain = "chaotic";  // name of a DomainSpec in the plan
};

/// Everything an experiment needs; replaying a plan reproduces its report.
struct ExperimentPlan {
  Scenario scenario = Scenario::both_leak;
  int resolution = 64;
  std::uint64_t data_seed = 1;  // synthetic source/domain/probe images
  int source_count = 32;
  int domain_count = 32;
  std::vector<DomainSpec> domains = {DomainSpec{}};
  std::vector<Variant> variants;
  std::size_t seed_image = 0;  // index into the source set
  int trials = 8;              // differential experiments
  std::uint64_t trial_seed = 11;
  int threads = 1;  // variants trained concurrently

  /// Throws InvalidArgument on an inconsistent plan, including fewer than
  /// two variants for a matrix scenario.
  void validate() const;
};

void to_json(nlohmann::json& j, const ExperimentPlan& p);
void from_json(const nlohmann::json& j, ExperimentPlan& p);

/// Variants A-D of the architecture study: 3, 6, 9 and 12 residual blocks,
/// all on one domain.
ExperimentPlan residual_study_plan(const net::TrainConfig& base);
/// `count` trainings of one configuration that differ only in seed.
ExperimentPlan repeated_training_plan(Scenario scenario, const net::TrainConfig& base, int count);
/// One architecture trained on two differently built domains.
ExperimentPlan two_domain_plan(const net::TrainConfig& base);

/// Inputs shared by every variant: plain images for the source set, a plain
/// set from which each domain is built, and a structured probe plaintext.
struct ExperimentInputs {
  std::vector<RasterImage> source;
  std::vector<RasterImage> domain_plain;
  RasterImage probe;
};

/// Synthetic phantoms drawn from plan.data_seed.
ExperimentInputs synthetic_inputs(const ExperimentPlan& plan);

std::vector<RasterImage> build_domain(const DomainSpec& spec, const std::vector<RasterImage>& plain);

/// cells[i][j] compares the plaintext with decrypt(encrypt(p, key_i), key_j).
struct DecryptionMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<analysis::SimilarityMetrics>> cells;

  /// MSE 0 and SSIM 1 on every diagonal cell.
  bool diagonal_exact() const noexcept;
  /// Largest off-diagonal SSIM, or nullopt for a 1x1 matrix.
  std::optional<double> max_off_diagonal_ssim() const noexcept;
  /// "encrypt_key,decrypt_key,mse,ssim" rows.
  std::string csv() const;
};

DecryptionMatrix decryption_matrix(const RasterImage& plaintext, const std::vector<key::ImageKey>& keys,
                                   const std::vector<std::string>& labels);

void to_json(nlohmann::json& j, const DecryptionMatrix& m);

struct VariantOutcome {
  std::string name;
  std::optional<std::string> error;  // set when training diverged
  std::optional<net::GanLosses> final_losses;
  std::optional<key::ImageKey> key;
  std::optional<net::Checkpoint> checkpoint;
};

/// Trains every variant on its domain. A diverging variant is reported and
/// the others continue.
std::vector<VariantOutcome> train_variants(const ExperimentPlan& plan, const ExperimentInputs& inputs);

struct DifferentialTrial {
  key::PixelChange change;
  analysis::DiffMetrics keys;     // between the two keys
  analysis::DiffMetrics outputs;  // between the two ciphertexts (or plaintexts)
  bool identity_holds = false;    // outputs XOR to exactly the keys' XOR
};

struct DifferentialReport {
  std::vector<DifferentialTrial> trials;
  analysis::DiffMetrics mean_outputs;
  analysis::DiffMetrics mean_keys;
  bool identity_holds = false;  // on every trial
};

/// Perturbs one byte of the seed image per trial and compares the
/// ciphertexts of one plaintext under the two resulting keys.
DifferentialReport chosen_plaintext(const net::Network& generator, const RasterImage& seed_image,
                                    const RasterImage& plaintext, int trials, std::uint64_t seed);
/// Mirror on the decryption side: one ciphertext decrypted under both keys.
DifferentialReport chosen_ciphertext(const net::Network& generator, const RasterImage& seed_image,
                                     const RasterImage& ciphertext, int trials, std::uint64_t seed);

struct SensitivityTrial {
  key::PixelChange change;
  analysis::DiffMetrics keys;
  analysis::SimilarityMetrics wrong_key_decryption;
};

/// Keys from perturbed seeds against the original key, plus how well each
/// perturbed key decrypts the original key's ciphertext of `plaintext`.
std::vector<SensitivityTrial> sensitivity(const net::Network& generator, const RasterImage& seed_image,
                                          const RasterImage& plaintext, int trials, std::uint64_t seed);

void to_json(nlohmann::json& j, const DifferentialReport& r);
void to_json(nlohmann::json& j, const SensitivityTrial& t);

struct ExperimentReport {
  ExperimentPlan plan;
  std::vector<VariantOutcome> variants;
  std::optional<DecryptionMatrix> matrix;
  nlohmann::json details;  // scenario-specific blocks
};

/// Runs plan.scenario end to end. Differential scenarios use the first
/// variant that trains successfully and throw DivergenceError if none does.
ExperimentReport run_experiment(const ExperimentPlan& plan, const ExperimentInputs& inputs);

void to_json(nlohmann::json& j, const ExperimentReport& r);

}  // namespace dkg::attack
