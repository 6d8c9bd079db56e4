#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dkg/image.hpp"
#include "dkg/key/image_key.hpp"
#include "dkg/net/network.hpp"
#include "dkg/rng.hpp"

namespace dkg::net {

/// Scores are clamped to [kScoreClamp, 1 - kScoreClamp] before any log.
inline constexpr float kScoreClamp = 1e-7f;

/// Generator objective for one fake score: log(1 - D(G(x))) (minimized), or
/// -log D(G(x)) in the non-saturating variant.
double g_loss(double d_score_fake, bool non_saturating = false);
/// Discriminator objective: -[log D(y) + log(1 - D(G(x)))].
double d_loss(double d_score_real, double d_score_fake);

tensor::Tensor g_loss(const tensor::Tensor& d_score_fake, bool non_saturating);
tensor::Tensor d_loss(const tensor::Tensor& d_score_real, const tensor::Tensor& d_score_fake);

struct GanLosses {
  double l_g = 0.0;
  double l_d = 0.0;
  double l_total = 0.0;  // l_g + l_d
  double d_real = 0.0;   // mean discriminator score on domain samples
  double d_fake = 0.0;   // mean discriminator score on generated samples
};

struct TrainConfig {
  int resolution = 64;
  int iterations = 2000;
  float lr = 0.0002f;
  float beta1 = 0.5f;
  float beta2 = 0.999f;
  int batch_size = 1;
  std::uint64_t seed = 0;
  bool non_saturating_g_loss = false;
  int checkpoint_every = 0;  // 0 disables periodic snapshots
  int residual_blocks = 6;

  void validate() const;
  tensor::AdamConfig adam() const { return {lr, beta1, beta2, 1e-8f}; }

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

void to_json(nlohmann::json& j, const TrainConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected.
void from_json(const nlohmann::json& j, TrainConfig& cfg);

/// Everything needed to resume a session or generate keys.
struct Checkpoint {
  static constexpr std::uint16_t kVersion = 1;

  TrainConfig config;
  Network generator;
  Network discriminator;
  tensor::AdamState g_opt;
  tensor::AdamState d_opt;
  std::uint64_t iteration = 0;
  std::uint64_t sampler_state = 0;  // position of the data-sampling stream
};

/// "DKGN", u16 version, u32-length JSON block (config, specs, iteration,
/// optimizer counters), u32 record count, per-tensor records (u16 name
/// length, name, u8 rank, u32 extents, little-endian float32 payload), CRC32
/// over everything before it.
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Fresh, seeded networks and optimizer state for `cfg`.
Checkpoint initial_checkpoint(const TrainConfig& cfg);

/// Bytes -> [1,3,H,W] tensor in [-1,1]; grayscale is replicated to RGB.
tensor::Tensor image_to_tensor(const RasterImage& image);
/// Generator output [1,3,H,W] in [-1,1] -> bytes via round((t+1)/2*255).
key::ImageKey tensor_to_key(const tensor::Tensor& t);

/// KEY = G(W; x). The seed image must already be at the generator's
/// resolution.
key::ImageKey generate_key(const Checkpoint& ckpt, const RasterImage& seed_image);
key::ImageKey generate_key(const Network& generator, const RasterImage& seed_image);

/// Alternating D/G optimization over unpaired samples from two image sets.
class Trainer {
 public:
  /// Images must be RGB at cfg.resolution (see io::ingest).
  Trainer(TrainConfig cfg, std::vector<RasterImage> source, std::vector<RasterImage> domain);
  /// Resume from a checkpoint; its embedded config is used.
  Trainer(Checkpoint ckpt, std::vector<RasterImage> source, std::vector<RasterImage> domain);

  /// One iteration: a D step on detached fakes, then a G step against the
  /// updated D. Throws DivergenceError on a non-finite loss.
  GanLosses step();

  /// Runs until cfg.iterations; `on_step` (optional) sees each iteration.
  void run(const std::function<void(std::uint64_t, const GanLosses&)>& on_step = {});

  const Checkpoint& checkpoint() const noexcept { return ckpt_; }
  const std::vector<GanLosses>& history() const noexcept { return history_; }

 private:
  void load_data(std::vector<RasterImage> source, std::vector<RasterImage> domain);

  Checkpoint ckpt_;
  std::vector<tensor::Tensor> source_;
  std::vector<tensor::Tensor> domain_;
  Rng sampler_;
  std::vector<GanLosses> history_;
};

}  // namespace dkg::net
