#include "dkg/net/gan.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "dkg/binary.hpp"
#include "dkg/codec.hpp"
#include "dkg/error.hpp"

namespace dkg::net {

using tensor::Tensor;

namespace {

constexpr char kMagic[4] = {'D', 'K', 'G', 'N'};

double clamp_score(double s) { return std::clamp(s, static_cast<double>(kScoreClamp), 1.0 - kScoreClamp); }

}  // namespace

double g_loss(double d_score_fake, bool non_saturating) {
  const double s = clamp_score(d_score_fake);
  return non_saturating ? -std::log(s) : std::log(1.0 - s);
}

double d_loss(double d_score_real, double d_score_fake) {
  return -(std::log(clamp_score(d_score_real)) + std::log(1.0 - clamp_score(d_score_fake)));
}

Tensor g_loss(const Tensor& d_score_fake, bool non_saturating) {
  if (non_saturating) return tensor::affine(tensor::log_clamped(d_score_fake, kScoreClamp, 1 - kScoreClamp), -1, 0);
  return tensor::log_clamped(tensor::affine(d_score_fake, -1, 1), kScoreClamp, 1 - kScoreClamp);
}

Tensor d_loss(const Tensor& d_score_real, const Tensor& d_score_fake) {
  const Tensor real = tensor::log_clamped(d_score_real, kScoreClamp, 1 - kScoreClamp);
  const Tensor fake = tensor::log_clamped(tensor::affine(d_score_fake, -1, 1), kScoreClamp, 1 - kScoreClamp);
  return tensor::affine(tensor::add(real, fake), -1, 0);
}

// ---------------------------------------------------------------------------
// config

void TrainConfig::validate() const {
  validate_resolution(resolution);
  if (iterations < 0) throw Error(ErrorCode::InvalidArgument, "iterations must be >= 0");
  if (batch_size < 1) throw Error(ErrorCode::InvalidArgument, "batch_size must be >= 1");
  if (!(lr > 0) || !std::isfinite(lr)) throw Error(ErrorCode::InvalidArgument, "lr must be positive");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) {
    throw Error(ErrorCode::InvalidArgument, "Adam betas must lie in [0,1)");
  }
  if (checkpoint_every < 0) throw Error(ErrorCode::InvalidArgument, "checkpoint_every must be >= 0");
  if (residual_blocks < 0) throw Error(ErrorCode::InvalidArgument, "residual_blocks must be >= 0");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"resolution", c.resolution},
       {"iterations", c.iterations},
       {"lr", c.lr},
       {"beta1", c.beta1},
       {"beta2", c.beta2},
       {"batch_size", c.batch_size},
       {"seed", c.seed},
       {"non_saturating_g_loss", c.non_saturating_g_loss},
       {"checkpoint_every", c.checkpoint_every},
       {"residual_blocks", c.residual_blocks}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  if (!j.is_object()) throw Error(ErrorCode::FormatError, "train config must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "resolution") c.resolution = value.get<int>();
      else if (key == "iterations") c.iterations = value.get<int>();
      else if (key == "lr") c.lr = value.get<float>();
      else if (key == "beta1") c.beta1 = value.get<float>();
      else if (key == "beta2") c.beta2 = value.get<float>();
      else if (key == "batch_size") c.batch_size = value.get<int>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "non_saturating_g_loss") c.non_saturating_g_loss = value.get<bool>();
      else if (key == "checkpoint_every") c.checkpoint_every = value.get<int>();
      else if (key == "residual_blocks") c.residual_blocks = value.get<int>();
      else throw Error(ErrorCode::InvalidArgument, "unknown train config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("train config: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// checkpoint

Checkpoint initial_checkpoint(const TrainConfig& cfg) {
  cfg.validate();
  Checkpoint c;
  c.config = cfg;
  c.generator = Network(build_generator(cfg.resolution, cfg.residual_blocks));
  c.discriminator = Network(build_discriminator());
  tensor::seeded_normal_init(c.generator.params(), Rng::derive(cfg.seed, 1).next_u64());
  tensor::seeded_normal_init(c.discriminator.params(), Rng::derive(cfg.seed, 2).next_u64());
  c.g_opt = tensor::AdamState::for_params(c.generator.params(), cfg.adam());
  c.d_opt = tensor::AdamState::for_params(c.discriminator.params(), cfg.adam());
  c.sampler_state = Rng::derive(cfg.seed, 3).state();
  return c;
}

namespace {

void put_record(io::ByteWriter& w, const std::string& name, const tensor::Shape& shape, std::span<const float> data) {
  w.put_u16(static_cast<std::uint16_t>(name.size()));
  w.put_string(name);
  w.put_u8(static_cast<std::uint8_t>(shape.size()));
  for (auto d : shape) w.put_u32(static_cast<std::uint32_t>(d));
  for (float f : data) w.put_f32(f);
}

void get_record(io::ByteReader& r, const std::string& expected_name, const tensor::Shape& expected_shape,
                std::span<float> out) {
  const std::uint16_t len = r.u16();
  const std::string name = r.string(len);
  if (name != expected_name) {
    throw Error(ErrorCode::FormatError, "checkpoint record '" + name + "' where '" + expected_name + "' was expected");
  }
  const std::uint8_t rank = r.u8();
  tensor::Shape shape(rank);
  for (auto& d : shape) d = r.u32();
  if (shape != expected_shape) {
    throw Error(ErrorCode::FormatError, "checkpoint record '" + name + "' has shape " + tensor::shape_string(shape) +
                                            ", expected " + tensor::shape_string(expected_shape));
  }
  for (auto& f : out) {
    f = r.f32();
    if (!std::isfinite(f)) throw Error(ErrorCode::FormatError, "non-finite value in record '" + name + "'");
  }
}

// Per-network record layout: weights, then Adam first and second moments.
template <typename Fn>
void for_each_record(const std::string& tag, Network& net, tensor::AdamState& opt, Fn&& fn) {
  auto& params = net.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    fn(tag + "/" + params[i].name, params[i].value.shape(), params[i].value.mutable_data());
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    fn(tag + ".adam_m/" + params[i].name, params[i].value.shape(), std::span<float>(opt.m[i]));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    fn(tag + ".adam_v/" + params[i].name, params[i].value.shape(), std::span<float>(opt.v[i]));
  }
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  nlohmann::json meta;
  meta["config"] = ckpt.config;
  meta["generator"] = ckpt.generator.spec();
  meta["discriminator"] = ckpt.discriminator.spec();
  meta["iteration"] = ckpt.iteration;
  meta["sampler_state"] = ckpt.sampler_state;
  meta["g_adam_step"] = ckpt.g_opt.step;
  meta["d_adam_step"] = ckpt.d_opt.step;
  const std::string meta_text = meta.dump();

  io::ByteWriter w;
  w.put_string(std::string_view(kMagic, 4));
  w.put_u16(Checkpoint::kVersion);
  w.put_u32(static_cast<std::uint32_t>(meta_text.size()));
  w.put_string(meta_text);
  w.put_u32(static_cast<std::uint32_t>(3 * (ckpt.generator.params().size() + ckpt.discriminator.params().size())));
  // the record walk needs mutable spans; encoding never writes through them
  auto& c = const_cast<Checkpoint&>(ckpt);
  auto put = [&](const std::string& name, const tensor::Shape& shape, std::span<float> data) {
    put_record(w, name, shape, data);
  };
  for_each_record("G", c.generator, c.g_opt, put);
  for_each_record("D", c.discriminator, c.d_opt, put);
  w.put_u32(io::crc32(w.bytes()));
  return w.take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 + 2 + 4 ||
      !std::equal(kMagic, kMagic + 4, reinterpret_cast<const char*>(bytes.data()))) {
    throw Error(ErrorCode::FormatError, "not a checkpoint (bad magic)");
  }
  if (bytes.size() < 4 + 2 + 4 + 4) throw Error(ErrorCode::FormatError, "truncated checkpoint");
  const auto body = bytes.first(bytes.size() - 4);
  io::ByteReader trailer(bytes.last(4));
  if (trailer.u32() != io::crc32(body)) throw Error(ErrorCode::IntegrityError, "checkpoint CRC mismatch");

  io::ByteReader r(body);
  r.take(4);
  const std::uint16_t version = r.u16();
  if (version != Checkpoint::kVersion) {
    throw Error(ErrorCode::FormatError, "unsupported checkpoint version " + std::to_string(version));
  }
  const std::string meta_text = r.string(r.u32());
  Checkpoint c;
  try {
    const auto meta = nlohmann::json::parse(meta_text);
    c.config = meta.at("config").get<TrainConfig>();
    c.generator = Network(meta.at("generator").get<NetworkSpec>());
    c.discriminator = Network(meta.at("discriminator").get<NetworkSpec>());
    c.iteration = meta.at("iteration").get<std::uint64_t>();
    c.sampler_state = meta.at("sampler_state").get<std::uint64_t>();
    c.g_opt = tensor::AdamState::for_params(c.generator.params(), c.config.adam());
    c.d_opt = tensor::AdamState::for_params(c.discriminator.params(), c.config.adam());
    c.g_opt.step = meta.at("g_adam_step").get<std::uint64_t>();
    c.d_opt.step = meta.at("d_adam_step").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("checkpoint metadata: ") + e.what());
  }
  c.config.validate();
  if (c.generator.spec().role != NetRole::generator || c.discriminator.spec().role != NetRole::discriminator) {
    throw Error(ErrorCode::FormatError, "checkpoint network roles are swapped");
  }

  const std::uint32_t count = r.u32();
  if (count != 3 * (c.generator.params().size() + c.discriminator.params().size())) {
    throw Error(ErrorCode::FormatError, "checkpoint record count does not match its network specs");
  }
  auto get = [&](const std::string& name, const tensor::Shape& shape, std::span<float> data) {
    get_record(r, name, shape, data);
  };
  for_each_record("G", c.generator, c.g_opt, get);
  for_each_record("D", c.discriminator, c.d_opt, get);
  if (r.remaining() != 0) throw Error(ErrorCode::FormatError, "trailing bytes in checkpoint");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  io::write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(io::read_file(path)); }

// ---------------------------------------------------------------------------
// key generation

Tensor image_to_tensor(const RasterImage& image) {
  const RasterImage rgb = to_rgb(image);
  const auto w = static_cast<std::size_t>(rgb.width());
  const auto h = static_cast<std::size_t>(rgb.height());
  std::vector<float> data(3 * w * h);
  const auto bytes = rgb.bytes();
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t p = 0; p < w * h; ++p) data[c * w * h + p] = bytes[p * 3 + c] / 127.5f - 1.0f;
  }
  return Tensor::from_data({1, 3, h, w}, std::move(data));
}

key::ImageKey tensor_to_key(const Tensor& t) {
  const auto& s = t.shape();
  if (s.size() != 4 || s[0] != 1 || s[1] != 3) {
    throw Error(ErrorCode::InvalidShape, "expected a [1,3,H,W] tensor, got " + tensor::shape_string(s));
  }
  const std::size_t plane = s[2] * s[3];
  const auto data = t.data();
  std::vector<std::uint8_t> bytes(3 * plane);
  for (std::size_t p = 0; p < plane; ++p) {
    for (std::size_t c = 0; c < 3; ++c) {
      const double v = std::round((static_cast<double>(data[c * plane + p]) + 1.0) / 2.0 * 255.0);
      bytes[p * 3 + c] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
    }
  }
  return key::ImageKey(static_cast<int>(s[3]), static_cast<int>(s[2]), std::move(bytes));
}

key::ImageKey generate_key(const Network& generator, const RasterImage& seed_image) {
  if (generator.spec().role != NetRole::generator) throw Error(ErrorCode::InvalidArgument, "not a generator");
  tensor::NoGradGuard no_grad;
  return tensor_to_key(generator.forward(image_to_tensor(seed_image)));
}

key::ImageKey generate_key(const Checkpoint& ckpt, const RasterImage& seed_image) {
  const int res = ckpt.config.resolution;
  if (seed_image.width() != res || seed_image.height() != res) {
    throw Error(ErrorCode::ResolutionMismatch, "seed image is " + std::to_string(seed_image.width()) + "x" +
                                                   std::to_string(seed_image.height()) + ", checkpoint expects " +
                                                   std::to_string(res) + "x" + std::to_string(res));
  }
  return generate_key(ckpt.generator, seed_image);
}

// ---------------------------------------------------------------------------
// training

Trainer::Trainer(TrainConfig cfg, std::vector<RasterImage> source, std::vector<RasterImage> domain)
    : Trainer(initial_checkpoint(cfg), std::move(source), std::move(domain)) {}

Trainer::Trainer(Checkpoint ckpt, std::vector<RasterImage> source, std::vector<RasterImage> domain)
    : ckpt_(std::move(ckpt)), sampler_(ckpt_.sampler_state) {
  ckpt_.config.validate();
  load_data(std::move(source), std::move(domain));
}

void Trainer::load_data(std::vector<RasterImage> source, std::vector<RasterImage> domain) {
  if (source.empty()) throw Error(ErrorCode::EmptyDomain, "source image set is empty");
  if (domain.empty()) throw Error(ErrorCode::EmptyDomain, "transformation-domain image set is empty");
  const int res = ckpt_.config.resolution;
  auto convert = [res](const std::vector<RasterImage>& images, std::vector<Tensor>& out) {
    for (const auto& img : images) {
      if (img.width() != res || img.height() != res) {
        throw Error(ErrorCode::ResolutionMismatch, "training image is " + std::to_string(img.width()) + "x" +
                                                       std::to_string(img.height()) + ", expected " +
                                                       std::to_string(res));
      }
      out.push_back(image_to_tensor(img));
    }
  };
  convert(source, source_);
  convert(domain, domain_);
}

GanLosses Trainer::step() {
  auto& g = ckpt_.generator;
  auto& d = ckpt_.discriminator;
  const int batch = ckpt_.config.batch_size;
  const float inv_batch = 1.0f / static_cast<float>(batch);
  GanLosses out;
  try {
    // Unpaired sampling; the generator's forward pass is shared by the D step
    // (through a detached copy) and the G step, since G does not change
    // in between.
    std::vector<Tensor> fakes;
    std::vector<std::size_t> reals;
    for (int b = 0; b < batch; ++b) {
      const auto xi = sampler_.uniform_int(source_.size());
      const auto yi = sampler_.uniform_int(domain_.size());
      fakes.push_back(g.forward(source_[xi]));
      reals.push_back(yi);
    }

    for (int b = 0; b < batch; ++b) {
      const Tensor real = discriminator_score(d, domain_[reals[b]]);
      const Tensor fake = discriminator_score(d, fakes[b].detach());
      const Tensor loss = tensor::affine(d_loss(real, fake), inv_batch, 0);
      loss.backward();
      out.l_d += loss.item();
      out.d_real += real.item() * inv_batch;
    }
    tensor::adam_step(d.params(), ckpt_.d_opt);

    for (int b = 0; b < batch; ++b) {
      const Tensor fake = discriminator_score(d, fakes[b]);
      const Tensor loss = tensor::affine(g_loss(fake, ckpt_.config.non_saturating_g_loss), inv_batch, 0);
      loss.backward();
      out.l_g += loss.item();
      out.d_fake += fake.item() * inv_batch;
    }
    tensor::adam_step(g.params(), ckpt_.g_opt);
    d.params().zero_grad();  // the G step also reached D's weights
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NonFinite) throw;
    throw Error(ErrorCode::DivergenceError,
                "training diverged at iteration " + std::to_string(ckpt_.iteration + 1) + " (" + e.what() + ")");
  }
  out.l_total = out.l_g + out.l_d;
  if (!std::isfinite(out.l_total)) {
    throw Error(ErrorCode::DivergenceError, "non-finite loss at iteration " + std::to_string(ckpt_.iteration + 1));
  }
  ++ckpt_.iteration;
  ckpt_.sampler_state = sampler_.state();
  history_.push_back(out);
  return out;
}

void Trainer::run(const std::function<void(std::uint64_t, const GanLosses&)>& on_step) {
  while (ckpt_.iteration < static_cast<std::uint64_t>(ckpt_.config.iterations)) {
    const GanLosses l = step();
    if (on_step) on_step(ckpt_.iteration, l);
  }
}

}  // namespace dkg::net
