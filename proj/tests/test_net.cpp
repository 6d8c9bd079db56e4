#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <nlohmann/json.hpp>

#include "dkg/codec.hpp"
#include "dkg/net/gan.hpp"
#include "support.hpp"

using namespace dkg;
using namespace dkg::net;
using dkg::test::check_error;
using tensor::Tensor;

namespace {

std::vector<RasterImage> random_images(int count, int res, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<RasterImage> out;
  for (int i = 0; i < count; ++i) {
    RasterImage img(res, res, 3);
    for (auto& b : img.bytes()) b = static_cast<std::uint8_t>(rng.next_u32());
    out.push_back(std::move(img));
  }
  return out;
}

TrainConfig tiny_config(std::uint64_t seed = 11) {
  TrainConfig cfg;
  cfg.resolution = 32;
  cfg.iterations = 2;
  cfg.residual_blocks = 2;
  cfg.seed = seed;
  return cfg;
}

std::vector<std::size_t> counts(const NetworkSpec& spec) {
  std::vector<std::size_t> out;
  for (const auto& g : spec.group_counts()) out.push_back(g.params);
  return out;
}

}  // namespace

TEST_CASE("generator per-row parameter counts") {
  const auto g = build_generator(256);
  CHECK(counts(g) == std::vector<std::size_t>{2352, 4608, 18432, 221184, 18432, 4608, 2352});
  CHECK(g.group_counts()[3].group == "Residual block");
  CHECK(221184 / 6 == 3 * 3 * 64 * 64);
  Network net(g);
  CHECK(net.params().total_count() == g.total_params());
  CHECK(g.total_params() == 271968);
}

TEST_CASE("discriminator per-row parameter counts") {
  const auto d = build_discriminator();
  const auto c = counts(d);
  REQUIRE(c.size() == 5);
  CHECK(std::vector<std::size_t>(c.begin(), c.begin() + 4) == std::vector<std::size_t>{768, 8192, 32768, 131072});
  CHECK(d.layers[4].weight_count() == 262144);
  CHECK(c[4] == 262144 + 128);
  Network net(d);
  CHECK(net.params().total_count() == d.total_params());
}

TEST_CASE("generator rejects unusable resolutions") {
  check_error(ErrorCode::InvalidResolution, [] { build_generator(62); });
  check_error(ErrorCode::InvalidResolution, [] { build_generator(16); });
  check_error(ErrorCode::InvalidResolution, [] { build_generator(0); });
  CHECK_NOTHROW(build_generator(36));
}

TEST_CASE("generator preserves resolution; discriminator emits a probability") {
  auto cfg = tiny_config();
  cfg.resolution = 64;
  cfg.residual_blocks = 6;
  const auto ck = initial_checkpoint(cfg);
  Rng rng(2);
  tensor::NoGradGuard no_grad;
  const Tensor x = test::random_tensor({1, 3, 64, 64}, rng);
  const Tensor y = ck.generator.forward(x);
  CHECK(y.shape() == tensor::Shape{1, 3, 64, 64});
  for (float v : y.data()) {
    CHECK(v > -1.0f);
    CHECK(v < 1.0f);
  }
  const Tensor map = ck.discriminator.forward(x);
  CHECK(map.shape() == tensor::Shape{1, 1, 3, 3});
  for (int t = 0; t < 5; ++t) {
    const float s = discriminator_score(ck.discriminator, test::random_tensor({1, 3, 32, 32}, rng)).item();
    CHECK(s > 0.0f);
    CHECK(s < 1.0f);
  }
}

TEST_CASE("NetworkSpec JSON round trip") {
  for (const auto& spec : {build_generator(64, 3), build_discriminator()}) {
    const nlohmann::json j = spec;
    CHECK(j.get<NetworkSpec>() == spec);
  }
}

TEST_CASE("scalar losses") {
  CHECK(g_loss(0.5) == doctest::Approx(-0.693147).epsilon(1e-6));
  CHECK(g_loss(0.5, true) == doctest::Approx(0.693147).epsilon(1e-6));
  CHECK(g_loss(1.0) == doctest::Approx(std::log(1e-7)).epsilon(1e-3));
  CHECK(std::isfinite(g_loss(0.0, true)));
  CHECK(d_loss(0.5, 0.5) == doctest::Approx(2 * std::log(2.0)).epsilon(1e-9));
  CHECK(d_loss(1.0, 0.0) == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("tensor losses agree with the scalar forms") {
  for (double s : {0.1, 0.5, 0.9}) {
    const auto t = Tensor::scalar(static_cast<float>(s));
    CHECK(g_loss(t, false).item() == doctest::Approx(g_loss(s)).epsilon(1e-5));
    CHECK(g_loss(t, true).item() == doctest::Approx(g_loss(s, true)).epsilon(1e-5));
    CHECK(d_loss(t, Tensor::scalar(0.3f)).item() == doctest::Approx(d_loss(s, 0.3)).epsilon(1e-5));
  }
}

TEST_CASE("a small D step lowers d_loss on the same pair") {
  int decreased = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    Network d(build_discriminator());
    tensor::seeded_normal_init(d.params(), trial);
    auto opt = tensor::AdamState::for_params(d.params(), {1e-5f, 0.5f, 0.999f, 1e-8f});
    Rng rng(1000 + trial);
    const Tensor real = test::random_tensor({1, 3, 32, 32}, rng);
    const Tensor fake = test::random_tensor({1, 3, 32, 32}, rng);
    const Tensor before = d_loss(discriminator_score(d, real), discriminator_score(d, fake));
    before.backward();
    tensor::adam_step(d.params(), opt);
    tensor::NoGradGuard no_grad;
    const float after = d_loss(discriminator_score(d, real), discriminator_score(d, fake)).item();
    decreased += after < before.item();
  }
  CHECK(decreased >= 95);
}

TEST_CASE("TrainConfig JSON") {
  auto cfg = tiny_config(42);
  cfg.lr = 0.002f;
  const nlohmann::json j = cfg;
  CHECK(j.get<TrainConfig>() == cfg);
  check_error(ErrorCode::InvalidArgument, [] { nlohmann::json{{"epochs", 3}}.get<TrainConfig>(); });
  auto bad = cfg;
  bad.batch_size = 0;
  check_error(ErrorCode::InvalidArgument, [&] { bad.validate(); });
  bad = cfg;
  bad.resolution = 34;
  check_error(ErrorCode::InvalidResolution, [&] { bad.validate(); });
}

TEST_CASE("training is deterministic and losses stay consistent") {
  const auto src = random_images(3, 32, 1);
  const auto dom = random_images(3, 32, 2);
  Trainer a(tiny_config(), src, dom);
  Trainer b(tiny_config(), src, dom);
  a.run();
  b.run();
  REQUIRE(a.history().size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& la = a.history()[i];
    const auto& lb = b.history()[i];
    CHECK(la.l_g == lb.l_g);
    CHECK(la.l_d == lb.l_d);
    CHECK(la.l_total == la.l_g + la.l_d);
    CHECK(std::isfinite(la.l_total));
  }
  CHECK(encode_checkpoint(a.checkpoint()) == encode_checkpoint(b.checkpoint()));
  Trainer c(tiny_config(12), src, dom);
  c.run();
  CHECK(encode_checkpoint(a.checkpoint()) != encode_checkpoint(c.checkpoint()));
}

TEST_CASE("batch training runs") {
  auto cfg = tiny_config();
  cfg.batch_size = 3;
  cfg.non_saturating_g_loss = true;
  Trainer t(cfg, random_images(2, 32, 1), random_images(2, 32, 2));
  t.run();
  CHECK(t.history().size() == 2);
  CHECK(t.checkpoint().g_opt.step == 2);
  CHECK(t.checkpoint().d_opt.step == 2);
}

TEST_CASE("resuming from a checkpoint continues bit-exactly") {
  const auto src = random_images(3, 32, 1);
  const auto dom = random_images(3, 32, 2);
  auto cfg = tiny_config();
  cfg.iterations = 4;
  Trainer straight(cfg, src, dom);
  straight.run();

  auto half = cfg;
  half.iterations = 2;
  Trainer first(half, src, dom);
  first.run();
  auto ck = decode_checkpoint(encode_checkpoint(first.checkpoint()));
  ck.config.iterations = 4;
  Trainer second(std::move(ck), src, dom);
  second.run();
  CHECK(encode_checkpoint(second.checkpoint()) == encode_checkpoint(straight.checkpoint()));
}

TEST_CASE("empty data sets and wrong sizes are rejected") {
  check_error(ErrorCode::EmptyDomain, [] { Trainer(tiny_config(), {}, random_images(1, 32, 2)); });
  check_error(ErrorCode::EmptyDomain, [] { Trainer(tiny_config(), random_images(1, 32, 2), {}); });
  check_error(ErrorCode::ResolutionMismatch,
              [] { Trainer(tiny_config(), random_images(1, 36, 1), random_images(1, 32, 2)); });
}

TEST_CASE("non-finite activations surface as divergence") {
  Trainer t(tiny_config(), random_images(1, 32, 1), random_images(1, 32, 2));
  auto& ck = const_cast<Checkpoint&>(t.checkpoint());
  ck.generator.params()[0].value.mutable_data()[0] = 3e38f;
  ck.generator.params()[0].value.mutable_data()[1] = 3e38f;
  check_error(ErrorCode::DivergenceError, [&] { t.step(); });
}

TEST_CASE("checkpoint encoding is canonical") {
  Trainer t(tiny_config(), random_images(2, 32, 1), random_images(2, 32, 2));
  t.run();
  const auto bytes = encode_checkpoint(t.checkpoint());
  CHECK(encode_checkpoint(decode_checkpoint(bytes)) == bytes);

  const auto path = std::filesystem::temp_directory_path() / "dkg_test_net" / "c.dkgn";
  save_checkpoint(path, t.checkpoint());
  CHECK(io::read_file(path) == bytes);
  CHECK(encode_checkpoint(load_checkpoint(path)) == bytes);

  auto flipped = bytes;
  flipped[flipped.size() / 2] ^= 0x10;
  check_error(ErrorCode::IntegrityError, [&] { decode_checkpoint(flipped); });
  auto magic = bytes;
  magic[1] = 'X';
  check_error(ErrorCode::FormatError, [&] { decode_checkpoint(magic); });
  check_error(ErrorCode::FormatError, [&] { decode_checkpoint(std::span(bytes).first(8)); });
}

TEST_CASE("key generation") {
  const auto ck = initial_checkpoint(tiny_config());
  const auto seed = random_images(1, 32, 7)[0];
  const auto k1 = generate_key(ck, seed);
  const auto k2 = generate_key(ck, seed);
  CHECK(k1 == k2);
  CHECK(k1.width() == 32);
  CHECK(k1.height() == 32);
  CHECK(k1.size() == 32 * 32 * 3);
  check_error(ErrorCode::ResolutionMismatch, [&] { generate_key(ck, random_images(1, 36, 7)[0]); });
}

TEST_CASE("tensor/key byte mapping") {
  const auto t = Tensor::from_data({1, 3, 1, 2}, {-1.0f, 1.0f, 0.0f, -0.999f, 2.0f, -3.0f});
  const auto k = tensor_to_key(t);
  // channel planes -> interleaved pixels
  CHECK(std::vector<std::uint8_t>(k.bytes().begin(), k.bytes().end()) ==
        std::vector<std::uint8_t>{0, 128, 255, 255, 0, 0});
  RasterImage img(2, 1, 3, {0, 255, 128, 10, 20, 30});
  const auto x = image_to_tensor(img);
  CHECK(x.data()[0] == -1.0f);
  CHECK(x.data()[2] == 1.0f);
  CHECK(tensor_to_key(x).bytes()[3] == 10);
}
