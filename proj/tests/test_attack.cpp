#include <doctest.h>

#include "dkg/attack/lab.hpp"
#include "dkg/cipher/xor_cipher.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace dkg;
using namespace dkg::attack;
using dkg::test::check_error;

namespace {

net::TrainConfig tiny_config(std::uint64_t seed = 1) {
  net::TrainConfig c;
  c.resolution = 32;
  c.iterations = 2;
  c.residual_blocks = 1;
  c.seed = seed;
  return c;
}

ExperimentPlan tiny_plan(Scenario s, int variants) {
  auto p = repeated_training_plan(s, tiny_config(), variants);
  p.source_count = 3;
  p.domain_count = 3;
  p.trials = 3;
  return p;
}

net::Network untrained_generator(std::uint64_t seed) {
  auto cfg = tiny_config(seed);
  return net::initial_checkpoint(cfg).generator;
}

}  // namespace

TEST_CASE("scenario names round-trip") {
  for (auto s : {Scenario::domain_leak, Scenario::structure_leak, Scenario::both_leak, Scenario::one_time_pad,
                 Scenario::sensitivity, Scenario::chosen_plaintext, Scenario::chosen_ciphertext}) {
    CHECK(scenario_from_string(to_string(s)) == s);
  }
  check_error(ErrorCode::InvalidArgument, [] { scenario_from_string("side_channel"); });
}

TEST_CASE("decryption matrix diagonal is exact") {
  Rng rng(5);
  const auto p = oracle::random_image(16, 16, 1, rng);
  std::vector<key::ImageKey> keys;
  for (int i = 0; i < 4; ++i) keys.push_back(key::ImageKey::from_image(oracle::random_image(16, 16, 3, rng)));
  const auto m = decryption_matrix(p, keys, {"a", "b", "c", "d"});
  REQUIRE(m.cells.size() == 4);
  CHECK(m.diagonal_exact());
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(m.cells[i][i].mse == 0.0);
    CHECK(m.cells[i][i].ssim == 1.0);
  }
  REQUIRE(m.max_off_diagonal_ssim().has_value());
  CHECK(*m.max_off_diagonal_ssim() < 0.2);
  CHECK(m.cells[0][1].mse > 1000.0);
  const auto csv = m.csv();
  CHECK(csv.rfind("encrypt_key,decrypt_key,mse,ssim\na,a,0,1\n", 0) == 0);
  const nlohmann::json j = m;
  CHECK(j["diagonal_exact"] == true);
  CHECK(j["ssim"].size() == 4);
  check_error(ErrorCode::InvalidArgument, [&] { decryption_matrix(p, keys, {"a"}); });
}

TEST_CASE("plans serialize and validate") {
  auto p = residual_study_plan(tiny_config());
  REQUIRE(p.variants.size() == 4);
  CHECK(p.variants[0].config.residual_blocks == 3);
  CHECK(p.variants[3].config.residual_blocks == 12);
  p.validate();
  const nlohmann::json j = p;
  const auto back = j.get<ExperimentPlan>();
  CHECK(nlohmann::json(back) == j);
  CHECK(back.variants[2].config == p.variants[2].config);

  auto two = two_domain_plan(tiny_config());
  two.validate();
  CHECK(nlohmann::json(nlohmann::json(two).get<ExperimentPlan>()) == nlohmann::json(two));

  auto single = tiny_plan(Scenario::both_leak, 1);
  check_error(ErrorCode::InvalidArgument, [&] { single.validate(); });
  single.scenario = Scenario::chosen_plaintext;
  single.validate();

  auto bad = tiny_plan(Scenario::both_leak, 2);
  bad.variants[1].domain = "missing";
  check_error(ErrorCode::InvalidArgument, [&] { bad.validate(); });
  bad = tiny_plan(Scenario::both_leak, 2);
  bad.variants[1].name = bad.variants[0].name;
  check_error(ErrorCode::InvalidArgument, [&] { bad.validate(); });
  bad = tiny_plan(Scenario::both_leak, 2);
  bad.variants[1].config.resolution = 64;
  check_error(ErrorCode::InvalidArgument, [&] { bad.validate(); });
  check_error(ErrorCode::InvalidArgument, [] { nlohmann::json{{"colour", 1}}.get<ExperimentPlan>(); });
}

TEST_CASE("domains are built deterministically") {
  auto plan = two_domain_plan(tiny_config());
  plan.domain_count = 2;
  const auto in = synthetic_inputs(plan);
  for (const auto& d : plan.domains) {
    const auto a = build_domain(d, in.domain_plain);
    const auto b = build_domain(d, in.domain_plain);
    REQUIRE(a.size() == 2);
    CHECK(a == b);
    CHECK_FALSE(a[0] == in.domain_plain[0]);
    CHECK(analysis::entropy(a[0].bytes()) > 7.9);
  }
  check_error(ErrorCode::EmptyDomain, [&] { build_domain(plan.domains[0], {}); });
}

TEST_CASE("chosen plaintext keeps the key difference pattern") {
  const auto g = untrained_generator(3);
  Rng rng(8);
  const auto seed = oracle::random_image(32, 32, 3, rng);
  const auto plain = oracle::random_image(32, 32, 1, rng);
  const auto r = chosen_plaintext(g, seed, plain, 4, 21);
  REQUIRE(r.trials.size() == 4);
  CHECK(r.identity_holds);
  for (const auto& t : r.trials) {
    CHECK(t.outputs.npcr == t.keys.npcr);
    CHECK(t.outputs.npcr > 0.0);
    CHECK(t.change.old_value != t.change.new_value);
  }
  const auto again = chosen_plaintext(g, seed, plain, 4, 21);
  CHECK(nlohmann::json(again) == nlohmann::json(r));
}

TEST_CASE("chosen ciphertext mirrors it") {
  const auto g = untrained_generator(4);
  Rng rng(9);
  const auto seed = oracle::random_image(32, 32, 3, rng);
  const auto k = net::generate_key(g, seed);
  const auto c = cipher::xor_encrypt(oracle::random_image(32, 32, 1, rng), k);
  const auto r = chosen_ciphertext(g, seed, c, 3, 5);
  CHECK(r.identity_holds);
  for (const auto& t : r.trials) CHECK(t.outputs.npcr == t.keys.npcr);
}

TEST_CASE("identical keys give identical outputs") {
  Rng rng(10);
  const auto k = key::ImageKey::from_image(oracle::random_image(8, 8, 3, rng));
  const auto p = oracle::random_image(8, 8, 3, rng);
  CHECK(analysis::npcr(cipher::xor_encrypt(p, k), cipher::xor_encrypt(p, k)) == 0.0);
  CHECK(analysis::npcr(cipher::xor_decrypt(p, k), cipher::xor_decrypt(p, k)) == 0.0);
}

TEST_CASE("sensitivity reports each perturbed key") {
  const auto g = untrained_generator(5);
  Rng rng(11);
  const auto seed = oracle::random_image(32, 32, 3, rng);
  const auto plain = oracle::random_image(32, 32, 1, rng);
  const auto trials = sensitivity(g, seed, plain, 3, 2);
  REQUIRE(trials.size() == 3);
  for (const auto& t : trials) {
    CHECK(t.keys.npcr > 0.0);
    CHECK(t.wrong_key_decryption.mse > 0.0);
    CHECK(nlohmann::json(t)["keys"].contains("npcr"));
  }
}

TEST_CASE("both-leak experiment end to end") {
  const auto plan = tiny_plan(Scenario::both_leak, 3);
  const auto in = synthetic_inputs(plan);
  const auto r = run_experiment(plan, in);
  REQUIRE(r.variants.size() == 3);
  for (const auto& v : r.variants) {
    CHECK_FALSE(v.error.has_value());
    CHECK(v.key.has_value());
  }
  REQUIRE(r.matrix.has_value());
  CHECK(r.matrix->diagonal_exact());
  CHECK(r.details["key_pairs"].size() == 3);
  const nlohmann::json j = r;
  CHECK(j["matrix"]["labels"].size() == 3);

  auto threaded = plan;
  threaded.threads = 3;
  const auto r2 = run_experiment(threaded, in);
  for (std::size_t i = 0; i < 3; ++i) CHECK(r2.variants[i].key->to_image() == r.variants[i].key->to_image());
}

TEST_CASE("structure leak reports both domains") {
  auto plan = two_domain_plan(tiny_config());
  plan.source_count = 2;
  plan.domain_count = 2;
  const auto r = run_experiment(plan, synthetic_inputs(plan));
  REQUIRE(r.details["domains"].size() == 2);
  CHECK(r.details["domains"][1]["name"] == "rc4");
  CHECK(r.matrix->diagonal_exact());
}

TEST_CASE("a diverging variant is reported and the rest continue") {
  auto plan = tiny_plan(Scenario::both_leak, 3);
  plan.variants[1].config.lr = 1e30f;
  plan.variants[1].config.iterations = 6;
  const auto r = run_experiment(plan, synthetic_inputs(plan));
  CHECK(r.variants[1].error.has_value());
  CHECK_FALSE(r.variants[1].key.has_value());
  REQUIRE(r.matrix.has_value());
  CHECK(r.matrix->labels == std::vector<std::string>{"run1", "run3"});
  CHECK(nlohmann::json(r)["variants"][1]["diverged"] == true);
}

TEST_CASE("differential scenario through run_experiment") {
  auto plan = tiny_plan(Scenario::chosen_plaintext, 1);
  const auto r = run_experiment(plan, synthetic_inputs(plan));
  CHECK(r.details["chosen_plaintext"]["identity_holds"] == true);
  CHECK_FALSE(r.matrix.has_value());
  plan.seed_image = 10;
  check_error(ErrorCode::InvalidArgument, [&] { run_experiment(plan, synthetic_inputs(plan)); });
}
