#include "dkg/tensor/optim.hpp"

#include <cmath>

#include "dkg/error.hpp"
#include "dkg/rng.hpp"

namespace dkg::tensor {

void ParamSet::add(std::string name, Tensor value) {
  for (const auto& p : params_) {
    if (p.name == name) throw Error(ErrorCode::InvalidArgument, "duplicate parameter name '" + name + "'");
  }
  params_.push_back({std::move(name), std::move(value)});
}

const Tensor& ParamSet::at(const std::string& name) const {
  for (const auto& p : params_) {
    if (p.name == name) return p.value;
  }
  throw Error(ErrorCode::InvalidArgument, "no parameter named '" + name + "'");
}

std::size_t ParamSet::total_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.numel();
  return n;
}

void ParamSet::zero_grad() {
  for (auto& p : params_) p.value.zero_grad();
}

ParamSet ParamSet::clone() const {
  ParamSet out;
  for (const auto& p : params_) out.add(p.name, p.value.clone());
  return out;
}

AdamState AdamState::for_params(const ParamSet& params, AdamConfig config) {
  AdamState s;
  s.config = config;
  for (const auto& p : params) {
    s.m.emplace_back(p.value.numel(), 0.0f);
    s.v.emplace_back(p.value.numel(), 0.0f);
  }
  return s;
}

void adam_step(ParamSet& params, AdamState& state) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw Error(ErrorCode::InvalidShape, "Adam state does not match parameter set");
  }
  for (const auto& p : params) {
    if (!p.value.has_grad()) throw Error(ErrorCode::MissingGradient, "parameter '" + p.name + "' has no gradient");
  }
  ++state.step;
  const auto& c = state.config;
  const double bc1 = 1.0 - std::pow(static_cast<double>(c.beta1), static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(static_cast<double>(c.beta2), static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& param = params[k].value;
    auto w = param.mutable_data();
    auto g = param.grad();
    auto& m = state.m[k];
    auto& v = state.v[k];
    if (m.size() != w.size()) throw Error(ErrorCode::InvalidShape, "Adam moment shape mismatch");
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0f - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0f - c.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] = static_cast<float>(w[i] - c.lr * mhat / (std::sqrt(vhat) + c.eps));
    }
    param.zero_grad();
  }
}

void seeded_normal_init(ParamSet& params, std::uint64_t seed, double stddev) {
  Rng rng(seed);
  for (auto& p : params) {
    for (auto& w : p.value.mutable_data()) w = static_cast<float>(stddev * rng.normal());
  }
}

}  // namespace dkg::tensor
