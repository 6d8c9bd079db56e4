#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dkg/tensor/tensor.hpp"

namespace dkg::tensor {

struct NamedParam {
  std::string name;
  Tensor value;
};

/// Ordered, uniquely named learnable tensors; order is the save/load order.
class ParamSet {
 public:
  void add(std::string name, Tensor value);

  std::size_t size() const noexcept { return params_.size(); }
  const NamedParam& operator[](std::size_t i) const { return params_[i]; }
  NamedParam& operator[](std::size_t i) { return params_[i]; }
  auto begin() const noexcept { return params_.begin(); }
  auto end() const noexcept { return params_.end(); }
  auto begin() noexcept { return params_.begin(); }
  auto end() noexcept { return params_.end(); }

  const Tensor& at(const std::string& name) const;
  std::size_t total_count() const noexcept;
  void zero_grad();

  /// Deep copy with fresh storage; gradients are not copied.
  ParamSet clone() const;

 private:
  std::vector<NamedParam> params_;
};

struct AdamConfig {
  float lr = 0.0002f;
  float beta1 = 0.5f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;

  static AdamState for_params(const ParamSet& params, AdamConfig config = {});
};

/// One bias-corrected Adam update; consumes and clears every gradient.
/// Throws MissingGradient if any parameter has none.
void adam_step(ParamSet& params, AdamState& state);

/// Fills every parameter, in order, with Normal(0, stddev) draws from a
/// SplitMix64 stream seeded with `seed`.
void seeded_normal_init(ParamSet& params, std::uint64_t seed, double stddev = 0.02);

}  // namespace dkg::tensor
