#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dkg/tensor/ops.hpp"
#include "dkg/tensor/optim.hpp"

namespace dkg::net {

enum class LayerKind { conv, conv_transpose, residual };
enum class NetRole { generator, discriminator };

struct LayerSpec {
  std::string name;   // parameter prefix, unique within a network
  std::string group;  // row of the architecture table this layer belongs to
  LayerKind kind = LayerKind::conv;
  int kernel = 3;
  int stride = 1;
  int padding = 0;
  int output_padding = 0;
  tensor::PadMode pad_mode = tensor::PadMode::zeros;
  int in_channels = 0;
  int out_channels = 0;
  bool norm = false;
  tensor::Activation act = tensor::Activation::none;

  /// Weight-only parameter count (there are no biases).
  std::size_t weight_count() const noexcept;
  tensor::Shape weight_shape() const;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct GroupCount {
  std::string group;
  std::size_t params;
};

struct NetworkSpec {
  NetRole role = NetRole::generator;
  int residual_blocks = 0;
  std::vector<LayerSpec> layers;

  std::size_t total_params() const noexcept;
  /// Parameter counts summed per table row, in layer order.
  std::vector<GroupCount> group_counts() const;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

void to_json(nlohmann::json& j, const NetworkSpec& spec);
void from_json(const nlohmann::json& j, NetworkSpec& spec);

/// Smallest resolution both networks accept.
inline constexpr int kMinResolution = 32;

/// Throws InvalidResolution unless the generator and discriminator both
/// accept `resolution`x`resolution` inputs.
void validate_resolution(int resolution);

NetworkSpec build_generator(int resolution, int residual_blocks = 6);
NetworkSpec build_discriminator();

/// A spec bound to its parameters.
class Network {
 public:
  Network() = default;
  explicit Network(NetworkSpec spec);
  Network(NetworkSpec spec, tensor::ParamSet params);

  const NetworkSpec& spec() const noexcept { return spec_; }
  tensor::ParamSet& params() noexcept { return params_; }
  const tensor::ParamSet& params() const noexcept { return params_; }

  /// Input [N,3,H,W]. The generator returns [N,3,H,W] in (-1,1); the
  /// discriminator returns the patch probability map [N,1,h,w].
  tensor::Tensor forward(const tensor::Tensor& x) const;

 private:
  NetworkSpec spec_;
  tensor::ParamSet params_;
};

/// Mean of the discriminator's patch map: a probability in (0,1).
tensor::Tensor discriminator_score(const Network& d, const tensor::Tensor& x);

}  // namespace dkg::net
