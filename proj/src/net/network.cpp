#include "dkg/net/network.hpp"

#include <nlohmann/json.hpp>

#include "dkg/error.hpp"

namespace dkg::net {

using tensor::Activation;
using tensor::PadMode;
using tensor::Tensor;

namespace {

std::string_view to_string(LayerKind k) {
  switch (k) {
    case LayerKind::conv: return "conv";
    case LayerKind::conv_transpose: return "conv_transpose";
    case LayerKind::residual: return "residual";
  }
  return "conv";
}

LayerKind layer_kind_from_string(std::string_view s) {
  if (s == "conv") return LayerKind::conv;
  if (s == "conv_transpose") return LayerKind::conv_transpose;
  if (s == "residual") return LayerKind::residual;
  throw Error(ErrorCode::FormatError, "unknown layer kind '" + std::string(s) + "'");
}

LayerSpec conv(std::string name, std::string group, int k, int s, int p, PadMode mode, int cin, int cout, bool norm,
               Activation act) {
  LayerSpec l;
  l.name = std::move(name);
  l.group = std::move(group);
  l.kind = LayerKind::conv;
  l.kernel = k;
  l.stride = s;
  l.padding = p;
  l.pad_mode = mode;
  l.in_channels = cin;
  l.out_channels = cout;
  l.norm = norm;
  l.act = act;
  return l;
}

}  // namespace

std::size_t LayerSpec::weight_count() const noexcept {
  return static_cast<std::size_t>(kernel) * kernel * in_channels * out_channels;
}

tensor::Shape LayerSpec::weight_shape() const {
  const auto k = static_cast<std::size_t>(kernel);
  const auto cin = static_cast<std::size_t>(in_channels);
  const auto cout = static_cast<std::size_t>(out_channels);
  if (kind == LayerKind::conv_transpose) return {cin, cout, k, k};
  return {cout, cin, k, k};
}

std::size_t NetworkSpec::total_params() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight_count();
  return n;
}

std::vector<GroupCount> NetworkSpec::group_counts() const {
  std::vector<GroupCount> out;
  for (const auto& l : layers) {
    if (out.empty() || out.back().group != l.group) out.push_back({l.group, 0});
    out.back().params += l.weight_count();
  }
  return out;
}

void to_json(nlohmann::json& j, const NetworkSpec& spec) {
  j = nlohmann::json::object();
  j["role"] = spec.role == NetRole::generator ? "generator" : "discriminator";
  j["residual_blocks"] = spec.residual_blocks;
  auto& layers = j["layers"] = nlohmann::json::array();
  for (const auto& l : spec.layers) {
    layers.push_back({{"name", l.name},
                      {"group", l.group},
                      {"kind", to_string(l.kind)},
                      {"kernel", l.kernel},
                      {"stride", l.stride},
                      {"padding", l.padding},
                      {"output_padding", l.output_padding},
                      {"pad_mode", tensor::to_string(l.pad_mode)},
                      {"in_channels", l.in_channels},
                      {"out_channels", l.out_channels},
                      {"norm", l.norm},
                      {"activation", tensor::to_string(l.act)}});
  }
}

void from_json(const nlohmann::json& j, NetworkSpec& spec) {
  try {
    const auto role = j.at("role").get<std::string>();
    if (role != "generator" && role != "discriminator") throw Error(ErrorCode::FormatError, "unknown role " + role);
    spec.role = role == "generator" ? NetRole::generator : NetRole::discriminator;
    spec.residual_blocks = j.at("residual_blocks").get<int>();
    spec.layers.clear();
    for (const auto& lj : j.at("layers")) {
      LayerSpec l;
      l.name = lj.at("name").get<std::string>();
      l.group = lj.at("group").get<std::string>();
      l.kind = layer_kind_from_string(lj.at("kind").get<std::string>());
      l.kernel = lj.at("kernel").get<int>();
      l.stride = lj.at("stride").get<int>();
      l.padding = lj.at("padding").get<int>();
      l.output_padding = lj.at("output_padding").get<int>();
      l.pad_mode = tensor::pad_mode_from_string(lj.at("pad_mode").get<std::string>());
      l.in_channels = lj.at("in_channels").get<int>();
      l.out_channels = lj.at("out_channels").get<int>();
      l.norm = lj.at("norm").get<bool>();
      l.act = tensor::activation_from_string(lj.at("activation").get<std::string>());
      spec.layers.push_back(std::move(l));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("network spec: ") + e.what());
  }
}

void validate_resolution(int resolution) {
  // Two stride-2 stages in G need divisibility by 4; four stride-2 stages in
  // D followed by a 4x4 valid-ish conv need at least 32 pixels.
  if (resolution < kMinResolution || resolution % 4 != 0) {
    throw Error(ErrorCode::InvalidResolution, "resolution " + std::to_string(resolution) +
                                                  " must be a multiple of 4 and at least " +
                                                  std::to_string(kMinResolution));
  }
}

NetworkSpec build_generator(int resolution, int residual_blocks) {
  validate_resolution(resolution);
  if (residual_blocks < 0) throw Error(ErrorCode::InvalidArgument, "residual_blocks must be >= 0");
  NetworkSpec spec;
  spec.role = NetRole::generator;
  spec.residual_blocks = residual_blocks;
  auto& L = spec.layers;
  L.push_back(conv("down1", "Down Convolution1", 7, 1, 3, PadMode::reflect, 3, 16, true, Activation::relu));
  L.push_back(conv("down2", "Down Convolution2", 3, 2, 1, PadMode::zeros, 16, 32, true, Activation::relu));
  L.push_back(conv("down3", "Down Convolution3", 3, 2, 1, PadMode::zeros, 32, 64, true, Activation::relu));
  for (int b = 0; b < residual_blocks; ++b) {
    auto r = conv("res" + std::to_string(b + 1), "Residual block", 3, 1, 1, PadMode::reflect, 64, 64, true,
                  Activation::relu);
    r.kind = LayerKind::residual;
    L.push_back(std::move(r));
  }
  for (int i = 0; i < 2; ++i) {
    const int cin = 64 >> i;
    auto up = conv("up" + std::to_string(i + 1), "Up Convolution" + std::to_string(i + 1), 3, 2, 1, PadMode::zeros,
                   cin, cin / 2, true, Activation::relu);
    up.kind = LayerKind::conv_transpose;
    up.output_padding = 1;
    L.push_back(std::move(up));
  }
  L.push_back(conv("up3", "Up Convolution3", 7, 1, 3, PadMode::reflect, 16, 3, false, Activation::tanh));
  return spec;
}

NetworkSpec build_discriminator() {
  NetworkSpec spec;
  spec.role = NetRole::discriminator;
  auto& L = spec.layers;
  const int channels[] = {3, 16, 32, 64, 128};
  for (int i = 0; i < 4; ++i) {
    L.push_back(conv("state" + std::to_string(i + 1), "State" + std::to_string(i + 1), 4, 2, 1, PadMode::zeros,
                     channels[i], channels[i + 1], i > 0, Activation::leaky_relu));
  }
  L.push_back(conv("state5.conv", "State5", 4, 1, 1, PadMode::zeros, 128, 128, false, Activation::leaky_relu));
  L.push_back(conv("state5.head", "State5", 1, 1, 0, PadMode::zeros, 128, 1, false, Activation::sigmoid));
  return spec;
}

Network::Network(NetworkSpec spec) : spec_(std::move(spec)) {
  for (const auto& l : spec_.layers) params_.add(l.name + ".weight", Tensor::zeros(l.weight_shape(), true));
}

Network::Network(NetworkSpec spec, tensor::ParamSet params) : spec_(std::move(spec)), params_(std::move(params)) {
  if (params_.size() != spec_.layers.size()) {
    throw Error(ErrorCode::InvalidShape, "parameter set does not match the network spec");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& l = spec_.layers[i];
    if (params_[i].name != l.name + ".weight" || params_[i].value.shape() != l.weight_shape()) {
      throw Error(ErrorCode::InvalidShape, "parameter '" + params_[i].name + "' does not match layer '" + l.name + "'");
    }
  }
}

Tensor Network::forward(const Tensor& x) const {
  Tensor h = x;
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const auto& l = spec_.layers[i];
    const Tensor& w = params_[i].value;
    Tensor y;
    switch (l.kind) {
      case LayerKind::conv:
      case LayerKind::residual:
        y = tensor::conv2d(h, w, {l.stride, l.padding, l.pad_mode});
        break;
      case LayerKind::conv_transpose:
        y = tensor::conv_transpose2d(h, w, {l.stride, l.padding, l.output_padding});
        break;
    }
    if (l.norm) y = tensor::instance_norm(y);
    if (l.kind == LayerKind::residual) y = tensor::add(y, h);
    h = tensor::activation(y, l.act);
  }
  return h;
}

Tensor discriminator_score(const Network& d, const Tensor& x) { return tensor::mean(d.forward(x)); }

}  // namespace dkg::net
