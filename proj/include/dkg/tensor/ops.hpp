#pragma once

#include <string_view>

#include "dkg/tensor/tensor.hpp"

namespace dkg::tensor {

enum class PadMode { zeros, reflect };

struct Conv2dOptions {
  int stride = 1;
  int padding = 0;
  PadMode pad_mode = PadMode::zeros;
};

struct ConvTranspose2dOptions {
  int stride = 1;
  int padding = 0;
  int output_padding = 0;
};

enum class Activation { none, relu, leaky_relu, tanh, sigmoid };

inline constexpr float kLeakySlope = 0.2f;

std::string_view to_string(Activation a) noexcept;
Activation activation_from_string(std::string_view name);
std::string_view to_string(PadMode m) noexcept;
PadMode pad_mode_from_string(std::string_view name);

/// input [N,Cin,H,W], weight [Cout,Cin,kh,kw] -> [N,Cout,H',W'], no bias.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Conv2dOptions& opt);

/// input [N,Cin,H,W], weight [Cin,Cout,kh,kw] -> [N,Cout,(H-1)s-2p+k+op, ...].
/// This is the adjoint of conv2d with the same weight and geometry.
Tensor conv_transpose2d(const Tensor& input, const Tensor& weight, const ConvTranspose2dOptions& opt);

/// Non-affine instance normalization over each (n, c) spatial slice using
/// the biased variance.
Tensor instance_norm(const Tensor& input, float eps = 1e-5f);

Tensor activation(const Tensor& input, Activation kind);

Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
/// scale * x + shift, elementwise.
Tensor affine(const Tensor& x, float scale, float shift);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// log(clamp(x, lo, hi)); the gradient is zero where the clamp is active.
Tensor log_clamped(const Tensor& x, float lo, float hi);

/// Output extent of a strided convolution along one axis.
int conv_out_extent(int in, int kernel, int stride, int padding) noexcept;
int conv_transpose_out_extent(int in, int kernel, int stride, int padding, int output_padding) noexcept;

}  // namespace dkg::tensor
