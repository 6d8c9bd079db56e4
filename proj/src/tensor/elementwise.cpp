#include <algorithm>
#include <cmath>
#include <string>

#include "dkg/error.hpp"
#include "dkg/tensor/ops.hpp"

namespace dkg::tensor {
namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw Error(ErrorCode::InvalidShape,
                std::string(op) + ": shapes " + shape_string(a.shape()) + " and " + shape_string(b.shape()) + " differ");
  }
}

}  // namespace

std::string_view to_string(Activation a) noexcept {
  switch (a) {
    case Activation::none: return "none";
    case Activation::relu: return "relu";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
  }
  return "none";
}

Activation activation_from_string(std::string_view name) {
  for (auto a : {Activation::none, Activation::relu, Activation::leaky_relu, Activation::tanh, Activation::sigmoid}) {
    if (to_string(a) == name) return a;
  }
  throw Error(ErrorCode::FormatError, "unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(PadMode m) noexcept { return m == PadMode::reflect ? "reflect" : "zeros"; }

PadMode pad_mode_from_string(std::string_view name) {
  if (name == "reflect") return PadMode::reflect;
  if (name == "zeros") return PadMode::zeros;
  throw Error(ErrorCode::FormatError, "unknown pad mode '" + std::string(name) + "'");
}

Tensor instance_norm(const Tensor& input, float eps) {
  const auto& s = input.shape();
  if (s.size() != 4) throw Error(ErrorCode::InvalidShape, "instance_norm needs [N,C,H,W], got " + shape_string(s));
  const std::size_t slices = s[0] * s[1];
  const std::size_t hw = s[2] * s[3];
  if (hw < 2) throw Error(ErrorCode::DegenerateNorm, "instance_norm over a 1x1 spatial slice");

  auto x = input.data();
  std::vector<float> out(x.size());
  auto inv_std = std::make_shared<std::vector<float>>(slices);
  for (std::size_t sl = 0; sl < slices; ++sl) {
    const float* p = x.data() + sl * hw;
    double m = 0.0;
    for (std::size_t i = 0; i < hw; ++i) m += p[i];
    m /= static_cast<double>(hw);
    double v = 0.0;
    for (std::size_t i = 0; i < hw; ++i) {
      const double d = p[i] - m;
      v += d * d;
    }
    v /= static_cast<double>(hw);
    const double is = 1.0 / std::sqrt(v + eps);
    (*inv_std)[sl] = static_cast<float>(is);
    float* q = out.data() + sl * hw;
    for (std::size_t i = 0; i < hw; ++i) q[i] = static_cast<float>((p[i] - m) * is);
  }

  return detail::make_output(
      s, std::move(out), {&input},
      [slices, hw, inv_std](detail::Node& self) {
        auto& x = *self.parents[0];
        if (!x.requires_grad) return;
        x.ensure_grad();
        // dx = inv_std * (dy - mean(dy) - y * mean(dy * y))
        for (std::size_t sl = 0; sl < slices; ++sl) {
          const float* y = self.data.data() + sl * hw;
          const float* dy = self.grad.data() + sl * hw;
          double mdy = 0.0, mdyy = 0.0;
          for (std::size_t i = 0; i < hw; ++i) {
            mdy += dy[i];
            mdyy += static_cast<double>(dy[i]) * y[i];
          }
          mdy /= static_cast<double>(hw);
          mdyy /= static_cast<double>(hw);
          const double is = (*inv_std)[sl];
          float* dx = x.grad.data() + sl * hw;
          for (std::size_t i = 0; i < hw; ++i) dx[i] += static_cast<float>(is * (dy[i] - mdy - y[i] * mdyy));
        }
      },
      "instance_norm");
}

Tensor activation(const Tensor& input, Activation kind) {
  if (kind == Activation::none) return input;
  auto x = input.data();
  std::vector<float> out(x.size());
  switch (kind) {
    case Activation::relu:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0f ? x[i] : 0.0f;
      break;
    case Activation::leaky_relu:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0f ? x[i] : kLeakySlope * x[i];
      break;
    case Activation::tanh:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::tanh(x[i]);
      break;
    case Activation::sigmoid:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = 1.0f / (1.0f + std::exp(-x[i]));
      break;
    case Activation::none: break;
  }
  return detail::make_output(
      input.shape(), std::move(out), {&input},
      [kind](detail::Node& self) {
        auto& x = *self.parents[0];
        if (!x.requires_grad) return;
        x.ensure_grad();
        const auto& y = self.data;
        const auto& dy = self.grad;
        // relu-family derivative at exactly 0 takes the negative-side slope
        switch (kind) {
          case Activation::relu:
            for (std::size_t i = 0; i < y.size(); ++i) x.grad[i] += x.data[i] > 0.0f ? dy[i] : 0.0f;
            break;
          case Activation::leaky_relu:
            for (std::size_t i = 0; i < y.size(); ++i) x.grad[i] += x.data[i] > 0.0f ? dy[i] : kLeakySlope * dy[i];
            break;
          case Activation::tanh:
            for (std::size_t i = 0; i < y.size(); ++i) x.grad[i] += dy[i] * (1.0f - y[i] * y[i]);
            break;
          case Activation::sigmoid:
            for (std::size_t i = 0; i < y.size(); ++i) x.grad[i] += dy[i] * y[i] * (1.0f - y[i]);
            break;
          case Activation::none: break;
        }
      },
      "activation");
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  auto x = a.data();
  auto y = b.data();
  std::vector<float> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[i];
  return detail::make_output(
      a.shape(), std::move(out), {&a, &b},
      [](detail::Node& self) {
        for (auto& p : self.parents) {
          if (!p->requires_grad) continue;
          p->ensure_grad();
          for (std::size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
        }
      },
      "add");
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  auto x = a.data();
  auto y = b.data();
  std::vector<float> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * y[i];
  return detail::make_output(
      a.shape(), std::move(out), {&a, &b},
      [](detail::Node& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        // Both factors are read before either gradient is written (mul(x, x)).
        const std::vector<float> av = pa.data, bv = pb.data;
        if (pa.requires_grad) {
          pa.ensure_grad();
          for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i] * bv[i];
        }
        if (pb.requires_grad) {
          pb.ensure_grad();
          for (std::size_t i = 0; i < self.grad.size(); ++i) pb.grad[i] += self.grad[i] * av[i];
        }
      },
      "mul");
}

Tensor affine(const Tensor& x, float scale, float shift) {
  auto v = x.data();
  std::vector<float> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = scale * v[i] + shift;
  return detail::make_output(
      x.shape(), std::move(out), {&x},
      [scale](detail::Node& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += scale * self.grad[i];
      },
      "affine");
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (float v : x.data()) acc += v;
  return detail::make_output(
      {1}, {static_cast<float>(acc)}, {&x},
      [](detail::Node& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (auto& g : p.grad) g += self.grad[0];
      },
      "sum");
}

Tensor mean(const Tensor& x) {
  const std::size_t n = x.numel();
  if (n == 0) throw Error(ErrorCode::InvalidShape, "mean of empty tensor");
  double acc = 0.0;
  for (float v : x.data()) acc += v;
  return detail::make_output(
      {1}, {static_cast<float>(acc / static_cast<double>(n))}, {&x},
      [n](detail::Node& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        const float g = self.grad[0] / static_cast<float>(n);
        for (auto& v : p.grad) v += g;
      },
      "mean");
}

Tensor log_clamped(const Tensor& x, float lo, float hi) {
  auto v = x.data();
  std::vector<float> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::log(std::clamp(v[i], lo, hi));
  return detail::make_output(
      x.shape(), std::move(out), {&x},
      [lo, hi](detail::Node& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
          const float xi = p.data[i];
          if (xi >= lo && xi <= hi) p.grad[i] += self.grad[i] / xi;
        }
      },
      "log_clamped");
}

}  // namespace dkg::tensor
