#pragma once

// Test-only numeric helpers: random inputs and the independent oracles
// (naive convolution loops, central finite differences) that the tensor
// engine is checked against. Nothing here calls into the im2col/GEMM path.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "dkg/rng.hpp"
#include "dkg/tensor/ops.hpp"
#include "dkg/tensor/tensor.hpp"

namespace dkg::test {

inline tensor::Tensor random_tensor(tensor::Shape shape, Rng& rng, bool requires_grad = false, float scale = 1.0f) {
  std::vector<float> v(tensor::numel(shape));
  for (auto& x : v) x = static_cast<float>(scale * (2.0 * rng.uniform01() - 1.0));
  return tensor::Tensor::from_data(std::move(shape), std::move(v), requires_grad);
}

/// Direct sliding-window convolution in double precision.
inline std::vector<double> naive_conv2d(const tensor::Tensor& x, const tensor::Tensor& w, int stride, int pad,
                                        bool reflect, int& oh, int& ow) {
  const auto& xs = x.shape();
  const auto& ws = w.shape();
  const int n = xs[0], cin = xs[1], h = xs[2], wd = xs[3];
  const int cout = ws[0], kh = ws[2], kw = ws[3];
  oh = (h + 2 * pad - kh) / stride + 1;
  ow = (wd + 2 * pad - kw) / stride + 1;
  std::vector<double> out(static_cast<std::size_t>(n) * cout * oh * ow, 0.0);
  auto xv = x.data();
  auto wv = w.data();
  auto fold = [&](int i, int len) {
    if (!reflect) return i;
    if (i < 0) return -i;
    if (i >= len) return 2 * len - 2 - i;
    return i;
  };
  for (int b = 0; b < n; ++b)
    for (int co = 0; co < cout; ++co)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          double acc = 0.0;
          for (int ci = 0; ci < cin; ++ci)
            for (int ki = 0; ki < kh; ++ki)
              for (int kj = 0; kj < kw; ++kj) {
                const int iy = fold(oy * stride - pad + ki, h);
                const int ix = fold(ox * stride - pad + kj, wd);
                if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
                acc += static_cast<double>(xv[((b * cin + ci) * h + iy) * wd + ix]) *
                       wv[((co * cin + ci) * kh + ki) * kw + kj];
              }
          out[((b * cout + co) * oh + oy) * ow + ox] = acc;
        }
  return out;
}

/// Direct scatter form of the transposed convolution in double precision:
/// every input pixel stamps the kernel onto the (stride-dilated) output.
inline std::vector<double> naive_conv_transpose2d(const tensor::Tensor& x, const tensor::Tensor& w, int stride,
                                                  int pad, int out_pad, int& oh, int& ow) {
  const auto& xs = x.shape();
  const auto& ws = w.shape();
  const int n = xs[0], cin = xs[1], h = xs[2], wd = xs[3];
  const int cout = ws[1], kh = ws[2], kw = ws[3];
  oh = (h - 1) * stride - 2 * pad + kh + out_pad;
  ow = (wd - 1) * stride - 2 * pad + kw + out_pad;
  std::vector<double> out(static_cast<std::size_t>(n) * cout * oh * ow, 0.0);
  auto xv = x.data();
  auto wv = w.data();
  for (int b = 0; b < n; ++b)
    for (int ci = 0; ci < cin; ++ci)
      for (int iy = 0; iy < h; ++iy)
        for (int ix = 0; ix < wd; ++ix) {
          const double v = xv[((b * cin + ci) * h + iy) * wd + ix];
          for (int co = 0; co < cout; ++co)
            for (int ki = 0; ki < kh; ++ki)
              for (int kj = 0; kj < kw; ++kj) {
                const int oy = iy * stride - pad + ki;
                const int ox = ix * stride - pad + kj;
                if (oy < 0 || oy >= oh || ox < 0 || ox >= ow) continue;
                out[((b * cout + co) * oh + oy) * ow + ox] += v * wv[((ci * cout + co) * kh + ki) * kw + kj];
              }
        }
  return out;
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

/// Compares backward() against central differences of L = <f(inputs), r>
/// for a fixed random projection r. Each entry's error is taken relative to
/// max(|analytic|, |numeric|, largest |numeric| of that input): float32
/// rounding puts an absolute noise floor of ~1e-4 on the differences, so
/// near-zero entries are measured against the gradient's scale.
inline GradCheckResult grad_check(const std::function<tensor::Tensor(const std::vector<tensor::Tensor>&)>& f,
                                  std::vector<tensor::Tensor> inputs, Rng& rng, double h = 1e-3) {
  using tensor::Tensor;
  Tensor probe;
  {
    tensor::NoGradGuard guard;
    probe = f(inputs);
  }
  const Tensor proj = random_tensor(probe.shape(), rng);

  auto objective = [&](const std::vector<Tensor>& in) {
    tensor::NoGradGuard guard;
    const Tensor out = f(in);
    double acc = 0.0;
    for (std::size_t i = 0; i < out.numel(); ++i) acc += static_cast<double>(out.data()[i]) * proj.data()[i];
    return acc;
  };

  for (auto& t : inputs) t.zero_grad();
  tensor::sum(tensor::mul(f(inputs), proj)).backward();

  GradCheckResult result;
  for (auto& t : inputs) {
    if (!t.requires_grad()) continue;
    const std::vector<float> analytic(t.grad().begin(), t.grad().end());
    std::vector<double> numerics(t.numel());
    for (std::size_t i = 0; i < t.numel(); ++i) {
      const float saved = t.data()[i];
      const float hi = static_cast<float>(saved + h);
      const float lo = static_cast<float>(saved - h);
      t.mutable_data()[i] = hi;
      const double up = objective(inputs);
      t.mutable_data()[i] = lo;
      const double down = objective(inputs);
      t.mutable_data()[i] = saved;
      // divide by the step actually representable in float32
      numerics[i] = (up - down) / (static_cast<double>(hi) - lo);
    }
    double scale = 0.0;
    for (double n : numerics) scale = std::max(scale, std::abs(n));
    for (std::size_t i = 0; i < t.numel(); ++i) {
      const double denom = std::max({std::abs(numerics[i]), std::abs(static_cast<double>(analytic[i])), scale});
      if (denom == 0.0) continue;
      result.max_rel_error = std::max(result.max_rel_error, std::abs(numerics[i] - analytic[i]) / denom);
      ++result.checked;
    }
  }
  return result;
}

struct GradCase {
  const char* name;
  std::function<tensor::Tensor(const std::vector<tensor::Tensor>&)> f;
  std::function<std::vector<tensor::Tensor>()> make;
};

/// One case per differentiable layer op, each drawing fresh small random
/// instances from `rng`. Piecewise-linear activations get inputs kept away
/// from their kink.
inline std::vector<GradCase> layer_grad_cases(Rng& rng) {
  using namespace tensor;
  auto away_from_zero = [&rng](Shape s) {
    auto t = random_tensor(std::move(s), rng, true);
    for (auto& v : t.mutable_data()) v = std::copysign(0.05f + std::abs(v), v);
    return t;
  };
  return {
      {"conv2d zeros s1", [](auto& in) { return conv2d(in[0], in[1], {1, 1, PadMode::zeros}); },
       [&rng] { return std::vector{random_tensor({1, 2, 6, 6}, rng, true), random_tensor({3, 2, 3, 3}, rng, true)}; }},
      {"conv2d reflect s1", [](auto& in) { return conv2d(in[0], in[1], {1, 2, PadMode::reflect}); },
       [&rng] { return std::vector{random_tensor({1, 2, 6, 6}, rng, true), random_tensor({2, 2, 3, 3}, rng, true)}; }},
      {"conv2d s2 k4", [](auto& in) { return conv2d(in[0], in[1], {2, 1, PadMode::zeros}); },
       [&rng] { return std::vector{random_tensor({1, 3, 6, 6}, rng, true), random_tensor({4, 3, 4, 4}, rng, true)}; }},
      {"conv_transpose2d s2", [](auto& in) { return conv_transpose2d(in[0], in[1], {2, 1, 1}); },
       [&rng] { return std::vector{random_tensor({1, 4, 3, 3}, rng, true), random_tensor({4, 2, 3, 3}, rng, true)}; }},
      {"instance_norm", [](auto& in) { return instance_norm(in[0]); },
       [&rng] { return std::vector{random_tensor({1, 4, 6, 6}, rng, true)}; }},
      {"relu", [](auto& in) { return activation(in[0], Activation::relu); },
       [away_from_zero] { return std::vector{away_from_zero({1, 4, 6, 6})}; }},
      {"leaky_relu", [](auto& in) { return activation(in[0], Activation::leaky_relu); },
       [away_from_zero] { return std::vector{away_from_zero({1, 4, 6, 6})}; }},
      {"tanh", [](auto& in) { return activation(in[0], Activation::tanh); },
       [&rng] { return std::vector{random_tensor({1, 4, 6, 6}, rng, true, 2.0f)}; }},
      {"sigmoid", [](auto& in) { return activation(in[0], Activation::sigmoid); },
       [&rng] { return std::vector{random_tensor({1, 4, 6, 6}, rng, true, 3.0f)}; }},
      {"add", [](auto& in) { return add(in[0], in[1]); },
       [&rng] { return std::vector{random_tensor({1, 2, 3, 3}, rng, true), random_tensor({1, 2, 3, 3}, rng, true)}; }},
      {"mean", [](auto& in) { return mean(in[0]); }, [&rng] { return std::vector{random_tensor({1, 4, 6, 6}, rng, true)}; }},
      {"log_clamped", [](auto& in) { return log_clamped(in[0], 1e-7f, 1.0f - 1e-7f); },
       [&rng] {
         auto t = random_tensor({1, 1, 4, 4}, rng, true);
         for (auto& v : t.mutable_data()) v = 0.2f + 0.3f * (v + 1.0f);
         return std::vector{t};
       }},
  };
}

/// Worst relative error over `instances` fresh draws of one case.
inline double worst_grad_error(const GradCase& c, int instances, Rng& rng) {
  double worst = 0.0;
  for (int k = 0; k < instances; ++k) worst = std::max(worst, grad_check(c.f, c.make(), rng).max_rel_error);
  return worst;
}

}  // namespace dkg::test
