// Convolution and transposed convolution via im2col + GEMM. The GEMM kernel is
// Eigen's single-threaded product, which keeps reductions in a fixed order.

#include <Eigen/Core>

#include <string>

#include "dkg/error.hpp"
#include "dkg/tensor/ops.hpp"

namespace dkg::tensor {
namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

// Geometry shared by im2col/col2im: an image of `channels` x height x width is
// unfolded into rows (c, ki, kj) and columns (oy, ox).
struct Unfold {
  int channels, height, width;
  int kh, kw, stride, padding;
  PadMode mode;
  int out_h, out_w;

  int rows() const noexcept { return channels * kh * kw; }
  int cols() const noexcept { return out_h * out_w; }
};

// Maps a padded coordinate into the image; -1 means "zero padding".
inline int source_index(int i, int n, PadMode mode) noexcept {
  if (i >= 0 && i < n) return i;
  if (mode == PadMode::zeros) return -1;
  return i < 0 ? -i : 2 * n - 2 - i;
}

void im2col(const Unfold& g, const float* image, float* col) {
  for (int c = 0; c < g.channels; ++c) {
    const float* plane = image + static_cast<std::size_t>(c) * g.height * g.width;
    for (int ki = 0; ki < g.kh; ++ki) {
      for (int kj = 0; kj < g.kw; ++kj) {
        float* row = col + static_cast<std::size_t>((c * g.kh + ki) * g.kw + kj) * g.cols();
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = source_index(oy * g.stride - g.padding + ki, g.height, g.mode);
          float* dst = row + oy * g.out_w;
          if (iy < 0) {
            std::fill(dst, dst + g.out_w, 0.0f);
            continue;
          }
          const float* src = plane + static_cast<std::size_t>(iy) * g.width;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = source_index(ox * g.stride - g.padding + kj, g.width, g.mode);
            dst[ox] = ix < 0 ? 0.0f : src[ix];
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-adds every column entry back to its pixel.
void col2im(const Unfold& g, const float* col, float* image) {
  for (int c = 0; c < g.channels; ++c) {
    float* plane = image + static_cast<std::size_t>(c) * g.height * g.width;
    for (int ki = 0; ki < g.kh; ++ki) {
      for (int kj = 0; kj < g.kw; ++kj) {
        const float* row = col + static_cast<std::size_t>((c * g.kh + ki) * g.kw + kj) * g.cols();
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = source_index(oy * g.stride - g.padding + ki, g.height, g.mode);
          if (iy < 0) continue;
          const float* src = row + oy * g.out_w;
          float* dst = plane + static_cast<std::size_t>(iy) * g.width;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = source_index(ox * g.stride - g.padding + kj, g.width, g.mode);
            if (ix >= 0) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

void require_rank4(const Tensor& t, const char* what) {
  if (!t.defined() || t.shape().size() != 4) {
    throw Error(ErrorCode::InvalidShape, std::string(what) + " must be rank 4, got " +
                                             (t.defined() ? shape_string(t.shape()) : std::string("undefined")));
  }
}

}  // namespace

int conv_out_extent(int in, int kernel, int stride, int padding) noexcept {
  const int span = in + 2 * padding - kernel;
  return span < 0 ? 0 : span / stride + 1;
}

int conv_transpose_out_extent(int in, int kernel, int stride, int padding, int output_padding) noexcept {
  return (in - 1) * stride - 2 * padding + kernel + output_padding;
}

Tensor conv2d(const Tensor& input, const Tensor& weight, const Conv2dOptions& opt) {
  require_rank4(input, "conv2d input");
  require_rank4(weight, "conv2d weight");
  const auto& xs = input.shape();
  const auto& ws = weight.shape();
  const int n = static_cast<int>(xs[0]), cin = static_cast<int>(xs[1]);
  const int h = static_cast<int>(xs[2]), w = static_cast<int>(xs[3]);
  const int cout = static_cast<int>(ws[0]), kh = static_cast<int>(ws[2]), kw = static_cast<int>(ws[3]);
  if (static_cast<int>(ws[1]) != cin) {
    throw Error(ErrorCode::InvalidShape, "conv2d: input has " + std::to_string(cin) + " channels, weight expects " +
                                             std::to_string(ws[1]));
  }
  if (opt.stride < 1 || opt.padding < 0) throw Error(ErrorCode::InvalidShape, "conv2d: bad stride/padding");
  if (opt.pad_mode == PadMode::reflect &&
      (opt.padding >= kh || opt.padding >= kw || opt.padding >= h || opt.padding >= w)) {
    throw Error(ErrorCode::InvalidPadding, "conv2d: reflect padding " + std::to_string(opt.padding) +
                                               " too large for kernel/input");
  }
  const int oh = conv_out_extent(h, kh, opt.stride, opt.padding);
  const int ow = conv_out_extent(w, kw, opt.stride, opt.padding);
  if (oh < 1 || ow < 1) throw Error(ErrorCode::InvalidShape, "conv2d: kernel larger than padded input");

  const Unfold g{cin, h, w, kh, kw, opt.stride, opt.padding, opt.pad_mode, oh, ow};
  const std::size_t in_plane = static_cast<std::size_t>(cin) * h * w;
  const std::size_t out_plane = static_cast<std::size_t>(cout) * oh * ow;
  const std::size_t col_size = static_cast<std::size_t>(g.rows()) * g.cols();
  const bool keep_cols = NoGradGuard::recording() && detail::any_requires_grad({&input, &weight});

  auto cols = std::make_shared<std::vector<float>>(keep_cols ? col_size * n : col_size);
  std::vector<float> out(static_cast<std::size_t>(n) * out_plane);
  const ConstMapMat wmat(weight.data().data(), cout, g.rows());
  for (int b = 0; b < n; ++b) {
    float* col = cols->data() + (keep_cols ? col_size * b : 0);
    im2col(g, input.data().data() + in_plane * b, col);
    MapMat(out.data() + out_plane * b, cout, g.cols()).noalias() = wmat * ConstMapMat(col, g.rows(), g.cols());
  }

  return detail::make_output(
      {xs[0], ws[0], static_cast<std::size_t>(oh), static_cast<std::size_t>(ow)}, std::move(out), {&input, &weight},
      [g, n, cout, in_plane, out_plane, col_size, cols](detail::Node& self) {
        auto& x = *self.parents[0];
        auto& wt = *self.parents[1];
        const ConstMapMat wmat(wt.data.data(), cout, g.rows());
        if (wt.requires_grad) wt.ensure_grad();
        if (x.requires_grad) x.ensure_grad();
        std::vector<float> dcol(x.requires_grad ? col_size : 0);
        for (int b = 0; b < n; ++b) {
          const ConstMapMat dy(self.grad.data() + out_plane * b, cout, g.cols());
          const ConstMapMat col(cols->data() + col_size * b, g.rows(), g.cols());
          if (wt.requires_grad) MapMat(wt.grad.data(), cout, g.rows()).noalias() += dy * col.transpose();
          if (x.requires_grad) {
            MapMat(dcol.data(), g.rows(), g.cols()).noalias() = wmat.transpose() * dy;
            col2im(g, dcol.data(), x.grad.data() + in_plane * b);
          }
        }
      },
      "conv2d");
}

Tensor conv_transpose2d(const Tensor& input, const Tensor& weight, const ConvTranspose2dOptions& opt) {
  require_rank4(input, "conv_transpose2d input");
  require_rank4(weight, "conv_transpose2d weight");
  const auto& xs = input.shape();
  const auto& ws = weight.shape();
  const int n = static_cast<int>(xs[0]), cin = static_cast<int>(xs[1]);
  const int h = static_cast<int>(xs[2]), w = static_cast<int>(xs[3]);
  const int cout = static_cast<int>(ws[1]), kh = static_cast<int>(ws[2]), kw = static_cast<int>(ws[3]);
  if (static_cast<int>(ws[0]) != cin) {
    throw Error(ErrorCode::InvalidShape, "conv_transpose2d: input has " + std::to_string(cin) +
                                             " channels, weight expects " + std::to_string(ws[0]));
  }
  if (opt.stride < 1 || opt.padding < 0 || opt.output_padding < 0 || opt.output_padding >= opt.stride) {
    throw Error(ErrorCode::InvalidShape, "conv_transpose2d: need stride >= 1 and 0 <= output_padding < stride");
  }
  const int oh = conv_transpose_out_extent(h, kh, opt.stride, opt.padding, opt.output_padding);
  const int ow = conv_transpose_out_extent(w, kw, opt.stride, opt.padding, opt.output_padding);
  if (oh < 1 || ow < 1) throw Error(ErrorCode::InvalidShape, "conv_transpose2d: empty output");

  // The output image, unfolded with the forward-conv geometry, has exactly
  // h x w columns; the transposed conv is col2im(W^T x).
  const Unfold g{cout, oh, ow, kh, kw, opt.stride, opt.padding, PadMode::zeros, h, w};
  const std::size_t in_plane = static_cast<std::size_t>(cin) * h * w;
  const std::size_t out_plane = static_cast<std::size_t>(cout) * oh * ow;
  const std::size_t col_size = static_cast<std::size_t>(g.rows()) * g.cols();

  std::vector<float> out(static_cast<std::size_t>(n) * out_plane, 0.0f);
  std::vector<float> col(col_size);
  const ConstMapMat wmat(weight.data().data(), cin, g.rows());
  for (int b = 0; b < n; ++b) {
    MapMat(col.data(), g.rows(), g.cols()).noalias() =
        wmat.transpose() * ConstMapMat(input.data().data() + in_plane * b, cin, g.cols());
    col2im(g, col.data(), out.data() + out_plane * b);
  }

  return detail::make_output(
      {xs[0], ws[1], static_cast<std::size_t>(oh), static_cast<std::size_t>(ow)}, std::move(out), {&input, &weight},
      [g, n, cin, in_plane, out_plane, col_size](detail::Node& self) {
        auto& x = *self.parents[0];
        auto& wt = *self.parents[1];
        const ConstMapMat wmat(wt.data.data(), cin, g.rows());
        if (wt.requires_grad) wt.ensure_grad();
        if (x.requires_grad) x.ensure_grad();
        std::vector<float> dcol(col_size);
        for (int b = 0; b < n; ++b) {
          im2col(g, self.grad.data() + out_plane * b, dcol.data());
          const ConstMapMat dc(dcol.data(), g.rows(), g.cols());
          if (x.requires_grad) MapMat(x.grad.data() + in_plane * b, cin, g.cols()).noalias() += wmat * dc;
          if (wt.requires_grad) {
            MapMat(wt.grad.data(), cin, g.rows()).noalias() +=
                ConstMapMat(x.data.data() + in_plane * b, cin, g.cols()) * dc.transpose();
          }
        }
      },
      "conv_transpose2d");
}

}  // namespace dkg::tensor
