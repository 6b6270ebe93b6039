#pragma once

#include "causalnet/attention.hpp"

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <string>

namespace causalnet {

// Feature maps are stored pixel-major: an H x W x C map is an (H*W) x C
// matrix whose row y*W + x holds the channels of pixel (x, y).

template <typename Scalar>
Mat<Scalar> silu(const Mat<Scalar>& x) {
  return x.array() / (Scalar(1) + (-x.array()).exp());
}

template <typename Scalar>
Mat<Scalar> silu_backward(const Mat<Scalar>& x, const Mat<Scalar>& grad_out) {
  const auto s = (Scalar(1) / (Scalar(1) + (-x.array()).exp())).eval();
  return (grad_out.array() * s * (Scalar(1) + x.array() * (Scalar(1) - s))).matrix();
}

/// Per-token layer normalization over the feature axis.
template <typename Scalar>
struct LayerNorm {
  Mat<Scalar> gain;  // 1 x D
  Mat<Scalar> bias;  // 1 x D
  Scalar eps = Scalar(1e-5);

  struct Cache {
    Mat<Scalar> normalized;
    Vec<Scalar> inv_std;
  };

  LayerNorm() = default;
  explicit LayerNorm(Eigen::Index dim) : gain(Mat<Scalar>::Ones(1, dim)), bias(Mat<Scalar>::Zero(1, dim)) {}

  Mat<Scalar> operator()(const Mat<Scalar>& x, Cache* cache = nullptr) const {
    const Eigen::Index d = x.cols();
    const Vec<Scalar> mean = x.rowwise().mean();
    const Mat<Scalar> centered = x.colwise() - mean;
    const Vec<Scalar> var = centered.array().square().rowwise().sum() / Scalar(d);
    const Vec<Scalar> inv_std = (var.array() + eps).rsqrt();
    Mat<Scalar> normalized = inv_std.asDiagonal() * centered;
    Mat<Scalar> y = normalized * gain.row(0).asDiagonal();
    y.rowwise() += bias.row(0);
    if (cache) cache->normalized = std::move(normalized), cache->inv_std = inv_std;
    return y;
  }

  Mat<Scalar> backward(const Cache& c, const Mat<Scalar>& grad_out, LayerNorm& grad) const {
    grad.gain += grad_out.cwiseProduct(c.normalized).colwise().sum();
    grad.bias += grad_out.colwise().sum();
    const Mat<Scalar> gn = grad_out * gain.row(0).asDiagonal();
    const Vec<Scalar> mean_gn = gn.rowwise().mean();
    const Vec<Scalar> mean_gnx = gn.cwiseProduct(c.normalized).rowwise().mean();
    Mat<Scalar> centered = gn.colwise() - mean_gn;
    centered -= mean_gnx.asDiagonal() * c.normalized;
    return c.inv_std.asDiagonal() * centered;
  }

  template <typename F>
  void visit(F&& f) {
    f("gain", gain);
    f("bias", bias);
  }
  template <typename F>
  void visit(F&& f) const {
    f("gain", gain);
    f("bias", bias);
  }
};

struct ConvShape {
  int in_h = 0, in_w = 0, in_c = 0;
  int kernel = 1, stride = 1, pad = 0;

  int out_h() const { return (in_h + 2 * pad - kernel) / stride + 1; }
  int out_w() const { return (in_w + 2 * pad - kernel) / stride + 1; }
  int patch() const { return kernel * kernel * in_c; }
};

/// Patch matrix: row oy*out_w+ox, column (ky*kernel+kx)*in_c + c.
template <typename Scalar>
Mat<Scalar> im2col(const Mat<Scalar>& x, const ConvShape& s) {
  Mat<Scalar> cols = Mat<Scalar>::Zero(s.out_h() * s.out_w(), s.patch());
  for (int oy = 0; oy < s.out_h(); ++oy)
    for (int ox = 0; ox < s.out_w(); ++ox)
      for (int ky = 0; ky < s.kernel; ++ky) {
        const int iy = oy * s.stride + ky - s.pad;
        if (iy < 0 || iy >= s.in_h) continue;
        for (int kx = 0; kx < s.kernel; ++kx) {
          const int ix = ox * s.stride + kx - s.pad;
          if (ix < 0 || ix >= s.in_w) continue;
          cols.row(oy * s.out_w() + ox).segment((ky * s.kernel + kx) * s.in_c, s.in_c) = x.row(iy * s.in_w + ix);
        }
      }
  return cols;
}

template <typename Scalar>
Mat<Scalar> col2im(const Mat<Scalar>& cols, const ConvShape& s) {
  Mat<Scalar> x = Mat<Scalar>::Zero(s.in_h * s.in_w, s.in_c);
  for (int oy = 0; oy < s.out_h(); ++oy)
    for (int ox = 0; ox < s.out_w(); ++ox)
      for (int ky = 0; ky < s.kernel; ++ky) {
        const int iy = oy * s.stride + ky - s.pad;
        if (iy < 0 || iy >= s.in_h) continue;
        for (int kx = 0; kx < s.kernel; ++kx) {
          const int ix = ox * s.stride + kx - s.pad;
          if (ix < 0 || ix >= s.in_w) continue;
          x.row(iy * s.in_w + ix) += cols.row(oy * s.out_w() + ox).segment((ky * s.kernel + kx) * s.in_c, s.in_c);
        }
      }
  return x;
}

/// Lightweight convolutional encoder: three stride-2 stages mapping a
/// 28x28xC map to a 2x2 grid of D-dimensional tokens (28 -> 14 -> 7 -> 2).
/// SiLU follows the first two stages; the token stage is linear.
template <typename Scalar>
struct LiteConvEncoder {
  static constexpr int kSide = 28;
  static constexpr int kGrid = 2;

  int in_channels = 0;
  Projection<Scalar> conv1, conv2, conv3;  // weight: patch x out

  struct Cache {
    Mat<Scalar> cols1, pre1, cols2, pre2, cols3;
  };

  LiteConvEncoder() = default;
  LiteConvEncoder(int in_c, int c1, int c2, int dim)
      : in_channels(in_c),
        conv1(stage1(in_c).patch(), c1),
        conv2(stage2(c1).patch(), c2),
        conv3(stage3(c2).patch(), dim) {}

  static ConvShape stage1(int c) { return {kSide, kSide, c, 4, 2, 1}; }
  static ConvShape stage2(int c) { return {14, 14, c, 4, 2, 1}; }
  static ConvShape stage3(int c) { return {7, 7, c, 4, 2, 0}; }

  int c1() const { return static_cast<int>(conv1.weight.cols()); }
  int c2() const { return static_cast<int>(conv2.weight.cols()); }

  /// x: 784 x in_channels; returns 4 x D tokens.
  Mat<Scalar> operator()(const Mat<Scalar>& x, Cache* cache = nullptr) const {
    if (x.rows() != kSide * kSide || x.cols() != in_channels)
      throw std::invalid_argument("LiteConvEncoder: expected 784 x " + std::to_string(in_channels) + " input");
    Cache local;
    auto& c = cache ? *cache : local;
    c.cols1 = im2col(x, stage1(in_channels));
    c.pre1 = conv1(c.cols1);
    c.cols2 = im2col<Scalar>(silu(c.pre1), stage2(c1()));
    c.pre2 = conv2(c.cols2);
    c.cols3 = im2col<Scalar>(silu(c.pre2), stage3(c2()));
    return conv3(c.cols3);
  }

  /// Parameter gradients only; the input image is data.
  void backward(const Cache& c, const Mat<Scalar>& grad_tokens, LiteConvEncoder& grad) const {
    const Mat<Scalar> g_cols3 = conv3.backward(c.cols3, grad_tokens, grad.conv3);
    const Mat<Scalar> g_pre2 = silu_backward<Scalar>(c.pre2, col2im(g_cols3, stage3(c2())));
    const Mat<Scalar> g_cols2 = conv2.backward(c.cols2, g_pre2, grad.conv2);
    const Mat<Scalar> g_pre1 = silu_backward<Scalar>(c.pre1, col2im(g_cols2, stage2(c1())));
    grad.conv1.weight.noalias() += c.cols1.transpose() * g_pre1;
    grad.conv1.bias += g_pre1.colwise().sum();
  }

  template <typename F>
  void visit(F&& f) {
    visit_impl(*this, f);
  }
  template <typename F>
  void visit(F&& f) const {
    visit_impl(*this, f);
  }

 private:
  template <typename Self, typename F>
  static void visit_impl(Self& self, F& f) {
    self.conv1.visit([&](const char* n, auto& m) { f(std::string("conv1.") + n, m); });
    self.conv2.visit([&](const char* n, auto& m) { f(std::string("conv2.") + n, m); });
    self.conv3.visit([&](const char* n, auto& m) { f(std::string("conv3.") + n, m); });
  }
};

}  // namespace causalnet
