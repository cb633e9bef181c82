#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qtmt/tensor.hpp"

namespace qtmt::nn {

enum class Padding { Same, Valid };

struct ConvGeometry {
  int out_h;
  int out_w;
  int pad_top;
  int pad_left;
};

/// TensorFlow-style output size and leading padding.
inline ConvGeometry conv_geometry(int in_h, int in_w, int k_h, int k_w, int stride, Padding padding) {
  QTMT_CHECK(stride > 0, ErrorCode::ShapeMismatch, "stride must be positive");
  if (padding == Padding::Valid) {
    QTMT_CHECK(in_h >= k_h && in_w >= k_w, ErrorCode::ShapeMismatch, "kernel larger than input with valid padding");
    return {(in_h - k_h) / stride + 1, (in_w - k_w) / stride + 1, 0, 0};
  }
  const int out_h = (in_h + stride - 1) / stride;
  const int out_w = (in_w + stride - 1) / stride;
  const int pad_h = std::max((out_h - 1) * stride + k_h - in_h, 0);
  const int pad_w = std::max((out_w - 1) * stride + k_w - in_w, 0);
  return {out_h, out_w, pad_h / 2, pad_w / 2};
}

/// Cross-correlation with zero padding; products accumulate in double.
inline Tensor conv2d(const Tensor& input, const Tensor& kernel, std::span<const float> bias, int stride,
                     Padding padding) {
  QTMT_CHECK(input.rank() == 3 && kernel.rank() == 4, ErrorCode::ShapeMismatch, "conv2d expects HWC input, HWIO kernel");
  const int kh = kernel.shape()[0], kw = kernel.shape()[1], cin = kernel.shape()[2], cout = kernel.shape()[3];
  QTMT_CHECK(cin == input.channels(), ErrorCode::ShapeMismatch,
             "kernel expects " + std::to_string(cin) + " channels, input has " + std::to_string(input.channels()));
  QTMT_CHECK(static_cast<int>(bias.size()) == cout, ErrorCode::ShapeMismatch, "bias length must equal filter count");
  const ConvGeometry g = conv_geometry(input.height(), input.width(), kh, kw, stride, padding);
  Tensor out(g.out_h, g.out_w, cout);
  std::vector<double> acc(cout);
  for (int oy = 0; oy < g.out_h; ++oy) {
    for (int ox = 0; ox < g.out_w; ++ox) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int ky = 0; ky < kh; ++ky) {
        const int iy = oy * stride + ky - g.pad_top;
        if (iy < 0 || iy >= input.height()) continue;
        for (int kx = 0; kx < kw; ++kx) {
          const int ix = ox * stride + kx - g.pad_left;
          if (ix < 0 || ix >= input.width()) continue;
          for (int ci = 0; ci < cin; ++ci) {
            const double v = input.at(iy, ix, ci);
            if (v == 0.0) continue;
            const float* wrow = &kernel.data()[((static_cast<std::size_t>(ky) * kw + kx) * cin + ci) * cout];
            for (int co = 0; co < cout; ++co) acc[co] += v * static_cast<double>(wrow[co]);
          }
        }
      }
      for (int co = 0; co < cout; ++co) out.at(oy, ox, co) = static_cast<float>(acc[co] + static_cast<double>(bias[co]));
    }
  }
  return out;
}

inline std::uint64_t conv2d_macs(int out_h, int out_w, int k_h, int k_w, int cin, int cout) {
  return static_cast<std::uint64_t>(out_h) * out_w * k_h * k_w * cin * cout;
}

inline Tensor relu(Tensor t) {
  for (float& v : t.data()) v = std::max(v, 0.0f);
  return t;
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  QTMT_CHECK(a.shape() == b.shape(), ErrorCode::ShapeMismatch, "add: shapes differ");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
  return out;
}

/// Non-overlapping k x k max per channel.
inline Tensor maxpool(const Tensor& input, int k) {
  QTMT_CHECK(k > 0 && input.height() % k == 0 && input.width() % k == 0, ErrorCode::IndivisibleShape,
             "pool size " + std::to_string(k) + " does not divide " + shape_string(input.shape()));
  Tensor out(input.height() / k, input.width() / k, input.channels());
  for (int oy = 0; oy < out.height(); ++oy)
    for (int ox = 0; ox < out.width(); ++ox)
      for (int c = 0; c < out.channels(); ++c) {
        float m = input.at(oy * k, ox * k, c);
        for (int y = 0; y < k; ++y)
          for (int x = 0; x < k; ++x) m = std::max(m, input.at(oy * k + y, ox * k + x, c));
        out.at(oy, ox, c) = m;
      }
  return out;
}

/// Nearest-neighbour resampling to (h, w): source index floor(i * src / dst).
inline Tensor resize_nearest(const Tensor& input, int h, int w) {
  Tensor out(h, w, input.channels());
  for (int y = 0; y < h; ++y) {
    const int sy = static_cast<int>(static_cast<long long>(y) * input.height() / h);
    for (int x = 0; x < w; ++x) {
      const int sx = static_cast<int>(static_cast<long long>(x) * input.width() / w);
      for (int c = 0; c < input.channels(); ++c) out.at(y, x, c) = input.at(sy, sx, c);
    }
  }
  return out;
}

inline Tensor concat_channels(const std::vector<const Tensor*>& parts) {
  QTMT_CHECK(!parts.empty(), ErrorCode::ShapeMismatch, "nothing to concatenate");
  const int h = parts.front()->height(), w = parts.front()->width();
  int c = 0;
  for (const Tensor* p : parts) {
    QTMT_CHECK(p->height() == h && p->width() == w, ErrorCode::ShapeMismatch, "concat: spatial dims differ");
    c += p->channels();
  }
  Tensor out(h, w, c);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int off = 0;
      for (const Tensor* p : parts) {
        for (int ci = 0; ci < p->channels(); ++ci) out.at(y, x, off + ci) = p->at(y, x, ci);
        off += p->channels();
      }
    }
  return out;
}

/// Max-pools the input at every size in `kernel_set`, brings each result back
/// to the input grid by nearest-neighbour upsampling, and stacks them along
/// channels in set order.
inline Tensor multi_pool(const Tensor& input, std::span<const int> kernel_set) {
  QTMT_CHECK(!kernel_set.empty(), ErrorCode::ShapeMismatch, "empty kernel set");
  std::vector<Tensor> pooled;
  pooled.reserve(kernel_set.size());
  for (int k : kernel_set) pooled.push_back(resize_nearest(maxpool(input, k), input.height(), input.width()));
  std::vector<const Tensor*> parts;
  for (const Tensor& t : pooled) parts.push_back(&t);
  return concat_channels(parts);
}

struct ResBlockParams {
  Tensor conv1_kernel;
  std::vector<float> conv1_bias;
  Tensor conv2_kernel;
  std::vector<float> conv2_bias;
  // 1x1 projection, present only when input and output channel counts differ.
  std::optional<Tensor> proj_kernel;
  std::vector<float> proj_bias;
};

/// relu(conv2(relu(conv1(x))) + shortcut(x)), stride 1, same padding.
inline Tensor resblock(const Tensor& input, const ResBlockParams& p) {
  const Tensor h1 = relu(conv2d(input, p.conv1_kernel, p.conv1_bias, 1, Padding::Same));
  const Tensor h2 = conv2d(h1, p.conv2_kernel, p.conv2_bias, 1, Padding::Same);
  if (p.proj_kernel) return relu(add(h2, conv2d(input, *p.proj_kernel, p.proj_bias, 1, Padding::Same)));
  QTMT_CHECK(h2.channels() == input.channels(), ErrorCode::ShapeMismatch,
             "identity shortcut needs equal channel counts; supply a projection");
  return relu(add(h2, input));
}

}  // namespace qtmt::nn
