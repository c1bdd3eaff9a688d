#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "softbubble/error.hpp"
#include "softbubble/geometry/camera.hpp"

namespace softbubble::classify {

using geometry::DepthImage;

inline constexpr int kMaxResolutionParam = 5;
inline constexpr int kNetworkInputSize = 224;

/// Box average over an integer partition of the source into w x h blocks.
/// Only valid pixels contribute; a block with none stays invalid.
inline DepthImage box_downscale(const DepthImage& img, int w, int h) {
  if (w < 1 || h < 1 || w > img.width() || h > img.height())
    throw InvalidArgument("box_downscale target must be between 1x1 and the source size");
  DepthImage out(w, h);
  for (int j = 0; j < h; ++j) {
    const int y0 = j * img.height() / h, y1 = (j + 1) * img.height() / h;
    for (int i = 0; i < w; ++i) {
      const int x0 = i * img.width() / w, x1 = (i + 1) * img.width() / w;
      double sum = 0.0;
      int n = 0;
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x)
          if (img.valid(x, y)) {
            sum += img.at(x, y);
            ++n;
          }
      if (n > 0) out.at(i, j) = static_cast<float>(sum / n);
    }
  }
  return out;
}

/// Bilinear resize with pixel-center alignment. Invalid samples are dropped
/// and the remaining weights renormalized.
inline DepthImage bilinear_resize(const DepthImage& img, int w, int h) {
  if (w < 1 || h < 1) throw InvalidArgument("bilinear_resize target must be positive");
  DepthImage out(w, h);
  const double sx = static_cast<double>(img.width()) / w;
  const double sy = static_cast<double>(img.height()) / h;
  for (int j = 0; j < h; ++j) {
    const double fy = std::clamp((j + 0.5) * sy - 0.5, 0.0, img.height() - 1.0);
    const int y0 = std::min(static_cast<int>(fy), img.height() - 1);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double ty = fy - y0;
    for (int i = 0; i < w; ++i) {
      const double fx = std::clamp((i + 0.5) * sx - 0.5, 0.0, img.width() - 1.0);
      const int x0 = std::min(static_cast<int>(fx), img.width() - 1);
      const int x1 = std::min(x0 + 1, img.width() - 1);
      const double tx = fx - x0;
      const double wts[4] = {(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty};
      const int xs[4] = {x0, x1, x0, x1};
      const int ys[4] = {y0, y0, y1, y1};
      double sum = 0.0, wsum = 0.0;
      for (int k = 0; k < 4; ++k) {
        if (wts[k] <= 0.0 || !img.valid(xs[k], ys[k])) continue;
        sum += wts[k] * img.at(xs[k], ys[k]);
        wsum += wts[k];
      }
      if (wsum > 0.0) out.at(i, j) = static_cast<float>(sum / wsum);
    }
  }
  return out;
}

inline void check_resolution_param(int n) {
  if (n < 0 || n > kMaxResolutionParam)
    throw InvalidArgument("resolution parameter N must lie in 0..5, got " + std::to_string(n));
}

/// Size of the intermediate image for resolution parameter N.
inline std::pair<int, int> degraded_size(int width, int height, int n) {
  check_resolution_param(n);
  return {std::max(1, width >> n), std::max(1, height >> n)};
}

/// Shrinks the image by 2^-N then resizes it to the 224 x 224 network input.
inline DepthImage degrade_resolution(const DepthImage& img, int n) {
  const auto [w, h] = degraded_size(img.width(), img.height(), n);
  return bilinear_resize(box_downscale(img, w, h), kNetworkInputSize, kNetworkInputSize);
}

}  // namespace softbubble::classify
