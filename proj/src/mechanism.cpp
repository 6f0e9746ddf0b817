// Copyright 2026 The dpreid Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dpreid/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dpreid {

void PrivacyParams::validate() const {
  if (epsilon.has_value() &&
      (!std::isfinite(*epsilon) || *epsilon <= 0.0)) {
    throw std::invalid_argument("privacy params: epsilon must be positive");
  }
  if (block_side < 1) {
    throw std::invalid_argument("privacy params: b must be >= 1");
  }
  if (bin_width < 1 || 256 % bin_width != 0) {
    throw std::invalid_argument("privacy params: c must divide 256");
  }
}

Sensitivity sensitivity(int width, int height, int block_side,
                        int bin_width) {
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("sensitivity: dimensions must be positive");
  }
  if (block_side < 1 || block_side > std::min(width, height)) {
    throw std::invalid_argument(
        "sensitivity: b must satisfy 1 <= b <= min(w, h)");
  }
  if (bin_width < 1 || 256 % bin_width != 0) {
    throw std::invalid_argument("sensitivity: c must divide 256");
  }
  const double cells_exact =
      static_cast<double>(width) * height /
      (static_cast<double>(block_side) * block_side);
  const double span = 256.0 / bin_width - 1.0;  // per-channel level span
  const double cells_ceil =
      static_cast<double>((width + block_side - 1) / block_side) *
      static_cast<double>((height + block_side - 1) / block_side);
  Sensitivity s;
  s.delta_f = cells_exact * span * span * span;
  s.strict_delta_f = cells_ceil * 3.0 * (256.0 - bin_width);
  return s;
}

double noise_scale(const Sensitivity& sens, const PrivacyParams& params) {
  if (!params.noise_enabled()) {
    throw std::invalid_argument("noise scale: noise is disabled");
  }
  const double delta =
      params.strict_scale ? sens.strict_delta_f : sens.delta_f;
  const double scale = delta / *params.epsilon;
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw std::invalid_argument("noise scale: scale must be positive");
  }
  return scale;
}

ImageF64 pixelise(const ImageF64& img, int block_side) {
  if (block_side < 1) {
    throw std::invalid_argument("pixelise: b must be >= 1");
  }
  const int w = img.width();
  const int h = img.height();
  ImageF64 out = ImageF64::zero(w, h);
  for (int y0 = 0; y0 < h; y0 += block_side) {
    const int y1 = std::min(y0 + block_side, h);
    for (int x0 = 0; x0 < w; x0 += block_side) {
      const int x1 = std::min(x0 + block_side, w);
      const double count = static_cast<double>(y1 - y0) * (x1 - x0);
      for (int ch = 0; ch < 3; ++ch) {
        double sum = 0.0;
        for (int y = y0; y < y1; ++y) {
          for (int x = x0; x < x1; ++x) {
            sum += img.at(x, y, ch);
          }
        }
        const double mean = sum / count;
        for (int y = y0; y < y1; ++y) {
          for (int x = x0; x < x1; ++x) {
            out.set(x, y, ch, mean);
          }
        }
      }
    }
  }
  return out;
}

namespace {

double quantise_value(double v, int bin_width, bool midpoint) {
  const double clamped = std::clamp(v, 0.0, 255.0);
  const double floor_rep =
      std::floor(clamped / bin_width) * static_cast<double>(bin_width);
  return midpoint ? floor_rep + bin_width / 2.0 : floor_rep;
}

}  // namespace

ImageF64 quantise(const ImageF64& img, int bin_width, bool midpoint) {
  if (bin_width < 1 || 256 % bin_width != 0) {
    throw std::invalid_argument("quantise: c must divide 256");
  }
  std::vector<double> data;
  data.reserve(img.data().size());
  for (const double v : img.data()) {
    if (std::isnan(v)) {
      throw std::invalid_argument("quantise: NaN channel value");
    }
    data.push_back(quantise_value(v, bin_width, midpoint));
  }
  return ImageF64(img.width(), img.height(), std::move(data));
}

ImageF64 cell_representation(const ImageRGB& img,
                             const PrivacyParams& params) {
  params.validate();
  const int b = params.block_side;
  const int w = img.width();
  const int h = img.height();
  const int cw = (w + b - 1) / b;
  const int ch_count = (h + b - 1) / b;
  ImageF64 cells = ImageF64::zero(cw, ch_count);
  for (int cy = 0; cy < ch_count; ++cy) {
    const int y0 = cy * b;
    const int y1 = std::min(y0 + b, h);
    for (int cx = 0; cx < cw; ++cx) {
      const int x0 = cx * b;
      const int x1 = std::min(x0 + b, w);
      const double count = static_cast<double>(y1 - y0) * (x1 - x0);
      for (int ch = 0; ch < 3; ++ch) {
        double sum = 0.0;
        for (int y = y0; y < y1; ++y) {
          for (int x = x0; x < x1; ++x) {
            sum += img.at(x, y, ch);
          }
        }
        cells.set(cx, cy, ch,
                  quantise_value(sum / count, params.bin_width,
                                 params.midpoint_quantise));
      }
    }
  }
  return cells;
}

double laplace_from_uniform(double scale, double u) {
  if (!(scale > 0.0)) {
    throw std::invalid_argument("laplace: scale must be positive");
  }
  if (!(u > -0.5) || !(u < 0.5)) {
    throw std::invalid_argument("laplace: u must lie in (-1/2, 1/2)");
  }
  const double sign = (u > 0.0) ? 1.0 : (u < 0.0 ? -1.0 : 0.0);
  return -scale * sign * std::log1p(-2.0 * std::abs(u));
}

double laplace_sample(double scale, Rng& rng) {
  return laplace_from_uniform(scale, rng.uniform_unit() - 0.5);
}

ImageRGB obfuscate(const ImageRGB& img, const PrivacyParams& params,
                   Rng& rng) {
  params.validate();
  const int b = params.block_side;
  if (b > std::min(img.width(), img.height())) {
    throw std::invalid_argument(
        "obfuscate: b must satisfy b <= min(w, h)");
  }

  ImageF64 cells = cell_representation(img, params);
  if (params.noise_enabled()) {
    const Sensitivity sens =
        sensitivity(img.width(), img.height(), b, params.bin_width);
    const double scale = noise_scale(sens, params);
    for (double& v : cells.data()) {
      v += laplace_sample(scale, rng);
    }
  }

  // Replicate each cell value across the cell's pixels.
  ImageF64 full = ImageF64::zero(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    const int cy = y / b;
    for (int x = 0; x < img.width(); ++x) {
      const int cx = x / b;
      for (int ch = 0; ch < 3; ++ch) {
        full.set(x, y, ch, cells.at(cx, cy, ch));
      }
    }
  }
  return clamp_round(full);
}

double dp_log_ratio_bound(const ImageF64& u, const ImageF64& v,
                          double scale) {
  if (u.width() != v.width() || u.height() != v.height()) {
    throw std::invalid_argument("dp_log_ratio_bound: dimension mismatch");
  }
  if (!(scale > 0.0)) {
    throw std::invalid_argument("dp_log_ratio_bound: scale must be positive");
  }
  double l1 = 0.0;
  for (std::size_t i = 0; i < u.data().size(); ++i) {
    l1 += std::abs(u.data()[i] - v.data()[i]);
  }
  return l1 / scale;
}

}  // namespace dpreid
