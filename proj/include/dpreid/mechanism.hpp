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

#ifndef DPREID_MECHANISM_HPP
#define DPREID_MECHANISM_HPP

#include <optional>

#include "dpreid/image.hpp"
#include "dpreid/rng.hpp"

namespace dpreid {

/// Parameters of the image obfuscation mechanism: privacy budget epsilon
/// (absent = noise disabled, dimensionality reduction only), pixelisation
/// block side b and colour quantisation bin width c.
struct PrivacyParams {
  std::optional<double> epsilon;  // nullopt: noising step skipped
  int block_side = 1;             // b, pixels
  int bin_width = 1;              // c, intensity units; must divide 256

  // Scale the Laplace noise with the worst-case L1 sensitivity instead of
  // the default calibration constant (see Sensitivity).
  bool strict_scale = false;
  // Represent each quantisation bin by its midpoint k*c + c/2 instead of
  // the bin floor k*c.
  bool midpoint_quantise = false;

  bool noise_enabled() const { return epsilon.has_value(); }

  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;
};

/// Noise calibration constants for a fixed image size and (b, c).
///
/// delta_f is the default calibration (w*h/b^2) * (256/c - 1)^3. It is what
/// the mechanism scales its noise with, but it does not upper-bound the
/// worst-case L1 distance between two quantised pixelised images.
/// strict_delta_f = ceil(w/b)*ceil(h/b) * 3 * (256 - c) is that worst-case
/// bound; both are reported everywhere and PrivacyParams::strict_scale
/// switches the noise scale to strict_delta_f / epsilon.
struct Sensitivity {
  double delta_f = 0.0;
  double strict_delta_f = 0.0;
};

/// Computes both calibration constants for a w x h image.
/// Requires b <= min(w, h) and c dividing 256.
Sensitivity sensitivity(int width, int height, int block_side, int bin_width);

/// Laplace scale used by the mechanism for the given parameters.
/// Throws if noise is disabled or the resulting scale is not positive.
double noise_scale(const Sensitivity& sens, const PrivacyParams& params);

/// Replaces every b x b cell by its per-channel mean. Ragged cells at the
/// right/bottom edges average over their actual pixel count. Dimensions are
/// unchanged.
ImageF64 pixelise(const ImageF64& img, int block_side);

/// Snaps every channel value to its quantisation bin: floor(v/c)*c, or the
/// bin midpoint when midpoint is set. Values are clamped to [0,255] first,
/// so the largest representative is 256-c (256/c levels per channel).
ImageF64 quantise(const ImageF64& img, int bin_width, bool midpoint = false);

/// Per-cell representation of an image under (b, c): a ceil(w/b) x ceil(h/b)
/// grid holding each cell's quantised per-channel mean. This is the value
/// the Laplace noise is added to, one draw per cell per channel.
ImageF64 cell_representation(const ImageRGB& img, const PrivacyParams& params);

/// Inverse-CDF transform of a uniform u in (-1/2, 1/2) to Laplace(0, scale):
/// -scale * sign(u) * ln(1 - 2|u|).
double laplace_from_uniform(double scale, double u);

/// One draw from Laplace(0, scale); deterministic given the generator state.
double laplace_sample(double scale, Rng& rng);

/// Full obfuscation pipeline: to_float -> pixelise(b) -> quantise(c) ->
/// one independent Laplace draw per cell per channel (replicated across the
/// cell's pixels) -> clamp_round. With noise disabled the noising step is
/// skipped. Draw order is cell row-major, channels R,G,B within a cell.
ImageRGB obfuscate(const ImageRGB& img, const PrivacyParams& params, Rng& rng);

/// Supremum over outputs of the log density ratio of the independent-Laplace
/// mechanism applied to cell representations u and v: ||u - v||_1 / scale.
/// Analytic, no sampling. Throws on dimension mismatch.
double dp_log_ratio_bound(const ImageF64& u, const ImageF64& v, double scale);

}  // namespace dpreid

#endif  // DPREID_MECHANISM_HPP
