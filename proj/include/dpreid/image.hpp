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

#ifndef DPREID_IMAGE_HPP
#define DPREID_IMAGE_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dpreid {

/// Fixed-size 8-bit RGB raster. Pixels are stored row-major as (R,G,B)
/// triplets; data length is always width*height*3.
class ImageRGB {
 public:
  ImageRGB(int width, int height, std::vector<std::uint8_t> data);

  /// Image of the given size with every pixel set to (r,g,b).
  static ImageRGB filled(int width, int height, std::uint8_t r,
                         std::uint8_t g, std::uint8_t b);

  int width() const { return width_; }
  int height() const { return height_; }

  std::uint8_t at(int x, int y, int channel) const {
    return data_[index(x, y, channel)];
  }
  void set(int x, int y, int channel, std::uint8_t value) {
    data_[index(x, y, channel)] = value;
  }

  const std::vector<std::uint8_t>& data() const { return data_; }

  bool operator==(const ImageRGB&) const = default;

 private:
  std::size_t index(int x, int y, int channel) const {
    return (static_cast<std::size_t>(y) * width_ + x) * 3 + channel;
  }

  int width_;
  int height_;
  std::vector<std::uint8_t> data_;
};

/// Real-valued counterpart of ImageRGB used for intermediate arithmetic
/// (block means, quantisation, additive noise) before the final clamp.
/// Channel values are unrestricted.
class ImageF64 {
 public:
  ImageF64(int width, int height, std::vector<double> data);

  static ImageF64 zero(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }

  double at(int x, int y, int channel) const {
    return data_[index(x, y, channel)];
  }
  void set(int x, int y, int channel, double value) {
    data_[index(x, y, channel)] = value;
  }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool operator==(const ImageF64&) const = default;

 private:
  std::size_t index(int x, int y, int channel) const {
    return (static_cast<std::size_t>(y) * width_ + x) * 3 + channel;
  }

  int width_;
  int height_;
  std::vector<double> data_;
};

/// Parses a binary PPM (P6, maxval 255). Whitespace runs and '#' comments
/// are accepted in the header; the payload must contain exactly
/// width*height*3 bytes. Malformed headers, maxval != 255, truncated
/// payloads and trailing bytes are reported as distinct errors.
ImageRGB load_ppm(std::span<const std::uint8_t> bytes);

/// Canonical P6 encoding: "P6\n<w> <h>\n255\n" followed by the raw payload.
/// load_ppm(save_ppm(img)) == img for every image, and save_ppm(load_ppm(f))
/// canonicalises any valid file f.
std::vector<std::uint8_t> save_ppm(const ImageRGB& img);

ImageRGB load_ppm_file(const std::string& path);
void save_ppm_file(const ImageRGB& img, const std::string& path);

/// Exact widening to the float domain.
ImageF64 to_float(const ImageRGB& img);

/// Clamps every channel to [0,255] and rounds half away from zero.
/// Infinite values clamp to the nearest bound; NaN is rejected.
ImageRGB clamp_round(const ImageF64& img);

}  // namespace dpreid

#endif  // DPREID_IMAGE_HPP
