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

#include "dpreid/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace dpreid {

namespace {

constexpr std::size_t kMaxPixels = std::size_t{1} << 28;  // 256 Mpx guard

void check_dims(int width, int height) {
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("image: width and height must be positive");
  }
  if (static_cast<std::size_t>(width) * static_cast<std::size_t>(height) >
      kMaxPixels) {
    throw std::invalid_argument("image: dimensions too large");
  }
}

}  // namespace

ImageRGB::ImageRGB(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_dims(width, height);
  const std::size_t expected =
      static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3;
  if (data_.size() != expected) {
    throw std::invalid_argument("image: data length must be width*height*3");
  }
}

ImageRGB ImageRGB::filled(int width, int height, std::uint8_t r,
                          std::uint8_t g, std::uint8_t b) {
  check_dims(width, height);
  std::vector<std::uint8_t> data;
  data.reserve(static_cast<std::size_t>(width) * height * 3);
  for (std::size_t i = 0; i < static_cast<std::size_t>(width) * height; ++i) {
    data.push_back(r);
    data.push_back(g);
    data.push_back(b);
  }
  return ImageRGB(width, height, std::move(data));
}

ImageF64::ImageF64(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_dims(width, height);
  const std::size_t expected =
      static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3;
  if (data_.size() != expected) {
    throw std::invalid_argument("image: data length must be width*height*3");
  }
}

ImageF64 ImageF64::zero(int width, int height) {
  check_dims(width, height);
  return ImageF64(width, height,
                  std::vector<double>(
                      static_cast<std::size_t>(width) * height * 3, 0.0));
}

namespace {

// PPM header scanner: skips whitespace runs and '#' comments.
struct Cursor {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;

  bool eof() const { return pos >= bytes.size(); }

  void skip_space_and_comments() {
    while (!eof()) {
      const char ch = static_cast<char>(bytes[pos]);
      if (ch == '#') {
        while (!eof() && static_cast<char>(bytes[pos]) != '\n') ++pos;
      } else if (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n') {
        ++pos;
      } else {
        break;
      }
    }
  }

  // Reads a non-negative decimal integer; -1 on malformed input.
  long read_int() {
    skip_space_and_comments();
    if (eof() || !std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      return -1;
    }
    long value = 0;
    while (!eof() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      value = value * 10 + (bytes[pos] - '0');
      if (value > std::numeric_limits<int>::max()) return -1;
      ++pos;
    }
    return value;
  }
};

}  // namespace

ImageRGB load_ppm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    throw std::runtime_error("ppm: malformed header (missing P6 magic)");
  }
  Cursor cur{bytes, 2};
  const long width = cur.read_int();
  const long height = cur.read_int();
  const long maxval = cur.read_int();
  if (width <= 0 || height <= 0) {
    throw std::runtime_error("ppm: malformed header (bad dimensions)");
  }
  if (maxval < 0) {
    throw std::runtime_error("ppm: malformed header (bad maxval)");
  }
  if (maxval != 255) {
    throw std::runtime_error("ppm: unsupported maxval (must be 255)");
  }
  // Exactly one whitespace byte separates the header from the payload.
  if (cur.eof() || !std::isspace(static_cast<unsigned char>(bytes[cur.pos]))) {
    throw std::runtime_error("ppm: malformed header (missing separator)");
  }
  ++cur.pos;
  const std::size_t expected =
      static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3;
  const std::size_t available = bytes.size() - cur.pos;
  if (available < expected) {
    throw std::runtime_error("ppm: truncated pixel payload");
  }
  if (available > expected) {
    throw std::runtime_error("ppm: trailing data after pixel payload");
  }
  std::vector<std::uint8_t> data(bytes.begin() + cur.pos, bytes.end());
  return ImageRGB(static_cast<int>(width), static_cast<int>(height),
                  std::move(data));
}

std::vector<std::uint8_t> save_ppm(const ImageRGB& img) {
  char header[64];
  const int n = std::snprintf(header, sizeof(header), "P6\n%d %d\n255\n",
                              img.width(), img.height());
  std::vector<std::uint8_t> out;
  out.reserve(static_cast<std::size_t>(n) + img.data().size());
  out.insert(out.end(), header, header + n);
  out.insert(out.end(), img.data().begin(), img.data().end());
  return out;
}

ImageRGB load_ppm_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("ppm: cannot open file: " + path);
  }
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return load_ppm(bytes);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(std::string(e.what()) + " in " + path);
  }
}

void save_ppm_file(const ImageRGB& img, const std::string& path) {
  const auto bytes = save_ppm(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("ppm: cannot open file for writing: " + path);
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw std::runtime_error("ppm: write failed: " + path);
  }
}

ImageF64 to_float(const ImageRGB& img) {
  std::vector<double> data(img.data().begin(), img.data().end());
  return ImageF64(img.width(), img.height(), std::move(data));
}

ImageRGB clamp_round(const ImageF64& img) {
  std::vector<std::uint8_t> data;
  data.reserve(img.data().size());
  for (const double v : img.data()) {
    if (std::isnan(v)) {
      throw std::invalid_argument("clamp_round: NaN channel value");
    }
    const double clamped = std::clamp(v, 0.0, 255.0);
    // std::round rounds half away from zero.
    data.push_back(static_cast<std::uint8_t>(std::round(clamped)));
  }
  return ImageRGB(img.width(), img.height(), std::move(data));
}

}  // namespace dpreid
