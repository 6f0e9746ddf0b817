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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>
#include <vector>

#include "dpreid/embedding.hpp"
#include "dpreid/image.hpp"
#include "dpreid/mechanism.hpp"
#include "dpreid/retrieval.hpp"
#include "dpreid/rng.hpp"

namespace py = pybind11;

namespace {

using ByteArray =
    py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using FloatArray =
    py::array_t<double, py::array::c_style | py::array::forcecast>;

dpreid::ImageRGB to_image(const ByteArray& arr) {
  if (arr.ndim() != 3 || arr.shape(2) != 3) {
    throw std::invalid_argument("expected an (h, w, 3) uint8 array");
  }
  const int h = static_cast<int>(arr.shape(0));
  const int w = static_cast<int>(arr.shape(1));
  std::vector<std::uint8_t> data(arr.data(), arr.data() + arr.size());
  return dpreid::ImageRGB(w, h, std::move(data));
}

dpreid::ImageF64 to_image_f64(const FloatArray& arr) {
  if (arr.ndim() != 3 || arr.shape(2) != 3) {
    throw std::invalid_argument("expected an (h, w, 3) float array");
  }
  const int h = static_cast<int>(arr.shape(0));
  const int w = static_cast<int>(arr.shape(1));
  std::vector<double> data(arr.data(), arr.data() + arr.size());
  return dpreid::ImageF64(w, h, std::move(data));
}

py::array_t<std::uint8_t> from_image(const dpreid::ImageRGB& img) {
  py::array_t<std::uint8_t> out({img.height(), img.width(), 3});
  std::copy(img.data().begin(), img.data().end(), out.mutable_data());
  return out;
}

py::array_t<double> from_image_f64(const dpreid::ImageF64& img) {
  py::array_t<double> out({img.height(), img.width(), 3});
  std::copy(img.data().begin(), img.data().end(), out.mutable_data());
  return out;
}

dpreid::PrivacyParams make_params(std::optional<double> epsilon, int b, int c,
                                  bool strict, bool midpoint) {
  dpreid::PrivacyParams params;
  params.epsilon = epsilon;
  params.block_side = b;
  params.bin_width = c;
  params.strict_scale = strict;
  params.midpoint_quantise = midpoint;
  params.validate();
  return params;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Differentially private image obfuscation: pixelisation, colour "
      "quantisation and calibrated Laplace noise, plus the feature and "
      "retrieval primitives of the evaluation harness.";

  m.def(
      "sensitivity",
      [](int width, int height, int b, int c) {
        const dpreid::Sensitivity s =
            dpreid::sensitivity(width, height, b, c);
        return py::make_tuple(s.delta_f, s.strict_delta_f);
      },
      py::arg("width"), py::arg("height"), py::arg("b"), py::arg("c"),
      "Noise calibration constants (delta_f, strict_delta_f) for a w x h "
      "image under block side b and bin width c.");

  m.def(
      "pixelise",
      [](const FloatArray& img, int b) {
        return from_image_f64(dpreid::pixelise(to_image_f64(img), b));
      },
      py::arg("img"), py::arg("b"),
      "Replace every b x b block by its per-channel mean.");

  m.def(
      "quantise",
      [](const FloatArray& img, int c, bool midpoint) {
        return from_image_f64(
            dpreid::quantise(to_image_f64(img), c, midpoint));
      },
      py::arg("img"), py::arg("c"), py::arg("midpoint") = false,
      "Snap channel values to quantisation bins of width c.");

  m.def(
      "obfuscate",
      [](const ByteArray& img, std::optional<double> epsilon, int b, int c,
         std::uint64_t seed, bool strict, bool midpoint) {
        dpreid::Rng rng(seed);
        return from_image(dpreid::obfuscate(
            to_image(img), make_params(epsilon, b, c, strict, midpoint),
            rng));
      },
      py::arg("img"), py::arg("epsilon"), py::arg("b") = 1, py::arg("c") = 1,
      py::arg("seed") = 1, py::arg("strict") = false,
      py::arg("midpoint") = false,
      "Full mechanism: pixelise, quantise, add per-cell Laplace noise "
      "(epsilon=None disables the noise), clamp and round.");

  m.def(
      "laplace_samples",
      [](double scale, std::uint64_t seed, std::size_t n) {
        dpreid::Rng rng(seed);
        py::array_t<double> out(static_cast<py::ssize_t>(n));
        double* data = out.mutable_data();
        for (std::size_t i = 0; i < n; ++i) {
          data[i] = dpreid::laplace_sample(scale, rng);
        }
        return out;
      },
      py::arg("scale"), py::arg("seed") = 1, py::arg("n") = 1,
      "n seeded draws from Laplace(0, scale).");

  m.def(
      "dp_log_ratio_bound",
      [](const FloatArray& u, const FloatArray& v, double scale) {
        return dpreid::dp_log_ratio_bound(to_image_f64(u), to_image_f64(v),
                                          scale);
      },
      py::arg("u"), py::arg("v"), py::arg("scale"),
      "Supremum of the log density ratio between the noised versions of two "
      "cell representations: ||u - v||_1 / scale.");

  m.def(
      "hist_features",
      [](const ByteArray& img, int grid, int bins) {
        dpreid::FeatureConfig config;
        config.grid = grid;
        config.bins = bins;
        const std::vector<double> f =
            dpreid::hist_features(to_image(img), config);
        py::array_t<double> out(static_cast<py::ssize_t>(f.size()));
        std::copy(f.begin(), f.end(), out.mutable_data());
        return out;
      },
      py::arg("img"), py::arg("grid") = 4, py::arg("bins") = 8,
      "Blockwise normalised colour histogram features.");

  m.def(
      "average_precision",
      [](const std::vector<bool>& ranked_relevance) {
        std::vector<char> flags(ranked_relevance.begin(),
                                ranked_relevance.end());
        return dpreid::average_precision(flags);
      },
      py::arg("ranked_relevance"),
      "Mean precision-at-k over the relevant ranks of one query.");

  m.def(
      "load_ppm",
      [](const py::bytes& blob) {
        const std::string_view view = blob;
        return from_image(dpreid::load_ppm(std::span<const std::uint8_t>(
            reinterpret_cast<const std::uint8_t*>(view.data()),
            view.size())));
      },
      py::arg("data"), "Decode a binary PPM (P6, maxval 255).");

  m.def(
      "save_ppm",
      [](const ByteArray& img) {
        const std::vector<std::uint8_t> bytes =
            dpreid::save_ppm(to_image(img));
        return py::bytes(reinterpret_cast<const char*>(bytes.data()),
                         bytes.size());
      },
      py::arg("img"), "Encode an (h, w, 3) uint8 array as canonical P6.");
}
