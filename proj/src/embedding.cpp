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

#include "dpreid/embedding.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dpreid/rng.hpp"

namespace dpreid {

void FeatureConfig::validate() const {
  if (grid < 1) {
    throw std::invalid_argument("features: grid must be >= 1");
  }
  if (bins < 2 || 256 % bins != 0) {
    throw std::invalid_argument("features: bins must be >= 2 and divide 256");
  }
}

std::vector<double> hist_features(const ImageRGB& img,
                                  const FeatureConfig& config) {
  config.validate();
  const int g = config.grid;
  if (g > std::min(img.width(), img.height())) {
    throw std::invalid_argument("features: grid exceeds image dimensions");
  }
  const int bins = config.bins;
  const int bin_width = 256 / bins;
  std::vector<double> features(static_cast<std::size_t>(config.dim()), 0.0);

  const int w = img.width();
  const int h = img.height();
  std::size_t offset = 0;
  for (int by = 0; by < g; ++by) {
    const int y0 = by * h / g;
    const int y1 = (by + 1) * h / g;
    for (int bx = 0; bx < g; ++bx) {
      const int x0 = bx * w / g;
      const int x1 = (bx + 1) * w / g;
      const double count = static_cast<double>(y1 - y0) * (x1 - x0);
      for (int ch = 0; ch < 3; ++ch) {
        for (int y = y0; y < y1; ++y) {
          for (int x = x0; x < x1; ++x) {
            const int bin = img.at(x, y, ch) / bin_width;
            features[offset + bin] += 1.0;
          }
        }
        for (int bin = 0; bin < bins; ++bin) {
          features[offset + bin] /= count;
        }
        offset += bins;
      }
    }
  }
  return features;
}

LinearEmbedder::LinearEmbedder(FeatureConfig feature_config, int embed_dim,
                               std::vector<double> weights)
    : feature_config_(feature_config),
      embed_dim_(embed_dim),
      weights_(std::move(weights)) {
  feature_config_.validate();
  if (embed_dim_ < 1) {
    throw std::invalid_argument("embedder: embed_dim must be >= 1");
  }
  const std::size_t expected = static_cast<std::size_t>(embed_dim_) *
                               static_cast<std::size_t>(feature_config_.dim());
  if (weights_.size() != expected) {
    throw std::invalid_argument("embedder: weight matrix size mismatch");
  }
}

LinearEmbedder LinearEmbedder::random_init(FeatureConfig feature_config,
                                           int embed_dim,
                                           std::uint64_t seed) {
  feature_config.validate();
  const int feature_dim = feature_config.dim();
  Rng rng(seed);
  std::vector<double> weights(static_cast<std::size_t>(embed_dim) *
                              feature_dim);
  const double stddev = 1.0 / std::sqrt(static_cast<double>(feature_dim));
  for (double& w : weights) w = rng.normal(0.0, stddev);
  return LinearEmbedder(feature_config, embed_dim, std::move(weights));
}

std::vector<double> LinearEmbedder::embed_features(
    std::span<const double> features) const {
  const std::size_t feature_dim =
      static_cast<std::size_t>(feature_config_.dim());
  if (features.size() != feature_dim) {
    throw std::invalid_argument("embedder: feature dimension mismatch");
  }
  std::vector<double> out(static_cast<std::size_t>(embed_dim_), 0.0);
  for (int d = 0; d < embed_dim_; ++d) {
    const double* row = weights_.data() + static_cast<std::size_t>(d) *
                                              feature_dim;
    double sum = 0.0;
    for (std::size_t f = 0; f < feature_dim; ++f) {
      sum += row[f] * features[f];
    }
    out[static_cast<std::size_t>(d)] = sum;
  }
  return out;
}

std::vector<double> LinearEmbedder::embed(const ImageRGB& img) const {
  return embed_features(hist_features(img, feature_config_));
}

std::vector<double> embed_gradient(std::span<const double> upstream,
                                   std::span<const double> features) {
  std::vector<double> grad(upstream.size() * features.size());
  std::size_t idx = 0;
  for (const double u : upstream) {
    for (const double f : features) {
      grad[idx++] = u * f;
    }
  }
  return grad;
}

namespace {
constexpr const char* kCheckpointMagic = "dpreid-embedder v1";
}

void save_embedder(const LinearEmbedder& embedder, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw std::runtime_error("checkpoint: cannot open for writing: " + path);
  }
  out << kCheckpointMagic << '\n';
  out << embedder.feature_config().grid << ' ' << embedder.feature_config().bins
      << ' ' << embedder.embed_dim() << ' ' << embedder.feature_dim() << '\n';
  char buf[32];
  const auto& weights = embedder.weights();
  const std::size_t feature_dim =
      static_cast<std::size_t>(embedder.feature_dim());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", weights[i]);
    out << buf;
    out << (((i + 1) % feature_dim == 0) ? '\n' : ',');
  }
  if (!out) {
    throw std::runtime_error("checkpoint: write failed: " + path);
  }
}

LinearEmbedder load_embedder(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("checkpoint: cannot open: " + path);
  }
  std::string magic;
  std::getline(in, magic);
  if (magic != kCheckpointMagic) {
    throw std::runtime_error("checkpoint: unrecognised header in " + path);
  }
  FeatureConfig config;
  int embed_dim = 0;
  int feature_dim = 0;
  in >> config.grid >> config.bins >> embed_dim >> feature_dim;
  if (!in || feature_dim != config.dim()) {
    throw std::runtime_error("checkpoint: inconsistent dimensions in " + path);
  }
  in.ignore();  // newline after the header
  std::vector<double> weights;
  weights.reserve(static_cast<std::size_t>(embed_dim) * feature_dim);
  std::string token;
  while (weights.size() <
         static_cast<std::size_t>(embed_dim) * feature_dim) {
    if (!std::getline(in, token, (weights.size() + 1) %
                                     static_cast<std::size_t>(feature_dim) ==
                                         0
                                 ? '\n'
                                 : ',')) {
      throw std::runtime_error("checkpoint: truncated weights in " + path);
    }
    weights.push_back(std::stod(token));
  }
  return LinearEmbedder(config, embed_dim, std::move(weights));
}

}  // namespace dpreid
