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

#ifndef DPREID_EMBEDDING_HPP
#define DPREID_EMBEDDING_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dpreid/image.hpp"

namespace dpreid {

/// Spatial-histogram feature layout: the image is cut into grid x grid
/// blocks and each block contributes one bins-wide normalised intensity
/// histogram per channel. Feature dimension is grid*grid*3*bins.
struct FeatureConfig {
  int grid = 4;  // blocks per side
  int bins = 8;  // histogram bins per channel; must divide 256

  int dim() const { return grid * grid * 3 * bins; }
  void validate() const;

  bool operator==(const FeatureConfig&) const = default;
};

/// Blockwise colour histograms, concatenated row-major over blocks and
/// R,G,B within a block. Each (block, channel) histogram sums to 1.
/// Requires grid <= min(w, h).
std::vector<double> hist_features(const ImageRGB& img,
                                  const FeatureConfig& config);

/// Trainable linear map from feature space to a D-dimensional embedding.
/// No nonlinearity and no normalisation; distances downstream are plain
/// squared Euclidean.
class LinearEmbedder {
 public:
  LinearEmbedder(FeatureConfig feature_config, int embed_dim,
                 std::vector<double> weights);

  /// Seeded Gaussian init with standard deviation 1/sqrt(F).
  static LinearEmbedder random_init(FeatureConfig feature_config,
                                    int embed_dim, std::uint64_t seed);

  const FeatureConfig& feature_config() const { return feature_config_; }
  int embed_dim() const { return embed_dim_; }
  int feature_dim() const { return feature_config_.dim(); }

  /// Row-major embed_dim x feature_dim weights.
  const std::vector<double>& weights() const { return weights_; }
  std::vector<double>& weights() { return weights_; }

  std::vector<double> embed_features(std::span<const double> features) const;
  std::vector<double> embed(const ImageRGB& img) const;

  bool operator==(const LinearEmbedder&) const = default;

 private:
  FeatureConfig feature_config_;
  int embed_dim_;
  std::vector<double> weights_;
};

/// Gradient of <upstream, W f> with respect to W: the outer product
/// upstream x features, row-major D x F.
std::vector<double> embed_gradient(std::span<const double> upstream,
                                   std::span<const double> features);

/// Versioned checkpoint: a small text header (g, B, D, F) followed by the
/// weight matrix, round-trippable bit-exactly.
void save_embedder(const LinearEmbedder& embedder, const std::string& path);
LinearEmbedder load_embedder(const std::string& path);

}  // namespace dpreid

#endif  // DPREID_EMBEDDING_HPP
