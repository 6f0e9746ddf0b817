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

#ifndef DPREID_CTL_HPP
#define DPREID_CTL_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dpreid/dataset.hpp"
#include "dpreid/embedding.hpp"

namespace dpreid {

/// Per-class mean embedding, recomputable from its support.
struct Centroid {
  std::vector<double> values;
  int class_id = -1;
  int support_count = 0;
};

/// Componentwise mean of a non-empty set of embeddings.
Centroid centroid(const std::vector<std::vector<double>>& embeddings,
                  int class_id = -1);

/// Hinge triplet loss on squared Euclidean distances:
/// [ ||a - c_P||^2 - ||a - c_N||^2 + margin ]_+
double ctl_loss(std::span<const double> anchor, std::span<const double> c_pos,
                std::span<const double> c_neg, double margin);

/// Gradients of ctl_loss with respect to the anchor and both centroids.
/// All blocks are zero when the hinge is inactive. Gradients reach a
/// centroid's support embeddings as d_centroid / support_count.
struct CtlGradients {
  bool active = false;
  std::vector<double> d_anchor;
  std::vector<double> d_centroid_pos;
  std::vector<double> d_centroid_neg;
};

CtlGradients ctl_gradients(std::span<const double> anchor,
                           std::span<const double> c_pos,
                           std::span<const double> c_neg, double margin);

/// One training batch: P classes with K sample indices each. Indices refer
/// to whatever sample container the caller provided to sample_batches.
struct BatchClass {
  int class_id = 0;
  std::vector<int> sample_indices;  // K entries, duplicates allowed
};
using Batch = std::vector<BatchClass>;

/// Class-balanced batch plan for one epoch: every class appears at least
/// once, each batch holds exactly P classes with K instances each (classes
/// with fewer than K samples are drawn with replacement). Deterministic
/// given the seed. Throws when fewer than P classes are available.
std::vector<Batch> sample_batches(
    const std::vector<std::pair<int, std::vector<int>>>& class_samples,
    int classes_per_batch, int instances_per_class, std::uint64_t seed);

struct CtlConfig {
  double margin = 0.3;
  int classes_per_batch = 8;   // P
  int instances_per_class = 4; // K
  double learning_rate = 0.5;
  int epochs = 30;
  std::uint64_t seed = 1;
  // Pick the in-batch negative centroid uniformly instead of the nearest.
  bool random_negative = false;
  // Stddev of Gaussian noise added to input features during training
  // (regularisation; 0 disables).
  double feature_jitter = 0.02;

  void validate() const;
};

struct TrainResult {
  LinearEmbedder embedder;
  std::vector<double> epoch_loss;  // mean anchor loss per epoch
};

/// Gradient descent on the mean batch triplet loss over precomputed
/// features. features[i] is the F-dim feature vector of sample i with class
/// labels[i]. The positive centroid of an anchor is the mean of its class
/// batch-mates excluding the anchor; the negative centroid is the hardest
/// (nearest) other-class batch centroid unless random_negative is set.
/// Aborts with a diagnostic if the loss turns non-finite.
TrainResult train_embedder_on_features(
    const std::vector<std::vector<double>>& features,
    const std::vector<int>& labels, const LinearEmbedder& init,
    const CtlConfig& config);

/// File-backed wrapper: extracts features for every train-split person
/// record of the manifest and trains from a seeded random init.
TrainResult train_embedder(const DatasetManifest& manifest,
                           const FeatureConfig& feature_config, int embed_dim,
                           const CtlConfig& config);

/// Loss trace CSV with header `epoch,mean_loss`.
void save_loss_trace(const std::vector<double>& epoch_loss,
                     const std::string& path);

}  // namespace dpreid

#endif  // DPREID_CTL_HPP
