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

#ifndef DPREID_ATTRIBUTE_HPP
#define DPREID_ATTRIBUTE_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dpreid/dataset.hpp"
#include "dpreid/embedding.hpp"

namespace dpreid {

enum class AttrTask { gender, age_group, ethnicity };

std::string to_string(AttrTask task);
AttrTask parse_attr_task(const std::string& name);

/// Label of an attribute record for a given task.
int attr_label(const AttributeRecord& record, AttrTask task);

/// Number of classes a task has under a manifest's declared cardinalities.
int attr_classes(const DatasetManifest& manifest, AttrTask task);

/// Softmax linear classifier over the same histogram features the
/// re-identification embedder consumes.
struct AttributeClassifier {
  FeatureConfig feature_config;
  int classes = 2;
  std::string task;
  std::vector<double> weights;  // row-major classes x F
  std::vector<double> bias;     // classes

  std::vector<double> logits(std::span<const double> features) const;
  /// Argmax prediction; ties break toward the lowest class index.
  int predict(std::span<const double> features) const;
};

/// Mean softmax cross-entropy over a labelled feature set, with gradients
/// in the same layout as the classifier parameters.
struct AttrLossGrad {
  double loss = 0.0;
  std::vector<double> d_weights;
  std::vector<double> d_bias;
};

AttrLossGrad attr_loss_and_grad(const AttributeClassifier& clf,
                                const std::vector<std::vector<double>>& features,
                                const std::vector<int>& labels);

struct AttrTrainConfig {
  int epochs = 150;
  double learning_rate = 4.0;
  /// L2 penalty on the weight matrix (bias excluded), applied per step.
  double weight_decay = 1e-3;
  std::uint64_t seed = 1;
};

struct AttrTrainResult {
  AttributeClassifier classifier;
  std::vector<double> epoch_loss;
};

/// Full-batch gradient descent on the mean cross-entropy; deterministic
/// given the seed. Throws on degenerate single-class input.
AttrTrainResult train_classifier_on_features(
    const std::vector<std::vector<double>>& features,
    const std::vector<int>& labels, int classes, FeatureConfig feature_config,
    const std::string& task_name, const AttrTrainConfig& config);

/// Fraction of argmax-correct predictions, as a percentage.
double accuracy(const AttributeClassifier& clf,
                const std::vector<std::vector<double>>& features,
                const std::vector<int>& labels);

enum class ChanceKind { uniform, majority };

/// Uninformed-predictor accuracy in percent: 100/C, or the majority class
/// frequency.
double chance_level(const std::vector<int>& labels, int classes,
                    ChanceKind kind);

/// One row of the attribute report.
struct AttrRow {
  std::string task;
  std::string epsilon;
  int b = 1;
  int c = 1;
  double accuracy_pct = 0.0;
  double chance_uniform_pct = 0.0;
  double chance_majority_pct = 0.0;
};

/// CSV with header `task,epsilon,b,c,accuracy,chance_uniform,chance_majority`.
void write_attr_csv(const std::vector<AttrRow>& rows, const std::string& path);

/// Fixed-width accuracy table for one (b, c) with one column per task and
/// chance rows at the bottom.
std::string render_attr_table(const std::vector<AttrRow>& rows, int b, int c,
                              double delta_f, double strict_delta_f);

}  // namespace dpreid

#endif  // DPREID_ATTRIBUTE_HPP
