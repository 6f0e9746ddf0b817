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

#include "dpreid/attribute.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "dpreid/rng.hpp"

namespace dpreid {

std::string to_string(AttrTask task) {
  switch (task) {
    case AttrTask::gender: return "gender";
    case AttrTask::age_group: return "age_group";
    case AttrTask::ethnicity: return "ethnicity";
  }
  throw std::logic_error("unknown attribute task");
}

AttrTask parse_attr_task(const std::string& name) {
  if (name == "gender") return AttrTask::gender;
  if (name == "age_group") return AttrTask::age_group;
  if (name == "ethnicity") return AttrTask::ethnicity;
  throw std::runtime_error("attribute: unknown task: " + name);
}

int attr_label(const AttributeRecord& record, AttrTask task) {
  switch (task) {
    case AttrTask::gender: return record.gender;
    case AttrTask::age_group: return record.age_group;
    case AttrTask::ethnicity: return record.ethnicity;
  }
  throw std::logic_error("unknown attribute task");
}

int attr_classes(const DatasetManifest& manifest, AttrTask task) {
  switch (task) {
    case AttrTask::gender: return 2;
    case AttrTask::age_group: return manifest.age_groups;
    case AttrTask::ethnicity: return manifest.ethnic_groups;
  }
  throw std::logic_error("unknown attribute task");
}

std::vector<double> AttributeClassifier::logits(
    std::span<const double> features) const {
  const std::size_t feature_dim =
      static_cast<std::size_t>(feature_config.dim());
  if (features.size() != feature_dim) {
    throw std::invalid_argument("classifier: feature dimension mismatch");
  }
  std::vector<double> out(static_cast<std::size_t>(classes));
  for (int k = 0; k < classes; ++k) {
    const double* row =
        weights.data() + static_cast<std::size_t>(k) * feature_dim;
    double sum = bias[static_cast<std::size_t>(k)];
    for (std::size_t f = 0; f < feature_dim; ++f) sum += row[f] * features[f];
    out[static_cast<std::size_t>(k)] = sum;
  }
  return out;
}

int AttributeClassifier::predict(std::span<const double> features) const {
  const auto scores = logits(features);
  int best = 0;
  for (int k = 1; k < classes; ++k) {
    if (scores[static_cast<std::size_t>(k)] >
        scores[static_cast<std::size_t>(best)]) {
      best = k;
    }
  }
  return best;
}

AttrLossGrad attr_loss_and_grad(
    const AttributeClassifier& clf,
    const std::vector<std::vector<double>>& features,
    const std::vector<int>& labels) {
  if (features.size() != labels.size() || features.empty()) {
    throw std::invalid_argument("attribute: features/labels mismatch");
  }
  const std::size_t feature_dim =
      static_cast<std::size_t>(clf.feature_config.dim());
  const int classes = clf.classes;
  AttrLossGrad out;
  out.d_weights.assign(clf.weights.size(), 0.0);
  out.d_bias.assign(clf.bias.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(features.size());

  for (std::size_t i = 0; i < features.size(); ++i) {
    const int label = labels[i];
    if (label < 0 || label >= classes) {
      throw std::invalid_argument("attribute: label out of range");
    }
    auto scores = clf.logits(features[i]);
    const double max_score =
        *std::max_element(scores.begin(), scores.end());
    double z = 0.0;
    for (double& s : scores) {
      s = std::exp(s - max_score);
      z += s;
    }
    out.loss -= inv_n * std::log(scores[static_cast<std::size_t>(label)] / z);
    for (int k = 0; k < classes; ++k) {
      const double p = scores[static_cast<std::size_t>(k)] / z;
      const double g = inv_n * (p - (k == label ? 1.0 : 0.0));
      out.d_bias[static_cast<std::size_t>(k)] += g;
      double* row = out.d_weights.data() +
                    static_cast<std::size_t>(k) * feature_dim;
      const auto& f = features[i];
      for (std::size_t j = 0; j < feature_dim; ++j) row[j] += g * f[j];
    }
  }
  return out;
}

AttrTrainResult train_classifier_on_features(
    const std::vector<std::vector<double>>& features,
    const std::vector<int>& labels, int classes, FeatureConfig feature_config,
    const std::string& task_name, const AttrTrainConfig& config) {
  if (classes < 2) {
    throw std::invalid_argument("attribute: need at least 2 classes");
  }
  if (features.size() != labels.size() || features.empty()) {
    throw std::invalid_argument("attribute: features/labels mismatch");
  }
  if (std::set<int>(labels.begin(), labels.end()).size() < 2) {
    throw std::invalid_argument(
        "attribute: degenerate single-class training set");
  }
  if (config.epochs < 0 || !std::isfinite(config.learning_rate) ||
      !std::isfinite(config.weight_decay) || config.weight_decay < 0.0) {
    throw std::invalid_argument("attribute: bad training config");
  }

  AttrTrainResult result;
  result.classifier.feature_config = feature_config;
  result.classifier.classes = classes;
  result.classifier.task = task_name;
  const std::size_t feature_dim =
      static_cast<std::size_t>(feature_config.dim());
  Rng rng(derive_seed(config.seed, {0xa77c}));
  result.classifier.weights.resize(static_cast<std::size_t>(classes) *
                                   feature_dim);
  const double stddev = 1.0 / std::sqrt(static_cast<double>(feature_dim));
  for (double& w : result.classifier.weights) w = rng.normal(0.0, stddev);
  result.classifier.bias.assign(static_cast<std::size_t>(classes), 0.0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    AttrLossGrad lg =
        attr_loss_and_grad(result.classifier, features, labels);
    if (!std::isfinite(lg.loss)) {
      throw std::runtime_error("attribute: loss diverged at epoch " +
                               std::to_string(epoch));
    }
    result.epoch_loss.push_back(lg.loss);
    for (std::size_t i = 0; i < result.classifier.weights.size(); ++i) {
      result.classifier.weights[i] -=
          config.learning_rate *
          (lg.d_weights[i] + config.weight_decay * result.classifier.weights[i]);
    }
    for (std::size_t i = 0; i < result.classifier.bias.size(); ++i) {
      result.classifier.bias[i] -= config.learning_rate * lg.d_bias[i];
    }
  }
  return result;
}

double accuracy(const AttributeClassifier& clf,
                const std::vector<std::vector<double>>& features,
                const std::vector<int>& labels) {
  if (features.size() != labels.size() || features.empty()) {
    throw std::invalid_argument("accuracy: empty evaluation set");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (clf.predict(features[i]) == labels[i]) ++correct;
  }
  return 100.0 * static_cast<double>(correct) /
         static_cast<double>(features.size());
}

double chance_level(const std::vector<int>& labels, int classes,
                    ChanceKind kind) {
  if (labels.empty()) {
    throw std::invalid_argument("chance_level: empty label set");
  }
  if (classes < 1) {
    throw std::invalid_argument("chance_level: classes must be >= 1");
  }
  if (kind == ChanceKind::uniform) {
    return 100.0 / static_cast<double>(classes);
  }
  std::map<int, std::size_t> counts;
  for (const int label : labels) ++counts[label];
  std::size_t best = 0;
  for (const auto& [label, count] : counts) best = std::max(best, count);
  return 100.0 * static_cast<double>(best) /
         static_cast<double>(labels.size());
}

namespace {

std::string format_pct(double pct) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", pct);
  return buf;
}

std::string format_delta(double value) {
  char buf[40];
  if (value == std::floor(value) && std::abs(value) < 9e15) {
    std::snprintf(buf, sizeof(buf), "%.0f", value);
  } else {
    std::snprintf(buf, sizeof(buf), "%.6g", value);
  }
  return buf;
}

}  // namespace

void write_attr_csv(const std::vector<AttrRow>& rows,
                    const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw std::runtime_error("report: cannot open " + path);
  }
  out << "task,epsilon,b,c,accuracy,chance_uniform,chance_majority\n";
  for (const auto& row : rows) {
    out << row.task << ',' << row.epsilon << ',' << row.b << ',' << row.c
        << ',' << format_pct(row.accuracy_pct) << ','
        << format_pct(row.chance_uniform_pct) << ','
        << format_pct(row.chance_majority_pct) << '\n';
  }
}

std::string render_attr_table(const std::vector<AttrRow>& rows, int b, int c,
                              double delta_f, double strict_delta_f) {
  static const char* kTasks[] = {"gender", "age_group", "ethnicity"};
  std::vector<std::string> epsilons;
  for (const auto& row : rows) {
    if (row.b != b || row.c != c) continue;
    if (std::find(epsilons.begin(), epsilons.end(), row.epsilon) ==
        epsilons.end()) {
      epsilons.push_back(row.epsilon);
    }
  }
  const auto find_row = [&](const std::string& task,
                            const std::string& eps) -> const AttrRow* {
    for (const auto& row : rows) {
      if (row.b == b && row.c == c && row.task == task &&
          row.epsilon == eps) {
        return &row;
      }
    }
    return nullptr;
  };

  std::ostringstream out;
  out << "attribute accuracy, b=" << b << ", c=" << c
      << ", delta_f=" << format_delta(delta_f) << " (strict "
      << format_delta(strict_delta_f) << ")\n";
  char line[160];
  std::snprintf(line, sizeof(line), "%-16s | %12s %12s %12s\n", "epsilon",
                "gender%", "age_group%", "ethnicity%");
  out << line;
  out << std::string(58, '-') << '\n';
  for (const auto& eps : epsilons) {
    std::string cells[3];
    for (int t = 0; t < 3; ++t) {
      const AttrRow* row = find_row(kTasks[t], eps);
      cells[t] = row == nullptr ? "-" : format_pct(row->accuracy_pct);
    }
    std::snprintf(line, sizeof(line), "%-16s | %12s %12s %12s\n", eps.c_str(),
                  cells[0].c_str(), cells[1].c_str(), cells[2].c_str());
    out << line;
  }
  // Chance rows apply across epsilons; take them from any matching row.
  std::string uniform_cells[3];
  std::string majority_cells[3];
  for (int t = 0; t < 3; ++t) {
    const AttrRow* row = epsilons.empty()
                             ? nullptr
                             : find_row(kTasks[t], epsilons.front());
    uniform_cells[t] =
        row == nullptr ? "-" : format_pct(row->chance_uniform_pct);
    majority_cells[t] =
        row == nullptr ? "-" : format_pct(row->chance_majority_pct);
  }
  out << std::string(58, '-') << '\n';
  std::snprintf(line, sizeof(line), "%-16s | %12s %12s %12s\n",
                "chance(uniform)", uniform_cells[0].c_str(),
                uniform_cells[1].c_str(), uniform_cells[2].c_str());
  out << line;
  std::snprintf(line, sizeof(line), "%-16s | %12s %12s %12s\n",
                "chance(majority)", majority_cells[0].c_str(),
                majority_cells[1].c_str(), majority_cells[2].c_str());
  out << line;
  return out.str();
}

}  // namespace dpreid
