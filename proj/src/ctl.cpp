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

#include "dpreid/ctl.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>

#include "dpreid/rng.hpp"

namespace dpreid {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

void check_dims(std::span<const double> anchor, std::span<const double> c_pos,
                std::span<const double> c_neg) {
  if (anchor.size() != c_pos.size() || anchor.size() != c_neg.size()) {
    throw std::invalid_argument("ctl: embedding dimension mismatch");
  }
}

}  // namespace

Centroid centroid(const std::vector<std::vector<double>>& embeddings,
                  int class_id) {
  if (embeddings.empty()) {
    throw std::invalid_argument("centroid: empty support");
  }
  const std::size_t dim = embeddings.front().size();
  Centroid c;
  c.class_id = class_id;
  c.support_count = static_cast<int>(embeddings.size());
  c.values.assign(dim, 0.0);
  for (const auto& e : embeddings) {
    if (e.size() != dim) {
      throw std::invalid_argument("centroid: mixed embedding dimensions");
    }
    for (std::size_t i = 0; i < dim; ++i) c.values[i] += e[i];
  }
  for (double& v : c.values) v /= static_cast<double>(c.support_count);
  return c;
}

double ctl_loss(std::span<const double> anchor, std::span<const double> c_pos,
                std::span<const double> c_neg, double margin) {
  check_dims(anchor, c_pos, c_neg);
  const double raw =
      squared_distance(anchor, c_pos) - squared_distance(anchor, c_neg) +
      margin;
  return raw > 0.0 ? raw : 0.0;
}

CtlGradients ctl_gradients(std::span<const double> anchor,
                           std::span<const double> c_pos,
                           std::span<const double> c_neg, double margin) {
  check_dims(anchor, c_pos, c_neg);
  const std::size_t dim = anchor.size();
  CtlGradients g;
  g.d_anchor.assign(dim, 0.0);
  g.d_centroid_pos.assign(dim, 0.0);
  g.d_centroid_neg.assign(dim, 0.0);
  const double raw =
      squared_distance(anchor, c_pos) - squared_distance(anchor, c_neg) +
      margin;
  if (raw <= 0.0) {
    return g;
  }
  g.active = true;
  for (std::size_t i = 0; i < dim; ++i) {
    const double dp = anchor[i] - c_pos[i];
    const double dn = anchor[i] - c_neg[i];
    g.d_anchor[i] = 2.0 * dp - 2.0 * dn;
    g.d_centroid_pos[i] = -2.0 * dp;
    g.d_centroid_neg[i] = 2.0 * dn;
  }
  return g;
}

std::vector<Batch> sample_batches(
    const std::vector<std::pair<int, std::vector<int>>>& class_samples,
    int classes_per_batch, int instances_per_class, std::uint64_t seed) {
  const int p = classes_per_batch;
  const int k = instances_per_class;
  if (p < 2 || k < 2) {
    throw std::invalid_argument("batches: need P >= 2 and K >= 2");
  }
  std::vector<int> eligible;
  for (std::size_t idx = 0; idx < class_samples.size(); ++idx) {
    if (!class_samples[idx].second.empty()) {
      eligible.push_back(static_cast<int>(idx));
    }
  }
  if (static_cast<int>(eligible.size()) < p) {
    throw std::invalid_argument("batches: fewer than P eligible classes");
  }

  Rng rng(seed);
  for (std::size_t i = eligible.size() - 1; i > 0; --i) {
    const std::size_t j = rng.uniform_index(i + 1);
    std::swap(eligible[i], eligible[j]);
  }
  // Pad the tail so the last batch is full; padding classes are drawn from
  // the classes already covered earlier in the epoch.
  std::vector<int> order = eligible;
  while (order.size() % static_cast<std::size_t>(p) != 0) {
    order.push_back(
        eligible[rng.uniform_index(eligible.size())]);
  }

  std::vector<Batch> batches;
  for (std::size_t pos = 0; pos < order.size();
       pos += static_cast<std::size_t>(p)) {
    Batch batch;
    for (int pi = 0; pi < p; ++pi) {
      const auto& [class_id, samples] = class_samples[static_cast<std::size_t>(
          order[pos + static_cast<std::size_t>(pi)])];
      BatchClass bc;
      bc.class_id = class_id;
      const int n = static_cast<int>(samples.size());
      if (n >= k) {
        // Partial Fisher-Yates: first k entries of a shuffled index list.
        std::vector<int> idx(samples.begin(), samples.end());
        for (int i = 0; i < k; ++i) {
          const int j =
              i + static_cast<int>(rng.uniform_index(
                      static_cast<std::uint64_t>(n - i)));
          std::swap(idx[i], idx[j]);
          bc.sample_indices.push_back(idx[i]);
        }
      } else {
        for (int i = 0; i < k; ++i) {
          bc.sample_indices.push_back(
              samples[rng.uniform_index(samples.size())]);
        }
      }
      batch.push_back(std::move(bc));
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

void CtlConfig::validate() const {
  if (margin < 0.0 || !std::isfinite(margin)) {
    throw std::invalid_argument("ctl config: margin must be >= 0");
  }
  if (classes_per_batch < 2 || instances_per_class < 2) {
    throw std::invalid_argument("ctl config: need P >= 2 and K >= 2");
  }
  if (!std::isfinite(learning_rate)) {
    throw std::invalid_argument("ctl config: bad learning rate");
  }
  if (epochs < 0) {
    throw std::invalid_argument("ctl config: epochs must be >= 0");
  }
  if (feature_jitter < 0.0 || !std::isfinite(feature_jitter)) {
    throw std::invalid_argument("ctl config: feature_jitter must be >= 0");
  }
}

TrainResult train_embedder_on_features(
    const std::vector<std::vector<double>>& features,
    const std::vector<int>& labels, const LinearEmbedder& init,
    const CtlConfig& config) {
  config.validate();
  if (features.size() != labels.size()) {
    throw std::invalid_argument("train: features/labels size mismatch");
  }
  const std::size_t feature_dim =
      static_cast<std::size_t>(init.feature_dim());
  for (const auto& f : features) {
    if (f.size() != feature_dim) {
      throw std::invalid_argument("train: feature dimension mismatch");
    }
  }

  std::map<int, std::vector<int>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    by_class[labels[i]].push_back(static_cast<int>(i));
  }
  std::vector<std::pair<int, std::vector<int>>> class_samples(
      by_class.begin(), by_class.end());

  const int p = config.classes_per_batch;
  const int k = config.instances_per_class;
  const int dim = init.embed_dim();

  TrainResult result{init, {}};
  std::vector<double> grad_w(result.embedder.weights().size());

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto batches = sample_batches(
        class_samples, p, k,
        derive_seed(config.seed, {0xba7c, static_cast<std::uint64_t>(epoch)}));
    double epoch_loss_sum = 0.0;
    std::size_t epoch_anchors = 0;

    std::size_t batch_index = 0;
    for (const auto& batch : batches) {
      // Jittered copies of the batch's feature rows. The same draw feeds the
      // forward pass and the weight gradient, keeping the two consistent.
      std::vector<std::vector<double>> batch_feat(
          batch.size() * static_cast<std::size_t>(k));
      Rng jitter_rng(derive_seed(
          config.seed, {0x717, static_cast<std::uint64_t>(epoch),
                        static_cast<std::uint64_t>(batch_index)}));
      ++batch_index;
      for (std::size_t ci = 0; ci < batch.size(); ++ci) {
        for (int ki = 0; ki < k; ++ki) {
          auto& dst = batch_feat[ci * k + static_cast<std::size_t>(ki)];
          dst = features[static_cast<std::size_t>(
              batch[ci].sample_indices[static_cast<std::size_t>(ki)])];
          if (config.feature_jitter > 0.0) {
            for (double& v : dst) {
              v += jitter_rng.normal(0.0, config.feature_jitter);
            }
          }
        }
      }

      // Embeddings and per-class sums under the current weights.
      std::vector<std::vector<double>> emb(batch.size() * k);
      std::vector<std::vector<double>> class_sum(
          batch.size(), std::vector<double>(dim, 0.0));
      for (std::size_t ci = 0; ci < batch.size(); ++ci) {
        for (int ki = 0; ki < k; ++ki) {
          auto e = result.embedder.embed_features(
              batch_feat[ci * k + static_cast<std::size_t>(ki)]);
          for (int d = 0; d < dim; ++d) class_sum[ci][d] += e[d];
          emb[ci * k + static_cast<std::size_t>(ki)] = std::move(e);
        }
      }
      std::vector<std::vector<double>> class_centroid(batch.size());
      for (std::size_t ci = 0; ci < batch.size(); ++ci) {
        class_centroid[ci] = class_sum[ci];
        for (double& v : class_centroid[ci]) v /= k;
      }

      Rng neg_rng(derive_seed(config.seed,
                              {0x4e6, static_cast<std::uint64_t>(epoch),
                               epoch_anchors}));
      const std::size_t n_anchors = batch.size() * static_cast<std::size_t>(k);
      std::vector<std::vector<double>> d_emb(
          n_anchors, std::vector<double>(dim, 0.0));
      double batch_loss = 0.0;

      for (std::size_t ci = 0; ci < batch.size(); ++ci) {
        for (int ki = 0; ki < k; ++ki) {
          const std::size_t a_idx = ci * k + static_cast<std::size_t>(ki);
          const auto& anchor = emb[a_idx];
          // Positive centroid: batch-mates of the anchor's class, anchor
          // excluded.
          std::vector<double> c_pos(dim);
          for (int d = 0; d < dim; ++d) {
            c_pos[static_cast<std::size_t>(d)] =
                (class_sum[ci][static_cast<std::size_t>(d)] -
                 anchor[static_cast<std::size_t>(d)]) /
                (k - 1);
          }
          // Negative centroid: hardest (nearest) other class, or random.
          std::size_t neg_ci = ci == 0 ? 1 : 0;
          if (config.random_negative) {
            std::size_t pick =
                neg_rng.uniform_index(batch.size() - 1);
            neg_ci = pick >= ci ? pick + 1 : pick;
          } else {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t oi = 0; oi < batch.size(); ++oi) {
              if (oi == ci) continue;
              const double d2 = squared_distance(anchor, class_centroid[oi]);
              if (d2 < best) {
                best = d2;
                neg_ci = oi;
              }
            }
          }
          const auto& c_neg = class_centroid[neg_ci];

          batch_loss += ctl_loss(anchor, c_pos, c_neg, config.margin);
          const CtlGradients g =
              ctl_gradients(anchor, c_pos, c_neg, config.margin);
          if (!g.active) continue;

          for (int d = 0; d < dim; ++d) {
            d_emb[a_idx][static_cast<std::size_t>(d)] +=
                g.d_anchor[static_cast<std::size_t>(d)];
          }
          // Chain rule through both centroids to their supports.
          for (int ki2 = 0; ki2 < k; ++ki2) {
            if (ki2 == ki) continue;
            const std::size_t s_idx = ci * k + static_cast<std::size_t>(ki2);
            for (int d = 0; d < dim; ++d) {
              d_emb[s_idx][static_cast<std::size_t>(d)] +=
                  g.d_centroid_pos[static_cast<std::size_t>(d)] / (k - 1);
            }
          }
          for (int ki2 = 0; ki2 < k; ++ki2) {
            const std::size_t s_idx =
                neg_ci * k + static_cast<std::size_t>(ki2);
            for (int d = 0; d < dim; ++d) {
              d_emb[s_idx][static_cast<std::size_t>(d)] +=
                  g.d_centroid_neg[static_cast<std::size_t>(d)] / k;
            }
          }
        }
      }

      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error(
            "train: loss diverged (non-finite) at epoch " +
            std::to_string(epoch));
      }
      epoch_loss_sum += batch_loss;
      epoch_anchors += n_anchors;

      // d(mean loss)/dW accumulated over anchors, one outer product each.
      std::fill(grad_w.begin(), grad_w.end(), 0.0);
      const double inv_anchors = 1.0 / static_cast<double>(n_anchors);
      for (std::size_t ci = 0; ci < batch.size(); ++ci) {
        for (int ki = 0; ki < k; ++ki) {
          const std::size_t a_idx = ci * k + static_cast<std::size_t>(ki);
          const auto& feat = batch_feat[a_idx];
          for (int d = 0; d < dim; ++d) {
            const double up =
                d_emb[a_idx][static_cast<std::size_t>(d)] * inv_anchors;
            if (up == 0.0) continue;
            double* row = grad_w.data() +
                          static_cast<std::size_t>(d) * feature_dim;
            for (std::size_t f = 0; f < feature_dim; ++f) {
              row[f] += up * feat[f];
            }
          }
        }
      }
      auto& weights = result.embedder.weights();
      for (std::size_t i = 0; i < weights.size(); ++i) {
        weights[i] -= config.learning_rate * grad_w[i];
      }
    }

    result.epoch_loss.push_back(
        epoch_anchors == 0 ? 0.0
                           : epoch_loss_sum /
                                 static_cast<double>(epoch_anchors));
  }
  return result;
}

TrainResult train_embedder(const DatasetManifest& manifest,
                           const FeatureConfig& feature_config, int embed_dim,
                           const CtlConfig& config) {
  namespace fs = std::filesystem;
  std::vector<std::vector<double>> features;
  std::vector<int> labels;
  for (const auto& rec : manifest.persons) {
    if (rec.split != Split::train) continue;
    const ImageRGB img =
        load_ppm_file((fs::path(manifest.root) / rec.image_path).string());
    features.push_back(hist_features(img, feature_config));
    labels.push_back(rec.person_id);
  }
  if (features.empty()) {
    throw std::runtime_error("train: manifest has no train-split records");
  }
  const LinearEmbedder init = LinearEmbedder::random_init(
      feature_config, embed_dim, derive_seed(config.seed, {0x1417}));
  return train_embedder_on_features(features, labels, init, config);
}

void save_loss_trace(const std::vector<double>& epoch_loss,
                     const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw std::runtime_error("loss trace: cannot open " + path);
  }
  out << "epoch,mean_loss\n";
  char buf[32];
  for (std::size_t i = 0; i < epoch_loss.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", epoch_loss[i]);
    out << i << ',' << buf << '\n';
  }
}

}  // namespace dpreid
