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

#include "dpreid/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace dpreid {

namespace {

double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("distance: embedding dimension mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

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

std::vector<std::vector<double>> distance_matrix(
    const std::vector<std::vector<double>>& queries,
    const std::vector<std::vector<double>>& gallery) {
  std::vector<std::vector<double>> out(queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    out[q].resize(gallery.size());
    for (std::size_t g = 0; g < gallery.size(); ++g) {
      out[q][g] = euclidean(queries[q], gallery[g]);
    }
  }
  return out;
}

GalleryMask market_filter(const PersonRecord& query,
                          const std::vector<PersonRecord>& gallery) {
  GalleryMask mask;
  mask.valid.resize(gallery.size());
  mask.relevant.resize(gallery.size());
  for (std::size_t i = 0; i < gallery.size(); ++i) {
    const bool same_id = gallery[i].person_id == query.person_id;
    const bool same_cam = gallery[i].camera_id == query.camera_id;
    mask.valid[i] = !(same_id && same_cam);
    mask.relevant[i] = same_id && !same_cam;
  }
  return mask;
}

double average_precision(const std::vector<char>& ranked_relevance) {
  int hits = 0;
  double sum = 0.0;
  for (std::size_t k = 0; k < ranked_relevance.size(); ++k) {
    if (ranked_relevance[k]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
  }
  if (hits == 0) {
    throw std::invalid_argument("average_precision: no relevant items");
  }
  return sum / hits;
}

std::string to_string(EvalMode mode) {
  switch (mode) {
    case EvalMode::regular: return "regular";
    case EvalMode::centroid: return "centroid";
  }
  throw std::logic_error("unknown eval mode");
}

namespace {

EvalMetrics evaluate_regular(
    const std::vector<std::vector<double>>& query_embeddings,
    const std::vector<PersonRecord>& query_records,
    const std::vector<std::vector<double>>& gallery_embeddings,
    const std::vector<PersonRecord>& gallery_records) {
  EvalMetrics metrics;
  double ap_sum = 0.0;
  double top1_sum = 0.0;
  for (std::size_t q = 0; q < query_records.size(); ++q) {
    const GalleryMask mask = market_filter(query_records[q], gallery_records);
    if (std::find(mask.relevant.begin(), mask.relevant.end(), char{1}) ==
        mask.relevant.end()) {
      continue;  // no cross-camera match: query is skipped
    }
    std::vector<int> candidates;
    for (std::size_t g = 0; g < gallery_records.size(); ++g) {
      if (mask.valid[g]) candidates.push_back(static_cast<int>(g));
    }
    std::vector<double> dist(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      dist[i] = euclidean(query_embeddings[q],
                          gallery_embeddings[static_cast<std::size_t>(
                              candidates[i])]);
    }
    // Ties break by stable original gallery order.
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       return dist[a] < dist[b];
                     });
    std::vector<char> flags(order.size());
    for (std::size_t r = 0; r < order.size(); ++r) {
      flags[r] = mask.relevant[static_cast<std::size_t>(
          candidates[order[r]])];
    }
    ap_sum += average_precision(flags);
    top1_sum += flags.front() ? 1.0 : 0.0;
    ++metrics.valid_queries;
  }
  if (metrics.valid_queries == 0) {
    throw std::runtime_error("evaluate: no valid queries");
  }
  metrics.map = ap_sum / metrics.valid_queries;
  metrics.top1 = top1_sum / metrics.valid_queries;
  return metrics;
}

EvalMetrics evaluate_centroid(
    const std::vector<std::vector<double>>& query_embeddings,
    const std::vector<PersonRecord>& query_records,
    const std::vector<std::vector<double>>& gallery_embeddings,
    const std::vector<PersonRecord>& gallery_records,
    bool exclude_query_camera) {
  // Gallery sample indices per identity, in ascending identity order.
  std::map<int, std::vector<std::size_t>> by_id;
  for (std::size_t g = 0; g < gallery_records.size(); ++g) {
    by_id[gallery_records[g].person_id].push_back(g);
  }
  const std::size_t dim =
      gallery_embeddings.empty() ? 0 : gallery_embeddings.front().size();

  EvalMetrics metrics;
  double ap_sum = 0.0;
  double top1_sum = 0.0;
  for (std::size_t q = 0; q < query_records.size(); ++q) {
    std::vector<int> ids;
    std::vector<std::vector<double>> centroids;
    for (const auto& [id, samples] : by_id) {
      std::vector<double> mean(dim, 0.0);
      int count = 0;
      for (const std::size_t g : samples) {
        if (exclude_query_camera &&
            gallery_records[g].camera_id == query_records[q].camera_id) {
          continue;
        }
        for (std::size_t d = 0; d < dim; ++d) {
          mean[d] += gallery_embeddings[g][d];
        }
        ++count;
      }
      if (count == 0) continue;
      for (double& v : mean) v /= count;
      ids.push_back(id);
      centroids.push_back(std::move(mean));
    }
    const auto self = std::find(ids.begin(), ids.end(),
                                query_records[q].person_id);
    if (self == ids.end()) {
      continue;  // own identity has no usable gallery support: skip query
    }
    const std::size_t self_idx =
        static_cast<std::size_t>(self - ids.begin());

    std::vector<double> dist(centroids.size());
    for (std::size_t i = 0; i < centroids.size(); ++i) {
      dist[i] = euclidean(query_embeddings[q], centroids[i]);
    }
    std::vector<std::size_t> order(centroids.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       return dist[a] < dist[b];
                     });
    std::size_t rank = 0;
    for (std::size_t r = 0; r < order.size(); ++r) {
      if (order[r] == self_idx) {
        rank = r + 1;
        break;
      }
    }
    ap_sum += 1.0 / static_cast<double>(rank);  // single relevant candidate
    top1_sum += rank == 1 ? 1.0 : 0.0;
    ++metrics.valid_queries;
  }
  if (metrics.valid_queries == 0) {
    throw std::runtime_error("evaluate: no valid queries");
  }
  metrics.map = ap_sum / metrics.valid_queries;
  metrics.top1 = top1_sum / metrics.valid_queries;
  return metrics;
}

}  // namespace

EvalMetrics evaluate(const std::vector<std::vector<double>>& query_embeddings,
                     const std::vector<PersonRecord>& query_records,
                     const std::vector<std::vector<double>>& gallery_embeddings,
                     const std::vector<PersonRecord>& gallery_records,
                     EvalMode mode, bool exclude_query_camera) {
  if (query_embeddings.size() != query_records.size() ||
      gallery_embeddings.size() != gallery_records.size()) {
    throw std::invalid_argument("evaluate: embeddings/records size mismatch");
  }
  if (query_records.empty() || gallery_records.empty()) {
    throw std::invalid_argument("evaluate: empty query or gallery set");
  }
  return mode == EvalMode::regular
             ? evaluate_regular(query_embeddings, query_records,
                                gallery_embeddings, gallery_records)
             : evaluate_centroid(query_embeddings, query_records,
                                 gallery_embeddings, gallery_records,
                                 exclude_query_camera);
}

void write_eval_csv(const std::vector<EvalRow>& rows,
                    const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw std::runtime_error("report: cannot open " + path);
  }
  out << "mode,epsilon,b,c,mAP,top1\n";
  for (const auto& row : rows) {
    out << row.mode << ',' << row.epsilon << ',' << row.b << ',' << row.c
        << ',' << format_pct(row.map_pct) << ',' << format_pct(row.top1_pct)
        << '\n';
  }
}

std::string render_reid_table(const std::vector<EvalRow>& rows, int b, int c,
                              double delta_f, double strict_delta_f) {
  // Collect epsilon tokens in first-seen order.
  std::vector<std::string> epsilons;
  for (const auto& row : rows) {
    if (row.b != b || row.c != c) continue;
    if (std::find(epsilons.begin(), epsilons.end(), row.epsilon) ==
        epsilons.end()) {
      epsilons.push_back(row.epsilon);
    }
  }
  const auto find_row = [&](const std::string& mode,
                            const std::string& eps) -> const EvalRow* {
    for (const auto& row : rows) {
      if (row.b == b && row.c == c && row.mode == mode &&
          row.epsilon == eps) {
        return &row;
      }
    }
    return nullptr;
  };

  std::ostringstream out;
  out << "reID results, b=" << b << ", c=" << c
      << ", delta_f=" << format_delta(delta_f)
      << " (strict " << format_delta(strict_delta_f) << ")\n";
  char line[160];
  std::snprintf(line, sizeof(line), "%-10s | %12s %12s | %12s %12s\n",
                "epsilon", "Reg mAP%", "Reg Top-1%", "Cent mAP%",
                "Cent Top-1%");
  out << line;
  out << std::string(66, '-') << '\n';
  for (const auto& eps : epsilons) {
    const EvalRow* reg = find_row("regular", eps);
    const EvalRow* cent = find_row("centroid", eps);
    const auto cell = [](const EvalRow* row, bool top1) {
      return row == nullptr
                 ? std::string("-")
                 : format_pct(top1 ? row->top1_pct : row->map_pct);
    };
    std::snprintf(line, sizeof(line), "%-10s | %12s %12s | %12s %12s\n",
                  eps.c_str(), cell(reg, false).c_str(),
                  cell(reg, true).c_str(), cell(cent, false).c_str(),
                  cell(cent, true).c_str());
    out << line;
  }
  return out.str();
}

}  // namespace dpreid
