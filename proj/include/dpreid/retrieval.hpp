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

#ifndef DPREID_RETRIEVAL_HPP
#define DPREID_RETRIEVAL_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "dpreid/dataset.hpp"

namespace dpreid {

/// Euclidean distances, queries x gallery. Throws on dimension mismatch.
std::vector<std::vector<double>> distance_matrix(
    const std::vector<std::vector<double>>& queries,
    const std::vector<std::vector<double>>& gallery);

/// Cross-camera evaluation mask for one query: gallery entries sharing the
/// query's person_id AND camera_id are excluded from ranking and relevance;
/// same-id different-camera entries are the relevant ones.
struct GalleryMask {
  std::vector<char> valid;     // participates in the ranking
  std::vector<char> relevant;  // counts as a correct match
};

GalleryMask market_filter(const PersonRecord& query,
                          const std::vector<PersonRecord>& gallery);

/// Mean over relevant ranks k of precision-at-k. The flags must be in rank
/// order; throws when no flag is set.
double average_precision(const std::vector<char>& ranked_relevance);

enum class EvalMode { regular, centroid };

std::string to_string(EvalMode mode);

struct EvalMetrics {
  double map = 0.0;   // fraction in [0,1]
  double top1 = 0.0;  // fraction in [0,1]
  int valid_queries = 0;
};

/// Ranks the gallery for every query and aggregates mAP and CMC top-1 over
/// queries with at least one relevant candidate.
///
/// regular mode ranks individual gallery embeddings after market_filter.
/// centroid mode ranks one mean embedding per gallery identity, built from
/// that identity's gallery samples; with exclude_query_camera (default) the
/// samples sharing the query's camera are left out of the centroid. The
/// query's own identity centroid is the single relevant candidate.
/// Distance ties break by stable gallery (or ascending identity) order.
EvalMetrics evaluate(const std::vector<std::vector<double>>& query_embeddings,
                     const std::vector<PersonRecord>& query_records,
                     const std::vector<std::vector<double>>& gallery_embeddings,
                     const std::vector<PersonRecord>& gallery_records,
                     EvalMode mode, bool exclude_query_camera = true);

/// One row of the evaluation report.
struct EvalRow {
  std::string mode;
  std::string epsilon;  // numeric token or "none"
  int b = 1;
  int c = 1;
  double map_pct = 0.0;
  double top1_pct = 0.0;
};

/// CSV with header `mode,epsilon,b,c,mAP,top1`, percentages with 4 decimals.
void write_eval_csv(const std::vector<EvalRow>& rows, const std::string& path);

/// Renders rows for one (b, c) as a fixed-width table with a caption line
/// carrying both calibration constants:
///   epsilon | Regular mAP% Top-1% | Centroid mAP% Top-1%
std::string render_reid_table(const std::vector<EvalRow>& rows, int b, int c,
                              double delta_f, double strict_delta_f);

}  // namespace dpreid

#endif  // DPREID_RETRIEVAL_HPP
