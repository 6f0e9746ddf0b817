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

#include <cstdio>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "dpreid/embedding.hpp"
#include "dpreid/rng.hpp"

namespace {

// Four slightly perturbed copies of a base vector per class.
std::vector<std::vector<double>> two_class_features(double separation) {
  std::vector<std::vector<double>> features;
  for (int cls = 0; cls < 2; ++cls) {
    for (int i = 0; i < 4; ++i) {
      std::vector<double> f(6, 0.1);
      f[static_cast<std::size_t>(cls * 3)] = separation + 0.01 * i;
      features.push_back(std::move(f));
    }
  }
  return features;
}

const std::vector<int> kTwoClassLabels{0, 0, 0, 0, 1, 1, 1, 1};

dpreid::CtlConfig fast_config() {
  dpreid::CtlConfig cfg;
  cfg.classes_per_batch = 2;
  cfg.instances_per_class = 2;
  cfg.epochs = 5;
  cfg.feature_jitter = 0.0;
  return cfg;
}

}  // namespace

TEST_CASE("centroid is the componentwise mean") {
  const auto single = dpreid::centroid({{3.0, -1.0}}, 7);
  CHECK(single.values == std::vector<double>{3.0, -1.0});
  CHECK(single.class_id == 7);
  CHECK(single.support_count == 1);

  const auto pair = dpreid::centroid({{0.0, 0.0}, {2.0, 4.0}});
  CHECK(pair.values == std::vector<double>{1.0, 2.0});
  CHECK(pair.support_count == 2);

  CHECK_THROWS(dpreid::centroid({}));
  CHECK_THROWS(dpreid::centroid({{1.0}, {1.0, 2.0}}));
}

TEST_CASE("ctl_loss evaluates the squared-distance hinge") {
  const std::vector<double> a{0.0, 0.0};
  const std::vector<double> p1{1.0, 0.0}, n1{0.0, 2.0};
  CHECK(dpreid::ctl_loss(a, p1, n1, 0.3) == 0.0);
  const std::vector<double> p2{3.0, 0.0}, n2{1.0, 0.0};
  CHECK(dpreid::ctl_loss(a, p2, n2, 0.5) ==
        doctest::Approx(8.5).epsilon(1e-12));
  const std::vector<double> same{0.7, -0.2};
  CHECK(dpreid::ctl_loss(a, same, same, 0.4) ==
        doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("ctl_gradients are zero when the hinge is inactive") {
  const std::vector<double> a{0.0, 0.0}, p{1.0, 0.0}, n{0.0, 2.0};
  const auto g = dpreid::ctl_gradients(a, p, n, 0.3);
  CHECK_FALSE(g.active);
  CHECK(g.d_anchor == std::vector<double>{0.0, 0.0});
  CHECK(g.d_centroid_pos == std::vector<double>{0.0, 0.0});
  CHECK(g.d_centroid_neg == std::vector<double>{0.0, 0.0});
}

TEST_CASE("ctl_gradients match the hand-derived active case") {
  // loss = ||a-p||^2 - ||a-n||^2 + m with a=(0,0), p=(3,0), n=(1,0).
  const std::vector<double> a{0.0, 0.0}, p{3.0, 0.0}, n{1.0, 0.0};
  const auto g = dpreid::ctl_gradients(a, p, n, 0.5);
  REQUIRE(g.active);
  CHECK(g.d_anchor == std::vector<double>{-4.0, 0.0});
  CHECK(g.d_centroid_pos == std::vector<double>{6.0, 0.0});
  CHECK(g.d_centroid_neg == std::vector<double>{-2.0, 0.0});
}

TEST_CASE("ctl_gradients match central finite differences") {
  dpreid::Rng rng(314);
  const double h = 1e-6;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> a(4), p(4), n(4);
    for (int d = 0; d < 4; ++d) {
      a[d] = rng.uniform(-1.0, 1.0);
      p[d] = rng.uniform(-1.0, 1.0);
      n[d] = rng.uniform(-1.0, 1.0);
    }
    const double margin = 6.0;  // large enough to keep the hinge active
    const auto g = dpreid::ctl_gradients(a, p, n, margin);
    REQUIRE(g.active);
    auto check_block = [&](std::vector<double>& block,
                           const std::vector<double>& analytic) {
      for (int d = 0; d < 4; ++d) {
        const double keep = block[d];
        block[d] = keep + h;
        const double up = dpreid::ctl_loss(a, p, n, margin);
        block[d] = keep - h;
        const double down = dpreid::ctl_loss(a, p, n, margin);
        block[d] = keep;
        CHECK(analytic[d] ==
              doctest::Approx((up - down) / (2 * h)).epsilon(1e-5));
      }
    };
    check_block(a, g.d_anchor);
    check_block(p, g.d_centroid_pos);
    check_block(n, g.d_centroid_neg);
  }
}

TEST_CASE("sample_batches builds class-balanced batches") {
  std::vector<std::pair<int, std::vector<int>>> classes{
      {1, {0, 1, 2}}, {2, {3, 4}}, {3, {5}}, {4, {6, 7, 8, 9}}};
  const auto batches = dpreid::sample_batches(classes, 2, 2, 42);
  REQUIRE_FALSE(batches.empty());
  std::set<int> seen_classes;
  for (const auto& batch : batches) {
    CHECK(batch.size() == 2);
    for (const auto& bc : batch) {
      CHECK(bc.sample_indices.size() == 2);
      seen_classes.insert(bc.class_id);
      for (int idx : bc.sample_indices) {
        bool belongs = false;
        for (const auto& [cid, samples] : classes) {
          if (cid != bc.class_id) continue;
          for (int s : samples) belongs |= (s == idx);
        }
        CHECK(belongs);
      }
    }
  }
  CHECK(seen_classes == std::set<int>{1, 2, 3, 4});
}

TEST_CASE("sample_batches is deterministic in its seed") {
  std::vector<std::pair<int, std::vector<int>>> classes{
      {0, {0, 1}}, {1, {2, 3}}, {2, {4, 5}}};
  const auto a = dpreid::sample_batches(classes, 2, 2, 9);
  const auto b = dpreid::sample_batches(classes, 2, 2, 9);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].size() == b[i].size());
    for (std::size_t j = 0; j < a[i].size(); ++j) {
      CHECK(a[i][j].class_id == b[i][j].class_id);
      CHECK(a[i][j].sample_indices == b[i][j].sample_indices);
    }
  }
  CHECK_THROWS(dpreid::sample_batches(classes, 4, 2, 9));
}

TEST_CASE("training reduces the loss on well-separated classes") {
  const auto features = two_class_features(2.0);
  const auto init =
      dpreid::LinearEmbedder::random_init({.grid = 1, .bins = 2}, 4, 21);
  auto cfg = fast_config();
  cfg.margin = 10.0;  // large enough that the hinge starts active
  const auto result = dpreid::train_embedder_on_features(
      features, kTwoClassLabels, init, cfg);
  REQUIRE(result.epoch_loss.size() == 5);
  CHECK(result.epoch_loss.front() > 0.0);
  CHECK(result.epoch_loss.back() < result.epoch_loss.front());
}

TEST_CASE("zero learning rate leaves the embedder untouched") {
  const auto features = two_class_features(2.0);
  const auto init =
      dpreid::LinearEmbedder::random_init({.grid = 1, .bins = 2}, 4, 22);
  auto cfg = fast_config();
  cfg.learning_rate = 0.0;
  const auto result = dpreid::train_embedder_on_features(
      features, kTwoClassLabels, init, cfg);
  CHECK(result.embedder == init);
}

TEST_CASE("identical class representations reach zero loss at margin zero") {
  std::vector<std::vector<double>> features;
  std::vector<int> labels;
  for (int cls = 0; cls < 2; ++cls) {
    for (int i = 0; i < 4; ++i) {
      std::vector<double> f(6, 0.0);
      f[static_cast<std::size_t>(cls)] = 1.0;
      features.push_back(std::move(f));
      labels.push_back(cls);
    }
  }
  auto cfg = fast_config();
  cfg.margin = 0.0;
  const auto init =
      dpreid::LinearEmbedder::random_init({.grid = 1, .bins = 2}, 4, 23);
  const auto result =
      dpreid::train_embedder_on_features(features, labels, init, cfg);
  CHECK(result.epoch_loss.back() == 0.0);
}

TEST_CASE("training validates inputs and configuration") {
  const auto features = two_class_features(2.0);
  const auto init =
      dpreid::LinearEmbedder::random_init({.grid = 1, .bins = 2}, 4, 24);
  auto cfg = fast_config();
  CHECK_THROWS(dpreid::train_embedder_on_features(
      features, std::vector<int>(3, 0), init, cfg));
  cfg.instances_per_class = 1;
  CHECK_THROWS(
      dpreid::train_embedder_on_features(features, kTwoClassLabels, init, cfg));
  cfg = fast_config();
  cfg.feature_jitter = -0.5;
  CHECK_THROWS(
      dpreid::train_embedder_on_features(features, kTwoClassLabels, init, cfg));
}

TEST_CASE("save_loss_trace writes the expected CSV") {
  const std::string path = "test_loss_trace.csv";
  dpreid::save_loss_trace({0.5, 0.25}, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "epoch,mean_loss");
  std::getline(in, line);
  CHECK(line.substr(0, 2) == "0,");
  std::getline(in, line);
  CHECK(line.substr(0, 2) == "1,");
  in.close();
  std::remove(path.c_str());
}
