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

#include "dpreid/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "dpreid/attribute.hpp"
#include "dpreid/ctl.hpp"
#include "dpreid/dataset.hpp"
#include "dpreid/embedding.hpp"
#include "dpreid/image.hpp"
#include "dpreid/mechanism.hpp"
#include "dpreid/retrieval.hpp"
#include "dpreid/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dpreid {

namespace {

constexpr std::uint64_t kStreamObfuscate = 0x0bf;
constexpr std::uint64_t kStreamAttrTask = 0xa7;
constexpr std::uint64_t kStreamCell = 0xce11;

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t hash = 1469598103934665603ull;
  for (const unsigned char ch : text) {
    hash ^= ch;
    hash *= 1099511628211ull;
  }
  return hash;
}

/// Runs fn(0..n-1) on up to jobs threads. The first exception thrown by any
/// call is rethrown after all threads join.
void parallel_for(std::size_t n, int jobs,
                  const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const std::size_t n_threads =
      std::min(static_cast<std::size_t>(jobs), n);
  std::vector<std::thread> threads;
  threads.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) {
    threads.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& thread : threads) thread.join();
  if (first_error) std::rethrow_exception(first_error);
}

void ensure_dir(const std::string& path) {
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec) {
    throw std::runtime_error("cannot create directory " + path + ": " +
                             ec.message());
  }
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << content;
  if (!out) throw std::runtime_error("short write to " + path);
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

void validate_cell(int b, int c) {
  PrivacyParams params;
  params.block_side = b;
  params.bin_width = c;
  try {
    params.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

void validate_common(const RunConfig& config) {
  require(!config.out.empty(), "config: output directory must be set");
  require(config.jobs >= 1, "config: jobs must be >= 1");
}

void require_dataset(const RunConfig& config) {
  require(!config.dataset.empty(), "config: dataset root must be set");
  require(fs::exists(config.dataset),
          "config: dataset root does not exist: " + config.dataset);
}

PrivacyParams cell_params(const RunConfig& config) {
  PrivacyParams params;
  params.epsilon = parse_epsilon_token(config.epsilon);
  params.block_side = config.b;
  params.bin_width = config.c;
  params.strict_scale = config.strict;
  params.midpoint_quantise = config.midpoint;
  try {
    params.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return params;
}

FeatureConfig feature_config_of(const RunConfig& config) {
  FeatureConfig fc;
  fc.grid = config.feature_grid;
  fc.bins = config.feature_bins;
  try {
    fc.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return fc;
}

std::string run_line(const RunConfig& config) {
  std::ostringstream out;
  out << "run: seed=" << config.seed << " strict="
      << (config.strict ? "on" : "off") << " midpoint="
      << (config.midpoint ? "on" : "off") << " centroid_all_cameras="
      << (config.centroid_all_cameras ? "on" : "off") << '\n';
  return out.str();
}

void write_run_config(const RunConfig& config, const std::string& command) {
  write_text_file((fs::path(config.out) / "run_config.json").string(),
                  resolved_config_json(config, command));
}

/// Unique image paths referenced by a manifest, in sorted order.
std::vector<std::string> manifest_image_paths(const DatasetManifest& m) {
  std::set<std::string> paths;
  for (const auto& rec : m.persons) paths.insert(rec.image_path);
  for (const auto& rec : m.attributes) paths.insert(rec.image_path);
  return {paths.begin(), paths.end()};
}

std::vector<double> embed_image(const LinearEmbedder& embedder,
                                const std::string& root,
                                const std::string& rel) {
  return embedder.embed(load_ppm_file((fs::path(root) / rel).string()));
}

// JSON helpers; every type error is a ConfigError naming the key.

int get_json_int(const json& value, const std::string& key) {
  if (!value.is_number_integer()) {
    throw ConfigError("config: key '" + key + "' must be an integer");
  }
  return value.get<int>();
}

double get_json_double(const json& value, const std::string& key) {
  if (!value.is_number()) {
    throw ConfigError("config: key '" + key + "' must be a number");
  }
  return value.get<double>();
}

bool get_json_bool(const json& value, const std::string& key) {
  if (!value.is_boolean()) {
    throw ConfigError("config: key '" + key + "' must be a boolean");
  }
  return value.get<bool>();
}

std::string get_json_string(const json& value, const std::string& key) {
  if (!value.is_string()) {
    throw ConfigError("config: key '" + key + "' must be a string");
  }
  return value.get<std::string>();
}

std::string epsilon_token_of(const json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number()) return value.dump();
  throw ConfigError("config: epsilon entries must be numbers or strings");
}

void apply_json(RunConfig& cfg, const json& j) {
  for (const auto& [key, value] : j.items()) {
    if (key == "dataset") {
      cfg.dataset = get_json_string(value, key);
    } else if (key == "out") {
      cfg.out = get_json_string(value, key);
    } else if (key == "seed") {
      if (!value.is_number_unsigned() && !value.is_number_integer()) {
        throw ConfigError("config: key 'seed' must be a non-negative integer");
      }
      cfg.seed = value.get<std::uint64_t>();
    } else if (key == "jobs") {
      cfg.jobs = get_json_int(value, key);
    } else if (key == "epsilon") {
      cfg.epsilon = epsilon_token_of(value);
    } else if (key == "b") {
      cfg.b = get_json_int(value, key);
    } else if (key == "c") {
      cfg.c = get_json_int(value, key);
    } else if (key == "strict") {
      cfg.strict = get_json_bool(value, key);
    } else if (key == "midpoint") {
      cfg.midpoint = get_json_bool(value, key);
    } else if (key == "grid") {
      if (!value.is_array() || value.empty()) {
        throw ConfigError("config: key 'grid' must be a non-empty array");
      }
      cfg.grid.clear();
      for (const auto& pair : value) {
        if (!pair.is_array() || pair.size() != 2) {
          throw ConfigError("config: grid entries must be [b, c] pairs");
        }
        cfg.grid.emplace_back(get_json_int(pair[0], "grid b"),
                              get_json_int(pair[1], "grid c"));
      }
    } else if (key == "epsilons") {
      if (!value.is_array() || value.empty()) {
        throw ConfigError("config: key 'epsilons' must be a non-empty array");
      }
      cfg.epsilons.clear();
      for (const auto& entry : value) {
        cfg.epsilons.push_back(epsilon_token_of(entry));
      }
    } else if (key == "synth_ids") {
      cfg.synth_ids = get_json_int(value, key);
    } else if (key == "synth_cameras") {
      cfg.synth_cameras = get_json_int(value, key);
    } else if (key == "synth_imgs_per_pair") {
      cfg.synth_imgs_per_pair = get_json_int(value, key);
    } else if (key == "width") {
      cfg.width = get_json_int(value, key);
    } else if (key == "height") {
      cfg.height = get_json_int(value, key);
    } else if (key == "train_fraction") {
      cfg.train_fraction = get_json_double(value, key);
    } else if (key == "age_groups") {
      cfg.age_groups = get_json_int(value, key);
    } else if (key == "ethnic_groups") {
      cfg.ethnic_groups = get_json_int(value, key);
    } else if (key == "feature_grid") {
      cfg.feature_grid = get_json_int(value, key);
    } else if (key == "feature_bins") {
      cfg.feature_bins = get_json_int(value, key);
    } else if (key == "embed_dim") {
      cfg.embed_dim = get_json_int(value, key);
    } else if (key == "ctl_margin") {
      cfg.ctl_margin = get_json_double(value, key);
    } else if (key == "ctl_classes_per_batch") {
      cfg.ctl_classes_per_batch = get_json_int(value, key);
    } else if (key == "ctl_instances_per_class") {
      cfg.ctl_instances_per_class = get_json_int(value, key);
    } else if (key == "ctl_learning_rate") {
      cfg.ctl_learning_rate = get_json_double(value, key);
    } else if (key == "ctl_epochs") {
      cfg.ctl_epochs = get_json_int(value, key);
    } else if (key == "ctl_random_negative") {
      cfg.ctl_random_negative = get_json_bool(value, key);
    } else if (key == "ctl_feature_jitter") {
      cfg.ctl_feature_jitter = get_json_double(value, key);
    } else if (key == "attr_epochs") {
      cfg.attr_epochs = get_json_int(value, key);
    } else if (key == "attr_learning_rate") {
      cfg.attr_learning_rate = get_json_double(value, key);
    } else if (key == "attr_weight_decay") {
      cfg.attr_weight_decay = get_json_double(value, key);
    } else if (key == "centroid_all_cameras") {
      cfg.centroid_all_cameras = get_json_bool(value, key);
    } else if (key == "checkpoint") {
      cfg.checkpoint = get_json_string(value, key);
    } else {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }
}

CtlConfig ctl_config_of(const RunConfig& config) {
  CtlConfig ctl;
  ctl.margin = config.ctl_margin;
  ctl.classes_per_batch = config.ctl_classes_per_batch;
  ctl.instances_per_class = config.ctl_instances_per_class;
  ctl.learning_rate = config.ctl_learning_rate;
  ctl.epochs = config.ctl_epochs;
  ctl.seed = config.seed;
  ctl.random_negative = config.ctl_random_negative;
  ctl.feature_jitter = config.ctl_feature_jitter;
  try {
    ctl.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return ctl;
}

// Attribute records split into train and eval sets. When the dataset ships
// explicit attributes_train.csv / attributes_eval.csv those win; otherwise
// attribute records are joined to person records on image_path and follow
// the person split (train stays train, query and gallery form the eval set).
struct AttrSplit {
  std::vector<AttributeRecord> train;
  std::vector<AttributeRecord> eval;
};

AttrSplit split_attributes(const DatasetManifest& manifest,
                           const RunConfig& config) {
  AttrSplit split;
  const fs::path train_csv = fs::path(config.dataset) / "attributes_train.csv";
  const fs::path eval_csv = fs::path(config.dataset) / "attributes_eval.csv";
  if (fs::exists(train_csv) && fs::exists(eval_csv)) {
    split.train = load_manifest(train_csv.string(), config.age_groups,
                                config.ethnic_groups)
                      .attributes;
    split.eval = load_manifest(eval_csv.string(), config.age_groups,
                               config.ethnic_groups)
                     .attributes;
    return split;
  }
  if (manifest.attributes.empty()) {
    throw std::runtime_error("attribute: dataset has no attribute records");
  }
  if (manifest.persons.empty()) {
    throw std::runtime_error(
        "attribute: dataset has attribute records but no person records to "
        "derive a split from; provide attributes_train.csv and "
        "attributes_eval.csv");
  }
  std::map<std::string, Split> split_of;
  for (const auto& rec : manifest.persons) {
    split_of[rec.image_path] = rec.split;
  }
  for (const auto& rec : manifest.attributes) {
    const auto it = split_of.find(rec.image_path);
    if (it == split_of.end()) {
      throw std::runtime_error(
          "attribute: no person record (hence no split) for " +
          rec.image_path);
    }
    (it->second == Split::train ? split.train : split.eval).push_back(rec);
  }
  return split;
}

std::vector<EvalRow> run_eval_reid(const RunConfig& config) {
  validate_common(config);
  require_dataset(config);
  require(!config.checkpoint.empty(), "config: checkpoint must be set");
  require(fs::exists(config.checkpoint),
          "config: checkpoint does not exist: " + config.checkpoint);
  validate_cell(config.b, config.c);
  parse_epsilon_token(config.epsilon);

  const DatasetManifest manifest =
      load_dataset(config.dataset, config.age_groups, config.ethnic_groups);
  if (manifest.persons.empty()) {
    throw std::runtime_error("eval-reid: dataset has no person records");
  }
  const LinearEmbedder embedder = load_embedder(config.checkpoint);

  std::vector<PersonRecord> query_records;
  std::vector<PersonRecord> gallery_records;
  for (const auto& rec : manifest.persons) {
    if (rec.split == Split::query) query_records.push_back(rec);
    if (rec.split == Split::gallery) gallery_records.push_back(rec);
  }
  if (query_records.empty() || gallery_records.empty()) {
    throw std::runtime_error(
        "eval-reid: dataset needs both query and gallery records");
  }

  std::vector<std::vector<double>> query_embeddings(query_records.size());
  std::vector<std::vector<double>> gallery_embeddings(gallery_records.size());
  parallel_for(query_records.size(), config.jobs, [&](std::size_t i) {
    query_embeddings[i] =
        embed_image(embedder, manifest.root, query_records[i].image_path);
  });
  parallel_for(gallery_records.size(), config.jobs, [&](std::size_t i) {
    gallery_embeddings[i] =
        embed_image(embedder, manifest.root, gallery_records[i].image_path);
  });

  std::vector<EvalRow> rows;
  for (const EvalMode mode : {EvalMode::regular, EvalMode::centroid}) {
    const EvalMetrics metrics =
        evaluate(query_embeddings, query_records, gallery_embeddings,
                 gallery_records, mode, !config.centroid_all_cameras);
    EvalRow row;
    row.mode = to_string(mode);
    row.epsilon = config.epsilon;
    row.b = config.b;
    row.c = config.c;
    row.map_pct = 100.0 * metrics.map;
    row.top1_pct = 100.0 * metrics.top1;
    rows.push_back(row);
  }

  ensure_dir(config.out);
  write_eval_csv(rows, (fs::path(config.out) / "report.csv").string());
  const Sensitivity sens =
      sensitivity(manifest.width, manifest.height, config.b, config.c);
  write_text_file((fs::path(config.out) / "table.txt").string(),
                  render_reid_table(rows, config.b, config.c, sens.delta_f,
                                    sens.strict_delta_f) +
                      run_line(config));
  write_run_config(config, "eval-reid");
  return rows;
}

std::vector<AttrRow> run_eval_attr(const RunConfig& config) {
  validate_common(config);
  require_dataset(config);
  validate_cell(config.b, config.c);
  parse_epsilon_token(config.epsilon);
  const FeatureConfig fc = feature_config_of(config);

  const DatasetManifest manifest =
      load_dataset(config.dataset, config.age_groups, config.ethnic_groups);
  const AttrSplit split = split_attributes(manifest, config);
  if (split.train.empty() || split.eval.empty()) {
    throw std::runtime_error(
        "attribute: train or eval attribute set is empty");
  }

  const auto extract = [&](const std::vector<AttributeRecord>& records) {
    std::vector<std::vector<double>> features(records.size());
    parallel_for(records.size(), config.jobs, [&](std::size_t i) {
      features[i] = hist_features(
          load_ppm_file(
              (fs::path(manifest.root) / records[i].image_path).string()),
          fc);
    });
    return features;
  };
  const std::vector<std::vector<double>> train_features =
      extract(split.train);
  const std::vector<std::vector<double>> eval_features = extract(split.eval);

  ensure_dir(config.out);
  std::vector<AttrRow> rows;
  const AttrTask tasks[] = {AttrTask::gender, AttrTask::age_group,
                            AttrTask::ethnicity};
  for (std::size_t t = 0; t < 3; ++t) {
    const AttrTask task = tasks[t];
    std::vector<int> train_labels;
    std::vector<int> eval_labels;
    for (const auto& rec : split.train) {
      train_labels.push_back(attr_label(rec, task));
    }
    for (const auto& rec : split.eval) {
      eval_labels.push_back(attr_label(rec, task));
    }
    AttrTrainConfig train_config;
    train_config.epochs = config.attr_epochs;
    train_config.learning_rate = config.attr_learning_rate;
    train_config.weight_decay = config.attr_weight_decay;
    train_config.seed = derive_seed(config.seed, {kStreamAttrTask, t});
    const AttrTrainResult trained = train_classifier_on_features(
        train_features, train_labels, attr_classes(manifest, task), fc,
        to_string(task), train_config);
    save_loss_trace(trained.epoch_loss,
                    (fs::path(config.out) / ("loss_" + to_string(task) +
                                             ".csv"))
                        .string());

    AttrRow row;
    row.task = to_string(task);
    row.epsilon = config.epsilon;
    row.b = config.b;
    row.c = config.c;
    row.accuracy_pct = accuracy(trained.classifier, eval_features,
                                eval_labels);
    row.chance_uniform_pct = chance_level(
        eval_labels, attr_classes(manifest, task), ChanceKind::uniform);
    row.chance_majority_pct = chance_level(
        eval_labels, attr_classes(manifest, task), ChanceKind::majority);
    rows.push_back(row);
  }

  write_attr_csv(rows, (fs::path(config.out) / "report.csv").string());
  const Sensitivity sens =
      sensitivity(manifest.width, manifest.height, config.b, config.c);
  write_text_file((fs::path(config.out) / "table.txt").string(),
                  render_attr_table(rows, config.b, config.c, sens.delta_f,
                                    sens.strict_delta_f) +
                      run_line(config));
  write_run_config(config, "eval-attr");
  return rows;
}

struct CellResult {
  int b = 0;
  int c = 0;
  std::string epsilon;
  std::uint64_t cell_seed = 0;
  bool ok = false;
  std::string error;
  std::vector<EvalRow> reid_rows;
  std::vector<AttrRow> attr_rows;
};

std::string cell_label(int b, int c, const std::string& epsilon) {
  return "b" + std::to_string(b) + "_c" + std::to_string(c) + "_eps_" +
         epsilon;
}

CellResult run_sweep_cell(const RunConfig& base, int b, int c,
                          const std::string& epsilon) {
  CellResult result;
  result.b = b;
  result.c = c;
  result.epsilon = epsilon;
  result.cell_seed = sweep_cell_seed(base.seed, b, c, epsilon);

  const fs::path cell_dir =
      fs::path(base.out) / "cells" / cell_label(b, c, epsilon);

  RunConfig sub = base;
  sub.jobs = 1;  // cells are the unit of sweep parallelism
  sub.seed = result.cell_seed;
  sub.b = b;
  sub.c = c;
  sub.epsilon = epsilon;

  RunConfig obf = sub;
  obf.out = (cell_dir / "data").string();
  cmd_obfuscate(obf);

  RunConfig train = sub;
  train.dataset = obf.out;
  train.out = (cell_dir / "train").string();
  cmd_train(train);

  RunConfig reid = sub;
  reid.dataset = obf.out;
  reid.checkpoint = (cell_dir / "train" / "embedder.txt").string();
  reid.out = (cell_dir / "eval_reid").string();
  result.reid_rows = run_eval_reid(reid);

  RunConfig attr = sub;
  attr.dataset = obf.out;
  attr.out = (cell_dir / "eval_attr").string();
  result.attr_rows = run_eval_attr(attr);

  result.ok = true;
  return result;
}

std::string sweep_row_metadata(const RunConfig& config,
                               const CellResult& cell,
                               const Sensitivity& sens) {
  std::ostringstream out;
  out << cell.cell_seed << ',' << (config.strict ? 1 : 0) << ','
      << (config.midpoint ? 1 : 0) << ','
      << (config.centroid_all_cameras ? 1 : 0) << ',' << std::setprecision(17)
      << sens.delta_f << ',' << sens.strict_delta_f;
  return out.str();
}

}  // namespace

std::optional<double> parse_epsilon_token(const std::string& token) {
  if (token == "none") return std::nullopt;
  std::size_t consumed = 0;
  double value = 0.0;
  try {
    value = std::stod(token, &consumed);
  } catch (const std::exception&) {
    throw ConfigError("config: epsilon token '" + token +
                      "' is neither a real number nor \"none\"");
  }
  if (consumed != token.size() || !std::isfinite(value) || value <= 0.0) {
    throw ConfigError("config: epsilon must be a finite positive real, got " +
                      token);
  }
  return value;
}

RunConfig load_run_config(const std::string& json_path) {
  std::ifstream in(json_path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open " + json_path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("config: " + json_path + ": " + e.what());
  }
  if (!j.is_object()) {
    throw ConfigError("config: top level of " + json_path +
                      " must be a JSON object");
  }
  RunConfig cfg;
  apply_json(cfg, j);
  return cfg;
}

std::string resolved_config_json(const RunConfig& config,
                                 const std::string& command) {
  json j;
  j["command"] = command;
  j["dataset"] = config.dataset;
  j["out"] = config.out;
  j["seed"] = config.seed;
  j["jobs"] = config.jobs;
  j["epsilon"] = config.epsilon;
  j["b"] = config.b;
  j["c"] = config.c;
  j["strict"] = config.strict;
  j["midpoint"] = config.midpoint;
  json grid = json::array();
  for (const auto& [b, c] : config.grid) grid.push_back(json::array({b, c}));
  j["grid"] = std::move(grid);
  j["epsilons"] = config.epsilons;
  j["synth_ids"] = config.synth_ids;
  j["synth_cameras"] = config.synth_cameras;
  j["synth_imgs_per_pair"] = config.synth_imgs_per_pair;
  j["width"] = config.width;
  j["height"] = config.height;
  j["train_fraction"] = config.train_fraction;
  j["age_groups"] = config.age_groups;
  j["ethnic_groups"] = config.ethnic_groups;
  j["feature_grid"] = config.feature_grid;
  j["feature_bins"] = config.feature_bins;
  j["embed_dim"] = config.embed_dim;
  j["ctl_margin"] = config.ctl_margin;
  j["ctl_classes_per_batch"] = config.ctl_classes_per_batch;
  j["ctl_instances_per_class"] = config.ctl_instances_per_class;
  j["ctl_learning_rate"] = config.ctl_learning_rate;
  j["ctl_epochs"] = config.ctl_epochs;
  j["ctl_random_negative"] = config.ctl_random_negative;
  j["ctl_feature_jitter"] = config.ctl_feature_jitter;
  j["attr_epochs"] = config.attr_epochs;
  j["attr_learning_rate"] = config.attr_learning_rate;
  j["attr_weight_decay"] = config.attr_weight_decay;
  j["centroid_all_cameras"] = config.centroid_all_cameras;
  j["checkpoint"] = config.checkpoint;
  return j.dump(2) + "\n";
}

std::uint64_t sweep_cell_seed(std::uint64_t seed, int b, int c,
                              const std::string& epsilon_token) {
  return derive_seed(seed, {kStreamCell, static_cast<std::uint64_t>(b),
                            static_cast<std::uint64_t>(c),
                            fnv1a64(epsilon_token)});
}

void cmd_synth(const RunConfig& config) {
  validate_common(config);
  require(config.synth_ids >= 2, "config: synth_ids must be >= 2");
  require(config.synth_cameras >= 2, "config: synth_cameras must be >= 2");
  require(config.synth_imgs_per_pair >= 1,
          "config: synth_imgs_per_pair must be >= 1");
  require(config.width >= 1 && config.height >= 1,
          "config: image dimensions must be positive");
  require(config.train_fraction >= 0.0 && config.train_fraction < 1.0,
          "config: train_fraction must lie in [0, 1)");
  require(config.age_groups >= 2 && config.ethnic_groups >= 2,
          "config: attribute cardinalities must be >= 2");

  SynthConfig synth;
  synth.n_ids = config.synth_ids;
  synth.n_cameras = config.synth_cameras;
  synth.imgs_per_pair = config.synth_imgs_per_pair;
  synth.width = config.width;
  synth.height = config.height;
  synth.train_fraction = config.train_fraction;
  synth.age_groups = config.age_groups;
  synth.ethnic_groups = config.ethnic_groups;
  synth.seed = config.seed;

  ensure_dir(config.out);
  synth_generate(synth, config.out);
  write_run_config(config, "synth");
}

void cmd_obfuscate(const RunConfig& config) {
  validate_common(config);
  require_dataset(config);
  const PrivacyParams params = cell_params(config);

  DatasetManifest manifest =
      load_dataset(config.dataset, config.age_groups, config.ethnic_groups);
  const std::vector<std::string> paths = manifest_image_paths(manifest);
  if (paths.empty()) {
    throw std::runtime_error("obfuscate: dataset references no images");
  }

  ensure_dir(config.out);
  parallel_for(paths.size(), config.jobs, [&](std::size_t i) {
    const std::string src =
        (fs::path(manifest.root) / paths[i]).string();
    const std::string dst = (fs::path(config.out) / paths[i]).string();
    ensure_dir(fs::path(dst).parent_path().string());
    Rng rng(derive_seed(config.seed, {kStreamObfuscate, i}));
    save_ppm_file(obfuscate(load_ppm_file(src), params, rng), dst);
  });

  manifest.root = config.out;
  save_manifest_csvs(manifest);
  write_run_config(config, "obfuscate");
}

void cmd_train(const RunConfig& config) {
  validate_common(config);
  require_dataset(config);
  require(config.embed_dim >= 1, "config: embed_dim must be >= 1");
  const FeatureConfig fc = feature_config_of(config);
  const CtlConfig ctl = ctl_config_of(config);

  const DatasetManifest manifest =
      load_dataset(config.dataset, config.age_groups, config.ethnic_groups);
  const TrainResult result =
      train_embedder(manifest, fc, config.embed_dim, ctl);

  ensure_dir(config.out);
  save_embedder(result.embedder,
                (fs::path(config.out) / "embedder.txt").string());
  save_loss_trace(result.epoch_loss,
                  (fs::path(config.out) / "loss_trace.csv").string());
  write_run_config(config, "train");
}

void cmd_eval_reid(const RunConfig& config) { run_eval_reid(config); }

void cmd_eval_attr(const RunConfig& config) { run_eval_attr(config); }

void cmd_sweep(const RunConfig& config) {
  validate_common(config);
  require_dataset(config);
  require(!config.grid.empty(), "config: grid must be non-empty");
  require(!config.epsilons.empty(), "config: epsilons must be non-empty");
  for (const auto& [b, c] : config.grid) validate_cell(b, c);
  for (const auto& token : config.epsilons) parse_epsilon_token(token);
  feature_config_of(config);
  ctl_config_of(config);

  // The input manifest is loaded once up front so a bad dataset fails the
  // whole sweep instead of every cell, and for the per-(b,c) captions.
  const DatasetManifest manifest =
      load_dataset(config.dataset, config.age_groups, config.ethnic_groups);

  struct CellSpec {
    int b;
    int c;
    std::string epsilon;
  };
  std::vector<CellSpec> specs;
  for (const auto& [b, c] : config.grid) {
    for (const auto& token : config.epsilons) {
      specs.push_back({b, c, token});
    }
  }

  ensure_dir(config.out);
  std::vector<CellResult> results(specs.size());
  parallel_for(specs.size(), config.jobs, [&](std::size_t i) {
    const CellSpec& spec = specs[i];
    try {
      results[i] = run_sweep_cell(config, spec.b, spec.c, spec.epsilon);
    } catch (const std::exception& e) {
      results[i].b = spec.b;
      results[i].c = spec.c;
      results[i].epsilon = spec.epsilon;
      results[i].cell_seed =
          sweep_cell_seed(config.seed, spec.b, spec.c, spec.epsilon);
      results[i].ok = false;
      results[i].error = e.what();
    }
  });

  // Single-threaded merge in grid x epsilon order.
  std::ostringstream reid_csv;
  std::ostringstream attr_csv;
  reid_csv << "mode,epsilon,b,c,mAP,top1,"
              "seed,strict,midpoint,centroid_all_cameras,delta_f,"
              "strict_delta_f\n";
  attr_csv << "task,epsilon,b,c,accuracy,chance_uniform,chance_majority,"
              "seed,strict,midpoint,centroid_all_cameras,delta_f,"
              "strict_delta_f\n";
  std::vector<std::string> failures;
  char buf[64];
  for (const CellResult& cell : results) {
    if (!cell.ok) {
      failures.push_back(cell_label(cell.b, cell.c, cell.epsilon) + ": " +
                         cell.error);
      continue;
    }
    const Sensitivity sens =
        sensitivity(manifest.width, manifest.height, cell.b, cell.c);
    const std::string meta = sweep_row_metadata(config, cell, sens);
    for (const EvalRow& row : cell.reid_rows) {
      std::snprintf(buf, sizeof(buf), "%.4f,%.4f", row.map_pct, row.top1_pct);
      reid_csv << row.mode << ',' << row.epsilon << ',' << row.b << ','
               << row.c << ',' << buf << ',' << meta << '\n';
    }
    for (const AttrRow& row : cell.attr_rows) {
      std::snprintf(buf, sizeof(buf), "%.4f,%.4f,%.4f", row.accuracy_pct,
                    row.chance_uniform_pct, row.chance_majority_pct);
      attr_csv << row.task << ',' << row.epsilon << ',' << row.b << ','
               << row.c << ',' << buf << ',' << meta << '\n';
    }
  }
  write_text_file((fs::path(config.out) / "sweep_reid.csv").string(),
                  reid_csv.str());
  write_text_file((fs::path(config.out) / "sweep_attr.csv").string(),
                  attr_csv.str());
  if (!failures.empty()) {
    std::ostringstream err;
    for (const auto& line : failures) err << line << '\n';
    write_text_file((fs::path(config.out) / "errors.txt").string(),
                    err.str());
  }

  const fs::path tables_dir = fs::path(config.out) / "tables";
  ensure_dir(tables_dir.string());
  for (const auto& [b, c] : config.grid) {
    std::vector<EvalRow> reid_rows;
    std::vector<AttrRow> attr_rows;
    for (const CellResult& cell : results) {
      if (!cell.ok || cell.b != b || cell.c != c) continue;
      reid_rows.insert(reid_rows.end(), cell.reid_rows.begin(),
                       cell.reid_rows.end());
      attr_rows.insert(attr_rows.end(), cell.attr_rows.begin(),
                       cell.attr_rows.end());
    }
    // A (b, c) whose every cell failed has no rows and possibly no valid
    // sensitivity either; its failure is already recorded in errors.txt.
    if (reid_rows.empty() && attr_rows.empty()) continue;
    const Sensitivity sens =
        sensitivity(manifest.width, manifest.height, b, c);
    const std::string suffix =
        "b" + std::to_string(b) + "_c" + std::to_string(c) + ".txt";
    write_text_file(
        (tables_dir / ("reid_" + suffix)).string(),
        render_reid_table(reid_rows, b, c, sens.delta_f,
                          sens.strict_delta_f) +
            run_line(config));
    write_text_file(
        (tables_dir / ("attr_" + suffix)).string(),
        render_attr_table(attr_rows, b, c, sens.delta_f,
                          sens.strict_delta_f) +
            run_line(config));
  }

  write_run_config(config, "sweep");

  if (!failures.empty()) {
    throw std::runtime_error(
        "sweep: " + std::to_string(failures.size()) + " of " +
        std::to_string(specs.size()) +
        " cells failed; partial reports written, details in errors.txt");
  }
}

}  // namespace dpreid
