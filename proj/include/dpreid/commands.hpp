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

#ifndef DPREID_COMMANDS_HPP
#define DPREID_COMMANDS_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dpreid {

/// Raised on malformed or inconsistent configuration. The CLI maps it to
/// exit code 1; every other exception maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat run configuration shared by all subcommands. JSON config files use
/// exactly these field names; unknown keys are rejected. Precedence is
/// command-line flag over file value over built-in default.
struct RunConfig {
  // Common
  std::string dataset;        // input dataset root
  std::string out = "out";    // output directory
  std::uint64_t seed = 1;
  int jobs = 1;

  // Mechanism parameters for single-cell commands (obfuscate, eval labels)
  std::string epsilon = "none";  // positive real token, or "none"
  int b = 1;
  int c = 1;
  bool strict = false;
  bool midpoint = false;

  // Sweep grid; epsilons holds tokens like "0.001" or "none"
  std::vector<std::pair<int, int>> grid = {{1, 64}, {2, 32}, {4, 16}};
  std::vector<std::string> epsilons = {"0.001", "1", "1000", "1000000",
                                       "none"};

  // Synthetic dataset generation
  int synth_ids = 40;
  int synth_cameras = 3;
  int synth_imgs_per_pair = 8;
  int width = 64;
  int height = 128;
  double train_fraction = 0.5;
  int age_groups = 9;
  int ethnic_groups = 7;

  // Features and embedder
  int feature_grid = 4;
  int feature_bins = 8;
  int embed_dim = 32;

  // Centroid triplet training
  double ctl_margin = 0.3;
  int ctl_classes_per_batch = 8;
  int ctl_instances_per_class = 4;
  double ctl_learning_rate = 0.5;
  int ctl_epochs = 30;
  bool ctl_random_negative = false;
  double ctl_feature_jitter = 0.02;

  // Attribute classifiers
  int attr_epochs = 150;
  double attr_learning_rate = 4.0;
  double attr_weight_decay = 1e-3;

  // Retrieval
  bool centroid_all_cameras = false;  // disable camera-aware centroids
  std::string checkpoint;             // embedder checkpoint for eval-reid
};

/// Parses an epsilon token: "none" disables noise, anything else must be a
/// finite positive real. Throws ConfigError otherwise.
std::optional<double> parse_epsilon_token(const std::string& token);

/// Loads a JSON config file over the defaults. Throws ConfigError on
/// unreadable files, malformed JSON, unknown keys or ill-typed values.
RunConfig load_run_config(const std::string& json_path);

/// Serialises the fully resolved config as deterministic JSON (sorted keys,
/// trailing newline). Every command drops this next to its outputs.
std::string resolved_config_json(const RunConfig& config,
                                 const std::string& command);

/// Seed a sweep cell (b, c, epsilon) derives from the base seed. Exposed so
/// a cell can be re-run standalone: the individual commands invoked with
/// this seed reproduce the cell's artifacts byte for byte.
std::uint64_t sweep_cell_seed(std::uint64_t seed, int b, int c,
                              const std::string& epsilon_token);

/// Generates the synthetic dataset under config.out.
void cmd_synth(const RunConfig& config);

/// Obfuscates every image of config.dataset under (epsilon, b, c) into
/// config.out, carrying the manifest CSVs over with unchanged records.
void cmd_obfuscate(const RunConfig& config);

/// Trains the embedder on the train split of config.dataset; writes
/// embedder.txt and loss_trace.csv under config.out.
void cmd_train(const RunConfig& config);

/// Evaluates config.checkpoint on the query/gallery split of config.dataset
/// in both regular and centroid modes; writes report.csv and table.txt.
/// The (epsilon, b, c) fields label the report rows.
void cmd_eval_reid(const RunConfig& config);

/// Trains and evaluates the three attribute classifiers on config.dataset;
/// writes report.csv, table.txt and per-task loss traces.
void cmd_eval_attr(const RunConfig& config);

/// Runs the full grid x epsilon pipeline (obfuscate, train, eval reid, eval
/// attributes) with per-cell derived seeds, up to config.jobs cells at a
/// time. Merges per-cell reports into sweep_reid.csv / sweep_attr.csv and a
/// rendered table pair per (b, c). Cell failures are recorded in errors.txt
/// and rethrown after the merge so partial reports survive.
void cmd_sweep(const RunConfig& config);

}  // namespace dpreid

#endif  // DPREID_COMMANDS_HPP
