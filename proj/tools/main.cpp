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

#include <cstdint>
#include <cstdio>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "dpreid/commands.hpp"

namespace {

// Temporaries the CLI11 options bind to. Only values the user actually set
// are copied into the RunConfig, so flags override config-file values which
// override defaults.
struct Flags {
  std::string config;
  std::string dataset;
  std::string out;
  std::string checkpoint;
  std::string epsilon;
  std::string grid;
  std::string epsilons;
  std::uint64_t seed = 0;
  int jobs = 0;
  int b = 0;
  int c = 0;
  int synth_ids = 0;
  int synth_cameras = 0;
  int synth_imgs_per_pair = 0;
  int width = 0;
  int height = 0;
  int age_groups = 0;
  int ethnic_groups = 0;
  int feature_grid = 0;
  int feature_bins = 0;
  int embed_dim = 0;
  int ctl_classes_per_batch = 0;
  int ctl_instances_per_class = 0;
  int ctl_epochs = 0;
  int attr_epochs = 0;
  double train_fraction = 0.0;
  double ctl_margin = 0.0;
  double ctl_learning_rate = 0.0;
  double attr_learning_rate = 0.0;
  double attr_weight_decay = 0.0;
  bool strict = false;
  bool midpoint = false;
  bool centroid_all_cameras = false;
  bool ctl_random_negative = false;
  double ctl_feature_jitter = 0.0;
};

std::vector<std::string> split_on(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = text.find(sep, start);
    if (end == std::string::npos) {
      out.push_back(text.substr(start));
      break;
    }
    out.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

std::vector<std::pair<int, int>> parse_grid(const std::string& text) {
  std::vector<std::pair<int, int>> grid;
  for (const std::string& token : split_on(text, ',')) {
    const std::size_t x = token.find('x');
    if (x == std::string::npos || x == 0 || x + 1 >= token.size()) {
      throw dpreid::ConfigError("config: grid entry '" + token +
                                "' is not of the form BxC");
    }
    try {
      grid.emplace_back(std::stoi(token.substr(0, x)),
                        std::stoi(token.substr(x + 1)));
    } catch (const std::exception&) {
      throw dpreid::ConfigError("config: grid entry '" + token +
                                "' is not of the form BxC");
    }
  }
  if (grid.empty()) {
    throw dpreid::ConfigError("config: --grid must list at least one BxC");
  }
  return grid;
}

void add_common(CLI::App* sub, Flags& flags) {
  sub->add_option("--config", flags.config,
                  "JSON config file (flags override its values)");
  sub->add_option("--seed", flags.seed, "base RNG seed");
  sub->add_option("--jobs", flags.jobs, "max concurrent workers");
  sub->add_flag("--strict", flags.strict,
                "scale noise with the worst-case L1 bound instead of the "
                "default calibration constant");
  sub->add_option("--out", flags.out, "output directory");
}

void add_dataset(CLI::App* sub, Flags& flags) {
  sub->add_option("--dataset", flags.dataset, "input dataset root");
  sub->add_option("--age-groups", flags.age_groups,
                  "age class cardinality of the attribute labels");
  sub->add_option("--ethnic-groups", flags.ethnic_groups,
                  "ethnicity class cardinality of the attribute labels");
}

void add_mechanism(CLI::App* sub, Flags& flags) {
  sub->add_option("--epsilon", flags.epsilon,
                  "privacy budget: a positive real, or \"none\" to disable "
                  "noise");
  sub->add_option("-b,--block-side", flags.b, "pixelisation block side");
  sub->add_option("-c,--bin-width", flags.c,
                  "colour quantisation bin width (must divide 256)");
  sub->add_flag("--midpoint", flags.midpoint,
                "represent quantisation bins by their midpoints");
}

void add_features(CLI::App* sub, Flags& flags) {
  sub->add_option("--feature-grid", flags.feature_grid,
                  "histogram feature blocks per side");
  sub->add_option("--feature-bins", flags.feature_bins,
                  "histogram bins per channel");
}

void add_trainer(CLI::App* sub, Flags& flags) {
  sub->add_option("--embed-dim", flags.embed_dim, "embedding dimension");
  sub->add_option("--margin", flags.ctl_margin, "triplet margin");
  sub->add_option("--classes-per-batch", flags.ctl_classes_per_batch,
                  "identities per training batch");
  sub->add_option("--instances-per-class", flags.ctl_instances_per_class,
                  "images per identity per batch");
  sub->add_option("--lr", flags.ctl_learning_rate,
                  "embedder learning rate");
  sub->add_option("--epochs", flags.ctl_epochs, "embedder training epochs");
  sub->add_option("--jitter", flags.ctl_feature_jitter,
                  "training-time feature noise stddev");
  sub->add_flag("--random-negative", flags.ctl_random_negative,
                "pick the negative centroid uniformly instead of nearest");
}

void add_attr(CLI::App* sub, Flags& flags) {
  sub->add_option("--attr-epochs", flags.attr_epochs,
                  "attribute classifier training epochs");
  sub->add_option("--attr-decay", flags.attr_weight_decay,
                  "attribute classifier L2 weight decay");
  sub->add_option("--attr-lr", flags.attr_learning_rate,
                  "attribute classifier learning rate");
}

void add_centroid_toggle(CLI::App* sub, Flags& flags) {
  sub->add_flag("--centroid-all-cameras", flags.centroid_all_cameras,
                "build gallery centroids from all samples instead of "
                "excluding the query's camera");
}

dpreid::RunConfig resolve(const CLI::App* sub, const Flags& flags) {
  const auto counted = [sub](const char* name) {
    const CLI::Option* opt = sub->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };

  dpreid::RunConfig cfg;
  if (counted("--config")) cfg = dpreid::load_run_config(flags.config);

  const std::vector<std::pair<const char*, std::function<void()>>> overrides =
      {
          {"--dataset", [&] { cfg.dataset = flags.dataset; }},
          {"--out", [&] { cfg.out = flags.out; }},
          {"--seed", [&] { cfg.seed = flags.seed; }},
          {"--jobs", [&] { cfg.jobs = flags.jobs; }},
          {"--strict", [&] { cfg.strict = flags.strict; }},
          {"--epsilon", [&] { cfg.epsilon = flags.epsilon; }},
          {"--block-side", [&] { cfg.b = flags.b; }},
          {"--bin-width", [&] { cfg.c = flags.c; }},
          {"--midpoint", [&] { cfg.midpoint = flags.midpoint; }},
          {"--grid", [&] { cfg.grid = parse_grid(flags.grid); }},
          {"--epsilons",
           [&] { cfg.epsilons = split_on(flags.epsilons, ','); }},
          {"--ids", [&] { cfg.synth_ids = flags.synth_ids; }},
          {"--cameras", [&] { cfg.synth_cameras = flags.synth_cameras; }},
          {"--imgs-per-pair",
           [&] { cfg.synth_imgs_per_pair = flags.synth_imgs_per_pair; }},
          {"--width", [&] { cfg.width = flags.width; }},
          {"--height", [&] { cfg.height = flags.height; }},
          {"--train-fraction",
           [&] { cfg.train_fraction = flags.train_fraction; }},
          {"--age-groups", [&] { cfg.age_groups = flags.age_groups; }},
          {"--ethnic-groups",
           [&] { cfg.ethnic_groups = flags.ethnic_groups; }},
          {"--feature-grid", [&] { cfg.feature_grid = flags.feature_grid; }},
          {"--feature-bins", [&] { cfg.feature_bins = flags.feature_bins; }},
          {"--embed-dim", [&] { cfg.embed_dim = flags.embed_dim; }},
          {"--margin", [&] { cfg.ctl_margin = flags.ctl_margin; }},
          {"--classes-per-batch",
           [&] { cfg.ctl_classes_per_batch = flags.ctl_classes_per_batch; }},
          {"--instances-per-class",
           [&] {
             cfg.ctl_instances_per_class = flags.ctl_instances_per_class;
           }},
          {"--lr", [&] { cfg.ctl_learning_rate = flags.ctl_learning_rate; }},
          {"--epochs", [&] { cfg.ctl_epochs = flags.ctl_epochs; }},
          {"--random-negative",
           [&] { cfg.ctl_random_negative = flags.ctl_random_negative; }},
          {"--jitter",
           [&] { cfg.ctl_feature_jitter = flags.ctl_feature_jitter; }},
          {"--attr-epochs", [&] { cfg.attr_epochs = flags.attr_epochs; }},
          {"--attr-lr",
           [&] { cfg.attr_learning_rate = flags.attr_learning_rate; }},
          {"--attr-decay",
           [&] { cfg.attr_weight_decay = flags.attr_weight_decay; }},
          {"--centroid-all-cameras",
           [&] { cfg.centroid_all_cameras = flags.centroid_all_cameras; }},
          {"--checkpoint", [&] { cfg.checkpoint = flags.checkpoint; }},
      };
  for (const auto& [name, apply] : overrides) {
    if (counted(name)) apply();
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Differentially private image obfuscation with a person "
      "re-identification and attribute-inference evaluation harness"};
  app.require_subcommand(1);
  Flags flags;

  CLI::App* synth =
      app.add_subcommand("synth", "generate a synthetic labelled dataset");
  add_common(synth, flags);
  synth->add_option("--ids", flags.synth_ids, "number of identities");
  synth->add_option("--cameras", flags.synth_cameras, "number of cameras");
  synth->add_option("--imgs-per-pair", flags.synth_imgs_per_pair,
                    "images per (identity, camera) pair");
  synth->add_option("--width", flags.width, "image width");
  synth->add_option("--height", flags.height, "image height");
  synth->add_option("--train-fraction", flags.train_fraction,
                    "fraction of identities assigned to the train split");
  synth->add_option("--age-groups", flags.age_groups,
                    "age class cardinality");
  synth->add_option("--ethnic-groups", flags.ethnic_groups,
                    "ethnicity class cardinality");

  CLI::App* obfuscate = app.add_subcommand(
      "obfuscate", "apply the privacy mechanism to every dataset image");
  add_common(obfuscate, flags);
  add_dataset(obfuscate, flags);
  add_mechanism(obfuscate, flags);

  CLI::App* train = app.add_subcommand(
      "train", "train the embedder on the dataset's train split");
  add_common(train, flags);
  add_dataset(train, flags);
  add_features(train, flags);
  add_trainer(train, flags);

  CLI::App* eval_reid = app.add_subcommand(
      "eval-reid",
      "evaluate a trained embedder on the query/gallery split");
  add_common(eval_reid, flags);
  add_dataset(eval_reid, flags);
  add_mechanism(eval_reid, flags);
  add_centroid_toggle(eval_reid, flags);
  eval_reid->add_option("--checkpoint", flags.checkpoint,
                        "embedder checkpoint file");

  CLI::App* eval_attr = app.add_subcommand(
      "eval-attr", "train and evaluate the demographic-attribute probes");
  add_common(eval_attr, flags);
  add_dataset(eval_attr, flags);
  add_mechanism(eval_attr, flags);
  add_features(eval_attr, flags);
  add_attr(eval_attr, flags);

  CLI::App* sweep = app.add_subcommand(
      "sweep",
      "run obfuscate/train/eval for every (b, c) x epsilon grid cell");
  add_common(sweep, flags);
  add_dataset(sweep, flags);
  sweep->add_flag("--midpoint", flags.midpoint,
                  "represent quantisation bins by their midpoints");
  sweep->add_option("--grid", flags.grid,
                    "comma-separated BxC list, e.g. 1x64,2x32,4x16");
  sweep->add_option("--epsilons", flags.epsilons,
                    "comma-separated epsilon list, e.g. 0.001,1,none");
  add_features(sweep, flags);
  add_trainer(sweep, flags);
  add_attr(sweep, flags);
  add_centroid_toggle(sweep, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const CLI::App* sub = app.get_subcommands().front();
  try {
    const dpreid::RunConfig cfg = resolve(sub, flags);
    if (sub == synth) {
      dpreid::cmd_synth(cfg);
    } else if (sub == obfuscate) {
      dpreid::cmd_obfuscate(cfg);
    } else if (sub == train) {
      dpreid::cmd_train(cfg);
    } else if (sub == eval_reid) {
      dpreid::cmd_eval_reid(cfg);
    } else if (sub == eval_attr) {
      dpreid::cmd_eval_attr(cfg);
    } else if (sub == sweep) {
      dpreid::cmd_sweep(cfg);
    }
  } catch (const dpreid::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
