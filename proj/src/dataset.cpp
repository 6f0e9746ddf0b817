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

#include "dpreid/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "dpreid/image.hpp"
#include "dpreid/rng.hpp"

namespace fs = std::filesystem;

namespace dpreid {

std::string to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::query: return "query";
    case Split::gallery: return "gallery";
  }
  throw std::logic_error("unknown split");
}

Split parse_split(const std::string& text) {
  if (text == "train") return Split::train;
  if (text == "query") return Split::query;
  if (text == "gallery") return Split::gallery;
  throw std::runtime_error("manifest: unknown split value: " + text);
}

std::pair<int, int> parse_market_filename(const std::string& name) {
  // <id>_c<cam>s<seq>_...
  const auto fail = [&]() -> std::pair<int, int> {
    throw std::runtime_error(
        "dataset: filename does not match <id>_c<cam>s<seq>_...: " + name);
  };
  std::size_t pos = 0;
  const auto read_digits = [&](int* out) {
    if (pos >= name.size() || !std::isdigit(static_cast<unsigned char>(
                                  name[pos]))) {
      return false;
    }
    long value = 0;
    while (pos < name.size() &&
           std::isdigit(static_cast<unsigned char>(name[pos]))) {
      value = value * 10 + (name[pos] - '0');
      if (value > 1'000'000'000L) return false;
      ++pos;
    }
    *out = static_cast<int>(value);
    return true;
  };
  int person_id = 0;
  int camera_id = 0;
  int seq = 0;
  if (!read_digits(&person_id)) fail();
  if (pos >= name.size() || name[pos] != '_') fail();
  ++pos;
  if (pos >= name.size() || name[pos] != 'c') fail();
  ++pos;
  if (!read_digits(&camera_id)) fail();
  if (pos >= name.size() || name[pos] != 's') fail();
  ++pos;
  if (!read_digits(&seq)) fail();
  if (pos >= name.size() || name[pos] != '_') fail();
  if (camera_id < 1) fail();
  return {person_id, camera_id};
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

int parse_int_field(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const int value = std::stoi(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw std::runtime_error("manifest: bad integer for " + what + ": '" +
                             text + "'");
  }
}

// Opens the referenced image and folds its dimensions into the manifest,
// rejecting mixed sizes.
void check_image(DatasetManifest* manifest, const std::string& rel_path) {
  const fs::path full = fs::path(manifest->root) / rel_path;
  ImageRGB img = load_ppm_file(full.string());
  if (manifest->width == 0) {
    manifest->width = img.width();
    manifest->height = img.height();
  } else if (img.width() != manifest->width ||
             img.height() != manifest->height) {
    throw std::runtime_error(
        "manifest: image dimension mismatch at " + rel_path + " (" +
        std::to_string(img.width()) + "x" + std::to_string(img.height()) +
        " vs " + std::to_string(manifest->width) + "x" +
        std::to_string(manifest->height) + ")");
  }
}

void load_manifest_into(DatasetManifest* manifest,
                        const std::string& csv_path) {
  std::ifstream in(csv_path);
  if (!in) {
    throw std::runtime_error("manifest: cannot open " + csv_path);
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("manifest: empty file " + csv_path);
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::string header = line;
  const bool person_kind = header == "path,person_id,camera_id,split";
  const bool attr_kind = header == "path,gender,age_group,ethnicity";
  if (!person_kind && !attr_kind) {
    throw std::runtime_error("manifest: unrecognised header '" + header +
                             "' in " + csv_path);
  }
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 4) {
      throw std::runtime_error("manifest: expected 4 columns, got " +
                               std::to_string(fields.size()) + " in " +
                               csv_path);
    }
    if (person_kind) {
      PersonRecord rec;
      rec.image_path = fields[0];
      rec.person_id = parse_int_field(fields[1], "person_id");
      rec.camera_id = parse_int_field(fields[2], "camera_id");
      rec.split = parse_split(fields[3]);
      if (rec.person_id < 0) {
        throw std::runtime_error("manifest: person_id must be >= 0");
      }
      if (rec.camera_id < 1) {
        throw std::runtime_error("manifest: camera_id must be >= 1");
      }
      check_image(manifest, rec.image_path);
      manifest->persons.push_back(std::move(rec));
    } else {
      AttributeRecord rec;
      rec.image_path = fields[0];
      rec.gender = parse_int_field(fields[1], "gender");
      rec.age_group = parse_int_field(fields[2], "age_group");
      rec.ethnicity = parse_int_field(fields[3], "ethnicity");
      if (rec.gender < 0 || rec.gender >= 2) {
        throw std::runtime_error("manifest: gender out of range [0,2)");
      }
      if (rec.age_group < 0 || rec.age_group >= manifest->age_groups) {
        throw std::runtime_error("manifest: age_group out of range [0," +
                                 std::to_string(manifest->age_groups) + ")");
      }
      if (rec.ethnicity < 0 || rec.ethnicity >= manifest->ethnic_groups) {
        throw std::runtime_error("manifest: ethnicity out of range [0," +
                                 std::to_string(manifest->ethnic_groups) +
                                 ")");
      }
      check_image(manifest, rec.image_path);
      manifest->attributes.push_back(std::move(rec));
    }
  }
}

}  // namespace

DatasetManifest load_manifest(const std::string& csv_path, int age_groups,
                              int ethnic_groups) {
  DatasetManifest manifest;
  manifest.root = fs::path(csv_path).parent_path().string();
  if (manifest.root.empty()) manifest.root = ".";
  manifest.age_groups = age_groups;
  manifest.ethnic_groups = ethnic_groups;
  load_manifest_into(&manifest, csv_path);
  return manifest;
}

DatasetManifest load_dataset(const std::string& root, int age_groups,
                             int ethnic_groups) {
  DatasetManifest manifest;
  manifest.root = root;
  manifest.age_groups = age_groups;
  manifest.ethnic_groups = ethnic_groups;
  const fs::path persons = fs::path(root) / "persons.csv";
  const fs::path attributes = fs::path(root) / "attributes.csv";
  bool any = false;
  if (fs::exists(persons)) {
    load_manifest_into(&manifest, persons.string());
    any = true;
  }
  if (fs::exists(attributes)) {
    load_manifest_into(&manifest, attributes.string());
    any = true;
  }
  if (!any) {
    throw std::runtime_error(
        "dataset: neither persons.csv nor attributes.csv found under " +
        root);
  }
  return manifest;
}

DatasetManifest scan_market_directory(const std::string& root) {
  static const std::pair<const char*, Split> kSubdirs[] = {
      {"train", Split::train},
      {"bounding_box_train", Split::train},
      {"query", Split::query},
      {"gallery", Split::gallery},
      {"bounding_box_test", Split::gallery},
  };
  DatasetManifest manifest;
  manifest.root = root;
  bool any = false;
  for (const auto& [subdir, split] : kSubdirs) {
    const fs::path dir = fs::path(root) / subdir;
    if (!fs::is_directory(dir)) continue;
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".ppm") {
        names.push_back(entry.path().filename().string());
      }
    }
    std::sort(names.begin(), names.end());
    for (const auto& name : names) {
      const auto [person_id, camera_id] = parse_market_filename(name);
      PersonRecord rec;
      rec.image_path = (fs::path(subdir) / name).string();
      rec.person_id = person_id;
      rec.camera_id = camera_id;
      rec.split = split;
      check_image(&manifest, rec.image_path);
      manifest.persons.push_back(std::move(rec));
      any = true;
    }
  }
  if (!any) {
    throw std::runtime_error(
        "dataset: no .ppm files found in recognised subdirectories of " +
        root);
  }
  return manifest;
}

void save_manifest_csvs(const DatasetManifest& manifest) {
  if (!manifest.persons.empty()) {
    std::ofstream out(fs::path(manifest.root) / "persons.csv",
                      std::ios::trunc);
    out << "path,person_id,camera_id,split\n";
    for (const auto& rec : manifest.persons) {
      out << rec.image_path << ',' << rec.person_id << ',' << rec.camera_id
          << ',' << to_string(rec.split) << '\n';
    }
  }
  if (!manifest.attributes.empty()) {
    std::ofstream out(fs::path(manifest.root) / "attributes.csv",
                      std::ios::trunc);
    out << "path,gender,age_group,ethnicity\n";
    for (const auto& rec : manifest.attributes) {
      out << rec.image_path << ',' << rec.gender << ',' << rec.age_group
          << ',' << rec.ethnicity << '\n';
    }
  }
}

namespace {

struct Rgb {
  double r, g, b;
};

// h in [0,360), s and v in [0,1]; returns channels in [0,255].
Rgb hsv_to_rgb(double h, double s, double v) {
  const double c = v * s;
  const double hp = h / 60.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0.0, g = 0.0, b = 0.0;
  if (hp < 1.0) {
    r = c; g = x;
  } else if (hp < 2.0) {
    r = x; g = c;
  } else if (hp < 3.0) {
    g = c; b = x;
  } else if (hp < 4.0) {
    g = x; b = c;
  } else if (hp < 5.0) {
    r = x; b = c;
  } else {
    r = c; b = x;
  }
  const double m = v - c;
  return {(r + m) * 255.0, (g + m) * 255.0, (b + m) * 255.0};
}

struct IdentityLatent {
  Rgb torso;
  Rgb legs;
  Rgb hair;
  double torso_hue = 0.0;
  double leg_hue = 0.0;
  double torso_fraction = 0.5;  // of the body band occupied by the torso
};

constexpr std::uint64_t kStreamIdentity = 0x1d;
constexpr std::uint64_t kStreamCamera = 0xca;
constexpr std::uint64_t kStreamImage = 0x13;
constexpr std::uint64_t kStreamSplit = 0x51;

// Saturated colour with a G-vs-B margin so the hue half-plane (the synthetic
// gender label) survives camera tints, pixel noise, and histogram binning.
// The margin exceeds the 32-unit histogram bin width used by the default
// feature extractor, keeping the two channels in distinct bins.
Rgb draw_torso_colour(Rng* rng, double* hue_out) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    const double hue = rng->uniform(0.0, 360.0);
    const double sat = rng->uniform(0.55, 1.0);
    const double val = rng->uniform(0.45, 0.95);
    const Rgb rgb = hsv_to_rgb(hue, sat, val);
    if (std::abs(rgb.g - rgb.b) >= 64.0) {
      *hue_out = hue;
      return rgb;
    }
  }
  *hue_out = 90.0;
  return hsv_to_rgb(90.0, 0.8, 0.7);
}

// Hair colour from the same hue half-plane as the torso, so the fixed head
// band reinforces the torso's G-vs-B cue at a location legs never reach.
Rgb draw_hair_colour(Rng* rng, double torso_hue) {
  const double lo = torso_hue < 180.0 ? 0.0 : 180.0;
  for (int attempt = 0; attempt < 64; ++attempt) {
    const double hue = rng->uniform(lo, lo + 180.0);
    const double sat = rng->uniform(0.55, 1.0);
    const double val = rng->uniform(0.45, 0.95);
    const Rgb rgb = hsv_to_rgb(hue, sat, val);
    if (std::abs(rgb.g - rgb.b) >= 64.0) return rgb;
  }
  return hsv_to_rgb(lo + 90.0, 0.8, 0.7);
}

IdentityLatent draw_identity(Rng* rng) {
  IdentityLatent latent;
  latent.torso = draw_torso_colour(rng, &latent.torso_hue);
  latent.hair = draw_hair_colour(rng, latent.torso_hue);
  for (int attempt = 0; attempt < 64; ++attempt) {
    latent.leg_hue = rng->uniform(0.0, 360.0);
    const double sat = rng->uniform(0.55, 1.0);
    const double val = rng->uniform(0.45, 0.95);
    latent.legs = hsv_to_rgb(latent.leg_hue, sat, val);
    const double dist = std::abs(latent.legs.r - latent.torso.r) +
                        std::abs(latent.legs.g - latent.torso.g) +
                        std::abs(latent.legs.b - latent.torso.b);
    if (dist >= 120.0) break;
  }
  latent.torso_fraction = rng->uniform(0.35, 0.65);
  return latent;
}

struct CameraModel {
  double tint[3];
  double brightness;
};

CameraModel draw_camera(std::uint64_t seed, int camera_id) {
  Rng rng(derive_seed(seed, {kStreamCamera,
                             static_cast<std::uint64_t>(camera_id)}));
  CameraModel cam{};
  for (double& t : cam.tint) t = rng.uniform(0.97, 1.03);
  cam.brightness = rng.uniform(-12.0, 12.0);
  return cam;
}

}  // namespace

DatasetManifest synth_generate(const SynthConfig& config,
                               const std::string& root) {
  if (config.n_ids < 2) {
    throw std::invalid_argument("synth: need at least 2 identities");
  }
  if (config.n_cameras < 2) {
    throw std::invalid_argument("synth: need at least 2 cameras");
  }
  if (config.imgs_per_pair < 1) {
    throw std::invalid_argument("synth: imgs_per_pair must be >= 1");
  }
  if (config.width < 8 || config.height < 8) {
    throw std::invalid_argument("synth: images must be at least 8x8");
  }
  if (config.train_fraction < 0.0 || config.train_fraction > 1.0) {
    throw std::invalid_argument("synth: train_fraction must be in [0,1]");
  }
  if (config.age_groups < 2 || config.ethnic_groups < 2) {
    throw std::invalid_argument("synth: attribute cardinalities must be >= 2");
  }

  fs::create_directories(fs::path(root) / "images");

  // Deterministic identity split: shuffle, take the first chunk as train.
  std::vector<int> ids(config.n_ids);
  std::iota(ids.begin(), ids.end(), 1);
  Rng split_rng(derive_seed(config.seed, {kStreamSplit}));
  for (int i = config.n_ids - 1; i > 0; --i) {
    const int j = static_cast<int>(split_rng.uniform_index(
        static_cast<std::uint64_t>(i) + 1));
    std::swap(ids[i], ids[j]);
  }
  const int n_train = static_cast<int>(
      std::lround(config.n_ids * config.train_fraction));
  std::vector<bool> is_train(config.n_ids + 1, false);
  for (int i = 0; i < n_train; ++i) is_train[ids[i]] = true;

  std::vector<CameraModel> cameras;
  cameras.reserve(config.n_cameras);
  for (int cam = 1; cam <= config.n_cameras; ++cam) {
    cameras.push_back(draw_camera(config.seed, cam));
  }

  DatasetManifest manifest;
  manifest.root = root;
  manifest.width = config.width;
  manifest.height = config.height;
  manifest.age_groups = config.age_groups;
  manifest.ethnic_groups = config.ethnic_groups;

  const int w = config.width;
  const int h = config.height;
  const int hair_top = static_cast<int>(0.05 * h);
  const int body_top = static_cast<int>(0.12 * h);
  const int body_bottom = static_cast<int>(0.84 * h);

  for (int id = 1; id <= config.n_ids; ++id) {
    Rng id_rng(derive_seed(config.seed,
                           {kStreamIdentity, static_cast<std::uint64_t>(id)}));
    const IdentityLatent latent = draw_identity(&id_rng);

    const int gender = latent.torso_hue < 180.0 ? 0 : 1;
    const int age_group = std::min(
        config.age_groups - 1,
        static_cast<int>((latent.torso_fraction - 0.35) / 0.30 *
                         config.age_groups));
    const int ethnicity = std::min(
        config.ethnic_groups - 1,
        static_cast<int>(latent.leg_hue / 360.0 * config.ethnic_groups));

    const int torso_bottom =
        body_top + static_cast<int>(latent.torso_fraction *
                                    (body_bottom - body_top));

    // Base pattern lookup, before camera and per-image effects.
    const auto base = [&](int y, int /*x*/) -> Rgb {
      if (y < hair_top || y >= body_bottom) return {140.0, 140.0, 140.0};
      if (y < body_top) return latent.hair;
      if (y < torso_bottom) return latent.torso;
      return latent.legs;
    };

    for (int cam = 1; cam <= config.n_cameras; ++cam) {
      const CameraModel& camera = cameras[cam - 1];
      for (int img_idx = 0; img_idx < config.imgs_per_pair; ++img_idx) {
        Rng img_rng(derive_seed(
            config.seed,
            {kStreamImage, static_cast<std::uint64_t>(id),
             static_cast<std::uint64_t>(cam),
             static_cast<std::uint64_t>(img_idx)}));
        const int dy = img_rng.uniform_int(-2, 2);
        const int dx = img_rng.uniform_int(-2, 2);
        ImageF64 canvas = ImageF64::zero(w, h);
        for (int y = 0; y < h; ++y) {
          const int sy = std::clamp(y - dy, 0, h - 1);
          for (int x = 0; x < w; ++x) {
            const int sx = std::clamp(x - dx, 0, w - 1);
            const Rgb px = base(sy, sx);
            const double channels[3] = {px.r, px.g, px.b};
            for (int ch = 0; ch < 3; ++ch) {
              canvas.set(x, y, ch,
                         camera.tint[ch] * channels[ch] + camera.brightness +
                             img_rng.normal(0.0, 4.0));
            }
          }
        }
        char name[64];
        std::snprintf(name, sizeof(name), "%04d_c%ds1_%06d_00.ppm", id, cam,
                      img_idx);
        const std::string rel = std::string("images/") + name;
        save_ppm_file(clamp_round(canvas), (fs::path(root) / rel).string());

        PersonRecord person;
        person.image_path = rel;
        person.person_id = id;
        person.camera_id = cam;
        person.split = is_train[id]
                           ? Split::train
                           : (cam == 1 ? Split::query : Split::gallery);
        manifest.persons.push_back(person);

        AttributeRecord attr;
        attr.image_path = rel;
        attr.gender = gender;
        attr.age_group = age_group;
        attr.ethnicity = ethnicity;
        manifest.attributes.push_back(attr);
      }
    }
  }

  save_manifest_csvs(manifest);
  return manifest;
}

}  // namespace dpreid
