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

#ifndef DPREID_DATASET_HPP
#define DPREID_DATASET_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace dpreid {

enum class Split { train, query, gallery };

std::string to_string(Split split);
Split parse_split(const std::string& text);

/// Identity-labelled image: who it shows and which camera captured it.
struct PersonRecord {
  std::string image_path;  // relative to the dataset root
  int person_id = 0;
  int camera_id = 0;
  Split split = Split::train;
};

/// Demographic labels attached to an image. Class indices are bounded by
/// the manifest's declared cardinalities (gender is always binary).
struct AttributeRecord {
  std::string image_path;
  int gender = 0;
  int age_group = 0;
  int ethnicity = 0;
};

/// A validated collection of records sharing one image size. Person and
/// attribute records may coexist (the synthetic generator emits both).
struct DatasetManifest {
  std::string root;
  int width = 0;
  int height = 0;
  int age_groups = 9;
  int ethnic_groups = 7;
  std::vector<PersonRecord> persons;
  std::vector<AttributeRecord> attributes;
};

/// Extracts (person_id, camera_id) from a Market1501-style filename such as
/// "0002_c1s1_000451_03.jpg". Throws on names that do not match the
/// `<id>_c<cam>s<seq>_...` convention.
std::pair<int, int> parse_market_filename(const std::string& name);

/// Loads one manifest CSV rooted next to the file. Header
/// `path,person_id,camera_id,split` selects person records and header
/// `path,gender,age_group,ethnicity` selects attribute records. Every
/// referenced image is opened; mixed dimensions and out-of-range class
/// indices are rejected. Record order follows file order.
DatasetManifest load_manifest(const std::string& csv_path, int age_groups = 9,
                              int ethnic_groups = 7);

/// Loads a dataset root containing persons.csv and/or attributes.csv,
/// merging both into one manifest.
DatasetManifest load_dataset(const std::string& root, int age_groups = 9,
                             int ethnic_groups = 7);

/// Scans a Market1501-style directory tree (subdirectories named train/,
/// query/, gallery/ or the Market1501 originals bounding_box_train/,
/// query/, bounding_box_test/) and builds a person manifest from the
/// filenames. Only .ppm files are picked up.
DatasetManifest scan_market_directory(const std::string& root);

/// Writes manifest CSVs (persons.csv, attributes.csv) under manifest.root.
void save_manifest_csvs(const DatasetManifest& manifest);

struct SynthConfig {
  int n_ids = 40;
  int n_cameras = 3;
  int imgs_per_pair = 8;  // images per (identity, camera) pair
  int width = 64;
  int height = 128;
  double train_fraction = 0.5;  // fraction of identities held out for training
  int age_groups = 9;
  int ethnic_groups = 7;
  std::uint64_t seed = 1;
};

/// Generates a seeded synthetic multi-camera person dataset under root:
/// PPM images plus persons.csv and attributes.csv.
///
/// Each identity gets a latent appearance (hair/torso/leg colours and a
/// torso length fraction); each camera applies a fixed per-channel tint and
/// brightness shift; each image adds a translation of at most 2 px and
/// per-channel Gaussian noise (sigma 4). Attributes are deterministic
/// functions of the latent appearance, so they are learnable from clean
/// pixels: gender is the torso hue half-plane (G vs B, reinforced by the
/// fixed head band), age_group buckets the torso fraction, ethnicity
/// buckets the leg hue.
///
/// Split: per evaluation identity, the lowest camera's images become
/// queries and the remaining cameras' images the gallery; a disjoint
/// train_fraction of identities contributes all its images to train.
DatasetManifest synth_generate(const SynthConfig& config,
                               const std::string& root);

}  // namespace dpreid

#endif  // DPREID_DATASET_HPP
