// Copyright 2026 The SFM Pose Authors. All Rights Reserved.
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

#ifndef SFM_DATASETS_HPP_
#define SFM_DATASETS_HPP_

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sfm/codec.hpp"
#include "sfm/image.hpp"

namespace sfm {

enum class DatasetTag { kMpii, kCoco, kFixture };

const char* dataset_tag_name(DatasetTag tag);
DatasetTag parse_dataset_tag(const std::string& name);

// Joint conventions of one dataset.
struct DatasetInfo {
  std::string name;
  std::vector<std::string> joint_names;
  FlipPairs flip_pairs;
  std::vector<int> upper_body;
  std::vector<std::pair<int, int>> skeleton;
  std::vector<double> oks_k;  // per joint, empty when OKS is not defined

  int num_joints() const { return static_cast<int>(joint_names.size()); }
};

// Directory holding coco.json and mpii.json. The SFM_DATA_DIR environment
// variable takes precedence over the build-time location.
std::string data_dir();
DatasetInfo load_dataset_info(const std::string& name);
// Synthetic blobs: no left/right structure, first half counts as upper body.
DatasetInfo fixture_info(int joints);
DatasetInfo dataset_info(DatasetTag tag, int fixture_joints = 16);

// One person instance in original image coordinates.
struct Sample {
  std::string image_id;
  std::string image_path;
  std::shared_ptr<const Image> image;  // set when held in memory
  int image_width = 0;                 // 0 when unknown
  int image_height = 0;
  double center_x = 0.0;
  double center_y = 0.0;
  double box_scale = 0.0;  // side of the square person box
  KeypointSet kps;
  std::optional<double> head_size;  // MPII and fixture
  std::optional<double> area;       // COCO
  DatasetTag tag = DatasetTag::kCoco;

  // Throws ValidationError when an invariant does not hold.
  void validate() const;
  // In-memory image, or decoded from image_path (checked against the
  // keypoints).
  std::shared_ptr<const Image> load_image() const;
};

// Standard COCO keypoints document. Image paths resolve against image_root
// (default: the directory of the file). Annotations carrying a "head_size"
// field are tagged as fixture samples. Output is ordered by
// (image id, annotation id).
std::vector<Sample> load_coco(const std::string& path,
                              const std::string& image_root = "");

// MPII-derived document, see docs/mpii_schema.md.
std::vector<Sample> load_mpii(const std::string& path,
                              const std::string& image_root = "");

// Samples plus the joint conventions they follow.
struct Dataset {
  DatasetInfo info;
  std::vector<Sample> samples;
};

struct FixtureSpec {
  int n_samples = 32;
  int image_size = 256;
  int n_joints = 16;
  double blob_sigma = 4.0;
  std::uint64_t seed = 0;
};

struct Fixture {
  std::vector<Sample> samples;  // images held in memory
  std::string annotations_path;  // empty unless written
};

// Deterministic in `spec`: black images with one colored
// Gaussian blob per joint (distinct hue per joint, minimum centre spacing
// of 6 sigma). Keypoints are the blob centres; head size is a quarter of
// the image side. When out_dir is non-empty, writes images/*.png and a
// COCO-style annotations.json there.
Fixture make_fixture(const FixtureSpec& spec, const std::string& out_dir = "");

// Blob color of joint j out of n.
std::array<float, 3> fixture_color(int j, int n);

}  // namespace sfm

#endif  // SFM_DATASETS_HPP_
