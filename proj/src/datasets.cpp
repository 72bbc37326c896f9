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

#include "sfm/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "sfm/errors.hpp"
#include "sfm/metrics.hpp"
#include "sfm/random.hpp"

namespace sfm {

namespace fs = std::filesystem;
using nlohmann::json;

#ifndef SFM_DATA_DIR
#define SFM_DATA_DIR "data"
#endif

const char* dataset_tag_name(DatasetTag tag) {
  switch (tag) {
    case DatasetTag::kMpii: return "mpii";
    case DatasetTag::kCoco: return "coco";
    case DatasetTag::kFixture: return "fixture";
  }
  return "?";
}

DatasetTag parse_dataset_tag(const std::string& name) {
  if (name == "mpii") return DatasetTag::kMpii;
  if (name == "coco") return DatasetTag::kCoco;
  if (name == "fixture") return DatasetTag::kFixture;
  throw ConfigError("unknown dataset format '" + name +
                    "' (expected mpii, coco or fixture)");
}

namespace {

json read_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": byte " + std::to_string(e.byte) + ": " +
                     e.what());
  }
}

// Typed field access with a location in the message.
template <typename T>
T field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ParseError(where + ": missing field '" + key + "'");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(where + "." + key + ": " + e.what());
  }
}

std::string resolve_root(const std::string& path, const std::string& root) {
  if (!root.empty()) return root;
  return fs::path(path).parent_path().string();
}

std::string join_path(const std::string& root, const std::string& file) {
  if (root.empty() || fs::path(file).is_absolute()) return file;
  return (fs::path(root) / file).string();
}

int labeled_count(const KeypointSet& kps) {
  return static_cast<int>(std::count_if(
      kps.begin(), kps.end(), [](const Keypoint& k) { return k.v > 0; }));
}

}  // namespace

std::string data_dir() {
  if (const char* env = std::getenv("SFM_DATA_DIR"); env && *env) return env;
  return SFM_DATA_DIR;
}

DatasetInfo load_dataset_info(const std::string& name) {
  const std::string path = (fs::path(data_dir()) / (name + ".json")).string();
  const json doc = read_json(path);
  DatasetInfo info;
  info.name = field<std::string>(doc, "name", path);
  info.joint_names = field<std::vector<std::string>>(doc, "joint_names", path);
  info.flip_pairs = FlipPairs(
      field<std::vector<std::pair<int, int>>>(doc, "flip_pairs", path));
  info.upper_body = field<std::vector<int>>(doc, "upper_body", path);
  info.skeleton =
      field<std::vector<std::pair<int, int>>>(doc, "skeleton", path);
  if (doc.contains("oks_sigmas")) {
    for (double s : field<std::vector<double>>(doc, "oks_sigmas", path)) {
      info.oks_k.push_back(2.0 * s);
    }
    if (info.oks_k.size() != info.joint_names.size()) {
      throw ValidationError(path + ": oks_sigmas needs one entry per joint");
    }
  }
  info.flip_pairs.validate(info.num_joints());
  return info;
}

DatasetInfo fixture_info(int joints) {
  DatasetInfo info;
  info.name = "fixture";
  for (int j = 0; j < joints; ++j) {
    info.joint_names.push_back("blob_" + std::to_string(j));
    if (j < joints / 2) info.upper_body.push_back(j);
  }
  // A COCO-like constant keeps AP defined on fixtures.
  info.oks_k.assign(joints, 0.1);
  return info;
}

DatasetInfo dataset_info(DatasetTag tag, int fixture_joints) {
  switch (tag) {
    case DatasetTag::kMpii: return load_dataset_info("mpii");
    case DatasetTag::kCoco: return load_dataset_info("coco");
    case DatasetTag::kFixture: return fixture_info(fixture_joints);
  }
  return {};
}

void Sample::validate() const {
  const std::string where = "sample '" + image_id + "'";
  if (!(box_scale > 0)) throw ValidationError(where + ": box scale must be positive");
  if (labeled_count(kps) == 0) {
    throw ValidationError(where + ": no labeled keypoints");
  }
  const bool wants_head = tag != DatasetTag::kCoco;
  if (head_size.has_value() == area.has_value() ||
      head_size.has_value() != wants_head) {
    throw ValidationError(where + ": needs exactly one normalizer (" +
                          (wants_head ? "head size" : "area") + ")");
  }
  if (head_size && !(*head_size > 0)) {
    throw ValidationError(where + ": head size must be positive");
  }
  if (area && !(*area > 0)) throw ValidationError(where + ": area must be positive");
  if (image_width > 0 && image_height > 0) {
    for (std::size_t j = 0; j < kps.size(); ++j) {
      const auto& k = kps[j];
      if (k.v > 0 && !(k.x >= 0 && k.y >= 0 && k.x < image_width &&
                       k.y < image_height)) {
        throw ValidationError(where + ": joint " + std::to_string(j) +
                              " lies outside the " +
                              std::to_string(image_width) + "x" +
                              std::to_string(image_height) + " image");
      }
    }
  }
}

std::shared_ptr<const Image> Sample::load_image() const {
  if (image) return image;
  auto img = std::make_shared<Image>(sfm::load_image(image_path));
  if (image_width == 0) {
    Sample copy = *this;
    copy.image_width = img->width;
    copy.image_height = img->height;
    copy.validate();
  }
  return img;
}

std::vector<Sample> load_coco(const std::string& path,
                              const std::string& image_root) {
  const json doc = read_json(path);
  const std::string root = resolve_root(path, image_root);
  struct ImageEntry {
    std::string file;
    int width = 0, height = 0;
  };
  std::map<std::int64_t, ImageEntry> images;
  const auto imgs = field<json>(doc, "images", path);
  for (std::size_t i = 0; i < imgs.size(); ++i) {
    const std::string where = path + ": images[" + std::to_string(i) + "]";
    const auto& e = imgs[i];
    images[field<std::int64_t>(e, "id", where)] = ImageEntry{
        field<std::string>(e, "file_name", where),
        e.contains("width") ? field<int>(e, "width", where) : 0,
        e.contains("height") ? field<int>(e, "height", where) : 0};
  }
  struct Keyed {
    std::int64_t image_id, ann_id;
    Sample sample;
  };
  std::vector<Keyed> out;
  const auto anns = field<json>(doc, "annotations", path);
  for (std::size_t i = 0; i < anns.size(); ++i) {
    const std::string where =
        path + ": annotations[" + std::to_string(i) + "]";
    const auto& a = anns[i];
    const auto image_id = field<std::int64_t>(a, "image_id", where);
    const auto it = images.find(image_id);
    if (it == images.end()) {
      throw ParseError(where + ": unknown image_id " + std::to_string(image_id));
    }
    const auto flat = field<std::vector<double>>(a, "keypoints", where);
    if (flat.size() % 3 != 0 || flat.empty()) {
      throw ParseError(where + ".keypoints: expected x,y,v triples");
    }
    Sample s;
    for (std::size_t k = 0; k < flat.size(); k += 3) {
      s.kps.push_back(
          Keypoint{flat[k], flat[k + 1], static_cast<int>(flat[k + 2])});
    }
    if (labeled_count(s.kps) == 0) continue;
    const auto bbox = field<std::vector<double>>(a, "bbox", where);
    if (bbox.size() != 4) throw ParseError(where + ".bbox: expected 4 numbers");
    s.image_id = std::to_string(image_id);
    s.image_path = join_path(root, it->second.file);
    s.image_width = it->second.width;
    s.image_height = it->second.height;
    s.center_x = bbox[0] + bbox[2] / 2.0;
    s.center_y = bbox[1] + bbox[3] / 2.0;
    s.box_scale = 1.25 * std::max(bbox[2], bbox[3]);
    if (a.contains("head_size")) {
      s.tag = DatasetTag::kFixture;
      s.head_size = field<double>(a, "head_size", where);
    } else {
      s.tag = DatasetTag::kCoco;
      s.area = a.contains("area") ? field<double>(a, "area", where)
                                  : bbox[2] * bbox[3];
    }
    try {
      s.validate();
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
    out.push_back({image_id,
                   a.contains("id") ? field<std::int64_t>(a, "id", where)
                                    : static_cast<std::int64_t>(i),
                   std::move(s)});
  }
  std::stable_sort(out.begin(), out.end(), [](const Keyed& a, const Keyed& b) {
    return std::pair(a.image_id, a.ann_id) < std::pair(b.image_id, b.ann_id);
  });
  std::vector<Sample> samples;
  for (auto& k : out) samples.push_back(std::move(k.sample));
  return samples;
}

std::vector<Sample> load_mpii(const std::string& path,
                              const std::string& image_root) {
  const json doc = read_json(path);
  const std::string root = resolve_root(path, image_root);
  const auto records = field<json>(doc, "records", path);
  std::vector<Sample> samples;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const std::string where = path + ": records[" + std::to_string(i) + "]";
    const auto& r = records[i];
    Sample s;
    s.tag = DatasetTag::kMpii;
    s.image_path = join_path(root, field<std::string>(r, "image", where));
    s.image_id = field<std::string>(r, "image", where);
    const auto center = field<std::vector<double>>(r, "center", where);
    if (center.size() != 2) throw ParseError(where + ".center: expected [x, y]");
    s.center_x = center[0];
    s.center_y = center[1];
    // MPII person scale is in units of 200 px; the box gets the same 1.25
    // margin as COCO boxes.
    s.box_scale = 1.25 * 200.0 * field<double>(r, "scale", where);
    const auto joints =
        field<std::vector<std::vector<double>>>(r, "joints", where);
    const auto vis = field<std::vector<int>>(r, "joints_vis", where);
    if (joints.size() != vis.size()) {
      throw ParseError(where + ": joints and joints_vis differ in length");
    }
    for (std::size_t j = 0; j < joints.size(); ++j) {
      if (joints[j].size() != 2) {
        throw ParseError(where + ".joints[" + std::to_string(j) +
                         "]: expected [x, y]");
      }
      s.kps.push_back(Keypoint{joints[j][0], joints[j][1], vis[j] > 0 ? 2 : 0});
    }
    const auto hb = field<std::vector<double>>(r, "head_box", where);
    if (hb.size() != 4) {
      throw ParseError(where + ".head_box: expected [x1, y1, x2, y2]");
    }
    if ((hb[2] - hb[0]) * (hb[3] - hb[1]) == 0.0) {
      throw ValidationError(where + ": head box has zero area");
    }
    s.head_size = head_size_from_box(hb[0], hb[1], hb[2], hb[3]);
    if (r.contains("width")) s.image_width = field<int>(r, "width", where);
    if (r.contains("height")) s.image_height = field<int>(r, "height", where);
    if (labeled_count(s.kps) == 0) continue;
    try {
      s.validate();
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

std::array<float, 3> fixture_color(int j, int n) {
  // Evenly spaced hues at full saturation and value.
  const double h = 6.0 * j / std::max(n, 1);
  const int sector = static_cast<int>(h) % 6;
  const float f = static_cast<float>(h - std::floor(h));
  const float q = 1.0f - f;
  switch (sector) {
    case 0: return {1.0f, f, 0.0f};
    case 1: return {q, 1.0f, 0.0f};
    case 2: return {0.0f, 1.0f, f};
    case 3: return {0.0f, q, 1.0f};
    case 4: return {f, 0.0f, 1.0f};
    default: return {1.0f, 0.0f, q};
  }
}

Fixture make_fixture(const FixtureSpec& spec, const std::string& out_dir) {
  if (spec.n_samples < 1) throw ConfigError("fixture needs n_samples >= 1");
  if (spec.n_joints < 1) throw ConfigError("fixture needs n_joints >= 1");
  if (!(spec.blob_sigma > 0)) throw ConfigError("fixture blob sigma must be positive");
  const int size = spec.image_size;
  const double margin = 3.0 * spec.blob_sigma;
  const double spacing = 6.0 * spec.blob_sigma;
  if (size < 2 * margin + 1) throw ConfigError("fixture image too small for its blobs");

  Fixture fx;
  json images = json::array();
  json anns = json::array();
  if (!out_dir.empty()) fs::create_directories(fs::path(out_dir) / "images");

  for (int i = 0; i < spec.n_samples; ++i) {
    Rng rng = make_rng(spec.seed, Stream::kFixture, static_cast<std::uint64_t>(i));
    std::uniform_real_distribution<double> pos(margin, size - 1 - margin);
    KeypointSet kps;
    int attempts = 0;
    while (static_cast<int>(kps.size()) < spec.n_joints) {
      const Keypoint k{pos(rng), pos(rng), 2};
      const bool clear = std::all_of(kps.begin(), kps.end(), [&](const Keypoint& o) {
        return std::hypot(o.x - k.x, o.y - k.y) >= spacing;
      });
      if (clear) kps.push_back(k);
      if (++attempts > 100000) {
        throw ConfigError("fixture: cannot place " +
                          std::to_string(spec.n_joints) + " separated blobs");
      }
    }
    auto img = std::make_shared<Image>(size, size);
    const double inv2s2 = 1.0 / (2.0 * spec.blob_sigma * spec.blob_sigma);
    const int reach = static_cast<int>(std::ceil(margin));
    for (int j = 0; j < spec.n_joints; ++j) {
      const auto color = fixture_color(j, spec.n_joints);
      const int cx = static_cast<int>(std::lround(kps[j].x));
      const int cy = static_cast<int>(std::lround(kps[j].y));
      for (int y = std::max(0, cy - reach); y <= std::min(size - 1, cy + reach); ++y) {
        for (int x = std::max(0, cx - reach); x <= std::min(size - 1, cx + reach); ++x) {
          const double dx = x - kps[j].x, dy = y - kps[j].y;
          const float g = static_cast<float>(std::exp(-(dx * dx + dy * dy) * inv2s2));
          for (int ch = 0; ch < 3; ++ch) {
            img->at(x, y, ch) = std::max(img->at(x, y, ch), g * color[ch]);
          }
        }
      }
    }
    char name[32];
    std::snprintf(name, sizeof(name), "%06d.png", i);
    Sample s;
    s.tag = DatasetTag::kFixture;
    s.image_id = std::to_string(i + 1);
    s.image_path = (fs::path(out_dir.empty() ? "." : out_dir) / "images" / name).string();
    s.image_width = size;
    s.image_height = size;
    s.center_x = s.center_y = size / 2.0;
    s.box_scale = size;
    s.kps = kps;
    s.head_size = size / 4.0;
    if (!out_dir.empty()) {
      save_image(*img, s.image_path);
      // Store what a reader will decode so memory and disk agree.
      img = std::make_shared<Image>(sfm::load_image(s.image_path));
    }
    s.image = img;
    s.validate();

    images.push_back({{"id", i + 1},
                      {"file_name", std::string("images/") + name},
                      {"width", size},
                      {"height", size}});
    std::vector<double> flat;
    for (const auto& k : kps) {
      flat.insert(flat.end(), {k.x, k.y, static_cast<double>(k.v)});
    }
    // bbox chosen so that the 1.25 box margin gives the full image.
    const double side = size / 1.25;
    const double off = (size - side) / 2.0;
    anns.push_back({{"id", i + 1},
                    {"image_id", i + 1},
                    {"category_id", 1},
                    {"keypoints", flat},
                    {"num_keypoints", spec.n_joints},
                    {"bbox", {off, off, side, side}},
                    {"head_size", *s.head_size}});
    fx.samples.push_back(std::move(s));
  }

  if (!out_dir.empty()) {
    json names = json::array();
    for (int j = 0; j < spec.n_joints; ++j) names.push_back("blob_" + std::to_string(j));
    json doc = {{"images", images},
                {"annotations", anns},
                {"categories",
                 {{{"id", 1}, {"name", "person"}, {"keypoints", names},
                   {"skeleton", json::array()}}}}};
    fx.annotations_path = (fs::path(out_dir) / "annotations.json").string();
    std::ofstream out(fx.annotations_path, std::ios::binary);
    out << doc.dump(1) << "\n";
    if (!out) throw RuntimeFailure("cannot write '" + fx.annotations_path + "'");
  }
  return fx;
}

}  // namespace sfm
