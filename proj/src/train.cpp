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

#include "sfm/train.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>

#include "json.hpp"
#include "sfm/errors.hpp"
#include "sfm/executor.hpp"
#include "sfm/random.hpp"

namespace sfm {

namespace fs = std::filesystem;
using nlohmann::json;

LossResult heatmap_loss(const Tensor<float>& pred, const Tensor<float>& target,
                        const std::vector<float>& weights) {
  if (!(pred.shape() == target.shape())) {
    throw ShapeError("loss: prediction " + pred.shape().str() +
                     " vs target " + target.shape().str());
  }
  const std::size_t channels = static_cast<std::size_t>(pred.n()) * pred.c();
  if (weights.size() != channels) {
    throw ShapeError("loss: expected " + std::to_string(channels) +
                     " channel weights, got " + std::to_string(weights.size()));
  }
  LossResult r;
  r.grad = Tensor<float>(pred.shape());
  const std::size_t plane = pred.shape().plane();
  for (std::size_t ch = 0; ch < channels; ++ch) {
    if (weights[ch] != 0.0f) r.count += plane;
  }
  if (r.count == 0) return r;
  double sum = 0.0;
  const double scale = 2.0 / static_cast<double>(r.count);
  for (std::size_t ch = 0; ch < channels; ++ch) {
    if (weights[ch] == 0.0f) continue;
    const float* p = pred.data() + ch * plane;
    const float* t = target.data() + ch * plane;
    float* g = r.grad.data() + ch * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      const double d = static_cast<double>(p[i]) - t[i];
      sum += d * d;
      g[i] = static_cast<float>(scale * d);
    }
  }
  r.loss = sum / static_cast<double>(r.count);
  return r;
}

namespace {

std::vector<ParamSpec> trainable_specs(const ParameterStore<float>& params) {
  std::vector<ParamSpec> specs;
  for (const auto& e : params.entries()) {
    if (e.spec.kind == ParamKind::kTrainable) specs.push_back(e.spec);
  }
  return specs;
}

}  // namespace

Adam::Adam(const ParameterStore<float>& params, double beta1, double beta2,
           double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
  const auto specs = trainable_specs(params);
  m_ = ParameterStore<float>::zeros(specs);
  v_ = ParameterStore<float>::zeros(specs);
}

void Adam::step(ParameterStore<float>& params,
                const ParameterStore<float>& grads, double lr,
                std::uint64_t t) {
  if (t == 0) throw ConfigError("Adam step numbers start at 1");
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t));
  for (auto& g : grads.entries()) {
    if (g.spec.kind != ParamKind::kTrainable) continue;
    auto& p = params.values(g.spec.name);
    auto& m = m_.values(g.spec.name);
    auto& v = v_.values(g.spec.name);
    if (p.size() != g.values.size()) {
      throw ShapeError("Adam: gradient size mismatch for '" + g.spec.name + "'");
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g.values[i];
      const double mi = beta1_ * m[i] + (1.0 - beta1_) * gi;
      const double vi = beta2_ * v[i] + (1.0 - beta2_) * gi * gi;
      m[i] = static_cast<float>(mi);
      v[i] = static_cast<float>(vi);
      const double update = lr * (mi / c1) / (std::sqrt(vi / c2) + eps_);
      p[i] = static_cast<float>(p[i] - update);
    }
  }
}

namespace {

constexpr const char* kMomentPrefix1 = "adam.m/";
constexpr const char* kMomentPrefix2 = "adam.v/";
constexpr const char* kBestMetric = "train.best_metric";

}  // namespace

Checkpoint to_checkpoint(const TrainState& state, const ModelConfig& config) {
  Checkpoint ckpt;
  ckpt.config = config;
  ckpt.epoch = state.epoch;
  ckpt.step = state.step;
  for (const auto& e : state.params.entries()) ckpt.arrays.add(e.spec, e.values);
  auto add_moments = [&](const ParameterStore<float>& store, const char* prefix) {
    for (const auto& e : store.entries()) {
      ckpt.arrays.add(ParamSpec{prefix + e.spec.name, e.spec.dims,
                                ParamKind::kOptimizer},
                      e.values);
    }
  };
  add_moments(state.optimizer.m(), kMomentPrefix1);
  add_moments(state.optimizer.v(), kMomentPrefix2);
  ckpt.arrays.add(ParamSpec{kBestMetric, {1}, ParamKind::kOptimizer},
                  {static_cast<float>(state.best_metric)});
  return ckpt;
}

TrainState from_checkpoint(const Checkpoint& ckpt, const RunConfig& config) {
  if (!(ckpt.config == config.model)) {
    throw ConfigError("checkpoint model config differs from the run config");
  }
  const ModelGraph graph = build_graph(config.model);
  TrainState state;
  state.epoch = ckpt.epoch;
  state.step = ckpt.step;
  state.params = model_params(ckpt, graph);
  state.optimizer = Adam(state.params, config.train.adam_beta1,
                         config.train.adam_beta2, config.train.adam_eps);
  auto load_moments = [&](ParameterStore<float>& store, const char* prefix) {
    for (auto& e : store.entries()) {
      const std::string name = prefix + e.spec.name;
      if (ckpt.arrays.contains(name)) {
        const auto& src = ckpt.arrays.values(name);
        if (src.size() != e.values.size()) {
          throw ConfigError("checkpoint array '" + name + "' has wrong size");
        }
        e.values = src;
      }
    }
  };
  load_moments(state.optimizer.m(), kMomentPrefix1);
  load_moments(state.optimizer.v(), kMomentPrefix2);
  if (ckpt.arrays.contains(kBestMetric)) {
    state.best_metric = ckpt.arrays.values(kBestMetric).at(0);
  }
  return state;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed,
                                     std::uint64_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(seed, Stream::kShuffle, epoch);
  // Fisher-Yates with an explicit draw so the order does not depend on the
  // standard library's shuffle.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng() % i;
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

std::size_t steps_per_epoch(std::size_t n, int batch_size) {
  const auto b = static_cast<std::size_t>(batch_size);
  return n >= b ? n / b : 1;
}

namespace {

int stride_of(const ModelConfig& m) { return m.input_size / m.output_size; }

void check_joints(const Dataset& data, int joints) {
  for (const auto& s : data.samples) {
    if (static_cast<int>(s.kps.size()) != joints) {
      throw ConfigError("sample '" + s.image_id + "' has " +
                        std::to_string(s.kps.size()) + " joints, model expects " +
                        std::to_string(joints));
    }
  }
}

AffineTransform crop_transform(const Sample& s, int input_size) {
  AugmentParams p;
  p.center_x = s.center_x;
  p.center_y = s.center_y;
  p.box_scale = s.box_scale;
  return build_affine(p, input_size);
}

}  // namespace

Batch make_batch(const Dataset& data, const std::vector<std::size_t>& indices,
                 const RunConfig& config, std::uint64_t seed,
                 std::uint64_t epoch, bool augment) {
  const auto& m = config.model;
  const int n = static_cast<int>(indices.size());
  const int joints = m.num_joints;
  const int stride = stride_of(m);
  Batch b;
  b.inputs = Tensor<float>(n, 3, m.input_size, m.input_size);
  b.targets = Tensor<float>(n, joints, m.output_size, m.output_size);
  b.weights.assign(static_cast<std::size_t>(n) * joints, 0.0f);
  for (int k = 0; k < n; ++k) {
    const std::size_t idx = indices[k];
    const Sample& s = data.samples.at(idx);
    if (static_cast<int>(s.kps.size()) != joints) {
      throw ConfigError("sample '" + s.image_id + "' joint count differs from "
                        "the model");
    }
    const auto image = s.load_image();
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(Stream::kAugment),
                               epoch, idx}));
    AugmentParams p;
    if (augment) p = sample_params(rng, config.augment);
    p.center_x = s.center_x;
    p.center_y = s.center_y;
    p.box_scale = s.box_scale;
    if (augment) {
      if (auto box = half_body(s.kps, rng, config.augment, data.info.upper_body)) {
        p.half_body = true;
        p.center_x = box->center_x;
        p.center_y = box->center_y;
        p.box_scale = box->box_scale;
      }
    }
    const AffineTransform t = build_affine(p, m.input_size);
    const WarpedSample w = apply(*image, s.kps, t, p.flip, data.info.flip_pairs,
                                 m.input_size);
    image_to_tensor(w.image, b.inputs, k);
    KeypointSet hm_kps = w.kps;
    for (auto& kp : hm_kps) {
      kp.x = input_to_heatmap(kp.x, stride);
      kp.y = input_to_heatmap(kp.y, stride);
    }
    const EncodedTargets enc = encode(hm_kps, config.train.sigma, m.output_size);
    std::copy(enc.maps.data(), enc.maps.data() + enc.maps.size(),
              b.targets.sample(k));
    std::copy(enc.weights.begin(), enc.weights.end(),
              b.weights.begin() + static_cast<std::ptrdiff_t>(k) * joints);
  }
  return b;
}

std::vector<Prediction> predict(const ModelGraph& graph,
                                const ParameterStore<float>& params,
                                const Dataset& data, bool flip_test,
                                int batch_size) {
  const auto& m = graph.config();
  check_joints(data, m.num_joints);
  const int stride = stride_of(m);
  const int joints = m.num_joints;
  const int copies = flip_test ? 2 : 1;
  std::vector<Prediction> out;
  const std::size_t total = data.samples.size();
  for (std::size_t start = 0; start < total;
       start += static_cast<std::size_t>(batch_size)) {
    const int n = static_cast<int>(
        std::min<std::size_t>(batch_size, total - start));
    Tensor<float> inputs(n * copies, 3, m.input_size, m.input_size);
    std::vector<AffineTransform> transforms;
    for (int k = 0; k < n; ++k) {
      const Sample& s = data.samples[start + k];
      const AffineTransform t = crop_transform(s, m.input_size);
      const WarpedSample w =
          apply(*s.load_image(), s.kps, t, false, data.info.flip_pairs,
                m.input_size);
      image_to_tensor(w.image, inputs, k * copies);
      if (flip_test) image_to_tensor(flip_image(w.image), inputs, k * copies + 1);
      transforms.push_back(t);
    }
    const Tensor<float> hm = forward<float>(graph.program(), params, inputs);
    const Shape one{1, joints, m.output_size, m.output_size};
    for (int k = 0; k < n; ++k) {
      HeatmapStack maps(one);
      std::copy(hm.sample(k * copies), hm.sample(k * copies) + one.size(),
                maps.data());
      if (flip_test) {
        HeatmapStack flipped(one);
        std::copy(hm.sample(k * copies + 1),
                  hm.sample(k * copies + 1) + one.size(), flipped.data());
        maps = flip_merge(maps, flipped, data.info.flip_pairs);
      }
      const auto decoded = decode(maps);
      const AffineTransform inv = transforms[k].inverse();
      Prediction p;
      p.image_id = data.samples[start + k].image_id;
      for (const auto& d : decoded) {
        p.heatmap_kps.push_back(Keypoint{d.x, d.y, 2});
        const auto [x, y] = inv.apply(heatmap_to_input(d.x, stride),
                                      heatmap_to_input(d.y, stride));
        p.kps.push_back(Keypoint{x, y, 2});
        p.confidence.push_back(d.confidence);
      }
      out.push_back(std::move(p));
    }
  }
  return out;
}

EvalReport evaluate_predictions(const Dataset& data,
                                const std::vector<Prediction>& preds) {
  if (preds.size() != data.samples.size()) {
    throw ShapeError("evaluate: " + std::to_string(preds.size()) +
                     " predictions for " + std::to_string(data.samples.size()) +
                     " samples");
  }
  EvalReport report;
  report.joint_names = data.info.joint_names;
  std::vector<GroundTruthInstance> gts;
  bool any_head = false;
  for (const auto& s : data.samples) {
    gts.push_back(GroundTruthInstance{s.image_id, s.kps, s.head_size.value_or(0.0),
                                      s.area.value_or(0.0)});
    any_head = any_head || s.head_size.has_value();
  }
  if (any_head) {
    std::vector<KeypointSet> kps;
    for (const auto& p : preds) kps.push_back(p.kps);
    for (double tau : {0.5, 0.1}) report.pckh.push_back(pckh(kps, gts, tau));
  } else {
    if (data.info.oks_k.empty()) {
      throw ConfigError("dataset '" + data.info.name + "' defines no OKS constants");
    }
    std::vector<Detection> dets;
    for (const auto& p : preds) {
      const double score =
          p.confidence.empty()
              ? 0.0
              : std::accumulate(p.confidence.begin(), p.confidence.end(), 0.0) /
                    static_cast<double>(p.confidence.size());
      dets.push_back(Detection{p.image_id, p.kps, score});
    }
    report.ap = average_precision(dets, gts, data.info.oks_k);
  }
  return report;
}

EvalReport evaluate(const Checkpoint& ckpt, const Dataset& data,
                    bool flip_test) {
  if (ckpt.config.num_joints != data.info.num_joints()) {
    throw ConfigError("checkpoint predicts " +
                      std::to_string(ckpt.config.num_joints) +
                      " joints, dataset has " +
                      std::to_string(data.info.num_joints()));
  }
  const ModelGraph graph = build_graph(ckpt.config);
  const auto params = model_params(ckpt, graph);
  return evaluate_predictions(data, predict(graph, params, data, flip_test));
}

namespace {

void append_line(const std::string& path, const json& record) {
  std::ofstream out(path, std::ios::app | std::ios::binary);
  out << record.dump() << "\n";
  if (!out) throw RuntimeFailure("cannot append to '" + path + "'");
}

}  // namespace

TrainResult train(const RunConfig& config, const Dataset& train_set,
                  const Dataset* val_set, std::uint64_t seed,
                  const std::string& out_dir, std::optional<TrainState> resume,
                  const TrainHooks& hooks) {
  config.validate();
  if (train_set.samples.empty()) throw ConfigError("training set is empty");
  check_joints(train_set, config.model.num_joints);
  const Dataset& eval_set = val_set ? *val_set : train_set;
  check_joints(eval_set, config.model.num_joints);

  const ModelGraph graph = build_graph(config.model);
  const Program& program = graph.program();
  const auto& opt = config.train;
  const auto log = [&](const std::string& msg) {
    if (hooks.log) hooks.log(msg);
  };

  TrainResult result;
  TrainState& state = result.state;
  if (resume) {
    state = std::move(*resume);
    check_params(program, state.params);
  } else {
    state.params = init_params<float>(graph, seed);
    state.optimizer =
        Adam(state.params, opt.adam_beta1, opt.adam_beta2, opt.adam_eps);
  }

  const std::size_t n = train_set.samples.size();
  const int batch = std::min<int>(opt.schedule.batch_size, static_cast<int>(n));
  const std::size_t spe = steps_per_epoch(n, batch);
  std::uint64_t total = static_cast<std::uint64_t>(opt.schedule.total_epochs) * spe;
  if (opt.max_steps > 0) total = std::min<std::uint64_t>(total, opt.max_steps);

  std::string train_log, eval_log;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    train_log = (fs::path(out_dir) / "train_log.jsonl").string();
    eval_log = (fs::path(out_dir) / "eval_log.jsonl").string();
  }
  const auto save = [&](const std::string& name) {
    if (out_dir.empty()) return;
    save_checkpoint(to_checkpoint(state, config.model),
                    (fs::path(out_dir) / name).string());
  };

  std::vector<std::size_t> order;
  std::uint64_t order_epoch = ~0ull;
  while (state.step < total) {
    const std::uint64_t epoch = state.step / spe;
    const std::size_t pos = state.step % spe;
    if (order_epoch != epoch) {
      order = epoch_order(n, seed, epoch);
      order_epoch = epoch;
    }
    const std::size_t begin = pos * static_cast<std::size_t>(batch);
    const std::vector<std::size_t> indices(
        order.begin() + static_cast<std::ptrdiff_t>(begin),
        order.begin() + static_cast<std::ptrdiff_t>(
                            std::min(n, begin + static_cast<std::size_t>(batch))));
    const Batch b = make_batch(train_set, indices, config, seed, epoch, true);
    Trace<float> trace =
        forward_trace<float>(program, state.params, b.inputs, Phase::kTrain);
    const LossResult loss = heatmap_loss(trace.output(), b.targets, b.weights);
    const double lr = lr_at(static_cast<int>(epoch), opt.schedule);
    if (loss.count == 0) {
      log("warning: step " + std::to_string(state.step) +
          " has no visible joints; loss is 0");
    }
    if (!std::isfinite(loss.loss)) {
      if (!out_dir.empty()) {
        json diag = {{"step", state.step},
                     {"epoch", epoch},
                     {"lr", lr},
                     {"loss", std::to_string(loss.loss)},
                     {"indices", indices}};
        json ids = json::array();
        for (auto i : indices) ids.push_back(train_set.samples[i].image_id);
        diag["image_ids"] = ids;
        std::ofstream(fs::path(out_dir) / "diagnostic.json") << diag.dump(2) << "\n";
        save("diagnostic.ckpt");
      }
      throw RuntimeFailure("non-finite loss at step " + std::to_string(state.step) +
                           " (epoch " + std::to_string(epoch) + ")");
    }
    const Gradients<float> grads =
        backward<float>(program, state.params, trace, loss.grad);
    state.optimizer.step(state.params, grads.params, lr, state.step + 1);
    update_running_stats<float>(program, trace, state.params,
                                static_cast<float>(opt.bn_momentum));
    trace = Trace<float>();

    ++state.step;
    state.epoch = state.step / spe;
    result.losses.push_back(loss.loss);
    if (hooks.on_step) hooks.on_step(state.step, loss.loss);
    if (!train_log.empty()) {
      append_line(train_log, {{"step", state.step},
                              {"epoch", epoch},
                              {"lr", lr},
                              {"loss", loss.loss}});
    }

    const bool epoch_done = state.step % spe == 0;
    const bool finished = state.step == total;
    if ((epoch_done && (epoch + 1) % opt.eval_interval == 0) || finished) {
      const auto preds = predict(graph, state.params, eval_set, opt.flip_test);
      EvalReport report = evaluate_predictions(eval_set, preds);
      const double metric = report.primary();
      log("epoch " + std::to_string(epoch) + " step " +
          std::to_string(state.step) + ": loss " + std::to_string(loss.loss) +
          ", " + report.primary_name() + " " + std::to_string(metric));
      if (!eval_log.empty()) {
        append_line(eval_log, {{"epoch", epoch},
                               {"step", state.step},
                               {"metric", report.primary_name()},
                               {"value", metric},
                               {"report", json::parse(report.to_json())}});
      }
      if (metric > state.best_metric) {
        state.best_metric = metric;
        save("best.ckpt");
      }
      save("last.ckpt");
      result.evals.emplace_back(epoch, std::move(report));
    }
  }
  return result;
}

Dataset load_train_set(const RunConfig& config, std::uint64_t seed) {
  const auto& d = config.data;
  Dataset data;
  data.info = dataset_info(d.format, config.model.num_joints);
  if (d.format == DatasetTag::kFixture) {
    if (d.train.empty()) {
      FixtureSpec spec;
      spec.n_samples = d.fixture_samples;
      spec.image_size = config.model.input_size;
      spec.n_joints = config.model.num_joints;
      spec.blob_sigma = d.fixture_blob_sigma;
      spec.seed = seed;
      data.samples = make_fixture(spec).samples;
      return data;
    }
    const fs::path p(d.train);
    const std::string file =
        fs::is_directory(p) ? (p / "annotations.json").string() : d.train;
    data.samples = load_coco(file, d.image_root);
    for (auto& s : data.samples) s.image = s.load_image();
    return data;
  }
  if (d.train.empty()) throw ConfigError("data.train is required for " +
                                         std::string(dataset_tag_name(d.format)));
  data.samples = d.format == DatasetTag::kMpii ? load_mpii(d.train, d.image_root)
                                               : load_coco(d.train, d.image_root);
  return data;
}

std::optional<Dataset> load_val_set(const RunConfig& config) {
  const auto& d = config.data;
  if (d.val.empty()) return std::nullopt;
  Dataset data;
  data.info = dataset_info(d.format, config.model.num_joints);
  const fs::path p(d.val);
  const std::string file = d.format == DatasetTag::kFixture && fs::is_directory(p)
                               ? (p / "annotations.json").string()
                               : d.val;
  data.samples = d.format == DatasetTag::kMpii ? load_mpii(file, d.image_root)
                                               : load_coco(file, d.image_root);
  return data;
}

}  // namespace sfm
