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

#ifndef SFM_TRAIN_HPP_
#define SFM_TRAIN_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sfm/augment.hpp"
#include "sfm/checkpoint.hpp"
#include "sfm/codec.hpp"
#include "sfm/datasets.hpp"
#include "sfm/metrics.hpp"
#include "sfm/model_graph.hpp"
#include "sfm/run_config.hpp"

namespace sfm {

struct LossResult {
  double loss = 0.0;
  Tensor<float> grad;  // same shape as the prediction
  std::size_t count = 0;  // pixels that entered the mean
};

// Mean squared error over the pixels of channels whose weight is non-zero
// (weights are N*J, sample-major). With no such channel the loss and the
// gradient are zero.
LossResult heatmap_loss(const Tensor<float>& pred, const Tensor<float>& target,
                        const std::vector<float>& weights);

// Adam without weight decay; moments are kept per trainable array.
class Adam {
 public:
  Adam() = default;
  Adam(const ParameterStore<float>& params, double beta1, double beta2,
       double eps);

  // `t` is the 1-based step number used for bias correction.
  void step(ParameterStore<float>& params, const ParameterStore<float>& grads,
            double lr, std::uint64_t t);

  const ParameterStore<float>& m() const { return m_; }
  const ParameterStore<float>& v() const { return v_; }
  ParameterStore<float>& m() { return m_; }
  ParameterStore<float>& v() { return v_; }

 private:
  ParameterStore<float> m_;
  ParameterStore<float> v_;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
};

// The shuffle of epoch e and the augmentation of sample i in epoch e are
// derived from (seed, e) and (seed, e, i), so a state needs no RNG payload to
// resume.
struct TrainState {
  std::uint64_t epoch = 0;  // epoch of the next step
  std::uint64_t step = 0;   // completed steps
  ParameterStore<float> params;
  Adam optimizer;
  double best_metric = -1.0;  // -1 before the first evaluation
};

Checkpoint to_checkpoint(const TrainState& state, const ModelConfig& config);
// Throws ConfigError when the checkpoint does not fit the config.
TrainState from_checkpoint(const Checkpoint& ckpt, const RunConfig& config);

// Network input and targets for a batch. Augmented when `augment` is set.
struct Batch {
  Tensor<float> inputs;   // (N, 3, input, input)
  Tensor<float> targets;  // (N, J, output, output)
  std::vector<float> weights;  // N*J
};

Batch make_batch(const Dataset& data, const std::vector<std::size_t>& indices,
                 const RunConfig& config, std::uint64_t seed,
                 std::uint64_t epoch, bool augment);

// Sample order of one epoch.
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed,
                                     std::uint64_t epoch);
std::size_t steps_per_epoch(std::size_t n, int batch_size);

struct Prediction {
  std::string image_id;
  KeypointSet kps;              // original image coordinates, v = 2
  std::vector<double> confidence;
  KeypointSet heatmap_kps;      // output-map coordinates
};

// Crop, forward (optionally with the flip test), decode and map back through
// the inverse crop transform.
std::vector<Prediction> predict(const ModelGraph& graph,
                                const ParameterStore<float>& params,
                                const Dataset& data, bool flip_test,
                                int batch_size = 8);

// Metrics appropriate for the samples: PCKh at 0.5 and 0.1 when they carry
// head sizes, OKS AP otherwise (detections scored by mean confidence).
EvalReport evaluate_predictions(const Dataset& data,
                                const std::vector<Prediction>& preds);

// Throws ConfigError on a joint-count mismatch.
EvalReport evaluate(const Checkpoint& ckpt, const Dataset& data,
                    bool flip_test = true);

struct TrainResult {
  TrainState state;
  std::vector<double> losses;  // one per step run by this call
  std::vector<std::pair<std::uint64_t, EvalReport>> evals;  // by epoch
};

struct TrainHooks {
  // Called after each step with (step, loss).
  std::function<void(std::uint64_t, double)> on_step;
  std::function<void(const std::string&)> log;
};

// Adam over shuffled batches. With out_dir set, writes train_log.jsonl,
// eval_log.jsonl, last.ckpt after every evaluation and at the end, and
// best.ckpt when the evaluation metric improves. A non-finite loss writes
// diagnostic.json plus diagnostic.ckpt (the pre-step state) and throws
// RuntimeFailure.
TrainResult train(const RunConfig& config, const Dataset& train_set,
                  const Dataset* val_set, std::uint64_t seed,
                  const std::string& out_dir = "",
                  std::optional<TrainState> resume = std::nullopt,
                  const TrainHooks& hooks = {});

// Training / evaluation data described by the config. An empty fixture path
// generates the fixture in memory from the seed.
Dataset load_train_set(const RunConfig& config, std::uint64_t seed);
std::optional<Dataset> load_val_set(const RunConfig& config);

}  // namespace sfm

#endif  // SFM_TRAIN_HPP_
