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

#include "sfm/executor.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

namespace sfm {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

bool is_pointwise(const ConvAttrs& a) {
  return a.kernel == 1 && a.stride == 1 && a.pad == 0;
}

// col has (C*k*k) rows of (ho*wo) columns.
template <typename T>
void im2col(const T* x, int channels, int h, int w, const ConvAttrs& a,
            int ho, int wo, T* col) {
  const int k = a.kernel;
  const std::size_t p = static_cast<std::size_t>(ho) * wo;
  for (int ci = 0; ci < channels; ++ci) {
    const T* src = x + static_cast<std::size_t>(ci) * h * w;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        T* dst = col + ((static_cast<std::size_t>(ci) * k + ky) * k + kx) * p;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * a.stride - a.pad + ky;
          T* drow = dst + static_cast<std::size_t>(oy) * wo;
          if (iy < 0 || iy >= h) {
            std::fill(drow, drow + wo, T(0));
            continue;
          }
          const T* srow = src + static_cast<std::size_t>(iy) * w;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * a.stride - a.pad + kx;
            drow[ox] = (ix >= 0 && ix < w) ? srow[ix] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, int channels, int h, int w, const ConvAttrs& a,
                int ho, int wo, T* x) {
  const int k = a.kernel;
  const std::size_t p = static_cast<std::size_t>(ho) * wo;
  for (int ci = 0; ci < channels; ++ci) {
    T* dst = x + static_cast<std::size_t>(ci) * h * w;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const T* src =
            col + ((static_cast<std::size_t>(ci) * k + ky) * k + kx) * p;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * a.stride - a.pad + ky;
          if (iy < 0 || iy >= h) continue;
          const T* srow = src + static_cast<std::size_t>(oy) * wo;
          T* drow = dst + static_cast<std::size_t>(iy) * w;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * a.stride - a.pad + kx;
            if (ix >= 0 && ix < w) drow[ix] += srow[ox];
          }
        }
      }
    }
  }
}

template <typename T>
void conv_forward(const Tensor<T>& x, const T* weight, const T* bias,
                  const ConvAttrs& a, Tensor<T>& y, std::vector<T>& col) {
  const int kdim = a.in_channels * a.kernel * a.kernel;
  const int p = y.h() * y.w();
  ConstMatMap<T> wm(weight, a.out_channels, kdim);
  for (int n = 0; n < x.n(); ++n) {
    const T* cols = x.sample(n);
    if (!is_pointwise(a)) {
      col.resize(static_cast<std::size_t>(kdim) * p);
      im2col(x.sample(n), x.c(), x.h(), x.w(), a, y.h(), y.w(), col.data());
      cols = col.data();
    }
    MatMap<T> ym(y.sample(n), a.out_channels, p);
    ym.noalias() = wm * ConstMatMap<T>(cols, kdim, p);
    if (bias != nullptr) {
      for (int co = 0; co < a.out_channels; ++co) ym.row(co).array() += bias[co];
    }
  }
}

template <typename T>
void conv_backward(const Tensor<T>& x, const T* weight, const Tensor<T>& dy,
                   const ConvAttrs& a, Tensor<T>* dx, T* dweight, T* dbias,
                   std::vector<T>& col) {
  const int kdim = a.in_channels * a.kernel * a.kernel;
  const int p = dy.h() * dy.w();
  ConstMatMap<T> wm(weight, a.out_channels, kdim);
  MatMap<T> dwm(dweight, a.out_channels, kdim);
  std::vector<T> dcol;
  for (int n = 0; n < x.n(); ++n) {
    ConstMatMap<T> dym(dy.sample(n), a.out_channels, p);
    const T* cols = x.sample(n);
    if (!is_pointwise(a)) {
      col.resize(static_cast<std::size_t>(kdim) * p);
      im2col(x.sample(n), x.c(), x.h(), x.w(), a, dy.h(), dy.w(), col.data());
      cols = col.data();
    }
    dwm.noalias() += dym * ConstMatMap<T>(cols, kdim, p).transpose();
    if (dbias != nullptr) {
      // Plain loop: Eigen's vectorized sum peels by address, which would
      // make the result depend on where the buffer landed.
      for (int co = 0; co < a.out_channels; ++co) {
        const T* row = dy.plane(n, co);
        T acc = T(0);
        for (int i = 0; i < p; ++i) acc += row[i];
        dbias[co] += acc;
      }
    }
    if (dx == nullptr) continue;
    if (is_pointwise(a)) {
      MatMap<T> dxm(dx->sample(n), kdim, p);
      dxm.noalias() += wm.transpose() * dym;
    } else {
      dcol.resize(static_cast<std::size_t>(kdim) * p);
      MatMap<T> dcm(dcol.data(), kdim, p);
      dcm.noalias() = wm.transpose() * dym;
      col2im_add(dcol.data(), x.c(), x.h(), x.w(), a, dy.h(), dy.w(),
                 dx->sample(n));
    }
  }
}

template <typename T>
void batch_norm_forward(const Tensor<T>& x, const T* gamma, const T* beta,
                        const T* running_mean, const T* running_var,
                        Phase phase, Tensor<T>& y, std::vector<T>& stats) {
  const int c = x.c();
  const std::size_t plane = x.shape().plane();
  const double count = static_cast<double>(x.n()) * plane;
  stats.assign(2 * static_cast<std::size_t>(c), T(0));
  for (int ch = 0; ch < c; ++ch) {
    double mean;
    double var;
    if (phase == Phase::kTrain) {
      double sum = 0.0;
      for (int n = 0; n < x.n(); ++n) {
        const T* p = x.plane(n, ch);
        for (std::size_t i = 0; i < plane; ++i) sum += p[i];
      }
      mean = sum / count;
      double sq = 0.0;
      for (int n = 0; n < x.n(); ++n) {
        const T* p = x.plane(n, ch);
        for (std::size_t i = 0; i < plane; ++i) {
          const double d = p[i] - mean;
          sq += d * d;
        }
      }
      var = sq / count;
    } else {
      mean = running_mean[ch];
      var = running_var[ch];
    }
    const T inv_std = static_cast<T>(1.0 / std::sqrt(var + kBatchNormEps));
    const T m = static_cast<T>(mean);
    stats[ch] = m;
    stats[c + ch] = inv_std;
    const T scale = gamma[ch] * inv_std;
    const T shift = beta[ch] - m * scale;
    for (int n = 0; n < x.n(); ++n) {
      const T* p = x.plane(n, ch);
      T* q = y.plane(n, ch);
      for (std::size_t i = 0; i < plane; ++i) q[i] = p[i] * scale + shift;
    }
  }
}

template <typename T>
void batch_norm_backward(const Tensor<T>& x, const T* gamma,
                         const std::vector<T>& stats, Phase phase,
                         const Tensor<T>& dy, Tensor<T>* dx, T* dgamma,
                         T* dbeta) {
  const int c = x.c();
  const std::size_t plane = x.shape().plane();
  const double count = static_cast<double>(x.n()) * plane;
  for (int ch = 0; ch < c; ++ch) {
    const T mean = stats[ch];
    const T inv_std = stats[c + ch];
    double sum_dy = 0.0;
    double sum_dy_xhat = 0.0;
    for (int n = 0; n < x.n(); ++n) {
      const T* xp = x.plane(n, ch);
      const T* gp = dy.plane(n, ch);
      for (std::size_t i = 0; i < plane; ++i) {
        sum_dy += gp[i];
        sum_dy_xhat += gp[i] * (xp[i] - mean) * inv_std;
      }
    }
    dgamma[ch] += static_cast<T>(sum_dy_xhat);
    dbeta[ch] += static_cast<T>(sum_dy);
    if (dx == nullptr) continue;
    const T g = gamma[ch] * inv_std;
    if (phase == Phase::kEval) {
      for (int n = 0; n < x.n(); ++n) {
        const T* gp = dy.plane(n, ch);
        T* dp = dx->plane(n, ch);
        for (std::size_t i = 0; i < plane; ++i) dp[i] += g * gp[i];
      }
      continue;
    }
    const T mean_dy = static_cast<T>(sum_dy / count);
    const T mean_dy_xhat = static_cast<T>(sum_dy_xhat / count);
    for (int n = 0; n < x.n(); ++n) {
      const T* xp = x.plane(n, ch);
      const T* gp = dy.plane(n, ch);
      T* dp = dx->plane(n, ch);
      for (std::size_t i = 0; i < plane; ++i) {
        const T xhat = (xp[i] - mean) * inv_std;
        dp[i] += g * (gp[i] - mean_dy - xhat * mean_dy_xhat);
      }
    }
  }
}

// Channel index holding the maximum at pixel i; first occurrence wins.
template <typename T>
int argmax_channel(const Tensor<T>& x, int n, std::size_t i) {
  int best = 0;
  T v = x.plane(n, 0)[i];
  for (int ch = 1; ch < x.c(); ++ch) {
    const T u = x.plane(n, ch)[i];
    if (u > v) {
      v = u;
      best = ch;
    }
  }
  return best;
}

template <typename T>
struct Resolved {
  const T* weight = nullptr;
  const T* bias = nullptr;
  const T* gamma = nullptr;
  const T* beta = nullptr;
  const T* running_mean = nullptr;
  const T* running_var = nullptr;
};

template <typename T>
Resolved<T> resolve(const Instr& instr, const ParameterStore<T>& params) {
  Resolved<T> r;
  if (instr.kind == OpKind::kConv) {
    r.weight = params.values(instr.name + ".weight").data();
    if (instr.conv.bias) r.bias = params.values(instr.name + ".bias").data();
  } else if (instr.kind == OpKind::kBatchNorm) {
    r.gamma = params.values(instr.name + ".gamma").data();
    r.beta = params.values(instr.name + ".beta").data();
    r.running_mean = params.values(instr.name + ".running_mean").data();
    r.running_var = params.values(instr.name + ".running_var").data();
  }
  return r;
}

template <typename T>
void run_instr(const Instr& instr, const ParameterStore<T>& params,
               Phase phase, std::vector<Tensor<T>>& values,
               std::vector<T>& stats, std::vector<T>& col) {
  const Tensor<T>& x = values[instr.inputs[0]];
  const Resolved<T> r = resolve(instr, params);
  Tensor<T>& y = values[instr.output];
  const std::size_t plane = x.shape().plane();
  switch (instr.kind) {
    case OpKind::kConv: {
      const int ho = (x.h() + 2 * instr.conv.pad - instr.conv.kernel) /
                         instr.conv.stride + 1;
      const int wo = (x.w() + 2 * instr.conv.pad - instr.conv.kernel) /
                         instr.conv.stride + 1;
      y = Tensor<T>(x.n(), instr.conv.out_channels, ho, wo);
      conv_forward(x, r.weight, r.bias, instr.conv, y, col);
      break;
    }
    case OpKind::kBatchNorm:
      y = Tensor<T>(x.shape());
      batch_norm_forward(x, r.gamma, r.beta, r.running_mean, r.running_var,
                         phase, y, stats);
      break;
    case OpKind::kRelu:
      y = Tensor<T>(x.shape());
      for (std::size_t i = 0; i < x.size(); ++i) {
        y.data()[i] = std::max(x.data()[i], T(0));
      }
      break;
    case OpKind::kTanh:
      y = Tensor<T>(x.shape());
      for (std::size_t i = 0; i < x.size(); ++i) {
        y.data()[i] = std::tanh(x.data()[i]);
      }
      break;
    case OpKind::kAdd: {
      const Tensor<T>& b = values[instr.inputs[1]];
      y = Tensor<T>(x.shape());
      for (std::size_t i = 0; i < x.size(); ++i) {
        y.data()[i] = x.data()[i] + b.data()[i];
      }
      break;
    }
    case OpKind::kConcat: {
      const Tensor<T>& b = values[instr.inputs[1]];
      y = Tensor<T>(x.n(), x.c() + b.c(), x.h(), x.w());
      for (int n = 0; n < x.n(); ++n) {
        std::copy(x.sample(n), x.sample(n) + x.c() * plane, y.sample(n));
        std::copy(b.sample(n), b.sample(n) + b.c() * plane,
                  y.sample(n) + x.c() * plane);
      }
      break;
    }
    case OpKind::kUpsample2x:
      y = Tensor<T>(x.n(), x.c(), 2 * x.h(), 2 * x.w());
      for (int n = 0; n < x.n(); ++n) {
        for (int ch = 0; ch < x.c(); ++ch) {
          const T* p = x.plane(n, ch);
          T* q = y.plane(n, ch);
          const int wo = y.w();
          for (int oy = 0; oy < y.h(); ++oy) {
            const T* srow = p + static_cast<std::size_t>(oy / 2) * x.w();
            T* drow = q + static_cast<std::size_t>(oy) * wo;
            for (int ox = 0; ox < wo; ++ox) drow[ox] = srow[ox / 2];
          }
        }
      }
      break;
    case OpKind::kChannelPool:
      y = Tensor<T>(x.n(), 2, x.h(), x.w());
      for (int n = 0; n < x.n(); ++n) {
        T* mean = y.plane(n, 0);
        T* mx = y.plane(n, 1);
        const T* first = x.plane(n, 0);
        std::copy(first, first + plane, mean);
        std::copy(first, first + plane, mx);
        for (int ch = 1; ch < x.c(); ++ch) {
          const T* p = x.plane(n, ch);
          for (std::size_t i = 0; i < plane; ++i) {
            mean[i] += p[i];
            mx[i] = std::max(mx[i], p[i]);
          }
        }
        const T inv = T(1) / static_cast<T>(x.c());
        for (std::size_t i = 0; i < plane; ++i) mean[i] *= inv;
      }
      break;
    case OpKind::kDuplicate:
      y = Tensor<T>(x.n(), 2, x.h(), x.w());
      for (int n = 0; n < x.n(); ++n) {
        std::copy(x.plane(n, 0), x.plane(n, 0) + plane, y.plane(n, 0));
        std::copy(x.plane(n, 0), x.plane(n, 0) + plane, y.plane(n, 1));
      }
      break;
    case OpKind::kAttentionCombine: {
      const Tensor<T>& m = values[instr.inputs[1]];
      const Tensor<T>& md = values[instr.inputs[2]];
      y = Tensor<T>(x.shape());
      for (int n = 0; n < x.n(); ++n) {
        const T* mp = m.plane(n, 0);
        const T* dp = md.plane(n, 0);
        for (int ch = 0; ch < x.c(); ++ch) {
          const T* f = x.plane(n, ch);
          T* o = y.plane(n, ch);
          for (std::size_t i = 0; i < plane; ++i) {
            o[i] = f[i] + f[i] * (mp[i] + mp[i] * dp[i]);
          }
        }
      }
      break;
    }
  }
}

template <typename T>
void check_inputs(const Program& program, std::span<const Tensor<T>> inputs) {
  if (static_cast<int>(inputs.size()) != program.input_count()) {
    throw ShapeError("program expects " +
                     std::to_string(program.input_count()) + " inputs, got " +
                     std::to_string(inputs.size()));
  }
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Shape expect =
        program.input_shape(inputs[0].n(), static_cast<int>(i));
    if (!(inputs[i].shape() == expect)) {
      throw ShapeError("input shape " + inputs[i].shape().str() +
                       " does not match program input " + expect.str());
    }
  }
}

template <typename T>
Tensor<T>& grad_slot(std::vector<Tensor<T>>& grads,
                     const std::vector<Tensor<T>>& values, int slot) {
  if (grads[slot].empty()) grads[slot] = Tensor<T>(values[slot].shape());
  return grads[slot];
}

}  // namespace

template <typename T>
Trace<T> forward_trace(const Program& program, const ParameterStore<T>& params,
                       std::span<const Tensor<T>> inputs, Phase phase) {
  check_params(program, params);
  check_inputs(program, inputs);
  Trace<T> trace;
  trace.phase = phase;
  trace.values.resize(program.slots().size());
  trace.stats.resize(program.instrs().size());
  trace.output_slot = program.output_slot();
  for (std::size_t i = 0; i < inputs.size(); ++i) trace.values[i] = inputs[i];
  std::vector<T> col;
  const auto& instrs = program.instrs();
  for (std::size_t i = 0; i < instrs.size(); ++i) {
    run_instr(instrs[i], params, phase, trace.values, trace.stats[i], col);
  }
  return trace;
}

template <typename T>
Tensor<T> forward(const Program& program, const ParameterStore<T>& params,
                  std::span<const Tensor<T>> inputs, Phase phase) {
  check_params(program, params);
  check_inputs(program, inputs);
  std::vector<Tensor<T>> values(program.slots().size());
  for (std::size_t i = 0; i < inputs.size(); ++i) values[i] = inputs[i];
  std::vector<T> stats;
  std::vector<T> col;
  const auto& instrs = program.instrs();
  const auto& last_use = program.last_use();
  for (std::size_t i = 0; i < instrs.size(); ++i) {
    run_instr(instrs[i], params, phase, values, stats, col);
    for (int s : instrs[i].inputs) {
      if (last_use[s] == static_cast<int>(i) && s != program.output_slot()) {
        values[s] = Tensor<T>();
      }
    }
  }
  return std::move(values[program.output_slot()]);
}

template <typename T>
Gradients<T> backward(const Program& program, const ParameterStore<T>& params,
                      const Trace<T>& trace, const Tensor<T>& grad_output) {
  check_params(program, params);
  if (!(grad_output.shape() == trace.output().shape())) {
    throw ShapeError("upstream gradient shape " + grad_output.shape().str() +
                     " does not match output " + trace.output().shape().str());
  }
  std::vector<ParamSpec> trainable;
  for (const auto& s : program.param_specs()) {
    if (s.kind == ParamKind::kTrainable) trainable.push_back(s);
  }
  Gradients<T> out;
  out.params = ParameterStore<T>::zeros(trainable);

  const auto& values = trace.values;
  std::vector<Tensor<T>> grads(values.size());
  grads[program.output_slot()] = grad_output;
  std::vector<T> col;
  const auto& instrs = program.instrs();
  for (std::size_t idx = instrs.size(); idx-- > 0;) {
    const Instr& instr = instrs[idx];
    if (grads[instr.output].empty()) continue;
    const Tensor<T> dy = std::move(grads[instr.output]);
    grads[instr.output] = Tensor<T>();
    const Tensor<T>& x = values[instr.inputs[0]];
    const std::size_t plane = x.shape().plane();
    switch (instr.kind) {
      case OpKind::kConv: {
        const T* w = params.values(instr.name + ".weight").data();
        T* dw = out.params.values(instr.name + ".weight").data();
        T* db = instr.conv.bias
                    ? out.params.values(instr.name + ".bias").data()
                    : nullptr;
        Tensor<T>& dx = grad_slot(grads, values, instr.inputs[0]);
        conv_backward(x, w, dy, instr.conv, &dx, dw, db, col);
        break;
      }
      case OpKind::kBatchNorm: {
        const T* gamma = params.values(instr.name + ".gamma").data();
        Tensor<T>& dx = grad_slot(grads, values, instr.inputs[0]);
        batch_norm_backward(x, gamma, trace.stats[idx], trace.phase, dy, &dx,
                            out.params.values(instr.name + ".gamma").data(),
                            out.params.values(instr.name + ".beta").data());
        break;
      }
      case OpKind::kRelu: {
        Tensor<T>& dx = grad_slot(grads, values, instr.inputs[0]);
        for (std::size_t i = 0; i < x.size(); ++i) {
          if (x.data()[i] > T(0)) dx.data()[i] += dy.data()[i];
        }
        break;
      }
      case OpKind::kTanh: {
        const Tensor<T>& y = values[instr.output];
        Tensor<T>& dx = grad_slot(grads, values, instr.inputs[0]);
        for (std::size_t i = 0; i < x.size(); ++i) {
          const T t = y.data()[i];
          dx.data()[i] += dy.data()[i] * (T(1) - t * t);
        }
        break;
      }
      case OpKind::kAdd: {
        for (int k = 0; k < 2; ++k) {
          Tensor<T>& dx = grad_slot(grads, values, instr.inputs[k]);
          for (std::size_t i = 0; i < dy.size(); ++i) {
            dx.data()[i] += dy.data()[i];
          }
        }
        break;
      }
      case OpKind::kConcat: {
        const int ca = x.c();
        const int cb = values[instr.inputs[1]].c();
        Tensor<T>& da = grad_slot(grads, values, instr.inputs[0]);
        for (int n = 0; n < dy.n(); ++n) {
          const T* src = dy.sample(n);
          T* dst = da.sample(n);
          for (std::size_t i = 0; i < ca * plane; ++i) dst[i] += src[i];
        }
        Tensor<T>& dbt = grad_slot(grads, values, instr.inputs[1]);
        for (int n = 0; n < dy.n(); ++n) {
          const T* src = dy.sample(n) + ca * plane;
          T* dst = dbt.sample(n);
          for (std::size_t i = 0; i < cb * plane; ++i) dst[i] += src[i];
        }
        break;
      }
      case OpKind::kUpsample2x: {
        Tensor<T>& dx = grad_slot(grads, values, instr.inputs[0]);
        for (int n = 0; n < dy.n(); ++n) {
          for (int ch = 0; ch < dy.c(); ++ch) {
            const T* g = dy.plane(n, ch);
            T* d = dx.plane(n, ch);
            for (int oy = 0; oy < dy.h(); ++oy) {
              T* drow = d + static_cast<std::size_t>(oy / 2) * x.w();
              const T* grow = g + static_cast<std::size_t>(oy) * dy.w();
              for (int ox = 0; ox < dy.w(); ++ox) drow[ox / 2] += grow[ox];
            }
          }
        }
        break;
      }
      case OpKind::kChannelPool: {
        Tensor<T>& dx = grad_slot(grads, values, instr.inputs[0]);
        const T inv = T(1) / static_cast<T>(x.c());
        for (int n = 0; n < x.n(); ++n) {
          const T* gmean = dy.plane(n, 0);
          const T* gmax = dy.plane(n, 1);
          for (int ch = 0; ch < x.c(); ++ch) {
            T* d = dx.plane(n, ch);
            for (std::size_t i = 0; i < plane; ++i) d[i] += gmean[i] * inv;
          }
          for (std::size_t i = 0; i < plane; ++i) {
            dx.plane(n, argmax_channel(x, n, i))[i] += gmax[i];
          }
        }
        break;
      }
      case OpKind::kDuplicate: {
        Tensor<T>& dx = grad_slot(grads, values, instr.inputs[0]);
        for (int n = 0; n < x.n(); ++n) {
          const T* g0 = dy.plane(n, 0);
          const T* g1 = dy.plane(n, 1);
          T* d = dx.plane(n, 0);
          for (std::size_t i = 0; i < plane; ++i) d[i] += g0[i] + g1[i];
        }
        break;
      }
      case OpKind::kAttentionCombine: {
        const Tensor<T>& m = values[instr.inputs[1]];
        const Tensor<T>& md = values[instr.inputs[2]];
        Tensor<T>& df = grad_slot(grads, values, instr.inputs[0]);
        Tensor<T>& dm = grad_slot(grads, values, instr.inputs[1]);
        Tensor<T>& dmd = grad_slot(grads, values, instr.inputs[2]);
        for (int n = 0; n < x.n(); ++n) {
          const T* mp = m.plane(n, 0);
          const T* dp = md.plane(n, 0);
          T* gm = dm.plane(n, 0);
          T* gd = dmd.plane(n, 0);
          for (int ch = 0; ch < x.c(); ++ch) {
            const T* f = x.plane(n, ch);
            const T* g = dy.plane(n, ch);
            T* gf = df.plane(n, ch);
            for (std::size_t i = 0; i < plane; ++i) {
              const T gfi = g[i] * f[i];
              gf[i] += g[i] * (T(1) + mp[i] + mp[i] * dp[i]);
              gm[i] += gfi * (T(1) + dp[i]);
              gd[i] += gfi * mp[i];
            }
          }
        }
        break;
      }
    }
  }
  for (int i = 0; i < program.input_count(); ++i) {
    out.inputs.push_back(grads[i].empty() ? Tensor<T>(values[i].shape())
                                          : std::move(grads[i]));
  }
  return out;
}

template <typename T>
void update_running_stats(const Program& program, const Trace<T>& trace,
                          ParameterStore<T>& params, T momentum) {
  if (trace.phase != Phase::kTrain) return;
  const auto& instrs = program.instrs();
  for (std::size_t i = 0; i < instrs.size(); ++i) {
    if (instrs[i].kind != OpKind::kBatchNorm) continue;
    const Tensor<T>& x = trace.values[instrs[i].inputs[0]];
    const double count = static_cast<double>(x.n()) * x.shape().plane();
    const auto& stats = trace.stats[i];
    auto& rm = params.values(instrs[i].name + ".running_mean");
    auto& rv = params.values(instrs[i].name + ".running_var");
    const int c = x.c();
    for (int ch = 0; ch < c; ++ch) {
      const double inv_std = stats[c + ch];
      double var = 1.0 / (inv_std * inv_std) - kBatchNormEps;
      if (count > 1) var *= count / (count - 1);
      rm[ch] = (T(1) - momentum) * rm[ch] + momentum * stats[ch];
      rv[ch] = (T(1) - momentum) * rv[ch] + momentum * static_cast<T>(var);
    }
  }
}

#define SFM_INSTANTIATE(T)                                                  \
  template Trace<T> forward_trace<T>(const Program&,                        \
                                     const ParameterStore<T>&,              \
                                     std::span<const Tensor<T>>, Phase);    \
  template Tensor<T> forward<T>(const Program&, const ParameterStore<T>&,   \
                                std::span<const Tensor<T>>, Phase);         \
  template Gradients<T> backward<T>(const Program&,                         \
                                    const ParameterStore<T>&,               \
                                    const Trace<T>&, const Tensor<T>&);     \
  template void update_running_stats<T>(const Program&, const Trace<T>&,    \
                                        ParameterStore<T>&, T);

SFM_INSTANTIATE(float)
SFM_INSTANTIATE(double)
#undef SFM_INSTANTIATE

}  // namespace sfm
