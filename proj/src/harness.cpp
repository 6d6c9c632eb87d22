/**
 * Copyright 2026 The qmrisim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "qmrisim/harness.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>

namespace qmrisim {

ThresholdPredictor::ThresholdPredictor(float threshold, float gain, int num_classes, int lesion_class)
    : threshold_(threshold), gain_(gain), classes_(num_classes), lesion_class_(lesion_class) {
  if (num_classes < 2 || lesion_class <= 0 || lesion_class >= num_classes)
    throw PredictorError("ThresholdPredictor: need >= 2 classes and a non-background lesion class");
}

Patch ThresholdPredictor::predict(const Patch& input) const {
  if (input.channels.empty()) throw PredictorError("ThresholdPredictor: empty input");
  Patch out;
  out.dims = input.dims;
  const std::size_t n = input.voxel_count();
  out.channels.assign(static_cast<std::size_t>(classes_), std::vector<float>(n, 0.0f));
  const auto& x = input.channels[0];
  for (int c = 1; c < classes_; ++c) {
    auto& dst = out.channels[static_cast<std::size_t>(c)];
    if (c == lesion_class_) {
      for (std::size_t v = 0; v < n; ++v) dst[v] = gain_ * (x[v] - threshold_);
    } else {
      std::fill(dst.begin(), dst.end(), -gain_);
    }
  }
  return out;
}

Patch ConstantPredictor::predict(const Patch& input) const {
  Patch out;
  out.dims = input.dims;
  for (float c : logits_) out.channels.emplace_back(input.voxel_count(), c);
  return out;
}

CommandPredictor::CommandPredictor(std::string command, int num_classes, std::filesystem::path scratch_dir)
    : command_(std::move(command)), classes_(num_classes), scratch_(std::move(scratch_dir)) {
  if (num_classes < 1) throw PredictorError("CommandPredictor: class count must be positive");
  if (scratch_.empty())
    scratch_ = std::filesystem::temp_directory_path() / ("qmrisim_bridge_" + std::to_string(::getpid()));
  std::filesystem::create_directories(scratch_);
}

Patch CommandPredictor::predict(const Patch& input) const {
  static std::atomic<uint64_t> counter{0};
  const uint64_t id = counter++;
  const auto in_path = scratch_ / ("patch_" + std::to_string(id) + "_in.qtns");
  const auto out_path = scratch_ / ("patch_" + std::to_string(id) + "_out.qtns");
  write_tensor(input, in_path);
  const std::string cmd = command_ + " '" + in_path.string() + "' '" + out_path.string() + "'";
  const int status = std::system(cmd.c_str());
  std::filesystem::remove(in_path);
  if (status != 0) {
    std::filesystem::remove(out_path);
    throw PredictorError("predictor command failed with status " + std::to_string(status) + ": " + cmd);
  }
  Patch out = read_tensor(out_path);
  std::filesystem::remove(out_path);
  return out;
}

void WindowSpec::validate() const {
  for (int p : patch)
    if (p <= 0) throw PredictorError("window patch dims must be positive");
  if (!(overlap >= 0.0 && overlap < 1.0)) throw PredictorError("window overlap must lie in [0, 1)");
  if (!(sigma_fraction > 0.0)) throw PredictorError("window sigma_fraction must be positive");
}

std::vector<int> window_starts(int n, int patch, double overlap) {
  if (n <= patch) return {0};
  const int stride = std::max(1, static_cast<int>(std::floor(patch * (1.0 - overlap))));
  std::set<int> starts;
  for (int s = 0; s + patch < n; s += stride) starts.insert(s);
  starts.insert(n - patch);
  return {starts.begin(), starts.end()};
}

std::vector<double> blend_weights(const Dims& patch, double sigma_fraction) {
  std::array<std::vector<double>, 3> axis;
  for (int a = 0; a < 3; ++a) {
    const double sigma = sigma_fraction * patch[a];
    const double centre = 0.5 * (patch[a] - 1);
    axis[a].resize(static_cast<std::size_t>(patch[a]));
    for (int i = 0; i < patch[a]; ++i) {
      const double d = i - centre;
      axis[a][static_cast<std::size_t>(i)] = std::exp(-0.5 * d * d / (sigma * sigma));
    }
  }
  std::vector<double> w(static_cast<std::size_t>(patch[0]) * patch[1] * patch[2]);
  std::size_t n = 0;
  for (int k = 0; k < patch[2]; ++k)
    for (int j = 0; j < patch[1]; ++j)
      for (int i = 0; i < patch[0]; ++i) w[n++] = axis[0][i] * axis[1][j] * axis[2][k];
  return w;
}

namespace {

// Copy `src` (dims sd) into a zero volume of dims dd at offset lo.
std::vector<float> pad_into(std::span<const float> src, const Dims& sd, const Dims& dd, const Dims& lo) {
  std::vector<float> out(static_cast<std::size_t>(dd[0]) * dd[1] * dd[2], 0.0f);
  for (int k = 0; k < sd[2]; ++k)
    for (int j = 0; j < sd[1]; ++j) {
      const std::size_t s = static_cast<std::size_t>(sd[0]) * (j + static_cast<std::size_t>(sd[1]) * k);
      const std::size_t d = lo[0] + static_cast<std::size_t>(dd[0]) * ((j + lo[1]) + static_cast<std::size_t>(dd[1]) * (k + lo[2]));
      std::copy_n(src.begin() + static_cast<long>(s), sd[0], out.begin() + static_cast<long>(d));
    }
  return out;
}

}  // namespace

Logits sliding_window_predict(const std::vector<VoxelGrid>& channels, const Predictor& model, const WindowSpec& spec) {
  spec.validate();
  if (channels.empty()) throw PredictorError("sliding_window_predict: no input channels");
  require_coregistered(channels.front(), std::span(channels).subspan(1), "sliding_window_predict");
  const Geometry& geom = channels.front().geometry();
  const Dims& vd = geom.dims;

  Dims pd{}, lo{};
  for (int a = 0; a < 3; ++a) {
    pd[a] = std::max(vd[a], spec.patch[a]);
    lo[a] = (pd[a] - vd[a]) / 2;
  }
  std::vector<std::vector<float>> padded;
  for (const auto& ch : channels) padded.push_back(pad_into(ch.values(), vd, pd, lo));

  const int classes = model.num_classes();
  const std::size_t total = static_cast<std::size_t>(pd[0]) * pd[1] * pd[2];
  std::vector<std::vector<double>> num(static_cast<std::size_t>(classes), std::vector<double>(total, 0.0));
  std::vector<double> den(total, 0.0);
  const auto weights = blend_weights(spec.patch, spec.sigma_fraction);

  const auto xs = window_starts(pd[0], spec.patch[0], spec.overlap);
  const auto ys = window_starts(pd[1], spec.patch[1], spec.overlap);
  const auto zs = window_starts(pd[2], spec.patch[2], spec.overlap);
  const Dims& P = spec.patch;

  Patch patch;
  patch.dims = P;
  patch.channels.assign(padded.size(), std::vector<float>(static_cast<std::size_t>(P[0]) * P[1] * P[2]));

  // Fixed window order; each voxel's sums accumulate in that order.
  for (int z0 : zs)
    for (int y0 : ys)
      for (int x0 : xs) {
        for (std::size_t c = 0; c < padded.size(); ++c) {
#pragma omp parallel for schedule(static)
          for (int k = 0; k < P[2]; ++k)
            for (int j = 0; j < P[1]; ++j) {
              const std::size_t src = x0 + static_cast<std::size_t>(pd[0]) * ((y0 + j) + static_cast<std::size_t>(pd[1]) * (z0 + k));
              const std::size_t dst = static_cast<std::size_t>(P[0]) * (j + static_cast<std::size_t>(P[1]) * k);
              std::copy_n(padded[c].begin() + static_cast<long>(src), P[0], patch.channels[c].begin() + static_cast<long>(dst));
            }
        }
        const Patch out = model.predict(patch);
        if (out.dims != P || out.channels.size() != static_cast<std::size_t>(classes)) {
          std::ostringstream os;
          os << "predictor returned " << out.channels.size() << " channels of " << out.dims[0] << "x" << out.dims[1]
             << "x" << out.dims[2] << ", expected " << classes << " of " << P[0] << "x" << P[1] << "x" << P[2];
          throw PredictorError(os.str());
        }
        for (const auto& ch : out.channels) {
          if (ch.size() != patch.voxel_count()) throw PredictorError("predictor channel has the wrong length");
          if (!std::all_of(ch.begin(), ch.end(), [](float x) { return std::isfinite(x); }))
            throw PredictorError("predictor returned a non-finite logit");
        }
#pragma omp parallel for schedule(static)
        for (int k = 0; k < P[2]; ++k)
          for (int j = 0; j < P[1]; ++j)
            for (int i = 0; i < P[0]; ++i) {
              const std::size_t pv = i + static_cast<std::size_t>(P[0]) * (j + static_cast<std::size_t>(P[1]) * k);
              const std::size_t gv = (x0 + i) + static_cast<std::size_t>(pd[0]) * ((y0 + j) + static_cast<std::size_t>(pd[1]) * (z0 + k));
              const double w = weights[pv];
              den[gv] += w;
              for (int c = 0; c < classes; ++c) {
                num[static_cast<std::size_t>(c)][gv] += w * out.channels[static_cast<std::size_t>(c)][pv];
              }
            }
      }

  Logits result;
  for (int c = 0; c < classes; ++c) {
    std::vector<float> out(geom.voxel_count());
    const auto& nc = num[static_cast<std::size_t>(c)];
#pragma omp parallel for schedule(static)
    for (int k = 0; k < vd[2]; ++k)
      for (int j = 0; j < vd[1]; ++j)
        for (int i = 0; i < vd[0]; ++i) {
          const std::size_t gv = (i + lo[0]) + static_cast<std::size_t>(pd[0]) * ((j + lo[1]) + static_cast<std::size_t>(pd[1]) * (k + lo[2]));
          out[geom.index(i, j, k)] = static_cast<float>(nc[gv] / den[gv]);
        }
    result.emplace_back(geom, std::move(out));
  }
  return result;
}

VoxelGrid flip_axes(const VoxelGrid& grid, const std::array<bool, 3>& flip) {
  const auto& d = grid.dims();
  std::vector<float> out(grid.size());
  const auto in = grid.values();
#pragma omp parallel for schedule(static)
  for (int k = 0; k < d[2]; ++k)
    for (int j = 0; j < d[1]; ++j)
      for (int i = 0; i < d[0]; ++i) {
        const int si = flip[0] ? d[0] - 1 - i : i;
        const int sj = flip[1] ? d[1] - 1 - j : j;
        const int sk = flip[2] ? d[2] - 1 - k : k;
        out[grid.geometry().index(i, j, k)] = in[grid.geometry().index(si, sj, sk)];
      }
  return VoxelGrid(grid.geometry(), std::move(out));
}

Logits tta_predict(const std::vector<VoxelGrid>& channels, const Predictor& model, const WindowSpec& spec) {
  if (channels.empty()) throw PredictorError("tta_predict: no input channels");
  const std::size_t n = channels.front().size();
  std::vector<std::vector<double>> acc;
  for (int combo = 0; combo < 8; ++combo) {
    const std::array<bool, 3> flip{(combo & 1) != 0, (combo & 2) != 0, (combo & 4) != 0};
    std::vector<VoxelGrid> flipped;
    for (const auto& ch : channels) flipped.push_back(combo ? flip_axes(ch, flip) : ch);
    Logits logits = sliding_window_predict(flipped, model, spec);
    if (acc.empty()) acc.assign(logits.size(), std::vector<double>(n, 0.0));
    for (std::size_t c = 0; c < logits.size(); ++c) {
      const VoxelGrid back = combo ? flip_axes(logits[c], flip) : logits[c];
      const auto v = back.values();
      auto& a = acc[c];
#pragma omp parallel for schedule(static)
      for (long i = 0; i < static_cast<long>(n); ++i) a[static_cast<std::size_t>(i)] += v[static_cast<std::size_t>(i)];
    }
  }
  Logits out;
  for (auto& a : acc) {
    std::vector<float> f(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = static_cast<float>(a[i] / 8.0);
    out.emplace_back(channels.front().geometry(), std::move(f));
  }
  return out;
}

Logits ensemble_logits(const std::vector<Logits>& per_contrast) {
  if (per_contrast.empty()) throw PredictorError("ensemble_logits: no inputs");
  const Logits& first = per_contrast.front();
  if (first.empty()) throw PredictorError("ensemble_logits: input without classes");
  for (const auto& l : per_contrast) {
    if (l.size() != first.size()) throw PredictorError("ensemble_logits: class count mismatch");
    require_coregistered(first.front(), l, "ensemble_logits");
  }
  const std::size_t n = first.front().size();
  const double count = static_cast<double>(per_contrast.size());
  Logits out;
  for (std::size_t c = 0; c < first.size(); ++c) {
    std::vector<float> f(n);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(n); ++i) {
      double s = 0.0;
      for (const auto& l : per_contrast) s += l[c][static_cast<std::size_t>(i)];
      f[static_cast<std::size_t>(i)] = static_cast<float>(s / count);
    }
    out.emplace_back(first.front().geometry(), std::move(f));
  }
  return out;
}

VoxelGrid logits_to_mask(const Logits& logits, int lesion_class) {
  if (logits.empty() || lesion_class < 0 || lesion_class >= static_cast<int>(logits.size()))
    throw PredictorError("logits_to_mask: lesion class " + std::to_string(lesion_class) + " out of range");
  require_coregistered(logits.front(), logits, "logits_to_mask");
  const std::size_t n = logits.front().size();
  std::vector<float> mask(n);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < static_cast<long>(n); ++i) {
    const auto v = static_cast<std::size_t>(i);
    int best = 0;
    float best_val = logits[0][v];
    for (std::size_t c = 1; c < logits.size(); ++c)
      if (logits[c][v] > best_val) {
        best_val = logits[c][v];
        best = static_cast<int>(c);
      }
    mask[v] = best == lesion_class ? 1.0f : 0.0f;
  }
  return VoxelGrid(logits.front().geometry(), std::move(mask));
}

}  // namespace qmrisim
