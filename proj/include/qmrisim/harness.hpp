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

#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "qmrisim/tensor_io.hpp"
#include "qmrisim/volume.hpp"

namespace qmrisim {

/// Per-class logit volumes on a common lattice.
using Logits = std::vector<VoxelGrid>;

class PredictorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Voxel classifier contract: a patch in, per-class logits of the same
/// spatial dims out. Calls are synchronous and must not depend on earlier
/// calls.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual int num_classes() const = 0;
  virtual Patch predict(const Patch& input) const = 0;
};

/// Reference mock: class 0 logit 0, lesion class logit gain * (x - threshold)
/// on channel 0; any other classes get -gain. Pointwise, hence
/// flip-equivariant.
class ThresholdPredictor : public Predictor {
 public:
  ThresholdPredictor(float threshold, float gain = 1.0f, int num_classes = 2, int lesion_class = 1);
  int num_classes() const override { return classes_; }
  Patch predict(const Patch& input) const override;

 private:
  float threshold_, gain_;
  int classes_, lesion_class_;
};

/// Same logit vector at every voxel.
class ConstantPredictor : public Predictor {
 public:
  explicit ConstantPredictor(std::vector<float> logits) : logits_(std::move(logits)) {}
  int num_classes() const override { return static_cast<int>(logits_.size()); }
  Patch predict(const Patch& input) const override;

 private:
  std::vector<float> logits_;
};

/// Runs `command <input.qtns> <output.qtns>` per patch through the shell,
/// exchanging tensors in the format of tensor_io.hpp.
class CommandPredictor : public Predictor {
 public:
  CommandPredictor(std::string command, int num_classes, std::filesystem::path scratch_dir = {});
  int num_classes() const override { return classes_; }
  Patch predict(const Patch& input) const override;

 private:
  std::string command_;
  int classes_;
  std::filesystem::path scratch_;
};

struct WindowSpec {
  Dims patch{192, 192, 192};
  double overlap = 0.5;
  double sigma_fraction = 0.125;  // Gaussian blend std as a fraction of patch size

  void validate() const;
};

/// Window start offsets along one axis of length n >= patch: multiples of
/// the stride max(1, floor(patch * (1 - overlap))), plus n - patch so the
/// far edge is covered.
std::vector<int> window_starts(int n, int patch, double overlap);

/// Separable Gaussian importance weights over one patch, peak 1.
std::vector<double> blend_weights(const Dims& patch, double sigma_fraction);

/// Normalised Gaussian-blended sliding-window inference. Volumes smaller
/// than the patch are zero-padded symmetrically and cropped back.
Logits sliding_window_predict(const std::vector<VoxelGrid>& channels, const Predictor& model, const WindowSpec& spec);

/// Mean of the un-flipped sliding-window logits over all 8 axis-flip
/// combinations.
Logits tta_predict(const std::vector<VoxelGrid>& channels, const Predictor& model, const WindowSpec& spec);

/// Voxel-wise arithmetic mean across contrasts.
Logits ensemble_logits(const std::vector<Logits>& per_contrast);

/// argmax(logits) == lesion_class, ties to the lowest class index.
VoxelGrid logits_to_mask(const Logits& logits, int lesion_class);

/// Mirror a grid along the flagged axes (geometry unchanged).
VoxelGrid flip_axes(const VoxelGrid& grid, const std::array<bool, 3>& flip);

}  // namespace qmrisim
