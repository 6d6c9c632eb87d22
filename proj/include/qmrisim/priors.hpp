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

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace qmrisim {

/// Channel order used by every 4-vector of tissue parameters.
enum QmriChannel : int { kPD = 0, kR1 = 1, kR2s = 2, kMT = 3 };
using QmriVector = std::array<double, 4>;

/// A prior file or in-memory prior set breaks the schema. `path()` is a
/// JSON pointer to the offending field.
class PriorError : public std::runtime_error {
 public:
  PriorError(std::string pointer, const std::string& message)
      : std::runtime_error(pointer + ": " + message), pointer_(std::move(pointer)) {}
  const std::string& path() const { return pointer_; }

 private:
  std::string pointer_;
};

struct MixtureComponent {
  double weight = 1.0;
  QmriVector mean{};
  QmriVector stddev{};
};

struct LabelPrior {
  std::vector<MixtureComponent> components;
  std::optional<double> smooth_fwhm_mm;  // within-label smoothing, off when empty
};

/// Per-label Gaussian mixtures over (PD, R1, R2*, MT).
class TissuePriorSet {
 public:
  TissuePriorSet() = default;
  explicit TissuePriorSet(std::map<int, LabelPrior> labels);

  const std::map<int, LabelPrior>& labels() const { return labels_; }
  bool contains(int label) const { return labels_.count(label) != 0; }
  const LabelPrior& at(int label) const;
  /// Copy with one label's prior replaced (or added).
  TissuePriorSet with(int label, LabelPrior prior) const;

  /// Weights nonnegative summing to 1 +- 1e-9; std >= 0; means within
  /// physical bounds (PD, R1, R2* >= 0; MT in [0, 100]).
  void validate() const;

  nlohmann::json to_json() const;

 private:
  std::map<int, LabelPrior> labels_;
};

/// Parse a prior document. Keys beginning with '_' are comments.
TissuePriorSet parse_priors(const nlohmann::json& doc);
TissuePriorSet load_priors(const std::filesystem::path& path);

/// The shipped placeholder priors (data/default_priors.json): labels
/// 0 background, 1 GM, 2 WM, 3 GM/WM partial volume, 4 CSF, 5 lesion.
TissuePriorSet default_priors();

}  // namespace qmrisim
