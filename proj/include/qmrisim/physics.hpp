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
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qmrisim/volume.hpp"

namespace qmrisim {

enum class Sequence { FSE, GRE, FLAIR, MPRAGE };

std::string to_string(Sequence s);
/// Case-insensitive; throws std::invalid_argument on unknown names.
Sequence parse_sequence(const std::string& name);

/// Invalid acquisition parameters or ranges.
class AcquisitionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Scanner settings for one simulated image. Times in seconds, flip angle
/// in degrees, field strength in tesla. Parameters a sequence does not use
/// are zero.
struct AcquisitionParams {
  Sequence sequence = Sequence::FSE;
  double tr = 0.0;
  double te = 0.0;
  double ti = 0.0;     // FLAIR, MPRAGE
  double tx = 0.0;     // MPRAGE readout spacing
  double td = 0.0;     // MPRAGE delay, TR - TI - TX
  double alpha = 0.0;  // GRE, MPRAGE
  double b0 = 3.0;

  /// Throws AcquisitionError naming the violated bound.
  void validate() const;
  nlohmann::json to_json() const;
  static AcquisitionParams from_json(const nlohmann::json& j);
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Uniform sampling intervals, per sequence and parameter name
/// ("tr", "te", "ti", "tx", "alpha", "b0").
class ParamRanges {
 public:
  /// Defaults: MPRAGE follows the published protocol distribution
  /// (TR 1.9-2.5 s, TI 0.6-1.2 s, TE 2-4 ms, alpha 5-12 deg, B0 0.3-7 T);
  /// the FSE, GRE and FLAIR ranges are plausible clinical settings.
  static ParamRanges defaults();

  /// Parameter names a sequence draws, in draw order.
  static const std::vector<std::string>& parameters(Sequence s);

  void set(Sequence s, const std::string& param, Interval range);
  const Interval& get(Sequence s, const std::string& param) const;
  bool has(Sequence s) const { return ranges_.count(s) != 0; }

  /// Every needed interval present, lo <= hi, inside the parameter bounds.
  void validate(Sequence s) const;

  nlohmann::json to_json() const;
  /// Overlay `j` (sequence -> param -> [lo, hi]) onto `base`.
  static ParamRanges from_json(const nlohmann::json& j, ParamRanges base = defaults());

 private:
  std::map<Sequence, std::map<std::string, Interval>> ranges_;
};

/// Independent uniform draws per parameter, redrawn (at most 1000 times)
/// until te < tr, ti < tr and TI + TX < TR hold. Pure in (ranges, seed).
AcquisitionParams sample_params(const ParamRanges& ranges, Sequence sequence, uint64_t seed);

/// Multiplicative receive sensitivity.
struct ReceiveField {
  VoxelGrid b1;
};

/// exp(a * z) where z is smoothed white noise standardised to zero mean and
/// unit variance over the volume. The noise lives on a grid with spacing
/// sigma/2 and is upsampled trilinearly, so cost does not grow with the
/// FWHM. amplitude 0 gives a field of exactly 1.
ReceiveField generate_receive_field(const Geometry& geometry, double amplitude, double smoothness_fwhm_mm,
                                    uint64_t seed);
ReceiveField uniform_receive_field(const Geometry& geometry);

/// Optional power-law field-strength dependence of the relaxation rates:
/// R1 <- R1 (B0/ref)^r1_exponent, R2* <- R2* (B0/ref)^r2s_exponent. The
/// defaults leave the maps untouched.
struct B0Scaling {
  double reference_t = 3.0;
  double r1_exponent = 0.0;
  double r2s_exponent = 0.0;
  bool identity() const { return r1_exponent == 0.0 && r2s_exponent == 0.0; }
};

VoxelGrid simulate_fse(const QmriVolume& q, const AcquisitionParams& p, const ReceiveField& b1);
VoxelGrid simulate_gre(const QmriVolume& q, const AcquisitionParams& p, const ReceiveField& b1);
VoxelGrid simulate_flair(const QmriVolume& q, const AcquisitionParams& p, const ReceiveField& b1);
VoxelGrid simulate_mprage(const QmriVolume& q, const AcquisitionParams& p, const ReceiveField& b1);

/// Dispatch on p.sequence, applying `scaling` to R1/R2* first.
VoxelGrid simulate(const QmriVolume& q, const AcquisitionParams& p, const ReceiveField& b1,
                   const B0Scaling& scaling = {});

}  // namespace qmrisim
