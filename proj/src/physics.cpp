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

#include "qmrisim/physics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "qmrisim/filter.hpp"
#include "qmrisim/kernels.hpp"
#include "qmrisim/random.hpp"
#include "qmrisim/resample.hpp"

namespace qmrisim {

std::string to_string(Sequence s) {
  switch (s) {
    case Sequence::FSE: return "FSE";
    case Sequence::GRE: return "GRE";
    case Sequence::FLAIR: return "FLAIR";
    case Sequence::MPRAGE: return "MPRAGE";
  }
  return "?";
}

Sequence parse_sequence(const std::string& name) {
  std::string up = name;
  std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
  if (up == "FSE") return Sequence::FSE;
  if (up == "GRE") return Sequence::GRE;
  if (up == "FLAIR") return Sequence::FLAIR;
  if (up == "MPRAGE") return Sequence::MPRAGE;
  throw std::invalid_argument("unknown sequence \"" + name + "\" (expected FSE, GRE, FLAIR or MPRAGE)");
}

namespace {

bool uses(Sequence s, const std::string& param) {
  const auto& p = ParamRanges::parameters(s);
  return std::find(p.begin(), p.end(), param) != p.end();
}

// Bounds every interval and realised value must respect.
void check_bound(const std::string& param, double v, const std::string& where) {
  std::ostringstream os;
  if (!std::isfinite(v)) {
    os << where << ": " << param << " is not finite";
    throw AcquisitionError(os.str());
  }
  if (param == "alpha") {
    if (!(v > 0.0 && v <= 90.0)) {
      os << where << ": alpha " << v << " deg outside (0, 90]";
      throw AcquisitionError(os.str());
    }
  } else if (param == "b0") {
    if (!(v >= 0.3 && v <= 7.0)) {
      os << where << ": b0 " << v << " T outside [0.3, 7]";
      throw AcquisitionError(os.str());
    }
  } else if (!(v > 0.0)) {
    os << where << ": " << param << " " << v << " s must be > 0";
    throw AcquisitionError(os.str());
  }
}

double& field_ref(AcquisitionParams& p, const std::string& param) {
  if (param == "tr") return p.tr;
  if (param == "te") return p.te;
  if (param == "ti") return p.ti;
  if (param == "tx") return p.tx;
  if (param == "alpha") return p.alpha;
  if (param == "b0") return p.b0;
  throw AcquisitionError("unknown acquisition parameter \"" + param + "\"");
}

bool jointly_feasible(const AcquisitionParams& p) {
  if (!(p.te < p.tr)) return false;
  if (uses(p.sequence, "ti") && !(p.ti < p.tr)) return false;
  if (p.sequence == Sequence::MPRAGE && !(p.ti + p.tx < p.tr)) return false;
  return true;
}

void require_sequence(const AcquisitionParams& p, Sequence expected) {
  if (p.sequence != expected)
    throw AcquisitionError("parameters are for " + to_string(p.sequence) + ", expected " + to_string(expected));
  p.validate();
}

void require_maps(const QmriVolume& q, const ReceiveField& b1) {
  const VoxelGrid others[] = {q.r1, q.r2s, q.mt, b1.b1};
  require_coregistered(q.pd, others, "forward model inputs");
}

template <typename VoxelFn>
VoxelGrid voxel_map(const QmriVolume& q, const ReceiveField& b1, VoxelFn fn) {
  const std::size_t n = q.pd.size();
  std::vector<float> out(n);
  const auto pd = q.pd.values();
  const auto r1 = q.r1.values();
  const auto r2 = q.r2s.values();
  const auto b = b1.b1.values();
#pragma omp parallel for schedule(static)
  for (long v = 0; v < static_cast<long>(n); ++v) {
    const auto i = static_cast<std::size_t>(v);
    out[i] = static_cast<float>(fn(b[i], pd[i], r1[i], r2[i]));
  }
  return VoxelGrid(q.pd.geometry(), std::move(out));
}

}  // namespace

void AcquisitionParams::validate() const {
  const std::string where = to_string(sequence) + " parameters";
  for (const auto& param : ParamRanges::parameters(sequence)) {
    AcquisitionParams copy = *this;
    check_bound(param, field_ref(copy, param), where);
  }
  if (!(te < tr)) throw AcquisitionError(where + ": te must be < tr");
  if (uses(sequence, "ti") && !(ti < tr)) throw AcquisitionError(where + ": ti must be < tr");
  if (sequence == Sequence::MPRAGE && !(td > 0.0))
    throw AcquisitionError(where + ": td must be > 0 (ti + tx < tr)");
}

nlohmann::json AcquisitionParams::to_json() const {
  nlohmann::json j = {{"sequence", to_string(sequence)}, {"tr", tr}, {"te", te}, {"b0", b0}};
  if (uses(sequence, "ti")) j["ti"] = ti;
  if (uses(sequence, "alpha")) j["alpha"] = alpha;
  if (sequence == Sequence::MPRAGE) {
    j["tx"] = tx;
    j["td"] = td;
  }
  return j;
}

AcquisitionParams AcquisitionParams::from_json(const nlohmann::json& j) {
  AcquisitionParams p;
  p.sequence = parse_sequence(j.at("sequence").get<std::string>());
  p.tr = j.at("tr").get<double>();
  p.te = j.at("te").get<double>();
  p.b0 = j.value("b0", 3.0);
  p.ti = j.value("ti", 0.0);
  p.alpha = j.value("alpha", 0.0);
  p.tx = j.value("tx", 0.0);
  p.td = j.value("td", p.sequence == Sequence::MPRAGE ? p.tr - p.ti - p.tx : 0.0);
  p.validate();
  return p;
}

ParamRanges ParamRanges::defaults() {
  ParamRanges r;
  const Interval b0{0.3, 7.0};
  r.set(Sequence::FSE, "tr", {2.0, 6.0});
  r.set(Sequence::FSE, "te", {0.06, 0.12});
  r.set(Sequence::FSE, "b0", b0);
  r.set(Sequence::GRE, "tr", {0.015, 0.05});
  r.set(Sequence::GRE, "te", {0.003, 0.01});
  r.set(Sequence::GRE, "alpha", {5.0, 40.0});
  r.set(Sequence::GRE, "b0", b0);
  r.set(Sequence::FLAIR, "tr", {6.0, 10.0});
  r.set(Sequence::FLAIR, "te", {0.08, 0.14});
  r.set(Sequence::FLAIR, "ti", {1.8, 2.6});
  r.set(Sequence::FLAIR, "b0", b0);
  r.set(Sequence::MPRAGE, "tr", {1.9, 2.5});
  r.set(Sequence::MPRAGE, "te", {0.002, 0.004});
  r.set(Sequence::MPRAGE, "ti", {0.6, 1.2});
  r.set(Sequence::MPRAGE, "tx", {0.005, 0.010});
  r.set(Sequence::MPRAGE, "alpha", {5.0, 12.0});
  r.set(Sequence::MPRAGE, "b0", b0);
  return r;
}

const std::vector<std::string>& ParamRanges::parameters(Sequence s) {
  static const std::vector<std::string> fse{"tr", "te", "b0"};
  static const std::vector<std::string> gre{"tr", "te", "alpha", "b0"};
  static const std::vector<std::string> flair{"tr", "te", "ti", "b0"};
  static const std::vector<std::string> mprage{"tr", "te", "ti", "tx", "alpha", "b0"};
  switch (s) {
    case Sequence::FSE: return fse;
    case Sequence::GRE: return gre;
    case Sequence::FLAIR: return flair;
    case Sequence::MPRAGE: return mprage;
  }
  return fse;
}

void ParamRanges::set(Sequence s, const std::string& param, Interval range) {
  ranges_[s][param] = range;
}

const Interval& ParamRanges::get(Sequence s, const std::string& param) const {
  auto it = ranges_.find(s);
  if (it == ranges_.end()) throw AcquisitionError("no parameter ranges for " + to_string(s));
  auto p = it->second.find(param);
  if (p == it->second.end()) throw AcquisitionError("no range for " + to_string(s) + "." + param);
  return p->second;
}

void ParamRanges::validate(Sequence s) const {
  for (const auto& param : parameters(s)) {
    const Interval& r = get(s, param);
    const std::string where = "ranges." + to_string(s) + "." + param;
    if (!(r.lo <= r.hi)) throw AcquisitionError(where + ": lower bound exceeds upper bound");
    check_bound(param, r.lo, where);
    check_bound(param, r.hi, where);
  }
}

nlohmann::json ParamRanges::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [seq, params] : ranges_)
    for (const auto& [name, r] : params) j[to_string(seq)][name] = {r.lo, r.hi};
  return j;
}

ParamRanges ParamRanges::from_json(const nlohmann::json& j, ParamRanges base) {
  if (!j.is_object()) throw AcquisitionError("param_ranges must be an object keyed by sequence");
  for (const auto& [seq_name, params] : j.items()) {
    const Sequence seq = parse_sequence(seq_name);
    if (!params.is_object()) throw AcquisitionError("param_ranges." + seq_name + " must be an object");
    for (const auto& [param, range] : params.items()) {
      if (!uses(seq, param))
        throw AcquisitionError("param_ranges." + seq_name + "." + param + ": not a parameter of " + seq_name);
      if (!range.is_array() || range.size() != 2 || !range[0].is_number() || !range[1].is_number())
        throw AcquisitionError("param_ranges." + seq_name + "." + param + ": expected [lo, hi]");
      base.set(seq, param, {range[0].get<double>(), range[1].get<double>()});
    }
    base.validate(seq);
  }
  return base;
}

AcquisitionParams sample_params(const ParamRanges& ranges, Sequence sequence, uint64_t seed) {
  ranges.validate(sequence);
  RandomStream rng(seed, stream_id("acquisition.params"), static_cast<uint64_t>(sequence));
  AcquisitionParams p;
  p.sequence = sequence;
  for (int attempt = 0; attempt <= 1000; ++attempt) {
    for (const auto& param : ParamRanges::parameters(sequence)) {
      const Interval& r = ranges.get(sequence, param);
      field_ref(p, param) = r.lo + rng.uniform() * (r.hi - r.lo);
    }
    if (sequence == Sequence::MPRAGE) p.td = p.tr - p.ti - p.tx;
    if (jointly_feasible(p)) {
      p.validate();
      return p;
    }
  }
  throw AcquisitionError("ranges for " + to_string(sequence) +
                         " admit no draw with te < tr, ti < tr and ti + tx < tr after 1000 redraws");
}

ReceiveField uniform_receive_field(const Geometry& geometry) { return {VoxelGrid(geometry, 1.0f)}; }

ReceiveField generate_receive_field(const Geometry& geometry, double amplitude, double smoothness_fwhm_mm,
                                    uint64_t seed) {
  if (!(amplitude >= 0.0 && amplitude < 1.0))
    throw std::invalid_argument("receive field amplitude must lie in [0, 1)");
  if (!(smoothness_fwhm_mm > 0.0)) throw std::invalid_argument("receive field FWHM must be positive");
  if (amplitude == 0.0) return uniform_receive_field(geometry);

  const double sigma_mm = fwhm_to_sigma(smoothness_fwhm_mm);
  // Coarse lattice with isotropic spacing sigma/2, never finer than the
  // input, covering every voxel centre.
  const double h = std::max(sigma_mm / 2.0, *std::min_element(geometry.spacing.begin(), geometry.spacing.end()));
  Dims coarse{};
  for (int a = 0; a < 3; ++a)
    coarse[a] = static_cast<int>(std::ceil((geometry.dims[a] - 1) * geometry.spacing[a] / h)) + 1;
  const std::size_t cn = static_cast<std::size_t>(coarse[0]) * coarse[1] * coarse[2];
  std::vector<double> noise(cn);
#pragma omp parallel for schedule(static)
  for (long v = 0; v < static_cast<long>(cn); ++v) {
    RandomStream rng(seed, kernels::kFieldNoiseStream, static_cast<uint64_t>(v));
    noise[static_cast<std::size_t>(v)] = rng.normal();
  }
  const double sigma_coarse = sigma_mm / h;
  smooth_in_place(noise, coarse, {sigma_coarse, sigma_coarse, sigma_coarse}, Boundary::Reflect);

  std::vector<float> coarse_f(noise.begin(), noise.end());
  const VoxelGrid coarse_grid(Geometry::make(coarse, {h, h, h}), std::move(coarse_f));
  const auto& d = geometry.dims;
  std::vector<double> logf(geometry.voxel_count());
#pragma omp parallel for schedule(static)
  for (int k = 0; k < d[2]; ++k)
    for (int j = 0; j < d[1]; ++j)
      for (int i = 0; i < d[0]; ++i)
        logf[geometry.index(i, j, k)] =
            sample_trilinear(coarse_grid, i * geometry.spacing[0] / h, j * geometry.spacing[1] / h,
                             k * geometry.spacing[2] / h, Extrapolation::Clamp);

  const Moments m = moments(logf);
  std::vector<float> field(logf.size());
  const double scale = m.stddev > 0.0 ? amplitude / m.stddev : 0.0;
#pragma omp parallel for schedule(static)
  for (long v = 0; v < static_cast<long>(logf.size()); ++v) {
    const auto i = static_cast<std::size_t>(v);
    field[i] = static_cast<float>(std::exp(scale * (logf[i] - m.mean)));
  }
  return {VoxelGrid(geometry, std::move(field))};
}

VoxelGrid simulate_fse(const QmriVolume& q, const AcquisitionParams& p, const ReceiveField& b1) {
  require_sequence(p, Sequence::FSE);
  require_maps(q, b1);
  const double tr = p.tr, te = p.te;
  return voxel_map(q, b1, [=](double b, double pd, double r1, double r2) {
    return kernels::fse_signal(b, pd, r1, r2, tr, te);
  });
}

VoxelGrid simulate_gre(const QmriVolume& q, const AcquisitionParams& p, const ReceiveField& b1) {
  require_sequence(p, Sequence::GRE);
  require_maps(q, b1);
  const double tr = p.tr, te = p.te;
  const auto flip = kernels::sincos_deg(p.alpha);
  return voxel_map(q, b1, [=](double b, double pd, double r1, double r2) {
    return kernels::gre_signal(b, pd, r1, r2, tr, te, flip);
  });
}

VoxelGrid simulate_flair(const QmriVolume& q, const AcquisitionParams& p, const ReceiveField& b1) {
  require_sequence(p, Sequence::FLAIR);
  require_maps(q, b1);
  const double tr = p.tr, te = p.te, ti = p.ti;
  return voxel_map(q, b1, [=](double b, double pd, double r1, double r2) {
    return kernels::flair_signal(b, pd, r1, r2, tr, te, ti);
  });
}

VoxelGrid simulate_mprage(const QmriVolume& q, const AcquisitionParams& p, const ReceiveField& b1) {
  require_sequence(p, Sequence::MPRAGE);
  require_maps(q, b1);
  const double te = p.te, ti = p.ti, tx = p.tx, td = p.td;
  const auto flip = kernels::sincos_deg(p.alpha);
  return voxel_map(q, b1, [=](double b, double pd, double r1, double r2) {
    return kernels::mprage_signal(b, pd, r1, r2, te, ti, tx, td, flip);
  });
}

VoxelGrid simulate(const QmriVolume& q, const AcquisitionParams& p, const ReceiveField& b1,
                   const B0Scaling& scaling) {
  const QmriVolume* maps = &q;
  QmriVolume scaled;
  if (!scaling.identity()) {
    if (!(scaling.reference_t > 0.0)) throw AcquisitionError("b0_scaling.reference_t must be positive");
    const double f1 = std::pow(p.b0 / scaling.reference_t, scaling.r1_exponent);
    const double f2 = std::pow(p.b0 / scaling.reference_t, scaling.r2s_exponent);
    auto rescale = [](const VoxelGrid& g, double f) {
      std::vector<float> v(g.values().begin(), g.values().end());
      for (auto& x : v) x = static_cast<float>(x * f);
      return VoxelGrid(g.geometry(), std::move(v));
    };
    scaled = QmriVolume{q.pd, rescale(q.r1, f1), rescale(q.r2s, f2), q.mt};
    maps = &scaled;
  }
  switch (p.sequence) {
    case Sequence::FSE: return simulate_fse(*maps, p, b1);
    case Sequence::GRE: return simulate_gre(*maps, p, b1);
    case Sequence::FLAIR: return simulate_flair(*maps, p, b1);
    case Sequence::MPRAGE: return simulate_mprage(*maps, p, b1);
  }
  throw AcquisitionError("unknown sequence");
}

}  // namespace qmrisim
