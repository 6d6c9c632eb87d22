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

#include "qmrisim/corrupt.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "qmrisim/filter.hpp"
#include "qmrisim/kernels.hpp"
#include "qmrisim/random.hpp"
#include "qmrisim/resample.hpp"

namespace qmrisim {

VoxelGrid add_rician(const VoxelGrid& signal, double sigma, uint64_t seed) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("Rician sigma must be >= 0");
  if (sigma == 0.0) {
    std::vector<float> out(signal.values().begin(), signal.values().end());
    for (auto& v : out) v = std::abs(v);
    return VoxelGrid(signal.geometry(), std::move(out));
  }
  const auto in = signal.values();
  std::vector<float> out(in.size());
#pragma omp parallel for schedule(static)
  for (long v = 0; v < static_cast<long>(in.size()); ++v) {
    const auto i = static_cast<std::size_t>(v);
    out[i] = static_cast<float>(kernels::rician_sample(in[i], sigma, seed, i));
  }
  return VoxelGrid(signal.geometry(), std::move(out));
}

VoxelGrid add_gaussian(const VoxelGrid& signal, double sigma, uint64_t seed) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("Gaussian noise sigma must be >= 0");
  const auto in = signal.values();
  std::vector<float> out(in.size());
#pragma omp parallel for schedule(static)
  for (long v = 0; v < static_cast<long>(in.size()); ++v) {
    const auto i = static_cast<std::size_t>(v);
    RandomStream rng(seed, kernels::kGaussianNoiseStream, i);
    out[i] = static_cast<float>(in[i] + sigma * rng.normal());
  }
  return VoxelGrid(signal.geometry(), std::move(out));
}

namespace {

struct FftwFree {
  void operator()(fftw_complex* p) const { fftw_free(p); }
};
struct PlanDeleter {
  void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
};
using FftBuffer = std::unique_ptr<fftw_complex[], FftwFree>;
using FftPlan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

FftBuffer make_buffer(int n) { return FftBuffer(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))); }

void truncate_axis(std::vector<double>& field, const Dims& dims, int axis, double fraction) {
  const int n = dims[axis];
  const long keep = static_cast<long>(std::floor(fraction * n / 2.0));
  const long stride = axis == 0 ? 1 : axis == 1 ? dims[0] : static_cast<long>(dims[0]) * dims[1];
  const int oa = axis == 0 ? 1 : 0;
  const int ob = axis == 2 ? 1 : 2;
  const long sa = oa == 0 ? 1 : oa == 1 ? dims[0] : static_cast<long>(dims[0]) * dims[1];
  const long sb = ob == 0 ? 1 : ob == 1 ? dims[0] : static_cast<long>(dims[0]) * dims[1];
  const long lines = static_cast<long>(dims[oa]) * dims[ob];

  // Planning is not thread-safe; executing a shared plan on private
  // fftw_malloc'd buffers is.
  FftBuffer proto = make_buffer(n);
  FftPlan forward(fftw_plan_dft_1d(n, proto.get(), proto.get(), FFTW_FORWARD, FFTW_ESTIMATE));
  FftPlan backward(fftw_plan_dft_1d(n, proto.get(), proto.get(), FFTW_BACKWARD, FFTW_ESTIMATE));

#pragma omp parallel
  {
    FftBuffer buf = make_buffer(n);
#pragma omp for schedule(static)
    for (long l = 0; l < lines; ++l) {
      double* base = field.data() + (l % dims[oa]) * sa + (l / dims[oa]) * sb;
      for (int i = 0; i < n; ++i) {
        buf[i][0] = base[i * stride];
        buf[i][1] = 0.0;
      }
      fftw_execute_dft(forward.get(), buf.get(), buf.get());
      for (int f = 0; f < n; ++f) {
        const long k = f <= n / 2 ? f : f - n;  // signed frequency; n/2 kept positive
        const long mag = k < 0 ? -k : k;
        if (mag > keep) buf[f][0] = buf[f][1] = 0.0;
      }
      fftw_execute_dft(backward.get(), buf.get(), buf.get());
      for (int i = 0; i < n; ++i) base[i * stride] = buf[i][0] / n;
    }
  }
}

}  // namespace

VoxelGrid gibbs_ringing(const VoxelGrid& signal, const std::array<double, 3>& kept_fraction) {
  for (int a = 0; a < 3; ++a)
    if (!(kept_fraction[a] > 0.0 && kept_fraction[a] <= 1.0))
      throw std::invalid_argument("gibbs kept_fraction must lie in (0, 1]");
  std::vector<double> field(signal.values().begin(), signal.values().end());
  for (int a = 0; a < 3; ++a)
    if (kept_fraction[a] < 1.0) truncate_axis(field, signal.dims(), a, kept_fraction[a]);
  return VoxelGrid(signal.geometry(), std::vector<float>(field.begin(), field.end()));
}

VoxelGrid lowres_reslice(const VoxelGrid& signal, const Spacing& simulated_spacing) {
  const auto& native = signal.spacing();
  std::array<double, 3> blur_mm{};
  for (int a = 0; a < 3; ++a) {
    if (!(simulated_spacing[a] >= native[a])) {
      std::ostringstream os;
      os << "simulated spacing " << simulated_spacing[a] << " mm on axis " << a << " is below native spacing "
         << native[a] << " mm";
      throw std::invalid_argument(os.str());
    }
    const double extra = std::sqrt(simulated_spacing[a] * simulated_spacing[a] - native[a] * native[a]);
    blur_mm[a] = fwhm_to_sigma(extra);
  }
  if (simulated_spacing == native) return signal;
  const VoxelGrid blurred = gaussian_smooth(signal, blur_mm, Boundary::Reflect);
  const VoxelGrid coarse = resample(blurred, simulated_spacing, Interpolation::Trilinear);
  return resample_to(coarse, signal.geometry(), Interpolation::Trilinear, Extrapolation::Clamp);
}

VoxelGrid bias_field_augment(const VoxelGrid& signal, double amplitude, double fwhm_mm, uint64_t seed) {
  if (amplitude == 0.0) return signal;
  const ReceiveField field = generate_receive_field(signal.geometry(), amplitude, fwhm_mm, seed);
  const auto in = signal.values();
  const auto f = field.b1.values();
  std::vector<float> out(in.size());
#pragma omp parallel for schedule(static)
  for (long v = 0; v < static_cast<long>(in.size()); ++v) {
    const auto i = static_cast<std::size_t>(v);
    out[i] = in[i] * f[i];
  }
  return VoxelGrid(signal.geometry(), std::move(out));
}

// ---------------------------------------------------------------------------
// AugmentPlan

AugmentPlan AugmentPlan::disabled() {
  AugmentPlan p;
  p.affine.enabled = false;
  p.elastic.enabled = false;
  p.flip_probability = {0.0, 0.0, 0.0};
  p.crop.enabled = false;
  p.crop.require_lesion = false;
  p.bias.enabled = false;
  p.gibbs.enabled = false;
  p.lowres.enabled = false;
  p.rician.enabled = false;
  p.gaussian.enabled = false;
  return p;
}

void AugmentPlan::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("augment." + m); };
  auto interval = [&](const Interval& r, const std::string& name, double lo, double hi) {
    if (!(r.lo <= r.hi)) fail(name + ": lower bound exceeds upper bound");
    if (r.lo < lo || r.hi > hi) {
      std::ostringstream os;
      os << name << ": [" << r.lo << ", " << r.hi << "] outside [" << lo << ", " << hi << "]";
      fail(os.str());
    }
  };
  if (affine.rotation_deg < 0 || affine.scale < 0 || affine.scale >= 1 || affine.translation_mm < 0)
    fail("affine: ranges must be nonnegative and scale < 1");
  if (elastic.enabled && (!(elastic.control_spacing_mm > 0) || elastic.displacement_std_mm < 0))
    fail("elastic: control spacing must be positive and displacement std >= 0");
  for (double p : flip_probability)
    if (!(p >= 0.0 && p <= 1.0)) fail("flip_probability: entries must lie in [0, 1]");
  for (int s : crop.size)
    if (s <= 0) fail("crop.size: entries must be positive");
  if (bias.enabled) {
    interval(bias.amplitude, "bias.amplitude", 0.0, 0.999);
    if (!(bias.fwhm_mm > 0)) fail("bias.fwhm_mm must be positive");
  }
  if (gibbs.enabled) {
    interval(gibbs.kept_fraction, "gibbs.kept_fraction", 0.0, 1.0);
    if (!(gibbs.kept_fraction.lo > 0.0)) fail("gibbs.kept_fraction: must be > 0");
  }
  if (lowres.enabled) interval(lowres.slice_spacing_mm, "lowres.slice_spacing_mm", 0.0, 1e3);
  if (rician.enabled) interval(rician.sigma, "rician.sigma", 0.0, 1e30);
  if (gaussian.enabled) interval(gaussian.sigma, "gaussian.sigma", 0.0, 1e30);
}

nlohmann::json AugmentPlan::to_json() const {
  using nlohmann::json;
  auto iv = [](const Interval& r) { return json::array({r.lo, r.hi}); };
  auto noise = [&](const NoiseStage& s) {
    return json{{"enabled", s.enabled}, {"sigma", iv(s.sigma)}, {"relative", s.relative}};
  };
  return json{
      {"affine",
       {{"enabled", affine.enabled},
        {"rotation_deg", affine.rotation_deg},
        {"scale", affine.scale},
        {"translation_mm", affine.translation_mm}}},
      {"elastic",
       {{"enabled", elastic.enabled},
        {"control_spacing_mm", elastic.control_spacing_mm},
        {"displacement_std_mm", elastic.displacement_std_mm}}},
      {"flip_probability", flip_probability},
      {"crop",
       {{"enabled", crop.enabled},
        {"size", crop.size},
        {"pad_to_crop", crop.pad_to_crop},
        {"require_lesion", crop.require_lesion},
        {"lesion_label", crop.lesion_label}}},
      {"bias", {{"enabled", bias.enabled}, {"amplitude", iv(bias.amplitude)}, {"fwhm_mm", bias.fwhm_mm}}},
      {"gibbs", {{"enabled", gibbs.enabled}, {"kept_fraction", iv(gibbs.kept_fraction)}}},
      {"lowres", {{"enabled", lowres.enabled}, {"slice_spacing_mm", iv(lowres.slice_spacing_mm)}}},
      {"rician", noise(rician)},
      {"gaussian", noise(gaussian)},
  };
}

namespace {

void require_keys(const nlohmann::json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw std::invalid_argument(where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw std::invalid_argument(where + "." + k + ": unknown key");
  }
}

Interval read_interval(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw std::invalid_argument(where + ": expected [lo, hi]");
  return {j[0].get<double>(), j[1].get<double>()};
}

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw std::invalid_argument(where + "." + key + ": wrong type");
  }
}

}  // namespace

AugmentPlan AugmentPlan::from_json(const nlohmann::json& j, AugmentPlan p) {
  require_keys(j, "augment",
               {"affine", "elastic", "flip_probability", "crop", "bias", "gibbs", "lowres", "rician", "gaussian"});
  if (j.contains("affine")) {
    const auto& s = j["affine"];
    require_keys(s, "augment.affine", {"enabled", "rotation_deg", "scale", "translation_mm"});
    read_opt(s, "enabled", p.affine.enabled, "augment.affine");
    read_opt(s, "rotation_deg", p.affine.rotation_deg, "augment.affine");
    read_opt(s, "scale", p.affine.scale, "augment.affine");
    read_opt(s, "translation_mm", p.affine.translation_mm, "augment.affine");
  }
  if (j.contains("elastic")) {
    const auto& s = j["elastic"];
    require_keys(s, "augment.elastic", {"enabled", "control_spacing_mm", "displacement_std_mm"});
    read_opt(s, "enabled", p.elastic.enabled, "augment.elastic");
    read_opt(s, "control_spacing_mm", p.elastic.control_spacing_mm, "augment.elastic");
    read_opt(s, "displacement_std_mm", p.elastic.displacement_std_mm, "augment.elastic");
  }
  read_opt(j, "flip_probability", p.flip_probability, "augment");
  if (j.contains("crop")) {
    const auto& s = j["crop"];
    require_keys(s, "augment.crop", {"enabled", "size", "pad_to_crop", "require_lesion", "lesion_label"});
    read_opt(s, "enabled", p.crop.enabled, "augment.crop");
    read_opt(s, "size", p.crop.size, "augment.crop");
    read_opt(s, "pad_to_crop", p.crop.pad_to_crop, "augment.crop");
    read_opt(s, "require_lesion", p.crop.require_lesion, "augment.crop");
    read_opt(s, "lesion_label", p.crop.lesion_label, "augment.crop");
  }
  if (j.contains("bias")) {
    const auto& s = j["bias"];
    require_keys(s, "augment.bias", {"enabled", "amplitude", "fwhm_mm"});
    read_opt(s, "enabled", p.bias.enabled, "augment.bias");
    if (s.contains("amplitude")) p.bias.amplitude = read_interval(s["amplitude"], "augment.bias.amplitude");
    read_opt(s, "fwhm_mm", p.bias.fwhm_mm, "augment.bias");
  }
  if (j.contains("gibbs")) {
    const auto& s = j["gibbs"];
    require_keys(s, "augment.gibbs", {"enabled", "kept_fraction"});
    read_opt(s, "enabled", p.gibbs.enabled, "augment.gibbs");
    if (s.contains("kept_fraction"))
      p.gibbs.kept_fraction = read_interval(s["kept_fraction"], "augment.gibbs.kept_fraction");
  }
  if (j.contains("lowres")) {
    const auto& s = j["lowres"];
    require_keys(s, "augment.lowres", {"enabled", "slice_spacing_mm"});
    read_opt(s, "enabled", p.lowres.enabled, "augment.lowres");
    if (s.contains("slice_spacing_mm"))
      p.lowres.slice_spacing_mm = read_interval(s["slice_spacing_mm"], "augment.lowres.slice_spacing_mm");
  }
  for (auto [key, stage] : {std::pair{"rician", &p.rician}, std::pair{"gaussian", &p.gaussian}}) {
    if (!j.contains(key)) continue;
    const std::string where = std::string("augment.") + key;
    const auto& s = j[key];
    require_keys(s, where, {"enabled", "sigma", "relative"});
    read_opt(s, "enabled", stage->enabled, where);
    if (s.contains("sigma")) stage->sigma = read_interval(s["sigma"], where + ".sigma");
    read_opt(s, "relative", stage->relative, where);
  }
  p.validate();
  return p;
}

// ---------------------------------------------------------------------------
// Spatial transform

namespace {

struct SpatialTransform {
  Dims in_dims{};
  Spacing spacing{};
  Dims frame{};    // padded frame
  Dims pad_lo{};   // input offset inside the frame
  std::array<bool, 3> flip{};
  bool use_affine = false;
  Eigen::Matrix3d linear = Eigen::Matrix3d::Identity();  // mm -> mm, about the centre
  Eigen::Vector3d shift_mm = Eigen::Vector3d::Zero();
  std::optional<std::array<VoxelGrid, 3>> displacement;  // control-grid displacement, mm
  double control_spacing_mm = 1.0;

  // Frame voxel -> continuous input voxel coordinate.
  Eigen::Vector3d map(const Eigen::Vector3d& frame_voxel) const {
    Eigen::Vector3d q;
    for (int a = 0; a < 3; ++a) {
      const double p = flip[a] ? (frame[a] - 1) - frame_voxel[a] : frame_voxel[a];
      q[a] = p - pad_lo[a];
    }
    if (displacement) {
      // Control point (0,0,0) sits one spacing before voxel (0,0,0).
      const double ci = q[0] * spacing[0] / control_spacing_mm + 1.0;
      const double cj = q[1] * spacing[1] / control_spacing_mm + 1.0;
      const double ck = q[2] * spacing[2] / control_spacing_mm + 1.0;
      for (int a = 0; a < 3; ++a)
        q[a] += sample_trilinear((*displacement)[a], ci, cj, ck, Extrapolation::Clamp) / spacing[a];
    }
    if (use_affine) {
      Eigen::Vector3d x;
      for (int a = 0; a < 3; ++a) x[a] = (q[a] - 0.5 * (in_dims[a] - 1)) * spacing[a];
      x = linear * x + shift_mm;
      for (int a = 0; a < 3; ++a) q[a] = x[a] / spacing[a] + 0.5 * (in_dims[a] - 1);
    }
    return q;
  }
};

Eigen::Matrix3d rotation_xyz(double rx, double ry, double rz) {
  return (Eigen::AngleAxisd(rz, Eigen::Vector3d::UnitZ()) * Eigen::AngleAxisd(ry, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(rx, Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

template <typename Sampler>
VoxelGrid warp(const SpatialTransform& t, const VoxelGrid& src, const Dims& out_dims, const Dims& offset,
               Sampler sample) {
  const Geometry geom = Geometry::make(out_dims, src.spacing(), [&] {
    // Output voxel o sits at frame voxel o + offset; without affine/elastic
    // that is input voxel o + offset - pad_lo.
    Affine shift = Affine::Identity();
    for (int a = 0; a < 3; ++a) shift(a, 3) = offset[a] - t.pad_lo[a];
    return Affine(src.affine() * shift);
  }());
  std::vector<float> out(geom.voxel_count());
#pragma omp parallel for schedule(static)
  for (int k = 0; k < out_dims[2]; ++k)
    for (int j = 0; j < out_dims[1]; ++j)
      for (int i = 0; i < out_dims[0]; ++i) {
        const Eigen::Vector3d q = t.map(Eigen::Vector3d(i + offset[0], j + offset[1], k + offset[2]));
        out[geom.index(i, j, k)] = sample(src, q[0], q[1], q[2]);
      }
  return VoxelGrid(geom, std::move(out));
}

}  // namespace

SpatialResult spatial_augment(const std::vector<VoxelGrid>& images, const std::optional<LabelVolume>& labels,
                              const AugmentPlan& plan, uint64_t seed) {
  plan.validate();
  if (images.empty() && !labels) throw std::invalid_argument("spatial_augment: no inputs");
  const VoxelGrid& ref = images.empty() ? labels->grid() : images.front();
  {
    std::vector<VoxelGrid> rest(images.begin() + (images.empty() ? 0 : 1), images.end());
    if (labels && !images.empty()) rest.push_back(labels->grid());
    require_coregistered(ref, rest, "spatial_augment");
  }

  SpatialTransform t;
  t.in_dims = ref.dims();
  t.spacing = ref.spacing();
  nlohmann::json realized = nlohmann::json::object();

  Dims out_dims = ref.dims();
  t.frame = ref.dims();
  if (plan.crop.enabled) {
    for (int a = 0; a < 3; ++a) {
      if (plan.crop.size[a] > ref.dims()[a]) {
        if (!plan.crop.pad_to_crop) {
          std::ostringstream os;
          os << "crop size " << plan.crop.size[a] << " exceeds volume extent " << ref.dims()[a] << " on axis " << a
             << " and padding is disabled";
          throw std::invalid_argument(os.str());
        }
        t.frame[a] = plan.crop.size[a];
        t.pad_lo[a] = (t.frame[a] - ref.dims()[a]) / 2;
      }
      out_dims[a] = plan.crop.size[a];
    }
  }

  RandomStream rng(derive_seed(seed, "spatial.affine"), stream_id("spatial"));
  if (plan.affine.enabled) {
    std::array<double, 3> rot{}, scale{}, shift{};
    for (int a = 0; a < 3; ++a) rot[a] = rng.uniform(-plan.affine.rotation_deg, plan.affine.rotation_deg);
    for (int a = 0; a < 3; ++a) scale[a] = rng.uniform(1.0 - plan.affine.scale, 1.0 + plan.affine.scale);
    for (int a = 0; a < 3; ++a) shift[a] = rng.uniform(-plan.affine.translation_mm, plan.affine.translation_mm);
    const double d2r = std::numbers::pi / 180.0;
    t.use_affine = true;
    t.linear = rotation_xyz(rot[0] * d2r, rot[1] * d2r, rot[2] * d2r) *
               Eigen::Vector3d(scale[0], scale[1], scale[2]).asDiagonal();
    t.shift_mm = Eigen::Vector3d(shift[0], shift[1], shift[2]);
    realized["affine"] = {{"rotation_deg", rot}, {"scale", scale}, {"translation_mm", shift}};
  }

  if (plan.elastic.enabled && plan.elastic.displacement_std_mm > 0.0) {
    const double cs = plan.elastic.control_spacing_mm;
    Dims cdims{};
    for (int a = 0; a < 3; ++a)
      cdims[a] = static_cast<int>(std::ceil((ref.dims()[a] - 1) * ref.spacing()[a] / cs)) + 3;
    const uint64_t eseed = derive_seed(seed, "spatial.elastic");
    std::array<VoxelGrid, 3> disp;
    const Geometry cgeom = Geometry::make(cdims, {cs, cs, cs});
    for (int a = 0; a < 3; ++a) {
      std::vector<float> d(cgeom.voxel_count());
      for (std::size_t n = 0; n < d.size(); ++n) {
        RandomStream r(eseed, stream_id("spatial.elastic"), n * 3 + static_cast<uint64_t>(a));
        d[n] = static_cast<float>(plan.elastic.displacement_std_mm * r.normal());
      }
      disp[a] = VoxelGrid(cgeom, std::move(d));
    }
    t.displacement = std::move(disp);
    t.control_spacing_mm = cs;
    realized["elastic"] = {{"seed", eseed}, {"control_dims", cdims}};
  }

  RandomStream flip_rng(derive_seed(seed, "spatial.flip"), stream_id("spatial.flip"));
  for (int a = 0; a < 3; ++a) t.flip[a] = flip_rng.uniform() < plan.flip_probability[a];
  realized["flip"] = t.flip;

  // Crop offset inside the padded frame.
  Dims offset{0, 0, 0};
  std::optional<LabelVolume> full_labels;
  if (plan.crop.enabled) {
    RandomStream crop_rng(derive_seed(seed, "spatial.crop"), stream_id("spatial.crop"));
    auto draw = [&] {
      Dims o{};
      for (int a = 0; a < 3; ++a) o[a] = static_cast<int>(crop_rng.uniform_int(0, t.frame[a] - out_dims[a]));
      return o;
    };
    offset = draw();
    if (plan.crop.require_lesion && labels) {
      const VoxelGrid frame_labels = warp(t, labels->grid(), t.frame, {0, 0, 0}, [](const VoxelGrid& g, double i, double j, double k) {
        return sample_nearest(g, i, j, k, Extrapolation::Zero);
      });
      const auto& fd = t.frame;
      std::vector<std::array<int, 3>> lesion;
      for (int k = 0; k < fd[2]; ++k)
        for (int j = 0; j < fd[1]; ++j)
          for (int i = 0; i < fd[0]; ++i)
            if (static_cast<int>(frame_labels.at(i, j, k)) == plan.crop.lesion_label) lesion.push_back({i, j, k});
      auto contains = [&](const Dims& o) {
        for (const auto& v : lesion) {
          bool in = true;
          for (int a = 0; a < 3; ++a) in = in && v[a] >= o[a] && v[a] < o[a] + out_dims[a];
          if (in) return true;
        }
        return false;
      };
      if (!lesion.empty() && !contains(offset)) {
        bool found = false;
        for (int attempt = 0; attempt < 20 && !found; ++attempt) {
          offset = draw();
          found = contains(offset);
        }
        if (!found) {
          const auto& v = lesion[static_cast<std::size_t>(crop_rng.uniform_int(0, static_cast<int64_t>(lesion.size()) - 1))];
          for (int a = 0; a < 3; ++a)
            offset[a] = std::clamp(v[a] - out_dims[a] / 2, 0, t.frame[a] - out_dims[a]);
        }
      }
    }
    realized["crop"] = {{"offset", offset}, {"size", out_dims}, {"frame", t.frame}};
  }

  SpatialResult result;
  for (const auto& img : images)
    result.images.push_back(warp(t, img, out_dims, offset, [](const VoxelGrid& g, double i, double j, double k) {
      return sample_trilinear(g, i, j, k, Extrapolation::Zero);
    }));
  if (labels) {
    VoxelGrid warped = warp(t, labels->grid(), out_dims, offset, [](const VoxelGrid& g, double i, double j, double k) {
      return sample_nearest(g, i, j, k, Extrapolation::Zero);
    });
    result.labels = LabelVolume(std::move(warped), labels->names());
  }
  result.realized = std::move(realized);
  return result;
}

// ---------------------------------------------------------------------------
// Intensity chain

IntensityResult corrupt_intensity(const VoxelGrid& signal, const AugmentPlan& plan, uint64_t seed) {
  plan.validate();
  nlohmann::json realized = nlohmann::json::object();
  VoxelGrid img = signal;

  if (plan.bias.enabled) {
    RandomStream r(derive_seed(seed, "intensity.bias.params"), stream_id("intensity"));
    const double amp = r.uniform(plan.bias.amplitude.lo, plan.bias.amplitude.hi);
    const uint64_t fseed = derive_seed(seed, "intensity.bias.field");
    img = bias_field_augment(img, amp, plan.bias.fwhm_mm, fseed);
    realized["bias"] = {{"amplitude", amp}, {"fwhm_mm", plan.bias.fwhm_mm}, {"seed", fseed}};
  }
  if (plan.gibbs.enabled) {
    RandomStream r(derive_seed(seed, "intensity.gibbs"), stream_id("intensity"));
    std::array<double, 3> frac{};
    for (auto& f : frac) f = r.uniform(plan.gibbs.kept_fraction.lo, plan.gibbs.kept_fraction.hi);
    img = gibbs_ringing(img, frac);
    realized["gibbs"] = {{"kept_fraction", frac}};
  }
  if (plan.lowres.enabled) {
    RandomStream r(derive_seed(seed, "intensity.lowres"), stream_id("intensity"));
    const int axis = static_cast<int>(r.uniform_int(0, 2));
    Spacing sim = img.spacing();
    const double thick = r.uniform(plan.lowres.slice_spacing_mm.lo, plan.lowres.slice_spacing_mm.hi);
    sim[axis] = std::max(sim[axis], thick);
    img = lowres_reslice(img, sim);
    realized["lowres"] = {{"axis", axis}, {"simulated_spacing_mm", sim}};
  }
  auto noise_sigma = [&](const AugmentPlan::NoiseStage& s, const char* name, double& reference) {
    RandomStream r(derive_seed(seed, std::string("intensity.") + name), stream_id("intensity"));
    const double draw = r.uniform(s.sigma.lo, s.sigma.hi);
    reference = 1.0;
    if (s.relative) reference = percentile(img.values(), 0.99);
    return draw * reference;
  };
  if (plan.rician.enabled) {
    double reference = 1.0;
    const double sigma = noise_sigma(plan.rician, "rician", reference);
    const uint64_t nseed = derive_seed(seed, "intensity.rician.noise");
    img = add_rician(img, sigma, nseed);
    realized["rician"] = {{"sigma", sigma}, {"reference_intensity", reference}, {"seed", nseed}};
  }
  if (plan.gaussian.enabled) {
    double reference = 1.0;
    const double sigma = noise_sigma(plan.gaussian, "gaussian", reference);
    const uint64_t nseed = derive_seed(seed, "intensity.gaussian.noise");
    img = add_gaussian(img, sigma, nseed);
    realized["gaussian"] = {{"sigma", sigma}, {"reference_intensity", reference}, {"seed", nseed}};
  }
  return {std::move(img), std::move(realized)};
}

}  // namespace qmrisim
