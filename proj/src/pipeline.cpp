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

#include "qmrisim/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "qmrisim/checksum.hpp"
#include "qmrisim/nifti.hpp"
#include "qmrisim/preview.hpp"
#include "qmrisim/random.hpp"

namespace qmrisim {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    if (!k.empty() && k[0] == '_') continue;
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }))
      throw ConfigError(where + "." + k + ": unknown key");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type (" + j.at(key).dump() + ")");
  }
}

std::vector<Sequence> read_sequences(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of sequence names");
  std::vector<Sequence> out;
  for (const auto& s : j) {
    if (!s.is_string()) throw ConfigError(where + ": expected sequence names as strings");
    try {
      out.push_back(parse_sequence(s.get<std::string>()));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  return out;
}

json sequences_json(const std::vector<Sequence>& seqs) {
  json a = json::array();
  for (auto s : seqs) a.push_back(to_string(s));
  return a;
}

std::string path_string(const fs::path& p, const fs::path& relative_to) {
  if (relative_to.empty()) return p.generic_string();
  const fs::path rel = fs::relative(fs::absolute(p), fs::absolute(relative_to));
  return rel.empty() ? p.generic_string() : rel.generic_string();
}

fs::path resolve(const std::string& p, const fs::path& base) {
  const fs::path path(p);
  if (path.is_absolute() || base.empty()) return path;
  return (base / path).lexically_normal();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw DataError("write failure on " + path.string());
}

// Records every written file, in write order, for the manifest.
class OutputTree {
 public:
  explicit OutputTree(fs::path root) : root_(std::move(root)) {}

  const fs::path& root() const { return root_; }

  json write_volume(const VoxelGrid& grid, const std::string& name, StorageType storage) {
    write_nifti(grid, root_ / name, storage);
    return record(name);
  }
  json write_file(const std::string& name, const std::string& text) {
    write_text(root_ / name, text);
    return record(name);
  }
  const json& files() const { return files_; }

 private:
  json record(const std::string& name) {
    json entry = {{"path", name}, {"sha256", sha256_file(root_ / name)}};
    files_.push_back(entry);
    return entry;
  }

  fs::path root_;
  json files_ = json::array();
};

struct Inputs {
  std::optional<LabelVolume> labels;
  std::optional<QmriVolume> qmri;
  TissuePriorSet priors;
  json record = json::object();
};

void require_file(const fs::path& p, const std::string& field) {
  if (!fs::is_regular_file(p)) throw ConfigError(field + ": file not found: " + p.string());
}

VoxelGrid read_input(const fs::path& p) {
  try {
    return read_nifti(p);
  } catch (const NiftiError& e) {
    throw DataError(e.what());
  }
}

// Everything that can fail on configuration or input content happens here,
// before the output directory is touched.
Inputs prepare(const RunConfig& config, bool need_labels, bool need_priors) {
  config.validate();
  if (need_labels && !config.labels) throw ConfigError("input.labels: required for this command");
  if (!config.labels && !config.qmri) throw ConfigError("input: provide labels or qmri maps");
  if (config.segment.enabled && !config.labels) throw ConfigError("segment: requires input.labels for the truth masks");
  if (config.labels) require_file(*config.labels, "input.labels");
  if (config.qmri) {
    static const char* names[4] = {"pd", "r1", "r2s", "mt"};
    for (int c = 0; c < 4; ++c) require_file((*config.qmri)[static_cast<std::size_t>(c)], std::string("input.qmri.") + names[c]);
  }
  if (config.priors) require_file(*config.priors, "priors");

  Inputs in;
  const bool uses_priors = need_priors || !config.qmri;
  if (uses_priors) {
    try {
      in.priors = config.priors ? load_priors(*config.priors) : default_priors();
      in.priors.validate();
    } catch (const PriorError& e) {
      throw ConfigError(std::string("priors") + e.what());
    }
  }
  const fs::path rel = config.out;
  if (config.labels) {
    VoxelGrid grid = read_input(*config.labels);
    try {
      in.labels = LabelVolume(grid, LabelVolume::default_names(grid));
    } catch (const VolumeError& e) {
      throw DataError(config.labels->string() + ": " + e.what());
    }
    in.record["labels"] = {{"path", path_string(*config.labels, rel)}, {"sha256", sha256_file(*config.labels)}};
    if (uses_priors) {
      std::vector<int> needed = in.labels->present_labels();
      if (config.lesions.enabled) needed.push_back(config.lesions.stamp.lesion_label);
      for (int l : needed)
        if (!in.priors.contains(l)) throw ConfigError("priors: no prior for label " + std::to_string(l));
    }
  }
  if (config.qmri) {
    std::array<VoxelGrid, 4> maps;
    json rec = json::object();
    static const char* names[4] = {"pd", "r1", "r2s", "mt"};
    for (std::size_t c = 0; c < 4; ++c) {
      maps[c] = read_input((*config.qmri)[c]);
      rec[names[c]] = {{"path", path_string((*config.qmri)[c], rel)}, {"sha256", sha256_file((*config.qmri)[c])}};
    }
    in.qmri = QmriVolume{maps[0], maps[1], maps[2], maps[3]};
    try {
      in.qmri->validate();
      if (in.labels) {
        const VoxelGrid l[] = {in.labels->grid()};
        require_coregistered(in.qmri->pd, l, "qMRI maps and labels");
      }
    } catch (const VolumeError& e) {
      throw DataError(e.what());
    }
    in.record["qmri"] = rec;
  }
  return in;
}

json lesion_json(const RunConfig::Lesions& l) {
  const auto& s = l.stamp;
  return {{"enabled", l.enabled},
          {"count", {s.count_min, s.count_max}},
          {"size_mm", {s.size_min_mm, s.size_max_mm}},
          {"irregularity", s.irregularity},
          {"replaceable", std::vector<int>(s.replaceable.begin(), s.replaceable.end())},
          {"lesion_label", s.lesion_label}};
}

struct LabelledDraw {
  LabelVolume labels;
  QmriVolume qmri;
};

// Lesion stamping then the qMRI draw for one sample.
LabelledDraw draw_maps(const RunConfig& config, const Inputs& in, uint64_t sseed, json& rec) {
  LabelVolume labels = *in.labels;
  if (config.lesions.enabled) {
    const uint64_t lseed = derive_seed(sseed, "lesion");
    const VoxelGrid mask = generate_lesion_mask(labels.geometry(), config.lesions.stamp, lseed, &labels);
    labels = stamp_lesion(labels, mask, config.lesions.stamp.lesion_label, config.lesions.stamp.replaceable);
    rec["seeds"]["lesion"] = lseed;
  }
  const uint64_t qseed = derive_seed(sseed, "qmri");
  rec["seeds"]["qmri"] = qseed;
  QmriVolume q = sample_qmri(labels, in.priors, qseed);
  return {std::move(labels), std::move(q)};
}

void write_manifest(OutputTree& tree, const std::string& command, const RunConfig& config, const json& inputs,
                    const json& records, const json& extra) {
  json m = {{"engine", "qmrisim"},
            {"version", kEngineVersion},
            {"command", command},
            {"config", config.to_json(tree.root())},
            {"inputs", inputs},
            {"records", records},
            {"files", tree.files()}};
  for (const auto& [k, v] : extra.items()) m[k] = v;
  write_text(tree.root() / "manifest.json", m.dump(2) + "\n");
}

void make_out_dir(const fs::path& out) {
  if (out.empty()) throw ConfigError("out: output directory is required");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw DataError("cannot create output directory " + out.string() + ": " + ec.message());
}

}  // namespace

void RunConfig::validate() const {
  if (count < 0) throw ConfigError("count: must be >= 0, got " + std::to_string(count));
  if (sequences.empty()) throw ConfigError("sequences: at least one sequence is required");
  std::set<Sequence> seen;
  for (auto s : sequences) {
    if (!seen.insert(s).second) throw ConfigError("sequences: " + to_string(s) + " listed twice");
    try {
      param_ranges.validate(s);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("param_ranges.") + e.what());
    }
  }
  try {
    augment.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (lesions.enabled) {
    try {
      lesions.stamp.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("lesions: ") + e.what());
    }
    if (augment.crop.enabled && augment.crop.require_lesion && augment.crop.lesion_label != lesions.stamp.lesion_label)
      throw ConfigError("augment.crop.lesion_label: differs from lesions.lesion_label");
  }
  if (!(b0_scaling.reference_t > 0.0)) throw ConfigError("b0_scaling.reference_t: must be > 0");
  if (!(receive.amplitude >= 0.0)) throw ConfigError("receive_field.amplitude: must be >= 0");
  if (!(receive.fwhm_mm > 0.0)) throw ConfigError("receive_field.fwhm_mm: must be > 0");
  if (segment.enabled) {
    if (segment.sequences.empty()) throw ConfigError("segment.sequences: at least one sequence is required");
    for (auto s : segment.sequences)
      if (!seen.count(s)) throw ConfigError("segment.sequences: " + to_string(s) + " is not simulated");
    try {
      segment.window.validate();
    } catch (const std::exception& e) {
      throw ConfigError(std::string("segment: ") + e.what());
    }
    if (segment.resamples < 1) throw ConfigError("segment.resamples: must be >= 1");
    if (!(segment.level > 0.0 && segment.level < 1.0)) throw ConfigError("segment.level: must lie in (0, 1)");
    if (!std::isfinite(segment.threshold) || !(segment.gain > 0.0f))
      throw ConfigError("segment: threshold must be finite and gain positive");
  }
  if (threads < 0) throw ConfigError("threads: must be >= 0");
}

json RunConfig::to_json(const fs::path& relative_to) const {
  json input = json::object();
  input["labels"] = labels ? json(path_string(*labels, relative_to)) : json(nullptr);
  if (qmri)
    input["qmri"] = {{"pd", path_string((*qmri)[0], relative_to)},
                     {"r1", path_string((*qmri)[1], relative_to)},
                     {"r2s", path_string((*qmri)[2], relative_to)},
                     {"mt", path_string((*qmri)[3], relative_to)}};
  else
    input["qmri"] = nullptr;
  const auto& w = segment.window;
  return {{"input", input},
          {"priors", priors ? json(path_string(*priors, relative_to)) : json(nullptr)},
          {"seed", seed},
          {"count", count},
          {"sequences", sequences_json(sequences)},
          {"param_ranges", param_ranges.to_json()},
          {"augment", augment.to_json()},
          {"lesions", lesion_json(lesions)},
          {"b0_scaling",
           {{"reference_t", b0_scaling.reference_t},
            {"r1_exponent", b0_scaling.r1_exponent},
            {"r2s_exponent", b0_scaling.r2s_exponent}}},
          {"receive_field", {{"amplitude", receive.amplitude}, {"fwhm_mm", receive.fwhm_mm}}},
          {"segment",
           {{"enabled", segment.enabled},
            {"sequences", sequences_json(segment.sequences)},
            {"threshold", segment.threshold},
            {"gain", segment.gain},
            {"patch", w.patch},
            {"overlap", w.overlap},
            {"sigma_fraction", w.sigma_fraction},
            {"tta", segment.tta},
            {"pad_256", segment.pad_256},
            {"resamples", segment.resamples},
            {"level", segment.level}}}};
}

RunConfig RunConfig::from_json(const json& j, const fs::path& base_dir) {
  check_keys(j, "config",
             {"input", "priors", "seed", "count", "sequences", "param_ranges", "augment", "lesions", "b0_scaling",
              "receive_field", "segment", "out", "threads"});
  RunConfig c;
  if (j.contains("input")) {
    const json& in = j["input"];
    check_keys(in, "input", {"labels", "qmri"});
    if (in.contains("labels") && !in["labels"].is_null()) {
      if (!in["labels"].is_string()) throw ConfigError("input.labels: expected a path string");
      c.labels = resolve(in["labels"].get<std::string>(), base_dir);
    }
    if (in.contains("qmri") && !in["qmri"].is_null()) {
      const json& q = in["qmri"];
      check_keys(q, "input.qmri", {"pd", "r1", "r2s", "mt"});
      std::array<fs::path, 4> maps;
      const char* names[4] = {"pd", "r1", "r2s", "mt"};
      for (std::size_t ch = 0; ch < 4; ++ch) {
        if (!q.contains(names[ch]) || !q[names[ch]].is_string())
          throw ConfigError(std::string("input.qmri.") + names[ch] + ": expected a path string");
        maps[ch] = resolve(q[names[ch]].get<std::string>(), base_dir);
      }
      c.qmri = maps;
    }
  }
  if (j.contains("priors") && !j["priors"].is_null()) {
    if (!j["priors"].is_string()) throw ConfigError("priors: expected a path string or null");
    c.priors = resolve(j["priors"].get<std::string>(), base_dir);
  }
  if (j.contains("seed") && !(j["seed"].is_number_unsigned() || (j["seed"].is_number_integer() && j["seed"].get<int64_t>() >= 0)))
    throw ConfigError("seed: expected a nonnegative integer");
  read(j, "seed", c.seed, "config");
  if (j.contains("count") && !j["count"].is_number_integer()) throw ConfigError("count: expected an integer");
  read(j, "count", c.count, "config");
  if (j.contains("sequences")) c.sequences = read_sequences(j["sequences"], "sequences");
  try {
    if (j.contains("param_ranges")) c.param_ranges = ParamRanges::from_json(j["param_ranges"]);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  try {
    if (j.contains("augment")) c.augment = AugmentPlan::from_json(j["augment"]);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (j.contains("lesions")) {
    const json& l = j["lesions"];
    check_keys(l, "lesions", {"enabled", "count", "size_mm", "irregularity", "replaceable", "lesion_label"});
    read(l, "enabled", c.lesions.enabled, "lesions");
    auto& s = c.lesions.stamp;
    std::array<int, 2> count{s.count_min, s.count_max};
    std::array<double, 2> size{s.size_min_mm, s.size_max_mm};
    std::vector<int> repl(s.replaceable.begin(), s.replaceable.end());
    read(l, "count", count, "lesions");
    read(l, "size_mm", size, "lesions");
    read(l, "irregularity", s.irregularity, "lesions");
    read(l, "replaceable", repl, "lesions");
    read(l, "lesion_label", s.lesion_label, "lesions");
    s.count_min = count[0];
    s.count_max = count[1];
    s.size_min_mm = size[0];
    s.size_max_mm = size[1];
    s.replaceable = std::set<int>(repl.begin(), repl.end());
  }
  if (j.contains("b0_scaling")) {
    const json& b = j["b0_scaling"];
    check_keys(b, "b0_scaling", {"reference_t", "r1_exponent", "r2s_exponent"});
    read(b, "reference_t", c.b0_scaling.reference_t, "b0_scaling");
    read(b, "r1_exponent", c.b0_scaling.r1_exponent, "b0_scaling");
    read(b, "r2s_exponent", c.b0_scaling.r2s_exponent, "b0_scaling");
  }
  if (j.contains("receive_field")) {
    const json& r = j["receive_field"];
    check_keys(r, "receive_field", {"amplitude", "fwhm_mm"});
    read(r, "amplitude", c.receive.amplitude, "receive_field");
    read(r, "fwhm_mm", c.receive.fwhm_mm, "receive_field");
  }
  if (j.contains("segment")) {
    const json& s = j["segment"];
    check_keys(s, "segment",
               {"enabled", "sequences", "threshold", "gain", "patch", "overlap", "sigma_fraction", "tta", "pad_256",
                "resamples", "level"});
    read(s, "enabled", c.segment.enabled, "segment");
    if (s.contains("sequences")) c.segment.sequences = read_sequences(s["sequences"], "segment.sequences");
    read(s, "threshold", c.segment.threshold, "segment");
    read(s, "gain", c.segment.gain, "segment");
    read(s, "patch", c.segment.window.patch, "segment");
    read(s, "overlap", c.segment.window.overlap, "segment");
    read(s, "sigma_fraction", c.segment.window.sigma_fraction, "segment");
    read(s, "tta", c.segment.tta, "segment");
    read(s, "pad_256", c.segment.pad_256, "segment");
    read(s, "resamples", c.segment.resamples, "segment");
    read(s, "level", c.segment.level, "segment");
  }
  if (j.contains("out")) {
    if (!j["out"].is_string()) throw ConfigError("out: expected a path string");
    c.out = resolve(j["out"].get<std::string>(), base_dir);
  }
  read(j, "threads", c.threads, "config");
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path());
}

std::string output_name(int sample, const std::string& sequence, const std::string& kind) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%05d", sample);
  return std::string(buf) + "_" + sequence + "_" + kind + ".nii.gz";
}

uint64_t sample_seed(uint64_t master, int index) { return derive_seed(master, "sample", static_cast<uint64_t>(index)); }

json cmd_synth_maps(const RunConfig& config, const Logger& log) {
  const Inputs in = prepare(config, true, true);
  make_out_dir(config.out);
  OutputTree tree(config.out);
  json records = json::array();
  static const char* names[4] = {"pd", "r1", "r2s", "mt"};
  for (int i = 0; i < config.count; ++i) {
    if (log) log("synth-maps: sample " + std::to_string(i + 1) + "/" + std::to_string(config.count));
    const uint64_t sseed = sample_seed(config.seed, i);
    json rec = {{"sample", i}, {"seed", sseed}, {"seeds", json::object()}};
    const LabelledDraw d = draw_maps(config, in, sseed, rec);
    const VoxelGrid* maps[4] = {&d.qmri.pd, &d.qmri.r1, &d.qmri.r2s, &d.qmri.mt};
    for (int c = 0; c < 4; ++c)
      rec["files"][names[c]] = tree.write_volume(*maps[c], output_name(i, "qmri", names[c]), StorageType::Float32);
    records.push_back(rec);
  }
  write_manifest(tree, "synth-maps", config, in.record, records, json::object());
  std::ifstream m(config.out / "manifest.json");
  return json::parse(m);
}

json cmd_simulate(const RunConfig& config, const Logger& log) {
  const Inputs in = prepare(config, false, false);
  make_out_dir(config.out);
  OutputTree tree(config.out);
  json records = json::array();
  std::vector<CaseMetrics> cases;
  const int lesion_label = config.lesions.stamp.lesion_label;

  for (int i = 0; i < config.count; ++i) {
    if (log) log("simulate: sample " + std::to_string(i + 1) + "/" + std::to_string(config.count));
    const uint64_t sseed = sample_seed(config.seed, i);
    json rec = {{"sample", i}, {"seed", sseed}, {"seeds", json::object()}};

    std::optional<LabelVolume> labels = in.labels;
    QmriVolume q;
    if (in.qmri) {
      q = *in.qmri;
    } else {
      LabelledDraw d = draw_maps(config, in, sseed, rec);
      labels = std::move(d.labels);
      q = std::move(d.qmri);
    }

    const uint64_t spseed = derive_seed(sseed, "spatial");
    rec["seeds"]["spatial"] = spseed;
    SpatialResult spatial = spatial_augment({q.pd, q.r1, q.r2s, q.mt}, labels, config.augment, spseed);
    rec["spatial"] = spatial.realized;
    const QmriVolume warped{spatial.images[0], spatial.images[1], spatial.images[2], spatial.images[3]};
    const Geometry& geom = warped.geometry();

    std::vector<Logits> per_contrast;
    json seq_records = json::array();
    for (Sequence seq : config.sequences) {
      const std::string name = to_string(seq);
      const uint64_t pseed = derive_seed(sseed, "params." + name);
      const AcquisitionParams params = sample_params(config.param_ranges, seq, pseed);
      json srec = {{"sequence", name}, {"params_seed", pseed}, {"params", params.to_json()}};
      ReceiveField b1 = uniform_receive_field(geom);
      if (config.receive.amplitude > 0.0) {
        const uint64_t rseed = derive_seed(sseed, "receive." + name);
        b1 = generate_receive_field(geom, config.receive.amplitude, config.receive.fwhm_mm, rseed);
        srec["receive_seed"] = rseed;
      }
      const VoxelGrid clean = simulate(warped, params, b1, config.b0_scaling);
      const uint64_t cseed = derive_seed(sseed, "corrupt." + name);
      IntensityResult corrupted = corrupt_intensity(clean, config.augment, cseed);
      srec["corrupt_seed"] = cseed;
      srec["corruption"] = corrupted.realized;
      srec["file"] = tree.write_volume(corrupted.image, output_name(i, name, "image"), StorageType::Float32);

      if (config.segment.enabled &&
          std::find(config.segment.sequences.begin(), config.segment.sequences.end(), seq) != config.segment.sequences.end()) {
        VoxelGrid norm;
        try {
          norm = normalize(corrupted.image);
        } catch (const std::invalid_argument& e) {
          throw DataError("sample " + std::to_string(i) + " " + name + ": " + e.what());
        }
        const ThresholdPredictor model(config.segment.threshold, config.segment.gain);
        per_contrast.push_back(config.segment.tta ? tta_predict({norm}, model, config.segment.window)
                                                  : sliding_window_predict({norm}, model, config.segment.window));
      }
      seq_records.push_back(srec);
    }
    rec["sequences"] = seq_records;

    if (spatial.labels) {
      rec["labels_file"] = tree.write_volume(spatial.labels->grid(), output_name(i, "all", "labels"), StorageType::UInt8);
    }
    if (config.segment.enabled) {
      const VoxelGrid pred = logits_to_mask(ensemble_logits(per_contrast), 1);
      std::vector<float> truth(pred.size());
      for (std::size_t v = 0; v < truth.size(); ++v)
        truth[v] = spatial.labels->label_at(v) == lesion_label ? 1.0f : 0.0f;
      const VoxelGrid truth_grid(pred.geometry(), std::move(truth));
      rec["prediction_file"] = tree.write_volume(pred, output_name(i, "all", "pred"), StorageType::UInt8);
      rec["truth_file"] = tree.write_volume(truth_grid, output_name(i, "all", "truth"), StorageType::UInt8);
      const SegMaskPair pair{pred, truth_grid, std::nullopt};
      Hd95Options opt;
      opt.pad_extent = config.segment.pad_256 ? 256 : 0;
      CaseMetrics cm{output_name(i, "all", "pred"), dice(pair), hd95(pair, opt)};
      rec["metrics"] = {{"dice", cm.dice}, {"hd95_mm", cm.hd95}};
      cases.push_back(cm);
    }
    records.push_back(rec);
  }

  json extra = json::object();
  if (config.segment.enabled) {
    const uint64_t rseed = derive_seed(config.seed, "report");
    const MetricReport report = build_report(cases, config.segment.resamples, config.segment.level, rseed);
    json rj = report.to_json();
    rj["seed"] = rseed;
    tree.write_file("report.json", rj.dump(2) + "\n");
    tree.write_file("report.txt", report.to_table());
    extra["report"] = rj;
  }
  write_manifest(tree, "simulate", config, in.record, records, extra);
  std::ifstream m(config.out / "manifest.json");
  return json::parse(m);
}

MetricReport cmd_evaluate(const fs::path& pred_dir, const fs::path& truth_dir, const fs::path& out,
                          const EvaluateOptions& options) {
  for (const auto& [dir, what] : {std::pair{pred_dir, "predictions"}, std::pair{truth_dir, "truths"}})
    if (!fs::is_directory(dir)) throw ConfigError(std::string(what) + ": not a directory: " + dir.string());
  if (options.resamples < 1) throw ConfigError("resamples: must be >= 1");
  if (!(options.level > 0.0 && options.level < 1.0)) throw ConfigError("level: must lie in (0, 1)");
  auto list = [](const fs::path& dir) {
    std::set<std::string> names;
    for (const auto& e : fs::directory_iterator(dir)) {
      const std::string n = e.path().filename().string();
      if (e.is_regular_file() && (n.ends_with(".nii") || n.ends_with(".nii.gz"))) names.insert(n);
    }
    return names;
  };
  const auto preds = list(pred_dir);
  const auto truths = list(truth_dir);
  std::vector<std::string> unpaired;
  for (const auto& n : preds)
    if (!truths.count(n)) unpaired.push_back("prediction without truth: " + n);
  for (const auto& n : truths)
    if (!preds.count(n)) unpaired.push_back("truth without prediction: " + n);
  if (!unpaired.empty()) {
    std::string msg = "unpaired files:";
    for (const auto& u : unpaired) msg += "\n  " + u;
    throw DataError(msg);
  }
  if (preds.empty()) throw DataError("no NIfTI masks found in " + pred_dir.string());

  Hd95Options hopt;
  hopt.pad_extent = options.pad_256 ? 256 : 0;
  hopt.max_of_directed = options.max_of_directed;
  std::vector<CaseMetrics> cases;
  for (const auto& name : preds) {
    SegMaskPair pair{read_input(pred_dir / name), read_input(truth_dir / name), std::nullopt};
    try {
      cases.push_back({name, dice(pair), hd95(pair, hopt)});
    } catch (const VolumeError& e) {
      throw DataError(name + ": " + e.what());
    }
  }
  MetricReport report = build_report(cases, options.resamples, options.level, options.seed);
  make_out_dir(out);
  write_text(out / "report.json", report.to_json().dump(2) + "\n");
  write_text(out / "report.txt", report.to_table());
  return report;
}

void cmd_preview(const fs::path& image, int axis, std::optional<int> index, const fs::path& out, double lo_pct,
                 double hi_pct) {
  if (!fs::is_regular_file(image)) throw ConfigError("image: file not found: " + image.string());
  if (axis < 0 || axis > 2) throw ConfigError("axis: must be 0, 1 or 2");
  const VoxelGrid grid = read_input(image);
  GrayImage img;
  try {
    img = render_slice(grid, axis, index.value_or(grid.dims()[axis] / 2), lo_pct, hi_pct);
  } catch (const SliceRangeError& e) {
    throw ConfigError(e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (out.has_parent_path()) make_out_dir(out.parent_path());
  try {
    write_png(img, out);
  } catch (const std::runtime_error& e) {
    throw DataError(e.what());
  }
}

ReplayResult cmd_replay(const fs::path& manifest_path, const fs::path& out, const Logger& log) {
  std::ifstream in(manifest_path);
  if (!in) throw ConfigError("cannot open manifest " + manifest_path.string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(manifest_path.string() + ": " + e.what());
  }
  for (const char* key : {"command", "config", "records", "files"})
    if (!manifest.contains(key)) throw ConfigError(manifest_path.string() + ": missing \"" + key + "\"");
  RunConfig config = RunConfig::from_json(manifest["config"], manifest_path.parent_path());
  if (fs::absolute(out).lexically_normal() == fs::absolute(manifest_path.parent_path()).lexically_normal())
    throw ConfigError("out: replay must write to a directory other than the manifest's");
  config.out = out;
  const std::string command = manifest["command"].get<std::string>();
  json fresh;
  if (command == "simulate")
    fresh = cmd_simulate(config, log);
  else if (command == "synth-maps")
    fresh = cmd_synth_maps(config, log);
  else
    throw ConfigError("manifest command \"" + command + "\" cannot be replayed");

  ReplayResult r;
  std::map<std::string, std::string> now;
  for (const auto& f : fresh["files"]) now[f["path"].get<std::string>()] = f["sha256"].get<std::string>();
  for (const auto& f : manifest["files"]) {
    const std::string p = f["path"].get<std::string>();
    const auto it = now.find(p);
    if (it == now.end())
      r.mismatches.push_back(p + ": not produced by the replay");
    else if (it->second != f["sha256"].get<std::string>())
      r.mismatches.push_back(p + ": checksum differs");
    now.erase(p);
  }
  for (const auto& [p, h] : now) r.mismatches.push_back(p + ": produced by the replay but not in the manifest");
  const auto& a = manifest["records"];
  const auto& b = fresh["records"];
  if (a.size() != b.size()) r.mismatches.push_back("record count differs");
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i)
    if (a[i] != b[i]) r.mismatches.push_back("record " + std::to_string(i) + " differs");
  if (manifest.contains("report") != fresh.contains("report") ||
      (manifest.contains("report") && manifest["report"] != fresh["report"]))
    r.mismatches.push_back("report differs");
  r.identical = r.mismatches.empty();
  return r;
}

}  // namespace qmrisim
