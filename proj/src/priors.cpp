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

#include "qmrisim/priors.hpp"

#include "qmrisim/default_priors.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace qmrisim {
namespace {

constexpr const char* kChannelNames[4] = {"PD", "R1", "R2*", "MT"};

std::string label_ptr(int label) { return "/" + std::to_string(label); }

void check_prior(int label, const LabelPrior& prior) {
  const std::string base = label_ptr(label);
  if (prior.components.empty()) throw PriorError(base + "/components", "label has no mixture components");
  double total = 0.0;
  for (std::size_t c = 0; c < prior.components.size(); ++c) {
    const auto& comp = prior.components[c];
    const std::string cp = base + "/components/" + std::to_string(c);
    if (!std::isfinite(comp.weight) || comp.weight < 0.0)
      throw PriorError(cp + "/weight", "weight must be a nonnegative number");
    total += comp.weight;
    for (int ch = 0; ch < 4; ++ch) {
      const double m = comp.mean[ch];
      const double s = comp.stddev[ch];
      const std::string mp = cp + "/mean/" + std::to_string(ch);
      if (!std::isfinite(m)) throw PriorError(mp, "mean must be finite");
      if (ch == kMT && (m < 0.0 || m > 100.0)) {
        std::ostringstream os;
        os << "MT mean " << m << " outside the physical bound [0,100]";
        throw PriorError(mp, os.str());
      }
      if (m < 0.0) {
        std::ostringstream os;
        os << kChannelNames[ch] << " mean " << m << " violates the physical bound >= 0";
        throw PriorError(mp, os.str());
      }
      if (!std::isfinite(s) || s < 0.0)
        throw PriorError(cp + "/std/" + std::to_string(ch), "standard deviation must be >= 0");
    }
  }
  if (!(total > 0.0)) throw PriorError(base + "/components", "label " + std::to_string(label) + " has zero total weight");
  if (std::abs(total - 1.0) > 1e-9) {
    std::ostringstream os;
    os.precision(12);
    os << "component weights of label " << label << " sum to " << total << ", expected 1";
    throw PriorError(base + "/components", os.str());
  }
  if (prior.smooth_fwhm_mm && !(*prior.smooth_fwhm_mm > 0.0))
    throw PriorError(base + "/smooth_fwhm_mm", "smoothing FWHM must be positive");
}

QmriVector read_vector(const nlohmann::json& j, const std::string& ptr) {
  if (!j.is_array() || j.size() != 4)
    throw PriorError(ptr, "expected an array of 4 numbers [pd, r1, r2s, mt]");
  QmriVector v{};
  for (int ch = 0; ch < 4; ++ch) {
    if (!j[ch].is_number()) throw PriorError(ptr + "/" + std::to_string(ch), "expected a number");
    v[ch] = j[ch].get<double>();
  }
  return v;
}

}  // namespace

TissuePriorSet::TissuePriorSet(std::map<int, LabelPrior> labels) : labels_(std::move(labels)) { validate(); }

const LabelPrior& TissuePriorSet::at(int label) const {
  auto it = labels_.find(label);
  if (it == labels_.end()) throw PriorError(label_ptr(label), "no prior for label " + std::to_string(label));
  return it->second;
}

TissuePriorSet TissuePriorSet::with(int label, LabelPrior prior) const {
  auto copy = labels_;
  copy[label] = std::move(prior);
  return TissuePriorSet(std::move(copy));
}

void TissuePriorSet::validate() const {
  for (const auto& [label, prior] : labels_) {
    if (label < 0) throw PriorError(label_ptr(label), "labels must be nonnegative");
    check_prior(label, prior);
  }
}

nlohmann::json TissuePriorSet::to_json() const {
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& [label, prior] : labels_) {
    nlohmann::json comps = nlohmann::json::array();
    for (const auto& c : prior.components)
      comps.push_back({{"weight", c.weight}, {"mean", c.mean}, {"std", c.stddev}});
    nlohmann::json entry = {{"components", comps}};
    if (prior.smooth_fwhm_mm) entry["smooth_fwhm_mm"] = *prior.smooth_fwhm_mm;
    doc[std::to_string(label)] = entry;
  }
  return doc;
}

TissuePriorSet parse_priors(const nlohmann::json& doc) {
  if (!doc.is_object()) throw PriorError("", "prior document must be an object keyed by label");
  std::map<int, LabelPrior> labels;
  for (const auto& [key, entry] : doc.items()) {
    if (!key.empty() && key[0] == '_') continue;
    const std::string base = "/" + key;
    int label = 0;
    try {
      std::size_t used = 0;
      label = std::stoi(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw PriorError(base, "label key must be an integer");
    }
    if (!entry.is_object()) throw PriorError(base, "expected an object");
    if (!entry.contains("components")) throw PriorError(base + "/components", "missing field");
    const auto& comps = entry["components"];
    if (!comps.is_array()) throw PriorError(base + "/components", "expected an array");
    LabelPrior prior;
    for (std::size_t c = 0; c < comps.size(); ++c) {
      const std::string cp = base + "/components/" + std::to_string(c);
      const auto& jc = comps[c];
      if (!jc.is_object()) throw PriorError(cp, "expected an object");
      for (const char* field : {"weight", "mean", "std"})
        if (!jc.contains(field)) throw PriorError(cp + "/" + field, "missing field");
      if (!jc["weight"].is_number()) throw PriorError(cp + "/weight", "expected a number");
      MixtureComponent comp;
      comp.weight = jc["weight"].get<double>();
      comp.mean = read_vector(jc["mean"], cp + "/mean");
      comp.stddev = read_vector(jc["std"], cp + "/std");
      prior.components.push_back(comp);
    }
    if (entry.contains("smooth_fwhm_mm") && !entry["smooth_fwhm_mm"].is_null()) {
      if (!entry["smooth_fwhm_mm"].is_number()) throw PriorError(base + "/smooth_fwhm_mm", "expected a number");
      prior.smooth_fwhm_mm = entry["smooth_fwhm_mm"].get<double>();
    }
    check_prior(label, prior);
    labels[label] = std::move(prior);
  }
  return TissuePriorSet(std::move(labels));
}

TissuePriorSet load_priors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PriorError("", "cannot open prior file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw PriorError("", path.string() + ": " + e.what());
  }
  return parse_priors(doc);
}

TissuePriorSet default_priors() { return parse_priors(nlohmann::json::parse(detail::kDefaultPriorsJson)); }

}  // namespace qmrisim
