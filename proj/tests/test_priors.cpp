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

#include <doctest.h>

#include <fstream>

#include "qmrisim/priors.hpp"
#include "test_support.hpp"

using namespace qmrisim;
using nlohmann::json;

namespace {

std::string error_of(const json& doc) {
  try {
    parse_priors(doc).validate();
  } catch (const PriorError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("minimal prior file with one label and one component") {
  const auto dir = test::scratch_dir("priors_min");
  std::ofstream(dir / "p.json") << R"({"1": {"components": [{"weight": 1.0, "mean": [0.8, 1, 20, 1], "std": [0, 0, 0, 0]}]}})";
  const TissuePriorSet p = load_priors(dir / "p.json");
  REQUIRE(p.contains(1));
  CHECK(p.at(1).components.size() == 1);
  CHECK(p.at(1).components[0].weight == 1.0);
  CHECK(p.at(1).components[0].mean[kR2s] == 20.0);
  CHECK_FALSE(p.at(1).smooth_fwhm_mm.has_value());
}

TEST_CASE("weights 0.5/0.4 are rejected naming the label") {
  const json doc = {{"3", {{"components",
                            {{{"weight", 0.5}, {"mean", {1, 1, 1, 1}}, {"std", {0, 0, 0, 0}}},
                             {{"weight", 0.4}, {"mean", {1, 1, 1, 1}}, {"std", {0, 0, 0, 0}}}}}}}};
  const std::string msg = error_of(doc);
  CHECK(msg.find("label 3") != std::string::npos);
  CHECK(msg.find("/3/components") == 0);
}

TEST_CASE("MT mean 150 is rejected citing the [0,100] bound") {
  const json doc = {{"1", {{"components", {{{"weight", 1.0}, {"mean", {1, 1, 1, 150}}, {"std", {0, 0, 0, 0}}}}}}}};
  const std::string msg = error_of(doc);
  CHECK(msg.find("[0,100]") != std::string::npos);
  CHECK(msg.find("/1/components/0/mean/3") == 0);
}

TEST_CASE("schema violations carry a JSON pointer") {
  CHECK(error_of(json{{"x", json::object()}}).find("/x") == 0);
  CHECK(error_of(json{{"2", {{"components", {{{"weight", 1.0}, {"mean", {1, 1, 1}}, {"std", {0, 0, 0, 0}}}}}}}})
            .find("/2/components/0/mean") == 0);
  CHECK(error_of(json{{"2", {{"components", {{{"weight", 1.0}, {"mean", {1, 1, 1, 1}}, {"std", {0, -1, 0, 0}}}}}}}})
            .find("/2/components/0/std/1") == 0);
  CHECK(error_of(json{{"2", {{"components", {{{"weight", 1.0}, {"mean", {-1, 1, 1, 1}}, {"std", {0, 0, 0, 0}}}}}}}})
            .find("PD mean") != std::string::npos);
  CHECK(error_of(json{{"2", {{"components", json::array()}}}}).find("no mixture components") != std::string::npos);
}

TEST_CASE("comment keys are ignored and to_json round trips") {
  const json doc = {{"_note", "hello"},
                    {"4", {{"_name", "csf"},
                           {"smooth_fwhm_mm", 3.0},
                           {"components", {{{"weight", 1.0}, {"mean", {1, 0.25, 2, 0.1}}, {"std", {0.1, 0, 0, 0}}}}}}}};
  const TissuePriorSet p = parse_priors(doc);
  CHECK(p.labels().size() == 1);
  CHECK(*p.at(4).smooth_fwhm_mm == 3.0);
  const TissuePriorSet q = parse_priors(p.to_json());
  CHECK(q.to_json() == p.to_json());
}

TEST_CASE("shipped default priors are valid and match the data file") {
  const TissuePriorSet d = default_priors();
  CHECK_NOTHROW(d.validate());
  for (int l = 0; l <= 5; ++l) CHECK(d.contains(l));
  CHECK(d.at(5).components.size() == 2);
  CHECK(d.at(2).components[0].mean[kR1] > d.at(4).components[0].mean[kR1]);
  const TissuePriorSet f = load_priors(std::filesystem::path(QMRISIM_SOURCE_DIR) / "data" / "default_priors.json");
  CHECK(f.to_json() == d.to_json());
}

TEST_CASE("with() replaces one label only") {
  const TissuePriorSet d = default_priors();
  LabelPrior p;
  p.components = {{1.0, {0.5, 0.5, 5, 1}, {0, 0, 0, 0}}};
  const TissuePriorSet e = d.with(1, p);
  CHECK(e.at(1).components[0].mean[kPD] == 0.5);
  CHECK(e.to_json()["2"] == d.to_json()["2"]);
  CHECK_THROWS_AS(d.at(42), PriorError);
}
