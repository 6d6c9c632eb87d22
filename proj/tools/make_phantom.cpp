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

// Writes the built-in brain-like label phantom as a NIfTI file, for demos
// and tests that need a label volume.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qmrisim/nifti.hpp"
#include "qmrisim/phantom.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write the built-in label phantom"};
  std::array<int, 3> dims{96, 96, 96};
  std::array<double, 3> spacing{2.0, 2.0, 2.0};
  std::string out;
  app.add_option("--dims", dims, "Voxels per axis");
  app.add_option("--spacing", spacing, "Voxel size in mm");
  app.add_option("out", out, "Output .nii or .nii.gz")->required();
  CLI11_PARSE(app, argc, argv);
  try {
    const auto labels = qmrisim::make_brain_phantom(dims, spacing);
    qmrisim::write_nifti(labels.grid(), out, qmrisim::StorageType::UInt8);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
