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

// External predictor used by the command-bridge tests: logits of
// ThresholdPredictor(0.5) computed from channel 0, via the tensor files.

#include <iostream>

#include "qmrisim/tensor_io.hpp"

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: echo_predictor <in.qtns> <out.qtns>\n";
    return 1;
  }
  try {
    const qmrisim::Patch in = qmrisim::read_tensor(argv[1]);
    qmrisim::Patch out;
    out.dims = in.dims;
    out.channels.assign(2, std::vector<float>(in.voxel_count(), 0.0f));
    for (std::size_t v = 0; v < in.voxel_count(); ++v) out.channels[1][v] = in.channels.at(0)[v] - 0.5f;
    qmrisim::write_tensor(out, argv[2]);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
