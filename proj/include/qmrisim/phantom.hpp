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

#include "qmrisim/volume.hpp"

namespace qmrisim {

/// Deterministic brain-like label phantom using the default prior labels:
/// nested folded ellipsoids give CSF (4) around GM (1), a thin partial
/// volume band (3), WM (2) and two CSF ventricles. The head fills about 84%
/// of the field of view along each axis.
LabelVolume make_brain_phantom(const Dims& dims, const Spacing& spacing);

}  // namespace qmrisim
