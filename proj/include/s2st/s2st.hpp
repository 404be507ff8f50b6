// Copyright (c) 2026 The s2st Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Umbrella header.

#pragma once

#include "s2st/data_pipeline.hpp"
#include "s2st/error.hpp"
#include "s2st/file_format.hpp"
#include "s2st/isochrony.hpp"
#include "s2st/joint_decoder.hpp"
#include "s2st/layer_beam_search.hpp"
#include "s2st/numerics.hpp"
#include "s2st/report.hpp"
#include "s2st/rvq_codec.hpp"
#include "s2st/toy_model.hpp"
#include "s2st/transformer.hpp"
