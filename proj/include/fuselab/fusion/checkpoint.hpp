// Copyright 2026 The fuselab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "fuselab/fusion/network.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

// Checkpoint layout, all integers u32 little-endian:
//
//   "MFZ1"                       4-byte magic
//   version                      currently 1
//   input_channels, input_size
//   stage count                  always 5
//   stage_channels[5]
//   convs_per_stage[5]
//   per parameter, in build order:
//     rank                       4 for kernels, 1 for biases
//     dims[rank]
//     values                     IEEE-754 binary32, row-major
//
// The file ends right after the last parameter; trailing bytes are an error.

namespace fuselab::fusion {

inline constexpr char kCheckpointMagic[4] = {'M', 'F', 'Z', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    NetConfig config;
    nn::ParamStore<float> params;
};

std::vector<std::uint8_t> serialize_checkpoint(const nn::ParamStore<float>& params, const NetConfig& config);
/// Throws FormatError (or VersionError) on any malformed input; never returns partial state.
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const nn::ParamStore<float>& params, const NetConfig& config, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace fuselab::fusion
