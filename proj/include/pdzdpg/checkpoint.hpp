/*
 * Copyright 2026 The pdzdpg Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <filesystem>
#include <iosfwd>

#include "pdzdpg/policy.hpp"

namespace pdzdpg {

/// Parameter checkpoint: one line of JSON describing the layout (with a
/// format version), a newline, then the flat parameters as 64-bit IEEE-754
/// little-endian values.
inline constexpr int kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const Policy& params);
Policy read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Policy& params);
Policy load_checkpoint(const std::filesystem::path& path);

}  // namespace pdzdpg
