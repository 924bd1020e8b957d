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

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace fuselab {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid user-supplied configuration (network/training/generator settings).
struct ConfigError : Error {
    using Error::Error;
};

/// Missing, malformed or inconsistent input data.
struct DataError : Error {
    using Error::Error;
};

/// A file exists but its contents do not follow the expected format.
struct FormatError : DataError {
    using DataError::DataError;
};

/// A well-formed file written by an unsupported format version.
struct VersionError : FormatError {
    VersionError(std::uint32_t found, std::uint32_t supported)
            : FormatError("unsupported format version " + std::to_string(found) + " (expected " +
                          std::to_string(supported) + ")"),
              found_version(found) {}
    std::uint32_t found_version;
};

/// Fusion-expression syntax error; `position` is the 1-based column of the offending token.
struct ParseError : Error {
    ParseError(const std::string& what, std::size_t pos)
            : Error(what + " at position " + std::to_string(pos)), position(pos) {}
    std::size_t position;
};

}  // namespace fuselab
