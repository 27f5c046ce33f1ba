// SPDX-License-Identifier: Apache-2.0
//
// metaloc: NLOS localization through frequency-selective metasurfaces
// Copyright (C) 2026 The metaloc authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef metaloc_errors_H
#define metaloc_errors_H

#include <stdexcept>
#include <string>

namespace metaloc
{
    // Argument outside the admissible range (nonpositive sizes, invisible design angles, ...)
    struct DomainError : std::domain_error
    {
        using std::domain_error::domain_error;
    };

    // Geometrically degenerate input (zero-length vectors, coincident points)
    struct DegenerateInputError : std::invalid_argument
    {
        using std::invalid_argument::invalid_argument;
    };

    struct IndexError : std::out_of_range
    {
        using std::out_of_range::out_of_range;
    };

    // A fingerprint database does not match the metaprism / link it is used with
    struct StaleDatabaseError : std::runtime_error
    {
        using std::runtime_error::runtime_error;
    };

    // The test grid does not cover the requested user positions
    struct CoverageError : std::runtime_error
    {
        using std::runtime_error::runtime_error;
    };

    // Malformed configuration or data file
    struct ConfigError : std::runtime_error
    {
        using std::runtime_error::runtime_error;
    };
}

#endif
