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

#ifndef metaloc_random_H
#define metaloc_random_H

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

// Seeded random streams with a portable output sequence.
// std::mt19937_64 is fully specified by the standard; the distribution
// transforms below are written out so that results do not depend on the
// standard library implementation.

namespace metaloc
{
    // SplitMix64 finalizer; used to derive independent child seeds
    constexpr std::uint64_t mix64(std::uint64_t z)
    {
        z += 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Child seed for a (parent, counter) pair. Chaining calls gives a counter tree:
    // derive_seed(derive_seed(master, position), trial).
    constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t counter)
    {
        return mix64(mix64(parent) ^ mix64(counter + 0x632BE59BD9B4E019ULL));
    }

    class RandomStream
    {
    public:
        explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

        // Uniform on [0, 1) with 53 random bits
        double uniform01() { return double(engine_() >> 11) * 0x1.0p-53; }

        // Uniform on [lo, hi]
        double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

        // Circularly-symmetric complex Gaussian CN(0, variance)
        std::complex<double> complex_normal(double variance)
        {
            const double u1 = 1.0 - uniform01(); // (0, 1]
            const double u2 = uniform01();
            const double r = std::sqrt(-variance * std::log(u1));
            const double a = 2.0 * 3.14159265358979323846 * u2;
            return {r * std::cos(a), r * std::sin(a)};
        }

        std::uint64_t next_u64() { return engine_(); }

    private:
        std::mt19937_64 engine_;
    };
}

#endif
