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

#ifndef metaloc_hash_H
#define metaloc_hash_H

#include <bit>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace metaloc
{
    // FNV-1a over a canonical byte stream. Doubles are fed by bit pattern, so the
    // digest identifies inputs exactly (used as cache / staleness keys).
    class Fnv1a
    {
    public:
        Fnv1a &bytes(const void *data, std::size_t n)
        {
            const auto *p = static_cast<const unsigned char *>(data);
            for (std::size_t i = 0; i < n; ++i)
            {
                h_ ^= p[i];
                h_ *= 0x100000001B3ULL;
            }
            return *this;
        }
        Fnv1a &u64(std::uint64_t v)
        {
            for (int i = 0; i < 8; ++i)
            {
                const unsigned char b = static_cast<unsigned char>(v >> (8 * i));
                bytes(&b, 1);
            }
            return *this;
        }
        Fnv1a &f64(double v)
        {
            if (v == 0.0)
                v = 0.0; // fold -0.0
            return u64(std::bit_cast<std::uint64_t>(v));
        }
        Fnv1a &str(std::string_view s)
        {
            u64(s.size());
            return bytes(s.data(), s.size());
        }
        std::uint64_t digest() const { return h_; }

    private:
        std::uint64_t h_ = 0xCBF29CE484222325ULL;
    };

    inline std::string hex64(std::uint64_t v)
    {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
        return buf;
    }
}

#endif
