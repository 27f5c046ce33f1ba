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

#ifndef metaloc_fingerprint_cache_H
#define metaloc_fingerprint_cache_H

#include <array>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "estimator.hpp"
#include "hash.hpp"

// Binary fingerprint container (little-endian):
//
//   offset  size  field
//   0       8     magic "MLOCFPDB"
//   8       4     format version (1)
//   12      4     byte-order mark 0x01020304
//   16      8     metaprism hash
//   24      8     link hash
//   32      8     grid hash
//   40      8     K
//   48      8     number of points
//   56      56    grid min x, y, z, max x, y, z, step (float64)
//   112     24    nx, ny, nz (uint64)
//   136     ...   per point, in grid order: K x (re, im) float64
//
// Files are written under a temporary name and renamed once complete.

namespace metaloc
{
    inline constexpr std::uint32_t fingerprint_format_version = 1;
    inline constexpr std::size_t fingerprint_header_size = 136;

    struct FingerprintHeader
    {
        std::uint64_t metaprism_hash = 0, link_hash = 0, grid_hash = 0;
        std::uint64_t K = 0, n_points = 0;
        TestGrid grid;

        // Key used for cache file names
        std::string key() const
        {
            return hex64(Fnv1a().u64(metaprism_hash).u64(link_hash).u64(grid_hash).u64(K).digest());
        }
    };

    inline FingerprintHeader header_of(const FingerprintDB &db)
    {
        return {db.metaprism_hash, db.link_hash, db.grid.hash(), db.K, db.grid.size(), db.grid};
    }

    namespace detail
    {
        template <typename T>
        void put(std::ostream &os, T v) { os.write(reinterpret_cast<const char *>(&v), sizeof(T)); }

        template <typename T>
        T get(std::istream &is)
        {
            T v{};
            is.read(reinterpret_cast<char *>(&v), sizeof(T));
            if (!is)
                throw ConfigError("Fingerprint cache: truncated header.");
            return v;
        }
    }

    inline void write_fingerprint_header(std::ostream &os, const FingerprintHeader &h)
    {
        os.write("MLOCFPDB", 8);
        detail::put<std::uint32_t>(os, fingerprint_format_version);
        detail::put<std::uint32_t>(os, 0x01020304u);
        detail::put(os, h.metaprism_hash);
        detail::put(os, h.link_hash);
        detail::put(os, h.grid_hash);
        detail::put(os, h.K);
        detail::put(os, h.n_points);
        for (double v : {h.grid.min.x, h.grid.min.y, h.grid.min.z, h.grid.max.x, h.grid.max.y, h.grid.max.z, h.grid.step})
            detail::put(os, v);
        detail::put<std::uint64_t>(os, h.grid.nx);
        detail::put<std::uint64_t>(os, h.grid.ny);
        detail::put<std::uint64_t>(os, h.grid.nz);
    }

    inline FingerprintHeader read_fingerprint_header(std::istream &is)
    {
        char magic[8];
        is.read(magic, 8);
        if (!is || std::memcmp(magic, "MLOCFPDB", 8) != 0)
            throw ConfigError("Fingerprint cache: bad magic.");
        if (detail::get<std::uint32_t>(is) != fingerprint_format_version)
            throw ConfigError("Fingerprint cache: unsupported format version.");
        if (detail::get<std::uint32_t>(is) != 0x01020304u)
            throw ConfigError("Fingerprint cache: byte order mismatch.");
        FingerprintHeader h;
        h.metaprism_hash = detail::get<std::uint64_t>(is);
        h.link_hash = detail::get<std::uint64_t>(is);
        h.grid_hash = detail::get<std::uint64_t>(is);
        h.K = detail::get<std::uint64_t>(is);
        h.n_points = detail::get<std::uint64_t>(is);
        std::array<double, 7> g{};
        for (double &v : g)
            v = detail::get<double>(is);
        h.grid.min = {g[0], g[1], g[2]};
        h.grid.max = {g[3], g[4], g[5]};
        h.grid.step = g[6];
        h.grid.nx = detail::get<std::uint64_t>(is);
        h.grid.ny = detail::get<std::uint64_t>(is);
        h.grid.nz = detail::get<std::uint64_t>(is);
        if (h.grid.size() != h.n_points || h.grid.hash() != h.grid_hash)
            throw ConfigError("Fingerprint cache: grid description inconsistent with header.");
        return h;
    }

    // Incremental writer; blocks must be appended in grid order
    class FingerprintCacheWriter
    {
    public:
        FingerprintCacheWriter(std::filesystem::path path, const FingerprintHeader &h)
            : path_(std::move(path)), tmp_(path_.string() + ".partial"), header_(h)
        {
            if (path_.has_parent_path())
                std::filesystem::create_directories(path_.parent_path());
            os_.open(tmp_, std::ios::binary | std::ios::trunc);
            if (!os_)
                throw ConfigError("Fingerprint cache: cannot open '" + tmp_.string() + "' for writing.");
            write_fingerprint_header(os_, h);
        }

        void append(std::span<const std::complex<double>> values)
        {
            os_.write(reinterpret_cast<const char *>(values.data()), std::streamsize(values.size() * sizeof(std::complex<double>)));
            written_ += values.size();
        }

        // Renames the file into place if every point was written
        void finish()
        {
            os_.close();
            if (written_ != header_.K * header_.n_points)
                throw ConfigError("Fingerprint cache: incomplete write.");
            std::filesystem::rename(tmp_, path_);
        }

        ~FingerprintCacheWriter()
        {
            if (os_.is_open())
            {
                os_.close();
                std::error_code ec;
                std::filesystem::remove(tmp_, ec);
            }
        }

    private:
        std::filesystem::path path_, tmp_;
        FingerprintHeader header_;
        std::ofstream os_;
        std::uint64_t written_ = 0;
    };

    class FingerprintCacheReader
    {
    public:
        explicit FingerprintCacheReader(const std::filesystem::path &path) : is_(path, std::ios::binary)
        {
            if (!is_)
                throw ConfigError("Fingerprint cache: cannot open '" + path.string() + "'.");
            header_ = read_fingerprint_header(is_);
            const auto expected = fingerprint_header_size + header_.n_points * header_.K * sizeof(std::complex<double>);
            if (std::filesystem::file_size(path) != expected)
                throw ConfigError("Fingerprint cache: file size does not match header.");
        }

        const FingerprintHeader &header() const { return header_; }

        // Next `count` points in grid order
        void read(std::size_t count, std::span<std::complex<double>> out)
        {
            const std::size_t n = count * header_.K;
            if (out.size() < n)
                throw DomainError("Fingerprint cache: output buffer too small.");
            is_.read(reinterpret_cast<char *>(out.data()), std::streamsize(n * sizeof(std::complex<double>)));
            if (!is_)
                throw ConfigError("Fingerprint cache: truncated data.");
        }

    private:
        std::ifstream is_;
        FingerprintHeader header_;
    };

    inline void save_fingerprints(const std::filesystem::path &path, const FingerprintDB &db)
    {
        FingerprintCacheWriter w(path, header_of(db));
        w.append(db.values);
        w.finish();
    }

    inline FingerprintDB load_fingerprints(const std::filesystem::path &path)
    {
        FingerprintCacheReader r(path);
        const auto &h = r.header();
        FingerprintDB db;
        db.grid = h.grid;
        db.K = h.K;
        db.metaprism_hash = h.metaprism_hash;
        db.link_hash = h.link_hash;
        db.values.resize(h.n_points * h.K);
        r.read(h.n_points, db.values);
        return db;
    }

    // Lossless text form: one row per (point, subcarrier)
    inline void export_fingerprints_text(std::ostream &os, const FingerprintDB &db)
    {
        os << "# metaloc-fingerprints v1 K=" << db.K << " points=" << db.size() << " metaprism_hash=" << hex64(db.metaprism_hash)
           << " link_hash=" << hex64(db.link_hash) << " grid_hash=" << hex64(db.grid.hash()) << "\n";
        os << "index,x,y,z,k,re,im\n";
        char buf[256];
        for (std::size_t i = 0; i < db.size(); ++i)
        {
            const Position3D p = db.grid.point(i);
            for (std::size_t k = 0; k < db.K; ++k)
            {
                const auto v = db.values[i * db.K + k];
                std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%zu,%.17g,%.17g\n", i, p.x, p.y, p.z, k + 1, v.real(), v.imag());
                os << buf;
            }
        }
    }
}

#endif
