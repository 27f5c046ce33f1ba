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

#ifndef metaloc_estimator_H
#define metaloc_estimator_H

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <cblas.h>

#include "channel.hpp"
#include "errors.hpp"
#include "geometry.hpp"
#include "hash.hpp"
#include "metaprism.hpp"

namespace metaloc
{
    // Regular axis-aligned lattice of candidate positions. Point i has
    // x index i % nx, y index (i / nx) % ny, z index i / (nx ny).
    struct TestGrid
    {
        Position3D min, max;
        double step = 0.1;
        std::size_t nx = 1, ny = 1, nz = 1;

        std::size_t size() const { return nx * ny * nz; }

        Position3D point(std::size_t i) const
        {
            const std::size_t ix = i % nx, iy = (i / nx) % ny, iz = i / (nx * ny);
            return {min.x + double(ix) * step, min.y + double(iy) * step, min.z + double(iz) * step};
        }

        bool covers(const Position3D &p, double tol = 1e-9) const
        {
            return p.x >= min.x - tol && p.x <= max.x + tol && p.y >= min.y - tol && p.y <= max.y + tol &&
                   p.z >= min.z - tol && p.z <= max.z + tol;
        }

        std::size_t nearest_index(const Position3D &p) const
        {
            auto axis = [&](double v, double lo, std::size_t n)
            {
                const double t = std::round((v - lo) / step);
                return std::size_t(std::clamp(t, 0.0, double(n - 1)));
            };
            return axis(p.x, min.x, nx) + nx * (axis(p.y, min.y, ny) + ny * axis(p.z, min.z, nz));
        }

        std::uint64_t hash() const
        {
            Fnv1a h;
            h.str("grid").f64(min.x).f64(min.y).f64(min.z).f64(step).u64(nx).u64(ny).u64(nz);
            return h.digest();
        }
    };

    // Lattice min, min + step, ... up to max (inclusive within round-off)
    inline TestGrid make_grid(const Position3D &min, const Position3D &max, double step)
    {
        if (!(step > 0.0) || !min.is_finite() || !max.is_finite())
            throw DomainError("make_grid: step must be positive and bounds finite.");
        if (max.x < min.x || max.y < min.y || max.z < min.z)
            throw DomainError("make_grid: max corner below min corner.");
        if (!(min.z > 0.0))
            throw DomainError("make_grid: all grid points must lie in front of the metaprism (z > 0).");
        auto count = [&](double lo, double hi)
        { return std::size_t(std::floor((hi - lo) / step + 1e-9)) + 1; };
        TestGrid g;
        g.min = min;
        g.step = step;
        g.nx = count(min.x, max.x);
        g.ny = count(min.y, max.y);
        g.nz = count(min.z, max.z);
        g.max = {min.x + double(g.nx - 1) * step, min.y + double(g.ny - 1) * step, min.z + double(g.nz - 1) * step};
        return g;
    }

    // Smallest step-aligned lattice containing every position plus `margin` on
    // each side (only along axes where the positions spread, unless
    // margin_flat_axes is set). z is clipped to stay positive.
    inline TestGrid grid_covering(const std::vector<Position3D> &positions, double margin, double step, bool margin_flat_axes = false)
    {
        if (positions.empty())
            throw DomainError("grid_covering: no positions.");
        Position3D lo = positions.front(), hi = positions.front();
        for (const auto &p : positions)
        {
            lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
            hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
        }
        auto expand = [&](double &a, double &b)
        {
            if (b > a || margin_flat_axes)
            {
                a -= margin;
                b += margin;
            }
            a = std::floor(a / step + 1e-9) * step;
            b = std::ceil(b / step - 1e-9) * step;
        };
        expand(lo.x, hi.x);
        expand(lo.y, hi.y);
        expand(lo.z, hi.z);
        if (lo.z < step)
            lo.z = step;
        return make_grid(lo, hi, step);
    }

    // Noiseless profiles s_k(p) = A_k(p) sqrt(P_k) x_k for every grid point,
    // stored point-major (point i occupies values[i K .. i K + K)).
    struct FingerprintDB
    {
        TestGrid grid;
        std::size_t K = 0;
        std::uint64_t metaprism_hash = 0;
        std::uint64_t link_hash = 0;
        std::vector<std::complex<double>> values;

        std::size_t size() const { return grid.size(); }
        std::span<const std::complex<double>> profile(std::size_t i) const { return {values.data() + i * K, K}; }
    };

    // Factor applied to A_k to obtain a stored fingerprint
    inline std::complex<double> fingerprint_scale(const SystemConfig &cfg)
    {
        return std::sqrt(cfg.per_subcarrier_power()) * cfg.pilot;
    }

    // Fingerprints of grid points [first, first + count) into out (count * K values)
    inline void fingerprint_block(const CascadeKernel &kernel, const TestGrid &grid, std::size_t first, std::size_t count,
                                  std::complex<double> scale, std::span<std::complex<double>> out)
    {
        const std::size_t K = kernel.n_subcarriers();
        if (out.size() < count * K || first + count > grid.size())
            throw DomainError("fingerprint_block: block exceeds grid or output buffer.");
#pragma omp parallel for schedule(dynamic)
        for (long long j = 0; j < static_cast<long long>(count); ++j)
        {
            std::span<std::complex<double>> row = out.subspan(std::size_t(j) * K, K);
            kernel.evaluate(grid.point(first + std::size_t(j)), row);
            for (auto &v : row)
                v *= scale;
        }
    }

    inline FingerprintDB build_fingerprints(const TestGrid &grid, const Metaprism &mp, const Position3D &p_bs, const SystemConfig &cfg)
    {
        if (grid.size() == 0)
            throw DomainError("build_fingerprints: empty grid.");
        const CascadeKernel kernel(mp, p_bs, cfg);
        FingerprintDB db;
        db.grid = grid;
        db.K = cfg.n_subcarriers;
        db.metaprism_hash = mp.hash();
        db.link_hash = link_hash(cfg, p_bs);
        db.values.resize(grid.size() * db.K);
        fingerprint_block(kernel, grid, 0, grid.size(), fingerprint_scale(cfg), db.values);
        return db;
    }

    enum class MatchMetric
    {
        Correlation, // sum_k Re(y_k conj(s_k))
        Normalized   // the same divided by ||s||
    };

    inline const char *to_string(MatchMetric m)
    {
        return m == MatchMetric::Normalized ? "normalized" : "correlation";
    }

    inline MatchMetric match_metric_from_string(const std::string &s)
    {
        if (s == "normalized")
            return MatchMetric::Normalized;
        if (s == "correlation")
            return MatchMetric::Correlation;
        throw ConfigError("Unknown estimator metric '" + s + "' (expected normalized | correlation).");
    }

    struct MatchResult
    {
        std::size_t index = 0;
        double metric = -std::numeric_limits<double>::infinity();
        double runner_up = -std::numeric_limits<double>::infinity();
    };

    // Streams fingerprint blocks against a batch of received profiles and keeps
    // the running best and runner-up per profile. Blocks must arrive in
    // increasing grid order; on equal metric values the smaller grid index wins.
    //
    // Re(y conj(s)) summed over k equals the real dot product of the interleaved
    // (re, im) arrays, so a block is screened with a single dgemm. The dgemm
    // rounding depends on the batch shape, so any point whose screened score
    // lies within the rounding bound of the runner-up is rescored with a
    // fixed-order dot product; reported values depend only on (y, s).
    class BatchMatcher
    {
    public:
        BatchMatcher(const std::vector<std::vector<std::complex<double>>> &profiles, std::size_t K, MatchMetric metric)
            : T_(profiles.size()), K_(K), metric_(metric), results_(profiles.size())
        {
            y_.reserve(T_ * K_);
            for (const auto &p : profiles)
            {
                if (p.size() != K_)
                    throw DomainError("BatchMatcher: profile length differs from K.");
                y_.insert(y_.end(), p.begin(), p.end());
            }
            init_norms();
        }

        // Profiles already laid out back to back (T * K values)
        BatchMatcher(std::vector<std::complex<double>> &&flat, std::size_t T, std::size_t K, MatchMetric metric)
            : T_(T), K_(K), metric_(metric), y_(std::move(flat)), results_(T)
        {
            if (y_.size() != T * K)
                throw DomainError("BatchMatcher: flat profile buffer must hold T * K values.");
            init_norms();
        }

        std::size_t n_profiles() const { return T_; }

        void consume(std::size_t first_index, std::size_t count, std::span<const std::complex<double>> block)
        {
            if (count == 0 || T_ == 0)
                return;
            if (block.size() < count * K_)
                throw DomainError("BatchMatcher: block shorter than count * K.");
            if (first_index < next_index_)
                throw DomainError("BatchMatcher: blocks must arrive in increasing grid order.");
            next_index_ = first_index + count;

            scores_.resize(T_ * count);
            const int n2k = static_cast<int>(2 * K_);
            const double *s = reinterpret_cast<const double *>(block.data());
            cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, static_cast<int>(T_), static_cast<int>(count), n2k, 1.0,
                        reinterpret_cast<const double *>(y_.data()), n2k, s, n2k, 0.0, scores_.data(), static_cast<int>(count));

            const bool normalized = metric_ == MatchMetric::Normalized;
            snorm_.resize(count);
            for (std::size_t p = 0; p < count; ++p)
                snorm_[p] = std::sqrt(sequential_dot(s + 2 * p * K_, s + 2 * p * K_));

            // |dgemm - exact| <= 2K eps |y| |s|; doubled for safety
            const double bound = 4.0 * double(2 * K_) * std::numeric_limits<double>::epsilon();
            for (std::size_t t = 0; t < T_; ++t)
            {
                MatchResult &r = results_[t];
                const double *row = scores_.data() + t * count;
                const double *y = reinterpret_cast<const double *>(y_.data()) + 2 * t * K_;
                for (std::size_t p = 0; p < count; ++p)
                {
                    const double scale = normalized ? (snorm_[p] > 0.0 ? 1.0 / snorm_[p] : 0.0) : 1.0;
                    const double slack = bound * ynorm_[t] * snorm_[p] * scale + std::numeric_limits<double>::min();
                    if (row[p] * scale + slack < r.runner_up)
                        continue;
                    const double v = sequential_dot(y, s + 2 * p * K_) * scale;
                    if (v > r.metric)
                    {
                        r.runner_up = r.metric;
                        r.metric = v;
                        r.index = first_index + p;
                    }
                    else if (v > r.runner_up)
                        r.runner_up = v;
                }
            }
        }

        const std::vector<MatchResult> &results() const { return results_; }

    private:
        double sequential_dot(const double *a, const double *b) const
        {
            double acc = 0.0;
            for (std::size_t i = 0; i < 2 * K_; ++i)
                acc += a[i] * b[i];
            return acc;
        }

        void init_norms()
        {
            ynorm_.resize(T_);
            for (std::size_t t = 0; t < T_; ++t)
            {
                const double *y = reinterpret_cast<const double *>(y_.data()) + 2 * t * K_;
                ynorm_[t] = std::sqrt(sequential_dot(y, y));
            }
        }

        std::size_t T_ = 0, K_ = 0;
        MatchMetric metric_;
        std::vector<std::complex<double>> y_;
        std::vector<double> scores_, snorm_, ynorm_;
        std::vector<MatchResult> results_;
        std::size_t next_index_ = 0;
    };

    struct Estimate
    {
        Position3D position;
        AnglePair angle;
        double distance = 0.0;
        double metric_value = 0.0;
        double runner_up_margin = 0.0;
        std::size_t grid_index = 0;
    };

    inline Estimate make_estimate(const TestGrid &grid, const MatchResult &r)
    {
        Estimate e;
        e.grid_index = r.index;
        e.position = grid.point(r.index);
        e.angle = angle_of(e.position);
        e.distance = e.position.norm();
        e.metric_value = r.metric;
        e.runner_up_margin = std::isfinite(r.runner_up) ? r.metric - r.runner_up : std::numeric_limits<double>::infinity();
        return e;
    }

    inline void check_database(const FingerprintDB &db, std::uint64_t metaprism_hash, std::uint64_t link)
    {
        if (db.metaprism_hash != metaprism_hash || db.link_hash != link)
            throw StaleDatabaseError("Fingerprint database was built for a different metaprism or link configuration "
                                     "(metaprism " + hex64(db.metaprism_hash) + " vs " + hex64(metaprism_hash) +
                                     ", link " + hex64(db.link_hash) + " vs " + hex64(link) + ").");
    }

    // Grid position maximizing the matching metric against the received profile
    inline Estimate ml_estimate(const ReceivedProfile &y, const FingerprintDB &db, MatchMetric metric = MatchMetric::Correlation)
    {
        check_database(db, y.metaprism_hash, y.link_hash);
        if (y.size() != db.K)
            throw StaleDatabaseError("ml_estimate: profile has " + std::to_string(y.size()) + " subcarriers, database " + std::to_string(db.K) + ".");
        BatchMatcher matcher({y.y}, db.K, metric);
        constexpr std::size_t block = 256;
        for (std::size_t i = 0; i < db.size(); i += block)
        {
            const std::size_t n = std::min(block, db.size() - i);
            matcher.consume(i, n, std::span<const std::complex<double>>(db.values).subspan(i * db.K, n * db.K));
        }
        return make_estimate(db.grid, matcher.results().front());
    }

    inline std::pair<AnglePair, double> angle_distance_of(const Estimate &e)
    {
        return {angle_of(e.position), e.position.norm()};
    }

    struct ErrorMetrics
    {
        double angle_error = 0.0;    // great-circle, rad
        double theta_error = 0.0;    // |delta theta|, rad
        double phi_error = 0.0;      // |delta phi|, rad
        double position_error = 0.0; // m
        double distance_error = 0.0; // m
    };

    inline ErrorMetrics error_metrics(const Position3D &truth, const Position3D &estimate)
    {
        const AnglePair at = angle_of(truth), ae = angle_of(estimate);
        ErrorMetrics m;
        m.angle_error = angular_separation(at, ae);
        m.theta_error = std::abs(at.theta - ae.theta);
        m.phi_error = std::abs(at.phi - ae.phi);
        m.position_error = distance(truth, estimate);
        m.distance_error = std::abs(truth.norm() - estimate.norm());
        return m;
    }

    inline ErrorMetrics error_metrics(const Position3D &truth, const Estimate &e)
    {
        return error_metrics(truth, e.position);
    }
}

#endif
