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

#ifndef metaloc_experiments_H
#define metaloc_experiments_H

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "channel.hpp"
#include "errors.hpp"
#include "estimator.hpp"
#include "fingerprint_cache.hpp"
#include "geometry.hpp"
#include "metaprism.hpp"
#include "random.hpp"

namespace metaloc
{
    // ---------- Scenarios ----------

    struct Scenario
    {
        std::string name;
        std::vector<Position3D> user_positions;
        Position3D bs_position{8.0, 0.0, 8.0};
        std::vector<std::pair<std::size_t, std::size_t>> metaprism_sizes{{50, 50}, {100, 100}};
        DesignKind design = DesignKind::Beamsteering;
        double rice_factor = std::numeric_limits<double>::infinity();
    };

    inline const std::vector<double> &default_azimuths_deg()
    {
        static const std::vector<double> az{-30.0, -42.5, -55.0, -67.5, -80.0};
        return az;
    }

    // Users on a polar lattice in the phi = 0 plane, distance-major order
    inline std::vector<Position3D> polar_lattice(const std::vector<double> &distances, const std::vector<double> &azimuths_deg)
    {
        std::vector<Position3D> p;
        for (double d : distances)
            for (double az : azimuths_deg)
                p.push_back(position_from_polar(d, AnglePair::from_degrees(az, 0.0)));
        return p;
    }

    struct ScenarioSet
    {
        Scenario A, B;
    };

    // A: near field of the 50x50 metaprism (4..10 m); B: beyond its Fraunhofer distance (30..45 m)
    inline ScenarioSet default_scenarios(const Position3D &bs = {8.0, 0.0, 8.0})
    {
        ScenarioSet s;
        s.A.name = "A";
        s.A.user_positions = polar_lattice({4.0, 6.0, 8.0, 10.0}, default_azimuths_deg());
        s.A.bs_position = bs;
        s.B.name = "B";
        s.B.user_positions = polar_lattice({30.0, 35.0, 40.0, 45.0}, default_azimuths_deg());
        s.B.bs_position = bs;
        return s;
    }

    // Near/far-field classification against every metaprism size of the scenario.
    // Returns human-readable warnings (empty when the scenario is consistent).
    inline std::vector<std::string> regime_warnings(const Scenario &s, double wavelength)
    {
        std::vector<std::string> w;
        const bool near = s.name == "A";
        const bool far = s.name == "B";
        for (const auto &[N, M] : s.metaprism_sizes)
        {
            const double dF = fraunhofer_distance(build_grid(N, M, wavelength), wavelength);
            for (const auto &p : s.user_positions)
            {
                const double d = p.norm();
                if (near && d >= dF)
                {
                    char buf[200];
                    std::snprintf(buf, sizeof buf, "scenario %s: user at %.2f m is not in the near field of the %zux%zu metaprism (d_F = %.1f m)",
                                  s.name.c_str(), d, N, M, dF);
                    w.emplace_back(buf);
                    break;
                }
                if (far && d <= dF)
                {
                    char buf[200];
                    std::snprintf(buf, sizeof buf, "scenario %s: user at %.2f m is inside the Fraunhofer distance of the %zux%zu metaprism (d_F = %.1f m)",
                                  s.name.c_str(), d, N, M, dF);
                    w.emplace_back(buf);
                    break;
                }
            }
        }
        return w;
    }

    // ---------- Fingerprint sources ----------
    //
    // A source hands out fingerprint blocks in grid order:
    //   grid(), K(), metaprism_hash(), link_hash(), for_each_block(block, fn(first, count, span))

    class InMemorySource
    {
    public:
        explicit InMemorySource(const FingerprintDB &db) : db_(db) {}
        const TestGrid &grid() const { return db_.grid; }
        std::size_t K() const { return db_.K; }
        std::uint64_t metaprism_hash() const { return db_.metaprism_hash; }
        std::uint64_t link_hash() const { return db_.link_hash; }

        template <typename F>
        void for_each_block(std::size_t block, F &&fn) const
        {
            for (std::size_t i = 0; i < db_.size(); i += block)
            {
                const std::size_t n = std::min(block, db_.size() - i);
                fn(i, n, std::span<const std::complex<double>>(db_.values).subspan(i * db_.K, n * db_.K));
            }
        }

    private:
        const FingerprintDB &db_;
    };

    // Computes fingerprints block by block. With a cache path, a valid cache
    // file is streamed instead; a missing or stale one is (re)written while
    // computing.
    class StreamingSource
    {
    public:
        StreamingSource(const Metaprism &mp, const Position3D &p_bs, const SystemConfig &cfg, TestGrid grid,
                        std::optional<std::filesystem::path> cache = std::nullopt)
            : mp_(mp), p_bs_(p_bs), cfg_(cfg), grid_(std::move(grid)), cache_(std::move(cache))
        {
            header_ = {mp.hash(), metaloc::link_hash(cfg, p_bs), grid_.hash(), cfg.n_subcarriers, grid_.size(), grid_};
        }

        const TestGrid &grid() const { return grid_; }
        std::size_t K() const { return cfg_.n_subcarriers; }
        std::uint64_t metaprism_hash() const { return header_.metaprism_hash; }
        std::uint64_t link_hash() const { return header_.link_hash; }
        const FingerprintHeader &header() const { return header_; }

        // True if a cache file matching this source already exists
        bool cache_valid() const
        {
            if (!cache_ || !std::filesystem::exists(*cache_))
                return false;
            try
            {
                FingerprintCacheReader r(*cache_);
                const auto &h = r.header();
                return h.metaprism_hash == header_.metaprism_hash && h.link_hash == header_.link_hash &&
                       h.grid_hash == header_.grid_hash && h.K == header_.K;
            }
            catch (const std::exception &)
            {
                return false;
            }
        }

        template <typename F>
        void for_each_block(std::size_t block, F &&fn) const
        {
            const std::size_t K = cfg_.n_subcarriers, P = grid_.size();
            std::vector<std::complex<double>> buf(block * K);
            if (cache_valid())
            {
                FingerprintCacheReader r(*cache_);
                for (std::size_t i = 0; i < P; i += block)
                {
                    const std::size_t n = std::min(block, P - i);
                    r.read(n, buf);
                    fn(i, n, std::span<const std::complex<double>>(buf).first(n * K));
                }
                return;
            }

            const CascadeKernel kernel(mp_, p_bs_, cfg_);
            const auto scale = fingerprint_scale(cfg_);
            std::optional<FingerprintCacheWriter> writer;
            if (cache_)
                writer.emplace(*cache_, header_);
            for (std::size_t i = 0; i < P; i += block)
            {
                const std::size_t n = std::min(block, P - i);
                fingerprint_block(kernel, grid_, i, n, scale, buf);
                const auto view = std::span<const std::complex<double>>(buf).first(n * K);
                if (writer)
                    writer->append(view);
                fn(i, n, view);
            }
            if (writer)
                writer->finish();
        }

    private:
        const Metaprism &mp_;
        Position3D p_bs_;
        SystemConfig cfg_;
        TestGrid grid_;
        std::optional<std::filesystem::path> cache_;
        FingerprintHeader header_;
    };

    // ---------- Monte Carlo ----------

    struct ErrorRecord
    {
        std::size_t trial_id = 0;       // position_index * n_trials + trial_index
        std::size_t position_index = 0;
        std::size_t trial_index = 0;
        std::uint64_t seed = 0;
        Position3D truth, estimate;
        AnglePair true_angle, est_angle;
        double angle_error = 0.0;       // rad
        double theta_error = 0.0;       // rad
        double phi_error = 0.0;         // rad
        double position_error = 0.0;    // m
        double distance_error = 0.0;    // m
        double metric = 0.0;
        double margin = 0.0;
    };

    struct ErrorSamples
    {
        std::vector<ErrorRecord> records;
    };

    // Seed of trial t at position i: derive_seed(derive_seed(master, i), t)
    inline std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t position_index, std::size_t trial_index)
    {
        return derive_seed(derive_seed(master_seed, position_index), trial_index);
    }

    struct MonteCarloOptions
    {
        MatchMetric metric = MatchMetric::Normalized;
        std::size_t block = 256; // grid points per scored block
    };

    // Runs n_trials noisy realizations at each listed position (all positions
    // when `position_indices` is empty) for every configuration in `cfgs`, and
    // scores all of them in a single pass over the source. The configurations
    // may differ in fading and noise but must share the fingerprints (same link
    // hash). Trial seeds depend only on (master seed, position, trial), so every
    // configuration sees the same random draws.
    template <typename Source>
    std::vector<ErrorSamples> run_monte_carlo_multi(const std::vector<Position3D> &positions, const Position3D &p_bs, const Metaprism &mp,
                                                    const Source &source, const std::vector<SystemConfig> &cfgs, std::size_t n_trials,
                                                    std::uint64_t master_seed, const MonteCarloOptions &opt = {},
                                                    std::vector<std::size_t> position_indices = {})
    {
        if (cfgs.empty())
            throw DomainError("run_monte_carlo: no configurations.");
        for (const auto &cfg : cfgs)
        {
            if (source.metaprism_hash() != mp.hash() || source.link_hash() != link_hash(cfg, p_bs))
                throw StaleDatabaseError("run_monte_carlo: fingerprint source does not match metaprism / link configuration.");
            if (source.K() != cfg.n_subcarriers)
                throw StaleDatabaseError("run_monte_carlo: fingerprint source has a different subcarrier count.");
        }
        if (position_indices.empty())
            for (std::size_t i = 0; i < positions.size(); ++i)
                position_indices.push_back(i);
        for (std::size_t i : position_indices)
        {
            if (i >= positions.size())
                throw IndexError("run_monte_carlo: position index out of range.");
            if (!source.grid().covers(positions[i]))
                throw CoverageError("run_monte_carlo: test grid does not cover user position " + std::to_string(i) + ".");
        }

        const std::size_t K = source.K();
        const std::size_t P = position_indices.size();
        const std::size_t per_cfg = P * n_trials;
        const std::size_t T = per_cfg * cfgs.size();
        std::vector<ErrorSamples> out(cfgs.size());
        if (per_cfg == 0)
            return out;

        const CascadeKernel kernel(mp, p_bs, cfgs.front());
        std::vector<std::complex<double>> flat(T * K);
        std::vector<std::uint64_t> seeds(per_cfg);
#pragma omp parallel for schedule(dynamic)
        for (long long pi = 0; pi < static_cast<long long>(P); ++pi)
        {
            const std::size_t i = position_indices[std::size_t(pi)];
            CascadeGain g;
            g.A.resize(K);
            kernel.evaluate(positions[i], g.A);
            for (std::size_t t = 0; t < n_trials; ++t)
            {
                const std::size_t row = std::size_t(pi) * n_trials + t;
                seeds[row] = trial_seed(master_seed, i, t);
                for (std::size_t c = 0; c < cfgs.size(); ++c)
                {
                    const ReceivedProfile r = synthesize_from_cascade(g, cfgs[c], seeds[row]);
                    std::copy(r.y.begin(), r.y.end(), flat.begin() + std::ptrdiff_t((c * per_cfg + row) * K));
                }
            }
        }

        BatchMatcher matcher(std::move(flat), T, K, opt.metric);
        source.for_each_block(opt.block, [&](std::size_t first, std::size_t count, std::span<const std::complex<double>> v)
                              { matcher.consume(first, count, v); });

        for (std::size_t c = 0; c < cfgs.size(); ++c)
        {
            out[c].records.resize(per_cfg);
            for (std::size_t pi = 0; pi < P; ++pi)
                for (std::size_t t = 0; t < n_trials; ++t)
                {
                    const std::size_t row = pi * n_trials + t;
                    const std::size_t i = position_indices[pi];
                    const Estimate e = make_estimate(source.grid(), matcher.results()[c * per_cfg + row]);
                    const ErrorMetrics em = error_metrics(positions[i], e);
                    ErrorRecord &r = out[c].records[row];
                    r.trial_id = i * n_trials + t;
                    r.position_index = i;
                    r.trial_index = t;
                    r.seed = seeds[row];
                    r.truth = positions[i];
                    r.estimate = e.position;
                    r.true_angle = angle_of(positions[i]);
                    r.est_angle = e.angle;
                    r.angle_error = em.angle_error;
                    r.theta_error = em.theta_error;
                    r.phi_error = em.phi_error;
                    r.position_error = em.position_error;
                    r.distance_error = em.distance_error;
                    r.metric = e.metric_value;
                    r.margin = e.runner_up_margin;
                }
        }
        return out;
    }

    template <typename Source>
    ErrorSamples run_monte_carlo(const std::vector<Position3D> &positions, const Position3D &p_bs, const Metaprism &mp,
                                 const Source &source, const SystemConfig &cfg, std::size_t n_trials, std::uint64_t master_seed,
                                 const MonteCarloOptions &opt = {}, std::vector<std::size_t> position_indices = {})
    {
        return std::move(run_monte_carlo_multi(positions, p_bs, mp, source, {cfg}, n_trials, master_seed, opt,
                                               std::move(position_indices))
                             .front());
    }

    inline ErrorSamples run_monte_carlo(const Scenario &s, const Metaprism &mp, const FingerprintDB &db, const SystemConfig &cfg,
                                        std::size_t n_trials, std::uint64_t master_seed, const MonteCarloOptions &opt = {})
    {
        return run_monte_carlo(s.user_positions, s.bs_position, mp, InMemorySource(db), cfg, n_trials, master_seed, opt);
    }

    // ---------- Error samples file ----------

    inline const char *error_samples_header()
    {
        return "trial_id,position_index,trial_index,seed,true_x,true_y,true_z,est_x,est_y,est_z,"
               "true_theta_deg,true_phi_deg,est_theta_deg,est_phi_deg,angle_error_deg,theta_error_deg,phi_error_deg,"
               "position_error_m,distance_error_m,metric,margin";
    }

    inline void write_error_record(std::ostream &os, const ErrorRecord &r)
    {
        char buf[1024];
        std::snprintf(buf, sizeof buf,
                      "%zu,%zu,%zu,%llu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      r.trial_id, r.position_index, r.trial_index, static_cast<unsigned long long>(r.seed),
                      r.truth.x, r.truth.y, r.truth.z, r.estimate.x, r.estimate.y, r.estimate.z,
                      rad2deg(r.true_angle.theta), rad2deg(r.true_angle.phi), rad2deg(r.est_angle.theta), rad2deg(r.est_angle.phi),
                      rad2deg(r.angle_error), rad2deg(r.theta_error), rad2deg(r.phi_error),
                      r.position_error, r.distance_error, r.metric, r.margin);
        os << buf;
    }

    inline void write_error_samples(std::ostream &os, const ErrorSamples &s, bool header = true)
    {
        if (header)
            os << error_samples_header() << "\n";
        for (const auto &r : s.records)
            write_error_record(os, r);
    }

    // Reads one numeric column (by header name) of a delimiter-separated table
    inline std::vector<double> read_column(std::istream &is, const std::string &column)
    {
        std::string line;
        while (std::getline(is, line) && (line.empty() || line[0] == '#'))
        {
        }
        if (line.empty())
            throw ConfigError("read_column: empty table.");
        std::vector<std::string> names;
        {
            std::stringstream ss(line);
            std::string tok;
            while (std::getline(ss, tok, ','))
                names.push_back(tok);
        }
        const auto it = std::find(names.begin(), names.end(), column);
        if (it == names.end())
            throw ConfigError("read_column: no column named '" + column + "'.");
        const std::size_t col = std::size_t(it - names.begin());

        std::vector<double> v;
        while (std::getline(is, line))
        {
            if (line.empty() || line[0] == '#')
                continue;
            std::stringstream ss(line);
            std::string tok;
            for (std::size_t c = 0; c <= col; ++c)
                if (!std::getline(ss, tok, ','))
                    throw ConfigError("read_column: short row '" + line + "'.");
            try
            {
                v.push_back(std::stod(tok));
            }
            catch (const std::logic_error &)
            {
                throw ConfigError("read_column: non-numeric value '" + tok + "'.");
            }
        }
        return v;
    }

    // ---------- ECDF ----------

    struct ECDFCurve
    {
        std::vector<double> x; // distinct sorted values
        std::vector<double> p; // P(X <= x[i])

        // Right-continuous step function
        double evaluate(double v) const
        {
            const auto it = std::upper_bound(x.begin(), x.end(), v);
            return it == x.begin() ? 0.0 : p[std::size_t(it - x.begin()) - 1];
        }

        // Smallest x with F(x) >= q
        double quantile(double q) const
        {
            const auto it = std::lower_bound(p.begin(), p.end(), q - 1e-12);
            return it == p.end() ? x.back() : x[std::size_t(it - p.begin())];
        }
    };

    inline ECDFCurve ecdf(std::vector<double> samples)
    {
        if (samples.empty())
            throw DomainError("ecdf: no samples.");
        std::sort(samples.begin(), samples.end());
        ECDFCurve c;
        const double n = double(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i)
        {
            if (i + 1 < samples.size() && samples[i + 1] == samples[i])
                continue;
            c.x.push_back(samples[i]);
            c.p.push_back(double(i + 1) / n);
        }
        return c;
    }

    inline void write_ecdf(std::ostream &os, const ECDFCurve &c, const std::string &column = "error")
    {
        os << column << ",probability\n";
        char buf[96];
        for (std::size_t i = 0; i < c.x.size(); ++i)
        {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", c.x[i], c.p[i]);
            os << buf;
        }
    }

    enum class ErrorKind
    {
        Angle,     // great-circle, rad
        Position,  // m
        Distance   // m
    };

    inline double error_of(const ErrorMetrics &m, ErrorKind kind)
    {
        switch (kind)
        {
        case ErrorKind::Position:
            return m.position_error;
        case ErrorKind::Distance:
            return m.distance_error;
        default:
            return m.angle_error;
        }
    }

    inline std::vector<double> error_values(const ErrorSamples &s, ErrorKind kind)
    {
        std::vector<double> v;
        v.reserve(s.records.size());
        for (const auto &r : s.records)
            v.push_back(kind == ErrorKind::Angle ? r.angle_error : kind == ErrorKind::Position ? r.position_error : r.distance_error);
        return v;
    }

    // Errors of a guess drawn uniformly from the grid, enumerated exactly over
    // every (user position, grid point) pair
    inline std::vector<double> uniform_guess_errors(const std::vector<Position3D> &positions, const TestGrid &grid, ErrorKind kind = ErrorKind::Angle)
    {
        std::vector<double> v(positions.size() * grid.size());
#pragma omp parallel for
        for (long long g = 0; g < static_cast<long long>(grid.size()); ++g)
        {
            const Position3D q = grid.point(std::size_t(g));
            for (std::size_t i = 0; i < positions.size(); ++i)
                v[i * grid.size() + std::size_t(g)] = error_of(error_metrics(positions[i], q), kind);
        }
        return v;
    }

    inline ECDFCurve uniform_guess_baseline(const Scenario &s, const TestGrid &grid, ErrorKind kind = ErrorKind::Angle)
    {
        return ecdf(uniform_guess_errors(s.user_positions, grid, kind));
    }

    struct KSResult
    {
        double statistic = 0.0;   // sup |F1 - F2|
        double p_value = 1.0;     // asymptotic Kolmogorov distribution
        double critical = 0.0;    // rejection threshold at the requested level
        bool reject = false;
    };

    // Two-sample Kolmogorov-Smirnov test
    inline KSResult ks_two_sample(std::vector<double> a, std::vector<double> b, double level = 0.05)
    {
        if (a.empty() || b.empty())
            throw DomainError("ks_two_sample: both samples must be nonempty.");
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        const double na = double(a.size()), nb = double(b.size());
        std::size_t i = 0, j = 0;
        double d = 0.0;
        while (i < a.size() && j < b.size())
        {
            const double v = std::min(a[i], b[j]);
            while (i < a.size() && a[i] <= v)
                ++i;
            while (j < b.size() && b[j] <= v)
                ++j;
            d = std::max(d, std::abs(double(i) / na - double(j) / nb));
        }
        KSResult r;
        r.statistic = d;
        const double ne = na * nb / (na + nb);
        const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
        double sum = 0.0;
        for (int k = 1; k <= 100; ++k)
            sum += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
        r.p_value = lambda < 1e-3 ? 1.0 : std::clamp(sum, 0.0, 1.0);
        r.critical = std::sqrt(-0.5 * std::log(level / 2.0)) * std::sqrt((na + nb) / (na * nb));
        r.reject = d > r.critical;
        return r;
    }
}

#endif
