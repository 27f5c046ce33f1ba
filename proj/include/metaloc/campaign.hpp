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

#ifndef metaloc_campaign_H
#define metaloc_campaign_H

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "errors.hpp"
#include "experiments.hpp"
#include "hash.hpp"

// Campaign driver behind `metaloc simulate`: one fingerprint pass per metaprism
// size scores every Rice factor at once; results are appended per position
// batch together with a checkpoint so an interrupted campaign resumes where it
// stopped.

namespace metaloc
{
    struct CampaignOptions
    {
        bool resume = true;
        bool dry_run = false;
        std::ostream *log = &std::cerr;
    };

    struct RunRecord
    {
        std::string name;
        std::size_t N = 0, M = 0;
        double rice_factor = 0.0;
        std::uint64_t metaprism_hash = 0, link_hash = 0;
        std::filesystem::path samples_file;
        std::size_t n_records = 0;
        std::uint64_t samples_digest = 0;
    };

    struct CampaignResult
    {
        std::vector<RunRecord> runs;
        std::filesystem::path manifest;
        double estimated_macs = 0.0; // multiply-accumulates, filled for dry runs too
    };

    inline std::string kappa_label(double k)
    {
        if (std::isinf(k))
            return "inf";
        char buf[64];
        std::snprintf(buf, sizeof buf, "%g", k);
        return buf;
    }

    inline std::string run_name(const RunConfig &c, std::size_t N, std::size_t M, double kappa)
    {
        return std::string(to_string(c.design)) + "_" + c.scenario + "_" + std::to_string(N) + "x" + std::to_string(M) + "_kappa" + kappa_label(kappa);
    }

    inline std::uint64_t file_digest(const std::filesystem::path &p)
    {
        std::ifstream is(p, std::ios::binary);
        Fnv1a h;
        char buf[1 << 16];
        while (is)
        {
            is.read(buf, sizeof buf);
            h.bytes(buf, std::size_t(is.gcount()));
        }
        return h.digest();
    }

    // Multiply-accumulate count: fingerprints (points x K x cells) plus matching
    // (trials x points x K), summed over metaprism sizes
    inline double campaign_cost(const RunConfig &c)
    {
        const double P = double(c.make_grid().size());
        const double K = double(c.n_subcarriers);
        const double T = double(c.user_positions().size() * c.n_trials * c.rice_factors.size());
        double macs = 0.0;
        for (const auto &[N, M] : c.metaprism_sizes)
            macs += P * K * double(N * M) + T * P * K;
        return macs;
    }

    inline CampaignResult run_campaign(const RunConfig &cfg, const CampaignOptions &opt = {})
    {
        cfg.validate();
        std::ostream &log = *opt.log;
        CampaignResult result;
        const std::vector<Position3D> positions = cfg.user_positions();
        const TestGrid grid = cfg.make_grid();
        result.estimated_macs = campaign_cost(cfg);

        char buf[512];
        std::snprintf(buf, sizeof buf, "grid: %zu points (%zu x %zu x %zu, step %.3g m); %zu positions x %zu trials x %zu Rice factors; ~%.3g MACs\n",
                      grid.size(), grid.nx, grid.ny, grid.nz, grid.step, positions.size(), cfg.n_trials, cfg.rice_factors.size(),
                      result.estimated_macs);
        log << buf;
        if (opt.dry_run)
            return result;

        const std::filesystem::path out_dir(cfg.output_dir);
        std::filesystem::create_directories(out_dir);
        const std::filesystem::path cache_dir = cfg.cache_dir ? std::filesystem::path(*cfg.cache_dir) : out_dir / "cache";
        const std::string config_digest = hex64(Fnv1a().str(serialize(cfg)).digest());

        std::vector<SystemConfig> systems;
        for (double k : cfg.rice_factors)
            systems.push_back(cfg.system(k));

        const std::size_t batch = cfg.position_batch == 0 ? positions.size() : cfg.position_batch;
        MonteCarloOptions mco;
        mco.metric = cfg.metric;

        for (const auto &[N, M] : cfg.metaprism_sizes)
        {
            const Metaprism mp = cfg.make_metaprism(N, M);
            Scenario sc = cfg.make_scenario();
            sc.metaprism_sizes = {{N, M}};
            for (const auto &w : regime_warnings(sc, systems.front().wavelength()))
                log << "warning: " << w << "\n";

            std::optional<std::filesystem::path> cache;
            StreamingSource probe(mp, cfg.bs_position, systems.front(), grid);
            if (cfg.use_cache)
                cache = cache_dir / ("fingerprints_" + probe.header().key() + ".bin");
            const StreamingSource source(mp, cfg.bs_position, systems.front(), grid, cache);

            std::vector<RunRecord> runs;
            for (double k : cfg.rice_factors)
            {
                RunRecord r;
                r.name = run_name(cfg, N, M, k);
                r.N = N;
                r.M = M;
                r.rice_factor = k;
                r.metaprism_hash = mp.hash();
                r.link_hash = source.link_hash();
                r.samples_file = out_dir / (r.name + ".samples.csv");
                runs.push_back(r);
            }

            // Resume from a checkpoint written by the same configuration
            const std::filesystem::path ckpt = out_dir / ("checkpoint_" + std::to_string(N) + "x" + std::to_string(M) + ".json");
            std::size_t done = 0;
            if (opt.resume && std::filesystem::exists(ckpt))
            {
                std::ifstream is(ckpt);
                const auto j = json::parse(is, nullptr, false);
                if (!j.is_discarded() && j.value("config_digest", std::string()) == config_digest)
                    done = j.value("completed_positions", std::size_t(0));
                bool files_ok = true;
                for (const auto &r : runs)
                    files_ok = files_ok && std::filesystem::exists(r.samples_file);
                if (!files_ok)
                    done = 0;
                if (done > 0)
                {
                    // drop any partial batch appended after the last checkpoint
                    for (const auto &r : runs)
                    {
                        std::ifstream in(r.samples_file);
                        std::string line, kept;
                        std::size_t rows = 0;
                        std::getline(in, line);
                        kept = line + "\n";
                        while (rows < done * cfg.n_trials && std::getline(in, line))
                        {
                            kept += line + "\n";
                            ++rows;
                        }
                        in.close();
                        std::ofstream(r.samples_file, std::ios::trunc) << kept;
                    }
                    log << "resuming " << N << "x" << M << " after " << done << " positions\n";
                }
            }
            if (done == 0)
                for (const auto &r : runs)
                    std::ofstream(r.samples_file, std::ios::trunc) << error_samples_header() << "\n";

            while (done < positions.size())
            {
                std::vector<std::size_t> idx;
                for (std::size_t i = done; i < std::min(positions.size(), done + batch); ++i)
                    idx.push_back(i);
                std::snprintf(buf, sizeof buf, "%zux%zu: positions %zu..%zu%s\n", N, M, idx.front(), idx.back(),
                              source.cache_valid() ? " (cached fingerprints)" : "");
                log << buf << std::flush;

                const auto samples = run_monte_carlo_multi(positions, cfg.bs_position, mp, source, systems, cfg.n_trials,
                                                           cfg.master_seed, mco, idx);
                for (std::size_t c = 0; c < runs.size(); ++c)
                {
                    std::ofstream os(runs[c].samples_file, std::ios::app);
                    write_error_samples(os, samples[c], false);
                }
                done += idx.size();
                json cj = {{"config_digest", config_digest}, {"completed_positions", done}};
                std::ofstream(ckpt, std::ios::trunc) << cj.dump(2) << "\n";
            }
            std::filesystem::remove(ckpt);

            for (auto &r : runs)
            {
                r.n_records = positions.size() * cfg.n_trials;
                r.samples_digest = file_digest(r.samples_file);
                result.runs.push_back(r);
            }
        }

        json runs = json::array();
        for (const auto &r : result.runs)
            runs.push_back({{"name", r.name},
                            {"metaprism_size", {r.N, r.M}},
                            {"rice_factor", detail::number_or_inf(r.rice_factor)},
                            {"metaprism_hash", hex64(r.metaprism_hash)},
                            {"link_hash", hex64(r.link_hash)},
                            {"samples_file", r.samples_file.filename().string()},
                            {"records", r.n_records},
                            {"samples_fnv1a", hex64(r.samples_digest)}});
        json manifest = {{"manifest_version", 1},
                         {"tool", "metaloc"},
                         {"config_digest", config_digest},
                         {"seed_scheme", "trial seed = derive_seed(derive_seed(master_seed, position_index), trial_index); "
                                         "diffuse stream = derive_seed(seed, 1), noise stream = derive_seed(seed, 2)"},
                         {"grid", {{"min_m", detail::position(grid.min)},
                                   {"max_m", detail::position(grid.max)},
                                   {"step_m", grid.step},
                                   {"points", grid.size()},
                                   {"hash", hex64(grid.hash())}}},
                         {"config", to_json(cfg)},
                         {"runs", runs}};
        result.manifest = out_dir / "manifest.json";
        std::ofstream(result.manifest, std::ios::trunc) << manifest.dump(2) << "\n";
        return result;
    }
}

#endif
