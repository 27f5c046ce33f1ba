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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <omp.h>

#include <CLI11.hpp>

#include <metaloc/metaloc.hpp>

namespace fs = std::filesystem;
using namespace metaloc;

namespace
{
    enum ExitCode
    {
        exit_ok = 0,
        exit_failure = 1,
        exit_config = 2,
        exit_coverage = 3,
        exit_stale = 4
    };

    struct Common
    {
        std::string config;
        std::vector<std::string> set;
        std::string out;
        int workers = 0;

        RunConfig load() const
        {
            std::vector<std::string> o = set;
            if (!out.empty())
                o.push_back("output.directory=\"" + out + "\"");
            return load_run_config(config, o);
        }
    };

    void add_common(CLI::App *app, Common &c)
    {
        app->add_option("-c,--config", c.config, "JSON config file (a campaign manifest also works)");
        app->add_option("-s,--set", c.set, "Override one key, e.g. --set metaprism.design=random")->take_all();
        app->add_option("-o,--out", c.out, "Output directory (overrides output.directory)");
        app->add_option("-w,--workers", c.workers, "Maximum worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
    }

    std::ofstream open_out(const fs::path &p)
    {
        if (p.has_parent_path())
            fs::create_directories(p.parent_path());
        std::ofstream os(p);
        if (!os)
            throw ConfigError("cannot write '" + p.string() + "'.");
        return os;
    }

    std::string size_tag(std::size_t N, std::size_t M) { return std::to_string(N) + "x" + std::to_string(M); }

    int cmd_design(const RunConfig &cfg)
    {
        for (const auto &[N, M] : cfg.metaprism_sizes)
        {
            const Metaprism mp = cfg.make_metaprism(N, M);
            const fs::path p = fs::path(cfg.output_dir) / ("coefficients_" + std::string(to_string(cfg.design)) + "_" + size_tag(N, M) + ".csv");
            auto os = open_out(p);
            write_coefficient_map(os, mp);
            const double lambda = cfg.system().wavelength();
            std::printf("%s  hash=%s  D=%.4f m  d_F=%.2f m\n", p.string().c_str(), hex64(mp.hash()).c_str(),
                        aperture(mp, lambda).max_dimension, fraunhofer_distance(mp, lambda));
        }
        return exit_ok;
    }

    int cmd_af(const RunConfig &cfg)
    {
        const SystemConfig sys = cfg.system();
        const AnglePair incident = cfg.af_incident_theta_deg
                                       ? AnglePair::from_degrees(*cfg.af_incident_theta_deg, cfg.af_incident_phi_deg)
                                       : angle_of(cfg.bs_position);
        std::vector<std::size_t> ks = cfg.af_subcarriers;
        if (ks.empty())
            for (std::size_t k = 1; k <= sys.n_subcarriers; ++k)
                ks.push_back(k);
        const auto angles = theta_scan(deg2rad(cfg.af_theta_min_deg), deg2rad(cfg.af_theta_max_deg), deg2rad(cfg.af_theta_step_deg),
                                       deg2rad(cfg.af_phi_deg));
        for (const auto &[N, M] : cfg.metaprism_sizes)
        {
            const Metaprism mp = cfg.make_metaprism(N, M);
            const auto rows = af_sweep(mp, incident, angles, ks, sys, cfg.af_normalization);
            const fs::path p = fs::path(cfg.output_dir) /
                               ("af_" + std::string(to_string(cfg.design)) + "_" + size_tag(N, M) + "_K" + std::to_string(sys.n_subcarriers) + ".csv");
            auto os = open_out(p);
            write_af_table(os, rows);
            std::printf("%s  %zu rows\n", p.string().c_str(), rows.size());
        }
        return exit_ok;
    }

    int cmd_simulate(const RunConfig &cfg, bool dry_run, bool fresh)
    {
        CampaignOptions opt;
        opt.dry_run = dry_run;
        opt.resume = !fresh;
        const auto r = run_campaign(cfg, opt);
        if (dry_run)
            return exit_ok;
        for (const auto &run : r.runs)
            std::printf("%s  %zu records  fnv1a=%s\n", run.samples_file.string().c_str(), run.n_records, hex64(run.samples_digest).c_str());
        std::printf("%s\n", r.manifest.string().c_str());
        return exit_ok;
    }

    int cmd_ecdf(const std::string &file, const std::string &column, const std::string &out)
    {
        std::ifstream is(file);
        if (!is)
            throw ConfigError("cannot open '" + file + "'.");
        const std::vector<double> v = read_column(is, column);
        const ECDFCurve c = ecdf(v);
        if (!out.empty())
        {
            auto os = open_out(out);
            write_ecdf(os, c, column);
        }
        else
            write_ecdf(std::cout, c, column);
        std::fprintf(stderr, "%s: n=%zu  p50=%.6g  p90=%.6g  p100=%.6g\n", column.c_str(), v.size(), c.quantile(0.5), c.quantile(0.9),
                     c.quantile(1.0));
        return exit_ok;
    }

    struct EstimateArgs
    {
        std::string profile, fingerprints, save_profile;
        std::vector<double> position;
        std::uint64_t seed = 1;
    };

    int cmd_estimate(const RunConfig &cfg, const EstimateArgs &a)
    {
        const auto [N, M] = cfg.metaprism_sizes.front();
        const Metaprism mp = cfg.make_metaprism(N, M);
        const SystemConfig sys = cfg.system(cfg.rice_factors.front());

        ReceivedProfile y;
        if (!a.profile.empty())
        {
            std::ifstream is(a.profile);
            if (!is)
                throw ConfigError("cannot open '" + a.profile + "'.");
            y = read_profile(is);
        }
        else
        {
            if (a.position.size() != 3)
                throw ConfigError("estimate: give --profile FILE or --position X Y Z.");
            y = synthesize_received(mp, {a.position[0], a.position[1], a.position[2]}, cfg.bs_position, sys, a.seed);
            if (!a.save_profile.empty())
            {
                auto os = open_out(a.save_profile);
                write_profile(os, y, sys);
            }
        }

        std::vector<std::complex<double>> flat = y.y;
        std::size_t K = 0;
        TestGrid grid;
        std::optional<BatchMatcher> matcher;
        auto match = [&](const auto &source)
        {
            if (source.metaprism_hash() != y.metaprism_hash || source.link_hash() != y.link_hash)
                throw StaleDatabaseError("profile hashes (metaprism " + hex64(y.metaprism_hash) + ", link " + hex64(y.link_hash) +
                                         ") do not match the fingerprints (metaprism " + hex64(source.metaprism_hash()) + ", link " +
                                         hex64(source.link_hash()) + ").");
            if (source.K() != y.size())
                throw StaleDatabaseError("profile has " + std::to_string(y.size()) + " subcarriers, fingerprints " + std::to_string(source.K()) + ".");
            K = source.K();
            grid = source.grid();
            matcher.emplace(std::move(flat), 1, K, cfg.metric);
            source.for_each_block(256, [&](std::size_t first, std::size_t count, std::span<const std::complex<double>> v)
                                  { matcher->consume(first, count, v); });
        };

        if (a.position.size() == 3 && !cfg.make_grid().covers({a.position[0], a.position[1], a.position[2]}))
            std::fprintf(stderr, "warning: position lies outside the test grid\n");
        if (!a.fingerprints.empty())
            match(InMemorySource(load_fingerprints(a.fingerprints)));
        else
        {
            std::optional<fs::path> cache;
            const StreamingSource probe(mp, cfg.bs_position, sys, cfg.make_grid());
            if (cfg.use_cache)
                cache = (cfg.cache_dir ? fs::path(*cfg.cache_dir) : fs::path(cfg.output_dir) / "cache") / ("fingerprints_" + probe.header().key() + ".bin");
            match(StreamingSource(mp, cfg.bs_position, sys, cfg.make_grid(), cache));
        }

        const Estimate e = make_estimate(grid, matcher->results().front());
        std::printf("estimate_m %.6f %.6f %.6f\n", e.position.x, e.position.y, e.position.z);
        std::printf("theta_deg %.4f  phi_deg %.4f  distance_m %.4f\n", rad2deg(e.angle.theta), rad2deg(e.angle.phi), e.distance);
        std::printf("metric %.9g  margin %.9g  grid_index %zu\n", e.metric_value, e.runner_up_margin, e.grid_index);
        if (a.position.size() == 3 && a.profile.empty())
        {
            const auto m = error_metrics({a.position[0], a.position[1], a.position[2]}, e);
            std::printf("angle_error_deg %.4f  position_error_m %.4f\n", rad2deg(m.angle_error), m.position_error);
        }
        return exit_ok;
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"metaloc: NLOS localization through frequency-selective metasurfaces"};
    app.require_subcommand(1);

    Common common;
    auto *design = app.add_subcommand("design", "Build the metaprism and export its coefficient map");
    auto *af = app.add_subcommand("af", "Array-factor sweep over angle and subcarrier");
    auto *simulate = app.add_subcommand("simulate", "Monte Carlo localization campaign");
    auto *ecdf_cmd = app.add_subcommand("ecdf", "ECDF and percentiles of one samples column");
    auto *estimate = app.add_subcommand("estimate", "Single-shot estimate from a received profile");
    auto *show = app.add_subcommand("config", "Print the effective configuration");
    for (auto *s : {design, af, simulate, estimate, show})
        add_common(s, common);

    bool dry_run = false, fresh = false;
    simulate->add_flag("--dry-run", dry_run, "Print the cost estimate and exit");
    simulate->add_flag("--fresh", fresh, "Ignore checkpoints and start over");

    std::string samples_file, column = "angle_error_deg", ecdf_out;
    ecdf_cmd->add_option("samples", samples_file, "Error samples file")->required();
    ecdf_cmd->add_option("--column", column, "Column to summarize");
    ecdf_cmd->add_option("-o,--out", ecdf_out, "Write the ECDF table here instead of stdout");

    EstimateArgs ea;
    auto *prof = estimate->add_option("--profile", ea.profile, "Received profile table");
    auto *pos = estimate->add_option("--position", ea.position, "Synthesize the profile at this user position (m)")->expected(3);
    prof->excludes(pos);
    estimate->add_option("--fingerprints", ea.fingerprints, "Fingerprint cache file");
    estimate->add_option("--seed", ea.seed, "Seed for a synthesized profile");
    estimate->add_option("--save-profile", ea.save_profile, "Write the synthesized profile here");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_config;
    }

    try
    {
        if (common.workers > 0)
            omp_set_num_threads(common.workers);
        if (*ecdf_cmd)
            return cmd_ecdf(samples_file, column, ecdf_out);
        const RunConfig cfg = common.load();
        if (*show)
        {
            std::cout << serialize(cfg);
            return exit_ok;
        }
        if (*design)
            return cmd_design(cfg);
        if (*af)
            return cmd_af(cfg);
        if (*simulate)
            return cmd_simulate(cfg, dry_run, fresh);
        return cmd_estimate(cfg, ea);
    }
    catch (const ConfigError &e)
    {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return exit_config;
    }
    catch (const CoverageError &e)
    {
        std::fprintf(stderr, "coverage error: %s\n", e.what());
        return exit_coverage;
    }
    catch (const StaleDatabaseError &e)
    {
        std::fprintf(stderr, "stale fingerprints: %s\n", e.what());
        return exit_stale;
    }
    catch (const std::logic_error &e)
    {
        // domain and degenerate-input errors come from invalid parameters
        std::fprintf(stderr, "invalid parameter: %s\n", e.what());
        return exit_config;
    }
    catch (const std::exception &e)
    {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_failure;
    }
}
