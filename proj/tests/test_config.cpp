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

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include <metaloc/campaign.hpp>

using namespace metaloc;
namespace fs = std::filesystem;

namespace
{
    fs::path scratch(const std::string &name)
    {
        const auto d = fs::temp_directory_path() / "metaloc_tests" / name;
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }

    std::string slurp(const fs::path &p)
    {
        std::ifstream is(p, std::ios::binary);
        std::stringstream ss;
        ss << is.rdbuf();
        return ss.str();
    }

    // A campaign small enough for a unit test
    RunConfig tiny(const fs::path &out)
    {
        RunConfig c;
        c.n_subcarriers = 32;
        c.metaprism_sizes = {{8, 8}, {10, 10}};
        c.design = DesignKind::Random;
        c.scenario = "custom";
        c.positions = {{-3.0, 0.0, 4.0}, {-4.5, 0.0, 5.5}, {-2.0, 0.0, 6.0}};
        c.grid_step_m = 0.25;
        c.rice_factors = {1.0, std::numeric_limits<double>::infinity()};
        c.n_trials = 4;
        c.position_batch = 2;
        c.output_dir = out.string();
        return c;
    }
}

TEST(RunConfig, DefaultsMatchTheReferenceSetup)
{
    const RunConfig c;
    const auto s = c.system();
    EXPECT_EQ(s.f0, 28e9);
    EXPECT_NEAR(s.total_power, 0.1, 1e-15);
    EXPECT_NEAR(s.gain_bs, db_to_linear(6), 1e-15);
    EXPECT_NEAR(s.gain_user, db_to_linear(6), 1e-15);
    EXPECT_EQ(s.bandwidth, 198e6);
    EXPECT_EQ(s.n_subcarriers, 3300u);
    EXPECT_NEAR(s.noise_figure, db_to_linear(3), 1e-15);
    EXPECT_EQ(c.bs_position, (Position3D{8, 0, 8}));
    EXPECT_EQ(c.grid_step_m, 0.1);
    EXPECT_EQ(c.n_trials, 200u);
    EXPECT_NEAR(c.theta_ref(), pi / 4, 1e-15);
    EXPECT_EQ(c.metric, MatchMetric::Normalized);
    EXPECT_EQ(c.diffuse_power, DiffusePower::PerSubcarrier);
    EXPECT_NO_THROW(c.validate());
}

TEST(RunConfig, SerializeRoundTrip)
{
    RunConfig c = tiny("somewhere");
    c.pitch_m = 0.0051;
    c.theta_ref_deg = 30.5;
    c.noise_psd_w_per_hz = 1.234567890123e-21;
    c.diffuse_power = DiffusePower::Total;
    c.af_subcarriers = {1, 7, 32};
    c.af_incident_theta_deg = 12.25;
    c.af_normalization = AFNormalization::PerSubcarrier;
    c.cache_dir = "/tmp/x";
    c.metric = MatchMetric::Correlation;
    c.f0_hz = 28.000000001e9;
    c.random_seed = 0xFFFFFFFFFFFFFFFFull;
    EXPECT_EQ(parse_run_config(serialize(c)), c);
    EXPECT_EQ(parse_run_config(serialize(RunConfig{})), RunConfig{});
    EXPECT_EQ(serialize(parse_run_config(serialize(c))), serialize(c));
}

TEST(RunConfig, RejectsBadInput)
{
    EXPECT_THROW(parse_run_config("{\"sytem\": {}}"), ConfigError);
    EXPECT_THROW(parse_run_config("{\"system\": {\"k\": 1}}"), ConfigError);
    EXPECT_THROW(parse_run_config("{\"system\": {\"n_subcarriers\": \"many\"}}"), ConfigError);
    EXPECT_THROW(parse_run_config("not json"), ConfigError);
    EXPECT_THROW(parse_run_config("{\"estimator\": {\"metric\": \"l2\"}}"), ConfigError);
    EXPECT_THROW(parse_run_config("{\"campaign\": {\"rice_factors\": [\"big\"]}}"), ConfigError);

    RunConfig c;
    c.scenario = "custom";
    EXPECT_THROW(c.validate(), ConfigError);
    c.scenario = "C";
    EXPECT_THROW(c.validate(), ConfigError);
    c = RunConfig{};
    c.metaprism_sizes = {{0, 0}};
    EXPECT_THROW(c.validate(), ConfigError);
    c = RunConfig{};
    c.rice_factors = {-1.0};
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(RunConfig, Overrides)
{
    json j = json::object();
    apply_override(j, "campaign.rice_factors=[0, 1, \"inf\"]");
    apply_override(j, "metaprism.design=random");
    apply_override(j, "metaprism.sizes=[[20,30]]");
    apply_override(j, "system.n_subcarriers=256");
    const auto c = run_config_from_json(j);
    ASSERT_EQ(c.rice_factors.size(), 3u);
    EXPECT_TRUE(std::isinf(c.rice_factors[2]));
    EXPECT_EQ(c.design, DesignKind::Random);
    EXPECT_EQ(c.metaprism_sizes.front(), std::make_pair(std::size_t(20), std::size_t(30)));
    EXPECT_EQ(c.n_subcarriers, 256u);
    EXPECT_THROW(apply_override(j, "novalue"), ConfigError);
}

TEST(RunConfig, LoadFileWithOverrides)
{
    const auto d = scratch("load");
    {
        std::ofstream(d / "c.json") << "{\"system\": {\"n_subcarriers\": 64}, \"campaign\": {\"n_trials\": 3}}";
    }
    const auto c = load_run_config((d / "c.json").string(), {"campaign.n_trials=9"});
    EXPECT_EQ(c.n_subcarriers, 64u);
    EXPECT_EQ(c.n_trials, 9u);
    EXPECT_THROW(load_run_config((d / "missing.json").string()), ConfigError);
}

TEST(RunConfig, MakesTheConfiguredMetaprism)
{
    RunConfig c;
    c.metaprism_sizes = {{12, 7}};
    const auto bd = c.make_metaprism(12, 7);
    ASSERT_TRUE(bd.beamsteering());
    EXPECT_NEAR(bd.beamsteering()->theta_ref, pi / 4, 1e-15);
    c.design = DesignKind::Random;
    c.random_seed = 5;
    EXPECT_EQ(c.make_metaprism(12, 7).alphas(), design_random(build_grid(12, 7, c.system().wavelength()), 1e-6, 5).alphas());
}

TEST(Campaign, DeterministicWithManifest)
{
    const auto a = scratch("campaign_a");
    const auto b = scratch("campaign_b");
    std::ostringstream quiet;
    CampaignOptions opt;
    opt.log = &quiet;
    const auto ra = run_campaign(tiny(a), opt);
    ASSERT_EQ(ra.runs.size(), 4u);
    for (const auto &r : ra.runs)
        EXPECT_EQ(r.n_records, 12u);

    // re-run from the manifest into another directory
    RunConfig again = parse_run_config(slurp(ra.manifest));
    EXPECT_EQ(again, tiny(a));
    again.output_dir = b.string();
    const auto rb = run_campaign(again, opt);
    for (std::size_t i = 0; i < ra.runs.size(); ++i)
    {
        EXPECT_EQ(slurp(ra.runs[i].samples_file), slurp(rb.runs[i].samples_file));
        EXPECT_EQ(ra.runs[i].samples_digest, rb.runs[i].samples_digest);
    }
    const auto m = json::parse(slurp(ra.manifest));
    EXPECT_EQ(m["manifest_version"], 1);
    EXPECT_EQ(m["runs"].size(), 4u);
    EXPECT_EQ(m["runs"][0]["samples_fnv1a"], hex64(ra.runs[0].samples_digest));
    EXPECT_TRUE(fs::exists(a / "cache"));
}

TEST(Campaign, ResumesFromCheckpoint)
{
    const auto full = scratch("resume_full");
    const auto part = scratch("resume_part");
    std::ostringstream quiet;
    CampaignOptions opt;
    opt.log = &quiet;
    const auto ref = run_campaign(tiny(full), opt);

    // simulate an interruption after the first batch: truncate the outputs,
    // leave a stray partial row and a checkpoint behind
    auto cfg = tiny(part);
    cfg.metaprism_sizes = {{8, 8}};
    run_campaign(cfg, opt);
    for (double k : cfg.rice_factors)
    {
        const auto p = part / (run_name(cfg, 8, 8, k) + ".samples.csv");
        std::istringstream is(slurp(p));
        std::string line, kept;
        for (int i = 0; i < 1 + 2 * 4 && std::getline(is, line); ++i)
            kept += line + "\n";
        std::ofstream(p, std::ios::trunc) << kept << "garbage,row\n";
    }
    RunConfig both = tiny(part);
    const std::string digest = hex64(Fnv1a().str(serialize(both)).digest());
    std::ofstream(part / "checkpoint_8x8.json") << json{{"config_digest", digest}, {"completed_positions", 2}}.dump();

    std::ostringstream log;
    opt.log = &log;
    const auto res = run_campaign(both, opt);
    EXPECT_NE(log.str().find("resuming 8x8 after 2 positions"), std::string::npos);
    ASSERT_EQ(res.runs.size(), ref.runs.size());
    for (std::size_t i = 0; i < res.runs.size(); ++i)
        EXPECT_EQ(slurp(res.runs[i].samples_file), slurp(ref.runs[i].samples_file)) << res.runs[i].name;
    EXPECT_FALSE(fs::exists(part / "checkpoint_8x8.json"));
}

TEST(Campaign, DryRunCost)
{
    const auto d = scratch("dry");
    auto c = tiny(d);
    std::ostringstream log;
    CampaignOptions opt;
    opt.dry_run = true;
    opt.log = &log;
    const auto r = run_campaign(c, opt);
    const double P = double(c.make_grid().size()), K = 32, T = 3 * 4 * 2;
    EXPECT_DOUBLE_EQ(r.estimated_macs, P * K * 64 + T * P * K + P * K * 100 + T * P * K);
    EXPECT_TRUE(r.runs.empty());
    EXPECT_FALSE(fs::exists(d / "manifest.json"));
    EXPECT_NE(log.str().find("MACs"), std::string::npos);
}
