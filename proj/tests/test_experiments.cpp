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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include <metaloc/experiments.hpp>

using namespace metaloc;

namespace
{
    const double lambda = 299792458.0 / 28e9;
    const Position3D bs{8, 0, 8};

    SystemConfig small(std::size_t K, double kappa = std::numeric_limits<double>::infinity())
    {
        SystemConfig c;
        c.n_subcarriers = K;
        c.rice_factor = kappa;
        return c;
    }

    std::string dump(const ErrorSamples &s)
    {
        std::ostringstream os;
        write_error_samples(os, s);
        return os.str();
    }

    struct Fixture
    {
        std::vector<Position3D> users{position_from_polar(5.0, AnglePair::from_degrees(-40, 0)),
                                      position_from_polar(7.0, AnglePair::from_degrees(-60, 0))};
        Metaprism mp = design_random(build_grid(10, 10, lambda), 1e-6, 42);
        TestGrid grid = grid_covering(users, 1.0, 0.25);
    };
}

TEST(Scenarios, Defaults)
{
    const auto s = default_scenarios();
    ASSERT_EQ(s.A.user_positions.size(), 20u);
    ASSERT_EQ(s.B.user_positions.size(), 20u);
    EXPECT_EQ(s.A.bs_position.x, 8.0);
    EXPECT_EQ(s.A.bs_position.z, 8.0);
    const double dF50 = fraunhofer_distance(build_grid(50, 50, lambda), lambda);
    const double dF100 = fraunhofer_distance(build_grid(100, 100, lambda), lambda);
    for (const auto &p : s.A.user_positions)
    {
        EXPECT_LT(p.norm(), dF50);
        EXPECT_GT(p.z, 0.0);
        EXPECT_NEAR(p.y, 0.0, 1e-12);
    }
    for (const auto &p : s.B.user_positions)
    {
        EXPECT_GT(p.norm(), dF50);
        EXPECT_LT(p.norm(), dF100);
        EXPECT_GT(p.z, 0.0);
    }
    const auto a = angle_of(s.A.user_positions[1]);
    EXPECT_NEAR(rad2deg(a.theta), -42.5, 1e-12);
    EXPECT_NEAR(s.B.user_positions.back().norm(), 45.0, 1e-12);

    // B is inside the 100 x 100 Fraunhofer distance: one warning for that size only
    const auto wb = regime_warnings(s.B, lambda);
    ASSERT_EQ(wb.size(), 1u);
    EXPECT_NE(wb[0].find("100x100"), std::string::npos);
    auto a50 = s.A;
    a50.metaprism_sizes = {{50, 50}};
    EXPECT_TRUE(regime_warnings(a50, lambda).empty());
}

TEST(MonteCarlo, RecordCountAndNoiselessDeterminism)
{
    Fixture f;
    auto c = small(32);
    c.noise_psd_override = 0.0;
    const auto db = build_fingerprints(f.grid, f.mp, bs, c);
    const auto s = run_monte_carlo(f.users, bs, f.mp, InMemorySource(db), c, 7, 1);
    ASSERT_EQ(s.records.size(), 14u);
    for (const auto &r : s.records)
    {
        const auto &first = s.records[r.position_index * 7];
        EXPECT_EQ(r.estimate.x, first.estimate.x);
        EXPECT_EQ(r.estimate.z, first.estimate.z);
        EXPECT_EQ(r.trial_id, r.position_index * 7 + r.trial_index);
        EXPECT_EQ(r.seed, trial_seed(1, r.position_index, r.trial_index));
    }
}

TEST(MonteCarlo, ReproducibleAndSubsetConsistent)
{
    Fixture f;
    const auto c = small(32, 2.0);
    const auto db = build_fingerprints(f.grid, f.mp, bs, c);
    const InMemorySource src(db);
    const auto a = run_monte_carlo(f.users, bs, f.mp, src, c, 5, 9);
    const auto b = run_monte_carlo(f.users, bs, f.mp, src, c, 5, 9);
    EXPECT_EQ(dump(a), dump(b));
    const auto only1 = run_monte_carlo(f.users, bs, f.mp, src, c, 5, 9, {}, {1});
    ASSERT_EQ(only1.records.size(), 5u);
    for (std::size_t t = 0; t < 5; ++t)
    {
        std::ostringstream x, y;
        write_error_record(x, only1.records[t]);
        write_error_record(y, a.records[5 + t]);
        EXPECT_EQ(x.str(), y.str());
    }
    const auto other = run_monte_carlo(f.users, bs, f.mp, src, c, 5, 10);
    EXPECT_NE(dump(a), dump(other));
}

TEST(MonteCarlo, MultiConfigEqualsSeparateRuns)
{
    Fixture f;
    const std::vector<SystemConfig> cfgs{small(32, 0.0), small(32, 1.0), small(32)};
    const auto db = build_fingerprints(f.grid, f.mp, bs, cfgs.back());
    const InMemorySource src(db);
    const auto multi = run_monte_carlo_multi(f.users, bs, f.mp, src, cfgs, 4, 3);
    for (std::size_t c = 0; c < cfgs.size(); ++c)
        EXPECT_EQ(dump(multi[c]), dump(run_monte_carlo(f.users, bs, f.mp, src, cfgs[c], 4, 3)));
}

TEST(MonteCarlo, StreamingSourceAndCache)
{
    Fixture f;
    const auto c = small(16, 5.0);
    const auto dir = std::filesystem::temp_directory_path() / "metaloc_tests" / "stream";
    std::filesystem::remove_all(dir);
    const auto cache = dir / "fp.bin";

    const auto db = build_fingerprints(f.grid, f.mp, bs, c);
    const auto ref = run_monte_carlo(f.users, bs, f.mp, InMemorySource(db), c, 3, 4, {MatchMetric::Normalized, 7});

    const StreamingSource s(f.mp, bs, c, f.grid, cache);
    EXPECT_FALSE(s.cache_valid());
    EXPECT_EQ(dump(run_monte_carlo(f.users, bs, f.mp, s, c, 3, 4, {MatchMetric::Normalized, 5})), dump(ref));
    EXPECT_TRUE(s.cache_valid());
    EXPECT_EQ(load_fingerprints(cache).values, db.values);
    EXPECT_EQ(dump(run_monte_carlo(f.users, bs, f.mp, s, c, 3, 4)), dump(ref));

    // a cache built for another metaprism is stale and gets rebuilt
    const auto other = design_random(build_grid(10, 10, lambda), 1e-6, 43);
    const StreamingSource so(other, bs, c, f.grid, cache);
    EXPECT_FALSE(so.cache_valid());
    run_monte_carlo(f.users, bs, other, so, c, 1, 4);
    EXPECT_TRUE(so.cache_valid());
    EXPECT_FALSE(s.cache_valid());
}

TEST(MonteCarlo, Errors)
{
    Fixture f;
    const auto c = small(8);
    const auto db = build_fingerprints(make_grid({-3, 0, 3}, {-2, 0, 4}, 0.5), f.mp, bs, c);
    EXPECT_THROW(run_monte_carlo(f.users, bs, f.mp, InMemorySource(db), c, 1, 1), CoverageError);
    const auto db2 = build_fingerprints(f.grid, f.mp, bs, c);
    const auto other = design_random(build_grid(10, 10, lambda), 1e-6, 1);
    EXPECT_THROW(run_monte_carlo(f.users, bs, other, InMemorySource(db2), c, 1, 1), StaleDatabaseError);
    EXPECT_THROW(run_monte_carlo(f.users, bs, f.mp, InMemorySource(db2), small(16), 1, 1), StaleDatabaseError);
}

TEST(ErrorSamplesFile, ColumnsRoundTrip)
{
    Fixture f;
    const auto c = small(16, 1.0);
    const auto db = build_fingerprints(f.grid, f.mp, bs, c);
    const auto s = run_monte_carlo(f.users, bs, f.mp, InMemorySource(db), c, 3, 2);
    std::stringstream ss(dump(s));
    const auto pos = read_column(ss, "position_error_m");
    ASSERT_EQ(pos.size(), s.records.size());
    for (std::size_t i = 0; i < pos.size(); ++i)
        EXPECT_EQ(pos[i], s.records[i].position_error);
    std::stringstream s2(dump(s));
    const auto ang = read_column(s2, "angle_error_deg");
    for (std::size_t i = 0; i < ang.size(); ++i)
        EXPECT_NEAR(ang[i], rad2deg(s.records[i].angle_error), 1e-12);
    std::stringstream s3(dump(s));
    EXPECT_THROW(read_column(s3, "nope"), ConfigError);
    std::stringstream empty;
    EXPECT_THROW(read_column(empty, "x"), ConfigError);
}

TEST(ECDF, Examples)
{
    const auto one = ecdf({5.0});
    ASSERT_EQ(one.x.size(), 1u);
    EXPECT_EQ(one.x[0], 5.0);
    EXPECT_EQ(one.p[0], 1.0);

    const auto c = ecdf({4, 1, 3, 2});
    EXPECT_EQ(c.evaluate(2.0), 0.5);
    EXPECT_EQ(c.evaluate(1.999), 0.25);
    EXPECT_EQ(c.evaluate(0.5), 0.0);
    EXPECT_EQ(c.evaluate(10), 1.0);
    EXPECT_EQ(c.quantile(0.5), 2.0);
    EXPECT_EQ(c.quantile(0.9), 4.0);
    EXPECT_EQ(c.quantile(1.0), 4.0);

    EXPECT_THROW(ecdf({}), DomainError);
}

TEST(ECDF, MonotoneAndEndsAtOne)
{
    std::mt19937_64 rng(3);
    std::exponential_distribution<double> e(1.0);
    std::vector<double> v;
    for (int i = 0; i < 1000; ++i)
        v.push_back(std::round(e(rng) * 10) / 10);
    const auto c = ecdf(v);
    for (std::size_t i = 1; i < c.x.size(); ++i)
    {
        EXPECT_GT(c.x[i], c.x[i - 1]);
        EXPECT_GT(c.p[i], c.p[i - 1]);
    }
    EXPECT_EQ(c.p.back(), 1.0);
    std::ostringstream os;
    write_ecdf(os, c, "angle_error_deg");
    EXPECT_EQ(os.str().substr(0, 28), "angle_error_deg,probability\n");
}

TEST(UniformBaseline, Examples)
{
    Scenario s;
    s.user_positions = {{-3, 0, 4}};
    const auto single = uniform_guess_baseline(s, make_grid({-3, 0, 4}, {-3, 0, 4}, 0.1), ErrorKind::Position);
    EXPECT_EQ(single.x.size(), 1u);
    EXPECT_EQ(single.x[0], 0.0);

    // 4 x 4 m patch centered on the user: enumerate distances directly
    const auto g = make_grid({-5, 0, 2}, {-1, 0, 6}, 0.1);
    std::vector<double> d;
    for (std::size_t i = 0; i < g.size(); ++i)
        d.push_back(distance(g.point(i), s.user_positions[0]));
    std::nth_element(d.begin(), d.begin() + d.size() / 2, d.end());
    const auto c = uniform_guess_baseline(s, g, ErrorKind::Position);
    EXPECT_NEAR(c.quantile(0.5), d[d.size() / 2], 1e-12);
    // 41 x 41 points tile a 4.1 m square; continuous median radius is side / sqrt(2 pi)
    EXPECT_NEAR(c.quantile(0.5), 4.1 / std::sqrt(2 * pi), 0.02);
}

TEST(KSTest, Behaviour)
{
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0, 1);
    std::vector<double> a, b, shifted;
    for (int i = 0; i < 2000; ++i)
    {
        a.push_back(n(rng));
        b.push_back(n(rng));
        shifted.push_back(n(rng) + 0.3);
    }
    const auto same = ks_two_sample(a, b);
    EXPECT_FALSE(same.reject);
    EXPECT_GT(same.p_value, 0.05);
    const auto diff = ks_two_sample(a, shifted);
    EXPECT_TRUE(diff.reject);
    EXPECT_LT(diff.p_value, 1e-6);
    EXPECT_EQ(ks_two_sample(a, a).statistic, 0.0);
    // 1.358 sqrt(2 / n) at the 5% level
    EXPECT_NEAR(same.critical, 1.3581 * std::sqrt(2.0 / 2000), 1e-3 * same.critical);
    EXPECT_THROW(ks_two_sample({}, a), DomainError);
}
