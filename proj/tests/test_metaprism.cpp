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
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include <metaloc/metaprism.hpp>

#include "oracles.hpp"

using namespace metaloc;

namespace
{
    const double lambda28 = 299792458.0 / 28e9;
    const double W = 198e6;
}

TEST(BuildGrid, ApertureSides)
{
    const auto m50 = build_grid(50, 50, lambda28);
    EXPECT_DOUBLE_EQ(m50.cell_pitch_x(), lambda28 / 2);
    EXPECT_DOUBLE_EQ(m50.cell_pitch_y(), lambda28 / 2);
    EXPECT_NEAR(50 * m50.cell_pitch_x(), 0.267, 1e-3);
    const auto m100 = build_grid(100, 100, lambda28);
    EXPECT_NEAR(100 * m100.cell_pitch_x(), 0.535, 1e-3);
}

TEST(BuildGrid, CellCoordinates)
{
    // x_n = n dx - N dx / 2 with dx = 1 m
    const auto m = build_grid(2, 2, 2.0);
    EXPECT_DOUBLE_EQ(m.x(0), oracle::cell_coordinate(0, 2, 1.0));
    EXPECT_DOUBLE_EQ(m.x(0), -1.0);
    EXPECT_DOUBLE_EQ(m.x(1), 0.0);
    EXPECT_DOUBLE_EQ(m.y(0), -1.0);
    EXPECT_DOUBLE_EQ(m.y(1), 0.0);

    const auto g = build_grid(7, 5, lambda28);
    for (std::size_t n = 0; n < 7; ++n)
        for (std::size_t k = 0; k < 5; ++k)
        {
            const auto p = g.cell_positions()[g.index(n, k)];
            EXPECT_EQ(p.x, oracle::cell_coordinate(int(n), 7, lambda28 / 2));
            EXPECT_EQ(p.y, oracle::cell_coordinate(int(k), 5, lambda28 / 2));
            EXPECT_EQ(p.z, 0.0);
            EXPECT_EQ(g.alpha(n, k), 0.0);
        }
}

TEST(BuildGrid, Errors)
{
    EXPECT_THROW(build_grid(0, 0, lambda28), DomainError);
    EXPECT_THROW(build_grid(3, 0, lambda28), DomainError);
    EXPECT_THROW(build_grid(3, 3, 0.0), DomainError);
    EXPECT_THROW(build_grid(3, 3, -1.0), DomainError);
}

TEST(BuildGrid, PitchOverride)
{
    const auto m = build_grid(4, 4, lambda28, 0.004);
    EXPECT_DOUBLE_EQ(m.cell_pitch_x(), 0.004);
    EXPECT_FALSE(pitch_is_half_wavelength(m, lambda28));
    EXPECT_TRUE(pitch_is_half_wavelength(build_grid(4, 4, lambda28), lambda28));
    EXPECT_TRUE(pitch_is_half_wavelength(build_grid(4, 4, lambda28, lambda28 / 2 * 1.009), lambda28));
}

TEST(DesignBeamsteering, SlopeAtBroadsideReference)
{
    const auto p = beamsteering_params(0.0, deg2rad(40), lambda28, W);
    const double expect = 4 * M_PI * std::sin(deg2rad(40)) / (lambda28 * W);
    EXPECT_NEAR(p.a0, expect, 1e-12 * expect);
    EXPECT_NEAR(p.a0, 3.81e-6, 0.01e-6);
    EXPECT_EQ(p.b0, 0.0);
}

TEST(DesignBeamsteering, AlphasAffineInX)
{
    const auto g = build_grid(30, 20, lambda28);
    const auto m = design_beamsteering(g, deg2rad(45), deg2rad(40), lambda28, W);
    ASSERT_TRUE(m.beamsteering());
    const double a0 = oracle::a0(deg2rad(45), deg2rad(40), lambda28, W);
    EXPECT_NEAR(m.beamsteering()->a0, a0, 1e-12 * std::abs(a0));
    EXPECT_EQ(m.design_kind(), DesignKind::Beamsteering);
    for (std::size_t n = 0; n < 30; ++n)
        for (std::size_t k = 0; k < 20; ++k)
            EXPECT_EQ(m.alpha(n, k), m.beamsteering()->a0 * m.x(n));
    // second differences along a row vanish
    for (std::size_t n = 1; n + 1 < 30; ++n)
        EXPECT_NEAR(m.alpha(n + 1, 3) - 2 * m.alpha(n, 3) + m.alpha(n - 1, 3), 0.0, 1e-20);
}

TEST(DesignBeamsteering, ZeroSpanIsMirror)
{
    const auto m = design_beamsteering(build_grid(10, 10, lambda28), deg2rad(45), 0.0, lambda28, W);
    for (double a : m.alphas())
        EXPECT_EQ(a, 0.0);
}

TEST(DesignBeamsteering, FanSpansTheUserSector)
{
    // Reflection of the incident BS direction at the band edges
    const double tr = deg2rad(45), tm = deg2rad(40);
    const double a0 = oracle::a0(tr, tm, lambda28, W);
    const double f0 = 28e9;
    const double hi = rad2deg(std::asin(oracle::reflected_ux(a0, tr, f0 + W / 2, f0, lambda28)));
    const double lo = rad2deg(std::asin(oracle::reflected_ux(a0, tr, f0 - W / 2, f0, lambda28)));
    EXPECT_NEAR(hi, -85.0, 1e-9);
    EXPECT_NEAR(lo, -25.0, 1.0);
}

TEST(DesignBeamsteering, InvisibleTargetThrows)
{
    const auto g = build_grid(4, 4, lambda28);
    EXPECT_THROW(design_beamsteering(g, deg2rad(60), deg2rad(40), lambda28, W), DomainError);
    EXPECT_THROW(design_beamsteering(g, deg2rad(-60), deg2rad(-40), lambda28, W), DomainError);
    EXPECT_NO_THROW(design_beamsteering(g, deg2rad(50), deg2rad(40), lambda28, W));
}

TEST(DesignRandom, BoundsAndRepeatability)
{
    const auto g = build_grid(100, 100, lambda28);
    const auto a = design_random(g, 1e-6, 42);
    const auto b = design_random(g, 1e-6, 42);
    const auto c = design_random(g, 1e-6, 43);
    EXPECT_EQ(a.alphas(), b.alphas());
    EXPECT_NE(a.alphas(), c.alphas());
    EXPECT_EQ(a.hash(), b.hash());
    EXPECT_NE(a.hash(), c.hash());
    EXPECT_EQ(a.design_kind(), DesignKind::Random);
    EXPECT_EQ(a.random_seed(), 42u);
    for (double v : a.alphas())
    {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1e-6);
    }
}

TEST(DesignRandom, UniformMoments)
{
    const auto a = design_random(build_grid(100, 100, lambda28), 1e-6, 42);
    const auto &v = a.alphas();
    const double n = double(v.size());
    double mean = 0;
    for (double x : v)
        mean += x;
    mean /= n;
    const double se = 1e-6 / std::sqrt(12.0) / std::sqrt(n);
    EXPECT_LT(std::abs(mean - 0.5e-6), 3 * se);

    // one-sample KS against U[0, bound] at the 1% level
    std::vector<double> s(v);
    std::sort(s.begin(), s.end());
    double D = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
    {
        const double F = s[i] / 1e-6;
        D = std::max({D, (i + 1) / n - F, F - i / n});
    }
    EXPECT_LT(D, 1.628 / std::sqrt(n));
}

TEST(DesignRandom, BadBoundThrows)
{
    const auto g = build_grid(2, 2, lambda28);
    EXPECT_THROW(design_random(g, 0.0, 1), DomainError);
    EXPECT_THROW(design_random(g, -1e-6, 1), DomainError);
}

TEST(ReflectionCoefficient, Examples)
{
    const auto m = design_random(build_grid(8, 8, lambda28), 1e-6, 5);
    const double f0 = 28e9;
    for (std::size_t n = 0; n < 8; ++n)
        for (std::size_t k = 0; k < 8; ++k)
            EXPECT_EQ(reflection_coefficient(m, n, k, f0, f0), std::complex<double>(1.0, 0.0));

    std::mt19937_64 rng(9);
    std::uniform_int_distribution<int> cell(0, 7);
    std::uniform_real_distribution<double> df(-W / 2, W / 2);
    for (int i = 0; i < 10000; ++i)
    {
        const std::size_t n = cell(rng), k = cell(rng);
        const double f = f0 + df(rng);
        const auto r = reflection_coefficient(m, n, k, f, f0);
        EXPECT_NEAR(std::abs(r), 1.0, 1e-15);
        const auto expect = std::polar(1.0, m.alpha(n, k) * (f - f0));
        EXPECT_NEAR(std::abs(r - expect), 0.0, 1e-12);
    }

    // alpha = 1e-6 rad/Hz, f - f0 = 99 MHz: phase 99 rad
    const auto one = with_alphas(build_grid(1, 1, lambda28), {1e-6});
    const auto r = reflection_coefficient(one, 0, 0, f0 + 99e6, f0);
    double ph = std::arg(r);
    if (ph < 0)
        ph += 2 * M_PI;
    EXPECT_NEAR(ph, std::fmod(99.0, 2 * M_PI), 1e-6);
    EXPECT_NEAR(ph, 4.75, 0.01);

    EXPECT_THROW(reflection_coefficient(m, 8, 0, f0, f0), IndexError);
    EXPECT_THROW(reflection_coefficient(m, 0, 8, f0, f0), IndexError);
}

TEST(Aperture, FraunhoferDistances)
{
    const auto a50 = aperture(build_grid(50, 50, lambda28), lambda28);
    const double D50 = std::sqrt(2.0) * 50 * lambda28 / 2;
    EXPECT_NEAR(a50.max_dimension, D50, 1e-15);
    EXPECT_NEAR(a50.fraunhofer_distance, 2 * D50 * D50 / lambda28, 1e-12);
    EXPECT_NEAR(a50.fraunhofer_distance, 26.8, 0.05);
    EXPECT_NEAR(fraunhofer_distance(build_grid(100, 100, lambda28), lambda28), 107.0, 0.3);
    // 1 x 1: D = lambda / sqrt(2), so 2 D^2 / lambda = lambda
    EXPECT_NEAR(fraunhofer_distance(build_grid(1, 1, lambda28), lambda28), lambda28, 1e-15);
}

TEST(CoefficientMap, RoundTripAndDeterministicExport)
{
    const auto g = build_grid(6, 4, lambda28);
    for (const auto &m : {design_random(g, 1e-6, 42), design_beamsteering(g, deg2rad(45), deg2rad(40), lambda28, W)})
    {
        std::ostringstream a, b;
        write_coefficient_map(a, m);
        write_coefficient_map(b, m);
        EXPECT_EQ(a.str(), b.str());
        std::istringstream is(a.str());
        const auto back = read_coefficient_map(is);
        EXPECT_EQ(back.alphas(), m.alphas());
        EXPECT_EQ(back.hash(), m.hash());
        EXPECT_EQ(back.design_kind(), m.design_kind());
    }
}

TEST(CoefficientMap, TamperedValueIsRejected)
{
    std::ostringstream os;
    write_coefficient_map(os, design_random(build_grid(3, 3, lambda28), 1e-6, 1));
    std::string text = os.str();
    const auto pos = text.rfind(',');
    text.replace(pos + 1, 3, "9.9");
    std::istringstream is(text);
    EXPECT_THROW(read_coefficient_map(is), ConfigError);
}
