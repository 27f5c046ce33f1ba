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

#ifndef metaloc_array_factor_H
#define metaloc_array_factor_H

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <optional>
#include <ostream>
#include <vector>

#include "channel.hpp"
#include "errors.hpp"
#include "geometry.hpp"
#include "metaprism.hpp"

// Far-field (plane-wave) array factor of the user-metaprism subsystem. Used for
// analysis and as an oracle for the beamsteering design; the channel model never
// calls into this file.

namespace metaloc
{
    // Direct double sum over all cells:
    //   AF = sum_nm exp(j k0 n dx (ux(obs) + ux(inc)) + j k0 m dy (uy(obs) + uy(inc)) + j Psi_nm(f_k))
    inline std::complex<double> array_factor(const Metaprism &mp, const AnglePair &incident, const AnglePair &observation,
                                             double f_k, double f0, double wavelength)
    {
        const DirectionCosines ui = direction_cosines(incident), uo = direction_cosines(observation);
        const double kx = 2.0 * pi * mp.cell_pitch_x() / wavelength * (uo.ux + ui.ux);
        const double ky = 2.0 * pi * mp.cell_pitch_y() / wavelength * (uo.uy + ui.uy);
        const double df = f_k - f0;
        const auto &alpha = mp.alphas();
        const std::size_t M = mp.n_cells_y();

        double re = 0.0, im = 0.0;
        for (std::size_t n = 0; n < mp.n_cells_x(); ++n)
            for (std::size_t m = 0; m < M; ++m)
            {
                const double ph = kx * double(n) + ky * double(m) + alpha[n * M + m] * df;
                re += std::cos(ph);
                im += std::sin(ph);
            }
        return {re, im};
    }

    // Beamsteering coefficients are affine in (x_n, y_m), so the double sum factors
    // into an n-sum times an m-sum. Falls back to the double sum for other designs.
    inline std::complex<double> array_factor_fast(const Metaprism &mp, const AnglePair &incident, const AnglePair &observation,
                                                  double f_k, double f0, double wavelength)
    {
        const auto &bd = mp.beamsteering();
        if (!bd)
            return array_factor(mp, incident, observation, f_k, f0, wavelength);

        const DirectionCosines ui = direction_cosines(incident), uo = direction_cosines(observation);
        const double kx = 2.0 * pi * mp.cell_pitch_x() / wavelength * (uo.ux + ui.ux);
        const double ky = 2.0 * pi * mp.cell_pitch_y() / wavelength * (uo.uy + ui.uy);
        const double df = f_k - f0;

        double xr = 0.0, xi = 0.0, yr = 0.0, yi = 0.0;
        for (std::size_t n = 0; n < mp.n_cells_x(); ++n)
        {
            const double ph = kx * double(n) + bd->a0 * mp.x(n) * df;
            xr += std::cos(ph);
            xi += std::sin(ph);
        }
        for (std::size_t m = 0; m < mp.n_cells_y(); ++m)
        {
            const double ph = ky * double(m) + bd->b0 * mp.y(m) * df;
            yr += std::cos(ph);
            yi += std::sin(ph);
        }
        return std::complex<double>(xr, xi) * std::complex<double>(yr, yi);
    }

    // Reflection direction of the subcarrier at f_k for a beamsteering design:
    //   ux(k) = -ux(inc) - a0 lambda (f_k - f0) / (2 pi), likewise uy with b0.
    // Empty when the direction falls outside the visible region.
    inline std::optional<AnglePair> predicted_reflection_angle(const BeamsteeringParams &p, const AnglePair &incident,
                                                               double f_k, double f0, double wavelength)
    {
        const DirectionCosines ui = direction_cosines(incident);
        const double ux = -ui.ux - p.a0 * wavelength / (2.0 * pi) * (f_k - f0);
        const double uy = -ui.uy - p.b0 * wavelength / (2.0 * pi) * (f_k - f0);
        const double r2 = ux * ux + uy * uy;
        if (r2 > 1.0)
            return std::nullopt;
        return angle_of({ux, uy, std::sqrt(1.0 - r2)});
    }

    struct AFSample
    {
        AnglePair observation_angle;
        std::size_t k = 0;
        double f_k = 0.0;
        std::complex<double> value;
        double normalized_db = 0.0;
    };

    enum class AFNormalization
    {
        Global,        // one reference: the maximum over the whole table
        PerSubcarrier  // each subcarrier normalized to its own maximum
    };

    // |AF| over (angle grid) x (subcarriers), in dB relative to the chosen maximum.
    // Rows are ordered subcarrier-major: all angles of subcarriers[0] first.
    inline std::vector<AFSample> af_sweep(const Metaprism &mp, const AnglePair &incident, const std::vector<AnglePair> &angle_grid,
                                          const std::vector<std::size_t> &subcarriers, const SystemConfig &cfg,
                                          AFNormalization norm = AFNormalization::Global)
    {
        if (angle_grid.empty() || subcarriers.empty())
            throw DomainError("af_sweep: angle grid and subcarrier list must be nonempty.");
        const std::size_t na = angle_grid.size();
        std::vector<double> fk(subcarriers.size());
        for (std::size_t i = 0; i < subcarriers.size(); ++i)
            fk[i] = subcarrier_frequency(cfg, subcarriers[i]);

        std::vector<AFSample> out(subcarriers.size() * na);
        const double lambda = cfg.wavelength();
        const long long rows = static_cast<long long>(subcarriers.size());
#pragma omp parallel for schedule(dynamic)
        for (long long r = 0; r < rows; ++r)
            for (std::size_t a = 0; a < na; ++a)
            {
                AFSample &s = out[std::size_t(r) * na + a];
                s.observation_angle = angle_grid[a];
                s.k = subcarriers[std::size_t(r)];
                s.f_k = fk[std::size_t(r)];
                s.value = array_factor_fast(mp, incident, angle_grid[a], s.f_k, cfg.f0, lambda);
            }

        std::vector<double> ref(subcarriers.size(), 0.0);
        for (std::size_t r = 0; r < subcarriers.size(); ++r)
            for (std::size_t a = 0; a < na; ++a)
                ref[r] = std::max(ref[r], std::abs(out[r * na + a].value));
        if (norm == AFNormalization::Global)
            std::fill(ref.begin(), ref.end(), *std::max_element(ref.begin(), ref.end()));

        for (std::size_t r = 0; r < subcarriers.size(); ++r)
            for (std::size_t a = 0; a < na; ++a)
            {
                AFSample &s = out[r * na + a];
                s.normalized_db = ref[r] > 0.0 ? 20.0 * std::log10(std::abs(s.value) / ref[r]) : 0.0;
            }
        return out;
    }

    // Observation angles theta in [lo, hi] (inclusive, rad) at fixed phi
    inline std::vector<AnglePair> theta_scan(double lo, double hi, double step, double phi = 0.0)
    {
        if (!(step > 0.0) || hi < lo)
            throw DomainError("theta_scan: need step > 0 and hi >= lo.");
        const std::size_t n = std::size_t(std::floor((hi - lo) / step + 1e-9)) + 1;
        std::vector<AnglePair> g(n);
        for (std::size_t i = 0; i < n; ++i)
            g[i] = {lo + double(i) * step, phi};
        return g;
    }

    inline void write_af_table(std::ostream &os, const std::vector<AFSample> &rows)
    {
        os << "angle_deg,phi_deg,k,f_k_hz,af_db\n";
        char buf[160];
        for (const auto &s : rows)
        {
            std::snprintf(buf, sizeof buf, "%.10g,%.10g,%zu,%.17g,%.10g\n", rad2deg(s.observation_angle.theta),
                          rad2deg(s.observation_angle.phi), s.k, s.f_k, s.normalized_db);
            os << buf;
        }
    }

    struct AFPeak
    {
        double theta = 0.0;     // rad
        double magnitude = 0.0; // |AF| at the peak
        double beamwidth = 0.0; // half-power (3 dB) width, rad
    };

    // Main-lobe peak of |AF| along theta at fixed phi: grid scan, golden-section
    // refinement inside the bracketing samples, then the half-power width by
    // bisection on either side (clipped to the scan interval).
    inline AFPeak find_af_peak(const Metaprism &mp, const AnglePair &incident, double f_k, double f0, double wavelength,
                               double theta_lo, double theta_hi, double step, double phi = 0.0)
    {
        auto mag = [&](double th)
        { return std::abs(array_factor_fast(mp, incident, {th, phi}, f_k, f0, wavelength)); };

        const std::vector<AnglePair> grid = theta_scan(theta_lo, theta_hi, step, phi);
        std::vector<double> v(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i)
            v[i] = mag(grid[i].theta);
        const std::size_t ip = std::size_t(std::max_element(v.begin(), v.end()) - v.begin());

        double a = grid[ip > 0 ? ip - 1 : ip].theta, b = grid[ip + 1 < grid.size() ? ip + 1 : ip].theta;
        const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
        double c = b - gr * (b - a), d = a + gr * (b - a);
        double fc = mag(c), fd = mag(d);
        for (int it = 0; it < 80 && b - a > 1e-13; ++it)
        {
            if (fc > fd)
            {
                b = d;
                d = c;
                fd = fc;
                c = b - gr * (b - a);
                fc = mag(c);
            }
            else
            {
                a = c;
                c = d;
                fc = fd;
                d = a + gr * (b - a);
                fd = mag(d);
            }
        }
        AFPeak pk;
        pk.theta = (a + b) / 2.0;
        pk.magnitude = mag(pk.theta);
        if (v[ip] > pk.magnitude)
        {
            pk.theta = grid[ip].theta;
            pk.magnitude = v[ip];
        }

        const double half = pk.magnitude / std::sqrt(2.0);
        auto edge = [&](int dir)
        {
            double inside = pk.theta;
            double outside = pk.theta;
            for (;;)
            {
                const double next = outside + dir * step;
                if (next < theta_lo || next > theta_hi)
                    return dir < 0 ? theta_lo : theta_hi;
                outside = next;
                if (mag(outside) < half)
                    break;
                inside = outside;
            }
            for (int it = 0; it < 60; ++it)
            {
                const double mid = (inside + outside) / 2.0;
                (mag(mid) >= half ? inside : outside) = mid;
            }
            return (inside + outside) / 2.0;
        };
        pk.beamwidth = edge(+1) - edge(-1);
        return pk;
    }
}

#endif
