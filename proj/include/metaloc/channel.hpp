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

#ifndef metaloc_channel_H
#define metaloc_channel_H

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "hash.hpp"
#include "metaprism.hpp"
#include "random.hpp"

namespace metaloc
{
    inline constexpr double speed_of_light = 299792458.0;    // m/s
    inline constexpr double boltzmann = 1.380649e-23;        // J/K
    inline constexpr double reference_temperature = 290.0;   // K

    inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
    inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
    inline double dbm_to_watts(double dbm) { return 1e-3 * db_to_linear(dbm); }

    // Which power scales the diffuse (Rayleigh) term of the Ricean channel
    enum class DiffusePower
    {
        PerSubcarrier, // sigma_v^2 = |A_k|^2 P_k / (1 + kappa)
        Total          // sigma_v^2 = |A_k|^2 Ptx / (1 + kappa)
    };

    struct SystemConfig
    {
        double f0 = 28e9;                                      // carrier, Hz
        double c = speed_of_light;                             // m/s
        double bandwidth = 198e6;                              // W, Hz
        std::size_t n_subcarriers = 3300;                      // K
        double total_power = dbm_to_watts(20.0);               // Ptx, W
        double gain_user = db_to_linear(6.0);                  // G_u, linear
        double gain_bs = db_to_linear(6.0);                    // G_BS, linear
        double noise_figure = db_to_linear(3.0);               // F, linear
        std::optional<double> noise_psd_override;              // N0 in W/Hz; replaces k_B T0 F when set
        double rice_factor = std::numeric_limits<double>::infinity(); // kappa; infinity = no fading
        std::complex<double> pilot = 1.0;                      // x_k
        DiffusePower diffuse_power = DiffusePower::PerSubcarrier;

        double wavelength() const { return c / f0; }
        double subcarrier_spacing() const { return bandwidth / double(n_subcarriers); }
        double per_subcarrier_power() const { return total_power / double(n_subcarriers); }
        double noise_psd() const { return noise_psd_override ? *noise_psd_override : boltzmann * reference_temperature * noise_figure; }

        void validate() const
        {
            if (!(f0 > 0.0) || !(c > 0.0) || !(bandwidth > 0.0) || n_subcarriers == 0)
                throw ConfigError("SystemConfig: carrier, speed of light, bandwidth and subcarrier count must be positive.");
            if (!(total_power >= 0.0) || !(gain_user > 0.0) || !(gain_bs > 0.0) || !(noise_figure >= 0.0))
                throw ConfigError("SystemConfig: powers and gains must be nonnegative.");
            if (noise_psd_override && !(*noise_psd_override >= 0.0))
                throw ConfigError("SystemConfig: noise PSD must be nonnegative.");
            if (!(rice_factor >= 0.0))
                throw ConfigError("SystemConfig: Rice factor must be >= 0 (or infinite).");
        }
    };

    // Identifies everything that shapes the noiseless fingerprints: propagation
    // constants, subcarrier plan, power, gains and the base-station position.
    inline std::uint64_t link_hash(const SystemConfig &cfg, const Position3D &p_bs)
    {
        Fnv1a h;
        h.str("link").f64(cfg.f0).f64(cfg.c).f64(cfg.bandwidth).u64(cfg.n_subcarriers);
        h.f64(cfg.total_power).f64(cfg.gain_user).f64(cfg.gain_bs).f64(cfg.pilot.real()).f64(cfg.pilot.imag());
        h.f64(p_bs.x).f64(p_bs.y).f64(p_bs.z);
        return h.digest();
    }

    // f_k = f0 + (k - K/2) df, k = 1..K; the top subcarrier sits at f0 + W/2
    inline double subcarrier_frequency(const SystemConfig &cfg, std::size_t k)
    {
        if (k < 1 || k > cfg.n_subcarriers)
            throw IndexError("subcarrier_frequency: k = " + std::to_string(k) + " outside 1.." + std::to_string(cfg.n_subcarriers) + ".");
        return cfg.f0 + (double(k) - double(cfg.n_subcarriers) / 2.0) * cfg.subcarrier_spacing();
    }

    // Free-space spherical-wave link between an antenna and one cell
    inline std::complex<double> link_gain(const Position3D &p_a, const Position3D &p_cell, double f_k, double gain,
                                          double wavelength, double c = speed_of_light)
    {
        const long double ex = (long double)p_a.x - p_cell.x, ey = (long double)p_a.y - p_cell.y, ez = (long double)p_a.z - p_cell.z;
        const long double d = std::sqrt(ex * ex + ey * ey + ez * ez);
        if (!(d > 0.0L))
            throw DegenerateInputError("link_gain: antenna and cell positions coincide.");
        const double amp = std::sqrt(gain) * wavelength / (4.0 * pi * double(d));
        constexpr long double two_pi = 2.0L * std::numbers::pi_v<long double>;
        return std::polar(amp, double(std::fmod(-two_pi * f_k * d / c, two_pi)));
    }

    inline double noise_variance(const SystemConfig &cfg)
    {
        return cfg.noise_psd() * cfg.subcarrier_spacing();
    }

    struct CascadeGain
    {
        std::vector<std::complex<double>> A; // A[k - 1], k = 1..K
    };

    inline void require_front(const Position3D &p, const char *who)
    {
        if (!p.is_finite() || !(p.z > 0.0))
            throw DomainError(std::string(who) + ": position must be finite and in front of the metaprism (z > 0).");
    }

    // Evaluates A_k = sum_cells h * r * g for many user positions against one
    // fixed metaprism and base station.
    //
    // Per cell, the product h r g is a phasor whose phase is affine in k:
    //   phase(k) = -2 pi f_k (d_u + d_bs) / c + alpha (f_k - f0)
    // so the K values follow a geometric progression. The progression is advanced
    // by complex multiplication and re-anchored with an exact evaluation every
    // `anchor_interval` subcarriers to bound round-off growth. Path lengths and
    // anchor phases (several 10^4 rad at tens of meters) are carried in long
    // double and reduced mod 2 pi before the double-precision sin/cos.
    class CascadeKernel
    {
    public:
        static constexpr std::size_t chunk = 512;
        static constexpr std::size_t anchor_interval = 1024;

        CascadeKernel(const Metaprism &mp, const Position3D &p_bs, const SystemConfig &cfg)
            : K_(cfg.n_subcarriers), df_(cfg.subcarrier_spacing()), c_(cfg.c)
        {
            cfg.validate();
            require_front(p_bs, "cascade_gain");
            const double lambda = cfg.wavelength();
            f1_ = subcarrier_frequency(cfg, 1);
            f1_offset_ = f1_ - cfg.f0;
            amp_scale_ = std::sqrt(cfg.gain_user) * std::sqrt(cfg.gain_bs) * lambda * lambda / (16.0 * pi * pi);

            const auto &pos = mp.cell_positions();
            cells_ = pos.size();
            cx_.resize(cells_);
            cy_.resize(cells_);
            dbs_.resize(cells_);
            alpha_ = mp.alphas();
            for (std::size_t i = 0; i < cells_; ++i)
            {
                cx_[i] = pos[i].x;
                cy_[i] = pos[i].y;
                const long double ex = (long double)p_bs.x - pos[i].x, ey = (long double)p_bs.y - pos[i].y, ez = p_bs.z;
                dbs_[i] = std::sqrt(ex * ex + ey * ey + ez * ez);
            }
        }

        std::size_t n_subcarriers() const { return K_; }

        // Writes A_1..A_K for user position p_u into out (size K)
        void evaluate(const Position3D &p_u, std::span<std::complex<double>> out) const
        {
            require_front(p_u, "cascade_gain");
            if (out.size() != K_)
                throw DomainError("CascadeKernel: output span must hold K values.");
            std::fill(out.begin(), out.end(), std::complex<double>(0.0));

            alignas(64) double amp[chunk], dph[chunk];
            long double ph0[chunk], dphl[chunk];
            alignas(64) double zr[chunk], zi[chunk], wr[chunk], wi[chunk];

            for (std::size_t c0 = 0; c0 < cells_; c0 += chunk)
            {
                const std::size_t nc = std::min(chunk, cells_ - c0);
                for (std::size_t j = 0; j < nc; ++j)
                {
                    const std::size_t i = c0 + j;
                    const long double ex = (long double)p_u.x - cx_[i], ey = (long double)p_u.y - cy_[i], ez = p_u.z;
                    const long double du = std::sqrt(ex * ex + ey * ey + ez * ez);
                    const long double path = du + dbs_[i];
                    amp[j] = amp_scale_ / double(du * dbs_[i]);
                    ph0[j] = std::fmod(-two_pi * f1_ * path / c_, two_pi) + (long double)alpha_[i] * f1_offset_;
                    dphl[j] = df_ * ((long double)alpha_[i] - two_pi * path / c_);
                    dph[j] = double(dphl[j]);
                    wr[j] = std::cos(dph[j]);
                    wi[j] = std::sin(dph[j]);
                }

                for (std::size_t k0 = 0; k0 < K_; k0 += anchor_interval)
                {
                    const std::size_t nk = std::min(anchor_interval, K_ - k0);
                    for (std::size_t j = 0; j < nc; ++j)
                    {
                        const double a = double(std::fmod(ph0[j] + (long double)k0 * dphl[j], two_pi));
                        zr[j] = amp[j] * std::cos(a);
                        zi[j] = amp[j] * std::sin(a);
                    }
                    for (std::size_t k = 0; k < nk; ++k)
                    {
                        double sr = 0.0, si = 0.0;
#pragma omp simd reduction(+ : sr, si)
                        for (std::size_t j = 0; j < nc; ++j)
                        {
                            sr += zr[j];
                            si += zi[j];
                            const double t = zr[j] * wr[j] - zi[j] * wi[j];
                            zi[j] = zr[j] * wi[j] + zi[j] * wr[j];
                            zr[j] = t;
                        }
                        out[k0 + k] += std::complex<double>(sr, si);
                    }
                }
            }
        }

    private:
        std::size_t K_ = 0, cells_ = 0;
        double df_ = 0.0, c_ = 0.0, f1_ = 0.0, f1_offset_ = 0.0, amp_scale_ = 0.0;
        std::vector<double> cx_, cy_, alpha_;
        std::vector<long double> dbs_;
        static constexpr long double two_pi = 2.0L * std::numbers::pi_v<long double>;
    };

    inline CascadeGain cascade_gain(const Metaprism &mp, const Position3D &p_u, const Position3D &p_bs, const SystemConfig &cfg)
    {
        CascadeKernel kernel(mp, p_bs, cfg);
        CascadeGain g;
        g.A.resize(cfg.n_subcarriers);
        kernel.evaluate(p_u, g.A);
        return g;
    }

    // sqrt(kappa / (1 + kappa)), with the no-fading limit at kappa = infinity
    inline double specular_fraction(double kappa)
    {
        if (std::isinf(kappa))
            return 1.0;
        return std::sqrt(kappa / (1.0 + kappa));
    }

    inline double diffuse_fraction(double kappa)
    {
        if (std::isinf(kappa))
            return 0.0;
        return 1.0 / (1.0 + kappa);
    }

    // s_k = A_k sqrt(P_k kappa / (1 + kappa)) x_k
    inline std::vector<std::complex<double>> specular_component(const CascadeGain &g, const SystemConfig &cfg)
    {
        if (!(cfg.rice_factor >= 0.0))
            throw DomainError("specular_component: Rice factor must be >= 0.");
        const double scale = std::sqrt(cfg.per_subcarrier_power()) * specular_fraction(cfg.rice_factor);
        std::vector<std::complex<double>> s(g.A.size());
        for (std::size_t k = 0; k < s.size(); ++k)
            s[k] = g.A[k] * scale * cfg.pilot;
        return s;
    }

    struct ReceivedProfile
    {
        std::vector<std::complex<double>> y, s, v, n;
        std::vector<double> sigma2_v; // diffuse variance per subcarrier, W
        double sigma2 = 0.0;          // noise variance, W
        std::uint64_t metaprism_hash = 0;
        std::uint64_t link_hash = 0;

        std::size_t size() const { return y.size(); }
    };

    // Seeds of the two independent streams (diffuse, noise) used for one realization
    inline std::uint64_t diffuse_stream_seed(std::uint64_t seed) { return derive_seed(seed, 1); }
    inline std::uint64_t noise_stream_seed(std::uint64_t seed) { return derive_seed(seed, 2); }

    // Draws y_k = s_k + v_k + n_k given a precomputed cascade gain
    inline ReceivedProfile synthesize_from_cascade(const CascadeGain &g, const SystemConfig &cfg, std::uint64_t seed)
    {
        ReceivedProfile out;
        const std::size_t K = g.A.size();
        out.s = specular_component(g, cfg);
        out.sigma2 = noise_variance(cfg);
        out.v.assign(K, 0.0);
        out.n.assign(K, 0.0);
        out.sigma2_v.assign(K, 0.0);

        const double power = cfg.diffuse_power == DiffusePower::PerSubcarrier ? cfg.per_subcarrier_power() : cfg.total_power;
        const double dfrac = diffuse_fraction(cfg.rice_factor);
        if (dfrac > 0.0)
        {
            RandomStream rng(diffuse_stream_seed(seed));
            for (std::size_t k = 0; k < K; ++k)
            {
                out.sigma2_v[k] = std::norm(g.A[k]) * power * dfrac;
                out.v[k] = rng.complex_normal(out.sigma2_v[k]);
            }
        }
        if (out.sigma2 > 0.0)
        {
            RandomStream rng(noise_stream_seed(seed));
            for (std::size_t k = 0; k < K; ++k)
                out.n[k] = rng.complex_normal(out.sigma2);
        }
        out.y.resize(K);
        for (std::size_t k = 0; k < K; ++k)
            out.y[k] = out.s[k] + out.v[k] + out.n[k];
        return out;
    }

    inline ReceivedProfile synthesize_received(const Metaprism &mp, const Position3D &p_u, const Position3D &p_bs,
                                               const SystemConfig &cfg, std::uint64_t seed)
    {
        ReceivedProfile r = synthesize_from_cascade(cascade_gain(mp, p_u, p_bs, cfg), cfg, seed);
        r.metaprism_hash = mp.hash();
        r.link_hash = link_hash(cfg, p_bs);
        return r;
    }

    // ---------- Profile table (text) ----------
    //
    // # metaloc-profile v1 K=<K> sigma2=<W> metaprism_hash=<hex> link_hash=<hex>
    // k,f_k,re_y,im_y,re_s,im_s

    inline void write_profile(std::ostream &os, const ReceivedProfile &r, const SystemConfig &cfg)
    {
        char buf[256];
        std::snprintf(buf, sizeof buf, "# metaloc-profile v1 K=%zu sigma2=%.17g", r.size(), r.sigma2);
        os << buf << " metaprism_hash=" << hex64(r.metaprism_hash) << " link_hash=" << hex64(r.link_hash) << "\n";
        os << "k,f_k,re_y,im_y,re_s,im_s\n";
        for (std::size_t k = 0; k < r.size(); ++k)
        {
            const std::complex<double> s = k < r.s.size() ? r.s[k] : 0.0;
            std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", k + 1, subcarrier_frequency(cfg, k + 1),
                          r.y[k].real(), r.y[k].imag(), s.real(), s.imag());
            os << buf;
        }
    }

    inline ReceivedProfile read_profile(std::istream &is)
    {
        std::string line;
        if (!std::getline(is, line) || line.rfind("# metaloc-profile v1", 0) != 0)
            throw ConfigError("Profile: missing 'metaloc-profile v1' header.");
        ReceivedProfile r;
        std::size_t K = 0;
        {
            std::istringstream ss(line.substr(2));
            std::string tok;
            while (ss >> tok)
            {
                const auto eq = tok.find('=');
                if (eq == std::string::npos)
                    continue;
                const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
                try
                {
                    if (key == "K")
                        K = std::stoull(val);
                    else if (key == "sigma2")
                        r.sigma2 = std::stod(val);
                    else if (key == "metaprism_hash")
                        r.metaprism_hash = std::stoull(val, nullptr, 16);
                    else if (key == "link_hash")
                        r.link_hash = std::stoull(val, nullptr, 16);
                }
                catch (const std::logic_error &)
                {
                    throw ConfigError("Profile: bad header field '" + tok + "'.");
                }
            }
        }
        std::getline(is, line);
        while (std::getline(is, line))
        {
            if (line.empty())
                continue;
            std::size_t k = 0;
            double f = 0, yr = 0, yi = 0, sr = 0, si = 0;
            if (std::sscanf(line.c_str(), "%zu,%lf,%lf,%lf,%lf,%lf", &k, &f, &yr, &yi, &sr, &si) != 6 || k != r.y.size() + 1)
                throw ConfigError("Profile: malformed row '" + line + "'.");
            r.y.emplace_back(yr, yi);
            r.s.emplace_back(sr, si);
        }
        if (r.y.size() != K || K == 0)
            throw ConfigError("Profile: expected " + std::to_string(K) + " rows, found " + std::to_string(r.y.size()) + ".");
        return r;
    }
}

#endif
