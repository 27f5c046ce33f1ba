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

#ifndef metaloc_metaprism_H
#define metaloc_metaprism_H

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "hash.hpp"
#include "random.hpp"

namespace metaloc
{
    enum class DesignKind
    {
        None,         // all coefficients zero (plain mirror)
        Beamsteering, // alpha = a0 * x_n + b0 * y_m
        Random        // alpha ~ U[0, bound], seeded
    };

    inline const char *to_string(DesignKind k)
    {
        switch (k)
        {
        case DesignKind::Beamsteering:
            return "beamsteering";
        case DesignKind::Random:
            return "random";
        default:
            return "none";
        }
    }

    inline DesignKind design_kind_from_string(const std::string &s)
    {
        if (s == "beamsteering" || s == "BD")
            return DesignKind::Beamsteering;
        if (s == "random" || s == "RD")
            return DesignKind::Random;
        if (s == "none")
            return DesignKind::None;
        throw ConfigError("Unknown design kind '" + s + "' (expected beamsteering | random | none).");
    }

    struct BeamsteeringParams
    {
        double a0 = 0.0;        // rad / (Hz m)
        double b0 = 0.0;        // rad / (Hz m)
        double theta_m = 0.0;   // angular span of the subcarrier fan, rad
        double theta_ref = 0.0; // design incidence angle, rad
    };

    struct Aperture
    {
        double max_dimension = 0.0;       // aperture diagonal D, m
        double fraunhofer_distance = 0.0; // 2 D^2 / lambda, m
    };

    // N x M cell grid in the x-y plane with one frequency-slope coefficient per cell.
    // Cell (n, m) has flat index n * M + m.
    class Metaprism
    {
    public:
        std::size_t n_cells_x() const { return n_; }
        std::size_t n_cells_y() const { return m_; }
        std::size_t n_cells() const { return n_ * m_; }
        double cell_pitch_x() const { return dx_; }
        double cell_pitch_y() const { return dy_; }
        DesignKind design_kind() const { return kind_; }

        std::size_t index(std::size_t n, std::size_t m) const
        {
            if (n >= n_ || m >= m_)
                throw IndexError("Metaprism: cell index (" + std::to_string(n) + ", " + std::to_string(m) + ") out of range.");
            return n * m_ + m;
        }

        double x(std::size_t n) const { return double(n) * dx_ - double(n_) * dx_ / 2.0; }
        double y(std::size_t m) const { return double(m) * dy_ - double(m_) * dy_ / 2.0; }
        Position3D cell_position(std::size_t n, std::size_t m) const { return {x(n), y(m), 0.0}; }
        double alpha(std::size_t n, std::size_t m) const { return alphas_[index(n, m)]; }

        const std::vector<Position3D> &cell_positions() const { return positions_; }
        const std::vector<double> &alphas() const { return alphas_; }

        const std::optional<BeamsteeringParams> &beamsteering() const { return bd_; }
        double random_bound() const { return rd_bound_; }
        std::uint64_t random_seed() const { return rd_seed_; }

        // Identifies geometry and coefficients exactly
        std::uint64_t hash() const
        {
            Fnv1a h;
            h.str("metaprism").u64(n_).u64(m_).f64(dx_).f64(dy_);
            for (double a : alphas_)
                h.f64(a);
            return h.digest();
        }

    private:
        friend Metaprism build_grid(std::size_t, std::size_t, double, double);
        friend Metaprism design_beamsteering(const Metaprism &, double, double, double, double);
        friend Metaprism design_random(const Metaprism &, double, std::uint64_t);
        friend Metaprism with_alphas(const Metaprism &, std::vector<double>);
        friend Metaprism read_coefficient_map(std::istream &);

        std::size_t n_ = 0, m_ = 0;
        double dx_ = 0.0, dy_ = 0.0;
        std::vector<Position3D> positions_;
        std::vector<double> alphas_;
        DesignKind kind_ = DesignKind::None;
        std::optional<BeamsteeringParams> bd_;
        double rd_bound_ = 0.0;
        std::uint64_t rd_seed_ = 0;
    };

    // Empty (all-zero) metaprism. The pitch defaults to half a wavelength in both axes.
    inline Metaprism build_grid(std::size_t n_cells_x, std::size_t n_cells_y, double wavelength, double pitch = 0.0)
    {
        if (n_cells_x == 0 || n_cells_y == 0)
            throw DomainError("build_grid: the cell grid needs at least one cell per axis.");
        if (!(wavelength > 0.0) || !std::isfinite(wavelength))
            throw DomainError("build_grid: wavelength must be positive.");
        if (pitch < 0.0 || !std::isfinite(pitch))
            throw DomainError("build_grid: cell pitch must be positive.");

        Metaprism mp;
        mp.n_ = n_cells_x;
        mp.m_ = n_cells_y;
        mp.dx_ = mp.dy_ = (pitch == 0.0) ? wavelength / 2.0 : pitch;
        mp.positions_.reserve(mp.n_cells());
        for (std::size_t n = 0; n < mp.n_; ++n)
            for (std::size_t m = 0; m < mp.m_; ++m)
                mp.positions_.push_back(mp.cell_position(n, m));
        mp.alphas_.assign(mp.n_cells(), 0.0);
        return mp;
    }

    // True if both pitches are within `tolerance` (relative) of lambda / 2
    inline bool pitch_is_half_wavelength(const Metaprism &mp, double wavelength, double tolerance = 0.01)
    {
        const double half = wavelength / 2.0;
        return std::abs(mp.cell_pitch_x() - half) <= tolerance * half &&
               std::abs(mp.cell_pitch_y() - half) <= tolerance * half;
    }

    // Slope a0 that reflects the highest subcarrier (f0 + W/2) incident from theta_ref
    // towards -(theta_ref + theta_m); b0 = 0.
    inline BeamsteeringParams beamsteering_params(double theta_ref, double theta_m, double wavelength, double bandwidth)
    {
        if (!(wavelength > 0.0) || !(bandwidth > 0.0))
            throw DomainError("design_beamsteering: wavelength and bandwidth must be positive.");
        const double limit = pi / 2.0 + 1e-12;
        if (std::abs(theta_ref) > limit || std::abs(theta_ref + theta_m) > limit)
            throw DomainError("design_beamsteering: design angles leave the visible region (|theta_ref + theta_m| > 90 deg).");

        BeamsteeringParams p;
        p.theta_ref = theta_ref;
        p.theta_m = theta_m;
        p.a0 = -4.0 * pi / (wavelength * bandwidth) * (-std::sin(theta_ref + theta_m) + std::sin(theta_ref));
        p.b0 = 0.0;
        return p;
    }

    inline Metaprism design_beamsteering(const Metaprism &grid, double theta_ref, double theta_m, double wavelength, double bandwidth)
    {
        const BeamsteeringParams p = beamsteering_params(theta_ref, theta_m, wavelength, bandwidth);
        Metaprism mp = grid;
        for (std::size_t n = 0; n < mp.n_; ++n)
            for (std::size_t m = 0; m < mp.m_; ++m)
                mp.alphas_[n * mp.m_ + m] = p.a0 * mp.x(n) + p.b0 * mp.y(m);
        mp.kind_ = DesignKind::Beamsteering;
        mp.bd_ = p;
        mp.rd_bound_ = 0.0;
        mp.rd_seed_ = 0;
        return mp;
    }

    inline constexpr double default_random_bound = 1e-6; // rad/Hz

    // Coefficients drawn i.i.d. uniform on [0, upper_bound] in flat cell order
    inline Metaprism design_random(const Metaprism &grid, double upper_bound, std::uint64_t seed)
    {
        if (!(upper_bound > 0.0) || !std::isfinite(upper_bound))
            throw DomainError("design_random: upper bound must be positive.");
        Metaprism mp = grid;
        RandomStream rng(seed);
        for (double &a : mp.alphas_)
            a = upper_bound * rng.uniform01();
        mp.kind_ = DesignKind::Random;
        mp.bd_.reset();
        mp.rd_bound_ = upper_bound;
        mp.rd_seed_ = seed;
        return mp;
    }

    // Same grid, arbitrary coefficients (analysis and tests)
    inline Metaprism with_alphas(const Metaprism &grid, std::vector<double> alphas)
    {
        if (alphas.size() != grid.n_cells())
            throw DomainError("with_alphas: expected one coefficient per cell.");
        Metaprism mp = grid;
        mp.alphas_ = std::move(alphas);
        mp.kind_ = DesignKind::None;
        mp.bd_.reset();
        return mp;
    }

    // r_nm(f) = exp(j alpha_nm (f - f0))
    inline std::complex<double> reflection_coefficient(const Metaprism &mp, std::size_t n, std::size_t m, double f, double f0)
    {
        return std::polar(1.0, mp.alpha(n, m) * (f - f0));
    }

    inline Aperture aperture(const Metaprism &mp, double wavelength)
    {
        Aperture a;
        a.max_dimension = std::hypot(double(mp.n_cells_x()) * mp.cell_pitch_x(), double(mp.n_cells_y()) * mp.cell_pitch_y());
        a.fraunhofer_distance = 2.0 * a.max_dimension * a.max_dimension / wavelength;
        return a;
    }

    inline double fraunhofer_distance(const Metaprism &mp, double wavelength)
    {
        return aperture(mp, wavelength).fraunhofer_distance;
    }

    // ---------- Coefficient map (text) ----------
    //
    // # metaloc-coefficients v1 design=<kind> N=<N> M=<M> dx=<m> dy=<m> [a0=.. b0=.. theta_ref_deg=.. theta_m_deg=..] [bound=.. seed=..] hash=<hex>
    // n,m,x_n,y_m,alpha
    // 0,0,-0.1338,...,...

    inline void write_coefficient_map(std::ostream &os, const Metaprism &mp)
    {
        char buf[256];
        os << "# metaloc-coefficients v1 design=" << to_string(mp.design_kind());
        std::snprintf(buf, sizeof buf, " N=%zu M=%zu dx=%.17g dy=%.17g", mp.n_cells_x(), mp.n_cells_y(), mp.cell_pitch_x(), mp.cell_pitch_y());
        os << buf;
        if (const auto &bd = mp.beamsteering())
        {
            std::snprintf(buf, sizeof buf, " a0=%.17g b0=%.17g theta_ref_deg=%.17g theta_m_deg=%.17g",
                          bd->a0, bd->b0, rad2deg(bd->theta_ref), rad2deg(bd->theta_m));
            os << buf;
        }
        if (mp.design_kind() == DesignKind::Random)
        {
            std::snprintf(buf, sizeof buf, " bound=%.17g seed=%llu", mp.random_bound(), static_cast<unsigned long long>(mp.random_seed()));
            os << buf;
        }
        os << " hash=" << hex64(mp.hash()) << "\n";
        os << "n,m,x_n,y_m,alpha\n";
        for (std::size_t n = 0; n < mp.n_cells_x(); ++n)
            for (std::size_t m = 0; m < mp.n_cells_y(); ++m)
            {
                std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%.17g,%.17g\n", n, m, mp.x(n), mp.y(m), mp.alpha(n, m));
                os << buf;
            }
    }

    inline Metaprism read_coefficient_map(std::istream &is)
    {
        std::string line;
        if (!std::getline(is, line) || line.rfind("# metaloc-coefficients v1", 0) != 0)
            throw ConfigError("Coefficient map: missing 'metaloc-coefficients v1' header.");

        std::map<std::string, std::string> meta;
        {
            std::istringstream ss(line.substr(2));
            std::string tok;
            while (ss >> tok)
                if (auto eq = tok.find('='); eq != std::string::npos)
                    meta[tok.substr(0, eq)] = tok.substr(eq + 1);
        }
        auto need = [&](const char *key) -> const std::string &
        {
            auto it = meta.find(key);
            if (it == meta.end())
                throw ConfigError(std::string("Coefficient map: header field '") + key + "' missing.");
            return it->second;
        };

        Metaprism mp;
        try
        {
            mp.n_ = std::stoull(need("N"));
            mp.m_ = std::stoull(need("M"));
            mp.dx_ = std::stod(need("dx"));
            mp.dy_ = std::stod(need("dy"));
            mp.kind_ = design_kind_from_string(need("design"));
            if (mp.kind_ == DesignKind::Beamsteering)
                mp.bd_ = BeamsteeringParams{std::stod(need("a0")), std::stod(need("b0")),
                                            deg2rad(std::stod(need("theta_m_deg"))), deg2rad(std::stod(need("theta_ref_deg")))};
            if (mp.kind_ == DesignKind::Random)
            {
                mp.rd_bound_ = std::stod(need("bound"));
                mp.rd_seed_ = std::stoull(need("seed"));
            }
        }
        catch (const std::logic_error &e)
        {
            throw ConfigError(std::string("Coefficient map: bad header value (") + e.what() + ").");
        }
        if (mp.n_ == 0 || mp.m_ == 0 || !(mp.dx_ > 0.0) || !(mp.dy_ > 0.0))
            throw ConfigError("Coefficient map: invalid grid dimensions.");

        mp.positions_.reserve(mp.n_cells());
        for (std::size_t n = 0; n < mp.n_; ++n)
            for (std::size_t m = 0; m < mp.m_; ++m)
                mp.positions_.push_back(mp.cell_position(n, m));
        mp.alphas_.assign(mp.n_cells(), 0.0);
        std::vector<bool> seen(mp.n_cells(), false);

        std::getline(is, line); // column header
        std::size_t rows = 0;
        while (std::getline(is, line))
        {
            if (line.empty())
                continue;
            std::size_t n = 0, m = 0;
            double xn = 0, ym = 0, a = 0;
            if (std::sscanf(line.c_str(), "%zu,%zu,%lf,%lf,%lf", &n, &m, &xn, &ym, &a) != 5)
                throw ConfigError("Coefficient map: malformed row '" + line + "'.");
            const std::size_t c = mp.index(n, m);
            if (seen[c])
                throw ConfigError("Coefficient map: duplicate cell row.");
            seen[c] = true;
            mp.alphas_[c] = a;
            ++rows;
        }
        if (rows != mp.n_cells())
            throw ConfigError("Coefficient map: expected " + std::to_string(mp.n_cells()) + " rows, found " + std::to_string(rows) + ".");

        if (auto it = meta.find("hash"); it != meta.end() && it->second != hex64(mp.hash()))
            throw ConfigError("Coefficient map: content does not match header hash.");
        return mp;
    }
}

#endif
