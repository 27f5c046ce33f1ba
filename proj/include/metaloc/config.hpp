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

#ifndef metaloc_config_H
#define metaloc_config_H

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "array_factor.hpp"
#include "channel.hpp"
#include "errors.hpp"
#include "estimator.hpp"
#include "experiments.hpp"
#include "geometry.hpp"
#include "metaprism.hpp"

// Run configuration. The struct mirrors the file schema one to one (angles in
// degrees, powers and gains in dB), which keeps parse(serialize(c)) == c exact.
//
// {
//   "system":    { "f0_hz", "speed_of_light_mps", "bandwidth_hz", "n_subcarriers", "total_power_dbm",
//                  "gain_user_db", "gain_bs_db", "noise_figure_db", "noise_psd_w_per_hz" (null = kT0F),
//                  "diffuse_power" ("per_subcarrier" | "total") },
//   "bs_position_m": [x, y, z],
//   "metaprism": { "sizes": [[N, M], ...], "pitch_m" (null = lambda/2), "design" ("beamsteering" | "random"),
//                  "theta_ref_deg" (null = BS azimuth), "theta_m_deg", "random_bound_rad_per_hz", "random_seed" },
//   "scenario":  { "name" ("A" | "B" | "custom"), "positions_m": [[x, y, z], ...] (custom only) },
//   "grid":      { "step_m", "margin_m", "volume" (also pad the flat y axis) },
//   "campaign":  { "rice_factors": [.. | "inf"], "n_trials", "master_seed", "position_batch" (0 = all) },
//   "estimator": { "metric" ("normalized" | "correlation") },
//   "af":        { "theta_min_deg", "theta_max_deg", "theta_step_deg", "phi_deg", "subcarriers" ([] = all),
//                  "incident_theta_deg" (null = BS azimuth), "incident_phi_deg", "normalization" ("global" | "per_subcarrier") },
//   "output":    { "directory", "cache", "cache_dir" (null = <directory>/cache) }
// }

namespace metaloc
{
    using json = nlohmann::ordered_json;

    struct RunConfig
    {
        // system
        double f0_hz = 28e9;
        double speed_of_light_mps = speed_of_light;
        double bandwidth_hz = 198e6;
        std::size_t n_subcarriers = 3300;
        double total_power_dbm = 20.0;
        double gain_user_db = 6.0;
        double gain_bs_db = 6.0;
        double noise_figure_db = 3.0;
        std::optional<double> noise_psd_w_per_hz;
        DiffusePower diffuse_power = DiffusePower::PerSubcarrier;

        Position3D bs_position{8.0, 0.0, 8.0};

        // metaprism
        std::vector<std::pair<std::size_t, std::size_t>> metaprism_sizes{{50, 50}};
        std::optional<double> pitch_m;
        DesignKind design = DesignKind::Beamsteering;
        std::optional<double> theta_ref_deg;
        double theta_m_deg = 40.0;
        double random_bound = default_random_bound;
        std::uint64_t random_seed = 42;

        // scenario and grid
        std::string scenario = "B";
        std::vector<Position3D> positions;
        double grid_step_m = 0.1;
        double grid_margin_m = 1.0;
        bool grid_volume = false;

        // campaign
        std::vector<double> rice_factors{std::numeric_limits<double>::infinity()};
        std::size_t n_trials = 200;
        std::uint64_t master_seed = 1;
        std::size_t position_batch = 0;
        MatchMetric metric = MatchMetric::Normalized;

        // array factor sweep
        double af_theta_min_deg = -90.0;
        double af_theta_max_deg = 0.0;
        double af_theta_step_deg = 0.1;
        double af_phi_deg = 0.0;
        std::vector<std::size_t> af_subcarriers;
        std::optional<double> af_incident_theta_deg;
        double af_incident_phi_deg = 0.0;
        AFNormalization af_normalization = AFNormalization::Global;

        // output
        std::string output_dir = "out";
        bool use_cache = true;
        std::optional<std::string> cache_dir;

        bool operator==(const RunConfig &) const = default;

        // Physical parameters for one Rice factor
        SystemConfig system(double rice_factor = std::numeric_limits<double>::infinity()) const
        {
            SystemConfig s;
            s.f0 = f0_hz;
            s.c = speed_of_light_mps;
            s.bandwidth = bandwidth_hz;
            s.n_subcarriers = n_subcarriers;
            s.total_power = dbm_to_watts(total_power_dbm);
            s.gain_user = db_to_linear(gain_user_db);
            s.gain_bs = db_to_linear(gain_bs_db);
            s.noise_figure = db_to_linear(noise_figure_db);
            s.noise_psd_override = noise_psd_w_per_hz;
            s.rice_factor = rice_factor;
            s.diffuse_power = diffuse_power;
            s.validate();
            return s;
        }

        // Design reference angle (rad): explicit, or the BS azimuth
        double theta_ref() const
        {
            return theta_ref_deg ? deg2rad(*theta_ref_deg) : angle_of(bs_position).theta;
        }

        Metaprism make_metaprism(std::size_t N, std::size_t M) const
        {
            const SystemConfig s = system();
            const Metaprism grid = build_grid(N, M, s.wavelength(), pitch_m.value_or(0.0));
            switch (design)
            {
            case DesignKind::Beamsteering:
                return design_beamsteering(grid, theta_ref(), deg2rad(theta_m_deg), s.wavelength(), s.bandwidth);
            case DesignKind::Random:
                return design_random(grid, random_bound, random_seed);
            default:
                return grid;
            }
        }

        std::vector<Position3D> user_positions() const
        {
            if (scenario == "A")
                return default_scenarios(bs_position).A.user_positions;
            if (scenario == "B")
                return default_scenarios(bs_position).B.user_positions;
            if (scenario == "custom")
            {
                if (positions.empty())
                    throw ConfigError("scenario 'custom' needs a nonempty positions_m list.");
                return positions;
            }
            throw ConfigError("Unknown scenario '" + scenario + "' (expected A | B | custom).");
        }

        Scenario make_scenario() const
        {
            Scenario s;
            s.name = scenario;
            s.user_positions = user_positions();
            s.bs_position = bs_position;
            s.metaprism_sizes = metaprism_sizes;
            s.design = design;
            s.rice_factor = rice_factors.empty() ? std::numeric_limits<double>::infinity() : rice_factors.front();
            return s;
        }

        TestGrid make_grid() const
        {
            return grid_covering(user_positions(), grid_margin_m, grid_step_m, grid_volume);
        }

        void validate() const
        {
            system();
            if (metaprism_sizes.empty())
                throw ConfigError("metaprism.sizes must list at least one size.");
            for (const auto &[N, M] : metaprism_sizes)
                if (N == 0 || M == 0)
                    throw ConfigError("metaprism.sizes entries must be positive.");
            if (!(grid_step_m > 0.0) || !(grid_margin_m >= 0.0))
                throw ConfigError("grid.step_m must be positive and grid.margin_m nonnegative.");
            if (rice_factors.empty())
                throw ConfigError("campaign.rice_factors must be nonempty.");
            for (double k : rice_factors)
                if (!(k >= 0.0))
                    throw ConfigError("campaign.rice_factors must be >= 0.");
            if (!bs_position.is_finite() || !(bs_position.z > 0.0))
                throw ConfigError("bs_position_m must be finite with z > 0.");
            user_positions();
        }
    };

    namespace detail
    {
        inline json number_or_inf(double v)
        {
            return std::isinf(v) ? json("inf") : json(v);
        }

        inline double parse_number_or_inf(const json &j, const char *what)
        {
            if (j.is_string() && (j.get<std::string>() == "inf" || j.get<std::string>() == "infinity"))
                return std::numeric_limits<double>::infinity();
            if (!j.is_number())
                throw ConfigError(std::string(what) + ": expected a number or \"inf\".");
            return j.get<double>();
        }

        inline json opt(const std::optional<double> &v) { return v ? json(*v) : json(nullptr); }

        inline json position(const Position3D &p) { return json::array({p.x, p.y, p.z}); }

        inline Position3D parse_position(const json &j, const char *what)
        {
            if (!j.is_array() || j.size() != 3)
                throw ConfigError(std::string(what) + ": expected [x, y, z].");
            return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
        }

        // Visits the keys of an object, rejecting any not in `allowed`
        inline void check_keys(const json &j, const char *section, std::initializer_list<const char *> allowed)
        {
            if (!j.is_object())
                throw ConfigError(std::string("config section '") + section + "' must be an object.");
            for (auto it = j.begin(); it != j.end(); ++it)
            {
                bool ok = false;
                for (const char *a : allowed)
                    ok = ok || it.key() == a;
                if (!ok)
                    throw ConfigError(std::string("config: unknown key '") + section + "." + it.key() + "'.");
            }
        }
    }

    inline json to_json(const RunConfig &c)
    {
        using namespace detail;
        json j;
        j["system"] = {{"f0_hz", c.f0_hz},
                       {"speed_of_light_mps", c.speed_of_light_mps},
                       {"bandwidth_hz", c.bandwidth_hz},
                       {"n_subcarriers", c.n_subcarriers},
                       {"total_power_dbm", c.total_power_dbm},
                       {"gain_user_db", c.gain_user_db},
                       {"gain_bs_db", c.gain_bs_db},
                       {"noise_figure_db", c.noise_figure_db},
                       {"noise_psd_w_per_hz", opt(c.noise_psd_w_per_hz)},
                       {"diffuse_power", c.diffuse_power == DiffusePower::PerSubcarrier ? "per_subcarrier" : "total"}};
        j["bs_position_m"] = position(c.bs_position);

        json sizes = json::array();
        for (const auto &[N, M] : c.metaprism_sizes)
            sizes.push_back(json::array({N, M}));
        j["metaprism"] = {{"sizes", sizes},
                          {"pitch_m", opt(c.pitch_m)},
                          {"design", to_string(c.design)},
                          {"theta_ref_deg", opt(c.theta_ref_deg)},
                          {"theta_m_deg", c.theta_m_deg},
                          {"random_bound_rad_per_hz", c.random_bound},
                          {"random_seed", c.random_seed}};

        json pos = json::array();
        for (const auto &p : c.positions)
            pos.push_back(position(p));
        j["scenario"] = {{"name", c.scenario}, {"positions_m", pos}};
        j["grid"] = {{"step_m", c.grid_step_m}, {"margin_m", c.grid_margin_m}, {"volume", c.grid_volume}};

        json kappas = json::array();
        for (double k : c.rice_factors)
            kappas.push_back(number_or_inf(k));
        j["campaign"] = {{"rice_factors", kappas},
                         {"n_trials", c.n_trials},
                         {"master_seed", c.master_seed},
                         {"position_batch", c.position_batch}};
        j["estimator"] = {{"metric", to_string(c.metric)}};
        j["af"] = {{"theta_min_deg", c.af_theta_min_deg},
                   {"theta_max_deg", c.af_theta_max_deg},
                   {"theta_step_deg", c.af_theta_step_deg},
                   {"phi_deg", c.af_phi_deg},
                   {"subcarriers", c.af_subcarriers},
                   {"incident_theta_deg", opt(c.af_incident_theta_deg)},
                   {"incident_phi_deg", c.af_incident_phi_deg},
                   {"normalization", c.af_normalization == AFNormalization::Global ? "global" : "per_subcarrier"}};
        j["output"] = {{"directory", c.output_dir},
                       {"cache", c.use_cache},
                       {"cache_dir", c.cache_dir ? json(*c.cache_dir) : json(nullptr)}};
        return j;
    }

    // Missing keys keep their defaults; unknown keys are rejected
    inline RunConfig run_config_from_json(const json &j)
    {
        using namespace detail;
        RunConfig c;
        try
        {
            check_keys(j, "<root>", {"system", "bs_position_m", "metaprism", "scenario", "grid", "campaign", "estimator", "af", "output"});
            auto opt_double = [](const json &v) -> std::optional<double>
            { return v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()); };

            if (j.contains("system"))
            {
                const json &s = j["system"];
                check_keys(s, "system", {"f0_hz", "speed_of_light_mps", "bandwidth_hz", "n_subcarriers", "total_power_dbm",
                                         "gain_user_db", "gain_bs_db", "noise_figure_db", "noise_psd_w_per_hz", "diffuse_power"});
                c.f0_hz = s.value("f0_hz", c.f0_hz);
                c.speed_of_light_mps = s.value("speed_of_light_mps", c.speed_of_light_mps);
                c.bandwidth_hz = s.value("bandwidth_hz", c.bandwidth_hz);
                c.n_subcarriers = s.value("n_subcarriers", c.n_subcarriers);
                c.total_power_dbm = s.value("total_power_dbm", c.total_power_dbm);
                c.gain_user_db = s.value("gain_user_db", c.gain_user_db);
                c.gain_bs_db = s.value("gain_bs_db", c.gain_bs_db);
                c.noise_figure_db = s.value("noise_figure_db", c.noise_figure_db);
                if (s.contains("noise_psd_w_per_hz"))
                    c.noise_psd_w_per_hz = opt_double(s["noise_psd_w_per_hz"]);
                if (s.contains("diffuse_power"))
                {
                    const std::string d = s["diffuse_power"].get<std::string>();
                    if (d == "per_subcarrier")
                        c.diffuse_power = DiffusePower::PerSubcarrier;
                    else if (d == "total")
                        c.diffuse_power = DiffusePower::Total;
                    else
                        throw ConfigError("system.diffuse_power must be per_subcarrier | total.");
                }
            }
            if (j.contains("bs_position_m"))
                c.bs_position = parse_position(j["bs_position_m"], "bs_position_m");

            if (j.contains("metaprism"))
            {
                const json &m = j["metaprism"];
                check_keys(m, "metaprism", {"sizes", "pitch_m", "design", "theta_ref_deg", "theta_m_deg", "random_bound_rad_per_hz", "random_seed"});
                if (m.contains("sizes"))
                {
                    c.metaprism_sizes.clear();
                    for (const auto &e : m["sizes"])
                    {
                        if (!e.is_array() || e.size() != 2)
                            throw ConfigError("metaprism.sizes: expected [[N, M], ...].");
                        c.metaprism_sizes.emplace_back(e[0].get<std::size_t>(), e[1].get<std::size_t>());
                    }
                }
                if (m.contains("pitch_m"))
                    c.pitch_m = opt_double(m["pitch_m"]);
                if (m.contains("design"))
                    c.design = design_kind_from_string(m["design"].get<std::string>());
                if (m.contains("theta_ref_deg"))
                    c.theta_ref_deg = opt_double(m["theta_ref_deg"]);
                c.theta_m_deg = m.value("theta_m_deg", c.theta_m_deg);
                c.random_bound = m.value("random_bound_rad_per_hz", c.random_bound);
                c.random_seed = m.value("random_seed", c.random_seed);
            }
            if (j.contains("scenario"))
            {
                const json &s = j["scenario"];
                check_keys(s, "scenario", {"name", "positions_m"});
                c.scenario = s.value("name", c.scenario);
                if (s.contains("positions_m"))
                {
                    c.positions.clear();
                    for (const auto &p : s["positions_m"])
                        c.positions.push_back(parse_position(p, "scenario.positions_m"));
                }
            }
            if (j.contains("grid"))
            {
                const json &g = j["grid"];
                check_keys(g, "grid", {"step_m", "margin_m", "volume"});
                c.grid_step_m = g.value("step_m", c.grid_step_m);
                c.grid_margin_m = g.value("margin_m", c.grid_margin_m);
                c.grid_volume = g.value("volume", c.grid_volume);
            }
            if (j.contains("campaign"))
            {
                const json &m = j["campaign"];
                check_keys(m, "campaign", {"rice_factors", "n_trials", "master_seed", "position_batch"});
                if (m.contains("rice_factors"))
                {
                    const json &rf = m["rice_factors"];
                    c.rice_factors.clear();
                    if (rf.is_array())
                        for (const auto &k : rf)
                            c.rice_factors.push_back(parse_number_or_inf(k, "campaign.rice_factors"));
                    else
                        c.rice_factors.push_back(parse_number_or_inf(rf, "campaign.rice_factors"));
                }
                c.n_trials = m.value("n_trials", c.n_trials);
                c.master_seed = m.value("master_seed", c.master_seed);
                c.position_batch = m.value("position_batch", c.position_batch);
            }
            if (j.contains("estimator"))
            {
                const json &e = j["estimator"];
                check_keys(e, "estimator", {"metric"});
                if (e.contains("metric"))
                    c.metric = match_metric_from_string(e["metric"].get<std::string>());
            }
            if (j.contains("af"))
            {
                const json &a = j["af"];
                check_keys(a, "af", {"theta_min_deg", "theta_max_deg", "theta_step_deg", "phi_deg", "subcarriers",
                                     "incident_theta_deg", "incident_phi_deg", "normalization"});
                c.af_theta_min_deg = a.value("theta_min_deg", c.af_theta_min_deg);
                c.af_theta_max_deg = a.value("theta_max_deg", c.af_theta_max_deg);
                c.af_theta_step_deg = a.value("theta_step_deg", c.af_theta_step_deg);
                c.af_phi_deg = a.value("phi_deg", c.af_phi_deg);
                if (a.contains("subcarriers"))
                    c.af_subcarriers = a["subcarriers"].get<std::vector<std::size_t>>();
                if (a.contains("incident_theta_deg"))
                    c.af_incident_theta_deg = opt_double(a["incident_theta_deg"]);
                c.af_incident_phi_deg = a.value("incident_phi_deg", c.af_incident_phi_deg);
                if (a.contains("normalization"))
                {
                    const std::string n = a["normalization"].get<std::string>();
                    if (n == "global")
                        c.af_normalization = AFNormalization::Global;
                    else if (n == "per_subcarrier")
                        c.af_normalization = AFNormalization::PerSubcarrier;
                    else
                        throw ConfigError("af.normalization must be global | per_subcarrier.");
                }
            }
            if (j.contains("output"))
            {
                const json &o = j["output"];
                check_keys(o, "output", {"directory", "cache", "cache_dir"});
                c.output_dir = o.value("directory", c.output_dir);
                c.use_cache = o.value("cache", c.use_cache);
                if (o.contains("cache_dir"))
                    c.cache_dir = o["cache_dir"].is_null() ? std::nullopt : std::optional<std::string>(o["cache_dir"].get<std::string>());
            }
        }
        catch (const json::exception &e)
        {
            throw ConfigError(std::string("config: ") + e.what());
        }
        return c;
    }

    inline std::string serialize(const RunConfig &c) { return to_json(c).dump(2) + "\n"; }

    inline RunConfig parse_run_config(const std::string &text)
    {
        json j;
        try
        {
            j = json::parse(text);
        }
        catch (const json::exception &e)
        {
            throw ConfigError(std::string("config: invalid JSON (") + e.what() + ").");
        }
        // A campaign manifest embeds the configuration that produced it
        if (j.is_object() && j.contains("manifest_version") && j.contains("config"))
            return run_config_from_json(j["config"]);
        return run_config_from_json(j);
    }

    // "section.key=value" override; value is parsed as JSON, falling back to a string
    inline void apply_override(json &j, const std::string &assignment)
    {
        const auto eq = assignment.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ConfigError("override '" + assignment + "' must look like section.key=value.");
        const std::string path = assignment.substr(0, eq), text = assignment.substr(eq + 1);
        json value;
        try
        {
            value = json::parse(text);
        }
        catch (const json::exception &)
        {
            value = text;
        }
        json *node = &j;
        std::stringstream ss(path);
        std::string part;
        std::vector<std::string> parts;
        while (std::getline(ss, part, '.'))
            parts.push_back(part);
        for (std::size_t i = 0; i + 1 < parts.size(); ++i)
            node = &(*node)[parts[i]];
        (*node)[parts.back()] = value;
    }

    inline RunConfig load_run_config(const std::string &path, const std::vector<std::string> &overrides = {})
    {
        json j = json::object();
        if (!path.empty())
        {
            std::ifstream is(path);
            if (!is)
                throw ConfigError("config: cannot open '" + path + "'.");
            std::stringstream ss;
            ss << is.rdbuf();
            try
            {
                j = json::parse(ss.str());
            }
            catch (const json::exception &e)
            {
                throw ConfigError(std::string("config: invalid JSON in '") + path + "' (" + e.what() + ").");
            }
            if (j.is_object() && j.contains("manifest_version") && j.contains("config"))
                j = json(j["config"]);
        }
        for (const auto &o : overrides)
            apply_override(j, o);
        RunConfig c = run_config_from_json(j);
        c.validate();
        return c;
    }
}

#endif
