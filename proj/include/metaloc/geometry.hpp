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

#ifndef metaloc_geometry_H
#define metaloc_geometry_H

#include <cmath>
#include <numbers>

#include "errors.hpp"

// Coordinate conventions
// - The metaprism lies in the x-y plane, centered at the origin, facing +z.
// - A direction (theta, phi) has unit vector (sin(theta) cos(phi), sin(theta) sin(phi), cos(theta)).
// - Canonical angles: phi in (-pi/2, pi/2]; the sign of theta carries the half-plane.
//   For z > 0 this gives theta in (-pi/2, pi/2).
// - Angles are radians everywhere; degrees appear only at file and CLI boundaries.

namespace metaloc
{
    inline constexpr double pi = std::numbers::pi;

    constexpr double deg2rad(double deg) { return deg * pi / 180.0; }
    constexpr double rad2deg(double rad) { return rad * 180.0 / pi; }

    struct Position3D
    {
        double x = 0.0, y = 0.0, z = 0.0;

        double norm() const { return std::sqrt(x * x + y * y + z * z); }
        bool is_finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }

        friend Position3D operator-(const Position3D &a, const Position3D &b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
        friend Position3D operator+(const Position3D &a, const Position3D &b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
        friend bool operator==(const Position3D &, const Position3D &) = default;
    };

    inline double distance(const Position3D &a, const Position3D &b) { return (a - b).norm(); }

    struct AnglePair
    {
        double theta = 0.0; // azimuth, measured from the surface normal
        double phi = 0.0;   // elevation, rotation of the theta-plane about the normal

        friend bool operator==(const AnglePair &, const AnglePair &) = default;

        static AnglePair from_degrees(double theta_deg, double phi_deg) { return {deg2rad(theta_deg), deg2rad(phi_deg)}; }
    };

    struct DirectionCosines
    {
        double ux = 0.0, uy = 0.0;
    };

    // Unit vector pointing in the direction of the given angles
    inline Position3D unit_vector(const AnglePair &a)
    {
        const double s = std::sin(a.theta);
        return {s * std::cos(a.phi), s * std::sin(a.phi), std::cos(a.theta)};
    }

    inline DirectionCosines direction_cosines(const AnglePair &a)
    {
        const double s = std::sin(a.theta);
        return {s * std::cos(a.phi), s * std::sin(a.phi)};
    }

    // Direction of a nonzero vector in canonical form
    inline AnglePair angle_of(const Position3D &p)
    {
        if (!p.is_finite())
            throw DegenerateInputError("angle_of: non-finite position.");
        const double rho = std::hypot(p.x, p.y);
        if (rho == 0.0 && p.z == 0.0)
            throw DegenerateInputError("angle_of: zero-length vector has no direction.");
        if (rho == 0.0)
            return {p.z > 0.0 ? 0.0 : pi, 0.0};

        double theta = std::atan2(rho, p.z);
        double phi = std::atan2(p.y, p.x);
        if (phi > pi / 2.0)
        {
            phi -= pi;
            theta = -theta;
        }
        else if (phi <= -pi / 2.0)
        {
            phi += pi;
            theta = -theta;
        }
        return {theta, phi};
    }

    // Canonical representative of an arbitrary angle pair (same direction)
    inline AnglePair normalize(const AnglePair &a)
    {
        return angle_of(unit_vector(a));
    }

    inline Position3D position_from_polar(double d, const AnglePair &a)
    {
        if (!(d > 0.0))
            throw DomainError("position_from_polar: distance must be positive.");
        const Position3D u = unit_vector(a);
        return {d * u.x, d * u.y, d * u.z};
    }

    // Great-circle angle between two directions
    inline double angular_separation(const AnglePair &a, const AnglePair &b)
    {
        const Position3D u = unit_vector(a), v = unit_vector(b);
        // contracted products leave a residue of ~1e-17 in u x u
        if (u.x == v.x && u.y == v.y && u.z == v.z)
            return 0.0;
        const double cx = u.y * v.z - u.z * v.y;
        const double cy = u.z * v.x - u.x * v.z;
        const double cz = u.x * v.y - u.y * v.x;
        const double dot = u.x * v.x + u.y * v.y + u.z * v.z;
        return std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), dot);
    }
}

#endif
