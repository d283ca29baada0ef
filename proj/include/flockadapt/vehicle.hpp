#pragma once

// Planar unicycle plant with first-order speed and turn-rate loops, steered
// onto a circular orbit around a stationary target by a vector-field loiter
// law. The coordination layer only ever sees the measured orbit phase and
// issues a speed command.

#include <flockadapt/phase_dynamics.hpp>

#include <optional>
#include <string_view>

namespace flockadapt {

struct Point
{
    double x = 0.0;
    double y = 0.0;
};

enum class OrbitDirection { ccw, cw };

OrbitDirection parse_orbit_direction(std::string_view name);
std::string_view to_string(OrbitDirection direction);

struct VehicleState
{
    Point position;
    double heading = 0.0;   ///< rad
    double speed = 12.0;    ///< m/s
    double turn_rate = 0.0; ///< rad/s, lagged heading rate
};

struct GuidanceParams
{
    double k_r = 2.0;
    double k_course = 0.5;   ///< 1/s, heading-rate gain on course error
    double heading_tc = 0.3; ///< s
    double speed_tc = 0.3;   ///< s
    OrbitDirection direction = OrbitDirection::ccw;
    double v_min = 6.0;
    double v_max = 20.0;

    void validate() const;
};

struct GuidanceCommand
{
    double heading_rate = 0.0; ///< rad/s
    double speed = 0.0;        ///< m/s
};

/// Orbit phase of the vehicle about the target, measured in the orbit
/// direction from the +x ray. With `previous` given, the result is the
/// branch closest to it, so consecutive samples never jump by 2 pi.
double phase_of_position(const VehicleState& state, Point target, OrbitDirection direction = OrbitDirection::ccw,
                         std::optional<double> previous = std::nullopt);

GuidanceCommand orbit_guidance(const VehicleState& state, Point target, double rho_desired, double v_command,
                               const GuidanceParams& params);

/// Time derivative of the vehicle state. Speed stays inside [v_min, v_max].
VehicleState vehicle_rates(const VehicleState& state, const GuidanceCommand& command, const GuidanceParams& params);

/// v_nominal + rho * coupling: the angular rate the phase controller adds,
/// expressed as a linear speed.
double speed_command_from_coupling(double coupling, const AgentParams& params);

/// Vehicle placed on the orbit at a given phase, flying tangentially.
VehicleState vehicle_on_orbit(Point target, double radius, double phase, double speed, OrbitDirection direction);

} // namespace flockadapt
