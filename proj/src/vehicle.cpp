#include <flockadapt/vehicle.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace flockadapt {

namespace {

double direction_sign(OrbitDirection d)
{
    return d == OrbitDirection::ccw ? 1.0 : -1.0;
}

} // namespace

OrbitDirection parse_orbit_direction(std::string_view name)
{
    if (name == "ccw") {
        return OrbitDirection::ccw;
    }
    if (name == "cw") {
        return OrbitDirection::cw;
    }
    throw ValidationError("unknown orbit direction '" + std::string(name) + "' (expected ccw or cw)");
}

std::string_view to_string(OrbitDirection direction)
{
    return direction == OrbitDirection::ccw ? "ccw" : "cw";
}

void GuidanceParams::validate() const
{
    if (!(k_r > 0.0)) {
        throw ValidationError("k_r must be positive");
    }
    if (!(k_course > 0.0)) {
        throw ValidationError("k_course must be positive");
    }
    if (!(heading_tc > 0.0) || !(speed_tc > 0.0)) {
        throw ValidationError("heading_tc_s and speed_tc_s must be positive");
    }
    if (!(v_min > 0.0 && v_max > v_min)) {
        throw ValidationError("speed bounds need 0 < v_min_mps < v_max_mps");
    }
}

double phase_of_position(const VehicleState& state, Point target, OrbitDirection direction,
                         std::optional<double> previous)
{
    const double dx = state.position.x - target.x;
    const double dy = state.position.y - target.y;
    if (dx == 0.0 && dy == 0.0) {
        throw NumericError("vehicle position coincides with the target; phase undefined");
    }
    const double raw = direction_sign(direction) * std::atan2(dy, dx);
    if (!previous) {
        return raw;
    }
    return *previous + wrap_angle(raw - *previous);
}

GuidanceCommand orbit_guidance(const VehicleState& state, Point target, double rho_desired, double v_command,
                               const GuidanceParams& params)
{
    const double s = direction_sign(params.direction);
    const double dx = state.position.x - target.x;
    const double dy = state.position.y - target.y;
    const double r = std::hypot(dx, dy);
    const double azimuth = std::atan2(dy, dx);

    // positive correction turns the course from tangent toward the target
    const double correction = std::atan(params.k_r * (r - rho_desired) / rho_desired);
    const double course = azimuth + s * (std::numbers::pi / 2.0 + correction);

    GuidanceCommand cmd;
    cmd.heading_rate = s * state.speed / rho_desired + params.k_course * wrap_angle(course - state.heading);
    cmd.speed = std::clamp(v_command, params.v_min, params.v_max);
    return cmd;
}

VehicleState vehicle_rates(const VehicleState& state, const GuidanceCommand& command, const GuidanceParams& params)
{
    VehicleState rate;
    rate.position.x = state.speed * std::cos(state.heading);
    rate.position.y = state.speed * std::sin(state.heading);
    rate.heading = state.turn_rate;
    rate.turn_rate = (command.heading_rate - state.turn_rate) / params.heading_tc;

    const double target_speed = std::clamp(command.speed, params.v_min, params.v_max);
    rate.speed = (target_speed - state.speed) / params.speed_tc;
    if ((state.speed >= params.v_max && rate.speed > 0.0) || (state.speed <= params.v_min && rate.speed < 0.0)) {
        rate.speed = 0.0;
    }
    return rate;
}

double speed_command_from_coupling(double coupling, const AgentParams& params)
{
    return params.v_nominal + params.rho * coupling;
}

VehicleState vehicle_on_orbit(Point target, double radius, double phase, double speed, OrbitDirection direction)
{
    const double s = direction_sign(direction);
    const double azimuth = s * phase;
    VehicleState v;
    v.position = {target.x + radius * std::cos(azimuth), target.y + radius * std::sin(azimuth)};
    v.heading = azimuth + s * std::numbers::pi / 2.0;
    v.speed = speed;
    v.turn_rate = s * speed / radius;
    return v;
}

} // namespace flockadapt
