#pragma once

// Slow retuning of desired shifts after the pattern becomes unattainable.
// Every endpoint copy drifts toward the shift it measures on its own edge:
//
//   d/dt p_dk^(i) = a_s * f_sigm(tau_p * wrap(p_k - p_dk^(i)))

#include <flockadapt/topology.hpp>

#include <numbers>
#include <optional>
#include <string_view>

namespace flockadapt {

enum class SigmoidKind { arctan, tanh };

SigmoidKind parse_sigmoid_kind(std::string_view name);
std::string_view to_string(SigmoidKind kind);

struct AdaptationParams
{
    double tau_p = 0.1;
    double a_s = 2.0 / std::numbers::pi;
    SigmoidKind sigmoid = SigmoidKind::arctan;
    bool enabled = false;
    /// Unset means "at the first loss event" (or t = 0 without events).
    std::optional<double> start_time;

    void validate() const;
    bool active_at(double t, double resolved_start) const { return enabled && t >= resolved_start; }
};

double sigmoid_eval(SigmoidKind kind, double z);

/// Supremum of |sigmoid|.
double sigmoid_bound(SigmoidKind kind);

/// Rate of every endpoint copy. All zero when adaptation is disabled or
/// t precedes the start time.
DesiredCopies desired_rates(const InteractionTopology& topology, const PatternVector& p, const DesiredCopies& d,
                            const AdaptationParams& params, double t, double resolved_start);

/// Rates with adaptation assumed active.
DesiredCopies desired_rates(const InteractionTopology& topology, const PatternVector& p, const DesiredCopies& d,
                            const AdaptationParams& params);

/// dE/dt from copy motion alone with p frozen. E is the endpoint-copy form
/// 1/4 sum (p_k - p_dk^(i))^2, so each copy contributes
/// -1/2 e a_s f_sigm(tau_p e). With consistent copies this is the per-edge
/// sum -sum_k e_k a_s f_sigm(tau_p e_k).
double lyapunov_rate(const InteractionTopology& topology, const PatternVector& p, const DesiredCopies& d,
                     const AdaptationParams& params);

} // namespace flockadapt
