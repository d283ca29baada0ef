#pragma once

// Agent-level orbit phase dynamics:
//
//   dphi_i/dt = omega_i + f+(x_i - x_di),
//   f+(u)     = v_f * 2 / (pi * rho_i) * atan(k_theta * u).
//
// The coupling only depends on Q through P = L Q, so the pattern dynamics are
// autonomous. With uniform parameters they form a gradient system with the
// potential V = sum_i F(x_i - x_di), F' = f+.

#include <flockadapt/topology.hpp>

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace flockadapt {

struct AgentParams
{
    double omega = 0.12;     ///< nominal orbit rate, rad/s
    double rho = 100.0;      ///< orbit radius, m
    double v_f = 3.0;        ///< maximum added speed, m/s
    double k_theta = 5.0;    ///< coupling steepness
    double v_nominal = 12.0; ///< cruising speed, m/s

    /// omega = v_nominal / rho.
    static AgentParams uniform_cruise(double v_nominal, double rho, double v_f, double k_theta);

    /// Throws ValidationError when any positivity constraint fails.
    void validate() const;

    bool operator==(const AgentParams&) const = default;
};

/// True when every agent shares identical parameters.
bool uniform(std::span<const AgentParams> params);

enum class CouplingKind { arctan };

/// Bounded odd increasing coupling, v_f * 2/(pi rho) * atan(k_theta u).
struct CouplingFunction
{
    CouplingKind kind = CouplingKind::arctan;
    AgentParams params;

    double operator()(double u) const;
    /// Antiderivative with F(0) = 0.
    double antiderivative(double u) const;
    /// Supremum of |f|, v_f / rho.
    double bound() const { return params.v_f / params.rho; }
};

double coupling_fplus(double x, const AgentParams& params);

/// Per-agent rate field, for checks that need to swap in other dynamics.
using PhaseField = std::function<Eigen::VectorXd(const PhaseVector&)>;

Eigen::VectorXd phase_rates(const InteractionTopology& topology, const PhaseVector& q, const DesiredCopies& d,
                            std::span<const AgentParams> params);

/// L * phase_rates.
Eigen::VectorXd pattern_rates(const InteractionTopology& topology, const PhaseVector& q, const DesiredCopies& d,
                              std::span<const AgentParams> params);

/// sum_i F(residual_i). Requires uniform parameters.
double potential_v(const Eigen::VectorXd& residuals, std::span<const AgentParams> params);

/// || L J (I - L^+ L) ||_inf with J from central differences of the field.
double autonomy_defect(const InteractionTopology& topology, const PhaseVector& q, const PhaseField& field,
                       double step = 1e-6);
double autonomy_defect(const InteractionTopology& topology, const PhaseVector& q, const DesiredCopies& d,
                       std::span<const AgentParams> params, double step = 1e-6);

struct CouplingConditions
{
    bool zero_at_origin = false;
    bool positive_slope = false;
    bool sign_condition = false;
    std::vector<std::string> violations;

    bool passed() const { return zero_at_origin && positive_slope && sign_condition; }
};

/// Checks f(0) = 0, f'(0) > 0 and f(u) u > 0 on every nonzero grid point.
CouplingConditions check_coupling_conditions(const std::function<double(double)>& coupling, std::span<const double> grid);

/// Symmetric grid of 2 * half_points + 1 samples on [-extent, extent].
std::vector<double> symmetric_grid(double extent, int half_points);

} // namespace flockadapt
