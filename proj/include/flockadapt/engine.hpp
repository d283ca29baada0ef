#pragma once

// Deterministic fixed-step simulation of the coupled formation: orbit phases
// (or full vehicles) together with the endpoint copies of the desired shifts,
// with agent-loss events applied on step boundaries.

#include <flockadapt/adaptation.hpp>
#include <flockadapt/fault.hpp>
#include <flockadapt/phase_dynamics.hpp>
#include <flockadapt/vehicle.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace flockadapt {

enum class ModelKind { phase, vehicle };
enum class InitialPhaseMode { pattern_perturbed, equispaced_perturbed, explicit_list };

std::string_view to_string(ModelKind kind);
std::string_view to_string(InitialPhaseMode mode);

/// Seeds stay exactly representable in scenario files.
constexpr std::uint64_t max_seed = std::uint64_t{1} << 53;

struct Scenario
{
    std::string name = "scenario";
    ModelKind model = ModelKind::phase;

    std::vector<AgentId> agents;
    std::vector<AgentParams> params; ///< one per agent
    Eigen::VectorXd desired_shifts;  ///< one per chain edge

    AdaptationParams adaptation;
    std::vector<LossEvent> events;

    double duration = 400.0;
    double dt = 0.01;
    std::uint64_t seed = 1;
    double record_period = 0.5;

    InitialPhaseMode initial_mode = InitialPhaseMode::pattern_perturbed;
    double initial_jitter = 0.3;
    std::vector<double> initial_phases; ///< used with explicit_list

    GuidanceParams guidance;
    std::optional<double> initial_radius; ///< vehicle model; defaults to the orbit radius

    /// Default substitutions made while loading, one line each.
    std::vector<std::string> notices;

    /// Throws ValidationError listing every violated constraint.
    void validate() const;

    /// Adaptation start time with the default resolved.
    double adaptation_start() const;

    std::int64_t steps() const;
    std::int64_t record_stride() const;
};

/// The canonical 4-agent formation with default parameters.
Scenario canonical_scenario();

/// Initial unwrapped phases drawn from the scenario's seed.
Eigen::VectorXd initial_phases(const Scenario& scenario);

struct TraceSample
{
    double time = 0.0;
    // per agent (trace column order); NaN once the agent is gone
    std::vector<double> phase;
    std::vector<double> rate;
    std::vector<double> speed;
    std::vector<double> x;
    std::vector<double> coupling;
    std::vector<double> radius;
    // per edge; NaN while the edge does not exist
    std::vector<double> shift;
    std::vector<double> desired_tail;
    std::vector<double> desired_head;
    double e = 0.0;
    double v = 0.0;
    double lyapunov_rate = 0.0; ///< copy-motion dE/dt; 0 while adaptation is inactive
    bool adaptation_active = false;
};

struct TraceEdge
{
    AgentId tail;
    AgentId head;

    std::string label() const { return std::to_string(tail) + "-" + std::to_string(head); }
    bool operator==(const TraceEdge&) const = default;
};

struct Trace
{
    Scenario scenario; ///< effective scenario
    std::vector<AgentId> agents;
    std::vector<TraceEdge> edges; ///< every edge that exists at some time
    std::vector<TraceSample> samples;

    std::optional<std::size_t> agent_column(AgentId id) const;
    std::optional<std::size_t> edge_column(AgentId tail, AgentId head) const;
    const TraceSample& final_sample() const { return samples.back(); }
};

using OdeRhs = std::function<Eigen::VectorXd(double t, const Eigen::VectorXd& y)>;

/// Raised when a stage derivative is NaN or infinite.
class NonFiniteDerivative : public NumericError
{
public:
    NonFiniteDerivative(Eigen::Index component, const std::string& message)
        : NumericError(message)
        , component_(component)
    {
    }
    Eigen::Index component() const { return component_; }

private:
    Eigen::Index component_;
};

/// Classical four-stage Runge-Kutta step.
Eigen::VectorXd step_rk4(const OdeRhs& rhs, double t, const Eigen::VectorXd& y, double dt);

Trace run_scenario(const Scenario& scenario);

/// Topology and stale copies after every loss event of the scenario has been
/// applied to the freshly configured formation.
struct FinalFormation
{
    InteractionTopology topology;
    DesiredCopies copies;
    std::vector<AgentParams> params;
};
FinalFormation final_formation(const Scenario& scenario);

struct EquilibriumPrediction
{
    bool closed_form = true;
    std::optional<double> delta;        ///< common coupling argument, closed form only
    std::vector<double> residuals;      ///< per-agent coupling arguments
    std::vector<double> steady_speeds;  ///< per-agent linear speed, m/s
    double speed_offset = 0.0;          ///< steady speed minus nominal (agent 0), m/s
    Eigen::VectorXd steady_shifts;
};

/// Balanced steady state of the frozen (non-adapting) formation. Uses the
/// closed form delta = -sum(x_d)/n on chains with uniform parameters and
/// falls back to solve_equilibrium_numeric otherwise.
EquilibriumPrediction predict_post_loss_equilibrium(const InteractionTopology& topology, const DesiredCopies& copies,
                                                    std::span<const AgentParams> params);

struct EquilibriumSearch
{
    int starts = 50;
    std::uint64_t seed = 7;
    double spread = 1.0; ///< start perturbation around the copies, rad
    int max_iterations = 200;
    double tolerance = 1e-13; ///< on || dp/dt ||_inf
    double distinct = 1e-4;   ///< roots closer than this are merged
};

struct EquilibriumSolution
{
    std::vector<Eigen::VectorXd> roots;
    int converged_starts = 0;
    int failed_starts = 0;

    /// False when no start converged; roots is then empty by failure, not by
    /// absence of equilibria.
    bool conclusive() const { return converged_starts > 0; }
};

/// Newton search for dp/dt = 0 in pattern space from seeded random starts.
EquilibriumSolution solve_equilibrium_numeric(const InteractionTopology& topology, const DesiredCopies& copies,
                                              std::span<const AgentParams> params, const EquilibriumSearch& search = {});

/// First time from `from_time` after which |value| stays within `band`.
std::optional<double> settling_time(std::span<const double> times, std::span<const double> values, double band,
                                    double from_time = 0.0);

struct RunSummary
{
    double final_time = 0.0;
    std::vector<std::string> edge_labels;
    std::vector<double> shift_error_tail; ///< shift - tail copy, final sample
    std::vector<double> shift_error_head;
    std::vector<AgentId> agents;
    std::vector<double> speeds;
    double max_abs_shift_error = 0.0;
    double max_abs_interaction = 0.0;
    double max_copy_mismatch = 0.0;
    double e = 0.0;
    double v = 0.0;

    std::string to_text() const;
};

RunSummary summarize(const Trace& trace);

std::string format_prediction(const Scenario& scenario, const FinalFormation& formation,
                              const EquilibriumPrediction& prediction);

} // namespace flockadapt
