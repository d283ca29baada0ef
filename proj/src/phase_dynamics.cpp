#include <flockadapt/phase_dynamics.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace flockadapt {

AgentParams AgentParams::uniform_cruise(double v_nominal, double rho, double v_f, double k_theta)
{
    AgentParams p;
    p.v_nominal = v_nominal;
    p.rho = rho;
    p.v_f = v_f;
    p.k_theta = k_theta;
    p.omega = v_nominal / rho;
    return p;
}

void AgentParams::validate() const
{
    auto positive = [](double v, const char* name) {
        if (!(std::isfinite(v) && v > 0.0)) {
            throw ValidationError(std::string(name) + " must be positive and finite");
        }
    };
    positive(rho, "rho");
    positive(v_f, "v_f");
    positive(k_theta, "k_theta");
    positive(v_nominal, "v_nominal");
    if (!std::isfinite(omega)) {
        throw ValidationError("omega must be finite");
    }
}

bool uniform(std::span<const AgentParams> params)
{
    return std::adjacent_find(params.begin(), params.end(), std::not_equal_to<>()) == params.end();
}

double CouplingFunction::operator()(double u) const
{
    return coupling_fplus(u, params);
}

double CouplingFunction::antiderivative(double u) const
{
    const double gain = params.v_f * 2.0 / (std::numbers::pi * params.rho);
    const double k = params.k_theta;
    return gain * (u * std::atan(k * u) - std::log1p(k * k * u * u) / (2.0 * k));
}

double coupling_fplus(double x, const AgentParams& params)
{
    return params.v_f * (2.0 / (std::numbers::pi * params.rho)) * std::atan(params.k_theta * x);
}

namespace {

void require_params(const InteractionTopology& topology, std::span<const AgentParams> params)
{
    if (params.size() != topology.n_agents()) {
        throw DimensionError("expected " + std::to_string(topology.n_agents()) + " agent parameter sets, got " +
                             std::to_string(params.size()));
    }
}

} // namespace

Eigen::VectorXd phase_rates(const InteractionTopology& topology, const PhaseVector& q, const DesiredCopies& d,
                            std::span<const AgentParams> params)
{
    require_params(topology, params);
    const Eigen::VectorXd residual = formation_residuals(topology, pattern_of(topology, q), d);
    Eigen::VectorXd rates(residual.size());
    for (Eigen::Index i = 0; i < residual.size(); ++i) {
        const AgentParams& a = params[static_cast<std::size_t>(i)];
        rates(i) = a.omega + coupling_fplus(residual(i), a);
    }
    return rates;
}

Eigen::VectorXd pattern_rates(const InteractionTopology& topology, const PhaseVector& q, const DesiredCopies& d,
                              std::span<const AgentParams> params)
{
    return pattern_of(topology, phase_rates(topology, q, d, params));
}

double potential_v(const Eigen::VectorXd& residuals, std::span<const AgentParams> params)
{
    if (static_cast<std::size_t>(residuals.size()) != params.size()) {
        throw DimensionError("potential: residual and parameter counts differ");
    }
    if (!uniform(params)) {
        throw ValidationError("potential V requires uniform agent parameters");
    }
    double v = 0.0;
    for (Eigen::Index i = 0; i < residuals.size(); ++i) {
        v += CouplingFunction{CouplingKind::arctan, params[static_cast<std::size_t>(i)]}.antiderivative(residuals(i));
    }
    return v;
}

double autonomy_defect(const InteractionTopology& topology, const PhaseVector& q, const PhaseField& field, double step)
{
    const auto n = static_cast<Eigen::Index>(topology.n_agents());
    if (q.size() != n) {
        throw DimensionError("autonomy check: phase vector length mismatch");
    }
    Eigen::MatrixXd jac(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        PhaseVector plus = q;
        PhaseVector minus = q;
        plus(j) += step;
        minus(j) -= step;
        jac.col(j) = (field(plus) - field(minus)) / (2.0 * step);
    }
    const Eigen::MatrixXd& l = topology.incidence();
    const Eigen::MatrixXd projector = Eigen::MatrixXd::Identity(n, n) - topology.pseudoinverse() * l;
    // induced infinity norm: largest absolute row sum
    return (l * jac * projector).rowwise().lpNorm<1>().maxCoeff();
}

double autonomy_defect(const InteractionTopology& topology, const PhaseVector& q, const DesiredCopies& d,
                       std::span<const AgentParams> params, double step)
{
    return autonomy_defect(
        topology, q, [&](const PhaseVector& x) { return phase_rates(topology, x, d, params); }, step);
}

CouplingConditions check_coupling_conditions(const std::function<double(double)>& coupling, std::span<const double> grid)
{
    CouplingConditions report;

    const double f0 = coupling(0.0);
    report.zero_at_origin = std::abs(f0) <= 1e-12;
    if (!report.zero_at_origin) {
        std::ostringstream os;
        os << "f(0) = " << f0 << " is not zero";
        report.violations.push_back(os.str());
    }

    constexpr double h = 1e-6;
    const double slope = (coupling(h) - coupling(-h)) / (2.0 * h);
    report.positive_slope = slope > 0.0;
    if (!report.positive_slope) {
        std::ostringstream os;
        os << "f'(0) = " << slope << " is not positive";
        report.violations.push_back(os.str());
    }

    report.sign_condition = true;
    for (double u : grid) {
        if (u == 0.0) {
            continue;
        }
        const double fu = coupling(u);
        if (!(fu * u > 0.0)) {
            report.sign_condition = false;
            std::ostringstream os;
            os << "f(u) * u = " << fu * u << " at u = " << u;
            report.violations.push_back(os.str());
        }
    }
    return report;
}

std::vector<double> symmetric_grid(double extent, int half_points)
{
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(2 * half_points + 1));
    for (int i = -half_points; i <= half_points; ++i) {
        grid.push_back(extent * static_cast<double>(i) / static_cast<double>(half_points));
    }
    return grid;
}

} // namespace flockadapt
