#include <flockadapt/engine.hpp>
#include <flockadapt/random.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace flockadapt {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();
constexpr Eigen::Index vehicle_block = 5; // x, y, heading, speed, turn rate

bool is_multiple(double value, double step)
{
    const double ratio = value / step;
    return std::abs(ratio - std::round(ratio)) <= 1e-9 * std::max(1.0, std::abs(ratio));
}

std::int64_t to_steps(double t, double dt)
{
    return static_cast<std::int64_t>(std::llround(t / dt));
}

VehicleState unpack_vehicle(const Eigen::VectorXd& y, std::size_t agent)
{
    const Eigen::Index b = static_cast<Eigen::Index>(agent) * vehicle_block;
    VehicleState v;
    v.position = {y(b), y(b + 1)};
    v.heading = y(b + 2);
    v.speed = y(b + 3);
    v.turn_rate = y(b + 4);
    return v;
}

void pack_vehicle(Eigen::VectorXd& y, std::size_t agent, const VehicleState& v)
{
    const Eigen::Index b = static_cast<Eigen::Index>(agent) * vehicle_block;
    y(b) = v.position.x;
    y(b + 1) = v.position.y;
    y(b + 2) = v.heading;
    y(b + 3) = v.speed;
    y(b + 4) = v.turn_rate;
}

double summed_potential(const Eigen::VectorXd& residuals, std::span<const AgentParams> params)
{
    double v = 0.0;
    for (Eigen::Index i = 0; i < residuals.size(); ++i) {
        v += CouplingFunction{CouplingKind::arctan, params[static_cast<std::size_t>(i)]}.antiderivative(residuals(i));
    }
    return v;
}

// Live simulation state between events.
struct Formation
{
    InteractionTopology topology;
    std::vector<AgentParams> params;
    Eigen::VectorXd y;               // agent block followed by flat copies
    std::vector<double> phase_ref;   // vehicle model: last unwrapped phase per agent
};

class Simulator
{
public:
    explicit Simulator(const Scenario& s)
        : scenario_(s)
        , stride_(s.model == ModelKind::vehicle ? vehicle_block : 1)
        , start_(s.adaptation_start())
    {
    }

    Trace run()
    {
        Trace trace;
        trace.scenario = scenario_;
        trace.agents = scenario_.agents;
        collect_edges(trace);

        Formation f = initial_formation();
        std::vector<LossEvent> events = scenario_.events;
        std::stable_sort(events.begin(), events.end(),
                         [](const LossEvent& a, const LossEvent& b) { return a.time < b.time; });
        std::size_t next_event = 0;

        const std::int64_t steps = scenario_.steps();
        const std::int64_t stride = scenario_.record_stride();
        for (std::int64_t s = 0;; ++s) {
            const double t = static_cast<double>(s) * scenario_.dt;
            while (next_event < events.size() && to_steps(events[next_event].time, scenario_.dt) == s) {
                f = apply_loss(f, events[next_event].lost_agent);
                ++next_event;
            }
            if (s % stride == 0) {
                trace.samples.push_back(record(trace, f, t));
            }
            if (s >= steps) {
                break;
            }
            step(f, t);
        }
        return trace;
    }

private:
    void collect_edges(Trace& trace) const
    {
        auto add = [&](const InteractionTopology& topo) {
            for (std::size_t k = 0; k < topo.n_edges(); ++k) {
                const Edge& e = topo.edge(k);
                TraceEdge te{topo.agent_ids()[e.tail], topo.agent_ids()[e.head]};
                if (std::find(trace.edges.begin(), trace.edges.end(), te) == trace.edges.end()) {
                    trace.edges.push_back(te);
                }
            }
        };
        InteractionTopology topo = build_chain_topology(scenario_.agents);
        DesiredCopies copies = DesiredCopies::consistent(scenario_.desired_shifts);
        add(topo);
        std::vector<LossEvent> events = scenario_.events;
        std::stable_sort(events.begin(), events.end(),
                         [](const LossEvent& a, const LossEvent& b) { return a.time < b.time; });
        for (const LossEvent& ev : events) {
            LossOutcome out = apply_agent_loss(topo, copies, ev.lost_agent);
            topo = std::move(out.topology);
            copies = std::move(out.copies);
            add(topo);
        }
    }

    Formation initial_formation() const
    {
        const Eigen::VectorXd q0 = initial_phases(scenario_);
        const auto n = static_cast<Eigen::Index>(scenario_.agents.size());
        const Eigen::VectorXd copies = DesiredCopies::consistent(scenario_.desired_shifts).flatten();
        Formation f{build_chain_topology(scenario_.agents), scenario_.params, Eigen::VectorXd(), {}};
        f.y.resize(n * stride_ + copies.size());
        if (scenario_.model == ModelKind::phase) {
            f.y.head(n) = q0;
        } else {
            for (Eigen::Index i = 0; i < n; ++i) {
                const AgentParams& a = f.params[static_cast<std::size_t>(i)];
                const double radius = scenario_.initial_radius.value_or(a.rho);
                pack_vehicle(f.y, static_cast<std::size_t>(i),
                             vehicle_on_orbit({}, radius, q0(i), a.v_nominal, scenario_.guidance.direction));
                f.phase_ref.push_back(q0(i));
            }
        }
        f.y.tail(copies.size()) = copies;
        return f;
    }

    Formation apply_loss(const Formation& f, AgentId lost) const
    {
        const Eigen::Index n = static_cast<Eigen::Index>(f.topology.n_agents());
        const DesiredCopies copies = DesiredCopies::from_flat(f.y.tail(f.y.size() - n * stride_));
        LossOutcome out = apply_agent_loss(f.topology, copies, lost);

        const auto survivors = static_cast<Eigen::Index>(out.survivors.size());
        const Eigen::VectorXd flat = out.copies.flatten();
        Formation next{std::move(out.topology), {}, Eigen::VectorXd(survivors * stride_ + flat.size()), {}};
        for (Eigen::Index j = 0; j < survivors; ++j) {
            const auto old = static_cast<Eigen::Index>(out.survivors[static_cast<std::size_t>(j)]);
            next.y.segment(j * stride_, stride_) = f.y.segment(old * stride_, stride_);
            next.params.push_back(f.params[static_cast<std::size_t>(old)]);
            if (!f.phase_ref.empty()) {
                next.phase_ref.push_back(f.phase_ref[static_cast<std::size_t>(old)]);
            }
        }
        next.y.tail(flat.size()) = flat;
        return next;
    }

    // Agent phases: state for the phase model, measured geometry otherwise.
    Eigen::VectorXd phases(const Formation& f, const Eigen::VectorXd& y) const
    {
        const auto n = static_cast<Eigen::Index>(f.topology.n_agents());
        if (scenario_.model == ModelKind::phase) {
            return y.head(n);
        }
        Eigen::VectorXd q(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto idx = static_cast<std::size_t>(i);
            q(i) = phase_of_position(unpack_vehicle(y, idx), {}, scenario_.guidance.direction, f.phase_ref[idx]);
        }
        return q;
    }

    Eigen::VectorXd rhs(const Formation& f, double t_step, const Eigen::VectorXd& y) const
    {
        const auto n = static_cast<Eigen::Index>(f.topology.n_agents());
        const DesiredCopies copies = DesiredCopies::from_flat(y.tail(y.size() - n * stride_));
        const Eigen::VectorXd q = phases(f, y);
        const PatternVector p = pattern_of(f.topology, q);
        const Eigen::VectorXd residual = formation_residuals(f.topology, p, copies);

        Eigen::VectorXd dy(y.size());
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto idx = static_cast<std::size_t>(i);
            const AgentParams& a = f.params[idx];
            const double coupling = coupling_fplus(residual(i), a);
            if (scenario_.model == ModelKind::phase) {
                dy(i) = a.omega + coupling;
            } else {
                const VehicleState v = unpack_vehicle(y, idx);
                const GuidanceCommand cmd =
                    orbit_guidance(v, {}, a.rho, speed_command_from_coupling(coupling, a), scenario_.guidance);
                pack_vehicle(dy, idx, vehicle_rates(v, cmd, scenario_.guidance));
            }
        }
        // activity is frozen over the whole step so RK4 stages see one vector field
        dy.tail(y.size() - n * stride_) =
            desired_rates(f.topology, p, copies, scenario_.adaptation, t_step, start_).flatten();
        return dy;
    }

    void step(Formation& f, double t)
    {
        const double t_step = t + 1e-9 * scenario_.dt;
        const OdeRhs field = [&](double, const Eigen::VectorXd& y) { return rhs(f, t_step, y); };
        try {
            f.y = step_rk4(field, t, f.y, scenario_.dt);
        } catch (const NonFiniteDerivative& err) {
            throw NumericError("non-finite derivative at t = " + std::to_string(t) + " in " +
                               component_name(f, err.component()));
        }
        if (scenario_.model == ModelKind::vehicle) {
            const Eigen::VectorXd q = phases(f, f.y);
            f.phase_ref.assign(q.begin(), q.end());
        }
    }

    std::string component_name(const Formation& f, Eigen::Index c) const
    {
        const auto n = static_cast<Eigen::Index>(f.topology.n_agents());
        if (c < n * stride_) {
            static const char* vehicle_fields[] = {"x", "y", "heading", "speed", "turn rate"};
            const AgentId id = f.topology.agent_ids()[static_cast<std::size_t>(c / stride_)];
            if (scenario_.model == ModelKind::phase) {
                return "phase of agent " + std::to_string(id);
            }
            return std::string(vehicle_fields[c % stride_]) + " of agent " + std::to_string(id);
        }
        const Eigen::Index k = (c - n * stride_) / 2;
        const Edge& e = f.topology.edge(static_cast<std::size_t>(k));
        const AgentId holder = f.topology.agent_ids()[(c - n * stride_) % 2 == 0 ? e.tail : e.head];
        return "desired copy of edge " + f.topology.edge_label(static_cast<std::size_t>(k)) + " held by agent " +
               std::to_string(holder);
    }

    TraceSample record(const Trace& trace, const Formation& f, double t) const
    {
        const auto n = static_cast<Eigen::Index>(f.topology.n_agents());
        const DesiredCopies copies = DesiredCopies::from_flat(f.y.tail(f.y.size() - n * stride_));
        const Eigen::VectorXd q = phases(f, f.y);
        const PatternVector p = pattern_of(f.topology, q);
        const Eigen::VectorXd residual = formation_residuals(f.topology, p, copies);
        const FormationVectors fv = formation_vectors(f.topology, p, copies);

        const std::size_t na = trace.agents.size();
        const std::size_t ne = trace.edges.size();
        TraceSample sample;
        sample.time = t;
        for (auto* col : {&sample.phase, &sample.rate, &sample.speed, &sample.x, &sample.coupling, &sample.radius}) {
            col->assign(na, nan);
        }
        for (auto* col : {&sample.shift, &sample.desired_tail, &sample.desired_head}) {
            col->assign(ne, nan);
        }

        for (Eigen::Index i = 0; i < n; ++i) {
            const auto idx = static_cast<std::size_t>(i);
            const AgentParams& a = f.params[idx];
            const std::size_t col = *trace.agent_column(f.topology.agent_ids()[idx]);
            const double coupling = coupling_fplus(residual(i), a);
            sample.phase[col] = q(i);
            sample.x[col] = fv.x(i);
            sample.coupling[col] = coupling;
            if (scenario_.model == ModelKind::phase) {
                sample.rate[col] = a.omega + coupling;
                sample.speed[col] = a.rho * sample.rate[col];
                sample.radius[col] = a.rho;
            } else {
                const VehicleState v = unpack_vehicle(f.y, idx);
                const double r2 = v.position.x * v.position.x + v.position.y * v.position.y;
                const double vx = v.speed * std::cos(v.heading);
                const double vy = v.speed * std::sin(v.heading);
                const double sign = scenario_.guidance.direction == OrbitDirection::ccw ? 1.0 : -1.0;
                sample.rate[col] = sign * (v.position.x * vy - v.position.y * vx) / r2;
                sample.speed[col] = v.speed;
                sample.radius[col] = std::sqrt(r2);
            }
        }
        for (std::size_t k = 0; k < f.topology.n_edges(); ++k) {
            const Edge& e = f.topology.edge(k);
            const std::size_t col =
                *trace.edge_column(f.topology.agent_ids()[e.tail], f.topology.agent_ids()[e.head]);
            sample.shift[col] = p(static_cast<Eigen::Index>(k));
            sample.desired_tail[col] = copies.at(k, End::tail);
            sample.desired_head[col] = copies.at(k, End::head);
        }
        sample.e = objective_e(f.topology, p, copies);
        sample.v = summed_potential(residual, f.params);
        sample.adaptation_active = scenario_.adaptation.active_at(t + 1e-9 * scenario_.dt, start_);
        sample.lyapunov_rate =
            sample.adaptation_active ? lyapunov_rate(f.topology, p, copies, scenario_.adaptation) : 0.0;
        return sample;
    }

    const Scenario& scenario_;
    Eigen::Index stride_;
    double start_;
};

} // namespace

std::string_view to_string(ModelKind kind)
{
    return kind == ModelKind::phase ? "phase" : "vehicle";
}

std::string_view to_string(InitialPhaseMode mode)
{
    switch (mode) {
    case InitialPhaseMode::pattern_perturbed:
        return "pattern_perturbed";
    case InitialPhaseMode::equispaced_perturbed:
        return "equispaced_perturbed";
    case InitialPhaseMode::explicit_list:
        return "explicit";
    }
    return "pattern_perturbed";
}

void Scenario::validate() const
{
    std::vector<std::string> problems;
    auto check = [&](bool ok, const std::string& msg) {
        if (!ok) {
            problems.push_back(msg);
        }
    };

    check(dt > 0.0 && std::isfinite(dt), "scenario.dt_s must be positive");
    check(duration >= 0.0 && std::isfinite(duration), "scenario.duration_s must be non-negative");
    check(seed <= max_seed, "scenario.seed must not exceed 2^53");
    check(record_period >= dt, "scenario.record_period_s must be at least dt_s");
    if (dt > 0.0) {
        check(is_multiple(duration, dt), "scenario.duration_s must be a multiple of dt_s");
        check(is_multiple(record_period, dt), "scenario.record_period_s must be a multiple of dt_s");
    }

    check(agents.size() >= 2, "formation.agents needs at least 2 agents");
    {
        std::vector<AgentId> sorted = agents;
        std::sort(sorted.begin(), sorted.end());
        check(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), "formation.agents has duplicate ids");
    }
    check(params.size() == agents.size(), "per-agent parameter count must match formation.agents");
    for (const AgentParams& p : params) {
        try {
            p.validate();
        } catch (const ValidationError& e) {
            problems.push_back(std::string("formation: ") + e.what());
        }
    }
    if (!agents.empty()) {
        check(static_cast<std::size_t>(desired_shifts.size()) + 1 == agents.size(),
              "formation.desired_shifts_rad must have agents - 1 entries");
    }
    for (Eigen::Index k = 0; k < desired_shifts.size(); ++k) {
        check(std::isfinite(desired_shifts(k)), "formation.desired_shifts_rad entries must be finite");
    }

    try {
        adaptation.validate();
    } catch (const ValidationError& e) {
        problems.push_back(std::string("adaptation: ") + e.what());
    }

    check(initial_jitter >= 0.0 && std::isfinite(initial_jitter), "scenario.initial_jitter_rad must be non-negative");
    if (initial_mode == InitialPhaseMode::explicit_list) {
        check(initial_phases.size() == agents.size(), "scenario.initial_phases_rad must have one entry per agent");
    }

    if (model == ModelKind::vehicle) {
        try {
            guidance.validate();
        } catch (const ValidationError& e) {
            problems.push_back(std::string("model: ") + e.what());
        }
        if (initial_radius) {
            check(*initial_radius > 0.0, "model.initial_radius_m must be positive");
        }
        for (const AgentParams& p : params) {
            check(p.v_nominal - p.v_f >= guidance.v_min - 1e-12 && p.v_nominal + p.v_f <= guidance.v_max + 1e-12,
                  "model: nominal_speed_mps +/- v_f_mps must lie inside [v_min_mps, v_max_mps]");
            break;
        }
    }

    std::vector<AgentId> alive = agents;
    std::vector<LossEvent> ordered = events;
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const LossEvent& a, const LossEvent& b) { return a.time < b.time; });
    for (const LossEvent& ev : ordered) {
        const std::string where = "event at t_s = " + std::to_string(ev.time);
        check(ev.time >= 0.0 && ev.time <= duration, where + ": time must lie within [0, duration_s]");
        if (dt > 0.0) {
            check(is_multiple(ev.time, dt), where + ": time must be a multiple of dt_s");
        }
        auto it = std::find(alive.begin(), alive.end(), ev.lost_agent);
        if (it == alive.end()) {
            problems.push_back(where + ": agent " + std::to_string(ev.lost_agent) +
                               " is unknown or already lost");
            continue;
        }
        alive.erase(it);
        check(alive.size() >= 2, where + ": losing agent " + std::to_string(ev.lost_agent) +
                                     " would leave fewer than 2 agents");
    }

    if (!problems.empty()) {
        std::string msg = "invalid scenario '" + name + "':";
        for (const std::string& p : problems) {
            msg += "\n  - " + p;
        }
        throw ValidationError(msg);
    }
}

double Scenario::adaptation_start() const
{
    if (adaptation.start_time) {
        return *adaptation.start_time;
    }
    double first = std::numeric_limits<double>::infinity();
    for (const LossEvent& ev : events) {
        first = std::min(first, ev.time);
    }
    return std::isfinite(first) ? first : 0.0;
}

std::int64_t Scenario::steps() const
{
    return to_steps(duration, dt);
}

std::int64_t Scenario::record_stride() const
{
    return std::max<std::int64_t>(1, to_steps(record_period, dt));
}

Scenario canonical_scenario()
{
    Scenario s;
    s.name = "canonical_4uav";
    s.agents = {1, 2, 3, 4};
    s.params.assign(4, AgentParams::uniform_cruise(12.0, 100.0, 3.0, 5.0));
    s.desired_shifts = Eigen::Vector3d(2.0 * std::numbers::pi / 3.0, 9.0 * std::numbers::pi / 13.0,
                                       18.0 * std::numbers::pi / 29.0);
    return s;
}

Eigen::VectorXd initial_phases(const Scenario& scenario)
{
    const auto n = static_cast<Eigen::Index>(scenario.agents.size());
    Eigen::VectorXd q(n);
    if (scenario.initial_mode == InitialPhaseMode::explicit_list) {
        for (Eigen::Index i = 0; i < n; ++i) {
            q(i) = scenario.initial_phases.at(static_cast<std::size_t>(i));
        }
        return q;
    }
    std::mt19937_64 gen(scenario.seed);
    double base = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (scenario.initial_mode == InitialPhaseMode::equispaced_perturbed) {
            base = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
        } else if (i > 0) {
            base += scenario.desired_shifts(i - 1);
        }
        q(i) = base + uniform_draw(gen, -scenario.initial_jitter, scenario.initial_jitter);
    }
    return q;
}

std::optional<std::size_t> Trace::agent_column(AgentId id) const
{
    auto it = std::find(agents.begin(), agents.end(), id);
    if (it == agents.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - agents.begin());
}

std::optional<std::size_t> Trace::edge_column(AgentId tail, AgentId head) const
{
    auto it = std::find(edges.begin(), edges.end(), TraceEdge{tail, head});
    if (it == edges.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - edges.begin());
}

Eigen::VectorXd step_rk4(const OdeRhs& rhs, double t, const Eigen::VectorXd& y, double dt)
{
    if (!(dt > 0.0)) {
        throw ValidationError("step_rk4: dt must be positive");
    }
    auto checked = [&](double ts, const Eigen::VectorXd& ys) {
        Eigen::VectorXd k = rhs(ts, ys);
        for (Eigen::Index i = 0; i < k.size(); ++i) {
            if (!std::isfinite(k(i))) {
                throw NonFiniteDerivative(i, "non-finite derivative in component " + std::to_string(i));
            }
        }
        return k;
    };
    const Eigen::VectorXd k1 = checked(t, y);
    const Eigen::VectorXd k2 = checked(t + 0.5 * dt, y + 0.5 * dt * k1);
    const Eigen::VectorXd k3 = checked(t + 0.5 * dt, y + 0.5 * dt * k2);
    const Eigen::VectorXd k4 = checked(t + dt, y + dt * k3);
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Trace run_scenario(const Scenario& scenario)
{
    scenario.validate();
    return Simulator(scenario).run();
}

FinalFormation final_formation(const Scenario& scenario)
{
    scenario.validate();
    InteractionTopology topo = build_chain_topology(scenario.agents);
    DesiredCopies copies = DesiredCopies::consistent(scenario.desired_shifts);
    std::vector<AgentParams> params = scenario.params;
    std::vector<LossEvent> events = scenario.events;
    std::stable_sort(events.begin(), events.end(),
                     [](const LossEvent& a, const LossEvent& b) { return a.time < b.time; });
    for (const LossEvent& ev : events) {
        LossOutcome out = apply_agent_loss(topo, copies, ev.lost_agent);
        std::vector<AgentParams> kept;
        for (std::size_t old : out.survivors) {
            kept.push_back(params[old]);
        }
        topo = std::move(out.topology);
        copies = std::move(out.copies);
        params = std::move(kept);
    }
    return {std::move(topo), std::move(copies), std::move(params)};
}

namespace {

Eigen::VectorXd pattern_space_rates(const InteractionTopology& topology, const PatternVector& p,
                                    const DesiredCopies& copies, std::span<const AgentParams> params)
{
    const Eigen::VectorXd residual = formation_residuals(topology, p, copies);
    Eigen::VectorXd rates(residual.size());
    for (Eigen::Index i = 0; i < residual.size(); ++i) {
        const AgentParams& a = params[static_cast<std::size_t>(i)];
        rates(i) = a.omega + coupling_fplus(residual(i), a);
    }
    return topology.incidence() * rates;
}

EquilibriumPrediction prediction_from_pattern(const InteractionTopology& topology, const DesiredCopies& copies,
                                              std::span<const AgentParams> params, const PatternVector& p)
{
    EquilibriumPrediction out;
    out.steady_shifts = p;
    const Eigen::VectorXd residual = formation_residuals(topology, p, copies);
    for (Eigen::Index i = 0; i < residual.size(); ++i) {
        const AgentParams& a = params[static_cast<std::size_t>(i)];
        out.residuals.push_back(residual(i));
        out.steady_speeds.push_back(a.rho * (a.omega + coupling_fplus(residual(i), a)));
    }
    out.speed_offset = out.steady_speeds.front() - params.front().v_nominal;
    return out;
}

} // namespace

EquilibriumPrediction predict_post_loss_equilibrium(const InteractionTopology& topology, const DesiredCopies& copies,
                                                    std::span<const AgentParams> params)
{
    if (params.size() != topology.n_agents()) {
        throw DimensionError("predict: parameter count does not match topology");
    }
    if (!uniform(params) || !topology.is_chain()) {
        const EquilibriumSolution sol = solve_equilibrium_numeric(topology, copies, params);
        if (sol.roots.empty()) {
            throw NumericError("equilibrium search inconclusive: no start converged");
        }
        // pick the root nearest to the stored copies
        const Eigen::VectorXd mid = 0.5 * (copies.flatten()(Eigen::seq(0, Eigen::last, 2)) +
                                           copies.flatten()(Eigen::seq(1, Eigen::last, 2)));
        const auto nearest = std::min_element(sol.roots.begin(), sol.roots.end(), [&](const auto& a, const auto& b) {
            return (a - mid).norm() < (b - mid).norm();
        });
        EquilibriumPrediction out = prediction_from_pattern(topology, copies, params, *nearest);
        out.closed_form = false;
        return out;
    }

    const std::size_t n = topology.n_agents();
    const double delta = consistency_report(copies, topology).sigma / static_cast<double>(n);

    // every coupling argument equals delta; walk the chain edge by edge
    PatternVector p(static_cast<Eigen::Index>(topology.n_edges()));
    double carried = 0.0; // error the current agent sees on its left edge
    for (std::size_t k = 0; k < topology.n_edges(); ++k) {
        const double tail_error = delta + carried;
        p(static_cast<Eigen::Index>(k)) = copies.at(k, End::tail) + tail_error;
        carried = p(static_cast<Eigen::Index>(k)) - copies.at(k, End::head);
    }

    EquilibriumPrediction out;
    out.delta = delta;
    out.steady_shifts = p;
    const AgentParams& a = params.front();
    out.residuals.assign(n, delta);
    out.steady_speeds.assign(n, a.rho * (a.omega + coupling_fplus(delta, a)));
    out.speed_offset = out.steady_speeds.front() - a.v_nominal;
    return out;
}

EquilibriumSolution solve_equilibrium_numeric(const InteractionTopology& topology, const DesiredCopies& copies,
                                              std::span<const AgentParams> params, const EquilibriumSearch& search)
{
    if (params.size() != topology.n_agents()) {
        throw DimensionError("solve_equilibrium_numeric: parameter count does not match topology");
    }
    const auto m = static_cast<Eigen::Index>(topology.n_edges());
    const auto g = [&](const PatternVector& p) { return pattern_space_rates(topology, p, copies, params); };

    Eigen::VectorXd center(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        center(k) = 0.5 * (copies.at(static_cast<std::size_t>(k), End::tail) +
                           copies.at(static_cast<std::size_t>(k), End::head));
    }

    EquilibriumSolution sol;
    std::mt19937_64 gen(search.seed);
    for (int s = 0; s < search.starts; ++s) {
        PatternVector p(m);
        for (Eigen::Index k = 0; k < m; ++k) {
            p(k) = center(k) + uniform_draw(gen, -search.spread, search.spread);
        }

        bool converged = false;
        Eigen::VectorXd gp = g(p);
        for (int it = 0; it < search.max_iterations; ++it) {
            if (gp.lpNorm<Eigen::Infinity>() <= search.tolerance) {
                converged = true;
                break;
            }
            Eigen::MatrixXd jac(m, m);
            constexpr double h = 1e-7;
            for (Eigen::Index j = 0; j < m; ++j) {
                PatternVector hi = p;
                PatternVector lo = p;
                hi(j) += h;
                lo(j) -= h;
                jac.col(j) = (g(hi) - g(lo)) / (2.0 * h);
            }
            const Eigen::VectorXd direction = jac.colPivHouseholderQr().solve(-gp);
            if (!direction.allFinite()) {
                break;
            }
            double lambda = 1.0;
            bool accepted = false;
            while (lambda > 1e-10) {
                const PatternVector trial = p + lambda * direction;
                const Eigen::VectorXd gt = g(trial);
                if (gt.norm() < (1.0 - 1e-4 * lambda) * gp.norm() || gt.lpNorm<Eigen::Infinity>() <= search.tolerance) {
                    p = trial;
                    gp = gt;
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if (!accepted) {
                converged = gp.lpNorm<Eigen::Infinity>() <= search.tolerance;
                break;
            }
        }
        if (!converged && gp.lpNorm<Eigen::Infinity>() <= search.tolerance) {
            converged = true;
        }
        if (!converged) {
            ++sol.failed_starts;
            continue;
        }
        ++sol.converged_starts;

        const bool known = std::any_of(sol.roots.begin(), sol.roots.end(), [&](const Eigen::VectorXd& r) {
            double worst = 0.0;
            for (Eigen::Index k = 0; k < m; ++k) {
                worst = std::max(worst, std::abs(wrap_angle(r(k) - p(k))));
            }
            return worst < search.distinct;
        });
        if (!known) {
            sol.roots.push_back(p.unaryExpr([](double v) { return wrap_angle(v); }));
        }
    }
    return sol;
}

std::optional<double> settling_time(std::span<const double> times, std::span<const double> values, double band,
                                    double from_time)
{
    if (times.size() != values.size()) {
        throw DimensionError("settling_time: times and values differ in length");
    }
    std::optional<double> settled;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < from_time) {
            continue;
        }
        if (!(std::abs(values[i]) <= band)) {
            settled.reset();
        } else if (!settled) {
            settled = times[i];
        }
    }
    return settled;
}

RunSummary summarize(const Trace& trace)
{
    if (trace.samples.empty()) {
        throw ValidationError("cannot summarize an empty trace");
    }
    const TraceSample& last = trace.final_sample();
    RunSummary s;
    s.final_time = last.time;
    s.e = last.e;
    s.v = last.v;
    for (std::size_t k = 0; k < trace.edges.size(); ++k) {
        if (std::isnan(last.shift[k])) {
            continue;
        }
        const double et = wrap_angle(last.shift[k] - last.desired_tail[k]);
        const double eh = wrap_angle(last.shift[k] - last.desired_head[k]);
        s.edge_labels.push_back(trace.edges[k].label());
        s.shift_error_tail.push_back(et);
        s.shift_error_head.push_back(eh);
        s.max_abs_shift_error = std::max({s.max_abs_shift_error, std::abs(et), std::abs(eh)});
        s.max_abs_interaction = s.max_abs_shift_error;
        s.max_copy_mismatch =
            std::max(s.max_copy_mismatch, std::abs(wrap_angle(last.desired_tail[k] - last.desired_head[k])));
    }
    for (std::size_t i = 0; i < trace.agents.size(); ++i) {
        if (!std::isnan(last.speed[i])) {
            s.agents.push_back(trace.agents[i]);
            s.speeds.push_back(last.speed[i]);
        }
    }
    return s;
}

std::string RunSummary::to_text() const
{
    std::ostringstream os;
    os.precision(9);
    os << "final_time_s = " << final_time << "\n";
    for (std::size_t k = 0; k < edge_labels.size(); ++k) {
        os << "shift_error_" << edge_labels[k] << "_rad = " << shift_error_tail[k];
        if (shift_error_head[k] != shift_error_tail[k]) {
            os << " (tail copy), " << shift_error_head[k] << " (head copy)";
        }
        os << "\n";
    }
    for (std::size_t i = 0; i < agents.size(); ++i) {
        os << "speed_" << agents[i] << "_mps = " << speeds[i] << "\n";
    }
    os << "max_abs_shift_error_rad = " << max_abs_shift_error << "\n";
    os << "max_abs_interaction_rad = " << max_abs_interaction << "\n";
    os << "max_copy_mismatch_rad = " << max_copy_mismatch << "\n";
    os << "E = " << e << "\n";
    os << "V = " << v << "\n";
    return os.str();
}

std::string format_prediction(const Scenario& scenario, const FinalFormation& formation,
                              const EquilibriumPrediction& prediction)
{
    std::ostringstream os;
    os.precision(9);
    os << "scenario = " << scenario.name << "\n";
    os << "method = " << (prediction.closed_form ? "closed_form" : "numeric") << "\n";
    if (prediction.delta) {
        os << "delta_rad = " << *prediction.delta << "\n";
    }
    for (std::size_t i = 0; i < prediction.residuals.size(); ++i) {
        os << "residual_" << formation.topology.agent_ids()[i] << "_rad = " << prediction.residuals[i] << "\n";
    }
    os << "speed_offset_mps = " << prediction.speed_offset << "\n";
    for (std::size_t i = 0; i < prediction.steady_speeds.size(); ++i) {
        os << "steady_speed_" << formation.topology.agent_ids()[i] << "_mps = " << prediction.steady_speeds[i] << "\n";
    }
    for (Eigen::Index k = 0; k < prediction.steady_shifts.size(); ++k) {
        os << "steady_shift_" << formation.topology.edge_label(static_cast<std::size_t>(k))
           << "_rad = " << prediction.steady_shifts(k) << "\n";
    }
    if (scenario.adaptation.enabled) {
        os << "note = adaptation enabled: copies drift to the measured shifts, interactions vanish and cruise "
              "returns to the nominal speed\n";
    }
    return os.str();
}

} // namespace flockadapt
