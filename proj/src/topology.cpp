#include <flockadapt/topology.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace flockadapt {

namespace {

constexpr double rank_tolerance = 1e-10;

void require_size(const Eigen::VectorXd& v, std::size_t expected, const char* what)
{
    if (static_cast<std::size_t>(v.size()) != expected) {
        throw DimensionError(std::string(what) + ": expected length " + std::to_string(expected) + ", got " +
                             std::to_string(v.size()));
    }
}

} // namespace

double wrap_angle(double angle)
{
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double wrapped = std::fmod(angle + std::numbers::pi, two_pi);
    if (wrapped <= 0.0) {
        wrapped += two_pi;
    }
    return wrapped - std::numbers::pi;
}

InteractionTopology InteractionTopology::from_edges(std::vector<AgentId> agent_ids, std::vector<Edge> edges)
{
    if (agent_ids.size() < 2) {
        throw TopologyError("topology needs at least 2 agents, got " + std::to_string(agent_ids.size()));
    }
    std::set<AgentId> seen;
    for (AgentId id : agent_ids) {
        if (!seen.insert(id).second) {
            throw TopologyError("duplicate agent id " + std::to_string(id));
        }
    }

    const std::size_t n = agent_ids.size();
    std::vector<int> degree(n, 0);
    for (const Edge& e : edges) {
        if (e.tail >= n || e.head >= n) {
            throw TopologyError("edge references an agent index out of range");
        }
        if (e.tail == e.head) {
            throw TopologyError("self loop on agent " + std::to_string(agent_ids[e.tail]));
        }
        ++degree[e.tail];
        ++degree[e.head];
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (degree[i] == 0) {
            throw TopologyError("agent " + std::to_string(agent_ids[i]) + " has no interaction");
        }
    }

    InteractionTopology t;
    t.agent_ids_ = std::move(agent_ids);
    t.edges_ = std::move(edges);

    const auto m = static_cast<Eigen::Index>(t.edges_.size());
    t.l_ = Eigen::MatrixXd::Zero(m, static_cast<Eigen::Index>(n));
    for (Eigen::Index k = 0; k < m; ++k) {
        const Edge& e = t.edges_[static_cast<std::size_t>(k)];
        t.l_(k, static_cast<Eigen::Index>(e.tail)) = -1.0;
        t.l_(k, static_cast<Eigen::Index>(e.head)) = 1.0;
    }

    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(t.l_);
    cod.setThreshold(rank_tolerance);
    t.l_pinv_ = cod.pseudoInverse();
    t.rank_ = static_cast<std::size_t>(cod.rank());

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(t.l_, Eigen::ComputeFullV);
    const Eigen::VectorXd& sv = svd.singularValues();
    Eigen::Index svd_rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > rank_tolerance) {
            ++svd_rank;
        }
    }
    const Eigen::Index nullity = static_cast<Eigen::Index>(n) - svd_rank;
    t.kernel_ = svd.matrixV().rightCols(nullity);
    for (Eigen::Index c = 0; c < t.kernel_.cols(); ++c) {
        if (t.kernel_.col(c).sum() < 0.0) {
            t.kernel_.col(c) *= -1.0;
        }
    }
    return t;
}

std::optional<std::size_t> InteractionTopology::index_of(AgentId id) const
{
    auto it = std::find(agent_ids_.begin(), agent_ids_.end(), id);
    if (it == agent_ids_.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - agent_ids_.begin());
}

bool InteractionTopology::is_chain() const
{
    if (edges_.size() + 1 != agent_ids_.size()) {
        return false;
    }
    for (std::size_t k = 0; k < edges_.size(); ++k) {
        if (edges_[k].tail != k || edges_[k].head != k + 1) {
            return false;
        }
    }
    return true;
}

std::string InteractionTopology::edge_label(std::size_t k) const
{
    const Edge& e = edges_.at(k);
    return std::to_string(agent_ids_[e.tail]) + "-" + std::to_string(agent_ids_[e.head]);
}

std::optional<End> InteractionTopology::end_of(std::size_t k, std::size_t agent) const
{
    const Edge& e = edges_.at(k);
    if (e.tail == agent) {
        return End::tail;
    }
    if (e.head == agent) {
        return End::head;
    }
    return std::nullopt;
}

InteractionTopology build_chain_topology(std::span<const AgentId> agent_ids)
{
    if (agent_ids.size() < 2) {
        throw TopologyError("chain needs at least 2 agents, got " + std::to_string(agent_ids.size()));
    }
    std::vector<Edge> edges;
    edges.reserve(agent_ids.size() - 1);
    for (std::size_t i = 0; i + 1 < agent_ids.size(); ++i) {
        edges.push_back({i, i + 1});
    }
    return InteractionTopology::from_edges({agent_ids.begin(), agent_ids.end()}, std::move(edges));
}

DesiredCopies DesiredCopies::consistent(const Eigen::VectorXd& per_edge)
{
    DesiredCopies d(static_cast<std::size_t>(per_edge.size()));
    for (Eigen::Index k = 0; k < per_edge.size(); ++k) {
        d.set(static_cast<std::size_t>(k), End::tail, per_edge(k));
        d.set(static_cast<std::size_t>(k), End::head, per_edge(k));
    }
    return d;
}

void DesiredCopies::set(std::size_t edge, End end, double value)
{
    if (edge >= copies_.size()) {
        throw DimensionError("desired copy edge index " + std::to_string(edge) + " out of range");
    }
    if (!std::isfinite(value)) {
        throw NumericError("desired copy on edge " + std::to_string(edge) + " is not finite");
    }
    copies_[edge][static_cast<std::size_t>(end)] = value;
}

bool DesiredCopies::has(std::size_t edge, End end) const
{
    return edge < copies_.size() && copies_[edge][static_cast<std::size_t>(end)].has_value();
}

double DesiredCopies::at(std::size_t edge, End end) const
{
    if (!has(edge, end)) {
        throw TopologyError("missing desired copy for edge " + std::to_string(edge) + " at " +
                            (end == End::tail ? "tail" : "head") + " endpoint");
    }
    return *copies_[edge][static_cast<std::size_t>(end)];
}

double DesiredCopies::held_by(const InteractionTopology& topology, std::size_t edge, std::size_t agent) const
{
    auto end = topology.end_of(edge, agent);
    if (!end) {
        throw TopologyError("agent " + std::to_string(topology.agent_ids().at(agent)) + " is not incident to edge " +
                            topology.edge_label(edge));
    }
    if (!has(edge, *end)) {
        throw TopologyError("missing desired copy for edge " + topology.edge_label(edge) + " at agent " +
                            std::to_string(topology.agent_ids()[agent]));
    }
    return *copies_[edge][static_cast<std::size_t>(*end)];
}

Eigen::VectorXd DesiredCopies::flatten() const
{
    Eigen::VectorXd flat(static_cast<Eigen::Index>(2 * copies_.size()));
    for (std::size_t k = 0; k < copies_.size(); ++k) {
        flat(static_cast<Eigen::Index>(2 * k)) = at(k, End::tail);
        flat(static_cast<Eigen::Index>(2 * k + 1)) = at(k, End::head);
    }
    return flat;
}

DesiredCopies DesiredCopies::from_flat(const Eigen::VectorXd& flat)
{
    if (flat.size() % 2 != 0) {
        throw DimensionError("flat desired copies must have even length");
    }
    DesiredCopies d(static_cast<std::size_t>(flat.size() / 2));
    for (std::size_t k = 0; k < d.n_edges(); ++k) {
        d.copies_[k][0] = flat(static_cast<Eigen::Index>(2 * k));
        d.copies_[k][1] = flat(static_cast<Eigen::Index>(2 * k + 1));
    }
    return d;
}

PatternVector pattern_of(const InteractionTopology& topology, const PhaseVector& q)
{
    require_size(q, topology.n_agents(), "phase vector");
    PatternVector p(static_cast<Eigen::Index>(topology.n_edges()));
    for (std::size_t k = 0; k < topology.n_edges(); ++k) {
        const Edge& e = topology.edge(k);
        p(static_cast<Eigen::Index>(k)) = q(static_cast<Eigen::Index>(e.head)) - q(static_cast<Eigen::Index>(e.tail));
    }
    return p;
}

FormationVectors formation_vectors(const InteractionTopology& topology, const PatternVector& p, const DesiredCopies& d)
{
    require_size(p, topology.n_edges(), "pattern vector");
    if (d.n_edges() != topology.n_edges()) {
        throw DimensionError("desired copies cover " + std::to_string(d.n_edges()) + " edges, topology has " +
                             std::to_string(topology.n_edges()));
    }
    const auto n = static_cast<Eigen::Index>(topology.n_agents());
    FormationVectors out{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
    for (std::size_t k = 0; k < topology.n_edges(); ++k) {
        const Edge& e = topology.edge(k);
        const auto pk = p(static_cast<Eigen::Index>(k));
        // L[k,tail] = -1, L[k,head] = +1
        out.x(static_cast<Eigen::Index>(e.tail)) += pk;
        out.x(static_cast<Eigen::Index>(e.head)) -= pk;
        out.x_d(static_cast<Eigen::Index>(e.tail)) += d.held_by(topology, k, e.tail);
        out.x_d(static_cast<Eigen::Index>(e.head)) -= d.held_by(topology, k, e.head);
    }
    return out;
}

Eigen::VectorXd attainability_residual(const InteractionTopology& topology, const Eigen::VectorXd& p_d)
{
    require_size(p_d, topology.n_edges(), "desired pattern");
    return p_d - topology.incidence() * (topology.pseudoinverse() * p_d);
}

double objective_e(const PatternVector& p, const Eigen::VectorXd& p_d)
{
    if (p.size() != p_d.size()) {
        throw DimensionError("objective: pattern and desired pattern lengths differ");
    }
    double sum = 0.0;
    for (Eigen::Index k = 0; k < p.size(); ++k) {
        const double err = wrap_angle(p(k) - p_d(k));
        sum += err * err;
    }
    return 0.5 * sum;
}

double objective_e(const InteractionTopology& topology, const PatternVector& p, const DesiredCopies& d)
{
    double sum = 0.0;
    for (const EdgeInteractions& ik : interactions(topology, p, d)) {
        sum += ik.tail * ik.tail + ik.head * ik.head;
    }
    return 0.25 * sum;
}

double interaction(const InteractionTopology& topology, const PatternVector& p, const DesiredCopies& d, std::size_t edge,
                   std::size_t agent)
{
    require_size(p, topology.n_edges(), "pattern vector");
    const double copy = d.held_by(topology, edge, agent);
    const double l_ki = topology.incidence()(static_cast<Eigen::Index>(edge), static_cast<Eigen::Index>(agent));
    return -l_ki * wrap_angle(p(static_cast<Eigen::Index>(edge)) - copy);
}

std::vector<EdgeInteractions> interactions(const InteractionTopology& topology, const PatternVector& p,
                                           const DesiredCopies& d)
{
    require_size(p, topology.n_edges(), "pattern vector");
    if (d.n_edges() != topology.n_edges()) {
        throw DimensionError("desired copies do not match topology edge count");
    }
    std::vector<EdgeInteractions> out;
    out.reserve(topology.n_edges());
    for (std::size_t k = 0; k < topology.n_edges(); ++k) {
        const double pk = p(static_cast<Eigen::Index>(k));
        // tail: -(-1) * err, head: -(+1) * err
        out.push_back({wrap_angle(pk - d.at(k, End::tail)), -wrap_angle(pk - d.at(k, End::head))});
    }
    return out;
}

Eigen::VectorXd formation_residuals(const InteractionTopology& topology, const PatternVector& p, const DesiredCopies& d)
{
    Eigen::VectorXd r = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(topology.n_agents()));
    const auto per_edge = interactions(topology, p, d);
    for (std::size_t k = 0; k < per_edge.size(); ++k) {
        const Edge& e = topology.edge(k);
        r(static_cast<Eigen::Index>(e.tail)) += per_edge[k].tail;
        r(static_cast<Eigen::Index>(e.head)) += per_edge[k].head;
    }
    return r;
}

} // namespace flockadapt
