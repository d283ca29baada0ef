#pragma once

// Interaction topology and the linear-algebraic pattern layer.
//
// Phases Q (one per agent) and edge phase shifts P (one per interaction) are
// related by P = L Q, where each row of L holds a -1 at the tail agent and a
// +1 at the head agent. Desired shifts are kept as per-endpoint copies so that
// each agent owns its own targets; after an agent loss the two copies of an
// edge may disagree.

#include <flockadapt/error.hpp>

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace flockadapt {

using AgentId = int;

/// Wraps an angle to (-pi, pi].
double wrap_angle(double angle);

struct Edge
{
    std::size_t tail; ///< agent index (not id)
    std::size_t head;
};

enum class End { tail = 0, head = 1 };

class InteractionTopology
{
public:
    /// Builds a topology from explicit edges given as agent index pairs.
    /// Throws TopologyError for fewer than 2 agents, duplicate ids, self loops
    /// or isolated agents.
    static InteractionTopology from_edges(std::vector<AgentId> agent_ids, std::vector<Edge> edges);

    std::size_t n_agents() const { return agent_ids_.size(); }
    std::size_t n_edges() const { return edges_.size(); }

    const std::vector<AgentId>& agent_ids() const { return agent_ids_; }
    const std::vector<Edge>& edges() const { return edges_; }
    const Edge& edge(std::size_t k) const { return edges_.at(k); }

    /// Index of an agent id; nullopt if absent.
    std::optional<std::size_t> index_of(AgentId id) const;

    /// Incidence matrix, n_edges x n_agents.
    const Eigen::MatrixXd& incidence() const { return l_; }
    /// Moore-Penrose pseudoinverse of the incidence matrix, n_agents x n_edges.
    const Eigen::MatrixXd& pseudoinverse() const { return l_pinv_; }
    /// Orthonormal basis of ker L, one column per basis vector.
    const Eigen::MatrixXd& kernel_basis() const { return kernel_; }

    std::size_t rank() const { return rank_; }
    bool full_row_rank() const { return rank_ == n_edges(); }

    /// True when edges are exactly (0,1), (1,2), ..., (n-2, n-1).
    bool is_chain() const;

    /// "tail-head" label using agent ids, e.g. "2-4".
    std::string edge_label(std::size_t k) const;

    /// Which end of edge k the agent index sits on; nullopt if not incident.
    std::optional<End> end_of(std::size_t k, std::size_t agent) const;

private:
    InteractionTopology() = default;

    std::vector<AgentId> agent_ids_;
    std::vector<Edge> edges_;
    Eigen::MatrixXd l_;
    Eigen::MatrixXd l_pinv_;
    Eigen::MatrixXd kernel_;
    std::size_t rank_ = 0;
};

/// Open chain 1-2, 2-3, ... over the given ids in order.
InteractionTopology build_chain_topology(std::span<const AgentId> agent_ids);

/// Per-edge, per-endpoint values. Used for the desired shift copies p_dk^(i)
/// as well as for their time derivatives.
class DesiredCopies
{
public:
    DesiredCopies() = default;
    explicit DesiredCopies(std::size_t n_edges)
        : copies_(n_edges)
    {
    }

    /// Both endpoint copies of every edge set from one value per edge.
    static DesiredCopies consistent(const Eigen::VectorXd& per_edge);

    std::size_t n_edges() const { return copies_.size(); }

    void set(std::size_t edge, End end, double value);
    /// Throws TopologyError naming the edge and endpoint when the copy is missing.
    double at(std::size_t edge, End end) const;
    bool has(std::size_t edge, End end) const;

    /// Copy held by a given agent on a given edge, using the topology for
    /// incidence and naming.
    double held_by(const InteractionTopology& topology, std::size_t edge, std::size_t agent) const;

    /// Flat layout [e0.tail, e0.head, e1.tail, ...]. Every copy must be present.
    Eigen::VectorXd flatten() const;
    static DesiredCopies from_flat(const Eigen::VectorXd& flat);

private:
    std::vector<std::array<std::optional<double>, 2>> copies_;
};

using PhaseVector = Eigen::VectorXd;
using PatternVector = Eigen::VectorXd;

struct FormationVectors
{
    Eigen::VectorXd x;   ///< -L^T p
    Eigen::VectorXd x_d; ///< agent-local targets assembled from endpoint copies
};

/// Per-edge interaction values I_k^i for both endpoints.
struct EdgeInteractions
{
    double tail;
    double head;
};

/// P = L Q, evaluated as head minus tail differences.
PatternVector pattern_of(const InteractionTopology& topology, const PhaseVector& q);

FormationVectors formation_vectors(const InteractionTopology& topology, const PatternVector& p, const DesiredCopies& d);

/// (I - L L^+) p_d. Zero iff some Q realizes p_d.
Eigen::VectorXd attainability_residual(const InteractionTopology& topology, const Eigen::VectorXd& p_d);

/// 1/2 sum (p_k - p_dk)^2 with wrapped errors.
double objective_e(const PatternVector& p, const Eigen::VectorXd& p_d);

/// Interaction form 1/4 sum_i sum_k (I_k^i)^2 over endpoint copies, wrapped.
/// Equals the per-edge form when copies agree.
double objective_e(const InteractionTopology& topology, const PatternVector& p, const DesiredCopies& d);

/// I_k^i = -L[k,i] * wrap(p_k - p_dk^(i)). Throws TopologyError if agent is not
/// incident to edge.
double interaction(const InteractionTopology& topology, const PatternVector& p, const DesiredCopies& d, std::size_t edge,
                   std::size_t agent);

std::vector<EdgeInteractions> interactions(const InteractionTopology& topology, const PatternVector& p,
                                           const DesiredCopies& d);

/// Per-agent coupling argument x_i - x_di, computed as sum_k I_k^i from wrapped
/// edge errors.
Eigen::VectorXd formation_residuals(const InteractionTopology& topology, const PatternVector& p, const DesiredCopies& d);

} // namespace flockadapt
