#include <flockadapt/fault.hpp>

#include <algorithm>
#include <cmath>

namespace flockadapt {

LossOutcome apply_agent_loss(const InteractionTopology& topology, const DesiredCopies& copies, AgentId lost)
{
    if (!topology.is_chain()) {
        throw TopologyError("agent loss rewiring is only supported on open chains");
    }
    const auto lost_index = topology.index_of(lost);
    if (!lost_index) {
        throw TopologyError("cannot lose agent " + std::to_string(lost) + ": not in the formation");
    }
    if (topology.n_agents() < 3) {
        throw TopologyError("losing agent " + std::to_string(lost) + " would leave fewer than 2 agents");
    }
    if (copies.n_edges() != topology.n_edges()) {
        throw DimensionError("desired copies do not match topology edge count");
    }

    const std::size_t n = topology.n_agents();
    const std::size_t gone = *lost_index;

    std::vector<AgentId> ids;
    std::vector<std::size_t> survivors;
    for (std::size_t i = 0; i < n; ++i) {
        if (i != gone) {
            ids.push_back(topology.agent_ids()[i]);
            survivors.push_back(i);
        }
    }

    // New edge j joins new agents (j, j+1); map each endpoint back to the old
    // edge that agent used toward the same side.
    DesiredCopies next(n - 2);
    for (std::size_t j = 0; j + 1 < survivors.size(); ++j) {
        const std::size_t old_tail = survivors[j];
        const std::size_t old_head = survivors[j + 1];
        // old edge k joins (k, k+1): tail agent's right edge is old_tail,
        // head agent's left edge is old_head - 1
        next.set(j, End::tail, copies.at(old_tail, End::tail));
        next.set(j, End::head, copies.at(old_head - 1, End::head));
    }

    return {build_chain_topology(ids), std::move(next), std::move(survivors)};
}

double ConsistencyReport::max_mismatch() const
{
    return mismatch.empty() ? 0.0 : *std::max_element(mismatch.begin(), mismatch.end());
}

ConsistencyReport consistency_report(const DesiredCopies& copies, const InteractionTopology& topology)
{
    if (copies.n_edges() != topology.n_edges()) {
        throw DimensionError("desired copies do not match topology edge count");
    }
    ConsistencyReport report;
    for (std::size_t k = 0; k < topology.n_edges(); ++k) {
        const double tail = copies.at(k, End::tail);
        const double head = copies.at(k, End::head);
        report.mismatch.push_back(std::abs(wrap_angle(tail - head)));
        // x_d[tail] += tail copy, x_d[head] -= head copy
        report.sigma -= tail - head;
    }
    return report;
}

} // namespace flockadapt
