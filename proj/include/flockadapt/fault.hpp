#pragma once

#include <flockadapt/topology.hpp>

#include <vector>

namespace flockadapt {

struct LossEvent
{
    double time = 0.0;
    AgentId lost_agent = 0;
};

struct LossOutcome
{
    InteractionTopology topology;
    DesiredCopies copies;
    /// Pre-loss agent index of every survivor, in new index order.
    std::vector<std::size_t> survivors;
};

/// Removes an agent from an open chain and closes the gap.
///
/// Survivors keep their own endpoint copies: interior edges carry over
/// verbatim and the bridging edge takes the tail copy from the lost agent's
/// left edge and the head copy from its right edge. The survivors' x_d is
/// therefore the pre-loss x_d with the lost entry removed.
LossOutcome apply_agent_loss(const InteractionTopology& topology, const DesiredCopies& copies, AgentId lost);

struct ConsistencyReport
{
    /// |wrap(tail copy - head copy)| per edge.
    std::vector<double> mismatch;
    /// Stale imbalance -sum_i x_di. Zero whenever copies agree.
    double sigma = 0.0;

    double max_mismatch() const;
};

ConsistencyReport consistency_report(const DesiredCopies& copies, const InteractionTopology& topology);

} // namespace flockadapt
