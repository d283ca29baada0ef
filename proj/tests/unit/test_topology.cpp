#include <flockadapt/topology.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace flockadapt;

namespace {

constexpr double pi = std::numbers::pi;

// Row reduction with partial pivoting, independent of Eigen's decompositions.
std::size_t rank_by_elimination(Eigen::MatrixXd a, double tol = 1e-9)
{
    std::size_t rank = 0;
    const Eigen::Index rows = a.rows();
    const Eigen::Index cols = a.cols();
    for (Eigen::Index c = 0; c < cols && static_cast<Eigen::Index>(rank) < rows; ++c) {
        const auto r0 = static_cast<Eigen::Index>(rank);
        Eigen::Index pivot = r0;
        for (Eigen::Index r = r0; r < rows; ++r) {
            if (std::abs(a(r, c)) > std::abs(a(pivot, c))) {
                pivot = r;
            }
        }
        if (std::abs(a(pivot, c)) < tol) {
            continue;
        }
        a.row(r0).swap(a.row(pivot));
        for (Eigen::Index r = r0 + 1; r < rows; ++r) {
            a.row(r) -= a(r, c) / a(r0, c) * a.row(r0);
        }
        ++rank;
    }
    return rank;
}

InteractionTopology cycle3()
{
    return InteractionTopology::from_edges({1, 2, 3}, {{0, 1}, {1, 2}, {2, 0}});
}

std::vector<AgentId> ids(int n)
{
    std::vector<AgentId> out;
    for (int i = 1; i <= n; ++i) {
        out.push_back(i);
    }
    return out;
}

} // namespace

TEST(WrapAngle, MapsIntoHalfOpenInterval)
{
    EXPECT_DOUBLE_EQ(wrap_angle(0.0), 0.0);
    EXPECT_DOUBLE_EQ(wrap_angle(pi), pi);
    EXPECT_DOUBLE_EQ(wrap_angle(-pi), pi);
    EXPECT_NEAR(wrap_angle(3.0 * pi), pi, 1e-12);
    EXPECT_NEAR(wrap_angle(2.0 * pi + 0.25), 0.25, 1e-12);
    EXPECT_NEAR(wrap_angle(-2.0 * pi - 0.25), -0.25, 1e-12);
    for (double a = -20.0; a < 20.0; a += 0.37) {
        const double w = wrap_angle(a);
        EXPECT_GT(w, -pi);
        EXPECT_LE(w, pi);
        EXPECT_NEAR(std::remainder(a - w, 2.0 * pi), 0.0, 1e-9);
    }
}

TEST(ChainTopology, IncidenceRows)
{
    const std::vector<AgentId> agents{1, 2, 3, 4};
    const InteractionTopology t = build_chain_topology(agents);
    ASSERT_EQ(t.n_edges(), 3u);
    Eigen::MatrixXd expected(3, 4);
    expected << -1, 1, 0, 0, 0, -1, 1, 0, 0, 0, -1, 1;
    EXPECT_EQ(t.incidence(), expected);
    EXPECT_TRUE(t.is_chain());
    EXPECT_EQ(t.edge_label(1), "2-3");
}

TEST(ChainTopology, RankMatchesElimination)
{
    for (int n = 2; n <= 12; ++n) {
        const std::vector<AgentId> agents = ids(n);
        const InteractionTopology t = build_chain_topology(agents);
        EXPECT_EQ(t.rank(), rank_by_elimination(t.incidence())) << n;
        EXPECT_EQ(t.rank(), static_cast<std::size_t>(n - 1));
        EXPECT_TRUE(t.full_row_rank());
    }
    const InteractionTopology c = cycle3();
    EXPECT_EQ(c.rank(), rank_by_elimination(c.incidence()));
    EXPECT_EQ(c.rank(), 2u);
    EXPECT_FALSE(c.full_row_rank());
    EXPECT_FALSE(c.is_chain());
}

TEST(ChainTopology, PseudoinverseSatisfiesPenroseConditions)
{
    for (const InteractionTopology& t : {build_chain_topology(ids(5)), cycle3()}) {
        const Eigen::MatrixXd& l = t.incidence();
        const Eigen::MatrixXd& lp = t.pseudoinverse();
        EXPECT_LT((l * lp * l - l).norm(), 1e-12);
        EXPECT_LT((lp * l * lp - lp).norm(), 1e-12);
        EXPECT_LT(((l * lp).transpose() - l * lp).norm(), 1e-12);
        EXPECT_LT(((lp * l).transpose() - lp * l).norm(), 1e-12);
    }
}

TEST(ChainTopology, KernelIsConsensusDirection)
{
    const InteractionTopology t = build_chain_topology(ids(4));
    ASSERT_EQ(t.kernel_basis().cols(), 1);
    const Eigen::VectorXd k = t.kernel_basis().col(0);
    EXPECT_NEAR(std::abs(k.sum()), 2.0, 1e-12); // 4 entries of 1/2
    EXPECT_LT((t.incidence() * k).norm(), 1e-12);
    EXPECT_NEAR(k.norm(), 1.0, 1e-12);
}

TEST(Topology, RejectsMalformedGraphs)
{
    EXPECT_THROW(InteractionTopology::from_edges({1}, {}), TopologyError);
    EXPECT_THROW(InteractionTopology::from_edges({1, 1}, {{0, 1}}), TopologyError);
    EXPECT_THROW(InteractionTopology::from_edges({1, 2}, {{0, 0}}), TopologyError);
    EXPECT_THROW(InteractionTopology::from_edges({1, 2, 3}, {{0, 1}}), TopologyError);
    EXPECT_THROW(InteractionTopology::from_edges({1, 2}, {{0, 5}}), TopologyError);
}

TEST(Pattern, ShiftIsHeadMinusTail)
{
    const InteractionTopology t = build_chain_topology(ids(3));
    const Eigen::Vector3d q(0.1, 2.0, 5.5);
    const Eigen::VectorXd p = pattern_of(t, q);
    EXPECT_DOUBLE_EQ(p(0), 1.9);
    EXPECT_DOUBLE_EQ(p(1), 3.5);
}

TEST(Pattern, FormationVectorsByHand)
{
    const InteractionTopology t = build_chain_topology(ids(3));
    const Eigen::Vector2d p(1.0, 2.5);
    const DesiredCopies d = DesiredCopies::consistent(Eigen::Vector2d(0.5, 2.0));
    const FormationVectors fv = formation_vectors(t, p, d);
    // agent 1 is tail of 1-2, agent 2 head of 1-2 and tail of 2-3, agent 3 head of 2-3
    EXPECT_DOUBLE_EQ(fv.x(0), 1.0);
    EXPECT_DOUBLE_EQ(fv.x(1), -1.0 + 2.5);
    EXPECT_DOUBLE_EQ(fv.x(2), -2.5);
    EXPECT_DOUBLE_EQ(fv.x_d(0), 0.5);
    EXPECT_DOUBLE_EQ(fv.x_d(1), 1.5);
    EXPECT_DOUBLE_EQ(fv.x_d(2), -2.0);

    const Eigen::VectorXd r = formation_residuals(t, p, d);
    EXPECT_LT((r - (fv.x - fv.x_d)).norm(), 1e-15);
}

TEST(Pattern, InteractionSignFollowsIncidence)
{
    const InteractionTopology t = build_chain_topology(ids(3));
    const Eigen::Vector2d p(1.0, 0.0);
    DesiredCopies d(2);
    d.set(0, End::tail, 0.75);
    d.set(0, End::head, 0.5);
    d.set(1, End::tail, 0.0);
    d.set(1, End::head, 0.0);
    EXPECT_DOUBLE_EQ(interaction(t, p, d, 0, 0), 0.25);
    EXPECT_DOUBLE_EQ(interaction(t, p, d, 0, 1), -0.5);
    EXPECT_THROW(interaction(t, p, d, 0, 2), TopologyError);
    const auto all = interactions(t, p, d);
    EXPECT_DOUBLE_EQ(all[0].tail, 0.25);
    EXPECT_DOUBLE_EQ(all[0].head, -0.5);
}

TEST(Pattern, InteractionsWrapAcrossBranchCut)
{
    const InteractionTopology t = build_chain_topology(ids(2));
    const Eigen::VectorXd p = Eigen::VectorXd::Constant(1, pi - 0.1);
    const DesiredCopies d = DesiredCopies::consistent(Eigen::VectorXd::Constant(1, -pi + 0.1));
    EXPECT_NEAR(interaction(t, p, d, 0, 0), -0.2, 1e-12);
}

TEST(Objective, EndpointFormMatchesEdgeFormWhenConsistent)
{
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    const InteractionTopology t = build_chain_topology(ids(5));
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::VectorXd p(4);
        Eigen::VectorXd pd(4);
        for (int k = 0; k < 4; ++k) {
            p(k) = u(gen);
            pd(k) = u(gen);
        }
        EXPECT_NEAR(objective_e(t, p, DesiredCopies::consistent(pd)), objective_e(p, pd), 1e-12);
    }
}

TEST(Attainability, ChainPatternsAreAlwaysAttainable)
{
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(-pi, pi);
    for (int n = 2; n <= 8; ++n) {
        const InteractionTopology t = build_chain_topology(ids(n));
        Eigen::VectorXd pd(n - 1);
        for (int k = 0; k < n - 1; ++k) {
            pd(k) = u(gen);
        }
        EXPECT_LE(attainability_residual(t, pd).norm(), 1e-10);
    }
}

TEST(Attainability, CycleResidualIsMeanOfShifts)
{
    // Row space of the cycle incidence is orthogonal to (1,1,1); least squares
    // projection removes exactly the mean component.
    const InteractionTopology t = cycle3();
    const Eigen::Vector3d pd(1.0, 0.5, 0.25);
    const Eigen::VectorXd r = attainability_residual(t, pd);
    const double mean = pd.sum() / 3.0;
    EXPECT_LT((r - Eigen::Vector3d::Constant(mean)).norm(), 1e-12);

    const Eigen::Vector3d closing(1.0, 0.5, -1.5);
    EXPECT_LT(attainability_residual(t, closing).norm(), 1e-12);
}

TEST(DesiredCopies, MissingCopiesAreNamed)
{
    const InteractionTopology t = build_chain_topology(ids(3));
    DesiredCopies d(2);
    d.set(0, End::tail, 1.0);
    EXPECT_TRUE(d.has(0, End::tail));
    EXPECT_FALSE(d.has(0, End::head));
    EXPECT_THROW(d.at(0, End::head), TopologyError);
    EXPECT_DOUBLE_EQ(d.held_by(t, 0, 0), 1.0);
    try {
        d.held_by(t, 0, 1);
        FAIL() << "expected a throw";
    } catch (const TopologyError& e) {
        const std::string what = e.what();
        EXPECT_NE(what.find("1-2"), std::string::npos) << what;
        EXPECT_NE(what.find('2'), std::string::npos) << what;
    }
    EXPECT_THROW(d.held_by(t, 0, 2), TopologyError);
    EXPECT_THROW(d.flatten(), TopologyError);
}

TEST(DesiredCopies, FlatRoundTrip)
{
    DesiredCopies d(2);
    d.set(0, End::tail, 1.0);
    d.set(0, End::head, 2.0);
    d.set(1, End::tail, 3.0);
    d.set(1, End::head, 4.0);
    const Eigen::VectorXd flat = d.flatten();
    EXPECT_EQ(flat, Eigen::Vector4d(1.0, 2.0, 3.0, 4.0));
    EXPECT_EQ(DesiredCopies::from_flat(flat).flatten(), flat);
}
