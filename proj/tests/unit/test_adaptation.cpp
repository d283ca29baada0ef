#include <flockadapt/adaptation.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace flockadapt;

namespace {

constexpr double pi = std::numbers::pi;

InteractionTopology chain(int n)
{
    std::vector<AgentId> ids;
    for (int i = 1; i <= n; ++i) {
        ids.push_back(i);
    }
    return build_chain_topology(ids);
}

AdaptationParams enabled()
{
    AdaptationParams a;
    a.enabled = true;
    return a;
}

} // namespace

TEST(AdaptationParams, Defaults)
{
    const AdaptationParams a;
    EXPECT_DOUBLE_EQ(a.tau_p, 0.1);
    EXPECT_DOUBLE_EQ(a.a_s, 2.0 / pi);
    EXPECT_EQ(a.sigmoid, SigmoidKind::arctan);
    EXPECT_FALSE(a.enabled);
    EXPECT_NO_THROW(a.validate());
}

TEST(AdaptationParams, TauOutsideUnitIntervalRejected)
{
    for (double tau : {0.0, 1.0, 1.5, -0.2, std::nan("")}) {
        AdaptationParams a;
        a.tau_p = tau;
        try {
            a.validate();
            FAIL() << tau;
        } catch (const ValidationError& e) {
            EXPECT_STREQ(e.what(), "tau_p must lie in (0,1)");
        }
    }
    AdaptationParams a;
    a.a_s = 0.0;
    EXPECT_THROW(a.validate(), ValidationError);
}

TEST(Sigmoid, KindsAndBounds)
{
    EXPECT_EQ(parse_sigmoid_kind("tanh"), SigmoidKind::tanh);
    EXPECT_EQ(parse_sigmoid_kind("arctan"), SigmoidKind::arctan);
    EXPECT_THROW(parse_sigmoid_kind("logistic"), ValidationError);
    EXPECT_EQ(to_string(SigmoidKind::tanh), "tanh");
    EXPECT_DOUBLE_EQ(sigmoid_eval(SigmoidKind::arctan, 1.0), pi / 4.0);
    EXPECT_DOUBLE_EQ(sigmoid_eval(SigmoidKind::tanh, 0.0), 0.0);
    EXPECT_LT(sigmoid_eval(SigmoidKind::arctan, 1e6), sigmoid_bound(SigmoidKind::arctan));
    EXPECT_LE(sigmoid_eval(SigmoidKind::tanh, 50.0), sigmoid_bound(SigmoidKind::tanh));
}

TEST(DesiredRates, CopiesDriftTowardMeasuredShift)
{
    const InteractionTopology t = chain(3);
    DesiredCopies d(2);
    d.set(0, End::tail, 1.0);
    d.set(0, End::head, 2.0);
    d.set(1, End::tail, 0.5);
    d.set(1, End::head, 0.5);
    const Eigen::Vector2d p(1.5, 0.5);
    const DesiredCopies r = desired_rates(t, p, d, enabled());
    EXPECT_NEAR(r.at(0, End::tail), 2.0 / pi * std::atan(0.05), 1e-15);
    EXPECT_NEAR(r.at(0, End::head), -2.0 / pi * std::atan(0.05), 1e-15);
    EXPECT_DOUBLE_EQ(r.at(1, End::tail), 0.0);
    EXPECT_DOUBLE_EQ(r.at(1, End::head), 0.0);
}

TEST(DesiredRates, BoundedByScale)
{
    const InteractionTopology t = chain(2);
    const DesiredCopies d = DesiredCopies::consistent(Eigen::VectorXd::Constant(1, 0.0));
    AdaptationParams a = enabled();
    a.tau_p = 0.99;
    for (double p : {-3.1, -1.0, 1.0, 3.1}) {
        const DesiredCopies r = desired_rates(t, Eigen::VectorXd::Constant(1, p), d, a);
        EXPECT_LT(std::abs(r.at(0, End::tail)), a.a_s * sigmoid_bound(a.sigmoid));
    }
}

TEST(DesiredRates, InactiveBeforeStartOrWhenDisabled)
{
    const InteractionTopology t = chain(3);
    const DesiredCopies d = DesiredCopies::consistent(Eigen::Vector2d(0.0, 0.0));
    const Eigen::Vector2d p(1.0, -1.0);
    AdaptationParams a = enabled();
    EXPECT_EQ(desired_rates(t, p, d, a, 99.0, 100.0).flatten(), Eigen::Vector4d::Zero());
    EXPECT_NE(desired_rates(t, p, d, a, 100.0, 100.0).flatten(), Eigen::Vector4d::Zero());
    a.enabled = false;
    EXPECT_EQ(desired_rates(t, p, d, a, 200.0, 100.0).flatten(), Eigen::Vector4d::Zero());
}

TEST(LyapunovRate, MatchesFiniteDifferenceOfE)
{
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> u(-2.5, 2.5);
    const InteractionTopology t = chain(4);
    const AdaptationParams a = enabled();
    for (int trial = 0; trial < 25; ++trial) {
        Eigen::VectorXd p(3);
        Eigen::VectorXd flat(6);
        for (int k = 0; k < 3; ++k) {
            p(k) = u(gen);
        }
        for (int c = 0; c < 6; ++c) {
            flat(c) = p(c / 2) + 0.4 * u(gen);
        }
        const DesiredCopies d = DesiredCopies::from_flat(flat);
        const Eigen::VectorXd rate = desired_rates(t, p, d, a).flatten();
        const double h = 1e-6;
        const double de = (objective_e(t, p, DesiredCopies::from_flat(flat + h * rate)) -
                           objective_e(t, p, DesiredCopies::from_flat(flat - h * rate))) /
                          (2.0 * h);
        const double analytic = lyapunov_rate(t, p, d, a);
        EXPECT_NEAR(analytic, de, 1e-8);
        EXPECT_LE(analytic, 0.0);
    }
}

TEST(LyapunovRate, ConsistentCopiesReduceToEdgeSum)
{
    const InteractionTopology t = chain(3);
    const Eigen::Vector2d p(0.7, -0.2);
    const Eigen::Vector2d pd(0.1, 0.3);
    const AdaptationParams a = enabled();
    double expected = 0.0;
    for (int k = 0; k < 2; ++k) {
        const double e = p(k) - pd(k);
        expected -= e * a.a_s * std::atan(a.tau_p * e);
    }
    EXPECT_NEAR(lyapunov_rate(t, p, DesiredCopies::consistent(pd), a), expected, 1e-15);
}

TEST(LyapunovRate, ZeroAtConsistentAttainedPattern)
{
    const InteractionTopology t = chain(4);
    const Eigen::Vector3d p(2.0, 2.1, 1.9);
    EXPECT_DOUBLE_EQ(lyapunov_rate(t, p, DesiredCopies::consistent(p), enabled()), 0.0);
}
