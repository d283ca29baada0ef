#include <flockadapt/engine.hpp>
#include <flockadapt/scenario_io.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace flockadapt;

namespace {

const std::string scenario_dir = FLOCKADAPT_SCENARIO_DIR;

Scenario bundled(const std::string& name)
{
    return load_scenario(scenario_dir + "/" + name + ".scenario");
}

const double d2 = 9.0 * std::numbers::pi / 13.0;
const double d3 = 18.0 * std::numbers::pi / 29.0;

// Largest |shift - copy| over present edges; with `mismatch`, largest |tail - head|.
std::vector<double> worst_error(const Trace& t, bool mismatch = false)
{
    std::vector<double> out;
    for (const TraceSample& s : t.samples) {
        double worst = 0.0;
        for (std::size_t k = 0; k < t.edges.size(); ++k) {
            if (std::isnan(s.shift[k])) {
                continue;
            }
            if (mismatch) {
                worst = std::max(worst, std::abs(wrap_angle(s.desired_tail[k] - s.desired_head[k])));
            } else {
                worst = std::max({worst, std::abs(wrap_angle(s.shift[k] - s.desired_tail[k])),
                                  std::abs(wrap_angle(s.shift[k] - s.desired_head[k]))});
            }
        }
        out.push_back(worst);
    }
    return out;
}

std::vector<double> times_of(const Trace& t)
{
    std::vector<double> out;
    for (const TraceSample& s : t.samples) {
        out.push_back(s.time);
    }
    return out;
}

std::size_t index_at(const Trace& t, double time)
{
    for (std::size_t i = 0; i < t.samples.size(); ++i) {
        if (std::abs(t.samples[i].time - time) < 1e-9) {
            return i;
        }
    }
    throw std::out_of_range("no sample at requested time");
}

// Ratio of adaptation settling (copy mismatch to 5%) to fast settling
// (interactions to 5% in the nominal run).
double separation_ratio(double k_theta)
{
    Scenario nominal = bundled("canonical_4uav");
    Scenario adapt = bundled("canonical_loss3_adapt");
    for (Scenario* s : {&nominal, &adapt}) {
        for (AgentParams& p : s->params) {
            p.k_theta = k_theta;
        }
    }
    const Trace a = run_scenario(nominal);
    const Trace b = run_scenario(adapt);
    const std::vector<double> fast = worst_error(a);
    const std::vector<double> slow = worst_error(b, true);
    const auto t_fast = settling_time(times_of(a), fast, 0.05 * fast.front());
    const auto t_slow = settling_time(times_of(b), slow, 0.05 * slow[index_at(b, 100.0)], 100.0);
    if (!t_fast || !t_slow) {
        return 0.0;
    }
    return (*t_slow - 100.0) / *t_fast;
}

} // namespace

TEST(Rk4, ExponentialDecayStep)
{
    const OdeRhs rhs = [](double, const Eigen::VectorXd& y) { return Eigen::VectorXd(-y); };
    for (double dt : {0.5, 0.1, 0.01}) {
        const Eigen::VectorXd y = step_rk4(rhs, 0.0, Eigen::VectorXd::Ones(1), dt);
        // local error of the 4th order Taylor truncation is dt^5/120 to leading order
        EXPECT_NEAR(y(0), std::exp(-dt), 1.2 * std::pow(dt, 5) / 120.0 + 1e-16) << dt;
    }
}

TEST(Rk4, FourthOrderGlobalConvergence)
{
    const OdeRhs rhs = [](double t, const Eigen::VectorXd& y) {
        return Eigen::VectorXd(Eigen::VectorXd::Constant(1, std::cos(t) * y(0)));
    };
    auto error = [&](int steps) {
        const double dt = 2.0 / steps;
        Eigen::VectorXd y = Eigen::VectorXd::Ones(1);
        for (int s = 0; s < steps; ++s) {
            y = step_rk4(rhs, s * dt, y, dt);
        }
        return std::abs(y(0) - std::exp(std::sin(2.0)));
    };
    const double ratio = error(20) / error(40);
    EXPECT_NEAR(std::log2(ratio), 4.0, 0.15);
}

TEST(Rk4, NonFiniteDerivativeNamesComponent)
{
    const OdeRhs rhs = [](double, const Eigen::VectorXd& y) {
        Eigen::VectorXd d = Eigen::VectorXd::Zero(y.size());
        d(1) = std::nan("");
        return d;
    };
    try {
        step_rk4(rhs, 0.0, Eigen::VectorXd::Zero(3), 0.1);
        FAIL() << "expected a throw";
    } catch (const NonFiniteDerivative& e) {
        EXPECT_EQ(e.component(), 1);
    }
}

TEST(ScenarioValidation, ReportsEveryProblem)
{
    Scenario s = canonical_scenario();
    s.dt = 0.03;
    s.adaptation.tau_p = 1.5;
    s.events.push_back({100.0, 9});
    try {
        s.validate();
        FAIL() << "expected a throw";
    } catch (const ValidationError& e) {
        const std::string what = e.what();
        EXPECT_NE(what.find("tau_p must lie in (0,1)"), std::string::npos) << what;
        EXPECT_NE(what.find("multiple of dt_s"), std::string::npos) << what;
        EXPECT_NE(what.find("agent 9"), std::string::npos) << what;
    }
}

TEST(ScenarioValidation, CanonicalIsValid)
{
    const Scenario s = canonical_scenario();
    EXPECT_NO_THROW(s.validate());
    EXPECT_EQ(s.steps(), 40000);
    EXPECT_EQ(s.record_stride(), 50);
    EXPECT_DOUBLE_EQ(s.adaptation_start(), 0.0);
}

TEST(ScenarioValidation, AdaptationStartDefaultsToFirstLoss)
{
    Scenario s = canonical_scenario();
    s.events = {{150.0, 2}, {120.0, 3}};
    EXPECT_DOUBLE_EQ(s.adaptation_start(), 120.0);
    s.adaptation.start_time = 10.0;
    EXPECT_DOUBLE_EQ(s.adaptation_start(), 10.0);
}

TEST(InitialPhases, SeededAndNearPattern)
{
    Scenario s = canonical_scenario();
    const Eigen::VectorXd a = initial_phases(s);
    EXPECT_EQ(a, initial_phases(s));
    s.seed = 2;
    EXPECT_NE(a, initial_phases(s));
    for (Eigen::Index k = 0; k < 3; ++k) {
        EXPECT_LE(std::abs(a(k + 1) - a(k) - s.desired_shifts(k)), 2.0 * s.initial_jitter);
    }
    s.initial_mode = InitialPhaseMode::explicit_list;
    s.initial_phases = {0.0, 1.0, 2.0, 3.0};
    EXPECT_EQ(initial_phases(s), Eigen::Vector4d(0.0, 1.0, 2.0, 3.0));
}

TEST(RunScenario, SampleLayoutAcrossLoss)
{
    const Trace t = run_scenario(bundled("canonical_loss3_noadapt"));
    ASSERT_EQ(t.samples.size(), 801u);
    EXPECT_EQ(t.agents, (std::vector<AgentId>{1, 2, 3, 4}));
    ASSERT_EQ(t.edges.size(), 4u);
    EXPECT_EQ(t.edges[3].label(), "2-4");
    const TraceSample& before = t.samples[index_at(t, 99.5)];
    const TraceSample& after = t.samples[index_at(t, 100.0)];
    EXPECT_FALSE(std::isnan(before.phase[2]));
    EXPECT_TRUE(std::isnan(after.phase[2]));
    EXPECT_TRUE(std::isnan(after.shift[1]));
    EXPECT_TRUE(std::isnan(before.shift[3]));
    EXPECT_DOUBLE_EQ(after.desired_tail[3], d2);
    EXPECT_DOUBLE_EQ(after.desired_head[3], d3);
}

TEST(RunScenario, SurvivorPhasesContinuousAcrossLoss)
{
    Scenario s = bundled("canonical_loss3_noadapt");
    s.duration = 101.0;
    s.record_period = s.dt;
    const Trace t = run_scenario(s);
    const std::size_t i = index_at(t, 100.0);
    const double max_step = (0.12 + 0.03) * s.dt;
    for (std::size_t a : {0u, 1u, 3u}) {
        // loss happens at the start of step 10000: the recorded jump is one step of motion
        EXPECT_LE(std::abs(t.samples[i].phase[a] - t.samples[i - 1].phase[a]), max_step * 1.001);
        EXPECT_LE(std::abs(t.samples[i + 1].phase[a] - t.samples[i].phase[a]), max_step * 1.001);
        EXPECT_LE(std::abs(t.samples[i + 1].speed[a] - t.samples[i].speed[a]), 3.0);
    }
}

TEST(RunScenario, DeterministicForSeed)
{
    const Scenario s = bundled("canonical_loss3_adapt");
    const Trace a = run_scenario(s);
    const Trace b = run_scenario(s);
    ASSERT_EQ(a.samples.size(), b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        for (std::size_t k = 0; k < a.samples[i].phase.size(); ++k) {
            const double x = a.samples[i].phase[k];
            const double y = b.samples[i].phase[k];
            ASSERT_TRUE(std::isnan(x) ? std::isnan(y) : x == y) << i;
        }
    }
}

TEST(RunScenario, HalvingStepBarelyMovesFinalPhases)
{
    Scenario s = canonical_scenario();
    const Trace coarse = run_scenario(s);
    s.dt = 0.005;
    const Trace fine = run_scenario(s);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_LT(std::abs(coarse.final_sample().phase[i] - fine.final_sample().phase[i]), 1e-6);
    }
}

TEST(RunScenario, NonFiniteStateIsReported)
{
    Scenario s = canonical_scenario();
    s.duration = 1.0;
    s.initial_mode = InitialPhaseMode::explicit_list;
    s.initial_phases = {0.0, std::nan(""), 2.0, 3.0};
    try {
        run_scenario(s);
        FAIL() << "expected a throw";
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("agent"), std::string::npos) << e.what();
    }
}

TEST(Prediction, ClosedFormForInteriorLoss)
{
    const FinalFormation f = final_formation(bundled("canonical_loss3_noadapt"));
    const EquilibriumPrediction p = predict_post_loss_equilibrium(f.topology, f.copies, f.params);
    ASSERT_TRUE(p.closed_form);
    ASSERT_TRUE(p.delta.has_value());
    EXPECT_NEAR(*p.delta, (d3 - d2) / 3.0, 1e-15);
    const double offset = 3.0 * (2.0 / std::numbers::pi) * std::atan(5.0 * *p.delta);
    EXPECT_NEAR(p.speed_offset, offset, 1e-12);
    EXPECT_NEAR(p.speed_offset, -0.685, 5e-4);
    for (double r : p.residuals) {
        EXPECT_DOUBLE_EQ(r, *p.delta);
    }
    // the predicted pattern really is stationary with equal residuals
    const Eigen::VectorXd r = formation_residuals(f.topology, p.steady_shifts, f.copies);
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        EXPECT_NEAR(r(i), *p.delta, 1e-14);
    }
}

TEST(Prediction, EndLossIsBenign)
{
    const FinalFormation f = final_formation(bundled("endloss_benign"));
    const EquilibriumPrediction p = predict_post_loss_equilibrium(f.topology, f.copies, f.params);
    EXPECT_DOUBLE_EQ(*p.delta, 0.0);
    EXPECT_DOUBLE_EQ(p.speed_offset, 0.0);
}

TEST(Prediction, NumericFallbackForMixedRadii)
{
    Scenario s = bundled("canonical_loss3_noadapt");
    s.params[1] = AgentParams::uniform_cruise(12.0, 90.0, 3.0, 5.0);
    const FinalFormation f = final_formation(s);
    const EquilibriumPrediction p = predict_post_loss_equilibrium(f.topology, f.copies, f.params);
    EXPECT_FALSE(p.closed_form);
    EXPECT_FALSE(p.delta.has_value());
    // stationary pattern: all agents share one orbital rate
    const double rate0 = p.steady_speeds[0] / f.params[0].rho;
    for (std::size_t i = 1; i < p.steady_speeds.size(); ++i) {
        EXPECT_NEAR(p.steady_speeds[i] / f.params[i].rho, rate0, 1e-12);
    }
}

TEST(EquilibriumSolver, ConsistentPatternHasSingleRoot)
{
    const Scenario s = canonical_scenario();
    const InteractionTopology t = build_chain_topology(s.agents);
    const EquilibriumSolution sol =
        solve_equilibrium_numeric(t, DesiredCopies::consistent(s.desired_shifts), s.params);
    EXPECT_TRUE(sol.conclusive());
    ASSERT_EQ(sol.roots.size(), 1u);
    EXPECT_LT((sol.roots[0] - s.desired_shifts).lpNorm<Eigen::Infinity>(), 1e-9);
}

TEST(EquilibriumSolver, AgreesWithClosedFormAfterLoss)
{
    const FinalFormation f = final_formation(bundled("canonical_loss3_noadapt"));
    const EquilibriumPrediction closed = predict_post_loss_equilibrium(f.topology, f.copies, f.params);
    const EquilibriumSolution sol = solve_equilibrium_numeric(f.topology, f.copies, f.params);
    ASSERT_EQ(sol.roots.size(), 1u);
    EXPECT_LT((sol.roots[0] - closed.steady_shifts).lpNorm<Eigen::Infinity>(), 1e-6);
}

TEST(EquilibriumSolver, TwoAgentChain)
{
    const std::vector<AgentId> ids{1, 2};
    const InteractionTopology t = build_chain_topology(ids);
    const std::vector<AgentParams> params(2);
    const EquilibriumSolution sol =
        solve_equilibrium_numeric(t, DesiredCopies::consistent(Eigen::VectorXd::Constant(1, 1.0)), params);
    ASSERT_EQ(sol.roots.size(), 1u);
    EXPECT_NEAR(sol.roots[0](0), 1.0, 1e-9);
}

TEST(EquilibriumSolver, InconclusiveWhenBudgetIsZero)
{
    const std::vector<AgentId> ids{1, 2, 3};
    const InteractionTopology t = build_chain_topology(ids);
    const std::vector<AgentParams> params(3);
    EquilibriumSearch search;
    search.max_iterations = 0;
    search.spread = 0.5;
    const EquilibriumSolution sol =
        solve_equilibrium_numeric(t, DesiredCopies::consistent(Eigen::Vector2d(1.0, 1.0)), params, search);
    EXPECT_FALSE(sol.conclusive());
    EXPECT_EQ(sol.failed_starts, search.starts);
}

TEST(SettlingTime, LastEntryIntoBand)
{
    const std::vector<double> t{0, 1, 2, 3, 4, 5};
    const std::vector<double> v{1.0, 0.01, 0.5, 0.02, 0.01, 0.0};
    EXPECT_DOUBLE_EQ(*settling_time(t, v, 0.05), 3.0);
    EXPECT_FALSE(settling_time(t, std::vector<double>{1, 1, 1, 1, 1, 1}, 0.05).has_value());
    EXPECT_DOUBLE_EQ(*settling_time(t, v, 0.05, 4.0), 4.0);
}

TEST(TimeScales, SeparationAtSteepCoupling)
{
    EXPECT_GE(separation_ratio(40.0), 5.0);
}

TEST(TimeScales, DefaultCouplingSeparationIsMeasured)
{
    // Adaptation still settles after the coordination layer at the defaults,
    // by a smaller factor than at steep coupling.
    const double ratio = separation_ratio(5.0);
    EXPECT_GT(ratio, 2.0);
    EXPECT_LT(ratio, separation_ratio(40.0));
}

TEST(Summary, ReportsInteriorLossPathology)
{
    const RunSummary s = summarize(run_scenario(bundled("canonical_loss3_noadapt")));
    EXPECT_EQ(s.agents, (std::vector<AgentId>{1, 2, 4}));
    EXPECT_GT(s.max_abs_shift_error, 0.05);
    EXPECT_NEAR(s.max_copy_mismatch, std::abs(d2 - d3), 1e-12);
    const std::string text = s.to_text();
    EXPECT_NE(text.find("speed_4_mps"), std::string::npos);
}
