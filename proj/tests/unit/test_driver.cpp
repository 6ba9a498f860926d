#include <gtest/gtest.h>

#include "gam/gam.hpp"

using namespace gam;

TEST(LineSearch, QuadraticTakesFirstStrictArmijoStep)
{
    auto phi = [](const Vector& z) -> std::optional<double> { return z.squaredNorm(); };
    Vector x(2);
    x << 1.0, 0.0;
    const Vector g = 2.0 * x;
    // t = 0.5 lands on Phi = 0, which equals the Armijo bound 1 - 0.5 * 0.5 * 4
    // and fails the strict inequality; t = 0.25 is the first accepted power.
    const LineSearchResult r = line_search(phi, x, g, 1.0, 0.5, 0.5, 40);
    EXPECT_DOUBLE_EQ(r.t, 0.25);
    EXPECT_DOUBLE_EQ(r.phi, 0.25);
    EXPECT_EQ(r.backtracks, 1);
}

TEST(LineSearch, UphillDirectionFails)
{
    auto phi = [](const Vector& z) -> std::optional<double> { return z(0); };
    const Vector x = Vector::Zero(1);
    try {
        line_search(phi, x, Vector::Constant(1, -1.0), 0.0, 0.5, 0.5, 10);
        FAIL() << "expected LineSearchFailed";
    } catch (const LineSearchFailed& e) {
        EXPECT_DOUBLE_EQ(e.last_t, std::pow(0.5, 10));
        EXPECT_GT(e.armijo_gap, 0.0);
    }
}

TEST(LineSearch, RejectsUnevaluableTrials)
{
    auto phi = [](const Vector& z) -> std::optional<double> {
        if (z(0) < 0.5) return std::nullopt;
        return z(0) * z(0);
    };
    const LineSearchResult r = line_search(phi, Vector::Constant(1, 1.0), Vector::Constant(1, 2.0), 1.0, 0.1, 0.5, 20);
    EXPECT_DOUBLE_EQ(r.t, 0.25);
}

TEST(LineSearch, ZeroDirectionIsRejected)
{
    auto phi = [](const Vector& z) -> std::optional<double> { return z(0); };
    EXPECT_THROW(line_search(phi, Vector::Zero(1), Vector::Zero(1), 0.0, 0.5, 0.5, 5), PreconditionError);
}

TEST(LineSearch, Example1FromTwo)
{
    const BilevelProblem p = make_example1();
    const LineSearchResult r = line_search(p, Vector::Constant(1, 2.0), Vector::Constant(1, 4.0), 4.0, 0.5, 0.3, 40);
    EXPECT_DOUBLE_EQ(r.t, 0.3);  // gamma^1
    EXPECT_NEAR(r.phi, 0.64, 1e-12);
}

TEST(GamConfig, RangeChecks)
{
    auto bad = [](auto mutate) {
        GamConfig c;
        mutate(c);
        return c;
    };
    EXPECT_NO_THROW(GamConfig{}.validate());
    EXPECT_THROW(bad([](GamConfig& c) { c.beta = 1.0; }).validate(), ConfigError);
    EXPECT_THROW(bad([](GamConfig& c) { c.gamma = 0.0; }).validate(), ConfigError);
    EXPECT_THROW(bad([](GamConfig& c) { c.eps0 = -1.0; }).validate(), ConfigError);
    EXPECT_THROW(bad([](GamConfig& c) { c.theta_nu = 1.5; }).validate(), ConfigError);
    EXPECT_THROW(bad([](GamConfig& c) { c.nu_opt = -1e-3; }).validate(), ConfigError);
    EXPECT_THROW(bad([](GamConfig& c) { c.step_rule = StepRule::FixedStep; }).validate(), ConfigError);
    EXPECT_THROW(GamSolver(make_example1(), bad([](GamConfig& c) { c.max_backtracks = 0; })), ConfigError);
}

TEST(GamRun, Example1ConvergesToKink)
{
    const BilevelProblem p = make_example1();
    GamConfig cfg;
    auto [res, trace] = run(p, Vector::Constant(1, 2.0), cfg);
    EXPECT_TRUE(res.converged);
    EXPECT_LE(res.g_norm, 1e-4);
    EXPECT_LE(res.eps, 1e-4);
    EXPECT_LT(std::abs(res.phi), 1e-3);
    EXPECT_LT(std::abs(res.x(0)), 1e-3);

    double min_g = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < trace.size(); ++k) {
        const TraceRecord& r = trace[k];
        min_g = std::min(min_g, r.g_norm);
        if (k + 1 < trace.size()) {
            const TraceRecord& next = trace[k + 1];
            EXPECT_LE(next.eps, r.eps);
            EXPECT_LE(next.nu, r.nu);
            EXPECT_DOUBLE_EQ(next.phi, r.phi_next);
            if (r.branch == Branch::NullStep) {
                EXPECT_LT(next.eps, r.eps);
                EXPECT_LT(next.nu, r.nu);
                EXPECT_EQ(next.x, r.x);
            } else {
                EXPECT_LT(r.phi_next, r.phi - cfg.beta * r.t * r.g_norm * r.g_norm);
            }
        }
    }
    EXPECT_LT(trace.back().eps, 1e-3);
    EXPECT_LT(trace.back().nu, 1e-3);
    EXPECT_LE(min_g, 1e-4);
}

TEST(GamRun, FirstStepFromTwoIsRecorded)
{
    auto [res, trace] = run(make_example1(), Vector::Constant(1, 2.0));
    ASSERT_GE(trace.size(), 2u);
    EXPECT_EQ(trace[0].branch, Branch::Differentiable);
    EXPECT_DOUBLE_EQ(trace[0].g_norm, 4.0);
    EXPECT_DOUBLE_EQ(trace[0].t, 0.3);
    EXPECT_NEAR(trace[1].x(0), 0.8, 1e-12);
}

TEST(GamRun, StationaryStartStopsQuickly)
{
    GamConfig cfg;
    cfg.eps_opt = 0.2;
    cfg.nu_opt = 0.1;
    auto [res, trace] = run(make_example1(), Vector::Constant(1, 0.0), cfg);
    EXPECT_TRUE(res.converged);
    EXPECT_LE(res.iterations, 3);
    EXPECT_EQ(trace.front().branch, Branch::NullStep);
    EXPECT_EQ(res.x(0), 0.0);
}

TEST(GamRun, Deterministic)
{
    const DegenerateQp dq = make_degenerate_qp(2, 2, 3, 2);
    GamConfig cfg;
    cfg.seed = 9;
    cfg.max_outer_iters = 40;
    auto [a, ta] = run(dq.problem, dq.x0, cfg);
    auto [b, tb] = run(dq.problem, dq.x0, cfg);
    ASSERT_EQ(ta.size(), tb.size());
    for (std::size_t k = 0; k < ta.size(); ++k) {
        EXPECT_EQ(ta[k].x, tb[k].x);
        EXPECT_EQ(ta[k].phi, tb[k].phi);
        EXPECT_EQ(ta[k].branch, tb[k].branch);
    }
}

TEST(GamRun, SvmValidationLossDecreases)
{
    const SvmHyperopt s = make_svm_toy(0);
    GamConfig cfg;
    cfg.max_outer_iters = 60;
    auto [res, trace] = run(s.problem, Vector::Zero(10), cfg);
    int accepted = 0;
    for (std::size_t k = 0; k + 1 < trace.size(); ++k) {
        if (trace[k].branch == Branch::NullStep) continue;
        ++accepted;
        EXPECT_LT(trace[k + 1].phi, trace[k].phi);
    }
    EXPECT_GT(accepted, 0);
    EXPECT_LT(res.phi, trace.front().phi);
}

TEST(GamRun, NonsmoothBranchIsUsedNearKink)
{
    GamConfig cfg;
    cfg.max_outer_iters = 3;
    cfg.nu0 = 0.5;  // the min-norm element has norm 1, so nu0 = 1 would give a null step
    auto [res, trace] = run(make_example1(), Vector::Constant(1, -0.98), cfg);
    EXPECT_EQ(trace.front().branch, Branch::Nonsmooth);
    EXPECT_EQ(trace.front().members, 2);
    EXPECT_NEAR(trace.front().g_norm, 1.0, 1e-9);
}

TEST(GamRun, FixedStepVariant)
{
    auto [res, trace] = run_fixed_step(make_example1(), Vector::Constant(1, 2.0), [](int) { return 0.1; });
    bool moved = false;
    for (const auto& r : trace)
        if (r.branch != Branch::NullStep && &r != &trace.back()) {
            EXPECT_DOUBLE_EQ(r.t, 0.1);
            moved = true;
        }
    EXPECT_TRUE(moved);
    EXPECT_LT(std::abs(res.x(0)), 0.1);
}

TEST(GamRun, WrongStartDimension)
{
    EXPECT_THROW(run(make_example1(), Vector::Zero(2)), DimensionError);
}
