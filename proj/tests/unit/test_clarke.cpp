#include <set>

#include <gtest/gtest.h>

#include "gam/gam.hpp"

using namespace gam;

namespace {

struct Prepared {
    Vector x;
    LowerSolution sol;
    ActiveSetClassification sets;
    KktPoint pt;
};

Prepared prepare(const BilevelProblem& p, const Vector& x)
{
    Prepared out;
    out.x = x;
    out.sol = solve_lower(p, x);
    out.sets = classify_active_sets(p, x, out.sol, 1e-7);
    out.pt = make_kkt_point(p, x, out.sol.y_star, effective_multipliers(out.sol, out.sets), out.sol.nu);
    return out;
}

BallClassification classify_ball(const BilevelProblem& p, const Prepared& pr, double eps, double delta = 1e-3)
{
    std::mt19937_64 rng(1);
    const LocalSensitivity ls = local_sensitivity(p, pr.pt, pr.sol, pr.sets, {}, rng);
    return check_differentiability_on_ball(pr.sol, pr.sets, estimate_lipschitz(pr.pt, ls.sens, delta), eps);
}

}  // namespace

TEST(Clarke, LipschitzEstimatesOnExample1)
{
    const BilevelProblem p = make_example1();
    for (auto [x, lp] : {std::pair{-0.5, 1e-3}, std::pair{1.0, 3.0 + 1e-3}}) {
        const Prepared pr = prepare(p, Vector::Constant(1, x));
        const LipschitzEstimates lip = estimate_lipschitz(pr.pt, kkt_gradient(pr.pt, pr.sets), 1e-3);
        EXPECT_NEAR(lip.lipschitz_lambda(0), 1e-3, 1e-12) << x;
        EXPECT_NEAR(lip.lipschitz_p(0), lp, 1e-10) << x;
    }
}

TEST(Clarke, ZeroGradientGivesDelta)
{
    const BilevelProblem p = make_example1();
    Prepared pr = prepare(p, Vector::Constant(1, 1.0));
    pr.pt.jac_x_p.setZero();
    pr.pt.jac_y_p.setZero();
    KktSensitivity zero{Matrix::Zero(1, 1), Matrix::Zero(1, 1), Matrix::Zero(0, 1), true};
    const LipschitzEstimates lip = estimate_lipschitz(pr.pt, zero, 0.01);
    EXPECT_DOUBLE_EQ(lip.lipschitz_lambda(0), 0.01);
    EXPECT_DOUBLE_EQ(lip.lipschitz_p(0), 0.01);
}

TEST(Clarke, BallClassificationExamples)
{
    const BilevelProblem p = make_example1();
    const BallClassification smooth = classify_ball(p, prepare(p, Vector::Constant(1, -0.5)), 0.1);
    EXPECT_EQ(smooth.I_plus, IndexSet{0});
    EXPECT_TRUE(smooth.differentiable_on_ball);

    const BallClassification kink = classify_ball(p, prepare(p, Vector::Constant(1, -1.0)), 0.1);
    EXPECT_EQ(kink.I_eps, IndexSet{0});
    EXPECT_FALSE(kink.differentiable_on_ball);

    const BilevelQp free = make_bilevel_qp(1, 2, 3, 0, 0);
    EXPECT_TRUE(classify_ball(free.problem, prepare(free.problem, Vector::Ones(2)), 10.0).differentiable_on_ball);
}

TEST(Clarke, PartitionAndMonotonicity)
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const BilevelQp qp = make_bilevel_qp(seed, 2, 4, 4, 0);
        const Prepared pr = prepare(qp.problem, Vector::Constant(2, 0.3));
        BallClassification prev;
        bool first = true;
        for (double eps : {1.0, 0.3, 0.1, 0.01, 1e-4}) {
            const BallClassification c = classify_ball(qp.problem, pr, eps);
            IndexSet all = set_union(set_union(c.I_plus, c.I_minus), c.I_eps);
            EXPECT_EQ(all.size(), 4u);
            EXPECT_EQ(c.I_plus.size() + c.I_minus.size() + c.I_eps.size(), 4u);
            EXPECT_EQ(c.differentiable_on_ball, c.I_eps.empty());
            if (!first)
                for (int j : c.I_eps) EXPECT_TRUE(contains(prev.I_eps, j)) << "eps shrink moved " << j;
            prev = c;
            first = false;
        }
    }
}

TEST(Clarke, RepresentativeSetNearKink)
{
    const BilevelProblem p = make_example1();
    const double x0 = -1.0 + 0.02;
    const Prepared pr = prepare(p, Vector::Constant(1, x0));
    const BallClassification c = classify_ball(p, pr, 0.1);
    ASSERT_EQ(c.I_eps, IndexSet{0});
    const SubgradientSet g = build_subgradient_set(pr.pt, c);
    ASSERT_EQ(g.members.size(), 2u);
    EXPECT_FALSE(g.truncated);
    EXPECT_NEAR(g.members[0](0), 2 * x0, 1e-6);
    EXPECT_NEAR(g.members[1](0), -1.0, 1e-6);
    EXPECT_NEAR(g.min_norm_value, 1.0, 1e-9);
}

TEST(Clarke, EmptyAmbiguousSetIsRejected)
{
    const BilevelProblem p = make_example1();
    const Prepared pr = prepare(p, Vector::Constant(1, -0.5));
    EXPECT_THROW(build_subgradient_set(pr.pt, classify_ball(p, pr, 0.1)), PreconditionError);
}

TEST(Clarke, TruncationKeepsFirstSubsets)
{
    const DegenerateQp dq = make_degenerate_qp(3, 2, 4, 3);
    const Prepared pr = prepare(dq.problem, dq.x0);
    const BallClassification c = classify_ball(dq.problem, pr, 1e-3);
    ASSERT_EQ(c.I_eps.size(), 3u);
    const SubgradientSet full = build_subgradient_set(pr.pt, c, 64);
    EXPECT_EQ(full.members.size(), 8u);
    const SubgradientSet cut = build_subgradient_set(pr.pt, c, 3);
    EXPECT_TRUE(cut.truncated);
    ASSERT_EQ(cut.members.size(), 3u);
    EXPECT_TRUE(cut.subset_labels[0].empty());
}

TEST(Clarke, DegenerateQpMembersMatchSampledClusters)
{
    const DegenerateQp dq = make_degenerate_qp(11, 2, 3, 2);
    const Prepared pr = prepare(dq.problem, dq.x0);
    // the gradient varies by about 25 eps inside each piece for this instance
    const double eps = 1e-5;
    const BallClassification c = classify_ball(dq.problem, pr, eps);
    ASSERT_EQ(c.I_eps, (IndexSet{0, 1}));
    const SubgradientSet g = build_subgradient_set(pr.pt, c);
    ASSERT_EQ(g.members.size(), 4u);

    std::set<IndexSet> seen;
    for (const BallSample& s : sample_ball(dq.problem, dq.x0, eps, 200, 5)) {
        auto it = std::find(g.subset_labels.begin(), g.subset_labels.end(), s.strictly_active);
        ASSERT_NE(it, g.subset_labels.end()) << to_string(s.strictly_active);
        const Vector& member = g.members[static_cast<std::size_t>(it - g.subset_labels.begin())];
        EXPECT_LT((s.gradient - member).norm(), 1e-3);
        seen.insert(s.strictly_active);
    }
    EXPECT_GE(seen.size(), 3u);
}

TEST(Clarke, MinNormExamples)
{
    const MinNormResult a = min_norm_element({Vector::Constant(2, 0.0) + Vector::Unit(2, 0) * 2,
                                              Vector::Unit(2, 1) * 2});
    EXPECT_NEAR(a.g(0), 1.0, 1e-12);
    EXPECT_NEAR(a.g(1), 1.0, 1e-12);
    EXPECT_NEAR(a.value, std::sqrt(2.0), 1e-12);

    const MinNormResult b = min_norm_element({Vector::Unit(2, 0), -Vector::Unit(2, 0) + Vector::Unit(2, 1),
                                              -Vector::Unit(2, 0) - Vector::Unit(2, 1)});
    EXPECT_LT(b.value, 1e-12);

    Vector v(3);
    v << 0.3, -1.2, 2.0;
    const MinNormResult c = min_norm_element({v});
    EXPECT_EQ(c.g, v);
    EXPECT_THROW(min_norm_element({}), PreconditionError);
}

TEST(Clarke, MinNormMatchesGridOracle)
{
    std::mt19937_64 rng(42);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<Vector> pts;
        for (int i = 0; i < 5; ++i) {
            Vector v(3);
            for (auto& e : v) e = 0.3 * nd(rng) + 0.2;
            pts.push_back(v);
        }
        const double step = 1e-2;
        EXPECT_NEAR(min_norm_element(pts).value, brute_min_norm(pts, step).norm(), 2 * step);
    }
}

TEST(Clarke, MinNormOptimalityCondition)
{
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int k = 1 + trial % 9, d = 1 + trial % 5;
        std::vector<Vector> pts;
        for (int i = 0; i < k; ++i) {
            Vector v(d);
            for (auto& e : v) e = nd(rng) + (trial % 3 == 0 ? 2.0 : 0.0);
            pts.push_back(v);
        }
        const MinNormResult r = min_norm_element(pts);
        EXPECT_NEAR(r.weights.sum(), 1.0, 1e-9);
        EXPECT_GE(r.weights.minCoeff(), -1e-12);
        for (const Vector& p : pts) {
            EXPECT_GE(p.dot(r.g), r.g.squaredNorm() - 1e-9) << trial;
            EXPECT_LE(r.value, p.norm() + 1e-12);
        }
    }
}

TEST(Clarke, SmoothBallMatchesSampledMinNorm)
{
    // Example 1 at x0 = 1: the sampled gradients 2x fill [2 - 2 eps, 2 + 2 eps].
    const BilevelProblem p = make_example1();
    std::vector<double> ratios;
    for (double eps : {0.1, 0.05, 0.025}) {
        const Vector x0 = Vector::Constant(1, 1.0);
        const Prepared pr = prepare(p, x0);
        ASSERT_TRUE(classify_ball(p, pr, eps).differentiable_on_ball);
        const Vector g = composite_gradient(pr.pt, kkt_gradient(pr.pt, pr.sets).grad_y_star);
        const double sampled = min_norm_element(sample_ball_gradients(p, x0, eps, 100, 3)).value;
        ratios.push_back(std::abs(g.norm() - sampled) / eps);
    }
    for (double r : ratios) {
        EXPECT_GT(r, 1.0);
        EXPECT_LT(r, 2.5);
    }
}

TEST(Clarke, RepresentativeSetAtKink)
{
    const BilevelProblem p = make_example1();
    const Prepared pr = prepare(p, Vector::Constant(1, -1.0));
    const SubgradientSet g = build_subgradient_set(pr.pt, classify_ball(p, pr, 0.1));
    ASSERT_EQ(g.members.size(), 2u);
    EXPECT_NEAR(std::min(g.members[0](0), g.members[1](0)), -2.0, 1e-6);
    EXPECT_NEAR(std::max(g.members[0](0), g.members[1](0)), -1.0, 1e-6);
}

TEST(Clarke, ProbeFindsDifferentiablePointAtKink)
{
    const BilevelProblem p = make_example1();
    const Prepared pr = prepare(p, Vector::Constant(1, -1.0));
    std::mt19937_64 rng(3);
    const LocalSensitivity ls = local_sensitivity(p, pr.pt, pr.sol, pr.sets, {}, rng);
    EXPECT_TRUE(ls.probed);
    EXPECT_LT(std::abs(ls.at(0) + 1.0), 1e-5);
}
