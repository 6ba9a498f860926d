#include <gtest/gtest.h>

#include "gam/gam.hpp"

using namespace gam;

TEST(ProblemCore, Example1PassesValidation)
{
    const BilevelProblem p = make_example1();
    const ValidationReport rep = validate_problem(p, random_samples(p, 10, 1));
    EXPECT_TRUE(rep.passed());
    ASSERT_NE(rep.find("derivatives"), nullptr);
    EXPECT_LT(rep.find("derivatives")->worst, 1e-6);
}

TEST(ProblemCore, WrongGradientIsCaught)
{
    BilevelProblem p = make_example1();
    p.grad_y_g = [](const Vector& x, const Vector& y) { return Vector::Constant(1, 2.0 * y(0) - x(0)); };
    const ValidationReport rep = validate_problem(p, random_samples(p, 5, 2));
    EXPECT_FALSE(rep.passed());
    EXPECT_FALSE(rep.find("derivatives")->passed);
}

TEST(ProblemCore, NonconvexLowerLevelIsCaught)
{
    BilevelProblem p = make_example1();
    p.mu = 5.0;  // declared modulus larger than the true one (2)
    EXPECT_FALSE(validate_problem(p, random_samples(p, 3, 3)).find("strong_convexity")->passed);
}

TEST(ProblemCore, QpAndSvmProblemsValidate)
{
    for (std::uint64_t seed : {0u, 1u, 2u}) {
        const BilevelQp qp = make_bilevel_qp(seed, 3, 4, 2, 1);
        EXPECT_TRUE(validate_problem(qp.problem, random_samples(qp.problem, 4, 5)).passed()) << seed;
    }
    const SvmHyperopt primal = make_svm_toy(0);
    EXPECT_TRUE(validate_problem(primal.problem, random_samples(primal.problem, 3, 6, 0.5)).passed());

    const SvmHyperopt dual = make_svm_hyperopt(make_classification_data(1, 6), make_classification_data(2, 5),
                                               Kernel::polynomial());
    ValidationOptions vo;
    vo.tol_rel = 1e-4;
    const auto rep = validate_problem(dual.problem, random_samples(dual.problem, 3, 7, 0.3), vo);
    for (const auto& c : rep.checks) EXPECT_TRUE(c.passed) << c.name << " " << c.detail;
}

TEST(ProblemCore, FiniteDifferenceFillIn)
{
    const BilevelProblem exact = make_ball_constrained();
    BilevelProblem sparse = exact;
    sparse.grad_x_f = nullptr;
    sparse.hess_xy_g = nullptr;
    sparse.jac_y_p = nullptr;
    const BilevelProblem filled = with_finite_differences(sparse);
    const Vector x = Vector::Constant(2, 0.3), y = Vector::Constant(2, -0.2);
    EXPECT_LT((filled.grad_x_f(x, y) - exact.grad_x_f(x, y)).norm(), 1e-7);
    EXPECT_LT((filled.hess_xy_g(x, y) - exact.hess_xy_g(x, y)).norm(), 1e-5);
    EXPECT_LT((filled.jac_y_p(x, y) - exact.jac_y_p(x, y)).norm(), 1e-7);
}

TEST(ProblemCore, LagrangianHessianRejectsNegativeMultiplier)
{
    const BilevelProblem p = make_example1();
    const Vector x = Vector::Constant(1, 0.0), y = Vector::Constant(1, 0.0);
    EXPECT_THROW(evaluate_lagrangian_hessians(p, x, y, Vector::Constant(1, -0.1), Vector(0)), PreconditionError);
    const auto h = evaluate_lagrangian_hessians(p, Vector::Constant(1, 1.5), y, Vector::Constant(1, 1.0), Vector(0));
    EXPECT_DOUBLE_EQ(h.hess_yy(0, 0), 2.0);
    EXPECT_DOUBLE_EQ(h.hess_xy(0, 0), -6.0);
}

TEST(ProblemCore, DimensionAndValueErrors)
{
    BilevelProblem p = make_example1();
    EXPECT_THROW(eval_p(p, Vector::Zero(2), Vector::Zero(1)), DimensionError);
    p.p = [](const Vector&, const Vector&) { return Vector::Constant(1, std::nan("")); };
    EXPECT_THROW(eval_p(p, Vector::Zero(1), Vector::Zero(1)), EvaluationError);
}

TEST(ProblemCore, EvaluationCacheHitsOnRepeat)
{
    const BilevelProblem p = make_example1();
    EvaluationCache cache;
    const Vector x = Vector::Constant(1, -0.5), y = Vector::Constant(1, 0.5), l = Vector::Constant(1, 0.5);
    const KktPoint& a = cache.get(p, x, y, l, Vector(0));
    EXPECT_DOUBLE_EQ(a.f, 0.5);
    cache.get(p, x, y, l, Vector(0));
    EXPECT_EQ(cache.hits(), 1u);
    EXPECT_EQ(cache.misses(), 1u);
    cache.get(p, Vector::Constant(1, -0.4), y, l, Vector(0));
    EXPECT_EQ(cache.misses(), 2u);
}
