#ifndef GAM_PROBLEM_HPP
#define GAM_PROBLEM_HPP

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "gam/core.hpp"

namespace gam {

using ScalarFn = std::function<double(const Vector& x, const Vector& y)>;
using VectorFn = std::function<Vector(const Vector& x, const Vector& y)>;
using MatrixFn = std::function<Matrix(const Vector& x, const Vector& y)>;
using IndexedMatrixFn = std::function<Matrix(int j, const Vector& x, const Vector& y)>;

/**
 * A bilevel program
 *
 *     min_x  f(x, y*(x))
 *     y*(x) = argmin_y { g(x, y) : p(x, y) <= 0, q(x, y) = 0 }
 *
 * described by value and derivative callbacks. Matrix conventions:
 * jac_y_p is m x d_y, jac_x_p is m x d_x, hess_xy_* are d_y x d_x (rows
 * indexed by y, columns by x). q must be affine in y.
 *
 * Callbacks must be pure functions of their arguments; they may be called
 * from several threads at once.
 */
struct BilevelProblem {
    std::string name = "unnamed";
    int d_x = 0;
    int d_y = 0;
    int m = 0;
    int n = 0;
    /// Declared strong-convexity modulus of g in y; spot-checked by validate_problem.
    double mu = 0.0;

    ScalarFn f;
    VectorFn grad_x_f;
    VectorFn grad_y_f;

    ScalarFn g;
    VectorFn grad_y_g;
    MatrixFn hess_yy_g;
    MatrixFn hess_xy_g;

    VectorFn p;
    MatrixFn jac_y_p;
    MatrixFn jac_x_p;
    IndexedMatrixFn hess_yy_p;
    IndexedMatrixFn hess_xy_p;

    VectorFn q;
    MatrixFn jac_y_q;
    MatrixFn jac_x_q;
    /// Optional: d^2 q_i / dy dx. Left empty when jac_y_q does not depend on x.
    IndexedMatrixFn hess_xy_q;

    /// Hint that g is quadratic and p, q are affine in y. Lets the lower
    /// solver finish with a single exact active-set KKT solve.
    bool lower_is_qp = false;
};

// ---------------------------------------------------------------------------
// Checked evaluation
// ---------------------------------------------------------------------------

namespace detail {

inline void check_size(const Vector& v, int expected, const char* what)
{
    if (v.size() != expected) {
        std::ostringstream os;
        os << what << ": expected length " << expected << ", got " << v.size();
        throw DimensionError(os.str());
    }
}

inline void check_shape(const Matrix& a, int rows, int cols, const char* what)
{
    if (a.rows() != rows || a.cols() != cols) {
        std::ostringstream os;
        os << what << ": expected " << rows << "x" << cols << ", got " << a.rows() << "x" << a.cols();
        throw DimensionError(os.str());
    }
}

template <typename T>
const T& check_finite(const T& value, const char* what)
{
    if (!value.allFinite()) throw EvaluationError(std::string(what) + " returned a non-finite value");
    return value;
}

inline double check_finite(double value, const char* what)
{
    if (!std::isfinite(value)) throw EvaluationError(std::string(what) + " returned a non-finite value");
    return value;
}

inline void check_point(const BilevelProblem& prob, const Vector& x, const Vector& y)
{
    check_size(x, prob.d_x, "x");
    check_size(y, prob.d_y, "y");
}

}  // namespace detail

inline Vector eval_p(const BilevelProblem& prob, const Vector& x, const Vector& y)
{
    detail::check_point(prob, x, y);
    if (prob.m == 0) return Vector(0);
    Vector v = prob.p(x, y);
    detail::check_size(v, prob.m, "p");
    return detail::check_finite(v, "p");
}

inline Vector eval_q(const BilevelProblem& prob, const Vector& x, const Vector& y)
{
    detail::check_point(prob, x, y);
    if (prob.n == 0) return Vector(0);
    Vector v = prob.q(x, y);
    detail::check_size(v, prob.n, "q");
    return detail::check_finite(v, "q");
}

inline Matrix eval_jac_y_p(const BilevelProblem& prob, const Vector& x, const Vector& y)
{
    detail::check_point(prob, x, y);
    if (prob.m == 0) return Matrix(0, prob.d_y);
    Matrix a = prob.jac_y_p(x, y);
    detail::check_shape(a, prob.m, prob.d_y, "jac_y_p");
    return detail::check_finite(a, "jac_y_p");
}

inline Matrix eval_jac_x_p(const BilevelProblem& prob, const Vector& x, const Vector& y)
{
    detail::check_point(prob, x, y);
    if (prob.m == 0) return Matrix(0, prob.d_x);
    Matrix a = prob.jac_x_p(x, y);
    detail::check_shape(a, prob.m, prob.d_x, "jac_x_p");
    return detail::check_finite(a, "jac_x_p");
}

inline Matrix eval_jac_y_q(const BilevelProblem& prob, const Vector& x, const Vector& y)
{
    detail::check_point(prob, x, y);
    if (prob.n == 0) return Matrix(0, prob.d_y);
    Matrix a = prob.jac_y_q(x, y);
    detail::check_shape(a, prob.n, prob.d_y, "jac_y_q");
    return detail::check_finite(a, "jac_y_q");
}

inline Matrix eval_jac_x_q(const BilevelProblem& prob, const Vector& x, const Vector& y)
{
    detail::check_point(prob, x, y);
    if (prob.n == 0) return Matrix(0, prob.d_x);
    Matrix a = prob.jac_x_q(x, y);
    detail::check_shape(a, prob.n, prob.d_x, "jac_x_q");
    return detail::check_finite(a, "jac_x_q");
}

inline double eval_f(const BilevelProblem& prob, const Vector& x, const Vector& y)
{
    detail::check_point(prob, x, y);
    return detail::check_finite(prob.f(x, y), "f");
}

inline double eval_g(const BilevelProblem& prob, const Vector& x, const Vector& y)
{
    detail::check_point(prob, x, y);
    return detail::check_finite(prob.g(x, y), "g");
}

inline Vector eval_grad_y_g(const BilevelProblem& prob, const Vector& x, const Vector& y)
{
    detail::check_point(prob, x, y);
    Vector v = prob.grad_y_g(x, y);
    detail::check_size(v, prob.d_y, "grad_y_g");
    return detail::check_finite(v, "grad_y_g");
}

inline Vector eval_grad_x_f(const BilevelProblem& prob, const Vector& x, const Vector& y)
{
    detail::check_point(prob, x, y);
    Vector v = prob.grad_x_f(x, y);
    detail::check_size(v, prob.d_x, "grad_x_f");
    return detail::check_finite(v, "grad_x_f");
}

inline Vector eval_grad_y_f(const BilevelProblem& prob, const Vector& x, const Vector& y)
{
    detail::check_point(prob, x, y);
    Vector v = prob.grad_y_f(x, y);
    detail::check_size(v, prob.d_y, "grad_y_f");
    return detail::check_finite(v, "grad_y_f");
}

struct LagrangianHessians {
    Matrix hess_yy;  ///< d_y x d_y
    Matrix hess_xy;  ///< d_y x d_x
};

/// Second derivatives of L = g + lambda^T p + nu^T q at (x, y). q is affine in
/// y so it contributes no yy term; its xy term is used only when hess_xy_q is set.
inline LagrangianHessians evaluate_lagrangian_hessians(const BilevelProblem& prob, const Vector& x,
                                                       const Vector& y, const Vector& lambda,
                                                       const Vector& nu)
{
    detail::check_point(prob, x, y);
    detail::check_size(lambda, prob.m, "lambda");
    detail::check_size(nu, prob.n, "nu");
    if (prob.m > 0 && lambda.minCoeff() < 0.0)
        throw PreconditionError("evaluate_lagrangian_hessians: lambda must be nonnegative");

    LagrangianHessians out;
    out.hess_yy = prob.hess_yy_g(x, y);
    out.hess_xy = prob.hess_xy_g(x, y);
    detail::check_shape(out.hess_yy, prob.d_y, prob.d_y, "hess_yy_g");
    detail::check_shape(out.hess_xy, prob.d_y, prob.d_x, "hess_xy_g");
    detail::check_finite(out.hess_yy, "hess_yy_g");
    detail::check_finite(out.hess_xy, "hess_xy_g");

    for (int j = 0; j < prob.m; ++j) {
        if (lambda(j) == 0.0) continue;
        Matrix hyy = prob.hess_yy_p(j, x, y);
        Matrix hxy = prob.hess_xy_p(j, x, y);
        detail::check_shape(hyy, prob.d_y, prob.d_y, "hess_yy_p");
        detail::check_shape(hxy, prob.d_y, prob.d_x, "hess_xy_p");
        out.hess_yy += lambda(j) * detail::check_finite(hyy, "hess_yy_p");
        out.hess_xy += lambda(j) * detail::check_finite(hxy, "hess_xy_p");
    }
    if (prob.hess_xy_q) {
        for (int i = 0; i < prob.n; ++i) {
            if (nu(i) == 0.0) continue;
            Matrix hxy = prob.hess_xy_q(i, x, y);
            detail::check_shape(hxy, prob.d_y, prob.d_x, "hess_xy_q");
            out.hess_xy += nu(i) * detail::check_finite(hxy, "hess_xy_q");
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

/// Central-difference step for coordinate value `c`.
inline double fd_step(double c, double h_rel) { return h_rel * (1.0 + std::abs(c)); }

template <typename Fn>
Vector fd_gradient(Fn&& fn, const Vector& at, double h_rel = 1e-6)
{
    Vector grad(at.size());
    Vector probe = at;
    for (Eigen::Index i = 0; i < at.size(); ++i) {
        const double h = fd_step(at(i), h_rel);
        probe(i) = at(i) + h;
        const double up = fn(probe);
        probe(i) = at(i) - h;
        const double down = fn(probe);
        probe(i) = at(i);
        grad(i) = (up - down) / (2.0 * h);
    }
    return grad;
}

/// Jacobian of a vector-valued function: rows are outputs, columns inputs.
template <typename Fn>
Matrix fd_jacobian(Fn&& fn, const Vector& at, double h_rel = 1e-6)
{
    Vector probe = at;
    const Vector f0 = fn(at);
    Matrix jac(f0.size(), at.size());
    for (Eigen::Index i = 0; i < at.size(); ++i) {
        const double h = fd_step(at(i), h_rel);
        probe(i) = at(i) + h;
        const Vector up = fn(probe);
        probe(i) = at(i) - h;
        const Vector down = fn(probe);
        probe(i) = at(i);
        jac.col(i) = (up - down) / (2.0 * h);
    }
    return jac;
}

/**
 * Returns a copy of `prob` where every empty derivative callback is replaced
 * by central differences of the corresponding lower-order callback. Intended
 * for prototyping; second derivatives obtained this way are accurate to
 * roughly 1e-6 relative.
 */
inline BilevelProblem with_finite_differences(BilevelProblem prob, double h_rel = 1e-6)
{
    const double h2 = std::sqrt(h_rel) * 1e-2;  // coarser step for nested differences
    auto in_x = [](auto fn, const Vector& y) { return [fn, y](const Vector& xx) { return fn(xx, y); }; };
    auto in_y = [](auto fn, const Vector& x) { return [fn, x](const Vector& yy) { return fn(x, yy); }; };

    if (!prob.grad_x_f) {
        auto f = prob.f;
        prob.grad_x_f = [=](const Vector& x, const Vector& y) { return fd_gradient(in_x(f, y), x, h_rel); };
    }
    if (!prob.grad_y_f) {
        auto f = prob.f;
        prob.grad_y_f = [=](const Vector& x, const Vector& y) { return fd_gradient(in_y(f, x), y, h_rel); };
    }
    if (!prob.grad_y_g) {
        auto g = prob.g;
        prob.grad_y_g = [=](const Vector& x, const Vector& y) { return fd_gradient(in_y(g, x), y, h_rel); };
    }
    if (!prob.hess_yy_g) {
        auto dg = prob.grad_y_g;
        prob.hess_yy_g = [=](const Vector& x, const Vector& y) {
            Matrix h = fd_jacobian(in_y(dg, x), y, h2);
            return Matrix(0.5 * (h + h.transpose()));
        };
    }
    if (!prob.hess_xy_g) {
        auto dg = prob.grad_y_g;
        prob.hess_xy_g = [=](const Vector& x, const Vector& y) { return fd_jacobian(in_x(dg, y), x, h2); };
    }
    if (prob.m > 0) {
        if (!prob.jac_y_p) {
            auto p = prob.p;
            prob.jac_y_p = [=](const Vector& x, const Vector& y) { return fd_jacobian(in_y(p, x), y, h_rel); };
        }
        if (!prob.jac_x_p) {
            auto p = prob.p;
            prob.jac_x_p = [=](const Vector& x, const Vector& y) { return fd_jacobian(in_x(p, y), x, h_rel); };
        }
        if (!prob.hess_yy_p) {
            auto jp = prob.jac_y_p;
            prob.hess_yy_p = [=](int j, const Vector& x, const Vector& y) {
                auto row = [jp, j, x](const Vector& yy) { return Vector(jp(x, yy).row(j).transpose()); };
                Matrix h = fd_jacobian(row, y, h2);
                return Matrix(0.5 * (h + h.transpose()));
            };
        }
        if (!prob.hess_xy_p) {
            auto jp = prob.jac_y_p;
            prob.hess_xy_p = [=](int j, const Vector& x, const Vector& y) {
                auto row = [jp, j, y](const Vector& xx) { return Vector(jp(xx, y).row(j).transpose()); };
                return fd_jacobian(row, x, h2);
            };
        }
    }
    if (prob.n > 0) {
        if (!prob.jac_y_q) {
            auto q = prob.q;
            prob.jac_y_q = [=](const Vector& x, const Vector& y) { return fd_jacobian(in_y(q, x), y, h_rel); };
        }
        if (!prob.jac_x_q) {
            auto q = prob.q;
            prob.jac_x_q = [=](const Vector& x, const Vector& y) { return fd_jacobian(in_x(q, y), x, h_rel); };
        }
    }
    return prob;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct ValidationOptions {
    double tol_rel = 1e-5;  ///< derivative agreement with central differences
    double tol_psd = 1e-8;  ///< slack for eigenvalue checks
    double fd_step = 1e-6;  ///< relative central-difference step
    double tol_affine = 1e-8;
    unsigned seed = 12345;  ///< for the auxiliary y' used in the affineness check
};

struct CheckResult {
    std::string name;
    bool passed = true;
    double worst = 0.0;  ///< worst observed error / eigenvalue, check dependent
    std::string detail;
};

struct ValidationReport {
    std::vector<CheckResult> checks;
    std::string note;

    bool passed() const
    {
        return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
    }

    const CheckResult* find(const std::string& name) const
    {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }
};

namespace detail {

/// max_ij |a - b| / (1 + |b|)
inline double relative_error(const Matrix& a, const Matrix& b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols()) return std::numeric_limits<double>::infinity();
    if (a.size() == 0) return 0.0;
    return ((a - b).cwiseAbs().array() / (1.0 + b.cwiseAbs().array())).maxCoeff();
}

class CheckAccumulator {
public:
    CheckAccumulator(std::string name, double tol) : result_{std::move(name), true, 0.0, {}}, tol_(tol) {}

    void error(double err, const std::string& where)
    {
        if (!(err <= tol_)) {
            if (result_.passed) result_.detail = where;
            result_.passed = false;
        }
        if (!(err <= result_.worst)) result_.worst = err;
    }

    void fail(const std::string& why)
    {
        if (result_.passed) result_.detail = why;
        result_.passed = false;
    }

    CheckResult take() { return std::move(result_); }

private:
    CheckResult result_;
    double tol_;
};

inline double min_eigenvalue(const Matrix& sym)
{
    if (sym.size() == 0) return std::numeric_limits<double>::infinity();
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

}  // namespace detail

/**
 * Numerically spot-checks the standing assumptions of the framework at the
 * given sample points: analytic derivatives against central differences,
 * symmetry and mu-strong convexity of the g Hessian, convexity of each p_j
 * (Hessian PSD) and affineness of q in y.
 *
 * Strong convexity and convexity can only be verified at the samples; the
 * report does not certify them globally.
 */
inline ValidationReport validate_problem(const BilevelProblem& prob,
                                         const std::vector<std::pair<Vector, Vector>>& samples,
                                         const ValidationOptions& opts = {})
{
    if (samples.empty()) throw PreconditionError("validate_problem: at least one sample point required");

    ValidationReport report;
    report.note = "mu-strong convexity and convexity of p are checked at the sample points only";

    detail::CheckAccumulator deriv("derivatives", opts.tol_rel);
    detail::CheckAccumulator symmetry("hessian_symmetry", 1e-10);
    detail::CheckAccumulator strong("strong_convexity", 0.0);
    detail::CheckAccumulator convex_p("convexity_p", 0.0);
    detail::CheckAccumulator affine_q("affineness_q", opts.tol_affine);
    detail::CheckAccumulator finite("finite_values", 0.0);

    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double h = opts.fd_step;

    for (std::size_t s = 0; s < samples.size(); ++s) {
        const Vector& x = samples[s].first;
        const Vector& y = samples[s].second;
        detail::check_point(prob, x, y);
        const std::string at = "sample " + std::to_string(s);

        try {
            auto f_y = [&](const Vector& yy) { return prob.f(x, yy); };
            auto f_x = [&](const Vector& xx) { return prob.f(xx, y); };
            auto g_y = [&](const Vector& yy) { return prob.g(x, yy); };
            auto dg_y = [&](const Vector& yy) { return Vector(prob.grad_y_g(x, yy)); };
            auto dg_x = [&](const Vector& xx) { return Vector(prob.grad_y_g(xx, y)); };

            deriv.error(detail::relative_error(eval_grad_x_f(prob, x, y), fd_gradient(f_x, x, h)), at + ": grad_x_f");
            deriv.error(detail::relative_error(eval_grad_y_f(prob, x, y), fd_gradient(f_y, y, h)), at + ": grad_y_f");
            deriv.error(detail::relative_error(eval_grad_y_g(prob, x, y), fd_gradient(g_y, y, h)), at + ": grad_y_g");

            const Matrix hyy = prob.hess_yy_g(x, y);
            const Matrix hxy = prob.hess_xy_g(x, y);
            detail::check_shape(hyy, prob.d_y, prob.d_y, "hess_yy_g");
            detail::check_shape(hxy, prob.d_y, prob.d_x, "hess_xy_g");
            deriv.error(detail::relative_error(hyy, fd_jacobian(dg_y, y, h)), at + ": hess_yy_g");
            deriv.error(detail::relative_error(hxy, fd_jacobian(dg_x, x, h)), at + ": hess_xy_g");

            symmetry.error((hyy - hyy.transpose()).cwiseAbs().maxCoeff() / (1.0 + hyy.cwiseAbs().maxCoeff()),
                           at + ": hess_yy_g");
            const double lmin = detail::min_eigenvalue(0.5 * (hyy + hyy.transpose()));
            if (lmin < prob.mu - opts.tol_psd)
                strong.fail(at + ": min eigenvalue " + std::to_string(lmin) + " < mu " + std::to_string(prob.mu));
            strong.error(0.0, at);

            if (prob.m > 0) {
                auto p_y = [&](const Vector& yy) { return Vector(prob.p(x, yy)); };
                auto p_x = [&](const Vector& xx) { return Vector(prob.p(xx, y)); };
                deriv.error(detail::relative_error(eval_jac_y_p(prob, x, y), fd_jacobian(p_y, y, h)), at + ": jac_y_p");
                deriv.error(detail::relative_error(eval_jac_x_p(prob, x, y), fd_jacobian(p_x, x, h)), at + ": jac_x_p");
                for (int j = 0; j < prob.m; ++j) {
                    auto jrow_y = [&](const Vector& yy) { return Vector(prob.jac_y_p(x, yy).row(j).transpose()); };
                    auto jrow_x = [&](const Vector& xx) { return Vector(prob.jac_y_p(xx, y).row(j).transpose()); };
                    const Matrix pyy = prob.hess_yy_p(j, x, y);
                    const Matrix pxy = prob.hess_xy_p(j, x, y);
                    const std::string tag = at + ": p_" + std::to_string(j);
                    deriv.error(detail::relative_error(pyy, fd_jacobian(jrow_y, y, h)), tag + " hess_yy");
                    deriv.error(detail::relative_error(pxy, fd_jacobian(jrow_x, x, h)), tag + " hess_xy");
                    const double pmin = detail::min_eigenvalue(0.5 * (pyy + pyy.transpose()));
                    if (pmin < -opts.tol_psd) convex_p.fail(tag + " Hessian not PSD");
                }
            }

            if (prob.n > 0) {
                auto q_y = [&](const Vector& yy) { return Vector(prob.q(x, yy)); };
                auto q_x = [&](const Vector& xx) { return Vector(prob.q(xx, y)); };
                const Matrix jq = eval_jac_y_q(prob, x, y);
                deriv.error(detail::relative_error(jq, fd_jacobian(q_y, y, h)), at + ": jac_y_q");
                deriv.error(detail::relative_error(eval_jac_x_q(prob, x, y), fd_jacobian(q_x, x, h)), at + ": jac_x_q");
                if (prob.hess_xy_q) {
                    for (int i = 0; i < prob.n; ++i) {
                        auto jrow_x = [&](const Vector& xx) { return Vector(prob.jac_y_q(xx, y).row(i).transpose()); };
                        deriv.error(detail::relative_error(prob.hess_xy_q(i, x, y), fd_jacobian(jrow_x, x, h)),
                                    at + ": hess_xy_q");
                    }
                }
                // q(x, y) - q(x, y') must equal jac_y_q (y - y') for an affine q
                Vector y2(y.size());
                for (Eigen::Index i = 0; i < y2.size(); ++i) y2(i) = y(i) + normal(rng);
                const Vector lhs = eval_q(prob, x, y) - eval_q(prob, x, y2);
                const Vector rhs = jq * (y - y2);
                affine_q.error(detail::relative_error(lhs, rhs), at);
            }
            finite.error(0.0, at);
        } catch (const EvaluationError& e) {
            finite.fail(at + ": " + e.what());
        }
    }

    report.checks.push_back(deriv.take());
    report.checks.push_back(symmetry.take());
    report.checks.push_back(strong.take());
    report.checks.push_back(convex_p.take());
    report.checks.push_back(affine_q.take());
    report.checks.push_back(finite.take());
    return report;
}

/// Random sample points x ~ N(0, scale^2), y ~ N(0, scale^2) for validate_problem.
inline std::vector<std::pair<Vector, Vector>> random_samples(const BilevelProblem& prob, int count, unsigned seed,
                                                             double scale = 1.0)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, scale);
    std::vector<std::pair<Vector, Vector>> out;
    for (int s = 0; s < count; ++s) {
        Vector x(prob.d_x), y(prob.d_y);
        for (auto& v : x) v = normal(rng);
        for (auto& v : y) v = normal(rng);
        out.emplace_back(std::move(x), std::move(y));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation bundle and cache
// ---------------------------------------------------------------------------

/// Every first/second-order quantity the sensitivity and Clarke modules need
/// at one primal-dual point.
struct KktPoint {
    Vector x, y, lambda, nu;
    Matrix hess_yy_L, hess_xy_L;
    Vector p, q;
    Matrix jac_y_p, jac_x_p, jac_y_q, jac_x_q;
    Vector grad_x_f, grad_y_f;
    double f = 0.0;
};

inline KktPoint make_kkt_point(const BilevelProblem& prob, const Vector& x, const Vector& y, const Vector& lambda,
                               const Vector& nu)
{
    KktPoint pt;
    pt.x = x;
    pt.y = y;
    pt.lambda = lambda;
    pt.nu = nu;
    auto hess = evaluate_lagrangian_hessians(prob, x, y, lambda, nu);
    pt.hess_yy_L = std::move(hess.hess_yy);
    pt.hess_xy_L = std::move(hess.hess_xy);
    pt.p = eval_p(prob, x, y);
    pt.q = eval_q(prob, x, y);
    pt.jac_y_p = eval_jac_y_p(prob, x, y);
    pt.jac_x_p = eval_jac_x_p(prob, x, y);
    pt.jac_y_q = eval_jac_y_q(prob, x, y);
    pt.jac_x_q = eval_jac_x_q(prob, x, y);
    pt.grad_x_f = eval_grad_x_f(prob, x, y);
    pt.grad_y_f = eval_grad_y_f(prob, x, y);
    pt.f = eval_f(prob, x, y);
    return pt;
}

/**
 * Single-entry memo of the most recent KktPoint. Keyed on exact equality of
 * (x, y, lambda, nu); the hash only short-circuits the comparison. Owned by
 * one solver instance and not thread safe.
 */
class EvaluationCache {
public:
    const KktPoint& get(const BilevelProblem& prob, const Vector& x, const Vector& y, const Vector& lambda,
                        const Vector& nu)
    {
        const std::size_t key = hash_of(x, y, lambda, nu);
        if (entry_ && key == key_ && entry_->x == x && entry_->y == y && entry_->lambda == lambda &&
            entry_->nu == nu) {
            ++hits_;
            return *entry_;
        }
        ++misses_;
        entry_ = make_kkt_point(prob, x, y, lambda, nu);
        key_ = key;
        return *entry_;
    }

    void clear() { entry_.reset(); }
    std::size_t hits() const { return hits_; }
    std::size_t misses() const { return misses_; }

private:
    static std::size_t hash_of(const Vector& x, const Vector& y, const Vector& lambda, const Vector& nu)
    {
        std::size_t h = 0xcbf29ce484222325ull;
        auto mix = [&h](const Vector& v) {
            for (double d : v) h = (h ^ std::hash<double>{}(d)) * 0x100000001b3ull;
            h = (h ^ static_cast<std::size_t>(v.size())) * 0x100000001b3ull;
        };
        mix(x);
        mix(y);
        mix(lambda);
        mix(nu);
        return h;
    }

    std::optional<KktPoint> entry_;
    std::size_t key_ = 0;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
};

}  // namespace gam

#endif  // GAM_PROBLEM_HPP
