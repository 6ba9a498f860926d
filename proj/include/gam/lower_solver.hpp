#ifndef GAM_LOWER_SOLVER_HPP
#define GAM_LOWER_SOLVER_HPP

#include <optional>
#include <string>
#include <vector>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "gam/problem.hpp"

namespace gam {

struct SolverOpts {
    double tol_kkt = 1e-9;
    int max_iter = 200;
    double tol_active = 1e-7;
    /// Warm-started slacks and multipliers are pushed to at least this value.
    double warm_floor = 1e-6;
    /// LICQ fails when the smallest singular value of the active-gradient
    /// stack drops below tol_licq times the largest one.
    double tol_licq = 1e-8;
    /// A warning is attached above this ratio but below 1 / tol_licq.
    double licq_warn = 1e-6;
    bool check_licq = true;
    /// Try exact active-set KKT solves once the interior point iterates are close.
    bool polish = true;
};

struct LowerSolution {
    Vector y_star;
    Vector lambda;  ///< >= 0
    Vector nu;
    Vector p_value;  ///< p(x, y_star)
    double kkt_residual = 0.0;
    double stationarity = 0.0;
    double primal_infeasibility = 0.0;
    double complementarity = 0.0;
    int iterations = 0;
    bool converged = false;
    bool polished = false;
    /// Interior-point slacks at termination; used to seed warm starts.
    Vector slack;
    /// sigma_min / sigma_max of the active-gradient stack (1 when nothing is active).
    double licq_ratio = 1.0;
    std::vector<std::string> warnings;
};

struct ActiveSetClassification {
    IndexSet J;       ///< active
    IndexSet J_plus;  ///< strictly active
    IndexSet J_zero;  ///< active with vanishing multiplier
};

class MaxIterations : public GamError {
public:
    MaxIterations(const std::string& what, LowerSolution partial) : GamError(what), partial(std::move(partial)) {}
    LowerSolution partial;
};

struct KktResiduals {
    double stationarity = 0.0;
    double primal = 0.0;
    double dual = 0.0;  ///< max(-lambda_j, 0)
    double complementarity = 0.0;
    double max() const { return std::max({stationarity, primal, dual, complementarity}); }
};

/// KKT residuals of (y, lambda, nu) for P(x), all in the infinity norm.
inline KktResiduals kkt_residuals(const BilevelProblem& prob, const Vector& x, const Vector& y, const Vector& lambda,
                                  const Vector& nu)
{
    KktResiduals r;
    const Vector pv = eval_p(prob, x, y);
    const Vector qv = eval_q(prob, x, y);
    Vector grad = eval_grad_y_g(prob, x, y);
    if (prob.m > 0) grad += eval_jac_y_p(prob, x, y).transpose() * lambda;
    if (prob.n > 0) grad += eval_jac_y_q(prob, x, y).transpose() * nu;
    r.stationarity = inf_norm(grad);
    if (prob.m > 0) {
        r.primal = std::max(0.0, pv.maxCoeff());
        r.dual = std::max(0.0, -lambda.minCoeff());
        r.complementarity = inf_norm(lambda.cwiseProduct(pv));
    }
    r.primal = std::max(r.primal, inf_norm(qv));
    return r;
}

namespace detail {

struct IpmState {
    Vector y, s, lambda, nu;
};

struct IpmEval {
    Vector grad_g, p, q;
    Matrix jac_p, jac_q;
    Vector r_d, r_p, r_q;
};

inline IpmEval ipm_evaluate(const BilevelProblem& prob, const Vector& x, const IpmState& z)
{
    IpmEval e;
    e.grad_g = eval_grad_y_g(prob, x, z.y);
    e.p = eval_p(prob, x, z.y);
    e.q = eval_q(prob, x, z.y);
    e.jac_p = eval_jac_y_p(prob, x, z.y);
    e.jac_q = eval_jac_y_q(prob, x, z.y);
    e.r_d = e.grad_g;
    if (prob.m > 0) e.r_d += e.jac_p.transpose() * z.lambda;
    if (prob.n > 0) e.r_d += e.jac_q.transpose() * z.nu;
    e.r_p = e.p + z.s;
    e.r_q = e.q;
    return e;
}

inline double max_step_to_boundary(const Vector& v, const Vector& dv, double tau)
{
    double alpha = 1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (dv(i) < 0.0) alpha = std::min(alpha, -tau * v(i) / dv(i));
    return alpha;
}

/// Norm of the perturbed KKT map with complementarity target `target`.
inline double ipm_merit(const IpmEval& e, const IpmState& z, double target)
{
    double sq = e.r_d.squaredNorm() + e.r_p.squaredNorm() + e.r_q.squaredNorm();
    if (z.s.size()) sq += (z.s.cwiseProduct(z.lambda).array() - target).matrix().squaredNorm();
    return std::sqrt(sq);
}

/**
 * Exact solve of the KKT system with the inequalities in `active` held as
 * equalities: Newton iterations on
 *   grad g + J_A^T lambda_A + J_q^T nu = 0,  p_A = 0,  q = 0.
 * For a QP lower level one iteration is exact. Returns nothing when the
 * system is singular or the result is not a KKT point at tolerance `tol`.
 */
inline std::optional<LowerSolution> polish_active_set(const BilevelProblem& prob, const Vector& x,
                                                      const IpmState& start, const IndexSet& active, double tol)
{
    const int dy = prob.d_y;
    const int na = static_cast<int>(active.size());
    const int n = prob.n;
    if (na + n > dy) return std::nullopt;

    Vector y = start.y;
    Vector lam_a = select_entries(start.lambda, active);
    Vector nu = start.nu;
    Vector lambda_full = Vector::Zero(prob.m);

    const int max_newton = prob.lower_is_qp ? 2 : 15;
    for (int it = 0; it < max_newton; ++it) {
        for (int k = 0; k < na; ++k) lambda_full(active[k]) = std::max(lam_a(k), 0.0);
        Matrix h = prob.hess_yy_g(x, y);
        for (int k = 0; k < na; ++k)
            if (lam_a(k) != 0.0) h += lam_a(k) * prob.hess_yy_p(active[k], x, y);
        const Matrix jp = eval_jac_y_p(prob, x, y);
        const Matrix ja = select_rows(jp, active);
        const Matrix jq = eval_jac_y_q(prob, x, y);
        const Vector pa = select_entries(eval_p(prob, x, y), active);
        const Vector qv = eval_q(prob, x, y);

        Vector r_d = eval_grad_y_g(prob, x, y);
        if (na) r_d += ja.transpose() * lam_a;
        if (n) r_d += jq.transpose() * nu;

        const int size = dy + na + n;
        Matrix k_mat = Matrix::Zero(size, size);
        k_mat.topLeftCorner(dy, dy) = h;
        if (na) {
            k_mat.block(0, dy, dy, na) = ja.transpose();
            k_mat.block(dy, 0, na, dy) = ja;
        }
        if (n) {
            k_mat.block(0, dy + na, dy, n) = jq.transpose();
            k_mat.block(dy + na, 0, n, dy) = jq;
        }
        Vector rhs(size);
        rhs << -r_d, -pa, -qv;
        const double scale = std::max(1.0, std::sqrt(rhs.squaredNorm()));
        if (rhs.norm() <= 1e-3 * tol && it > 0) break;

        Eigen::FullPivLU<Matrix> lu(k_mat);
        if (lu.rank() < size) return std::nullopt;
        const Vector step = lu.solve(rhs);
        if (!step.allFinite() || step.norm() > 1e12 * scale) return std::nullopt;
        y += step.head(dy);
        lam_a += step.segment(dy, na);
        nu += step.tail(n);
    }

    LowerSolution sol;
    sol.y_star = y;
    sol.lambda = Vector::Zero(prob.m);
    for (int k = 0; k < na; ++k) {
        if (lam_a(k) < -tol) return std::nullopt;
        sol.lambda(active[k]) = std::max(lam_a(k), 0.0);
    }
    sol.nu = nu;
    const KktResiduals r = kkt_residuals(prob, x, sol.y_star, sol.lambda, sol.nu);
    if (!(r.max() <= tol)) return std::nullopt;
    sol.stationarity = r.stationarity;
    sol.primal_infeasibility = r.primal;
    sol.complementarity = r.complementarity;
    sol.kkt_residual = r.max();
    sol.p_value = eval_p(prob, x, sol.y_star);
    sol.polished = true;
    return sol;
}

/// Farkas-type test on the normalized multipliers: inf_y lambda^T p + nu^T q > 0.
inline bool infeasibility_certificate(const BilevelProblem& prob, const Vector& x, const IpmState& z,
                                      const IpmEval& e)
{
    const double scale = std::sqrt(z.lambda.squaredNorm() + z.nu.squaredNorm());
    if (scale < 1e6) return false;
    const Vector lam = z.lambda / scale;
    const Vector nu = z.nu / scale;
    Vector grad = Vector::Zero(prob.d_y);
    double value = 0.0;
    if (prob.m) {
        grad += e.jac_p.transpose() * lam;
        value += lam.dot(e.p);
    }
    if (prob.n) {
        grad += e.jac_q.transpose() * nu;
        value += nu.dot(e.q);
    }
    // A nearly stationary point of the (convex) combination with a positive
    // value certifies that no feasible y exists.
    return inf_norm(grad) < 1e-6 && value > 1e-6;
}

inline void check_licq(const BilevelProblem& prob, const Vector& x, LowerSolution& sol, const SolverOpts& opts)
{
    IndexSet active;
    for (int j = 0; j < prob.m; ++j)
        if (std::abs(sol.p_value(j)) <= opts.tol_active || sol.lambda(j) > opts.tol_active) active.push_back(j);
    const int rows = static_cast<int>(active.size()) + prob.n;
    if (rows == 0) return;
    Matrix stack(rows, prob.d_y);
    if (!active.empty()) stack.topRows(static_cast<Eigen::Index>(active.size())) = select_rows(eval_jac_y_p(prob, x, sol.y_star), active);
    if (prob.n) stack.bottomRows(prob.n) = eval_jac_y_q(prob, x, sol.y_star);

    Eigen::JacobiSVD<Matrix> svd(stack);
    const auto& sv = svd.singularValues();
    const double smax = sv.size() ? sv(0) : 0.0;
    const double smin = rows > prob.d_y ? 0.0 : sv(sv.size() - 1);
    sol.licq_ratio = smax > 0.0 ? smin / smax : 0.0;
    if (smax == 0.0 || smin < opts.tol_licq * smax) {
        throw LicqViolation("solve_lower: active constraint gradients are linearly dependent at x (sigma_min/sigma_max = " +
                                std::to_string(sol.licq_ratio) + ")",
                            smin, smax);
    }
    if (sol.licq_ratio < opts.licq_warn)
        sol.warnings.push_back("active constraint gradients are ill-conditioned; multipliers may be inaccurate (ratio " +
                               std::to_string(sol.licq_ratio) + ")");
}

}  // namespace detail

/**
 * Solves P(x) with a primal-dual interior-point method on the slack form
 *   grad g + J_p^T lambda + J_q^T nu = 0,  p + s = 0,  q = 0,  S lambda = sigma mu e
 * using Mehrotra predictor-corrector centering. Once the iterates are close,
 * the active set guessed from lambda vs. s is solved exactly (polish), which
 * removes the sqrt(mu) bias interior-point iterates carry at degenerate points.
 *
 * Throws InfeasibleLowerLevel, LicqViolation, or MaxIterations (carrying the
 * last iterate).
 */
inline LowerSolution solve_lower(const BilevelProblem& prob, const Vector& x,
                                 const std::optional<LowerSolution>& warm_start = std::nullopt,
                                 const SolverOpts& opts = {})
{
    if (!(opts.tol_kkt > 0.0)) throw PreconditionError("solve_lower: tol_kkt must be positive");
    detail::check_size(x, prob.d_x, "x");
    const int dy = prob.d_y, m = prob.m, n = prob.n;

    detail::IpmState z;
    if (warm_start && warm_start->y_star.size() == dy) {
        z.y = warm_start->y_star;
        z.nu = warm_start->nu.size() == n ? warm_start->nu : Vector(Vector::Zero(n));
        z.lambda = warm_start->lambda.size() == m ? warm_start->lambda : Vector(Vector::Ones(m));
        z.lambda = z.lambda.cwiseMax(opts.warm_floor);
        z.s = (-eval_p(prob, x, z.y)).cwiseMax(opts.warm_floor);
    } else {
        z.y = Vector::Zero(dy);
        z.nu = Vector::Zero(n);
        z.lambda = Vector::Ones(m);
        z.s = (-eval_p(prob, x, z.y)).cwiseMax(1.0);
    }

    LowerSolution best;
    const bool linear_model = prob.lower_is_qp;
    const double tau_min = 0.99;

    for (int iter = 0; iter <= opts.max_iter; ++iter) {
        detail::IpmEval e = detail::ipm_evaluate(prob, x, z);
        const double mu = m ? z.s.dot(z.lambda) / m : 0.0;

        const KktResiduals res = kkt_residuals(prob, x, z.y, z.lambda, z.nu);
        if (opts.polish && (res.max() < 1e-3 || mu < 1e-4)) {
            IndexSet guess;
            for (int j = 0; j < m; ++j)
                if (z.lambda(j) >= z.s(j)) guess.push_back(j);
            if (auto pol = detail::polish_active_set(prob, x, z, guess, opts.tol_kkt)) {
                pol->iterations = iter;
                pol->converged = true;
                pol->slack = (-pol->p_value).cwiseMax(0.0);
                if (opts.check_licq) detail::check_licq(prob, x, *pol, opts);
                return *pol;
            }
        }
        if (res.max() <= opts.tol_kkt) {
            LowerSolution sol;
            sol.y_star = z.y;
            sol.lambda = z.lambda;
            sol.nu = z.nu;
            sol.p_value = e.p;
            sol.slack = z.s;
            sol.stationarity = res.stationarity;
            sol.primal_infeasibility = res.primal;
            sol.complementarity = res.complementarity;
            sol.kkt_residual = res.max();
            sol.iterations = iter;
            sol.converged = true;
            if (opts.check_licq) detail::check_licq(prob, x, sol, opts);
            return sol;
        }
        if (detail::infeasibility_certificate(prob, x, z, e))
            throw InfeasibleLowerLevel("solve_lower: lower-level problem is infeasible at x");
        if (iter == opts.max_iter) {
            best.y_star = z.y;
            best.lambda = z.lambda;
            best.nu = z.nu;
            best.p_value = e.p;
            best.slack = z.s;
            best.stationarity = res.stationarity;
            best.primal_infeasibility = res.primal;
            best.complementarity = res.complementarity;
            best.kkt_residual = res.max();
            best.iterations = iter;
            best.converged = false;
            break;
        }

        // Reduced Newton system: eliminate ds and dlambda.
        Matrix h = prob.hess_yy_g(x, z.y);
        detail::check_shape(h, dy, dy, "hess_yy_g");
        for (int j = 0; j < m; ++j)
            if (z.lambda(j) != 0.0) h += z.lambda(j) * prob.hess_yy_p(j, x, z.y);
        const Vector sigma = m ? Vector(z.lambda.cwiseQuotient(z.s)) : Vector(0);
        Matrix k_mat = Matrix::Zero(dy + n, dy + n);
        k_mat.topLeftCorner(dy, dy) = h;
        if (m) k_mat.topLeftCorner(dy, dy) += e.jac_p.transpose() * sigma.asDiagonal() * e.jac_p;
        if (n) {
            k_mat.topRightCorner(dy, n) = e.jac_q.transpose();
            k_mat.bottomLeftCorner(n, dy) = e.jac_q;
        }
        Eigen::PartialPivLU<Matrix> lu(k_mat);

        struct Step {
            Vector dy, ds, dlambda, dnu;
        };
        auto newton = [&](const Vector& r_c) {
            Vector rhs(dy + n);
            Vector top = -e.r_d;
            if (m) top -= e.jac_p.transpose() * (sigma.cwiseProduct(e.r_p) - r_c.cwiseQuotient(z.s));
            rhs << top, -e.r_q;
            Vector sol = lu.solve(rhs);
            if (!sol.allFinite()) {
                Eigen::FullPivLU<Matrix> full(k_mat);
                sol = full.solve(rhs);
            }
            Step st;
            st.dy = sol.head(dy);
            st.dnu = sol.tail(n);
            if (m) {
                st.ds = -e.r_p - e.jac_p * st.dy;
                st.dlambda = sigma.cwiseProduct(e.jac_p * st.dy + e.r_p) - r_c.cwiseQuotient(z.s);
            } else {
                st.ds = Vector(0);
                st.dlambda = Vector(0);
            }
            return st;
        };
        auto trial = [&](const Step& st, double alpha) {
            detail::IpmState t = z;
            t.y += alpha * st.dy;
            t.nu += alpha * st.dnu;
            if (m) {
                t.s += alpha * st.ds;
                t.lambda += alpha * st.dlambda;
            }
            return t;
        };

        Step step;
        double target = 0.0;
        if (m) {
            const Vector r_aff = z.s.cwiseProduct(z.lambda);
            const Step aff = newton(r_aff);
            const double a_aff = std::min(detail::max_step_to_boundary(z.s, aff.ds, 1.0),
                                          detail::max_step_to_boundary(z.lambda, aff.dlambda, 1.0));
            const double mu_aff = (z.s + a_aff * aff.ds).dot(z.lambda + a_aff * aff.dlambda) / m;
            const double centering = std::clamp(std::pow(mu_aff / mu, 3.0), 0.0, 1.0);
            target = centering * mu;
            Vector r_c = r_aff + aff.ds.cwiseProduct(aff.dlambda);
            r_c.array() -= target;
            step = newton(r_c);
        } else {
            step = newton(Vector(0));
        }
        if (!step.dy.allFinite()) throw EvaluationError("solve_lower: singular Newton system");

        const double tau = std::max(tau_min, 1.0 - mu);
        double alpha = 1.0;
        if (m)
            alpha = std::min(detail::max_step_to_boundary(z.s, step.ds, tau),
                             detail::max_step_to_boundary(z.lambda, step.dlambda, tau));

        detail::IpmState next = trial(step, alpha);
        if (!linear_model) {
            // Nonlinear lower level: require decrease of the perturbed KKT
            // residual, falling back to the pure centering direction (a true
            // Newton direction for that residual) with backtracking.
            const double merit0 = detail::ipm_merit(e, z, target);
            auto merit_at = [&](const detail::IpmState& t) {
                try {
                    const auto et = detail::ipm_evaluate(prob, x, t);
                    return detail::ipm_merit(et, t, target);
                } catch (const EvaluationError&) {
                    return std::numeric_limits<double>::infinity();
                }
            };
            if (!(merit_at(next) <= (1.0 - 1e-4 * alpha) * merit0)) {
                Vector r_c = m ? Vector(z.s.cwiseProduct(z.lambda).array() - target) : Vector(0);
                step = newton(r_c);
                alpha = 1.0;
                if (m)
                    alpha = std::min(detail::max_step_to_boundary(z.s, step.ds, tau),
                                     detail::max_step_to_boundary(z.lambda, step.dlambda, tau));
                for (int bt = 0; bt < 50; ++bt) {
                    next = trial(step, alpha);
                    if (merit_at(next) <= (1.0 - 1e-4 * alpha) * merit0) break;
                    alpha *= 0.5;
                }
            }
        }
        z = std::move(next);
    }

    throw MaxIterations("solve_lower: no convergence within " + std::to_string(opts.max_iter) +
                            " iterations (KKT residual " + std::to_string(best.kkt_residual) + ")",
                        best);
}

/**
 * Active-set partition at a converged solution. j is active when |p_j| <=
 * tol_active, and also when lambda_j > tol_active (so that every inactive
 * constraint carries a vanishing multiplier); active constraints with
 * lambda_j <= tol_active are non-strictly active.
 */
inline ActiveSetClassification classify_active_sets(const BilevelProblem& prob, const Vector& x,
                                                    const LowerSolution& sol, double tol_active)
{
    if (!sol.converged) throw PreconditionError("classify_active_sets: solution did not converge");
    const Vector pv = sol.p_value.size() == prob.m ? sol.p_value : eval_p(prob, x, sol.y_star);
    ActiveSetClassification out;
    for (int j = 0; j < prob.m; ++j) {
        const bool strictly = sol.lambda(j) > tol_active;
        if (std::abs(pv(j)) <= tol_active || strictly) {
            out.J.push_back(j);
            (strictly ? out.J_plus : out.J_zero).push_back(j);
        }
    }
    return out;
}

/// Multipliers with non-strictly-active and inactive entries truncated to zero.
inline Vector effective_multipliers(const LowerSolution& sol, const ActiveSetClassification& sets)
{
    Vector lam = Vector::Zero(sol.lambda.size());
    for (int j : sets.J_plus) lam(j) = sol.lambda(j);
    return lam;
}

}  // namespace gam

#endif  // GAM_LOWER_SOLVER_HPP
