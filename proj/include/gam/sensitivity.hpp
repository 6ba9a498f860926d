#ifndef GAM_SENSITIVITY_HPP
#define GAM_SENSITIVITY_HPP

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "gam/lower_solver.hpp"

namespace gam {

enum class SaddlePath { Auto, Dense, Cg };

struct SensitivityOpts {
    SaddlePath path = SaddlePath::Auto;
    /// Auto selects conjugate gradients when d_y exceeds this.
    int cg_threshold = 200;
    double cg_tol = 1e-10;
    /// 0 means 10 * d_y + 50.
    int cg_max_iter = 0;
    /// Probe distance for J0+(x, d) is probe_scale * (1 + |x|).
    double probe_scale = 1e-6;
    SolverOpts lower;
};

// ---------------------------------------------------------------------------
// Saddle-point solves
//
//   [ H    R_y^T ] [ Z_top    ]     [ N_top ]
//   [ R_y  0     ] [ Z_bottom ] = - [ R_x   ]
//
// H is the (SPD) Lagrangian Hessian, R_y the stacked constraint Jacobian.
// ---------------------------------------------------------------------------

namespace detail {

struct CgResult {
    Vector x;
    int iterations = 0;
    double residual = 0.0;  ///< relative
};

/// Jacobi-preconditioned conjugate gradients for SPD `a`.
inline CgResult conjugate_gradient(const Matrix& a, const Vector& b, double tol, int max_iter)
{
    CgResult out;
    out.x = Vector::Zero(b.size());
    const double bnorm = b.norm();
    if (bnorm == 0.0) return out;

    Vector inv_diag = a.diagonal();
    for (auto& v : inv_diag) v = v > 0.0 ? 1.0 / v : 1.0;

    Vector r = b;
    Vector zvec = inv_diag.cwiseProduct(r);
    Vector dir = zvec;
    double rz = r.dot(zvec);
    double best = 1.0;
    int since_best = 0;
    const int patience = std::max(20, static_cast<int>(b.size()));

    for (int it = 1; it <= max_iter; ++it) {
        const Vector ad = a * dir;
        const double curv = dir.dot(ad);
        if (!(curv > 0.0)) throw CgStalled("conjugate_gradient: matrix is not positive definite", r.norm() / bnorm);
        const double step = rz / curv;
        out.x += step * dir;
        r -= step * ad;
        out.iterations = it;
        out.residual = r.norm() / bnorm;
        if (out.residual <= tol) {
            // recompute the true residual once to guard against drift
            r = b - a * out.x;
            out.residual = r.norm() / bnorm;
            if (out.residual <= tol) return out;
        }
        if (out.residual < 0.5 * best) {
            best = out.residual;
            since_best = 0;
        } else if (++since_best > patience) {
            throw CgStalled("conjugate_gradient: residual plateau at " + std::to_string(out.residual), out.residual);
        }
        zvec = inv_diag.cwiseProduct(r);
        const double rz_next = r.dot(zvec);
        dir = zvec + (rz_next / rz) * dir;
        rz = rz_next;
    }
    throw CgStalled("conjugate_gradient: no convergence within " + std::to_string(max_iter) + " iterations",
                    out.residual);
}

}  // namespace detail

/**
 * Block elimination of the saddle system with CG solves against H:
 *   A = H^-1 N_top,  B = H^-1 R_y^T,
 *   Z_bottom = -(R_y B)^-1 (R_y A - R_x),
 *   Z_top    = -A + B (R_y B)^-1 (R_y A - R_x).
 * Returns [Z_top; Z_bottom].
 */
inline Matrix solve_saddle_block(const Matrix& hess, const Matrix& r_y, const Matrix& rhs_top, const Matrix& r_x,
                                 double cg_tol, int cg_max_iter = 0)
{
    const Eigen::Index dy = hess.rows();
    const Eigen::Index rows = r_y.rows();
    const Eigen::Index cols = rhs_top.cols();
    if (hess.cols() != dy || r_y.cols() != dy || rhs_top.rows() != dy || r_x.rows() != rows || r_x.cols() != cols)
        throw DimensionError("solve_saddle_block: inconsistent block shapes");
    const int max_iter = cg_max_iter > 0 ? cg_max_iter : static_cast<int>(10 * dy + 50);

    Matrix a(dy, cols);
    for (Eigen::Index c = 0; c < cols; ++c) a.col(c) = detail::conjugate_gradient(hess, rhs_top.col(c), cg_tol, max_iter).x;

    Matrix out(dy + rows, cols);
    if (rows == 0) {
        out = -a;
        return out;
    }
    Matrix b(dy, rows);
    for (Eigen::Index c = 0; c < rows; ++c)
        b.col(c) = detail::conjugate_gradient(hess, r_y.row(c).transpose(), cg_tol, max_iter).x;

    const Matrix schur = r_y * b;
    Eigen::JacobiSVD<Matrix> svd(schur);
    const auto& sv = svd.singularValues();
    if (!(sv(0) > 0.0) || sv(sv.size() - 1) < 1e-14 * sv(0))
        throw SingularSchur("solve_saddle_block: R_y H^-1 R_y^T is numerically singular");
    Eigen::LDLT<Matrix> ldlt(0.5 * (schur + schur.transpose()));
    const Matrix coupling = ldlt.solve(r_y * a - r_x);
    out.topRows(dy) = -a + b * coupling;
    out.bottomRows(rows) = -coupling;
    return out;
}

/// Same system solved by a dense LU factorization of the full saddle matrix.
inline Matrix solve_saddle_dense(const Matrix& hess, const Matrix& r_y, const Matrix& rhs_top, const Matrix& r_x)
{
    const Eigen::Index dy = hess.rows();
    const Eigen::Index rows = r_y.rows();
    if (hess.cols() != dy || r_y.cols() != dy || rhs_top.rows() != dy || r_x.rows() != rows ||
        r_x.cols() != rhs_top.cols())
        throw DimensionError("solve_saddle_dense: inconsistent block shapes");
    Matrix k_mat = Matrix::Zero(dy + rows, dy + rows);
    k_mat.topLeftCorner(dy, dy) = hess;
    k_mat.topRightCorner(dy, rows) = r_y.transpose();
    k_mat.bottomLeftCorner(rows, dy) = r_y;
    Matrix rhs(dy + rows, rhs_top.cols());
    rhs << rhs_top, r_x;

    Eigen::FullPivLU<Matrix> lu(k_mat);
    if (lu.rank() < dy + rows)
        throw SingularKktMatrix("solve_saddle_dense: KKT matrix is numerically singular (rank " +
                                std::to_string(lu.rank()) + " of " + std::to_string(dy + rows) + ")");
    Matrix out = -lu.solve(rhs);
    if (!out.allFinite()) throw SingularKktMatrix("solve_saddle_dense: non-finite solution");
    return out;
}

/// Dispatches to the dense or CG path. CG failures surface as SingularKktMatrix
/// only when the dense path confirms singularity.
inline Matrix solve_saddle(const Matrix& hess, const Matrix& r_y, const Matrix& rhs_top, const Matrix& r_x,
                           const SensitivityOpts& opts = {})
{
    const bool use_cg = opts.path == SaddlePath::Cg ||
                        (opts.path == SaddlePath::Auto && hess.rows() > opts.cg_threshold);
    if (!use_cg) return solve_saddle_dense(hess, r_y, rhs_top, r_x);
    try {
        return solve_saddle_block(hess, r_y, rhs_top, r_x, opts.cg_tol, opts.cg_max_iter);
    } catch (const SingularSchur& e) {
        throw SingularKktMatrix(e.what());
    }
}

// ---------------------------------------------------------------------------
// KKT sensitivities
// ---------------------------------------------------------------------------

struct KktSensitivity {
    Matrix grad_y_star;  ///< d_y x d_x
    Matrix grad_lambda;  ///< m x d_x, zero rows outside J_plus
    Matrix grad_nu;      ///< n x d_x
    bool scsc_holds = true;
};

struct DirectionalDerivative {
    Vector direction;
    Vector d_y_star;
    Vector d_lambda;
    Vector d_nu;
    IndexSet j0_plus;
};

namespace detail {

/// -M^-1 N for the KKT system with inequality rows `ineq` (in order) followed
/// by all equality rows. Result has d_y + |ineq| + n rows.
inline Matrix kkt_block_solve(const KktPoint& pt, const IndexSet& ineq, const Matrix& n_top, const Matrix& n_ineq,
                              const Matrix& n_eq, const SensitivityOpts& opts)
{
    const Eigen::Index dy = pt.y.size();
    const Eigen::Index ni = static_cast<Eigen::Index>(ineq.size());
    const Eigen::Index ne = pt.jac_y_q.rows();
    Matrix r_y(ni + ne, dy);
    if (ni) r_y.topRows(ni) = select_rows(pt.jac_y_p, ineq);
    if (ne) r_y.bottomRows(ne) = pt.jac_y_q;
    Matrix r_x(ni + ne, n_top.cols());
    if (ni) r_x.topRows(ni) = n_ineq;
    if (ne) r_x.bottomRows(ne) = n_eq;
    return solve_saddle(pt.hess_yy_L, r_y, n_top, r_x, opts);
}

}  // namespace detail

/**
 * Gradient of z(x) = (y*, lambda, nu) under strict complementarity:
 * [grad y*; grad lambda_{J+}; grad nu] = -M_+^-1 N_+, with grad lambda = 0
 * outside J+. `pt` must be evaluated at the solution with the effective
 * (truncated) multipliers.
 */
inline KktSensitivity kkt_gradient(const KktPoint& pt, const ActiveSetClassification& sets,
                                   const SensitivityOpts& opts = {})
{
    if (!sets.J_zero.empty())
        throw ScscViolated("kkt_gradient: strict complementarity fails for constraints " + to_string(sets.J_zero));
    const Eigen::Index dy = pt.y.size();
    const Eigen::Index dx = pt.x.size();
    const Eigen::Index m = pt.p.size();
    const Eigen::Index n = pt.q.size();
    const Eigen::Index np = static_cast<Eigen::Index>(sets.J_plus.size());

    const Matrix z = detail::kkt_block_solve(pt, sets.J_plus, pt.hess_xy_L, select_rows(pt.jac_x_p, sets.J_plus),
                                             pt.jac_x_q, opts);
    KktSensitivity out;
    out.grad_y_star = z.topRows(dy);
    out.grad_lambda = Matrix::Zero(m, dx);
    for (Eigen::Index k = 0; k < np; ++k) out.grad_lambda.row(sets.J_plus[k]) = z.row(dy + k);
    out.grad_nu = z.bottomRows(n);
    out.scsc_holds = true;
    return out;
}

inline KktSensitivity kkt_gradient(const BilevelProblem& prob, const Vector& x, const LowerSolution& sol,
                                   const ActiveSetClassification& sets, const SensitivityOpts& opts = {})
{
    const KktPoint pt = make_kkt_point(prob, x, sol.y_star, effective_multipliers(sol, sets), sol.nu);
    return kkt_gradient(pt, sets, opts);
}

/// grad Phi = grad_x f + (grad y*)^T grad_y f.
inline Vector composite_gradient(const KktPoint& pt, const Matrix& grad_y_star)
{
    return pt.grad_x_f + grad_y_star.transpose() * pt.grad_y_f;
}

/**
 * Representative gradient w^S: the d_y x d_x block of -(M^S)^-1 N^S where the
 * system carries the constraints in i_plus, all equalities, and those in s.
 */
inline Matrix representative_gradient(const KktPoint& pt, const IndexSet& i_plus, const IndexSet& s,
                                      const SensitivityOpts& opts = {})
{
    for (int j : s)
        if (contains(i_plus, j)) throw PreconditionError("representative_gradient: I_plus and S must be disjoint");
    IndexSet rows = i_plus;
    rows.insert(rows.end(), s.begin(), s.end());
    const Matrix z = detail::kkt_block_solve(pt, rows, pt.hess_xy_L, select_rows(pt.jac_x_p, rows), pt.jac_x_q, opts);
    return z.topRows(pt.y.size());
}

inline Matrix representative_gradient(const BilevelProblem& prob, const Vector& x, const LowerSolution& sol,
                                      const ActiveSetClassification& sets, const IndexSet& i_plus, const IndexSet& s,
                                      const SensitivityOpts& opts = {})
{
    const KktPoint pt = make_kkt_point(prob, x, sol.y_star, effective_multipliers(sol, sets), sol.nu);
    return representative_gradient(pt, i_plus, s, opts);
}

/**
 * Directional derivative of z at x along the unit vector d. Non-strictly
 * active constraints that become strictly active along d (J0+) are found by
 * re-solving at x + probe_step d: j is counted when its multiplier there
 * exceeds its constraint residual.
 */
inline DirectionalDerivative directional_derivative(const BilevelProblem& prob, const Vector& x,
                                                    const LowerSolution& sol, const ActiveSetClassification& sets,
                                                    const Vector& d, double probe_step = 0.0,
                                                    const SensitivityOpts& opts = {})
{
    if (!sol.converged) throw PreconditionError("directional_derivative: solution did not converge");
    detail::check_size(d, prob.d_x, "direction");
    if (std::abs(d.norm() - 1.0) > 1e-8) throw PreconditionError("directional_derivative: direction must be a unit vector");

    DirectionalDerivative out;
    out.direction = d;
    if (!sets.J_zero.empty()) {
        const double h = probe_step > 0.0 ? probe_step : opts.probe_scale * (1.0 + x.norm());
        const Vector xp = x + h * d;
        const LowerSolution probe = solve_lower(prob, xp, sol, opts.lower);
        for (int j : sets.J_zero)
            if (probe.lambda(j) > std::abs(probe.p_value(j))) out.j0_plus.push_back(j);
    }

    const KktPoint pt = make_kkt_point(prob, x, sol.y_star, effective_multipliers(sol, sets), sol.nu);
    IndexSet rows = sets.J_plus;
    rows.insert(rows.end(), out.j0_plus.begin(), out.j0_plus.end());
    const Matrix z = detail::kkt_block_solve(pt, rows, pt.hess_xy_L * d, select_rows(pt.jac_x_p, rows) * d,
                                             pt.jac_x_q * d, opts);
    const Eigen::Index dy = prob.d_y;
    out.d_y_star = z.col(0).head(dy);
    out.d_lambda = Vector::Zero(prob.m);
    for (std::size_t k = 0; k < rows.size(); ++k) out.d_lambda(rows[k]) = z(dy + static_cast<Eigen::Index>(k), 0);
    out.d_nu = z.col(0).tail(prob.n);
    return out;
}

/// grad_d Phi from a directional derivative of y*.
inline double directional_phi(const KktPoint& pt, const DirectionalDerivative& dd)
{
    return pt.grad_x_f.dot(dd.direction) + pt.grad_y_f.dot(dd.d_y_star);
}

}  // namespace gam

#endif  // GAM_SENSITIVITY_HPP
