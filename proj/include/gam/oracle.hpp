#ifndef GAM_ORACLE_HPP
#define GAM_ORACLE_HPP

// Independent checks used by the tests and the `verify` command. Nothing in
// here is on the solver's hot path.

#include <bit>
#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/LU>

#include "gam/sensitivity.hpp"

namespace gam {

// ---------------------------------------------------------------------------
// Exhaustive active-set QP solver
//   min 1/2 y^T Q y + c^T y   s.t.  G y <= h,  A y = b
// ---------------------------------------------------------------------------

struct ExactQpSolution {
    Vector y;
    Vector lambda;
    Vector nu;
    IndexSet active;
};

inline ExactQpSolution exhaustive_qp(const Matrix& Q, const Vector& c, const Matrix& G, const Vector& h,
                                     const Matrix& A, const Vector& b, double tol = 1e-10)
{
    const Eigen::Index dy = Q.rows();
    const Eigen::Index m = G.rows();
    const Eigen::Index n = A.rows();
    if (m > 20) throw PreconditionError("exhaustive_qp: too many inequalities to enumerate");
    // Every subset is tried, smallest first; at a degenerate point several
    // subsets certify the same y.
    std::vector<unsigned> masks(1u << m);
    for (unsigned s = 0; s < masks.size(); ++s) masks[s] = s;
    std::stable_sort(masks.begin(), masks.end(),
                     [](unsigned a, unsigned b) { return std::popcount(a) < std::popcount(b); });
    const double scale = 1.0 + c.cwiseAbs().maxCoeff() + (m ? h.cwiseAbs().maxCoeff() : 0.0);
    for (unsigned mask : masks) {
        IndexSet act;
        for (int j = 0; j < m; ++j)
            if (mask & (1u << j)) act.push_back(j);
        const Eigen::Index k = static_cast<Eigen::Index>(act.size());
        Matrix kkt = Matrix::Zero(dy + k + n, dy + k + n);
        Vector rhs(dy + k + n);
        kkt.topLeftCorner(dy, dy) = Q;
        rhs.head(dy) = -c;
        for (Eigen::Index i = 0; i < k; ++i) {
            kkt.block(dy + i, 0, 1, dy) = G.row(act[i]);
            kkt.block(0, dy + i, dy, 1) = G.row(act[i]).transpose();
            rhs(dy + i) = h(act[i]);
        }
        if (n) {
            kkt.block(dy + k, 0, n, dy) = A;
            kkt.block(0, dy + k, dy, n) = A.transpose();
            rhs.tail(n) = b;
        }
        Eigen::FullPivLU<Matrix> lu(kkt);
        if (lu.rank() < kkt.rows()) continue;
        const Vector z = lu.solve(rhs);
        const Vector y = z.head(dy);
        bool ok = true;
        for (Eigen::Index i = 0; i < k && ok; ++i) ok = z(dy + i) >= -tol * scale;
        if (m) ok = ok && ((G * y - h).array() <= tol * scale).all();
        if (!ok) continue;
        ExactQpSolution out;
        out.y = y;
        out.lambda = Vector::Zero(m);
        for (Eigen::Index i = 0; i < k; ++i) out.lambda(act[i]) = std::max(0.0, z(dy + i));
        out.nu = z.tail(n);
        out.active = act;
        return out;
    }
    throw InfeasibleLowerLevel("exhaustive_qp: no active set satisfies the KKT conditions");
}

// ---------------------------------------------------------------------------
// Phi evaluations
// ---------------------------------------------------------------------------

inline SolverOpts oracle_solver_opts()
{
    SolverOpts o;
    o.tol_kkt = 1e-10;
    o.max_iter = 400;
    return o;
}

inline double phi_value(const BilevelProblem& prob, const Vector& x, const std::optional<LowerSolution>& warm = {},
                        const SolverOpts& opts = oracle_solver_opts())
{
    const LowerSolution s = solve_lower(prob, x, warm, opts);
    return eval_f(prob, x, s.y_star);
}

/// Central differences of Phi with step h (1 + |x_i|) per coordinate.
inline Vector fd_phi_gradient(const BilevelProblem& prob, const Vector& x, double h = 1e-5,
                              const SolverOpts& opts = oracle_solver_opts())
{
    detail::check_size(x, prob.d_x, "x");
    if (!(h > 0.0)) throw PreconditionError("fd_phi_gradient: h must be positive");
    const LowerSolution centre = solve_lower(prob, x, std::nullopt, opts);
    Vector g(prob.d_x);
    for (int i = 0; i < prob.d_x; ++i) {
        const double step = h * (1.0 + std::abs(x(i)));
        Vector xp = x, xm = x;
        xp(i) += step;
        xm(i) -= step;
        g(i) = (phi_value(prob, xp, centre, opts) - phi_value(prob, xm, centre, opts)) / (2.0 * step);
    }
    return g;
}

/// One-sided difference (Phi(x + h d) - Phi(x)) / h.
inline double fd_phi_directional(const BilevelProblem& prob, const Vector& x, const Vector& d, double h,
                                 const SolverOpts& opts = oracle_solver_opts())
{
    const LowerSolution centre = solve_lower(prob, x, std::nullopt, opts);
    const double base = eval_f(prob, x, centre.y_star);
    return (phi_value(prob, x + h * d, centre, opts) - base) / h;
}

/// Gradient of Phi at a point where strict complementarity holds; nothing
/// otherwise.
inline std::optional<Vector> phi_gradient_if_smooth(const BilevelProblem& prob, const Vector& x,
                                                    const SensitivityOpts& opts = {},
                                                    IndexSet* strictly_active = nullptr)
{
    const LowerSolution sol = solve_lower(prob, x, std::nullopt, opts.lower);
    const ActiveSetClassification sets = classify_active_sets(prob, x, sol, opts.lower.tol_active);
    if (!sets.J_zero.empty()) return std::nullopt;
    const KktPoint pt = make_kkt_point(prob, x, sol.y_star, effective_multipliers(sol, sets), sol.nu);
    const KktSensitivity sens = kkt_gradient(pt, sets, opts);
    if (strictly_active) *strictly_active = sets.J_plus;
    return composite_gradient(pt, sens.grad_y_star);
}

// ---------------------------------------------------------------------------
// Gradient sampling in a ball
// ---------------------------------------------------------------------------

struct BallSample {
    Vector x;
    Vector gradient;
    IndexSet strictly_active;
};

inline std::vector<BallSample> sample_ball(const BilevelProblem& prob, const Vector& x0, double eps, int count,
                                           std::uint64_t seed, const SensitivityOpts& opts = {})
{
    if (!(eps > 0.0)) throw PreconditionError("sample_ball_gradients: eps must be positive");
    if (count < prob.d_x + 1) throw PreconditionError("sample_ball_gradients: need at least d_x + 1 samples");
    detail::check_size(x0, prob.d_x, "x0");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<BallSample> out;
    const long max_attempts = 10L * count;
    for (long attempt = 0; attempt < max_attempts && static_cast<int>(out.size()) < count; ++attempt) {
        Vector u(prob.d_x);
        for (auto& v : u) v = normal(rng);
        const double un = u.norm();
        if (un == 0.0) continue;
        const double r = eps * std::pow(unif(rng), 1.0 / prob.d_x);
        const Vector x = x0 + (r / un) * u;
        try {
            IndexSet act;
            auto g = phi_gradient_if_smooth(prob, x, opts, &act);
            if (!g) continue;
            out.push_back({x, *g, act});
        } catch (const GamError&) {
            continue;
        }
    }
    if (static_cast<int>(out.size()) < count)
        throw SamplingExhausted("sample_ball_gradients: only " + std::to_string(out.size()) + " of " +
                                std::to_string(count) + " samples after " + std::to_string(max_attempts) +
                                " attempts");
    return out;
}

inline std::vector<Vector> sample_ball_gradients(const BilevelProblem& prob, const Vector& x0, double eps, int count,
                                                 std::uint64_t seed, const SensitivityOpts& opts = {})
{
    std::vector<Vector> out;
    for (auto& s : sample_ball(prob, x0, eps, count, seed, opts)) out.push_back(std::move(s.gradient));
    return out;
}

// ---------------------------------------------------------------------------
// Simplex-grid minimum norm
// ---------------------------------------------------------------------------

/// Minimum-norm point over convex weights on the grid {i * grid_step}.
inline Vector brute_min_norm(const std::vector<Vector>& points, double grid_step)
{
    if (points.empty()) throw PreconditionError("brute_min_norm: empty point set");
    if (points.size() > 6) throw PreconditionError("brute_min_norm: at most 6 points");
    if (!(grid_step > 0.0 && grid_step <= 1.0)) throw PreconditionError("brute_min_norm: grid_step must be in (0, 1]");
    const int k = static_cast<int>(points.size());
    const int steps = std::max(1, static_cast<int>(std::lround(1.0 / grid_step)));
    const double unit = 1.0 / steps;
    if (k == 1) return points.front();

    Vector best = points.front();
    double best_sq = best.squaredNorm();
    // partial[i] holds the weighted sum of the first i points
    std::vector<Vector> partial(static_cast<std::size_t>(k), Vector::Zero(points.front().size()));
    auto recurse = [&](auto&& self, int i, int remaining) -> void {
        const auto ui = static_cast<std::size_t>(i);
        if (i == k - 1) {
            const Vector v = partial[ui] + (remaining * unit) * points[ui];
            const double sq = v.squaredNorm();
            if (sq < best_sq) {
                best_sq = sq;
                best = v;
            }
            return;
        }
        for (int w = 0; w <= remaining; ++w) {
            partial[ui + 1] = partial[ui] + (w * unit) * points[ui];
            self(self, i + 1, remaining - w);
        }
    };
    recurse(recurse, 0, steps);
    return best;
}

}  // namespace gam

#endif  // GAM_ORACLE_HPP
