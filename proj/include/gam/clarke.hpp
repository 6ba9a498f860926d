#ifndef GAM_CLARKE_HPP
#define GAM_CLARKE_HPP

#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/QR>

#include "gam/sensitivity.hpp"

namespace gam {

struct LipschitzEstimates {
    Vector lipschitz_lambda;
    Vector lipschitz_p;
};

/**
 * Point estimates of the Lipschitz constants of lambda_j(x) and
 * p_j(x, y*(x)) on a small ball:
 *   l_lambda_j = |grad lambda_j| + delta
 *   l_p_j      = |grad_x p_j + (grad y*)^T grad_y p_j| + delta
 * The constraint Jacobians come from `pt` (the ball centre); `sens` may have
 * been taken at a nearby differentiable point.
 */
inline LipschitzEstimates estimate_lipschitz(const KktPoint& pt, const KktSensitivity& sens, double delta)
{
    const Eigen::Index m = pt.p.size();
    LipschitzEstimates out;
    out.lipschitz_lambda = Vector::Constant(m, delta);
    out.lipschitz_p = Vector::Constant(m, delta);
    if (m == 0) return out;
    const Matrix total = pt.jac_x_p + pt.jac_y_p * sens.grad_y_star;  // m x d_x
    for (Eigen::Index j = 0; j < m; ++j) {
        out.lipschitz_lambda(j) += sens.grad_lambda.row(j).norm();
        out.lipschitz_p(j) += total.row(j).norm();
    }
    return out;
}

struct BallClassification {
    IndexSet I_plus;
    IndexSet I_minus;
    IndexSet I_eps;
    Vector lipschitz_lambda;
    Vector lipschitz_p;
    bool differentiable_on_ball = true;
};

/// Strictly active on the whole ball, inactive on the whole ball, or
/// ambiguous. y* is treated as continuously differentiable on B(x0, eps)
/// exactly when nothing is ambiguous.
inline BallClassification check_differentiability_on_ball(const LowerSolution& sol,
                                                          const ActiveSetClassification& sets,
                                                          const LipschitzEstimates& lip, double eps)
{
    const Eigen::Index m = sol.lambda.size();
    const Vector lam = effective_multipliers(sol, sets);
    BallClassification out;
    out.lipschitz_lambda = lip.lipschitz_lambda;
    out.lipschitz_p = lip.lipschitz_p;
    for (int j = 0; j < m; ++j) {
        const bool active = contains(sets.J, j);
        if (active && lam(j) > lip.lipschitz_lambda(j) * eps)
            out.I_plus.push_back(j);
        else if (!active && sol.p_value(j) < -lip.lipschitz_p(j) * eps)
            out.I_minus.push_back(j);
        else
            out.I_eps.push_back(j);
    }
    out.differentiable_on_ball = out.I_eps.empty();
    return out;
}

struct LocalSensitivity {
    KktSensitivity sens;
    Vector at;             ///< where the sensitivity was evaluated
    bool probed = false;   ///< true when `at` differs from the ball centre
    bool one_sided = false;///< true when every probe failed and J0 was dropped
};

/**
 * Sensitivity used for the Lipschitz estimates. At a point where strict
 * complementarity fails the gradient does not exist, so a nearby point
 * x0 + u * 1e-6 (1 + |x0|) with a random unit u is tried (up to
 * `max_probes` times) until strict complementarity holds there. If every
 * probe fails, the one-sided sensitivity with J0 dropped is used.
 */
inline LocalSensitivity local_sensitivity(const BilevelProblem& prob, const KktPoint& pt, const LowerSolution& sol,
                                          const ActiveSetClassification& sets, const SensitivityOpts& opts,
                                          std::mt19937_64& rng, int max_probes = 5)
{
    LocalSensitivity out;
    out.at = pt.x;
    if (sets.J_zero.empty()) {
        out.sens = kkt_gradient(pt, sets, opts);
        return out;
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    const double radius = 1e-6 * (1.0 + pt.x.norm());
    for (int attempt = 0; attempt < max_probes; ++attempt) {
        Vector u(prob.d_x);
        for (auto& v : u) v = normal(rng);
        if (u.norm() == 0.0) continue;
        const Vector xp = pt.x + radius * u.normalized();
        try {
            const LowerSolution ps = solve_lower(prob, xp, sol, opts.lower);
            const ActiveSetClassification pset = classify_active_sets(prob, xp, ps, opts.lower.tol_active);
            if (!pset.J_zero.empty()) continue;
            out.sens = kkt_gradient(prob, xp, ps, pset, opts);
            out.at = xp;
            out.probed = true;
            return out;
        } catch (const GamError&) {
            continue;
        }
    }
    ActiveSetClassification reduced = sets;
    reduced.J = sets.J_plus;
    reduced.J_zero.clear();
    out.sens = kkt_gradient(pt, reduced, opts);
    out.one_sided = true;
    return out;
}

struct MinNormResult {
    Vector g;
    double value = 0.0;
    Vector weights;  ///< convex weights over the input points
    bool used_fallback = false;
};

namespace detail {

/// Minimum-norm point of the affine hull of the columns of `pts`: weights w
/// with sum 1 minimizing |pts w|.
inline std::optional<Vector> affine_minimizer(const Matrix& pts)
{
    const Eigen::Index k = pts.cols();
    Matrix sys = Matrix::Zero(k + 1, k + 1);
    sys.topLeftCorner(k, k) = pts.transpose() * pts;
    sys.topRightCorner(k, 1).setOnes();
    sys.bottomLeftCorner(1, k).setOnes();
    Vector rhs = Vector::Zero(k + 1);
    rhs(k) = 1.0;
    Eigen::ColPivHouseholderQR<Matrix> qr(sys);
    if (qr.rank() < k + 1) return std::nullopt;
    Vector sol = qr.solve(rhs);
    if (!sol.allFinite()) return std::nullopt;
    return Vector(sol.head(k));
}

inline double optimality_gap(const Matrix& pts, const Vector& g)
{
    // min_i <p_i, g> - |g|^2 ; nonnegative at the optimum
    return (pts.transpose() * g).minCoeff() - g.squaredNorm();
}

/// Wolfe's minimum-norm-point algorithm. Returns nothing if it fails to
/// terminate cleanly (cycling, singular corral).
inline std::optional<MinNormResult> wolfe_min_norm(const Matrix& pts)
{
    const Eigen::Index k = pts.cols();
    const double scale = pts.colwise().squaredNorm().maxCoeff();
    const double tol = 1e-12 * std::max(scale, 1e-300);
    const double zero_w = 1e-12;

    Eigen::Index start;
    pts.colwise().squaredNorm().minCoeff(&start);
    std::vector<Eigen::Index> corral{start};
    Vector w(1);
    w(0) = 1.0;
    auto point = [&]() {
        Vector x = Vector::Zero(pts.rows());
        for (std::size_t i = 0; i < corral.size(); ++i) x += w(static_cast<Eigen::Index>(i)) * pts.col(corral[i]);
        return x;
    };
    Vector x = point();

    const int max_major = static_cast<int>(10 * k + 100);
    for (int major = 0; major < max_major; ++major) {
        Eigen::Index j;
        const double best = (pts.transpose() * x).minCoeff(&j);
        if (best >= x.squaredNorm() - tol) {
            MinNormResult out;
            out.g = x;
            out.value = x.norm();
            out.weights = Vector::Zero(k);
            for (std::size_t i = 0; i < corral.size(); ++i) out.weights(corral[i]) += w(static_cast<Eigen::Index>(i));
            return out;
        }
        if (std::find(corral.begin(), corral.end(), j) != corral.end()) return std::nullopt;
        corral.push_back(j);
        w.conservativeResize(w.size() + 1);
        w(w.size() - 1) = 0.0;

        for (int minor = 0; minor < static_cast<int>(k) + 5; ++minor) {
            Matrix cp(pts.rows(), static_cast<Eigen::Index>(corral.size()));
            for (std::size_t i = 0; i < corral.size(); ++i) cp.col(static_cast<Eigen::Index>(i)) = pts.col(corral[i]);
            const auto alpha = affine_minimizer(cp);
            if (!alpha) return std::nullopt;
            if ((alpha->array() > zero_w).all()) {
                w = *alpha;
                break;
            }
            // move from w towards alpha until a weight hits zero
            double theta = 1.0;
            for (Eigen::Index i = 0; i < alpha->size(); ++i)
                if ((*alpha)(i) <= zero_w && w(i) - (*alpha)(i) > 0.0) theta = std::min(theta, w(i) / (w(i) - (*alpha)(i)));
            w = theta * *alpha + (1.0 - theta) * w;
            std::vector<Eigen::Index> kept;
            std::vector<double> kept_w;
            for (Eigen::Index i = 0; i < w.size(); ++i) {
                if (w(i) > zero_w) {
                    kept.push_back(corral[static_cast<std::size_t>(i)]);
                    kept_w.push_back(w(i));
                }
            }
            if (kept.empty()) return std::nullopt;
            corral = kept;
            w = Eigen::Map<Vector>(kept_w.data(), static_cast<Eigen::Index>(kept_w.size()));
            w /= w.sum();
        }
        x = point();
    }
    return std::nullopt;
}

/// Dense active-set method on the simplex-weight QP  min w^T G w, w >= 0,
/// sum w = 1, with G the Gram matrix of the points.
inline MinNormResult simplex_qp_min_norm(const Matrix& pts)
{
    const Eigen::Index k = pts.cols();
    const Matrix gram = pts.transpose() * pts;
    const double ridge = 1e-14 * std::max(1.0, gram.diagonal().maxCoeff());
    Eigen::Index start;
    gram.diagonal().minCoeff(&start);
    std::vector<bool> free(static_cast<std::size_t>(k), false);
    free[static_cast<std::size_t>(start)] = true;
    Vector w = Vector::Zero(k);
    w(start) = 1.0;

    for (int it = 0; it < static_cast<int>(20 * k + 50); ++it) {
        // equality-constrained minimizer on the free set
        std::vector<Eigen::Index> f;
        for (Eigen::Index i = 0; i < k; ++i)
            if (free[static_cast<std::size_t>(i)]) f.push_back(i);
        const Eigen::Index nf = static_cast<Eigen::Index>(f.size());
        Matrix sys = Matrix::Zero(nf + 1, nf + 1);
        for (Eigen::Index a = 0; a < nf; ++a)
            for (Eigen::Index b = 0; b < nf; ++b) sys(a, b) = gram(f[a], f[b]) + (a == b ? ridge : 0.0);
        sys.topRightCorner(nf, 1).setOnes();
        sys.bottomLeftCorner(1, nf).setOnes();
        Vector rhs = Vector::Zero(nf + 1);
        rhs(nf) = 1.0;
        const Vector sol = Eigen::ColPivHouseholderQR<Matrix>(sys).solve(rhs);
        Vector target = Vector::Zero(k);
        for (Eigen::Index a = 0; a < nf; ++a) target(f[a]) = sol(a);

        bool feasible = true;
        for (Eigen::Index a = 0; a < nf; ++a) feasible = feasible && sol(a) >= 0.0;
        if (!feasible) {
            double theta = 1.0;
            Eigen::Index drop = -1;
            for (Eigen::Index a = 0; a < nf; ++a) {
                const Eigen::Index i = f[a];
                if (target(i) < 0.0 && w(i) - target(i) > 0.0) {
                    const double th = w(i) / (w(i) - target(i));
                    if (th < theta) {
                        theta = th;
                        drop = i;
                    }
                }
            }
            w = (1.0 - theta) * w + theta * target;
            if (drop >= 0) {
                free[static_cast<std::size_t>(drop)] = false;
                w(drop) = 0.0;
            }
            w = w.cwiseMax(0.0);
            w /= w.sum();
            continue;
        }
        w = target;
        // most violated optimality condition (G w)_i >= w^T G w
        const Vector gw = gram * w;
        const double level = w.dot(gw);
        Eigen::Index add = -1;
        double worst = -1e-15 * std::max(1.0, std::abs(level));
        for (Eigen::Index i = 0; i < k; ++i) {
            if (free[static_cast<std::size_t>(i)]) continue;
            const double v = gw(i) - level;
            if (v < worst) {
                worst = v;
                add = i;
            }
        }
        if (add < 0) break;
        free[static_cast<std::size_t>(add)] = true;
    }
    MinNormResult out;
    out.weights = w;
    out.g = pts * w;
    out.value = out.g.norm();
    out.used_fallback = true;
    return out;
}

}  // namespace detail

/**
 * Minimum-norm element of conv(points). Wolfe's algorithm, with the
 * simplex-weight active-set QP as a fallback when Wolfe does not terminate
 * cleanly or its answer fails the optimality test <p_i, g> >= |g|^2.
 */
inline MinNormResult min_norm_element(const std::vector<Vector>& points)
{
    if (points.empty()) throw PreconditionError("min_norm_element: empty point set");
    const Eigen::Index dim = points.front().size();
    Matrix pts(dim, static_cast<Eigen::Index>(points.size()));
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].size() != dim) throw DimensionError("min_norm_element: points of different dimension");
        if (!points[i].allFinite()) throw PreconditionError("min_norm_element: non-finite point");
        pts.col(static_cast<Eigen::Index>(i)) = points[i];
    }
    if (points.size() == 1) return {points.front(), points.front().norm(), Vector::Ones(1), false};

    const double scale = std::max(pts.colwise().squaredNorm().maxCoeff(), 1e-300);
    auto wolfe = detail::wolfe_min_norm(pts);
    if (wolfe && detail::optimality_gap(pts, wolfe->g) >= -1e-12 * scale) return *wolfe;
    MinNormResult qp = detail::simplex_qp_min_norm(pts);
    if (wolfe && wolfe->value < qp.value) return *wolfe;
    return qp;
}

struct SubgradientSet {
    std::vector<Vector> members;
    std::vector<IndexSet> subset_labels;
    Vector min_norm_g;
    double min_norm_value = 0.0;
    bool truncated = false;
    /// Subsets whose augmented constraint stack was singular.
    std::vector<std::string> skipped;
};

/**
 * Representative-gradient set: one Phi gradient per subset S of I_eps,
 *   grad_x f + (w^S)^T grad_y f,
 * plus its minimum-norm convex combination. I_eps is ordered by increasing
 * |lambda_j| + |p_j| and subsets are enumerated in binary order over that
 * ordering, so truncation at `max_subsets` keeps the branches of the
 * constraints closest to degeneracy.
 */
inline SubgradientSet build_subgradient_set(const KktPoint& pt, const BallClassification& cls, int max_subsets = 64,
                                            const SensitivityOpts& opts = {})
{
    if (cls.I_eps.empty())
        throw PreconditionError("build_subgradient_set: I_eps is empty; use the single gradient instead");
    if (max_subsets < 1) throw PreconditionError("build_subgradient_set: max_subsets must be positive");

    IndexSet order = cls.I_eps;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return std::abs(pt.lambda(a)) + std::abs(pt.p(a)) < std::abs(pt.lambda(b)) + std::abs(pt.p(b));
    });
    const int k = static_cast<int>(order.size());
    const unsigned long long full = k >= 63 ? ~0ull : (1ull << k);
    const unsigned long long count = std::min<unsigned long long>(full, static_cast<unsigned long long>(max_subsets));

    SubgradientSet out;
    out.truncated = count < full;
    for (unsigned long long mask = 0; mask < count; ++mask) {
        IndexSet s;
        for (int b = 0; b < k; ++b)
            if (mask & (1ull << b)) s.push_back(order[b]);
        std::sort(s.begin(), s.end());
        try {
            const Matrix w = representative_gradient(pt, cls.I_plus, s, opts);
            out.members.push_back(composite_gradient(pt, w));
            out.subset_labels.push_back(s);
        } catch (const SingularKktMatrix& e) {
            out.skipped.push_back(to_string(s) + ": " + e.what());
        } catch (const CgStalled& e) {
            out.skipped.push_back(to_string(s) + ": " + e.what());
        }
    }
    if (out.members.empty())
        throw AllSubsetsSingular("build_subgradient_set: every subset of I_eps " + to_string(cls.I_eps) +
                                 " gives a singular KKT system");
    const MinNormResult mn = min_norm_element(out.members);
    out.min_norm_g = mn.g;
    out.min_norm_value = mn.value;
    return out;
}

}  // namespace gam

#endif  // GAM_CLARKE_HPP
