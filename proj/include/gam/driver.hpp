#ifndef GAM_DRIVER_HPP
#define GAM_DRIVER_HPP

#include <chrono>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gam/clarke.hpp"

namespace gam {

enum class Branch { Differentiable, Nonsmooth, NullStep };

inline const char* branch_name(Branch b)
{
    switch (b) {
    case Branch::Differentiable: return "Differentiable";
    case Branch::Nonsmooth: return "Nonsmooth";
    case Branch::NullStep: return "NullStep";
    }
    return "?";
}

enum class StepRule { LineSearch, FixedStep };

struct GamConfig {
    double eps0 = 0.3;
    double nu0 = 1.0;
    double beta = 0.5;
    double gamma = 0.3;
    double theta_eps = 0.5;
    double theta_nu = 0.5;
    double eps_opt = 1e-4;
    double nu_opt = 1e-4;
    int max_outer_iters = 500;
    int max_backtracks = 40;
    double lipschitz_delta = 1e-3;
    int max_subsets = 64;
    std::uint64_t seed = 0;
    StepRule step_rule = StepRule::LineSearch;
    /// Step length for iteration k under StepRule::FixedStep.
    std::function<double(int)> lr_schedule;
    SensitivityOpts sens;

    void validate() const
    {
        auto open_unit = [](double v, const char* name) {
            if (!(v > 0.0 && v < 1.0)) throw ConfigError(std::string(name) + " must lie in (0, 1)");
        };
        if (!(eps0 > 0.0)) throw ConfigError("eps0 must be positive");
        if (!(nu0 > 0.0)) throw ConfigError("nu0 must be positive");
        open_unit(beta, "beta");
        open_unit(gamma, "gamma");
        open_unit(theta_eps, "theta_eps");
        open_unit(theta_nu, "theta_nu");
        if (!(eps_opt >= 0.0)) throw ConfigError("eps_opt must be nonnegative");
        if (!(nu_opt >= 0.0)) throw ConfigError("nu_opt must be nonnegative");
        if (max_outer_iters < 1) throw ConfigError("max_outer_iters must be at least 1");
        if (max_backtracks < 1) throw ConfigError("max_backtracks must be at least 1");
        if (!(lipschitz_delta > 0.0)) throw ConfigError("lipschitz_delta must be positive");
        if (max_subsets < 1) throw ConfigError("max_subsets must be at least 1");
        if (!(sens.lower.tol_kkt > 0.0)) throw ConfigError("lower tolerance must be positive");
        if (!(sens.lower.tol_active > 0.0)) throw ConfigError("tol_active must be positive");
        if (step_rule == StepRule::FixedStep && !lr_schedule)
            throw ConfigError("fixed-step rule needs an lr_schedule");
    }
};

struct TraceRecord {
    int k = 0;
    Vector x;
    double phi = 0.0;
    Vector g;
    double g_norm = 0.0;
    double eps = 0.0;
    double nu = 0.0;
    double t = 0.0;
    Branch branch = Branch::Differentiable;
    ActiveSetClassification active_sets;
    double wall_ms = 0.0;
    /// Phi at x - t g, i.e. at the next iterate (equal to phi on null steps).
    double phi_next = 0.0;
    int members = 1;
    int backtracks = 0;
    int lower_iterations = 0;
};

struct GamResult {
    Vector x;
    double phi = 0.0;
    double g_norm = 0.0;
    double eps = 0.0;
    double nu = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string status;
};

struct LineSearchResult {
    double t = 0.0;
    double phi = 0.0;
    int backtracks = 0;
};

/**
 * Backtracking line search: the largest t in {gamma, gamma^2, ...,
 * gamma^max_backtracks} with phi(x - t g) < phi_x - beta t |g|^2. `phi`
 * returns nothing when it cannot be evaluated at a trial point; that t is
 * rejected.
 */
template <typename PhiFn>
LineSearchResult line_search(PhiFn&& phi, const Vector& x, const Vector& g, double phi_x, double beta, double gamma,
                             int max_backtracks)
{
    const double g2 = g.squaredNorm();
    if (!(g2 > 0.0)) throw PreconditionError("line_search: g must be nonzero");
    double t = 1.0;
    double gap = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= max_backtracks; ++i) {
        t *= gamma;
        const Vector trial = x - t * g;
        const std::optional<double> value = phi(trial);
        if (!value) continue;
        const double rhs = phi_x - beta * t * g2;
        gap = *value - rhs;
        if (*value < rhs) return {t, *value, i - 1};
    }
    throw LineSearchFailed("line_search: no step in {gamma^i} satisfies the Armijo condition", t, gap);
}

/// Line search on Phi(x) = f(x, y*(x)) with warm-started lower solves.
inline LineSearchResult line_search(const BilevelProblem& prob, const Vector& x, const Vector& g, double phi_x,
                                    double beta, double gamma, int max_backtracks,
                                    const std::optional<LowerSolution>& warm = std::nullopt,
                                    const SolverOpts& opts = {})
{
    auto phi = [&](const Vector& z) -> std::optional<double> {
        try {
            const LowerSolution s = solve_lower(prob, z, warm, opts);
            return eval_f(prob, z, s.y_star);
        } catch (const GamError&) {
            return std::nullopt;
        }
    };
    return line_search(phi, x, g, phi_x, beta, gamma, max_backtracks);
}

struct DescentDirection {
    Vector g;
    Branch branch = Branch::Differentiable;
    BallClassification cls;
    int members = 1;
};

/**
 * Descent direction at x for radius eps: the gradient of Phi when the ball
 * check passes, otherwise the minimum-norm element of the representative
 * gradient set.
 */
inline DescentDirection descent_direction(const BilevelProblem& prob, const KktPoint& pt, const LowerSolution& sol,
                                          const ActiveSetClassification& sets, double eps, const GamConfig& cfg,
                                          std::mt19937_64& rng)
{
    const LocalSensitivity local = local_sensitivity(prob, pt, sol, sets, cfg.sens, rng);
    const LipschitzEstimates lip = estimate_lipschitz(pt, local.sens, cfg.lipschitz_delta);
    DescentDirection out;
    out.cls = check_differentiability_on_ball(sol, sets, lip, eps);
    if (out.cls.differentiable_on_ball) {
        // I_eps empty implies J0 empty, so local.sens was taken at x itself
        out.g = composite_gradient(pt, local.sens.grad_y_star);
        out.branch = Branch::Differentiable;
        return out;
    }
    const SubgradientSet set = build_subgradient_set(pt, out.cls, cfg.max_subsets, cfg.sens);
    out.g = set.min_norm_g;
    out.members = static_cast<int>(set.members.size());
    out.branch = Branch::Nonsmooth;
    return out;
}

/// One GAM run. Owns the warm-start chain, evaluation cache and RNG.
class GamSolver {
public:
    GamSolver(const BilevelProblem& prob, GamConfig cfg) : prob_(prob), cfg_(std::move(cfg)), rng_(cfg_.seed)
    {
        cfg_.validate();
    }

    std::pair<GamResult, std::vector<TraceRecord>> run(const Vector& x0)
    {
        detail::check_size(x0, prob_.d_x, "x0");
        std::vector<TraceRecord> trace;
        Vector x = x0;
        double eps = cfg_.eps0;
        double nu = cfg_.nu0;
        LowerSolution sol = solve_lower(prob_, x, std::nullopt, cfg_.sens.lower);

        GamResult result;
        result.status = "max_iterations";
        for (int k = 0; k < cfg_.max_outer_iters; ++k) {
            const auto start = std::chrono::steady_clock::now();
            const ActiveSetClassification sets = classify_active_sets(prob_, x, sol, cfg_.sens.lower.tol_active);
            const KktPoint& pt = cache_.get(prob_, x, sol.y_star, effective_multipliers(sol, sets), sol.nu);
            const double phi = pt.f;
            const DescentDirection dir = descent_direction(prob_, pt, sol, sets, eps, cfg_, rng_);

            TraceRecord rec;
            rec.k = k;
            rec.x = x;
            rec.phi = phi;
            rec.g = dir.g;
            rec.g_norm = dir.g.norm();
            rec.eps = eps;
            rec.nu = nu;
            rec.branch = dir.branch;
            rec.active_sets = sets;
            rec.members = dir.members;
            rec.lower_iterations = sol.iterations;
            rec.phi_next = phi;

            bool stop = false;
            if (rec.g_norm <= cfg_.nu_opt && eps <= cfg_.eps_opt) {
                stop = true;
            } else if (rec.g_norm <= nu) {
                rec.branch = Branch::NullStep;
                rec.t = 0.0;
                nu *= cfg_.theta_nu;
                eps *= cfg_.theta_eps;
            } else if (cfg_.step_rule == StepRule::FixedStep) {
                rec.t = cfg_.lr_schedule(k);
                x = x - rec.t * dir.g;
                sol = solve_lower(prob_, x, sol, cfg_.sens.lower);
                rec.phi_next = eval_f(prob_, x, sol.y_star);
            } else {
                std::optional<LowerSolution> accepted;
                auto phi_fn = [&](const Vector& z) -> std::optional<double> {
                    try {
                        LowerSolution s = solve_lower(prob_, z, sol, cfg_.sens.lower);
                        const double v = eval_f(prob_, z, s.y_star);
                        accepted = std::move(s);
                        return v;
                    } catch (const GamError&) {
                        return std::nullopt;
                    }
                };
                const LineSearchResult ls =
                    line_search(phi_fn, x, dir.g, phi, cfg_.beta, cfg_.gamma, cfg_.max_backtracks);
                rec.t = ls.t;
                rec.backtracks = ls.backtracks;
                rec.phi_next = ls.phi;
                x = x - ls.t * dir.g;
                // the last successful evaluation is the accepted trial
                sol = std::move(*accepted);
            }
            rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
            trace.push_back(rec);

            result.iterations = k + 1;
            if (stop) {
                result.converged = true;
                result.status = "converged";
                break;
            }
        }
        result.x = x;
        result.phi = eval_f(prob_, x, sol.y_star);
        result.g_norm = trace.empty() ? 0.0 : trace.back().g_norm;
        result.eps = eps;
        result.nu = nu;
        return {result, trace};
    }

    const EvaluationCache& cache() const { return cache_; }

private:
    const BilevelProblem& prob_;
    GamConfig cfg_;
    std::mt19937_64 rng_;
    EvaluationCache cache_;
};

inline std::pair<GamResult, std::vector<TraceRecord>> run(const BilevelProblem& prob, const Vector& x0,
                                                          const GamConfig& cfg = {})
{
    GamSolver solver(prob, cfg);
    return solver.run(x0);
}

/// Same descent directions, but steps follow `lr_schedule` without an
/// acceptance test.
inline std::pair<GamResult, std::vector<TraceRecord>> run_fixed_step(const BilevelProblem& prob, const Vector& x0,
                                                                     std::function<double(int)> lr_schedule,
                                                                     GamConfig cfg = {})
{
    cfg.step_rule = StepRule::FixedStep;
    cfg.lr_schedule = std::move(lr_schedule);
    return run(prob, x0, cfg);
}

}  // namespace gam

#endif  // GAM_DRIVER_HPP
