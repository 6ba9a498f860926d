#ifndef GAM_PROBLEMS_HPP
#define GAM_PROBLEMS_HPP

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "gam/oracle.hpp"

namespace gam {

// ---------------------------------------------------------------------------
// Example 1:  Phi(x) = y*(x),  y*(x) = argmin { (y - x^2)^2 : -x - y <= 0 }
// ---------------------------------------------------------------------------

inline BilevelProblem make_example1()
{
    BilevelProblem p;
    p.name = "example1";
    p.d_x = p.d_y = p.m = 1;
    p.n = 0;
    p.mu = 2.0;
    p.lower_is_qp = true;
    auto one = [](double v) { return Vector::Constant(1, v); };
    auto one_m = [](double v) { return Matrix::Constant(1, 1, v); };

    p.f = [](const Vector&, const Vector& y) { return y(0); };
    p.grad_x_f = [one](const Vector&, const Vector&) { return one(0.0); };
    p.grad_y_f = [one](const Vector&, const Vector&) { return one(1.0); };

    p.g = [](const Vector& x, const Vector& y) { return std::pow(y(0) - x(0) * x(0), 2); };
    p.grad_y_g = [one](const Vector& x, const Vector& y) { return one(2.0 * (y(0) - x(0) * x(0))); };
    p.hess_yy_g = [one_m](const Vector&, const Vector&) { return one_m(2.0); };
    p.hess_xy_g = [one_m](const Vector& x, const Vector&) { return one_m(-4.0 * x(0)); };

    p.p = [one](const Vector& x, const Vector& y) { return one(-x(0) - y(0)); };
    p.jac_y_p = [one_m](const Vector&, const Vector&) { return one_m(-1.0); };
    p.jac_x_p = [one_m](const Vector&, const Vector&) { return one_m(-1.0); };
    p.hess_yy_p = [one_m](int, const Vector&, const Vector&) { return one_m(0.0); };
    p.hess_xy_p = [one_m](int, const Vector&, const Vector&) { return one_m(0.0); };

    p.q = [](const Vector&, const Vector&) { return Vector(0); };
    p.jac_y_q = [](const Vector&, const Vector&) { return Matrix(0, 1); };
    p.jac_x_q = [](const Vector&, const Vector&) { return Matrix(0, 1); };
    return p;
}

namespace example1 {

inline double y_star_exact(double x) { return (x >= -1.0 && x <= 0.0) ? -x : x * x; }
inline double lambda_exact(double x) { return (x >= -1.0 && x <= 0.0) ? -2.0 * x * (1.0 + x) : 0.0; }

/// Phi'(x) away from the kinks at -1 and 0.
inline double phi_gradient_exact(double x) { return (x > -1.0 && x < 0.0) ? -1.0 : 2.0 * x; }

}  // namespace example1

// ---------------------------------------------------------------------------
// Quadratic lower levels with affine constraints
//
//   g = 1/2 y^T Q(x) y + (c0 + C x)^T y
//   p = G y - (h0 + H x) <= 0
//   q = A y - (b0 + B x)  = 0
//
// Q(x) = Q + sum_t scale_t exp(x_{k_t}) e_{r_t} e_{r_t}^T lets a hyperparameter
// enter the curvature.
// ---------------------------------------------------------------------------

struct ExpDiagTerm {
    int row = 0;
    int x_index = 0;
    double scale = 1.0;
};

struct QpLower {
    Matrix Q;
    std::vector<ExpDiagTerm> exp_diag;
    Vector c0;
    Matrix C;
    Matrix G;
    Vector h0;
    Matrix H;
    Matrix A;
    Vector b0;
    Matrix B;

    int d_x() const { return static_cast<int>(C.cols()); }
    int d_y() const { return static_cast<int>(Q.rows()); }

    Matrix Q_at(const Vector& x) const
    {
        Matrix out = Q;
        for (const auto& t : exp_diag) out(t.row, t.row) += t.scale * std::exp(x(t.x_index));
        return out;
    }
    Vector c_at(const Vector& x) const { return c0 + C * x; }
    Vector h_at(const Vector& x) const { return h0 + H * x; }
    Vector b_at(const Vector& x) const { return b0 + B * x; }

    ExactQpSolution exact(const Vector& x) const { return exhaustive_qp(Q_at(x), c_at(x), G, h_at(x), A, b_at(x)); }
};

struct UpperObjective {
    ScalarFn f;
    VectorFn grad_x;
    VectorFn grad_y;
};

/// f = 1/2 y^T Pyy y + 1/2 x^T Pxx x + x^T Pxy y + qy^T y + qx^T x
inline UpperObjective quadratic_upper(Matrix Pyy, Matrix Pxx, Matrix Pxy, Vector qy, Vector qx)
{
    auto d = std::make_shared<const std::tuple<Matrix, Matrix, Matrix, Vector, Vector>>(Pyy, Pxx, Pxy, qy, qx);
    UpperObjective u;
    u.f = [d](const Vector& x, const Vector& y) {
        const auto& [pyy, pxx, pxy, vy, vx] = *d;
        return 0.5 * y.dot(pyy * y) + 0.5 * x.dot(pxx * x) + x.dot(pxy * y) + vy.dot(y) + vx.dot(x);
    };
    u.grad_x = [d](const Vector& x, const Vector& y) -> Vector {
        const auto& [pyy, pxx, pxy, vy, vx] = *d;
        return pxx * x + pxy * y + vx;
    };
    u.grad_y = [d](const Vector& x, const Vector& y) -> Vector {
        const auto& [pyy, pxx, pxy, vy, vx] = *d;
        return pyy * y + pxy.transpose() * x + vy;
    };
    return u;
}

/**
 * f = mean_i log(1 + exp(-l_i a_i^T y)) + 1/2 reg_x |x|^2, a smooth
 * classification loss on the lower-level variable.
 */
inline UpperObjective logistic_upper(Matrix features, Vector labels, double reg_x)
{
    auto d = std::make_shared<const std::pair<Matrix, Vector>>(std::move(features), std::move(labels));
    UpperObjective u;
    u.f = [d, reg_x](const Vector& x, const Vector& y) {
        const auto& [a, l] = *d;
        const Vector margin = l.cwiseProduct(a * y);
        double s = 0.0;
        for (double mg : margin) s += mg > 0 ? std::log1p(std::exp(-mg)) : -mg + std::log1p(std::exp(mg));
        return s / static_cast<double>(margin.size()) + 0.5 * reg_x * x.squaredNorm();
    };
    u.grad_x = [reg_x](const Vector& x, const Vector&) -> Vector { return reg_x * x; };
    u.grad_y = [d](const Vector&, const Vector& y) -> Vector {
        const auto& [a, l] = *d;
        const Vector margin = l.cwiseProduct(a * y);
        Vector w(margin.size());
        for (Eigen::Index i = 0; i < margin.size(); ++i) w(i) = -l(i) / (1.0 + std::exp(margin(i)));
        return a.transpose() * w / static_cast<double>(margin.size());
    };
    return u;
}

inline void check_qp_shapes(const QpLower& lo)
{
    const int dx = lo.d_x(), dy = lo.d_y();
    auto need = [](bool ok, const std::string& what) {
        if (!ok) throw DimensionError("quadratic lower level: " + what);
    };
    need(lo.Q.cols() == dy, "Q must be square");
    need(lo.c0.size() == dy && lo.C.rows() == dy, "c0 / C must have d_y rows");
    need(lo.G.cols() == dy && lo.h0.size() == lo.G.rows() && lo.H.rows() == lo.G.rows() && lo.H.cols() == dx,
         "G, h0, H shapes disagree");
    need(lo.A.cols() == dy && lo.b0.size() == lo.A.rows() && lo.B.rows() == lo.A.rows() && lo.B.cols() == dx,
         "A, b0, B shapes disagree");
    for (const auto& t : lo.exp_diag)
        need(t.row >= 0 && t.row < dy && t.x_index >= 0 && t.x_index < dx && t.scale >= 0.0,
             "exp-diagonal term out of range");
}

inline BilevelProblem make_qp_problem(std::string name, QpLower lower, UpperObjective upper)
{
    check_qp_shapes(lower);
    auto lo = std::make_shared<const QpLower>(std::move(lower));
    BilevelProblem p;
    p.name = std::move(name);
    p.d_x = lo->d_x();
    p.d_y = lo->d_y();
    p.m = static_cast<int>(lo->G.rows());
    p.n = static_cast<int>(lo->A.rows());
    p.mu = detail::min_eigenvalue(0.5 * (lo->Q + lo->Q.transpose()));
    p.lower_is_qp = true;

    p.f = upper.f;
    p.grad_x_f = upper.grad_x;
    p.grad_y_f = upper.grad_y;

    p.g = [lo](const Vector& x, const Vector& y) { return 0.5 * y.dot(lo->Q_at(x) * y) + lo->c_at(x).dot(y); };
    p.grad_y_g = [lo](const Vector& x, const Vector& y) -> Vector { return lo->Q_at(x) * y + lo->c_at(x); };
    p.hess_yy_g = [lo](const Vector& x, const Vector&) { return lo->Q_at(x); };
    p.hess_xy_g = [lo](const Vector& x, const Vector& y) {
        Matrix h = lo->C;
        for (const auto& t : lo->exp_diag) h(t.row, t.x_index) += t.scale * std::exp(x(t.x_index)) * y(t.row);
        return h;
    };

    const int dx = p.d_x, dy = p.d_y;
    p.p = [lo](const Vector& x, const Vector& y) -> Vector { return lo->G * y - lo->h_at(x); };
    p.jac_y_p = [lo](const Vector&, const Vector&) { return lo->G; };
    p.jac_x_p = [lo](const Vector&, const Vector&) -> Matrix { return -lo->H; };
    p.hess_yy_p = [dy](int, const Vector&, const Vector&) { return Matrix::Zero(dy, dy).eval(); };
    p.hess_xy_p = [dy, dx](int, const Vector&, const Vector&) { return Matrix::Zero(dy, dx).eval(); };

    p.q = [lo](const Vector& x, const Vector& y) -> Vector { return lo->A * y - lo->b_at(x); };
    p.jac_y_q = [lo](const Vector&, const Vector&) { return lo->A; };
    p.jac_x_q = [lo](const Vector&, const Vector&) -> Matrix { return -lo->B; };
    return p;
}

struct BilevelQp {
    BilevelProblem problem;
    QpLower lower;

    ExactQpSolution reference_solver(const Vector& x) const { return lower.exact(x); }
};

namespace detail {

inline Matrix gaussian_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0)
{
    std::normal_distribution<double> nd(0.0, scale);
    Matrix out(rows, cols);
    for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = nd(rng);
    return out;
}

inline Vector gaussian_vector(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0)
{
    return gaussian_matrix(rng, n, 1, scale).col(0);
}

inline Matrix random_spd(std::mt19937_64& rng, int n, double floor)
{
    const Matrix m = gaussian_matrix(rng, n, n);
    return m.transpose() * m / std::max(1, n) + floor * Matrix::Identity(n, n);
}

inline UpperObjective random_quadratic_upper(std::mt19937_64& rng, int dx, int dy)
{
    return quadratic_upper(Matrix::Identity(dy, dy), 0.1 * Matrix::Identity(dx, dx), gaussian_matrix(rng, dx, dy, 0.3),
                           gaussian_vector(rng, dy), gaussian_vector(rng, dx, 0.3));
}

}  // namespace detail

/**
 * Random strongly convex QP lower level with a quadratic upper objective.
 * Inequality offsets are positive so y = 0 is strictly feasible at x = 0;
 * typical x leave some constraints active.
 */
inline BilevelQp make_bilevel_qp(std::uint64_t seed, int d_x, int d_y, int m, int n)
{
    if (d_x < 1 || d_y < 1 || m < 0 || n < 0) throw PreconditionError("make_bilevel_qp: bad dimensions");
    if (n > d_y) throw PreconditionError("make_bilevel_qp: more equalities than variables");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> offset(0.1, 1.0);
    QpLower lo;
    lo.Q = detail::random_spd(rng, d_y, 0.5);
    lo.c0 = detail::gaussian_vector(rng, d_y);
    lo.C = detail::gaussian_matrix(rng, d_y, d_x);
    lo.G = detail::gaussian_matrix(rng, m, d_y);
    lo.h0 = Vector(m);
    for (auto& v : lo.h0) v = offset(rng);
    lo.H = detail::gaussian_matrix(rng, m, d_x, 0.3);
    lo.A = detail::gaussian_matrix(rng, n, d_y);
    lo.b0 = detail::gaussian_vector(rng, n, 0.3);
    lo.B = detail::gaussian_matrix(rng, n, d_x, 0.3);
    UpperObjective up = detail::random_quadratic_upper(rng, d_x, d_y);
    BilevelQp out{make_qp_problem("qp", lo, up), lo};
    out.problem.name = "qp-" + std::to_string(seed);
    return out;
}

struct DegenerateQp {
    BilevelProblem problem;
    QpLower lower;
    Vector x0;  ///< every inequality is active with zero multiplier here
};

/// QP whose m inequalities are all weakly active (p = 0, lambda = 0) at x0.
inline DegenerateQp make_degenerate_qp(std::uint64_t seed, int d_x, int d_y, int m)
{
    if (m > d_y) throw PreconditionError("make_degenerate_qp: m must not exceed d_y");
    std::mt19937_64 rng(seed);
    QpLower lo;
    lo.Q = detail::random_spd(rng, d_y, 0.5);
    lo.c0 = detail::gaussian_vector(rng, d_y);
    lo.C = detail::gaussian_matrix(rng, d_y, d_x);
    lo.G = detail::gaussian_matrix(rng, m, d_y);
    lo.H = detail::gaussian_matrix(rng, m, d_x);
    lo.A = Matrix(0, d_y);
    lo.b0 = Vector(0);
    lo.B = Matrix(0, d_x);
    const Vector x0 = detail::gaussian_vector(rng, d_x, 0.5);
    const Vector y_free = -lo.Q.ldlt().solve(lo.c0 + lo.C * x0);
    lo.h0 = lo.G * y_free - lo.H * x0;
    UpperObjective up = detail::random_quadratic_upper(rng, d_x, d_y);
    DegenerateQp out{make_qp_problem("degenerate-qp", lo, up), lo, x0};
    return out;
}

/**
 * Small problem with a nonlinear convex lower level:
 *   g = 1/2 |y - x|^2 + 0.1 sum exp(y_i),  p = 1/2 |y|^2 - 1/2 <= 0,
 *   f = 1/2 |y - a|^2 + 0.05 |x|^2.
 */
inline BilevelProblem make_ball_constrained(Vector a = Vector::Constant(2, 0.8))
{
    const int d = static_cast<int>(a.size());
    BilevelProblem p;
    p.name = "ball";
    p.d_x = p.d_y = d;
    p.m = 1;
    p.n = 0;
    p.mu = 1.0;
    p.f = [a](const Vector& x, const Vector& y) { return 0.5 * (y - a).squaredNorm() + 0.05 * x.squaredNorm(); };
    p.grad_x_f = [](const Vector& x, const Vector&) -> Vector { return 0.1 * x; };
    p.grad_y_f = [a](const Vector&, const Vector& y) -> Vector { return y - a; };
    p.g = [](const Vector& x, const Vector& y) { return 0.5 * (y - x).squaredNorm() + 0.1 * y.array().exp().sum(); };
    p.grad_y_g = [](const Vector& x, const Vector& y) -> Vector { return y - x + 0.1 * y.array().exp().matrix(); };
    p.hess_yy_g = [d](const Vector&, const Vector& y) -> Matrix {
        return Matrix::Identity(d, d) + Matrix((0.1 * y.array().exp()).matrix().asDiagonal());
    };
    p.hess_xy_g = [d](const Vector&, const Vector&) -> Matrix { return -Matrix::Identity(d, d); };
    p.p = [](const Vector&, const Vector& y) { return Vector::Constant(1, 0.5 * y.squaredNorm() - 0.5); };
    p.jac_y_p = [](const Vector&, const Vector& y) -> Matrix { return y.transpose(); };
    p.jac_x_p = [d](const Vector&, const Vector&) -> Matrix { return Matrix::Zero(1, d); };
    p.hess_yy_p = [d](int, const Vector&, const Vector&) -> Matrix { return Matrix::Identity(d, d); };
    p.hess_xy_p = [d](int, const Vector&, const Vector&) -> Matrix { return Matrix::Zero(d, d); };
    p.q = [](const Vector&, const Vector&) { return Vector(0); };
    p.jac_y_q = [d](const Vector&, const Vector&) { return Matrix(0, d); };
    p.jac_x_q = [d](const Vector&, const Vector&) { return Matrix(0, d); };
    return p;
}

// ---------------------------------------------------------------------------
// SVM hyperparameter problems. Upper variable c holds one penalty exponent
// per training point.
// ---------------------------------------------------------------------------

struct LabeledData {
    Matrix features;  ///< one row per point
    Vector labels;    ///< +1 / -1

    int size() const { return static_cast<int>(features.rows()); }
    int dim() const { return static_cast<int>(features.cols()); }
};

inline void check_labels(const LabeledData& d, const char* what)
{
    if (d.labels.size() != d.features.rows())
        throw DimensionError(std::string(what) + ": label count differs from row count");
    for (double l : d.labels)
        if (l != 1.0 && l != -1.0) throw PreconditionError(std::string(what) + ": labels must be +1 or -1");
}

struct Kernel {
    enum class Type { Linear, Polynomial };
    Type type = Type::Linear;
    double gamma = 1.0;
    double r = 1.0;
    int degree = 3;

    static Kernel linear() { return {}; }
    static Kernel polynomial(double gamma = 1.0, double r = 1.0, int degree = 3)
    {
        return {Type::Polynomial, gamma, r, degree};
    }

    double operator()(const Vector& a, const Vector& b) const
    {
        const double dot = a.dot(b);
        return type == Type::Linear ? dot : std::pow(gamma * dot + r, degree);
    }

    Matrix gram(const Matrix& rows_a, const Matrix& rows_b) const
    {
        Matrix out(rows_a.rows(), rows_b.rows());
        for (Eigen::Index i = 0; i < rows_a.rows(); ++i)
            for (Eigen::Index j = 0; j < rows_b.rows(); ++j)
                out(i, j) = (*this)(rows_a.row(i).transpose(), rows_b.row(j).transpose());
        return out;
    }
};

enum class SvmForm { Auto, Primal, Dual };

/// sigma(t) = (1 - e^-t) / (1 + e^-t) = tanh(t / 2)
inline double svm_sigma(double t) { return std::tanh(0.5 * t); }
inline double svm_sigma_prime(double t)
{
    const double th = std::tanh(0.5 * t);
    return 0.5 * (1.0 - th * th);
}

inline constexpr double kWeightNormFloor = 1e-12;

struct SvmModel {
    Vector w;  ///< primal weights (linear kernel) or empty
    double b = 0.0;
    Vector alpha;  ///< dual coefficients or empty
    Kernel kernel;
    std::shared_ptr<const LabeledData> train;

    double decision(const Vector& z) const
    {
        if (alpha.size() == 0) return w.dot(z) + b;
        double s = b;
        for (int i = 0; i < train->size(); ++i)
            s += alpha(i) * train->labels(i) * kernel(train->features.row(i).transpose(), z);
        return s;
    }
    double predict(const Vector& z) const { return decision(z) >= 0.0 ? 1.0 : -1.0; }
};

inline double accuracy(const SvmModel& model, const LabeledData& data)
{
    if (data.size() == 0) return 0.0;
    int hit = 0;
    for (int i = 0; i < data.size(); ++i) hit += model.predict(data.features.row(i).transpose()) == data.labels(i);
    return static_cast<double>(hit) / data.size();
}

struct SvmHyperopt {
    BilevelProblem problem;
    std::shared_ptr<const LabeledData> train;
    std::shared_ptr<const LabeledData> val;
    Kernel kernel;
    double mu_b = 1e-4;
    bool dual = false;

    SvmModel model(const Vector& c, const Vector& y) const
    {
        SvmModel out;
        out.kernel = kernel;
        out.train = train;
        if (!dual) {
            out.w = y.head(train->dim());
            out.b = y(train->dim());
        } else {
            out.alpha = y;
            out.b = dual_bias(c, y);
        }
        return out;
    }

    /// b from the support vector with the largest coefficient.
    double dual_bias(const Vector& c, const Vector& alpha) const
    {
        Eigen::Index i;
        alpha.maxCoeff(&i);
        double s = train->labels(i) * (1.0 - std::exp(-c(i)) * alpha(i));
        for (int j = 0; j < train->size(); ++j)
            s -= alpha(j) * train->labels(j) *
                 kernel(train->features.row(j).transpose(), train->features.row(i).transpose());
        return s;
    }

    /// Lower-level objective value at y (primal or dual form).
    double lower_objective(const Vector& c, const Vector& y) const { return problem.g(c, y); }
};

namespace detail {

inline void attach_primal_svm(SvmHyperopt& s)
{
    auto tr = s.train;
    auto va = s.val;
    const int N = tr->size(), F = tr->dim(), dy = F + 1 + N;
    const double mu_b = s.mu_b;
    BilevelProblem& p = s.problem;
    p.d_x = N;
    p.d_y = dy;
    p.m = N;
    p.n = 0;
    p.mu = std::min({1.0, mu_b, std::exp(-10.0)});
    p.lower_is_qp = true;

    p.g = [F, N, mu_b](const Vector& c, const Vector& y) {
        const Vector xi = y.tail(N);
        return 0.5 * y.head(F).squaredNorm() + 0.5 * (c.array().exp() * xi.array().square()).sum() +
               0.5 * mu_b * y(F) * y(F);
    };
    p.grad_y_g = [F, N, mu_b](const Vector& c, const Vector& y) -> Vector {
        Vector out(y.size());
        out.head(F) = y.head(F);
        out(F) = mu_b * y(F);
        out.tail(N) = (c.array().exp() * y.tail(N).array()).matrix();
        return out;
    };
    p.hess_yy_g = [F, N, dy, mu_b](const Vector& c, const Vector&) -> Matrix {
        Vector d(dy);
        d.head(F).setOnes();
        d(F) = mu_b;
        d.tail(N) = c.array().exp().matrix();
        return d.asDiagonal();
    };
    p.hess_xy_g = [F, N, dy](const Vector& c, const Vector& y) -> Matrix {
        Matrix h = Matrix::Zero(dy, N);
        for (int i = 0; i < N; ++i) h(F + 1 + i, i) = std::exp(c(i)) * y(F + 1 + i);
        return h;
    };

    // p_i = 1 - xi_i - l_i (z_i^T w + b)
    p.p = [tr, F, N](const Vector&, const Vector& y) -> Vector {
        const Vector margin = tr->labels.cwiseProduct(tr->features * y.head(F) + Vector::Constant(N, y(F)));
        return Vector::Ones(N) - y.tail(N) - margin;
    };
    Matrix jac(N, dy);
    jac.leftCols(F) = -(tr->labels.asDiagonal() * tr->features);
    jac.col(F) = -tr->labels;
    jac.rightCols(N) = -Matrix::Identity(N, N);
    p.jac_y_p = [jac](const Vector&, const Vector&) { return jac; };
    p.jac_x_p = [N](const Vector&, const Vector&) -> Matrix { return Matrix::Zero(N, N); };
    p.hess_yy_p = [dy](int, const Vector&, const Vector&) -> Matrix { return Matrix::Zero(dy, dy); };
    p.hess_xy_p = [dy, N](int, const Vector&, const Vector&) -> Matrix { return Matrix::Zero(dy, N); };
    p.q = [](const Vector&, const Vector&) { return Vector(0); };
    p.jac_y_q = [dy](const Vector&, const Vector&) { return Matrix(0, dy); };
    p.jac_x_q = [N](const Vector&, const Vector&) { return Matrix(0, N); };

    // validation surrogate, mean of sigma(-l (z^T w + b) / |w|)
    p.f = [va, F](const Vector&, const Vector& y) {
        const Vector w = y.head(F);
        const double r = std::max(w.norm(), kWeightNormFloor);
        double s = 0.0;
        for (int i = 0; i < va->size(); ++i)
            s += svm_sigma(-va->labels(i) * (va->features.row(i).dot(w) + y(F)) / r);
        return s / va->size();
    };
    p.grad_x_f = [N](const Vector&, const Vector&) -> Vector { return Vector::Zero(N); };
    p.grad_y_f = [va, F, dy](const Vector&, const Vector& y) -> Vector {
        const Vector w = y.head(F);
        const double wn = w.norm();
        const bool floored = wn < kWeightNormFloor;
        const double r = floored ? kWeightNormFloor : wn;
        Vector out = Vector::Zero(dy);
        for (int i = 0; i < va->size(); ++i) {
            const Vector z = va->features.row(i).transpose();
            const double l = va->labels(i);
            const double u = l * (z.dot(w) + y(F));
            const double sp = svm_sigma_prime(-u / r) / va->size();
            Vector dt_dw = -l * z / r;
            if (!floored) dt_dw += u * w / (r * r * r);
            out.head(F) += sp * dt_dw;
            out(F) += sp * (-l / r);
        }
        return out;
    };
}

inline void attach_dual_svm(SvmHyperopt& s)
{
    auto tr = s.train;
    auto va = s.val;
    const Kernel k = s.kernel;
    const int N = tr->size();
    const Matrix K = k.gram(tr->features, tr->features);
    const Matrix Q = tr->labels.asDiagonal() * K * tr->labels.asDiagonal();
    const Matrix Kv = k.gram(tr->features, va->features);  // N x |val|
    const double qmin = min_eigenvalue(Q);
    if (qmin < -1e-8 * std::max(1.0, Q.cwiseAbs().maxCoeff()) * N)
        throw DegenerateKernel("make_svm_hyperopt: kernel matrix fails the PSD check (min eigenvalue " +
                               std::to_string(qmin) + ")");

    BilevelProblem& p = s.problem;
    p.d_x = N;
    p.d_y = N;
    p.m = N;
    p.n = 1;
    p.mu = std::max(qmin, 0.0) + std::exp(-10.0);
    p.lower_is_qp = true;

    p.g = [Q](const Vector& c, const Vector& a) {
        return 0.5 * a.dot(Q * a) + 0.5 * (c.array().exp().inverse() * a.array().square()).sum() - a.sum();
    };
    p.grad_y_g = [Q](const Vector& c, const Vector& a) -> Vector {
        return Q * a + (c.array().exp().inverse() * a.array()).matrix() - Vector::Ones(a.size());
    };
    p.hess_yy_g = [Q](const Vector& c, const Vector&) -> Matrix {
        return Q + Matrix(c.array().exp().inverse().matrix().asDiagonal());
    };
    p.hess_xy_g = [N](const Vector& c, const Vector& a) -> Matrix {
        return Matrix((-(c.array().exp().inverse()) * a.array()).matrix().asDiagonal());
    };
    p.p = [](const Vector&, const Vector& a) -> Vector { return -a; };
    p.jac_y_p = [N](const Vector&, const Vector&) -> Matrix { return -Matrix::Identity(N, N); };
    p.jac_x_p = [N](const Vector&, const Vector&) -> Matrix { return Matrix::Zero(N, N); };
    p.hess_yy_p = [N](int, const Vector&, const Vector&) -> Matrix { return Matrix::Zero(N, N); };
    p.hess_xy_p = [N](int, const Vector&, const Vector&) -> Matrix { return Matrix::Zero(N, N); };
    p.q = [tr](const Vector&, const Vector& a) { return Vector::Constant(1, tr->labels.dot(a)); };
    p.jac_y_q = [tr](const Vector&, const Vector&) -> Matrix { return tr->labels.transpose(); };
    p.jac_x_q = [N](const Vector&, const Vector&) -> Matrix { return Matrix::Zero(1, N); };

    // Value and both gradients share one pass.
    struct Eval {
        double f;
        Vector gc, ga;
    };
    auto evaluate = [tr, va, K, Q, Kv, N](const Vector& c, const Vector& a) {
        const Vector& l = tr->labels;
        Eigen::Index is;
        a.maxCoeff(&is);
        const double ec = std::exp(-c(is));
        double b = l(is) * (1.0 - ec * a(is));
        for (int j = 0; j < N; ++j) b -= a(j) * l(j) * K(j, is);
        Vector db_da = -(l.cwiseProduct(K.col(is)));
        db_da(is) -= l(is) * ec;
        Vector db_dc = Vector::Zero(N);
        db_dc(is) = l(is) * ec * a(is);

        const double r2 = std::max(a.dot(Q * a), 0.0);
        const bool floored = std::sqrt(r2) < kWeightNormFloor;
        const double r = floored ? kWeightNormFloor : std::sqrt(r2);
        const Vector dr_da = floored ? Vector::Zero(N).eval() : Vector(Q * a / r);

        Eval e{0.0, Vector::Zero(N), Vector::Zero(N)};
        const int nv = va->size();
        for (int v = 0; v < nv; ++v) {
            const double lv = va->labels(v);
            const Vector kv = Kv.col(v);
            const double u = lv * (a.dot(l.cwiseProduct(kv)) + b);
            const double t = -u / r;
            e.f += svm_sigma(t) / nv;
            const double sp = svm_sigma_prime(t) / nv;
            const Vector du_da = lv * (l.cwiseProduct(kv) + db_da);
            e.ga += sp * (-du_da / r + u * dr_da / (r * r));
            e.gc += sp * (-lv * db_dc / r);
        }
        return e;
    };
    p.f = [evaluate](const Vector& c, const Vector& a) { return evaluate(c, a).f; };
    p.grad_x_f = [evaluate](const Vector& c, const Vector& a) { return evaluate(c, a).gc; };
    p.grad_y_f = [evaluate](const Vector& c, const Vector& a) { return evaluate(c, a).ga; };
}

}  // namespace detail

/**
 * SVM penalty tuning. Lower level (primal, linear kernel):
 *   min 1/2 |w|^2 + 1/2 sum e^{c_i} xi_i^2 + 1/2 mu_b b^2
 *   s.t. l_i (w^T z_i + b) >= 1 - xi_i
 * Lower level (dual, any kernel):
 *   min 1/2 a^T (Q + diag(e^{-c})) a - sum a,  a >= 0,  l^T a = 0
 * Upper level: mean validation surrogate sigma(-l (z^T w + b) / |w|).
 * The dual matches the primal with mu_b = 0.
 */
inline SvmHyperopt make_svm_hyperopt(const LabeledData& train, const LabeledData& val, Kernel kernel = Kernel::linear(),
                                     double mu_b = 1e-4, SvmForm form = SvmForm::Auto)
{
    check_labels(train, "train");
    check_labels(val, "val");
    if (train.size() == 0 || val.size() == 0) throw PreconditionError("make_svm_hyperopt: empty data set");
    if (val.dim() != train.dim()) throw DimensionError("make_svm_hyperopt: train and val feature counts differ");
    if (!(mu_b > 0.0)) throw PreconditionError("make_svm_hyperopt: mu_b must be positive");

    SvmHyperopt s;
    s.train = std::make_shared<const LabeledData>(train);
    s.val = std::make_shared<const LabeledData>(val);
    s.kernel = kernel;
    s.mu_b = mu_b;
    s.dual = form == SvmForm::Dual || (form == SvmForm::Auto && kernel.type != Kernel::Type::Linear);
    if (s.dual) {
        s.problem.name = "svm-dual";
        detail::attach_dual_svm(s);
    } else {
        if (kernel.type != Kernel::Type::Linear)
            throw PreconditionError("make_svm_hyperopt: the primal form needs the linear kernel");
        s.problem.name = "svm-primal";
        detail::attach_primal_svm(s);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

/// Two Gaussian classes at +/- separation along the diagonal; labels alternate.
inline LabeledData make_classification_data(std::uint64_t seed, int points, int features = 2, double separation = 1.5)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    LabeledData d;
    d.features = Matrix(points, features);
    d.labels = Vector(points);
    const Vector dir = Vector::Ones(features) / std::sqrt(static_cast<double>(features));
    for (int i = 0; i < points; ++i) {
        const double l = i % 2 == 0 ? 1.0 : -1.0;
        d.labels(i) = l;
        for (int k = 0; k < features; ++k) d.features(i, k) = l * separation * dir(k) + nd(rng);
    }
    return d;
}

/// Flips round(rate * N) labels chosen by a seeded shuffle; returns them sorted.
inline std::vector<int> corrupt_labels(LabeledData& d, double rate, std::uint64_t seed)
{
    if (!(rate >= 0.0 && rate <= 1.0)) throw PreconditionError("corrupt_labels: rate must be in [0, 1]");
    std::vector<int> idx(static_cast<std::size_t>(d.size()));
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<std::size_t>(std::lround(rate * d.size())));
    std::sort(idx.begin(), idx.end());
    for (int i : idx) d.labels(i) = -d.labels(i);
    return idx;
}

struct HyperCleanInstance {
    SvmHyperopt svm;
    std::vector<int> flipped;
};

/// Linear-SVM hyper-cleaning toy: corrupted training set, clean validation set.
inline HyperCleanInstance make_hyperclean(std::uint64_t seed = 0, int n_train = 20, int n_val = 20,
                                          double rate = 0.4, double mu_b = 1e-4)
{
    LabeledData train = make_classification_data(seed, n_train, 2, 1.5);
    const LabeledData val = make_classification_data(seed + 1000, n_val, 2, 1.5);
    std::vector<int> flipped = corrupt_labels(train, rate, seed + 2000);
    HyperCleanInstance out{make_svm_hyperopt(train, val, Kernel::linear(), mu_b), std::move(flipped)};
    out.svm.problem.name = "hyperclean";
    return out;
}

/// The 10 train / 10 validation linear-SVM instance.
inline SvmHyperopt make_svm_toy(std::uint64_t seed = 0)
{
    SvmHyperopt s = make_svm_hyperopt(make_classification_data(seed, 10, 2, 1.0),
                                      make_classification_data(seed + 1000, 10, 2, 1.0), Kernel::linear(), 1e-4);
    s.problem.name = "svm-toy";
    return s;
}

}  // namespace gam

#endif  // GAM_PROBLEMS_HPP
