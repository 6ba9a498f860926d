#ifndef GAM_CORE_HPP
#define GAM_CORE_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gam {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Sorted list of constraint indices (0-based).
using IndexSet = std::vector<int>;

// ---------------------------------------------------------------------------
// Error hierarchy. Every failure the library reports derives from GamError so
// callers can catch the whole family at once.
// ---------------------------------------------------------------------------

class GamError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public GamError {
public:
    using GamError::GamError;
};

class EvaluationError : public GamError {
public:
    using GamError::GamError;
};

class PreconditionError : public GamError {
public:
    using GamError::GamError;
};

class InfeasibleLowerLevel : public GamError {
public:
    using GamError::GamError;
};

class LicqViolation : public GamError {
public:
    LicqViolation(const std::string& what, double sigma_min, double sigma_max)
        : GamError(what), sigma_min(sigma_min), sigma_max(sigma_max) {}
    double sigma_min;
    double sigma_max;
};

class ScscViolated : public GamError {
public:
    using GamError::GamError;
};

class SingularKktMatrix : public GamError {
public:
    using GamError::GamError;
};

class CgStalled : public GamError {
public:
    CgStalled(const std::string& what, double residual)
        : GamError(what), residual(residual) {}
    double residual;
};

class SingularSchur : public GamError {
public:
    using GamError::GamError;
};

class AllSubsetsSingular : public GamError {
public:
    using GamError::GamError;
};

class LineSearchFailed : public GamError {
public:
    LineSearchFailed(const std::string& what, double last_t, double armijo_gap)
        : GamError(what), last_t(last_t), armijo_gap(armijo_gap) {}
    double last_t;
    /// Phi(x - t g) - (Phi(x) - beta t |g|^2) at the smallest tried step.
    double armijo_gap;
};

class SamplingExhausted : public GamError {
public:
    using GamError::GamError;
};

class DegenerateKernel : public GamError {
public:
    using GamError::GamError;
};

class ConfigError : public GamError {
public:
    using GamError::GamError;
};

// ---------------------------------------------------------------------------
// Small helpers shared by the modules.
// ---------------------------------------------------------------------------

inline bool all_finite(const Vector& v) { return v.allFinite(); }
inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline bool contains(const IndexSet& s, int j)
{
    return std::find(s.begin(), s.end(), j) != s.end();
}

inline IndexSet set_union(const IndexSet& a, const IndexSet& b)
{
    IndexSet out = a;
    out.insert(out.end(), b.begin(), b.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline IndexSet set_difference(const IndexSet& a, const IndexSet& b)
{
    IndexSet out;
    for (int j : a)
        if (!contains(b, j)) out.push_back(j);
    return out;
}

/// Rows of `m` picked by `rows`, in the order given.
inline Matrix select_rows(const Matrix& m, const IndexSet& rows)
{
    Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
    return out;
}

inline Vector select_entries(const Vector& v, const IndexSet& idx)
{
    Vector out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(idx[i]);
    return out;
}

inline std::string to_string(const IndexSet& s)
{
    std::string out = "{";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "}";
}

inline double inf_norm(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace gam

#endif  // GAM_CORE_HPP
