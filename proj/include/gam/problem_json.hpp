#ifndef GAM_PROBLEM_JSON_HPP
#define GAM_PROBLEM_JSON_HPP

// Declarative QP-lower-level problems in JSON:
//
// {
//   "name": "demo", "d_x": 2, "d_y": 2,
//   "lower": { "Q": [[2,0],[0,2]], "c0": [0,0], "C": [[-1,0],[0,-1]],
//              "G": [[1,1]], "h0": [1], "H": [[0,0]],
//              "Q_exp_diag": [{"row": 0, "x": 1, "scale": 1.0}] },
//   "upper": { "type": "quadratic", "Pyy": [[1,0],[0,1]], "qy": [-1,0] }
// }
//
// Missing matrices default to zeros; "A"/"b0"/"B" add equalities. The upper
// level is "quadratic" (Pyy, Pxx, Pxy, qy, qx) or "logistic_surrogate"
// (features, labels, reg_x).

#include <fstream>
#include <string>

#include <json.hpp>

#include "gam/problems.hpp"

namespace gam {

namespace detail {

inline Matrix json_matrix(const nlohmann::json& obj, const char* key, Eigen::Index rows, Eigen::Index cols)
{
    if (!obj.contains(key)) return Matrix::Zero(rows, cols);
    const auto& j = obj.at(key);
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
        throw ConfigError(std::string("problem json: `") + key + "` must have " + std::to_string(rows) + " rows");
    Matrix out(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw ConfigError(std::string("problem json: `") + key + "` rows must have " + std::to_string(cols) +
                              " entries");
        for (Eigen::Index k = 0; k < cols; ++k) out(i, k) = row[static_cast<std::size_t>(k)].get<double>();
    }
    return out;
}

inline Vector json_vector(const nlohmann::json& obj, const char* key, Eigen::Index size)
{
    if (!obj.contains(key)) return Vector::Zero(size);
    const auto& j = obj.at(key);
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != size)
        throw ConfigError(std::string("problem json: `") + key + "` must have " + std::to_string(size) + " entries");
    Vector out(size);
    for (Eigen::Index i = 0; i < size; ++i) out(i) = j[static_cast<std::size_t>(i)].get<double>();
    return out;
}

inline Eigen::Index json_rows(const nlohmann::json& obj, const char* key)
{
    return obj.contains(key) ? static_cast<Eigen::Index>(obj.at(key).size()) : 0;
}

}  // namespace detail

inline BilevelProblem problem_from_json(const nlohmann::json& j)
{
    try {
        const int dx = j.at("d_x").get<int>();
        const int dy = j.at("d_y").get<int>();
        if (dx < 1 || dy < 1) throw ConfigError("problem json: d_x and d_y must be positive");
        const auto& lo_j = j.at("lower");
        QpLower lo;
        lo.Q = detail::json_matrix(lo_j, "Q", dy, dy);
        lo.c0 = detail::json_vector(lo_j, "c0", dy);
        lo.C = detail::json_matrix(lo_j, "C", dy, dx);
        const Eigen::Index m = detail::json_rows(lo_j, "G");
        lo.G = detail::json_matrix(lo_j, "G", m, dy);
        lo.h0 = detail::json_vector(lo_j, "h0", m);
        lo.H = detail::json_matrix(lo_j, "H", m, dx);
        const Eigen::Index n = detail::json_rows(lo_j, "A");
        lo.A = detail::json_matrix(lo_j, "A", n, dy);
        lo.b0 = detail::json_vector(lo_j, "b0", n);
        lo.B = detail::json_matrix(lo_j, "B", n, dx);
        if (lo_j.contains("Q_exp_diag"))
            for (const auto& t : lo_j.at("Q_exp_diag"))
                lo.exp_diag.push_back({t.at("row").get<int>(), t.at("x").get<int>(), t.value("scale", 1.0)});
        if (!(detail::min_eigenvalue(0.5 * (lo.Q + lo.Q.transpose())) > 0.0))
            throw ConfigError("problem json: Q must be positive definite");

        const auto& up_j = j.at("upper");
        const std::string type = up_j.value("type", "quadratic");
        UpperObjective up;
        if (type == "quadratic") {
            up = quadratic_upper(detail::json_matrix(up_j, "Pyy", dy, dy), detail::json_matrix(up_j, "Pxx", dx, dx),
                                 detail::json_matrix(up_j, "Pxy", dx, dy), detail::json_vector(up_j, "qy", dy),
                                 detail::json_vector(up_j, "qx", dx));
        } else if (type == "logistic_surrogate") {
            const Eigen::Index rows = detail::json_rows(up_j, "features");
            if (rows == 0) throw ConfigError("problem json: logistic_surrogate needs features");
            up = logistic_upper(detail::json_matrix(up_j, "features", rows, dy),
                                detail::json_vector(up_j, "labels", rows), up_j.value("reg_x", 0.0));
        } else {
            throw ConfigError("problem json: unknown upper type `" + type + "`");
        }
        return make_qp_problem(j.value("name", "json"), std::move(lo), std::move(up));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("problem json: ") + e.what());
    } catch (const DimensionError& e) {
        throw ConfigError(e.what());
    }
}

inline BilevelProblem load_problem_json(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return problem_from_json(j);
}

}  // namespace gam

#endif  // GAM_PROBLEM_JSON_HPP
