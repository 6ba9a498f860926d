#ifndef GAM_TRACE_IO_HPP
#define GAM_TRACE_IO_HPP

#include <iomanip>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "gam/driver.hpp"

namespace gam {

inline constexpr const char* kTraceCsvHeader = "k,phi,g_norm,eps,nu,t,branch,wall_ms";

inline void write_trace_csv(std::ostream& os, const std::vector<TraceRecord>& trace)
{
    os << kTraceCsvHeader << '\n';
    os << std::setprecision(17);
    for (const auto& r : trace)
        os << r.k << ',' << r.phi << ',' << r.g_norm << ',' << r.eps << ',' << r.nu << ',' << r.t << ','
           << branch_name(r.branch) << ',' << std::setprecision(6) << r.wall_ms << std::setprecision(17) << '\n';
}

inline nlohmann::json to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline nlohmann::json trace_to_json(const GamResult& result, const std::vector<TraceRecord>& trace)
{
    nlohmann::json records = nlohmann::json::array();
    for (const auto& r : trace) {
        records.push_back({{"k", r.k},
                           {"x", to_json(r.x)},
                           {"phi", r.phi},
                           {"phi_next", r.phi_next},
                           {"g", to_json(r.g)},
                           {"g_norm", r.g_norm},
                           {"eps", r.eps},
                           {"nu", r.nu},
                           {"t", r.t},
                           {"branch", branch_name(r.branch)},
                           {"members", r.members},
                           {"backtracks", r.backtracks},
                           {"lower_iterations", r.lower_iterations},
                           {"active", r.active_sets.J},
                           {"active_plus", r.active_sets.J_plus},
                           {"active_zero", r.active_sets.J_zero},
                           {"wall_ms", r.wall_ms}});
    }
    return {{"result",
             {{"x", to_json(result.x)},
              {"phi", result.phi},
              {"g_norm", result.g_norm},
              {"eps", result.eps},
              {"nu", result.nu},
              {"iterations", result.iterations},
              {"converged", result.converged},
              {"status", result.status}}},
            {"trace", records}};
}

}  // namespace gam

#endif  // GAM_TRACE_IO_HPP
