#ifndef GAM_TOOLS_CLI_APP_HPP
#define GAM_TOOLS_CLI_APP_HPP

// Command logic for gam_cli. Kept in a header so the tests can drive the
// commands without spawning processes.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <CLI11.hpp>

#include "gam/gam.hpp"

namespace gam::cli {

// ---------------------------------------------------------------------------
// Config files: a flat TOML subset or JSON
// ---------------------------------------------------------------------------

using ConfigValue = std::variant<double, std::string, bool, std::vector<double>>;
using ConfigMap = std::map<std::string, ConfigValue>;

namespace detail {

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

inline double parse_number(const std::string& text, const std::string& where)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(where + ": `" + text + "` is not a number");
    }
}

}  // namespace detail

/**
 * `key = value` lines with numbers, "strings", true/false and flat numeric
 * arrays. `#` starts a comment; [section] headers are accepted and ignored,
 * so keys must be unique across sections.
 */
inline ConfigMap parse_toml_subset(std::istream& in, const std::string& source)
{
    ConfigMap out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string where = source + ":" + std::to_string(line_no);
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') quoted = !quoted;
            if (line[i] == '#' && !quoted) {
                line.resize(i);
                break;
            }
        }
        line = detail::trim(line);
        if (line.empty() || line.front() == '[') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (key.empty() || val.empty()) throw ConfigError(where + ": expected key = value");
        if (val.front() == '"') {
            if (val.size() < 2 || val.back() != '"') throw ConfigError(where + ": unterminated string");
            out[key] = val.substr(1, val.size() - 2);
        } else if (val == "true" || val == "false") {
            out[key] = val == "true";
        } else if (val.front() == '[') {
            if (val.back() != ']') throw ConfigError(where + ": arrays must close on the same line");
            std::vector<double> arr;
            std::stringstream ss(val.substr(1, val.size() - 2));
            std::string item;
            while (std::getline(ss, item, ',')) {
                item = detail::trim(item);
                if (!item.empty()) arr.push_back(detail::parse_number(item, where));
            }
            out[key] = arr;
        } else {
            out[key] = detail::parse_number(val, where);
        }
    }
    return out;
}

inline ConfigMap parse_json_config(const nlohmann::json& j, const std::string& source)
{
    if (!j.is_object()) throw ConfigError(source + ": top level must be an object");
    ConfigMap out;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& v = it.value();
        if (v.is_number()) out[it.key()] = v.get<double>();
        else if (v.is_boolean()) out[it.key()] = v.get<bool>();
        else if (v.is_string()) out[it.key()] = v.get<std::string>();
        else if (v.is_array()) {
            std::vector<double> arr;
            for (const auto& e : v) {
                if (!e.is_number()) throw ConfigError(source + ": `" + it.key() + "` must hold numbers");
                arr.push_back(e.get<double>());
            }
            out[it.key()] = arr;
        } else if (v.is_object()) {
            // one level of nesting, same flattening as TOML sections
            for (auto& [k, val] : parse_json_config(v, source)) out[k] = val;
        } else {
            throw ConfigError(source + ": unsupported value for `" + it.key() + "`");
        }
    }
    return out;
}

inline ConfigMap load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    if (std::filesystem::path(path).extension() == ".json") {
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(path + ": " + e.what());
        }
        return parse_json_config(j, path);
    }
    return parse_toml_subset(in, path);
}

// ---------------------------------------------------------------------------
// Options
// ---------------------------------------------------------------------------

struct Options {
    std::string problem = "example1";
    std::string config;
    std::string data;
    std::vector<double> x0;
    std::string out;
    std::uint64_t seed = 0;
    int jobs = 1;
    int sweep = 1;
    GamConfig gam;
};

/// Flags given on the command line; they win over config-file values.
struct Overrides {
    std::optional<std::string> problem, data, out;
    std::optional<std::vector<double>> x0;
    std::optional<double> eps0, nu0, beta, gamma, theta_eps, theta_nu, eps_opt, nu_opt, lipschitz_delta, lower_tol,
        tol_active;
    std::optional<int> max_iters, jobs, sweep;
    std::optional<std::uint64_t> seed;
};

namespace detail {

template <typename T>
T get_as(const ConfigValue& v, const std::string& key)
{
    if constexpr (std::is_same_v<T, std::string>) {
        if (auto p = std::get_if<std::string>(&v)) return *p;
        throw ConfigError("config: `" + key + "` must be a string");
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
        if (auto p = std::get_if<std::vector<double>>(&v)) return *p;
        if (auto p = std::get_if<double>(&v)) return {*p};
        throw ConfigError("config: `" + key + "` must be a number or array");
    } else {
        if (auto p = std::get_if<double>(&v)) {
            if constexpr (std::is_integral_v<T>) {
                if (*p != std::floor(*p) || *p < 0) throw ConfigError("config: `" + key + "` must be a whole number");
            }
            return static_cast<T>(*p);
        }
        throw ConfigError("config: `" + key + "` must be a number");
    }
}

}  // namespace detail

inline Options resolve_options(const Overrides& ov, const std::optional<std::string>& config_path)
{
    Options o;
    if (config_path) {
        o.config = *config_path;
        for (const auto& [key, val] : load_config(*config_path)) {
            if (key == "problem") o.problem = detail::get_as<std::string>(val, key);
            else if (key == "data") o.data = detail::get_as<std::string>(val, key);
            else if (key == "out") o.out = detail::get_as<std::string>(val, key);
            else if (key == "x0") o.x0 = detail::get_as<std::vector<double>>(val, key);
            else if (key == "seed") o.seed = detail::get_as<std::uint64_t>(val, key);
            else if (key == "jobs") o.jobs = detail::get_as<int>(val, key);
            else if (key == "sweep") o.sweep = detail::get_as<int>(val, key);
            else if (key == "eps0") o.gam.eps0 = detail::get_as<double>(val, key);
            else if (key == "nu0") o.gam.nu0 = detail::get_as<double>(val, key);
            else if (key == "beta") o.gam.beta = detail::get_as<double>(val, key);
            else if (key == "gamma") o.gam.gamma = detail::get_as<double>(val, key);
            else if (key == "theta_eps") o.gam.theta_eps = detail::get_as<double>(val, key);
            else if (key == "theta_nu") o.gam.theta_nu = detail::get_as<double>(val, key);
            else if (key == "eps_opt") o.gam.eps_opt = detail::get_as<double>(val, key);
            else if (key == "nu_opt") o.gam.nu_opt = detail::get_as<double>(val, key);
            else if (key == "max_iters" || key == "max_outer_iters")
                o.gam.max_outer_iters = detail::get_as<int>(val, key);
            else if (key == "max_backtracks") o.gam.max_backtracks = detail::get_as<int>(val, key);
            else if (key == "max_subsets") o.gam.max_subsets = detail::get_as<int>(val, key);
            else if (key == "lipschitz_delta") o.gam.lipschitz_delta = detail::get_as<double>(val, key);
            else if (key == "lower_tol") o.gam.sens.lower.tol_kkt = detail::get_as<double>(val, key);
            else if (key == "tol_active") o.gam.sens.lower.tol_active = detail::get_as<double>(val, key);
            else throw ConfigError("config: unknown key `" + key + "`");
        }
    }
    if (ov.problem) o.problem = *ov.problem;
    if (ov.data) o.data = *ov.data;
    if (ov.out) o.out = *ov.out;
    if (ov.x0) o.x0 = *ov.x0;
    if (ov.seed) o.seed = *ov.seed;
    if (ov.jobs) o.jobs = *ov.jobs;
    if (ov.sweep) o.sweep = *ov.sweep;
    if (ov.eps0) o.gam.eps0 = *ov.eps0;
    if (ov.nu0) o.gam.nu0 = *ov.nu0;
    if (ov.beta) o.gam.beta = *ov.beta;
    if (ov.gamma) o.gam.gamma = *ov.gamma;
    if (ov.theta_eps) o.gam.theta_eps = *ov.theta_eps;
    if (ov.theta_nu) o.gam.theta_nu = *ov.theta_nu;
    if (ov.eps_opt) o.gam.eps_opt = *ov.eps_opt;
    if (ov.nu_opt) o.gam.nu_opt = *ov.nu_opt;
    if (ov.max_iters) o.gam.max_outer_iters = *ov.max_iters;
    if (ov.lipschitz_delta) o.gam.lipschitz_delta = *ov.lipschitz_delta;
    if (ov.lower_tol) o.gam.sens.lower.tol_kkt = *ov.lower_tol;
    if (ov.tol_active) o.gam.sens.lower.tol_active = *ov.tol_active;
    if (o.jobs < 1) throw ConfigError("jobs must be at least 1");
    if (o.sweep < 1) throw ConfigError("sweep must be at least 1");
    o.gam.seed = o.seed;
    o.gam.validate();
    return o;
}

// ---------------------------------------------------------------------------
// Problem registry
// ---------------------------------------------------------------------------

struct Instance {
    BilevelProblem problem;
    Vector x0;
    /// Analytic Example 1 comparison applies.
    bool example1 = false;
    /// Exhaustive QP reference available.
    std::optional<QpLower> qp;
};

inline BilevelProblem make_corrupted_example1()
{
    BilevelProblem p = make_example1();
    p.name = "corrupted-example1";
    // wrong by a term in x: the y-gradient no longer matches g
    p.grad_y_g = [](const Vector& x, const Vector& y) {
        return Vector::Constant(1, 2.0 * (y(0) - x(0) * x(0)) + 0.5 * x(0));
    };
    return p;
}

inline Instance make_instance(const Options& o)
{
    Instance inst;
    const std::string& name = o.problem;
    if (name == "example1" || name == "corrupted-example1") {
        inst.problem = name == "example1" ? make_example1() : make_corrupted_example1();
        inst.x0 = Vector::Constant(1, 2.0);
        inst.example1 = true;
    } else if (name == "qp") {
        BilevelQp qp = make_bilevel_qp(o.seed, 3, 5, 3, 1);
        inst.problem = qp.problem;
        inst.qp = qp.lower;
        inst.x0 = Vector::Zero(3);
    } else if (name == "svm-toy") {
        inst.problem = make_svm_toy(o.seed).problem;
        inst.x0 = Vector::Zero(inst.problem.d_x);
    } else if (name == "hyperclean") {
        inst.problem = make_hyperclean(o.seed).svm.problem;
        inst.x0 = Vector::Zero(inst.problem.d_x);
    } else if (name == "svm-kernel") {
        SvmHyperopt s = make_svm_hyperopt(make_classification_data(o.seed, 10, 2, 1.0),
                                          make_classification_data(o.seed + 1000, 10, 2, 1.0), Kernel::polynomial());
        inst.problem = s.problem;
        inst.x0 = Vector::Zero(inst.problem.d_x);
    } else if (name == "svm-csv") {
        if (o.data.empty()) throw ConfigError("svm-csv needs --data <file.csv>");
        const LabeledData all = load_labeled_csv(o.data);
        if (all.size() < 4) throw ConfigError(o.data + ": need at least 4 rows");
        // even rows train, odd rows validate
        LabeledData train, val;
        const int nt = (all.size() + 1) / 2, nv = all.size() / 2;
        train.features = Matrix(nt, all.dim());
        train.labels = Vector(nt);
        val.features = Matrix(nv, all.dim());
        val.labels = Vector(nv);
        for (int i = 0; i < all.size(); ++i) {
            LabeledData& dst = i % 2 == 0 ? train : val;
            dst.features.row(i / 2) = all.features.row(i);
            dst.labels(i / 2) = all.labels(i);
        }
        inst.problem = make_svm_hyperopt(train, val).problem;
        inst.x0 = Vector::Zero(inst.problem.d_x);
    } else if (name == "ball") {
        inst.problem = make_ball_constrained();
        inst.x0 = Vector::Zero(2);
    } else if (std::filesystem::path(name).extension() == ".json") {
        inst.problem = load_problem_json(name);
        inst.x0 = Vector::Zero(inst.problem.d_x);
    } else {
        throw ConfigError("unknown problem `" + name +
                          "` (example1, qp, svm-toy, hyperclean, svm-kernel, svm-csv, ball, corrupted-example1, "
                          "or a .json file)");
    }
    if (!o.x0.empty()) {
        if (static_cast<int>(o.x0.size()) == inst.problem.d_x)
            inst.x0 = Eigen::Map<const Vector>(o.x0.data(), static_cast<Eigen::Index>(o.x0.size()));
        else if (o.x0.size() == 1)
            inst.x0 = Vector::Constant(inst.problem.d_x, o.x0.front());
        else
            throw ConfigError("x0 has " + std::to_string(o.x0.size()) + " entries, problem needs " +
                              std::to_string(inst.problem.d_x));
    }
    return inst;
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

inline std::string sweep_path(const std::string& out, std::uint64_t seed)
{
    std::filesystem::path p(out);
    return (p.parent_path() / (p.stem().string() + "_seed" + std::to_string(seed) + p.extension().string())).string();
}

inline void write_outputs(const std::string& out, const GamResult& res, const std::vector<TraceRecord>& trace)
{
    std::filesystem::path p(out);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    const std::string json_path = p.extension() == ".json" ? out : (p.parent_path() / (p.stem().string() + ".json")).string();
    if (p.extension() != ".json") {
        std::ofstream csv(out);
        if (!csv) throw ConfigError("cannot write " + out);
        write_trace_csv(csv, trace);
    }
    std::ofstream js(json_path);
    if (!js) throw ConfigError("cannot write " + json_path);
    js << trace_to_json(res, trace).dump(1) << '\n';
}

inline std::string summary_line(const std::string& label, const GamResult& r)
{
    std::ostringstream os;
    os << std::setprecision(10) << label << "phi=" << r.phi << " g_norm=" << r.g_norm << " eps=" << r.eps
       << " iterations=" << r.iterations << " status=" << r.status;
    return os.str();
}

inline int cmd_run(const Options& o, std::ostream& out, std::ostream& err)
{
    struct Outcome {
        std::string line;
        std::string error;
        bool config_error = false;
    };
    auto one = [&o](std::uint64_t seed, bool tagged) {
        Outcome res;
        try {
            Options local = o;
            local.seed = seed;
            local.gam.seed = seed;
            const Instance inst = make_instance(local);
            auto [result, trace] = run(inst.problem, inst.x0, local.gam);
            if (!local.out.empty()) write_outputs(tagged ? sweep_path(local.out, seed) : local.out, result, trace);
            res.line = summary_line(tagged ? "seed=" + std::to_string(seed) + " " : "", result);
        } catch (const ConfigError& e) {
            res.error = e.what();
            res.config_error = true;
        } catch (const LineSearchFailed& e) {
            std::ostringstream os;
            os << e.what() << " (last t=" << e.last_t << ", Armijo gap=" << e.armijo_gap << ")";
            res.error = os.str();
        } catch (const GamError& e) {
            res.error = e.what();
        }
        return res;
    };

    std::vector<Outcome> outcomes(static_cast<std::size_t>(o.sweep));
    if (o.sweep == 1) {
        outcomes[0] = one(o.seed, false);
    } else {
        std::mutex mtx;
        std::size_t next = 0;
        auto worker = [&]() {
            for (;;) {
                std::size_t i;
                {
                    std::lock_guard<std::mutex> lock(mtx);
                    if (next >= outcomes.size()) return;
                    i = next++;
                }
                outcomes[i] = one(o.seed + i, true);
            }
        };
        std::vector<std::thread> pool;
        for (int t = 0; t < std::min(o.jobs, o.sweep); ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    int code = 0;
    for (const auto& r : outcomes) {
        if (r.error.empty()) {
            out << r.line << '\n';
        } else {
            err << "error: " << r.error << '\n';
            code = std::max(code, r.config_error ? 2 : 1);
        }
    }
    return code;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

inline std::vector<CheckResult> verify_checks(const Instance& inst, std::uint64_t seed)
{
    std::vector<CheckResult> checks;
    const BilevelProblem& prob = inst.problem;

    // derivative callbacks and structural assumptions
    const ValidationReport rep = validate_problem(prob, random_samples(prob, 5, static_cast<unsigned>(seed) + 1, 1.0));
    for (const auto& c : rep.checks) checks.push_back(c);

    // Phi gradient against central differences at smooth points
    {
        CheckResult c{"phi_gradient_fd", true, 0.0, {}};
        std::mt19937_64 rng(seed + 7);
        std::normal_distribution<double> nd(0.0, 0.5);
        int tested = 0;
        for (int attempt = 0; attempt < 12 && tested < 3; ++attempt) {
            Vector x = inst.x0;
            if (attempt > 0)
                for (auto& v : x) v += nd(rng);
            try {
                const auto g = phi_gradient_if_smooth(prob, x);
                if (!g) continue;
                const Vector fd = fd_phi_gradient(prob, x);
                const double err = (*g - fd).norm() / (1.0 + fd.norm());
                c.worst = std::max(c.worst, err);
                if (err > 1e-4) {
                    c.passed = false;
                    if (c.detail.empty()) c.detail = "mismatch at attempt " + std::to_string(attempt);
                }
                ++tested;
            } catch (const GamError& e) {
                c.passed = false;
                if (c.detail.empty()) c.detail = e.what();
                break;
            }
        }
        if (tested == 0 && c.passed) {
            c.passed = false;
            c.detail = "no smooth test point found";
        }
        checks.push_back(c);
    }

    // min-norm element against the simplex grid
    {
        CheckResult c{"min_norm_oracle", true, 0.0, {}};
        std::mt19937_64 rng(seed + 11);
        std::normal_distribution<double> nd(0.0, 0.3);
        for (int s = 0; s < 10; ++s) {
            std::vector<Vector> pts;
            for (int i = 0; i < 4; ++i) {
                Vector v(3);
                for (auto& e : v) e = nd(rng);
                pts.push_back(v);
            }
            const double step = 4e-3;
            const double err = std::abs(min_norm_element(pts).value - brute_min_norm(pts, step).norm());
            c.worst = std::max(c.worst, err);
            if (err > 2 * step) c.passed = false;
        }
        checks.push_back(c);
    }

    if (inst.example1) {
        CheckResult c{"example1_analytic", true, 0.0, {}};
        for (double x : {-2.0, -1.5, -1.0, -0.5, -0.1, 0.0, 0.3, 1.0, 2.0}) {
            try {
                const LowerSolution s = solve_lower(prob, Vector::Constant(1, x));
                const double err = std::max(std::abs(s.y_star(0) - example1::y_star_exact(x)),
                                            std::abs(s.lambda(0) - example1::lambda_exact(x)));
                c.worst = std::max(c.worst, err);
                if (err > 1e-7) c.passed = false;
            } catch (const GamError& e) {
                c.passed = false;
                c.detail = e.what();
            }
        }
        checks.push_back(c);
    }

    if (inst.qp) {
        CheckResult c{"qp_reference", true, 0.0, {}};
        std::mt19937_64 rng(seed + 13);
        std::normal_distribution<double> nd(0.0, 1.0);
        for (int s = 0; s < 5; ++s) {
            Vector x(prob.d_x);
            for (auto& v : x) v = nd(rng);
            const LowerSolution sol = solve_lower(prob, x);
            const double err = (sol.y_star - inst.qp->exact(x).y).cwiseAbs().maxCoeff();
            c.worst = std::max(c.worst, err);
            if (err > 1e-7) c.passed = false;
        }
        checks.push_back(c);
    }
    return checks;
}

inline int cmd_verify(const Options& o, std::ostream& out, std::ostream& err)
{
    std::vector<CheckResult> checks;
    try {
        checks = verify_checks(make_instance(o), o.seed);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const GamError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    bool all = true;
    out << std::left << std::setw(22) << "check" << std::setw(7) << "result" << "worst\n";
    for (const auto& c : checks) {
        all = all && c.passed;
        out << std::left << std::setw(22) << c.name << std::setw(7) << (c.passed ? "pass" : "FAIL")
            << std::setprecision(3) << c.worst;
        if (!c.passed && !c.detail.empty()) out << "  " << c.detail;
        out << '\n';
    }
    out << (all ? "all checks passed" : "some checks failed") << '\n';
    return all ? 0 : 1;
}

// ---------------------------------------------------------------------------
// Argument parsing
// ---------------------------------------------------------------------------

inline void add_common_flags(CLI::App& cmd, Overrides& ov, std::optional<std::string>& config)
{
    cmd.add_option("--problem", ov.problem, "built-in problem name or a .json problem file");
    cmd.add_option("--config", config, "TOML or JSON config file");
    cmd.add_option("--data", ov.data, "CSV dataset for svm-csv");
    cmd.add_option("--x0", ov.x0, "starting point (one value is broadcast)")->expected(1, -1);
    cmd.add_option("--seed", ov.seed, "problem and probe seed");
    cmd.add_option("--eps0", ov.eps0);
    cmd.add_option("--nu0", ov.nu0);
    cmd.add_option("--beta", ov.beta);
    cmd.add_option("--gamma", ov.gamma);
    cmd.add_option("--theta-eps", ov.theta_eps);
    cmd.add_option("--theta-nu", ov.theta_nu);
    cmd.add_option("--eps-opt", ov.eps_opt);
    cmd.add_option("--nu-opt", ov.nu_opt);
    cmd.add_option("--max-iters", ov.max_iters);
    cmd.add_option("--lipschitz-delta", ov.lipschitz_delta);
    cmd.add_option("--lower-tol", ov.lower_tol);
    cmd.add_option("--tol-active", ov.tol_active);
}

inline int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Gradient approximation method for constrained bilevel problems"};
    app.require_subcommand(1);
    Overrides run_ov, verify_ov;
    std::optional<std::string> run_config, verify_config;

    auto* run_cmd = app.add_subcommand("run", "run the solver and write a trace");
    add_common_flags(*run_cmd, run_ov, run_config);
    run_cmd->add_option("--out", run_ov.out, "trace file (.csv also writes a .json next to it)");
    run_cmd->add_option("--jobs", run_ov.jobs, "parallel runs for a seed sweep");
    run_cmd->add_option("--sweep", run_ov.sweep, "number of consecutive seeds to run");

    auto* verify_cmd = app.add_subcommand("verify", "check derivatives and oracles for a problem");
    add_common_flags(*verify_cmd, verify_ov, verify_config);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }

    const bool is_run = run_cmd->parsed();
    try {
        const Options o = is_run ? resolve_options(run_ov, run_config) : resolve_options(verify_ov, verify_config);
        return is_run ? cmd_run(o, out, err) : cmd_verify(o, out, err);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const GamError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace gam::cli

#endif  // GAM_TOOLS_CLI_APP_HPP
