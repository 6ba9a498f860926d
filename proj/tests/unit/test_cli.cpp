#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "cli_app.hpp"

namespace fs = std::filesystem;
using namespace gam;

namespace {

struct CliRun {
    int code;
    std::string out, err;
};

CliRun invoke(std::vector<std::string> args)
{
    args.insert(args.begin(), "gam_cli");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("gam_cli_test_" + std::to_string(::getpid())) / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// drop the wall_ms column so traces from two runs can be compared
std::string strip_timing(const std::string& csv)
{
    std::istringstream in(csv);
    std::string line, out;
    while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
    return out;
}

}  // namespace

TEST(Cli, TomlSubset)
{
    std::istringstream in(R"(# comment
problem = "qp"   # trailing
[solver]
eps0 = 0.25
x0 = [1, -2.5]
verbose = true
)");
    const cli::ConfigMap m = cli::parse_toml_subset(in, "t");
    EXPECT_EQ(std::get<std::string>(m.at("problem")), "qp");
    EXPECT_DOUBLE_EQ(std::get<double>(m.at("eps0")), 0.25);
    EXPECT_EQ(std::get<std::vector<double>>(m.at("x0")), (std::vector<double>{1.0, -2.5}));
    EXPECT_TRUE(std::get<bool>(m.at("verbose")));

    std::istringstream bad("eps0 0.3\n");
    EXPECT_THROW(cli::parse_toml_subset(bad, "t"), ConfigError);
    std::istringstream nan("eps0 = fast\n");
    EXPECT_THROW(cli::parse_toml_subset(nan, "t"), ConfigError);
}

TEST(Cli, ConfigFileAndOverrides)
{
    const fs::path dir = scratch("config");
    std::ofstream(dir / "run.toml") << "problem = \"qp\"\nbeta = 0.25\nmax_iters = 7\n";
    cli::Overrides ov;
    ov.beta = 0.4;
    const cli::Options o = cli::resolve_options(ov, (dir / "run.toml").string());
    EXPECT_EQ(o.problem, "qp");
    EXPECT_DOUBLE_EQ(o.gam.beta, 0.4);
    EXPECT_EQ(o.gam.max_outer_iters, 7);

    std::ofstream(dir / "bad.toml") << "betta = 0.25\n";
    EXPECT_THROW(cli::resolve_options({}, (dir / "bad.toml").string()), ConfigError);
}

TEST(Cli, RunWritesTrace)
{
    const fs::path dir = scratch("run");
    const CliRun r = invoke({"run", "--problem", "example1", "--x0", "2", "--out", (dir / "trace.csv").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("status="), std::string::npos);
    const std::string csv = slurp(dir / "trace.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "k,phi,g_norm,eps,nu,t,branch,wall_ms");
    const auto j = nlohmann::json::parse(slurp(dir / "trace.json"));
    EXPECT_TRUE(j.at("result").at("converged").get<bool>());
}

TEST(Cli, ExitCodes)
{
    EXPECT_EQ(invoke({"run", "--config", "/nonexistent/run.toml"}).code, 2);
    EXPECT_EQ(invoke({"run", "--problem", "no-such-problem"}).code, 2);
    EXPECT_EQ(invoke({"run", "--beta", "1.5"}).code, 2);
    EXPECT_EQ(invoke({"run", "--problem", "svm-csv"}).code, 2);  // needs --data
    EXPECT_EQ(invoke({"run", "--problem", "example1", "--x0", "1,2"}).code, 2);
    EXPECT_NE(invoke({"frobnicate"}).code, 0);
}

TEST(Cli, SameSeedSameTrace)
{
    const fs::path dir = scratch("determinism");
    for (const char* name : {"a.csv", "b.csv"})
        ASSERT_EQ(invoke({"run", "--problem", "svm-toy", "--seed", "7", "--max-iters", "30", "--out",
                       (dir / name).string()})
                      .code,
                  0);
    EXPECT_EQ(strip_timing(slurp(dir / "a.csv")), strip_timing(slurp(dir / "b.csv")));
}

TEST(Cli, ParallelSweep)
{
    const fs::path dir = scratch("sweep");
    const CliRun r = invoke({"run", "--problem", "qp", "--sweep", "3", "--jobs", "2", "--seed", "10", "--max-iters", "20",
                          "--out", (dir / "t.csv").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    for (int s : {10, 11, 12}) EXPECT_TRUE(fs::exists(dir / ("t_seed" + std::to_string(s) + ".csv")));
    EXPECT_NE(r.out.find("seed=11"), std::string::npos);
}

TEST(Cli, Verify)
{
    EXPECT_EQ(invoke({"verify", "--problem", "example1"}).code, 0);
    const CliRun bad = invoke({"verify", "--problem", "corrupted-example1"});
    EXPECT_EQ(bad.code, 1);
    EXPECT_NE(bad.out.find("FAIL"), std::string::npos);
}
