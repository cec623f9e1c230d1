#include "tcglab/experiments.hpp"

#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

using namespace tcglab;
namespace fs = std::filesystem;

namespace
{
fs::path fresh_dir(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / ("tcglab_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream      in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}
} // namespace

TEST_CASE("unknown commands and keys are rejected before output")
{
    const auto    dir = fresh_dir("reject");
    ExperimentSpec spec;
    spec.name    = "cg-dynamics";
    spec.out_dir = dir;
    spec.params  = {{"bogus", "1"}};
    CHECK_THROWS_AS(run_experiment(spec), std::invalid_argument);
    CHECK(fs::is_empty(dir));
    spec.name   = "no-such-command";
    spec.params = {};
    CHECK_THROWS_AS(run_experiment(spec), std::invalid_argument);
    CHECK(experiment_names().size() == 5);
}

TEST_CASE("experiments are deterministic given the seed")
{
    for (const std::string name : {"cg-dynamics", "sigma-check", "remark-asymptotics", "tr-run", "capture"})
    {
        ExperimentSpec spec;
        spec.name = name;
        if (name == "tr-run")
            spec.params = {{"problem", "sine-lsq:n=5"}};
        if (name == "capture")
            spec.params = {{"problem", "sine-lsq:n=5"}, {"trials", "3"}};
        if (name == "sigma-check")
            spec.params = {{"random", "3"}};
        spec.out_dir  = fresh_dir(name + "_a");
        const auto a  = run_experiment(spec);
        spec.out_dir  = fresh_dir(name + "_b");
        const auto b  = run_experiment(spec);
        CHECK(a.exit_code == 0);
        CHECK(a.summary_json == b.summary_json);
        REQUIRE(a.files == b.files);
        for (const auto& f : a.files)
            CHECK(slurp(fs::temp_directory_path() / ("tcglab_test_" + name + "_a") / f) ==
                  slurp(fs::temp_directory_path() / ("tcglab_test_" + name + "_b") / f));
    }
}

TEST_CASE("cg dynamics with an empty tail coincide with the head run")
{
    const SplitSpectralMeasure split(clustered_split().head(), SpectralMeasure());
    const auto                 dyn = cg_dynamics(split, 8, 1e3, {});
    for (const auto& r : dyn.rows)
        if (r.has_head)
        {
            CHECK(r.tilde_v_norm == doctest::Approx(r.v_norm).epsilon(1e-12));
            CHECK(r.tilde_r_norm == doctest::Approx(r.r_norm).epsilon(1e-12).scale(1e-14));
        }
}

TEST_CASE("clustered dynamics")
{
    const auto dyn = cg_dynamics(clustered_split(), 11, 1e3, {});
    CHECK(dyn.early_stop_n >= 1);
    CHECK(dyn.max_tilde_v >= 100.0 * dyn.max_v);
    CHECK(dyn.tcg_trace.termination == TcgTermination::residual_small);
    CHECK(dyn.tcg_output_norm <= 2.0 * dyn.v_ref);
}

TEST_CASE("sigma check on an empty tail")
{
    const SplitSpectralMeasure split(SpectralMeasure({2.0, 1.0}, {1.0, 1.0}), SpectralMeasure());
    for (const auto& row : sigma_check(split, "empty"))
    {
        CHECK(row.ok);
        CHECK(row.identity_residual <= 1e-15);
        CHECK(row.sigma_l1 == 0.0);
    }
}

TEST_CASE("remark asymptotics approach their limits")
{
    const auto rows = remark_asymptotics({1e-3, 1e-4, 1e-5, 1e-6});
    REQUIRE(rows.size() == 4);
    for (std::size_t i = 1; i < rows.size(); ++i)
        CHECK(rows[i].deviation < rows[i - 1].deviation);
    CHECK(rows.back().deviation < 1e-3);
    CHECK(rows.back().well_defined);
}

TEST_CASE("uniform start")
{
    const Vector a = uniform_start(50, 3);
    CHECK(a == uniform_start(50, 3));
    CHECK(a != uniform_start(50, 4));
    CHECK(a.cwiseAbs().maxCoeff() <= 2.0);
}

TEST_CASE("command-line interface")
{
    const char* cli = std::getenv("TCGLAB_CLI");
    if (cli == nullptr)
        return;
    const auto dir = fresh_dir("cli");
    auto       run = [&](const std::string& args) {
        const std::string cmd = std::string(cli) + " " + args + " > " + (dir / "stdout.txt").string() + " 2>&1";
        const int         rc  = std::system(cmd.c_str());
        return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    };
    CHECK(run("remark-asymptotics --out " + dir.string()) == 0);
    const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(summary["command"] == "remark-asymptotics");
    CHECK(summary["rows"].size() == 4);
    CHECK(fs::exists(dir / "remark_asymptotics.csv"));
    CHECK(run("cg-dynamics -p nonsense=1 --out " + dir.string()) == 2);
    CHECK(run("cg-dynamics -p kappa=0.1 -p kappa=0.2 --out " + dir.string()) == 2);
    CHECK(run("frobnicate") != 0);
}
