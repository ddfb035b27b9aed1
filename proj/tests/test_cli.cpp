#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::path(MTEBOUNDS_TEST_TMP) / "cli";

int run(const std::string& args)
{
    std::string cmd = std::string(MTEBOUNDS_CLI) + " " + args + " > /dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fresh(const std::string& name)
{
    fs::path d = kRoot / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

int lines(const fs::path& file)
{
    std::ifstream in(file);
    std::string line;
    int n = 0;
    while (std::getline(in, line)) ++n;
    return n;
}

std::string first_line(const fs::path& file)
{
    std::ifstream in(file);
    std::string line;
    std::getline(in, line);
    return line;
}

std::string slurp(const fs::path& file)
{
    std::ifstream in(file);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("oracle curve on the default grid with a manifest")
{
    fs::path d = fresh("oracle");
    REQUIRE(run("bounds-oracle --out " + d.string()) == 0);
    CHECK(lines(d / "oracle.csv") == 100);
    auto manifest = nlohmann::json::parse(std::ifstream(d / "manifest.json"));
    CHECK(manifest["subcommand"] == "bounds-oracle");
    CHECK(manifest.contains("outputs"));
}

TEST_CASE("simulation is reproducible and honours the sample size")
{
    fs::path a = fresh("sim-a"), b = fresh("sim-b");
    REQUIRE(run("simulate --n 500 --seed 3 --out " + a.string()) == 0);
    REQUIRE(run("simulate --n 500 --seed 3 --out " + b.string()) == 0);
    CHECK(lines(a / "sample.csv") == 501);
    CHECK(slurp(a / "sample.csv") == slurp(b / "sample.csv"));
    CHECK(first_line(a / "sample.csv").rfind("y,s,d,z", 0) == 0);
}

TEST_CASE("estimation writes one row per evaluation point")
{
    fs::path d = fresh("np");
    REQUIRE(run("estimate-np --n 5000 --p-grid 0.2:0.8:7 --out " + d.string()) == 0);
    CHECK(lines(d / "bounds.csv") == 8);
    CHECK(fs::exists(d / "propensity.csv"));
}

TEST_CASE("configuration files fill in options the command line leaves unset")
{
    fs::path d = fresh("config");
    {
        std::ofstream cfg(d / "run.cfg");
        cfg << "# sample size\nn = 200\nseed = 9\n";
    }
    REQUIRE(run("simulate --config " + (d / "run.cfg").string() + " --out " + d.string()) == 0);
    CHECK(lines(d / "sample.csv") == 201);
    REQUIRE(run("simulate --config " + (d / "run.cfg").string() + " --n 300 --out " + d.string()) == 0);
    CHECK(lines(d / "sample.csv") == 301);
    {
        std::ofstream cfg(d / "bad.cfg");
        cfg << "no-such-option = 1\n";
    }
    CHECK(run("simulate --config " + (d / "bad.cfg").string() + " --out " + d.string()) == 2);
}

TEST_CASE("invalid input maps to exit code 2")
{
    fs::path d = fresh("bad");
    CHECK(run("estimate-np --no-such-flag --out " + d.string()) == 2);
    CHECK(run("estimate-np --tier sideways --n 2000 --out " + d.string()) == 2);
    CHECK(run("bounds-oracle --panel Q --out " + d.string()) == 2);
    CHECK(run("bounds-oracle --p-grid 0:1:5 --out " + d.string()) == 2);
}

TEST_CASE("diagnostics can fail the run on a violation")
{
    fs::path d = fresh("diag");
    CHECK(run("diagnose --n 20000 --delta1 -1 --fail-on-violation --out " + d.string()) == 4);
    CHECK(fs::exists(d / "diagnostics.csv"));
    auto j = nlohmann::json::parse(std::ifstream(d / "diagnostics.json"));
    CHECK(j.is_object());
}

TEST_CASE("Monte Carlo outputs")
{
    fs::path d = fresh("mc");
    REQUIRE(run("montecarlo --n 2000 --reps 3 --p-grid 0.3,0.5 --out " + d.string()) == 0);
    CHECK(first_line(d / "mc_summary.csv") == "estimand,p,truth,bias,sd,scaled_mse,failures");
    CHECK(lines(d / "mc_summary.csv") == 1 + 6 * 2);
    for (const char* f : {"mc_bias.csv", "mc_mse.csv", "coverage.csv"}) CHECK(fs::exists(d / f));
    // Only written when a replication fails.
    CHECK_FALSE(fs::exists(d / "failures.txt"));
}

TEST_CASE("remaining subcommands run")
{
    fs::path d = fresh("misc");
    CHECK(run("estimate-param --n 4000 --out " + d.string()) == 0);
    CHECK(run("weights --n 4000 --kind ate,att --out " + d.string()) == 0);
    CHECK(fs::exists(d / "weights_att.csv"));
    CHECK(run("aggregate --n 4000 --kind ate --out " + d.string()) == 0);
    CHECK(run("discrete --cells 4 --out " + d.string()) == 0);
    CHECK(lines(d / "discrete.csv") == 4);
    CHECK(run("dmte --n 4000 --set 0-3 --out " + d.string()) == 0);
}
