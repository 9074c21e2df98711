#include <catch_amalgamated.hpp>

#include "ebprde/harness.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

using namespace ebprde;

namespace fs = std::filesystem;

namespace {

fs::path scratch_dir()
{
    const fs::path p = fs::temp_directory_path() / "ebprde_harness_test";
    fs::create_directories(p);
    return p;
}

std::string write_file(const std::string& name, const std::string& text)
{
    const fs::path p = scratch_dir() / name;
    std::ofstream(p) << text;
    return p.string();
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines_of(const std::string& text)
{
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

std::vector<std::string> fields_of(const std::string& line)
{
    std::vector<std::string> out;
    std::istringstream in(line);
    for (std::string f; std::getline(in, f, ',');) out.push_back(f);
    return out;
}

RunConfig small_config(const std::string& command)
{
    RunConfig cfg;
    cfg.command = command;
    cfg.seed = 17;
    cfg.n_grid = {60};
    cfg.reps = 3;
    cfg.threads = 1;
    return cfg;
}

int run_cli(const std::string& args)
{
    const char* cli = std::getenv("EBPRDE_CLI");
    REQUIRE(cli != nullptr);
    const int status = std::system((std::string(cli) + " " + args + " >/dev/null 2>&1").c_str());
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("config file with sections is applied")
{
    const std::string path = write_file("ok.ini", "# comment\n"
                                                  "[run]\ncommand = diagnose\nseed = 99\nthreads = 2\n"
                                                  "[experiment]\ncase = A,D\nn_grid = 50, 100\nh_policy = 1,log_n\nreps = 4\nmode = estimated\n"
                                                  "[quadrature]\nnodes = 41\n"
                                                  "[output]\nformat = json\n");
    RunConfig cfg;
    load_config_file(cfg, path);
    CHECK(cfg.command == "diagnose");
    CHECK(cfg.seed.value() == 99);
    CHECK(cfg.threads == 2);
    CHECK(cfg.cases == std::vector<CaseId>{CaseId::A, CaseId::D});
    CHECK(cfg.n_grid == std::vector<std::size_t>{50, 100});
    REQUIRE(cfg.h_policies.size() == 2);
    CHECK(cfg.h_policies[1].kind == HPolicy::Kind::LogN);
    CHECK(cfg.reps == 4);
    CHECK(cfg.mode == ParamMode::Estimated);
    CHECK(cfg.nodes == 41);
    CHECK(cfg.format == "json");
    CHECK_NOTHROW(finalize_config(cfg));
}

TEST_CASE("config errors are reported")
{
    RunConfig cfg;
    CHECK_THROWS_AS(load_config_file(cfg, write_file("unknown.ini", "[run]\nseeed = 3\n")), ConfigError);
    CHECK_THROWS_AS(load_config_file(cfg, write_file("section.ini", "[output]\nseed = 3\n")), ConfigError);
    CHECK_THROWS_AS(load_config_file(cfg, (scratch_dir() / "missing.ini").string()), ConfigError);
    CHECK_THROWS_AS(apply_setting(cfg, "reps", "0"), ConfigError);
    CHECK_THROWS_AS(apply_setting(cfg, "reps", "three"), ConfigError);
    CHECK_THROWS_AS(apply_setting(cfg, "case", "G"), ConfigError);
    CHECK_THROWS_AS(apply_setting(cfg, "mode", "guess"), ConfigError);
    CHECK_THROWS_AS(apply_setting(cfg, "format", "xml"), ConfigError);
    CHECK_THROWS_AS(apply_setting(cfg, "nodes", "-5"), ConfigError);

    RunConfig no_seed;
    no_seed.command = "diagnose";
    CHECK_THROWS_AS(finalize_config(no_seed), ConfigError);
}

TEST_CASE("every documented key is accepted")
{
    for (const auto& k : {"command", "seed", "case", "n_grid", "h_policy", "reps", "mode", "out", "nodes", "format"}) {
        bool found = false;
        for (const auto& key : config_keys()) found = found || key == k;
        CHECK(found);
    }
}

TEST_CASE("diagnose output is sorted, finite and uses the closed vocabulary")
{
    RunConfig cfg = small_config("diagnose");
    cfg.h_policies = {HPolicy::parse("1"), HPolicy::parse("n^0.5")};
    const CommandOutput out = cmd_diagnose(cfg);
    REQUIRE_FALSE(out.any_failed);
    const std::set<std::string> vocab(metric_vocabulary().begin(), metric_vocabulary().end());
    std::vector<ResultRow> sorted = out.rows;
    sort_rows(sorted);
    REQUIRE(sorted.size() == out.rows.size());
    std::map<std::string, double> mean_of;
    for (std::size_t i = 0; i < out.rows.size(); ++i) {
        const ResultRow& r = out.rows[i];
        CHECK(r.metric == sorted[i].metric);
        CHECK(r.rep == sorted[i].rep);
        CHECK(std::isfinite(r.value));
        CHECK(vocab.count(r.metric) == 1);
        if (r.rep == -1 && r.method == "fission") mean_of[r.h_policy + "/" + r.metric] = r.value;
    }
    CHECK(mean_of.at("n^0.5/D_n") <= mean_of.at("1/D_n"));
    CHECK(mean_of.at("n^0.5/IF_n") <= mean_of.at("1/IF_n"));

    const std::string csv = rows_to_csv(out.rows);
    const auto lines = lines_of(csv);
    REQUIRE(lines.size() == out.rows.size() + 1);
    CHECK(lines[0] == "case,n,h_policy,method,rep,metric,value,mc_se,status");
    for (std::size_t i = 1; i < lines.size(); ++i) CHECK(fields_of(lines[i]).size() == 9);
}

TEST_CASE("risk check: the flat prior estimate is exact")
{
    const CommandOutput out = cmd_risk_check(small_config("risk-check"));
    REQUIRE_FALSE(out.any_failed);
    int seen = 0;
    for (const auto& r : out.rows)
        if (r.method == "uniform" && r.metric == "abs_error") {
            CHECK(r.value == 0.0);
            ++seen;
        }
    CHECK(seen == 4);
}

TEST_CASE("table1 summary has one entry per method label")
{
    RunConfig cfg = small_config("table1");
    cfg.reps = 2;
    cfg.methods = {MethodKind::Proposed, MethodKind::Naive};
    const CommandOutput out = cmd_table1(cfg);
    REQUIRE_FALSE(out.any_failed);
    REQUIRE(out.summary.contains("A"));
    const auto& a = out.summary["A"];
    CHECK(a.contains("naive"));
    CHECK(a.contains("proposed h=1"));
    for (const auto& [label, entry] : a.items()) {
        CHECK(entry["reps"].get<int>() == 2);
        CHECK(entry.contains("mean"));
        CHECK(entry.contains("se"));
    }
}

TEST_CASE("output does not depend on the thread count")
{
    RunConfig one = small_config("diagnose");
    one.cases = {CaseId::A, CaseId::D};
    one.n_grid = {40, 80};
    RunConfig four = one;
    four.threads = 4;
    CHECK(rows_to_csv(cmd_diagnose(one).rows) == rows_to_csv(cmd_diagnose(four).rows));
}

TEST_CASE("command line runs are byte identical and exit codes follow the contract")
{
    const std::string a = (scratch_dir() / "run_a.csv").string(), b = (scratch_dir() / "run_b.csv").string();
    const std::string args = "table1 --case A,E --n-grid 80 --reps 2 --seed 5 --methods proposed,gmodel,naive --threads 2 --out ";
    REQUIRE(run_cli(args + a) == 0);
    REQUIRE(run_cli(args + b) == 0);
    const std::string ta = read_file(a);
    CHECK_FALSE(ta.empty());
    CHECK(ta == read_file(b));

    CHECK(run_cli("diagnose --case A --n-grid 50 --reps 2") == 2);
    CHECK(run_cli("diagnose --case Q --seed 1") == 2);
    CHECK(run_cli("diagnose --seed 1 --no-such-flag") == 2);
    CHECK(run_cli("diagnose --config " + (scratch_dir() / "absent.ini").string()) == 2);
}
