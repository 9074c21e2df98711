#pragma once

#include "ebprde/eb_select.hpp"
#include "ebprde/fission.hpp"
#include "ebprde/lmm.hpp"
#include "ebprde/methods.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ebprde {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string command;
    std::vector<CaseId> cases = {CaseId::A};
    std::vector<std::size_t> n_grid = {100};
    std::vector<HPolicy> h_policies = {HPolicy{}};
    std::size_t reps = 20;
    std::optional<std::uint64_t> seed;
    ParamMode mode = ParamMode::Known;
    std::string out;          // empty: standard output
    std::string summary_out;  // JSON summary path (csv format only)
    std::string format = "csv";
    std::size_t nodes = 61;
    std::size_t rb_nodes = 21;
    std::size_t max_iter = 500;
    double tol = 1e-9;
    ClassSpec cls = ClassSpec::gauss_mix({0.25, 1.0});
    GaussMixPrior g0{{0.7, 0.3}, {0.25, 1.0}};
    GaussMixPrior probe{{0.5, 0.5}, {0.25, 1.0}};
    std::vector<double> em_grid = {0.25, 1.0};
    ScarcePolicy scarce = ScarcePolicy::Auto;
    bool covariates_are_squared = true;
    bool legacy_sigma_noise = false;
    double sigma = 1.0;
    std::vector<MethodKind> methods = {MethodKind::Proposed, MethodKind::ProposedModified, MethodKind::GModel,
                                       MethodKind::GModelBayes, MethodKind::Naive};
    std::size_t threads = 0;  // 0: hardware concurrency
    bool runtime_ms = false;  // wall-clock rows break byte-identical output
};

// keys accepted in config files and by apply_setting
const std::vector<std::string>& config_keys();
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);
// `key = value` lines grouped under [section] headers; '#' and ';' start comments
void load_config_file(RunConfig& cfg, const std::string& path);
void finalize_config(const RunConfig& cfg);

struct ResultRow {
    std::string case_id;
    std::size_t n = 0;
    std::string h_policy;
    std::string method;
    long rep = -1;  // -1: summary over replications
    std::string metric;
    double value = 0.0;
    double mc_se = 0.0;
    std::string status = "ok";
};

const std::vector<std::string>& metric_vocabulary();

struct CommandOutput {
    std::vector<ResultRow> rows;
    nlohmann::json summary;
    bool any_failed = false;
};

CommandOutput cmd_diagnose(const RunConfig& cfg);
CommandOutput cmd_risk_check(const RunConfig& cfg);
CommandOutput cmd_table1(const RunConfig& cfg);

void sort_rows(std::vector<ResultRow>& rows);
std::string rows_to_csv(const std::vector<ResultRow>& rows);
nlohmann::json rows_to_json(const std::vector<ResultRow>& rows);

// runs cfg.command and writes its output; returns the process exit code
int run_command(const RunConfig& cfg);

}  // namespace ebprde
