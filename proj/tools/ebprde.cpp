#include "ebprde/harness.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace {

struct Overrides {
    std::string config;
    std::map<std::string, std::string> values;
};

void add_run_options(CLI::App* sub, Overrides& ov)
{
    sub->add_option("--config", ov.config, "INI configuration file");
    const std::vector<std::pair<std::string, std::string>> flags = {
        {"--case", "case"},         {"--n-grid", "n_grid"},   {"--h-policy", "h_policy"},
        {"--reps", "reps"},         {"--seed", "seed"},       {"--mode", "mode"},
        {"--out", "out"},           {"--nodes", "nodes"},     {"--format", "format"},
        {"--threads", "threads"},   {"--methods", "methods"}, {"--summary-out", "summary_out"},
        {"--class", "class"},       {"--class-grid", "class_grid"}, {"--scarce", "scarce"},
        {"--rb-nodes", "rb_nodes"}, {"--sigma", "sigma"},
    };
    for (const auto& [flag, key] : flags) {
        const std::string k = key;
        sub->add_option_function<std::string>(flag, [&ov, k](const std::string& v) { ov.values[k] = v; },
                                              "overrides config key " + k);
    }
    sub->add_flag_function("--runtime-ms", [&ov](std::int64_t) { ov.values["runtime_ms"] = "true"; },
                           "append wall-clock rows per cell");
    sub->add_flag_function("--legacy-sigma-noise", [&ov](std::int64_t) { ov.values["legacy_sigma_noise"] = "true"; },
                           "scale the surrogate noise by the fitted sigma");
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Empirical Bayes predictive densities for linear mixed models"};
    app.require_subcommand(1);
    Overrides ov;
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"diagnose", "reuse-set diagnostics D_n and IF_n"},
        {"risk-check", "estimated against true risk for fixed priors"},
        {"table1", "excess KL risk of predictive density methods"},
        {"simulate", "emit one simulated design and dataset as JSON"},
        {"plan", "emit reuse-set summaries as JSON"},
        {"select", "emit the selected prior for one dataset as JSON"},
    };
    std::map<std::string, CLI::App*> subs;
    for (const auto& [name, help] : commands) {
        subs[name] = app.add_subcommand(name, help);
        add_run_options(subs[name], ov);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        ebprde::RunConfig cfg;
        if (!ov.config.empty()) ebprde::load_config_file(cfg, ov.config);
        for (const auto& [name, sub] : subs)
            if (sub->parsed()) cfg.command = name;
        for (const auto& [key, value] : ov.values) ebprde::apply_setting(cfg, key, value);
        return ebprde::run_command(cfg);
    } catch (const ebprde::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
