#include "ebprde/harness.hpp"

#include "ebprde/json_io.hpp"
#include "ebprde/oracle.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace ebprde {

namespace {

const std::map<std::string, std::string>& key_sections()
{
    static const std::map<std::string, std::string> m = {
        {"command", "run"},
        {"seed", "run"},
        {"threads", "run"},
        {"case", "experiment"},
        {"n_grid", "experiment"},
        {"h_policy", "experiment"},
        {"reps", "experiment"},
        {"mode", "experiment"},
        {"methods", "experiment"},
        {"sigma", "experiment"},
        {"scarce", "experiment"},
        {"covariates_are_squared", "design"},
        {"class", "prior"},
        {"class_grid", "prior"},
        {"g0_weights", "prior"},
        {"g0_variances", "prior"},
        {"probe_weights", "prior"},
        {"probe_variances", "prior"},
        {"em_grid", "prior"},
        {"nodes", "quadrature"},
        {"rb_nodes", "quadrature"},
        {"legacy_sigma_noise", "quadrature"},
        {"max_iter", "optimizer"},
        {"tol", "optimizer"},
        {"out", "output"},
        {"summary_out", "output"},
        {"format", "output"},
        {"runtime_ms", "output"},
    };
    return m;
}

std::string trim(const std::string& s)
{
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::size_t parse_count(const std::string& key, const std::string& v)
{
    std::size_t pos = 0;
    long long x = 0;
    try {
        x = std::stoll(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a positive integer, got '" + v + "'");
    }
    if (pos != v.size() || x <= 0) throw ConfigError(key + ": expected a positive integer, got '" + v + "'");
    return static_cast<std::size_t>(x);
}

double parse_real(const std::string& key, const std::string& v)
{
    std::size_t pos = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
    if (pos != v.size() || !std::isfinite(x)) throw ConfigError(key + ": expected a number, got '" + v + "'");
    return x;
}

std::vector<double> parse_reals(const std::string& key, const std::string& v)
{
    std::vector<double> out;
    for (const auto& item : split_list(v)) out.push_back(parse_real(key, item));
    if (out.empty()) throw ConfigError(key + ": empty list");
    return out;
}

bool parse_bool(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

}  // namespace

const std::vector<std::string>& config_keys()
{
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& [key, section] : key_sections()) k.push_back(key);
        return k;
    }();
    return keys;
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& raw)
{
    const std::string v = trim(raw);
    try {
        if (key == "command") {
            cfg.command = v;
        } else if (key == "seed") {
            std::size_t pos = 0;
            unsigned long long s = 0;
            try {
                s = std::stoull(v, &pos);
            } catch (const std::exception&) {
                pos = std::string::npos;
            }
            if (pos != v.size() || v.empty() || v[0] == '-') throw ConfigError("seed: expected a nonnegative integer, got '" + v + "'");
            cfg.seed = s;
        } else if (key == "threads") {
            cfg.threads = parse_count(key, v);
        } else if (key == "case") {
            cfg.cases.clear();
            for (const auto& c : split_list(v)) cfg.cases.push_back(parse_case(c));
            if (cfg.cases.empty()) throw ConfigError("case: empty list");
        } else if (key == "n_grid") {
            cfg.n_grid.clear();
            for (const auto& c : split_list(v)) cfg.n_grid.push_back(parse_count(key, c));
            if (cfg.n_grid.empty()) throw ConfigError("n_grid: empty list");
        } else if (key == "h_policy") {
            cfg.h_policies.clear();
            for (const auto& c : split_list(v)) cfg.h_policies.push_back(HPolicy::parse(c));
            if (cfg.h_policies.empty()) throw ConfigError("h_policy: empty list");
        } else if (key == "reps") {
            cfg.reps = parse_count(key, v);
        } else if (key == "mode") {
            if (v == "known")
                cfg.mode = ParamMode::Known;
            else if (v == "estimated")
                cfg.mode = ParamMode::Estimated;
            else
                throw ConfigError("mode: expected known or estimated, got '" + v + "'");
        } else if (key == "methods") {
            cfg.methods.clear();
            for (const auto& c : split_list(v)) cfg.methods.push_back(parse_method(c));
            if (cfg.methods.empty()) throw ConfigError("methods: empty list");
        } else if (key == "sigma") {
            cfg.sigma = parse_real(key, v);
            if (!(cfg.sigma > 0.0)) throw ConfigError("sigma: must be positive");
        } else if (key == "scarce") {
            if (v == "auto")
                cfg.scarce = ScarcePolicy::Auto;
            else if (v == "normal")
                cfg.scarce = ScarcePolicy::Normal;
            else if (v == "scarce")
                cfg.scarce = ScarcePolicy::Scarce;
            else
                throw ConfigError("scarce: expected auto, normal or scarce, got '" + v + "'");
        } else if (key == "covariates_are_squared") {
            cfg.covariates_are_squared = parse_bool(key, v);
        } else if (key == "class") {
            const auto grid = cfg.cls.grid;
            if (v == "gauss_mix")
                cfg.cls = ClassSpec::gauss_mix(grid);
            else if (v == "discrete")
                cfg.cls = ClassSpec::discrete(grid);
            else if (v == "gaussian_scalar")
                cfg.cls = ClassSpec::gaussian_scalar(grid);
            else if (v == "spike_slab")
                cfg.cls = ClassSpec::spike_slab_default();
            else if (v == "uniform")
                cfg.cls = ClassSpec::uniform();
            else
                throw ConfigError("class: unknown prior class '" + v + "'");
        } else if (key == "class_grid") {
            cfg.cls.grid = parse_reals(key, v);
        } else if (key == "g0_weights") {
            cfg.g0.weights = parse_reals(key, v);
        } else if (key == "g0_variances") {
            cfg.g0.variances = parse_reals(key, v);
        } else if (key == "probe_weights") {
            cfg.probe.weights = parse_reals(key, v);
        } else if (key == "probe_variances") {
            cfg.probe.variances = parse_reals(key, v);
        } else if (key == "em_grid") {
            cfg.em_grid = parse_reals(key, v);
        } else if (key == "nodes") {
            cfg.nodes = parse_count(key, v);
        } else if (key == "rb_nodes") {
            cfg.rb_nodes = parse_count(key, v);
        } else if (key == "legacy_sigma_noise") {
            cfg.legacy_sigma_noise = parse_bool(key, v);
        } else if (key == "max_iter") {
            cfg.max_iter = parse_count(key, v);
        } else if (key == "tol") {
            cfg.tol = parse_real(key, v);
            if (!(cfg.tol > 0.0)) throw ConfigError("tol: must be positive");
        } else if (key == "out") {
            cfg.out = v;
        } else if (key == "summary_out") {
            cfg.summary_out = v;
        } else if (key == "format") {
            if (v != "csv" && v != "json") throw ConfigError("format: expected csv or json, got '" + v + "'");
            cfg.format = v;
        } else if (key == "runtime_ms") {
            cfg.runtime_ms = parse_bool(key, v);
        } else {
            throw ConfigError("unknown configuration key '" + key + "'");
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(key + ": " + e.what());
    }
}

void load_config_file(RunConfig& cfg, const std::string& path)
{
    boost::property_tree::ptree pt;
    try {
        boost::property_tree::ini_parser::read_ini(path, pt);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError("cannot read config: " + std::string(e.what()));
    }
    const auto& sections = key_sections();
    for (const auto& [name, node] : pt) {
        if (node.empty()) {
            if (!sections.count(name)) throw ConfigError("unknown configuration key '" + name + "'");
            apply_setting(cfg, name, node.data());
            continue;
        }
        for (const auto& [key, leaf] : node) {
            const auto it = sections.find(key);
            if (it == sections.end()) throw ConfigError("unknown configuration key '" + key + "' in [" + name + "]");
            if (it->second != name) throw ConfigError("key '" + key + "' belongs in [" + it->second + "], not [" + name + "]");
            apply_setting(cfg, key, leaf.data());
        }
    }
}

void finalize_config(const RunConfig& cfg)
{
    if (!cfg.seed) throw ConfigError("a master seed is required");
    if (cfg.command.empty()) throw ConfigError("no command given");
    if (cfg.reps == 0 || cfg.nodes < 3 || cfg.rb_nodes == 0) throw ConfigError("counts must be positive");
    if (cfg.g0.weights.size() != cfg.g0.variances.size()) throw ConfigError("g0 weights and variances differ in length");
    if (cfg.probe.weights.size() != cfg.probe.variances.size()) throw ConfigError("probe weights and variances differ in length");
    try {
        validate_prior(cfg.g0);
        validate_prior(cfg.probe);
        cfg.cls.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (cfg.cases.empty() || cfg.n_grid.empty() || cfg.h_policies.empty()) throw ConfigError("empty case, n or h list");
}

const std::vector<std::string>& metric_vocabulary()
{
    static const std::vector<std::string> v = {"risk_hat", "true_risk", "abs_error", "excess", "risk",
                                               "D_n",      "IF_n",      "dependency_sum", "reference",
                                               "beta_err", "sigma_err", "runtime_ms"};
    return v;
}

void sort_rows(std::vector<ResultRow>& rows)
{
    std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
        return std::tie(a.case_id, a.n, a.h_policy, a.method, a.rep, a.metric) <
               std::tie(b.case_id, b.n, b.h_policy, b.method, b.rep, b.metric);
    });
}

namespace {

std::string fmt(double x)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

ResultRow make_row(CaseId c, std::size_t n, const std::string& h, const std::string& method, long rep,
                   const std::string& metric, double value, double se = 0.0)
{
    ResultRow r{case_name(c), n, h, method, rep, metric, value, se, "ok"};
    if (!std::isfinite(value)) {
        r.value = 0.0;
        r.status = "failed";
    }
    return r;
}

ResultRow failed_row(CaseId c, std::size_t n, const std::string& h, const std::string& method, long rep,
                     const std::string& metric)
{
    return ResultRow{case_name(c), n, h, method, rep, metric, 0.0, 0.0, "failed"};
}

// per-rep rows -> mean and standard error per (case, n, h, method, metric)
std::vector<ResultRow> summarize(const std::vector<ResultRow>& rows)
{
    std::map<std::tuple<std::string, std::size_t, std::string, std::string, std::string>, std::vector<double>> groups;
    for (const auto& r : rows) {
        if (r.rep < 0) continue;
        auto& g = groups[{r.case_id, r.n, r.h_policy, r.method, r.metric}];
        if (r.status == "ok") g.push_back(r.value);
    }
    std::vector<ResultRow> out;
    for (const auto& [key, vals] : groups) {
        const auto& [c, n, h, m, metric] = key;
        if (metric == "runtime_ms") continue;
        if (vals.empty()) {
            out.push_back(ResultRow{c, n, h, m, -1, metric, 0.0, 0.0, "failed"});
            continue;
        }
        const MeanSe ms = mean_se(vals);
        out.push_back(ResultRow{c, n, h, m, -1, metric, ms.mean, ms.se, "ok"});
    }
    return out;
}

struct Cell {
    CaseId id;
    std::size_t n;
    std::size_t rep;
};

std::vector<Cell> cells_of(const RunConfig& cfg)
{
    std::vector<Cell> cells;
    for (CaseId c : cfg.cases)
        for (std::size_t n : cfg.n_grid)
            for (std::size_t r = 0; r < cfg.reps; ++r) cells.push_back({c, n, r});
    return cells;
}

template <typename Fn>
std::vector<ResultRow> run_cells(const RunConfig& cfg, const std::vector<Cell>& cells, Fn fn)
{
    std::vector<std::vector<ResultRow>> results(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t t = next++; t < cells.size(); t = next++) {
            const auto start = std::chrono::steady_clock::now();
            results[t] = fn(cells[t]);
            if (cfg.runtime_ms) {
                const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
                results[t].push_back(make_row(cells[t].id, cells[t].n, "-", "cell", static_cast<long>(cells[t].rep), "runtime_ms", ms));
            }
        }
    };
    std::size_t threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, std::max<std::size_t>(1, cells.size()));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    std::vector<ResultRow> rows;
    for (auto& r : results) rows.insert(rows.end(), r.begin(), r.end());
    return rows;
}

CaseSpec case_spec(const RunConfig& cfg, CaseId id, std::size_t n)
{
    CaseSpec spec;
    spec.id = id;
    spec.n = n;
    spec.covariates_are_squared = cfg.covariates_are_squared;
    return spec;
}

Design cell_design(const RunConfig& cfg, const Cell& cell)
{
    auto rng = seed_stream(*cfg.seed, case_name(cell.id), cell.n, cell.rep, "design");
    return build_case_design(case_spec(cfg, cell.id, cell.n), rng);
}

double reference_curve(CaseId id, std::size_t n)
{
    CaseSpec spec;
    spec.id = id;
    spec.n = n;
    const double eta = case_eta(spec);
    const double ln = std::log(static_cast<double>(n));
    return eta > 0.0 ? ln / eta : ln;
}

bool finish(CommandOutput& out)
{
    for (const auto& r : out.rows)
        if (r.status != "ok") out.any_failed = true;
    auto summary = summarize(out.rows);
    out.rows.insert(out.rows.end(), summary.begin(), summary.end());
    sort_rows(out.rows);
    return out.any_failed;
}

struct Replicate {
    Design design;
    ModelTruth truth;
    Dataset data;
    FitResult fit;
};

Replicate make_replicate(const RunConfig& cfg, const Cell& cell)
{
    Replicate r;
    r.design = cell_design(cfg, cell);
    auto trng = seed_stream(*cfg.seed, case_name(cell.id), cell.n, cell.rep, "truth");
    r.truth = draw_truth(cfg.g0, cell.n, std::vector<double>(r.design.d, 0.0), cfg.sigma, trng);
    auto drng = seed_stream(*cfg.seed, case_name(cell.id), cell.n, cell.rep, "data");
    r.data = simulate(r.design, r.truth, drng);
    auto frng = seed_stream(*cfg.seed, case_name(cell.id), cell.n, cell.rep, "fit");
    r.fit = fit_parameters(cfg.mode, r.truth, r.data, r.design, frng);
    return r;
}

void add_fit_rows(std::vector<ResultRow>& rows, const Cell& cell, const Replicate& r)
{
    if (r.fit.regime == Regime::Known) return;
    const long rep = static_cast<long>(cell.rep);
    double be = 0.0;
    for (std::size_t j = 0; j < r.fit.beta_hat.size(); ++j) be += std::pow(r.fit.beta_hat[j] - r.truth.beta[j], 2);
    rows.push_back(make_row(cell.id, cell.n, "-", "fit_" + regime_name(r.fit.regime), rep, "beta_err", std::sqrt(be)));
    rows.push_back(make_row(cell.id, cell.n, "-", "fit_" + regime_name(r.fit.regime), rep, "sigma_err",
                            std::abs(r.fit.sigma_hat - r.truth.sigma)));
}

}  // namespace

CommandOutput cmd_diagnose(const RunConfig& cfg)
{
    finalize_config(cfg);
    CommandOutput out;
    out.rows = run_cells(cfg, cells_of(cfg), [&](const Cell& cell) {
        std::vector<ResultRow> rows;
        const long rep = static_cast<long>(cell.rep);
        try {
            const Design design = cell_design(cfg, cell);
            const auto sizes = reuse_set_sizes(design);
            for (const auto& hp : cfg.h_policies) {
                const auto d = set_diagnostics(sizes, hp.resolve(cell.n));
                rows.push_back(make_row(cell.id, cell.n, hp.name(), "fission", rep, "D_n", d.D_n));
                rows.push_back(make_row(cell.id, cell.n, hp.name(), "fission", rep, "IF_n", d.IF_n));
                rows.push_back(make_row(cell.id, cell.n, hp.name(), "fission", rep, "dependency_sum", d.dependency_sum));
            }
        } catch (const std::exception&) {
            for (const auto& hp : cfg.h_policies)
                for (const char* m : {"D_n", "IF_n", "dependency_sum"}) rows.push_back(failed_row(cell.id, cell.n, hp.name(), "fission", rep, m));
        }
        return rows;
    });
    finish(out);
    for (CaseId c : cfg.cases)
        for (std::size_t n : cfg.n_grid)
            for (const auto& hp : cfg.h_policies) out.rows.push_back(make_row(c, n, hp.name(), "fission", -1, "reference", reference_curve(c, n)));
    sort_rows(out.rows);
    for (const auto& r : out.rows)
        if (r.rep < 0 && r.metric != "reference")
            out.summary[r.case_id][std::to_string(r.n)][r.h_policy][r.metric] = {{"mean", r.value}, {"se", r.mc_se}, {"reps", cfg.reps}};
    return out;
}

CommandOutput cmd_risk_check(const RunConfig& cfg)
{
    finalize_config(cfg);
    CommandOutput out;
    RiskOptions ropts;
    ropts.rb_nodes = cfg.rb_nodes;
    ropts.legacy_sigma_noise = cfg.legacy_sigma_noise;
    out.rows = run_cells(cfg, cells_of(cfg), [&](const Cell& cell) {
        std::vector<ResultRow> rows;
        const long rep = static_cast<long>(cell.rep);
        try {
            const Replicate r = make_replicate(cfg, cell);
            add_fit_rows(rows, cell, r);
            const SuffStats stats = aggregate_stats(r.data, r.design, r.fit.beta_hat, r.fit.sigma_hat);
            const bool scarce = resolve_scarce(cfg.scarce, r.design);
            for (const auto& hp : cfg.h_policies) {
                const FissionPlan plan = build_fission_plan(r.design, hp.resolve(cell.n));
                for (const auto& [label, prior] : {std::pair<std::string, Prior>{"probe", Prior{cfg.probe}},
                                                   std::pair<std::string, Prior>{"uniform", Prior{UniformPrior{}}}}) {
                    try {
                        const RiskBreakdown est = risk_hat(prior, stats, plan, r.design, r.fit.sigma_hat, scarce, ropts);
                        const RiskBreakdown tru =
                            true_risk_decomposed(r.truth, r.design, prior, cfg.nodes, scarce ? &plan.improved : nullptr);
                        rows.push_back(make_row(cell.id, cell.n, hp.name(), label, rep, "risk_hat", est.total));
                        rows.push_back(make_row(cell.id, cell.n, hp.name(), label, rep, "true_risk", tru.total));
                        rows.push_back(make_row(cell.id, cell.n, hp.name(), label, rep, "abs_error", std::abs(est.total - tru.total)));
                    } catch (const std::exception&) {
                        for (const char* m : {"risk_hat", "true_risk", "abs_error"})
                            rows.push_back(failed_row(cell.id, cell.n, hp.name(), label, rep, m));
                    }
                }
            }
        } catch (const std::exception&) {
            for (const auto& hp : cfg.h_policies)
                for (const char* label : {"probe", "uniform"})
                    for (const char* m : {"risk_hat", "true_risk", "abs_error"}) rows.push_back(failed_row(cell.id, cell.n, hp.name(), label, rep, m));
        }
        return rows;
    });
    finish(out);
    for (const auto& r : out.rows)
        if (r.rep < 0 && r.metric == "abs_error")
            out.summary[r.case_id][r.method + " h=" + r.h_policy][std::to_string(r.n)] = {{"mean", r.value}, {"se", r.mc_se}, {"reps", cfg.reps}};
    return out;
}

CommandOutput cmd_table1(const RunConfig& cfg)
{
    finalize_config(cfg);
    CommandOutput out;
    std::vector<MethodSpec> specs;
    MethodSpec bayes;
    bayes.kind = MethodKind::Bayes;
    for (MethodKind k : cfg.methods) {
        MethodSpec s;
        s.kind = k;
        s.cls = cfg.cls;
        s.em_grid = cfg.em_grid;
        s.select.risk.rb_nodes = cfg.rb_nodes;
        s.select.risk.legacy_sigma_noise = cfg.legacy_sigma_noise;
        s.select.scarce = cfg.scarce;
        s.select.max_iter = cfg.max_iter;
        s.select.tol = cfg.tol;
        if (method_uses_h(k)) {
            for (const auto& hp : cfg.h_policies) {
                s.h = hp;
                specs.push_back(s);
            }
        } else if (k != MethodKind::Bayes) {
            specs.push_back(s);
        }
    }
    out.rows = run_cells(cfg, cells_of(cfg), [&](const Cell& cell) {
        std::vector<ResultRow> rows;
        const long rep = static_cast<long>(cell.rep);
        auto h_of = [](const MethodSpec& s) { return method_uses_h(s.kind) ? s.h.name() : std::string("-"); };
        try {
            const Replicate r = make_replicate(cfg, cell);
            add_fit_rows(rows, cell, r);
            const auto ref = evaluate_methods({bayes}, r.design, r.truth, r.data, known_fit(r.truth.beta, r.truth.sigma), cfg.nodes).front();
            if (ref.failed) throw std::runtime_error(ref.error);
            rows.push_back(make_row(cell.id, cell.n, "-", "bayes", rep, "risk", ref.loss));
            const auto results = evaluate_methods(specs, r.design, r.truth, r.data, r.fit, cfg.nodes);
            for (const auto& res : results) {
                const std::string name = method_name(res.spec.kind);
                if (res.failed) {
                    rows.push_back(failed_row(cell.id, cell.n, h_of(res.spec), name, rep, "risk"));
                    rows.push_back(failed_row(cell.id, cell.n, h_of(res.spec), name, rep, "excess"));
                    continue;
                }
                rows.push_back(make_row(cell.id, cell.n, h_of(res.spec), name, rep, "risk", res.loss));
                rows.push_back(make_row(cell.id, cell.n, h_of(res.spec), name, rep, "excess", res.loss - ref.loss));
                if (res.selection)
                    rows.push_back(make_row(cell.id, cell.n, h_of(res.spec), name, rep, "IF_n", res.selection->risk_at_opt.IF_n));
            }
        } catch (const std::exception&) {
            rows.push_back(failed_row(cell.id, cell.n, "-", "bayes", rep, "risk"));
            for (const auto& s : specs) rows.push_back(failed_row(cell.id, cell.n, h_of(s), method_name(s.kind), rep, "excess"));
        }
        return rows;
    });
    finish(out);
    for (const auto& r : out.rows)
        if (r.rep < 0 && r.metric == "excess") {
            const std::string label = r.h_policy == "-" ? r.method : r.method + " h=" + r.h_policy;
            out.summary[r.case_id][label] = {{"mean", r.value}, {"se", r.mc_se}, {"reps", cfg.reps}, {"n", r.n}};
        }
    return out;
}

std::string rows_to_csv(const std::vector<ResultRow>& rows)
{
    std::ostringstream os;
    os << "case,n,h_policy,method,rep,metric,value,mc_se,status\n";
    for (const auto& r : rows) {
        os << r.case_id << ',' << r.n << ',' << r.h_policy << ',' << r.method << ',' << (r.rep < 0 ? std::string("all") : std::to_string(r.rep))
           << ',' << r.metric << ',' << fmt(r.value) << ',' << fmt(r.mc_se) << ',' << r.status << '\n';
    }
    return os.str();
}

nlohmann::json rows_to_json(const std::vector<ResultRow>& rows)
{
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows)
        arr.push_back({{"case", r.case_id},
                       {"n", r.n},
                       {"h_policy", r.h_policy},
                       {"method", r.method},
                       {"rep", r.rep < 0 ? nlohmann::json("all") : nlohmann::json(r.rep)},
                       {"metric", r.metric},
                       {"value", r.value},
                       {"mc_se", r.mc_se},
                       {"status", r.status}});
    return arr;
}

namespace {

void write_text(const std::string& path, const std::string& text)
{
    if (path.empty() || path == "-") {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    f << text;
    if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

nlohmann::json simulate_json(const RunConfig& cfg)
{
    const Cell cell{cfg.cases.front(), cfg.n_grid.front(), 0};
    const Replicate r = make_replicate(cfg, cell);
    return {{"case", case_name(cell.id)},
            {"seed", *cfg.seed},
            {"design", design_to_json(r.design)},
            {"truth", {{"beta", r.truth.beta}, {"sigma", r.truth.sigma}, {"gamma", r.truth.gamma}, {"g0", prior_to_json(r.truth.g0)}}},
            {"dataset", dataset_to_json(r.data)}};
}

nlohmann::json plan_json(const RunConfig& cfg)
{
    const Cell cell{cfg.cases.front(), cfg.n_grid.front(), 0};
    const Design design = cell_design(cfg, cell);
    nlohmann::json out = nlohmann::json::array();
    for (const auto& hp : cfg.h_policies) {
        auto j = plan_summary_json(build_fission_plan(design, hp.resolve(cell.n)));
        j["h_policy"] = hp.name();
        out.push_back(std::move(j));
    }
    return out;
}

nlohmann::json select_json(const RunConfig& cfg)
{
    const Cell cell{cfg.cases.front(), cfg.n_grid.front(), 0};
    const Replicate r = make_replicate(cfg, cell);
    SelectOptions opts;
    opts.risk.rb_nodes = cfg.rb_nodes;
    opts.risk.legacy_sigma_noise = cfg.legacy_sigma_noise;
    opts.scarce = cfg.scarce;
    opts.max_iter = cfg.max_iter;
    opts.tol = cfg.tol;
    nlohmann::json out = nlohmann::json::array();
    for (const auto& hp : cfg.h_policies) {
        auto j = selection_to_json(select(cfg.cls, r.data, r.design, r.fit, hp, opts));
        j["h_policy"] = hp.name();
        j["fit"] = {{"regime", regime_name(r.fit.regime)}, {"beta_hat", r.fit.beta_hat}, {"sigma_hat", r.fit.sigma_hat}};
        out.push_back(std::move(j));
    }
    return out;
}

}  // namespace

int run_command(const RunConfig& cfg)
{
    finalize_config(cfg);
    CommandOutput out;
    if (cfg.command == "diagnose")
        out = cmd_diagnose(cfg);
    else if (cfg.command == "risk-check")
        out = cmd_risk_check(cfg);
    else if (cfg.command == "table1")
        out = cmd_table1(cfg);
    else if (cfg.command == "simulate") {
        write_text(cfg.out, simulate_json(cfg).dump(2) + "\n");
        return 0;
    } else if (cfg.command == "plan") {
        write_text(cfg.out, plan_json(cfg).dump(2) + "\n");
        return 0;
    } else if (cfg.command == "select") {
        write_text(cfg.out, select_json(cfg).dump(2) + "\n");
        return 0;
    } else
        throw ConfigError("unknown command '" + cfg.command + "'");

    if (cfg.format == "json") {
        write_text(cfg.out, nlohmann::json{{"rows", rows_to_json(out.rows)}, {"summary", out.summary}}.dump(2) + "\n");
    } else {
        write_text(cfg.out, rows_to_csv(out.rows));
        if (!cfg.summary_out.empty()) write_text(cfg.summary_out, out.summary.dump(2) + "\n");
    }
    return out.any_failed ? 3 : 0;
}

}  // namespace ebprde
