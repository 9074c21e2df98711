// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include "ebprde/baselines.hpp"
#include "ebprde/eb_select.hpp"
#include "ebprde/estimators.hpp"
#include "ebprde/fission.hpp"
#include "ebprde/harness.hpp"
#include "ebprde/marginals.hpp"
#include "ebprde/methods.hpp"
#include "ebprde/numerics.hpp"
#include "ebprde/oracle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

using namespace ebprde;

namespace {

constexpr std::uint64_t kSeed = 20240611;

// pinned tolerances
constexpr double kClosedFormTol = 1e-6;
constexpr double kMcSigmas = 3.0;
constexpr double kRiskErrorBound = 0.02;
constexpr double kFissionVarRel = 0.01;
constexpr double kDiagnosticsGrowth = 2.0;
constexpr double kSymmetricIfBound = 0.25;
constexpr double kRichIfBound = 0.9;
constexpr double kTableFactor = 3.0;
constexpr double kSlopeTarget = -0.5, kSlopeTol = 0.15;
constexpr double kBatchedFactor = 3.0;
constexpr double kGradRel = 1e-5, kGradAbsFloor = 1e-9;
constexpr double kTraceSlack = 1e-12, kEmSlack = 1e-10;

const Prior kG0 = GaussMixPrior{{0.7, 0.3}, {0.25, 1.0}};

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double x)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

Design random_single_design(std::size_t n, std::size_t d, RngStream& rng)
{
    std::vector<Unit> units(n);
    for (auto& un : units) {
        un.u = {std::sqrt(rng.uniform(0.2, 4.0))};
        un.v = {std::sqrt(rng.uniform(0.2, 4.0))};
        for (std::size_t j = 0; j < d; ++j) {
            un.x.push_back(rng.normal());
            un.x_future.push_back(rng.normal());
        }
    }
    return make_design(d, units);
}

Outcome gaussian_closed_form()
{
    auto rng = seed_stream(kSeed, "c1");
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
        const double tau = rng.uniform(0.05, 4.0), gamma = rng.uniform(-3.0, 3.0);
        std::vector<Unit> units(1);
        units[0].u = {std::sqrt(rng.uniform(0.05, 6.0))};
        units[0].v = {std::sqrt(rng.uniform(0.05, 6.0))};
        const Design d = make_design(0, units);
        ModelTruth truth;
        truth.gamma = {gamma};
        const RiskBreakdown r = true_risk_decomposed(truth, d, GaussianScalarPrior{tau});
        worst = std::max(worst, std::abs(r.total - r.a_n - gaussian_prior_risk_difference(d, {gamma}, tau, 1.0)));
    }
    return {worst <= kClosedFormTol, "max deviation " + fmt("%.3g", worst)};
}

Outcome decomposition_identity()
{
    auto rng = seed_stream(kSeed, "c2", "design");
    const Design design = random_single_design(20, 1, rng);
    ModelTruth truth;
    truth.beta = {0.6};
    truth.sigma = 1.0;
    for (std::size_t i = 0; i < 20; ++i) truth.gamma.push_back(sample_prior(kG0, rng));
    const FitResult fit = known_fit(truth.beta, truth.sigma);
    bool pass = true;
    std::ostringstream detail;
    const std::vector<std::pair<std::string, Prior>> priors = {
        {"gaussmix", GaussMixPrior{{0.5, 0.5}, {0.25, 1.0}}},
        {"discrete", DiscretePrior{{0.3, 0.4, 0.3}, {-1.0, 0.0, 1.0}}}};
    for (const auto& [name, g] : priors) {
        auto drng = seed_stream(kSeed, "c2", name);
        std::vector<double> losses;
        for (int s = 0; s < 10000; ++s) {
            const Dataset data = simulate(design, truth, drng);
            const SuffStats stats = aggregate_stats(data, design, truth.beta, truth.sigma);
            losses.push_back(kl_loss_prde(bayes_prde(g, stats, fit, design), truth, design));
        }
        const MeanSe mc = mean_se(losses);
        const double exact = true_risk_decomposed(truth, design, g).total;
        const double z = std::abs(mc.mean - exact) / mc.se;
        pass = pass && z <= kMcSigmas;
        detail << name << " mc " << fmt("%.5f", mc.mean) << " exact " << fmt("%.5f", exact) << " (" << fmt("%.2f", z)
               << " se) ";
    }
    return {pass, detail.str()};
}

Outcome r2_unbiasedness()
{
    auto rng = seed_stream(kSeed, "c3", "design");
    const Design design = build_case_design(CaseSpec{CaseId::B, 50}, rng);
    const FissionPlan plan = build_fission_plan(design, 1);
    const Prior g = GaussMixPrior{{0.5, 0.5}, {0.25, 1.0}};
    std::vector<double> r2;
    auto srng = seed_stream(kSeed, "c3", "sims");
    for (int s = 0; s < 10000; ++s) {
        const ModelTruth truth = draw_truth(kG0, design.n(), {}, 1.0, srng);
        const Dataset data = simulate(design, truth, srng);
        r2.push_back(r2_hat(g, aggregate_stats(data, design, {}, 1.0), plan, design, 1.0));
    }
    const MeanSe mc = mean_se(r2);
    const double target = exchangeable_r2_target(kG0, g, plan, design, 1.0);
    const double z = std::abs(mc.mean - target) / mc.se;
    return {z <= kMcSigmas, "mean " + fmt("%.5f", mc.mean) + " target " + fmt("%.5f", target) + " (" + fmt("%.2f", z) + " se)"};
}

Outcome risk_consistency()
{
    RunConfig cfg;
    cfg.command = "risk-check";
    cfg.seed = kSeed;
    cfg.cases = {CaseId::A};
    cfg.n_grid = {100, 400, 1600};
    cfg.reps = 100;
    const CommandOutput out = cmd_risk_check(cfg);
    std::vector<double> err(3, NAN);
    for (const auto& r : out.rows)
        if (r.rep == -1 && r.method == "probe" && r.metric == "abs_error")
            for (std::size_t j = 0; j < 3; ++j)
                if (r.n == cfg.n_grid[j]) err[j] = r.value;
    const bool decreasing = err[0] > err[1] && err[1] > err[2];
    const bool small = err[2] <= kRiskErrorBound;
    return {!out.any_failed && decreasing && small, "mean |R_hat - R| " + fmt("%.4f", err[0]) + ", " + fmt("%.4f", err[1]) + ", " +
                                                        fmt("%.4f", err[2]) + (decreasing ? " decreasing" : " not decreasing") +
                                                        "; bound " + fmt("%.2f", kRiskErrorBound) + (small ? " met" : " missed")};
}

Outcome fission_variance()
{
    std::vector<Unit> units(2);
    units[0].u = {1.0};
    units[0].v = {0.9};
    units[1].u = {std::sqrt(3.0)};
    units[1].v = {1.0};
    const Design design = make_design(0, units);
    const FissionPlan plan = build_fission_plan(design, 1);
    if (plan.members[0].size() != 1 || plan.members[0][0] != 1) return {false, "unexpected reuse set"};
    const double d = plan.coef[0][0], v = 0.9, u2 = 1.0;
    ModelTruth truth;
    truth.gamma = {0.0, 0.7};
    auto rng = seed_stream(kSeed, "c5");
    std::vector<double> w;
    for (int r = 0; r < 100000; ++r) {
        const SuffStats s = aggregate_stats(simulate(design, truth, rng), design, {}, 1.0);
        w.push_back(v * s.z[1] + std::sqrt(d) * rng.normal());
    }
    const MeanSe m = mean_se(w);
    const double var = m.se * m.se * static_cast<double>(w.size());
    const double target = v * v / (u2 + v * v);
    const double rel = std::abs(var / target - 1.0), z = std::abs(m.mean - v * 0.7) / m.se;
    return {rel <= kFissionVarRel && z <= kMcSigmas,
            "variance rel. error " + fmt("%.4f", rel) + ", mean " + fmt("%.2f", z) + " se from target"};
}

Outcome diagnostics_theory()
{
    const std::vector<std::size_t> grid = {50, 100, 200, 400, 800, 1600, 2500};
    std::ostringstream detail;
    bool pass = true;
    const auto curve_a = diagnostics_curve(CaseSpec{CaseId::A}, grid, HPolicy{}, 20, kSeed);
    double worst_d = 0.0, worst_sum = 0.0;
    for (const auto& p : curve_a) {
        const double ln = std::log(static_cast<double>(p.n));
        const double ln0 = std::log(50.0);
        worst_d = std::max(worst_d, (p.D_n.mean / ln) / (curve_a[0].D_n.mean / ln0));
        worst_sum = std::max(worst_sum, (p.dependency_sum.mean / ln) / (curve_a[0].dependency_sum.mean / ln0));
    }
    pass = pass && worst_d <= kDiagnosticsGrowth;
    detail << "case A max ratio growth D_n " << fmt("%.3f", worst_d) << " (unnormalized sum, not gated: " << fmt("%.3f", worst_sum)
           << ")";

    const auto curve_d = diagnostics_curve(CaseSpec{CaseId::D}, grid, HPolicy{}, 20, kSeed);
    auto ref = [](std::size_t n) {
        CaseSpec cs{CaseId::D, n};
        return std::log(static_cast<double>(n)) / case_eta(cs);
    };
    const double c_d = curve_d[0].D_n.mean / ref(50), c_sum = curve_d[0].dependency_sum.mean / ref(50);
    double worst_dd = 0.0, worst_dsum = 0.0;
    for (const auto& p : curve_d) {
        worst_dd = std::max(worst_dd, p.D_n.mean / (c_d * ref(p.n)));
        worst_dsum = std::max(worst_dsum, p.dependency_sum.mean / (c_sum * ref(p.n)));
    }
    pass = pass && worst_dd <= kDiagnosticsGrowth;
    detail << "; case D max ratio to fitted curve D_n " << fmt("%.3f", worst_dd) << " (unnormalized sum, not gated: "
           << fmt("%.3f", worst_dsum) << ")";

    std::size_t violations = 0, designs = 0;
    for (CaseId c : {CaseId::A, CaseId::D})
        for (std::size_t n : grid)
            for (int rep = 0; rep < 20; ++rep) {
                auto rng = seed_stream(kSeed, "c6", case_name(c), n, rep);
                const auto sizes = reuse_set_sizes(build_case_design(CaseSpec{c, n}, rng));
                ++designs;
                SetDiagnostics prev = set_diagnostics(sizes, 1);
                for (std::size_t h = 2; h <= n; h = h < 8 ? h + 1 : h * 2) {
                    const SetDiagnostics cur = set_diagnostics(sizes, h);
                    if (cur.D_n > prev.D_n || cur.IF_n > prev.IF_n) ++violations;
                    prev = cur;
                }
            }
    pass = pass && violations == 0;
    detail << "; monotonicity violations in h " << violations << " over " << designs << " designs";
    return {pass, detail.str()};
}

Outcome improvement_factor()
{
    std::vector<double> ifs;
    for (int rep = 0; rep < 20; ++rep) {
        auto rng = seed_stream(kSeed, "c7", rep);
        std::vector<Unit> units(2000);
        for (auto& un : units) {
            un.u = {std::sqrt(rng.uniform(0.0, 2.0))};
            un.v = {std::sqrt(rng.uniform(0.0, 2.0))};
        }
        ifs.push_back(set_diagnostics(reuse_set_sizes(make_design(0, units)), 1).IF_n);
    }
    const double sym = mean_se(ifs).mean;
    bool pass = sym >= kSymmetricIfBound;
    std::ostringstream detail;
    detail << "symmetric IF " << fmt("%.3f", sym);
    for (CaseId c : {CaseId::D, CaseId::E}) {
        const auto pt = diagnostics_curve(CaseSpec{c}, {2500}, HPolicy{}, 20, kSeed).front();
        pass = pass && pt.IF_n.mean >= kRichIfBound;
        detail << ", case " << case_name(c) << " IF " << fmt("%.3f", pt.IF_n.mean);
    }
    return {pass, detail.str()};
}

Outcome table_one()
{
    RunConfig cfg;
    cfg.command = "table1";
    cfg.seed = kSeed;
    cfg.cases = {CaseId::A, CaseId::B, CaseId::C, CaseId::D, CaseId::E, CaseId::F};
    cfg.n_grid = {1000};
    cfg.reps = 50;
    cfg.methods = {MethodKind::Proposed, MethodKind::GModel, MethodKind::Naive};
    const CommandOutput out = cmd_table1(cfg);
    const std::vector<double> published = {0.0228, 0.0238, 0.0230, 0.0187, 0.0208, 0.0650};
    bool pass = !out.any_failed;
    std::ostringstream detail;
    for (std::size_t c = 0; c < cfg.cases.size(); ++c) {
        const std::string name = case_name(cfg.cases[c]);
        const auto& row = out.summary.at(name);
        const double p = row.at("proposed h=1").at("mean").get<double>();
        const double g = row.at("gmodel").at("mean").get<double>();
        const double nv = row.at("naive").at("mean").get<double>();
        const bool order = p < g && g < nv;
        const bool factor = p >= published[c] / kTableFactor && p <= published[c] * kTableFactor;
        pass = pass && order && factor;
        detail << name << ": " << fmt("%.4f", p) << " < " << fmt("%.4f", g) << " < " << fmt("%.3f", nv)
               << (order ? "" : " [order]") << (factor ? "" : " [factor]") << (c + 1 < cfg.cases.size() ? "; " : "");
    }
    return {pass, detail.str()};
}

Design fixed_effect_design(std::size_t n, std::size_t replicated, RngStream& rng)
{
    std::vector<Unit> units(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t K = i < replicated ? 2 : 1;
        for (std::size_t k = 0; k < K; ++k) {
            units[i].u.push_back(rng.uniform(0.5, 1.5));
            units[i].x.push_back(rng.normal());
        }
        units[i].v = {1.0};
        units[i].x_future = {rng.normal()};
    }
    return make_design(1, units);
}

Outcome estimator_rates()
{
    const std::vector<std::size_t> replicated = {50, 100, 200, 400, 800, 1600};
    std::vector<double> lx, ly;
    for (std::size_t m : replicated) {
        auto rng = seed_stream(kSeed, "c9", "contrast", m);
        const Design d = fixed_effect_design(4000, m, rng);
        ModelTruth truth;
        truth.beta = {0.5};
        double sq = 0.0;
        const int reps = 200;
        for (int r = 0; r < reps; ++r) {
            truth.gamma = draw_truth(kG0, d.n(), truth.beta, 1.0, rng).gamma;
            sq += std::pow(contrast_fit(simulate(d, truth, rng), d).beta_hat[0] - 0.5, 2);
        }
        lx.push_back(std::log(static_cast<double>(m)));
        ly.push_back(0.5 * std::log(sq / reps));
    }
    const double mx = mean_se(lx).mean, my = mean_se(ly).mean;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t j = 0; j < lx.size(); ++j) {
        sxy += (lx[j] - mx) * (ly[j] - my);
        sxx += (lx[j] - mx) * (lx[j] - mx);
    }
    const double slope = sxy / sxx;

    const std::size_t n = 10000;
    auto rng = seed_stream(kSeed, "c9", "batched");
    const Design d = fixed_effect_design(n, 0, rng);
    ModelTruth truth;
    truth.beta = {0.3};
    double sq = 0.0;
    const int reps = 100;
    for (int r = 0; r < reps; ++r) {
        truth.gamma = draw_truth(kG0, n, truth.beta, 1.0, rng).gamma;
        sq += std::pow(batched_fit(simulate(d, truth, rng), d, 0, rng).beta_hat[0] - 0.3, 2);
    }
    const double rmse = std::sqrt(sq / reps), bound = kBatchedFactor * std::pow(static_cast<double>(n), -0.25);
    return {std::abs(slope - kSlopeTarget) <= kSlopeTol && rmse <= bound,
            "contrast slope " + fmt("%.3f", slope) + ", batched RMSE " + fmt("%.4f", rmse) + " vs bound " + fmt("%.3f", bound)};
}

Outcome optimizer_hygiene()
{
    std::size_t grad_bad = 0, grads = 0, trace_bad = 0, em_bad = 0;
    const CaseId cases[] = {CaseId::A, CaseId::B, CaseId::C, CaseId::D, CaseId::E};
    for (int inst = 0; inst < 100; ++inst) {
        auto rng = seed_stream(kSeed, "c10", inst);
        const CaseId c = cases[inst % 5];
        const std::size_t n = 60 + rng.below(120);
        const Design design = build_case_design(CaseSpec{c, n}, rng);
        const ModelTruth truth = draw_truth(kG0, n, {}, 1.0, rng);
        const SuffStats stats = aggregate_stats(simulate(design, truth, rng), design, {}, 1.0);
        const FissionPlan plan = build_fission_plan(design, 1);
        const std::size_t L = 2 + rng.below(4);
        std::vector<double> grid;
        for (std::size_t l = 0; l < L; ++l) grid.push_back(inst % 2 ? rng.uniform(-2.0, 2.0) : rng.uniform(0.05, 3.0));
        const ClassSpec cls = inst % 2 ? ClassSpec::discrete(grid) : ClassSpec::gauss_mix(grid);
        const auto table = build_risk_table(class_components(cls), stats, plan, design, 1.0);
        const MixtureObjective obj = risk_objective(table, plan, design, resolve_scarce(ScarcePolicy::Auto, design));

        std::vector<double> pi(L), grad(L);
        double sum = 0.0;
        for (auto& p : pi) sum += (p = rng.uniform(0.1, 1.0));
        for (auto& p : pi) p /= sum;
        obj.value_and_gradient(pi, grad);
        for (std::size_t l = 0; l < L; ++l) {
            const double h = 1e-5;
            auto up = pi, dn = pi;
            up[l] += h;
            dn[l] -= h;
            const double fd = (obj.value(up) - obj.value(dn)) / (2 * h);
            ++grads;
            if (std::abs(grad[l] - fd) > std::max(kGradRel * std::abs(fd), kGradAbsFloor)) ++grad_bad;
        }

        const MixtureFit fit = fit_mixture_weights(obj);
        for (std::size_t t = 1; t < fit.trace.size(); ++t)
            if (fit.trace[t] > fit.trace[t - 1] + kTraceSlack) {
                ++trace_bad;
                break;
            }

        std::vector<double> gt, tau2;
        for (std::size_t i = 0; i < n; ++i) {
            gt.push_back(stats.z[i]);
            tau2.push_back(1.0 / (stats.u_agg[i] * stats.u_agg[i]));
        }
        std::vector<double> em_grid;
        for (std::size_t l = 0; l < L; ++l) em_grid.push_back(rng.uniform(0.0, 3.0));
        const EmFit em = gmodel_em(gt, tau2, em_grid);
        for (std::size_t t = 1; t < em.loglik_trace.size(); ++t)
            if (em.loglik_trace[t] < em.loglik_trace[t - 1] - kEmSlack) {
                ++em_bad;
                break;
            }
    }
    return {grad_bad == 0 && trace_bad == 0 && em_bad == 0,
            std::to_string(grad_bad) + "/" + std::to_string(grads) + " gradient mismatches, " + std::to_string(trace_bad) +
                " non-monotone objective traces, " + std::to_string(em_bad) + " non-monotone EM traces"};
}

std::string slurp(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism()
{
    std::size_t mismatches = 0, runs = 0;
    for (const std::string cmd : {"diagnose", "risk-check", "table1"}) {
        RunConfig cfg;
        cfg.command = cmd;
        cfg.seed = kSeed;
        cfg.cases = {CaseId::A, CaseId::E};
        cfg.n_grid = {80, 160};
        cfg.reps = 3;
        cfg.methods = {MethodKind::Proposed, MethodKind::GModel, MethodKind::Naive};
        auto run = [&](std::size_t threads) {
            RunConfig c = cfg;
            c.threads = threads;
            if (cmd == "diagnose") return rows_to_csv(cmd_diagnose(c).rows);
            if (cmd == "risk-check") return rows_to_csv(cmd_risk_check(c).rows);
            return rows_to_csv(cmd_table1(c).rows);
        };
        const std::string first = run(1);
        ++runs;
        if (first != run(1) || first != run(3)) ++mismatches;
    }
    std::string cli_note = "command line not checked (EBPRDE_CLI unset)";
    if (const char* cli = std::getenv("EBPRDE_CLI")) {
        const auto dir = std::filesystem::temp_directory_path();
        const std::string a = (dir / "ebprde_accept_a.csv").string(), b = (dir / "ebprde_accept_b.csv").string();
        const std::string args = " table1 --case A,F --n-grid 100 --reps 2 --seed 11 --out ";
        const int sa = std::system((std::string(cli) + args + a).c_str());
        const int sb = std::system((std::string(cli) + args + b).c_str());
        const bool ok = sa == 0 && sb == 0 && !slurp(a).empty() && slurp(a) == slurp(b);
        if (!ok) ++mismatches;
        cli_note = ok ? "command line rerun identical" : "command line rerun differs or failed";
    }
    return {mismatches == 0, std::to_string(mismatches) + " mismatches over " + std::to_string(runs) + " commands; " + cli_note};
}

}  // namespace

int main(int argc, char** argv)
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"Gaussian closed form", gaussian_closed_form},
        {"risk decomposition identity", decomposition_identity},
        {"second-term estimator unbiased", r2_unbiasedness},
        {"risk estimator consistency", risk_consistency},
        {"fission variance matching", fission_variance},
        {"diagnostics growth", diagnostics_theory},
        {"improvement factor bounds", improvement_factor},
        {"large-sample excess risk table", table_one},
        {"fixed-effect estimator rates", estimator_rates},
        {"optimizer hygiene", optimizer_hygiene},
        {"determinism", determinism},
    };
    std::set<int> wanted;
    for (int a = 1; a < argc; ++a) wanted.insert(std::atoi(argv[a]));
    int failures = 0;
    for (std::size_t c = 0; c < criteria.size(); ++c) {
        const int id = static_cast<int>(c + 1);
        if (!wanted.empty() && !wanted.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[c].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!o.pass) ++failures;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[c].first << "): " << o.detail
                  << " [" << fmt("%.1f", secs) << " s]" << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
