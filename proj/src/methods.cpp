#include "ebprde/methods.hpp"

#include <map>
#include <memory>
#include <stdexcept>

namespace ebprde {

std::string method_name(MethodKind kind)
{
    switch (kind) {
    case MethodKind::Oracle:
        return "oracle";
    case MethodKind::Bayes:
        return "bayes";
    case MethodKind::Uniform:
        return "uniform";
    case MethodKind::Proposed:
        return "proposed";
    case MethodKind::ProposedModified:
        return "proposed_modified";
    case MethodKind::GModel:
        return "gmodel";
    case MethodKind::GModelBayes:
        return "gmodel_bayes";
    case MethodKind::Naive:
        return "naive";
    }
    return "unknown";
}

MethodKind parse_method(const std::string& name)
{
    for (auto k : {MethodKind::Oracle, MethodKind::Bayes, MethodKind::Uniform, MethodKind::Proposed,
                   MethodKind::ProposedModified, MethodKind::GModel, MethodKind::GModelBayes, MethodKind::Naive})
        if (method_name(k) == name) return k;
    throw std::invalid_argument("unknown method '" + name + "'");
}

bool method_uses_h(MethodKind kind) { return kind == MethodKind::Proposed || kind == MethodKind::ProposedModified; }

std::string MethodSpec::label() const { return method_uses_h(kind) ? method_name(kind) + "[h=" + h.name() + "]" : method_name(kind); }

FitResult fit_parameters(ParamMode mode, const ModelTruth& truth, const Dataset& data, const Design& design,
                         RngStream& rng)
{
    if (mode == ParamMode::Known) return known_fit(truth.beta, truth.sigma);
    return select_estimator(data, design, rng);
}

namespace {

FissionPlan rethreshold(const FissionPlan& full, std::size_t h)
{
    FissionPlan plan = full;
    plan.h = h;
    plan.improved.assign(plan.coords.size(), 0);
    plan.improved_count = 0;
    CompensatedSum dep;
    for (std::size_t c = 0; c < plan.coords.size(); ++c) {
        const std::size_t s = plan.members[c].size();
        if (s > 0 && s >= h) {
            plan.improved[c] = 1;
            ++plan.improved_count;
            dep.add(1.0 / static_cast<double>(s));
        }
    }
    const double kappa = static_cast<double>(plan.coords.size());
    plan.dependency_sum = dep.value();
    plan.D_n = plan.dependency_sum / kappa;
    plan.IF_n = static_cast<double>(plan.improved_count) / kappa;
    return plan;
}

}  // namespace

std::vector<MethodResult> evaluate_methods(const std::vector<MethodSpec>& specs, const Design& design,
                                           const ModelTruth& truth, const Dataset& data, const FitResult& fit,
                                           std::size_t nodes)
{
    const SuffStats stats = aggregate_stats(data, design, fit.beta_hat, fit.sigma_hat);
    std::unique_ptr<FissionPlan> full_plan;
    std::map<std::size_t, FissionPlan> plans;
    std::map<std::pair<int, std::vector<double>>, std::shared_ptr<const ComponentTable>> tables;
    std::map<std::vector<double>, EmFit> em_fits;
    // selections keyed by (h, class kind, grid, scarce policy)
    std::map<std::string, SelectionResult> selections;

    auto plan_for = [&](std::size_t h) -> const FissionPlan& {
        if (!full_plan) full_plan = std::make_unique<FissionPlan>(build_fission_plan(design, 1));
        auto it = plans.find(h);
        if (it == plans.end()) it = plans.emplace(h, rethreshold(*full_plan, h)).first;
        return it->second;
    };
    auto em_for = [&](const std::vector<double>& grid) -> const EmFit& {
        auto it = em_fits.find(grid);
        if (it == em_fits.end()) it = em_fits.emplace(grid, gmodel_fit(stats, fit, grid)).first;
        return it->second;
    };
    auto selection_for = [&](const MethodSpec& spec, const FissionPlan& plan) -> const SelectionResult& {
        std::string key = std::to_string(plan.h) + "|" + std::to_string(static_cast<int>(spec.cls.kind)) + "|" +
                          std::to_string(static_cast<int>(spec.select.scarce));
        for (double x : spec.cls.grid) key += "," + std::to_string(x);
        auto it = selections.find(key);
        if (it != selections.end()) return it->second;
        std::shared_ptr<const ComponentTable> table;
        if (spec.cls.is_mixture()) {
            const auto tkey = std::make_pair(static_cast<int>(spec.cls.kind), spec.cls.grid);
            auto tt = tables.find(tkey);
            if (tt == tables.end())
                tt = tables.emplace(tkey, build_risk_table(class_components(spec.cls), stats, plan_for(1), design,
                                                           fit.sigma_hat, spec.select.risk))
                         .first;
            table = tt->second;
        }
        const bool scarce = resolve_scarce(spec.select.scarce, design);
        return selections.emplace(key, select_with_plan(spec.cls, stats, plan, design, fit, scarce, table, spec.select))
            .first->second;
    };

    std::vector<MethodResult> out;
    for (const auto& spec : specs) {
        MethodResult res;
        res.spec = spec;
        try {
            Prde prde;
            switch (spec.kind) {
            case MethodKind::Oracle:
                prde = true_density_prde(truth, design);
                break;
            case MethodKind::Bayes:
                prde = bayes_prde(truth.g0, stats, fit, design);
                break;
            case MethodKind::Uniform:
                prde = bayes_prde(UniformPrior{}, stats, fit, design);
                break;
            case MethodKind::Proposed:
            case MethodKind::ProposedModified: {
                const FissionPlan& plan = plan_for(spec.h.resolve(design.n()));
                const SelectionResult& sel = selection_for(spec, plan);
                res.selection = sel;
                prde = spec.kind == MethodKind::Proposed ? bayes_prde(sel.g_hat, stats, fit, design)
                                                         : modified_prde(sel.g_hat, stats, fit, design, plan);
                break;
            }
            case MethodKind::GModel:
                res.em = em_for(spec.em_grid);
                prde = gmodel_plugin_density(*res.em, stats, fit, design);
                break;
            case MethodKind::GModelBayes:
                res.em = em_for(spec.em_grid);
                prde = gmodel_bayes_density(*res.em, stats, fit, design);
                break;
            case MethodKind::Naive:
                prde = naive_plugin_density(stats, fit, design);
                break;
            }
            res.loss = kl_loss_prde(prde, truth, design, nodes);
        } catch (const std::exception& e) {
            res.failed = true;
            res.error = e.what();
        }
        out.push_back(std::move(res));
    }
    return out;
}

RiskReport risk_of_method(const MethodSpec& spec, const TruthFamily& family, const Design& design, std::size_t reps,
                          std::uint64_t seed, std::size_t nodes)
{
    if (reps < 2) throw std::invalid_argument("risk_of_method: need at least two replications");
    if (!family.redraw_gamma && family.fixed_gamma.size() != design.n())
        throw std::invalid_argument("risk_of_method: fixed gamma has the wrong length");
    RiskReport report;
    report.method = spec.label();
    std::vector<double> losses, excess;
    MethodSpec bayes;
    bayes.kind = MethodKind::Bayes;
    for (std::size_t r = 0; r < reps; ++r) {
        ModelTruth truth;
        if (family.redraw_gamma) {
            auto trng = seed_stream(seed, "truth", r);
            truth = draw_truth(family.g0, design.n(), family.beta, family.sigma, trng);
        } else {
            truth = ModelTruth{family.beta, family.sigma, family.fixed_gamma, family.g0};
        }
        auto drng = seed_stream(seed, "data", r);
        const Dataset data = simulate(design, truth, drng);
        try {
            auto frng = seed_stream(seed, "fit", r);
            const FitResult fit = fit_parameters(family.mode, truth, data, design, frng);
            const auto res = evaluate_methods({spec}, design, truth, data, fit, nodes).front();
            if (res.failed) throw std::runtime_error(res.error);
            const auto ref = evaluate_methods({bayes}, design, truth, data, known_fit(truth.beta, truth.sigma), nodes).front();
            if (ref.failed) throw std::runtime_error(ref.error);
            losses.push_back(res.loss);
            excess.push_back(res.loss - ref.loss);
        } catch (const std::exception& e) {
            ++report.failures;
            report.errors.push_back("rep " + std::to_string(r) + ": " + e.what());
        }
    }
    report.reps = losses.size();
    report.risk = mean_se(losses);
    report.excess = mean_se(excess);
    return report;
}

}  // namespace ebprde
