#include "ebprde/oracle.hpp"

#include "ebprde/marginals.hpp"
#include "ebprde/objective.hpp"
#include "ebprde/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ebprde {

namespace {

void check_truth(const ModelTruth& truth, const Design& design)
{
    if (truth.gamma.size() != design.n()) throw std::invalid_argument("truth: gamma length differs from n");
    if (truth.beta.size() != design.d) throw std::invalid_argument("truth: beta length differs from design dimension");
    if (!(truth.sigma > 0.0)) throw std::invalid_argument("truth: sigma must be positive");
}

}  // namespace

RiskBreakdown true_risk_decomposed(const ModelTruth& truth, const Design& design, const Prior& g, std::size_t nodes,
                                   const std::vector<char>* scope)
{
    check_truth(truth, design);
    const auto coords = future_coordinates(design);
    if (scope && scope->size() != coords.size()) throw std::invalid_argument("true_risk_decomposed: scope size mismatch");
    const auto& gh = normal_panels(nodes);
    const double sigma = truth.sigma;
    CompensatedSum an, r1, r2;
    std::size_t count = 0;
    for (std::size_t c = 0; c < coords.size(); ++c) {
        if (scope && !(*scope)[c]) continue;
        ++count;
        const auto [i, k] = coords[c];
        const double u = design.units[i].u_agg, v = design.units[i].v[k];
        const double gam = truth.gamma[i];
        an.add(0.5 * std::log1p(v * v / (u * u)));
        if (!is_proper(g)) continue;
        CompensatedSum s1, s2;
        const double sd_w = sd_m_tilde(u, v);
        for (std::size_t q = 0; q < gh.size(); ++q) {
            const double z = gam / sigma + gh.nodes[q] / u;
            s1.add(gh.weights[q] * log_marginal_m(g, v * z, u, v, sigma));
            s2.add(gh.weights[q] * log_marginal_m_tilde(g, v * gam / sigma + sd_w * gh.nodes[q], u, v, sigma));
        }
        r1.add(s1.value());
        r2.add(s2.value());
    }
    if (count == 0) throw std::invalid_argument("true_risk_decomposed: empty coordinate scope");
    RiskBreakdown out;
    const double norm = static_cast<double>(count);
    out.a_n = an.value() / norm;
    out.r1_hat = r1.value() / norm;
    out.r2_hat = r2.value() / norm;
    out.total = out.a_n + out.r1_hat - out.r2_hat;
    out.scarce_mode = scope != nullptr;
    return out;
}

double gaussian_prior_risk_difference(const Design& design, const std::vector<double>& gamma, double tau, double sigma)
{
    if (gamma.size() != design.n()) throw std::invalid_argument("gaussian_prior_risk_difference: gamma length differs from n");
    if (!(tau > 0.0) || !(sigma > 0.0)) throw std::invalid_argument("gaussian_prior_risk_difference: tau and sigma must be positive");
    // prior N(0, tau) on gamma is N(0, s) on gamma / sigma
    const double s = tau / (sigma * sigma);
    CompensatedSum acc;
    for (const auto& [i, k] : future_coordinates(design)) {
        const double u2 = design.units[i].u_agg * design.units[i].u_agg;
        const double v2 = design.units[i].v[k] * design.units[i].v[k];
        const double g2 = gamma[i] * gamma[i] / (sigma * sigma);
        const double log_term = std::log((s + 1.0 / u2) * (u2 + v2) / (s * (u2 + v2) + 1.0));
        const double quad_term = v2 * (s - g2) / ((s * u2 + 1.0) * (s * (u2 + v2) + 1.0));
        acc.add(log_term + quad_term);
    }
    return -acc.value() / (2.0 * static_cast<double>(design.kappa()));
}

double kl_loss_prde(const Prde& prde, const ModelTruth& truth, const Design& design, std::size_t nodes)
{
    check_truth(truth, design);
    const auto& gh = gauss_hermite(nodes);
    CompensatedSum total;
    for (const auto& [i, k] : future_coordinates(design)) {
        const double mu = future_mean(design, truth, i, k);
        CompensatedSum s;
        for (std::size_t q = 0; q < gh.size(); ++q) {
            const double y = mu + truth.sigma * gh.nodes[q];
            const double lp = prde(i, k, y);
            if (!std::isfinite(lp)) throw std::runtime_error("kl_loss_prde: non-finite predictive log-density");
            s.add(gh.weights[q] * (log_phi(y, mu, truth.sigma) - lp));
        }
        total.add(s.value());
    }
    return total.value() / static_cast<double>(design.kappa());
}

Prde true_density_prde(const ModelTruth& truth, const Design& design)
{
    return [truth, &design](std::size_t i, std::size_t k, double y) {
        return log_phi(y, future_mean(design, truth, i, k), truth.sigma);
    };
}

Prde bayes_prde(const Prior& g, const SuffStats& stats, const FitResult& fit, const Design& design)
{
    return [g, z = stats.z, fit, &design](std::size_t i, std::size_t k, double y) {
        return posterior_predictive_logpdf(g, z[i], design.units[i].u_agg, design.units[i].v[k],
                                           future_offset(design, fit.beta_hat, i, k), fit.sigma_hat, y);
    };
}

Prde modified_prde(const Prior& g, const SuffStats& stats, const FitResult& fit, const Design& design,
                   const FissionPlan& plan)
{
    std::vector<std::vector<char>> use(design.n());
    for (std::size_t i = 0; i < design.n(); ++i) use[i].assign(design.units[i].v.size(), 0);
    for (std::size_t c = 0; c < plan.coords.size(); ++c)
        if (plan.improved[c]) use[plan.coords[c].unit][plan.coords[c].k] = 1;
    return [g, z = stats.z, fit, &design, use = std::move(use)](std::size_t i, std::size_t k, double y) {
        const Prior& prior = use[i][k] ? g : Prior{UniformPrior{}};
        return posterior_predictive_logpdf(prior, z[i], design.units[i].u_agg, design.units[i].v[k],
                                           future_offset(design, fit.beta_hat, i, k), fit.sigma_hat, y);
    };
}

double exchangeable_r2_target(const Prior& g0, const Prior& g, const FissionPlan& plan, const Design& design,
                              double sigma, std::size_t nodes)
{
    if (!is_proper(g)) return 0.0;
    const auto& gh = gauss_hermite(nodes);
    CompensatedSum total;
    for (std::size_t c = 0; c < plan.coords.size(); ++c) {
        if (!plan.improved[c]) continue;
        const auto [i, k] = plan.coords[c];
        const double u = design.units[i].u_agg, v = design.units[i].v[k];
        const double sd_w = sd_m_tilde(u, v);
        total.add(expect_over_prior(
            g0,
            [&](double gam) {
                CompensatedSum s;
                for (std::size_t q = 0; q < gh.size(); ++q)
                    s.add(gh.weights[q] * log_marginal_m_tilde(g, v * gam / sigma + sd_w * gh.nodes[q], u, v, sigma));
                return s.value();
            },
            nodes));
    }
    return total.value() / static_cast<double>(design.kappa());
}

MeanSe bayes_risk(const Prior& g0, const Design& design, std::size_t reps, std::size_t nodes, std::uint64_t seed,
                  double sigma)
{
    if (!is_proper(g0)) throw std::invalid_argument("bayes_risk: generating prior must be proper");
    if (reps == 0) throw std::invalid_argument("bayes_risk: need at least one replication");
    // a point mass leaves nothing random
    if (const auto* p = std::get_if<DiscretePrior>(&g0); p && p->weights.size() == 1) reps = 1;
    std::vector<double> vals;
    vals.reserve(reps);
    for (std::size_t r = 0; r < reps; ++r) {
        auto rng = seed_stream(seed, "bayes_risk", r);
        const ModelTruth truth = draw_truth(g0, design.n(), std::vector<double>(design.d, 0.0), sigma, rng);
        vals.push_back(true_risk_decomposed(truth, design, g0, nodes).total);
    }
    return mean_se(vals);
}

Prior oracle_select(const ClassSpec& cls, const ModelTruth& truth, const Design& design, std::size_t nodes,
                    const std::vector<char>* scope)
{
    cls.validate();
    check_truth(truth, design);
    if (cls.kind == ClassSpec::Kind::Uniform) return UniformPrior{};
    if (cls.is_mixture()) {
        const auto components = class_components(cls);
        const auto coords = future_coordinates(design);
        const auto& gh = normal_panels(nodes);
        auto table = std::make_shared<ComponentTable>();
        table->L = components.size();
        std::vector<double> row(components.size());
        std::vector<double> weights;
        double norm = 0.0;
        CompensatedSum an;
        for (std::size_t c = 0; c < coords.size(); ++c)
            if (!scope || (*scope)[c]) norm += 1.0;
        if (norm == 0.0) throw std::invalid_argument("oracle_select: empty coordinate scope");
        for (int term = 0; term < 2; ++term)
            for (std::size_t c = 0; c < coords.size(); ++c) {
                table->begin_block();
                const bool in = !scope || (*scope)[c];
                weights.push_back(in ? (term == 0 ? 1.0 : -1.0) / norm : 0.0);
                const auto [i, k] = coords[c];
                const double u = design.units[i].u_agg, v = design.units[i].v[k];
                const double gam = truth.gamma[i];
                if (term == 0 && in) an.add(0.5 * std::log1p(v * v / (u * u)));
                for (std::size_t q = 0; q < gh.size(); ++q) {
                    for (std::size_t l = 0; l < components.size(); ++l)
                        row[l] = term == 0 ? log_marginal_m(components[l], v * (gam / truth.sigma + gh.nodes[q] / u), u, v, truth.sigma)
                                           : log_marginal_m_tilde(components[l], v * gam / truth.sigma + sd_m_tilde(u, v) * gh.nodes[q],
                                                                  u, v, truth.sigma);
                    table->add_row(row, gh.weights[q]);
                }
            }
        table->end_blocks();
        const MixtureObjective objective(table, std::move(weights), an.value() / norm);
        return mixture_prior(cls, fit_mixture_weights(objective).weights);
    }
    auto evaluate = [&](const Prior& g) { return true_risk_decomposed(truth, design, g, nodes, scope).total; };
    if (cls.kind == ClassSpec::Kind::SpikeSlab) {
        const GridFit gf = fit_spike_slab(cls.eta_grid, cls.a_grid, evaluate);
        return SpikeSlabPrior{gf.eta, gf.a};
    }
    Prior best = GaussianScalarPrior{cls.grid.front()};
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<double> taus = cls.grid;
    std::sort(taus.begin(), taus.end());
    for (double t : taus) {
        const double val = evaluate(GaussianScalarPrior{t});
        if (val < best_val) {
            best_val = val;
            best = GaussianScalarPrior{t};
        }
    }
    return best;
}

}  // namespace ebprde
