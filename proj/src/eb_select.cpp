#include "ebprde/eb_select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ebprde {

ClassSpec ClassSpec::uniform() { return ClassSpec{Kind::Uniform, {}, {}, {}}; }
ClassSpec ClassSpec::gauss_mix(std::vector<double> variances) { return ClassSpec{Kind::GaussMix, std::move(variances), {}, {}}; }
ClassSpec ClassSpec::discrete(std::vector<double> support) { return ClassSpec{Kind::Discrete, std::move(support), {}, {}}; }
ClassSpec ClassSpec::gaussian_scalar(std::vector<double> taus) { return ClassSpec{Kind::GaussianScalar, std::move(taus), {}, {}}; }
ClassSpec ClassSpec::spike_slab(std::vector<double> eta_grid, std::vector<double> a_grid)
{
    return ClassSpec{Kind::SpikeSlab, {}, std::move(eta_grid), std::move(a_grid)};
}
ClassSpec ClassSpec::spike_slab_default(const HyperBox& box, std::size_t points)
{
    return spike_slab(log_spaced(box.eta_lo, box.eta_hi, points), log_spaced(box.a_lo, box.a_hi, points));
}

void ClassSpec::validate() const
{
    switch (kind) {
    case Kind::Uniform:
        return;
    case Kind::GaussMix:
        if (grid.empty()) throw std::invalid_argument("class: empty variance grid");
        for (double v : grid)
            if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("class: bad variance in grid");
        return;
    case Kind::Discrete:
        if (grid.empty()) throw std::invalid_argument("class: empty support");
        for (double t : grid)
            if (!std::isfinite(t)) throw std::invalid_argument("class: non-finite atom");
        return;
    case Kind::GaussianScalar:
        if (grid.empty()) throw std::invalid_argument("class: empty tau grid");
        for (double t : grid)
            if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("class: bad tau in grid");
        return;
    case Kind::SpikeSlab:
        if (eta_grid.empty() || a_grid.empty()) throw std::invalid_argument("class: empty spike-and-slab grid");
        for (double e : eta_grid)
            if (!(e > 0.0 && e < 1.0)) throw std::invalid_argument("class: eta outside (0, 1)");
        for (double a : a_grid)
            if (!(a > 0.0) || !std::isfinite(a)) throw std::invalid_argument("class: slab rate must be positive");
        return;
    }
}

std::vector<double> log_spaced(double lo, double hi, std::size_t points)
{
    if (points == 0 || !(lo > 0.0) || !(hi >= lo)) throw std::invalid_argument("log_spaced: bad range");
    std::vector<double> out(points);
    if (points == 1) {
        out[0] = lo;
        return out;
    }
    const double a = std::log(lo), b = std::log(hi);
    for (std::size_t t = 0; t < points; ++t)
        out[t] = std::exp(a + (b - a) * static_cast<double>(t) / static_cast<double>(points - 1));
    out.front() = lo;
    out.back() = hi;
    return out;
}

std::vector<Prior> class_components(const ClassSpec& cls)
{
    std::vector<Prior> out;
    if (cls.kind == ClassSpec::Kind::GaussMix)
        for (double v : cls.grid) out.push_back(GaussMixPrior{{1.0}, {v}});
    else if (cls.kind == ClassSpec::Kind::Discrete)
        for (double t : cls.grid) out.push_back(DiscretePrior{{1.0}, {t}});
    else
        throw std::invalid_argument("class_components: not a mixture class");
    return out;
}

Prior mixture_prior(const ClassSpec& cls, const std::vector<double>& weights)
{
    if (cls.kind == ClassSpec::Kind::GaussMix) return GaussMixPrior{weights, cls.grid};
    if (cls.kind == ClassSpec::Kind::Discrete) return DiscretePrior{weights, cls.grid};
    throw std::invalid_argument("mixture_prior: not a mixture class");
}

namespace {

void renormalize(std::vector<double>& pi)
{
    double s = 0.0;
    for (double p : pi) s += p;
    for (double& p : pi) p /= s;
}

}  // namespace

MixtureFit fit_mixture_weights(const MixtureObjective& objective, std::vector<double> init, std::size_t max_iter,
                               double tol)
{
    const std::size_t L = objective.components();
    if (L == 0) throw std::invalid_argument("fit_mixture_weights: empty class");
    if (init.empty()) init.assign(L, 1.0 / static_cast<double>(L));
    if (init.size() != L) throw std::invalid_argument("fit_mixture_weights: init has the wrong length");
    for (double p : init)
        if (!(p > 0.0)) throw std::invalid_argument("fit_mixture_weights: init must lie in the open simplex");
    renormalize(init);

    MixtureFit out;
    std::vector<double> pi = std::move(init), grad(L), cand(L), cand_grad(L);
    double f = objective.value_and_gradient(pi, grad);
    out.trace.push_back(f);
    double last_step = 0.5;
    for (std::size_t it = 0; it < max_iter; ++it) {
        ++out.iterations;
        const double gmin = *std::min_element(grad.begin(), grad.end());
        double step = std::min(2.0 * last_step, 1e6);
        bool accepted = false;
        double fc = f;
        for (int halving = 0; halving < 60; ++halving, step *= 0.5) {
            for (std::size_t l = 0; l < L; ++l) cand[l] = pi[l] * std::exp(-step * (grad[l] - gmin));
            renormalize(cand);
            fc = objective.value_and_gradient(cand, cand_grad);
            if (fc <= f) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            out.converged = true;
            break;
        }
        const double decrease = f - fc;
        last_step = step;
        pi.swap(cand);
        grad.swap(cand_grad);
        f = fc;
        out.trace.push_back(f);
        if (decrease < tol) {
            out.converged = true;
            break;
        }
    }
    out.weights = std::move(pi);
    return out;
}

GridFit fit_spike_slab(const std::vector<double>& grid_eta, const std::vector<double>& grid_a,
                       const std::function<double(const Prior&)>& objective)
{
    if (grid_eta.empty() || grid_a.empty()) throw std::invalid_argument("fit_spike_slab: empty grid");
    std::vector<double> etas = grid_eta, as = grid_a;
    std::sort(etas.begin(), etas.end());
    std::sort(as.begin(), as.end());
    GridFit best;
    best.value = std::numeric_limits<double>::infinity();
    for (double eta : etas)
        for (double a : as) {
            const double val = objective(SpikeSlabPrior{eta, a});
            if (std::isnan(val)) throw std::runtime_error("fit_spike_slab: NaN objective");
            if (val < best.value) {
                best.value = val;
                best.eta = eta;
                best.a = a;
            }
            best.trace.push_back(best.value);
        }
    return best;
}

bool resolve_scarce(ScarcePolicy policy, const Design& design)
{
    switch (policy) {
    case ScarcePolicy::Normal:
        return false;
    case ScarcePolicy::Scarce:
        return true;
    case ScarcePolicy::Auto:
        break;
    }
    return default_scarce_mode(design);
}

SelectionResult select_with_plan(const ClassSpec& cls, const SuffStats& stats, const FissionPlan& plan,
                                  const Design& design, const FitResult& fit, bool scarce_mode,
                                  std::shared_ptr<const ComponentTable> table, const SelectOptions& opts)
{
    cls.validate();
    SelectionResult out;
    const double sigma = fit.sigma_hat;
    if (cls.kind == ClassSpec::Kind::Uniform || (scarce_mode && plan.improved_count == 0)) {
        out.no_improved_coordinates = cls.kind != ClassSpec::Kind::Uniform;
        out.g_hat = UniformPrior{};
        out.risk_at_opt = risk_hat(UniformPrior{}, stats, plan, design, sigma, scarce_mode && plan.improved_count > 0, opts.risk);
        out.trace.push_back(out.risk_at_opt.total);
        out.iterations = 1;
        out.converged = cls.kind == ClassSpec::Kind::Uniform;
        return out;
    }
    if (cls.is_mixture()) {
        if (!table) table = build_risk_table(class_components(cls), stats, plan, design, sigma, opts.risk);
        const MixtureObjective objective = risk_objective(table, plan, design, scarce_mode);
        MixtureFit mf = fit_mixture_weights(objective, opts.init, opts.max_iter, opts.tol);
        out.weights = mf.weights;
        out.g_hat = mixture_prior(cls, mf.weights);
        out.trace = std::move(mf.trace);
        out.iterations = mf.iterations;
        out.converged = mf.converged;
        out.risk_at_opt = risk_breakdown(table, plan, design, scarce_mode, out.weights);
        return out;
    } else {
        auto evaluate = [&](const Prior& g) { return risk_hat(g, stats, plan, design, sigma, scarce_mode, opts.risk).total; };
        if (cls.kind == ClassSpec::Kind::SpikeSlab) {
            GridFit gf = fit_spike_slab(cls.eta_grid, cls.a_grid, evaluate);
            out.g_hat = SpikeSlabPrior{gf.eta, gf.a};
            out.trace = std::move(gf.trace);
        } else {
            std::vector<double> taus = cls.grid;
            std::sort(taus.begin(), taus.end());
            double best = std::numeric_limits<double>::infinity();
            for (double t : taus) {
                const double val = evaluate(GaussianScalarPrior{t});
                if (std::isnan(val)) throw std::runtime_error("select: NaN objective");
                if (val < best) {
                    best = val;
                    out.g_hat = GaussianScalarPrior{t};
                }
                out.trace.push_back(best);
            }
        }
        out.iterations = out.trace.size();
        out.converged = true;
    }
    out.risk_at_opt = risk_hat(out.g_hat, stats, plan, design, sigma, scarce_mode, opts.risk);
    return out;
}

SelectionResult select(const ClassSpec& cls, const Dataset& data, const Design& design, const FitResult& fit,
                       const HPolicy& h_policy, const SelectOptions& opts)
{
    const SuffStats stats = aggregate_stats(data, design, fit.beta_hat, fit.sigma_hat);
    const FissionPlan plan = build_fission_plan(design, h_policy.resolve(design.n()));
    return select_with_plan(cls, stats, plan, design, fit, resolve_scarce(opts.scarce, design), nullptr, opts);
}

}  // namespace ebprde
