#include "ebprde/baselines.hpp"

#include "ebprde/numerics.hpp"

#include <cmath>
#include <stdexcept>

namespace ebprde {

Prde naive_plugin_density(const SuffStats& stats, const FitResult& fit, const Design& design)
{
    std::vector<double> gamma_hat(stats.z.size());
    for (std::size_t i = 0; i < gamma_hat.size(); ++i) gamma_hat[i] = fit.sigma_hat * stats.z[i];
    return [gamma_hat = std::move(gamma_hat), fit, &design](std::size_t i, std::size_t k, double y) {
        const double mean = future_offset(design, fit.beta_hat, i, k) + design.units[i].v[k] * gamma_hat[i];
        return log_phi(y, mean, fit.sigma_hat);
    };
}

namespace {

double em_loglik(const std::vector<double>& gt, const std::vector<double>& tau2, const std::vector<double>& grid,
                 const std::vector<double>& pi, std::vector<double>* resp)
{
    const std::size_t L = grid.size();
    CompensatedSum ll;
    std::vector<double> terms(L);
    for (std::size_t i = 0; i < gt.size(); ++i) {
        for (std::size_t l = 0; l < L; ++l)
            terms[l] = pi[l] > 0.0 ? std::log(pi[l]) + log_phi(gt[i], 0.0, std::sqrt(grid[l] + tau2[i])) : kNegInf;
        const double lz = log_sum_exp(terms);
        ll.add(lz);
        if (resp)
            for (std::size_t l = 0; l < L; ++l) (*resp)[i * L + l] = std::exp(terms[l] - lz);
    }
    return ll.value();
}

}  // namespace

EmFit gmodel_em(const std::vector<double>& gamma_tilde, const std::vector<double>& tau2,
                const std::vector<double>& variance_grid, double tol, std::size_t max_iter)
{
    const std::size_t L = variance_grid.size();
    if (L == 0) throw std::invalid_argument("gmodel_em: empty variance grid");
    if (gamma_tilde.size() != tau2.size() || gamma_tilde.empty()) throw std::invalid_argument("gmodel_em: data size mismatch");
    for (double t : tau2)
        if (!(t > 0.0)) throw std::invalid_argument("gmodel_em: per-unit variances must be positive");
    for (double v : variance_grid)
        if (!(v >= 0.0)) throw std::invalid_argument("gmodel_em: negative grid variance");
    EmFit fit;
    fit.variance_grid = variance_grid;
    std::vector<double> pi(L, 1.0 / static_cast<double>(L));
    std::vector<double> resp(gamma_tilde.size() * L);
    double ll = em_loglik(gamma_tilde, tau2, variance_grid, pi, &resp);
    if (std::isnan(ll)) throw std::runtime_error("gmodel_em: NaN likelihood");
    fit.loglik_trace.push_back(ll);
    for (std::size_t it = 0; it < max_iter; ++it) {
        ++fit.iterations;
        for (std::size_t l = 0; l < L; ++l) {
            CompensatedSum s;
            for (std::size_t i = 0; i < gamma_tilde.size(); ++i) s.add(resp[i * L + l]);
            pi[l] = s.value() / static_cast<double>(gamma_tilde.size());
        }
        double total = 0.0;
        for (double p : pi) total += p;
        for (double& p : pi) p /= total;
        const double next = em_loglik(gamma_tilde, tau2, variance_grid, pi, &resp);
        if (std::isnan(next)) throw std::runtime_error("gmodel_em: NaN likelihood");
        fit.loglik_trace.push_back(next);
        const double delta = next - ll;
        ll = next;
        if (std::abs(delta) < tol) {
            fit.converged = true;
            break;
        }
    }
    fit.weights = pi;
    return fit;
}

EmFit gmodel_fit(const SuffStats& stats, const FitResult& fit, const std::vector<double>& variance_grid, double tol,
                 std::size_t max_iter)
{
    std::vector<double> gt(stats.z.size()), tau2(stats.z.size());
    for (std::size_t i = 0; i < gt.size(); ++i) {
        gt[i] = fit.sigma_hat * stats.z[i];
        tau2[i] = fit.sigma_hat * fit.sigma_hat / (stats.u_agg[i] * stats.u_agg[i]);
    }
    return gmodel_em(gt, tau2, variance_grid, tol, max_iter);
}

Prde gmodel_plugin_density(const EmFit& em, const SuffStats& stats, const FitResult& fit, const Design& design)
{
    const Prior g = em.prior();
    std::vector<double> gamma_hat(stats.z.size());
    for (std::size_t i = 0; i < gamma_hat.size(); ++i)
        gamma_hat[i] = posterior_mean_gauss(g, fit.sigma_hat * stats.z[i], fit.sigma_hat / stats.u_agg[i]);
    return [gamma_hat = std::move(gamma_hat), fit, &design](std::size_t i, std::size_t k, double y) {
        const double mean = future_offset(design, fit.beta_hat, i, k) + design.units[i].v[k] * gamma_hat[i];
        return log_phi(y, mean, fit.sigma_hat);
    };
}

Prde gmodel_bayes_density(const EmFit& em, const SuffStats& stats, const FitResult& fit, const Design& design)
{
    return bayes_prde(em.prior(), stats, fit, design);
}

}  // namespace ebprde
