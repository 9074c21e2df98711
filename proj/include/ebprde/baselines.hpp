#pragma once

#include "ebprde/estimators.hpp"
#include "ebprde/oracle.hpp"
#include "ebprde/prior.hpp"

#include <cstddef>
#include <vector>

namespace ebprde {

struct EmFit {
    std::vector<double> weights;
    std::vector<double> variance_grid;
    std::vector<double> loglik_trace;
    std::size_t iterations = 0;
    bool converged = false;

    Prior prior() const { return GaussMixPrior{weights, variance_grid}; }
};

// N(x~'beta_hat + v sigma_hat Z_i, sigma_hat)
Prde naive_plugin_density(const SuffStats& stats, const FitResult& fit, const Design& design);

// EM for weights of sum_l pi_l N(0, nu_l) given gamma_tilde_i ~ N(gamma_i, tau2_i)
EmFit gmodel_em(const std::vector<double>& gamma_tilde, const std::vector<double>& tau2,
                const std::vector<double>& variance_grid, double tol = 1e-8, std::size_t max_iter = 500);

// gamma_tilde_i = sigma_hat Z_i, tau2_i = sigma_hat^2 / u_i^2
EmFit gmodel_fit(const SuffStats& stats, const FitResult& fit, const std::vector<double>& variance_grid,
                 double tol = 1e-8, std::size_t max_iter = 500);

// N(x~'beta_hat + v E[gamma_i | gamma_tilde_i], sigma_hat), posterior mean under the fitted mixture
Prde gmodel_plugin_density(const EmFit& em, const SuffStats& stats, const FitResult& fit, const Design& design);

// full posterior predictive under the fitted mixture
Prde gmodel_bayes_density(const EmFit& em, const SuffStats& stats, const FitResult& fit, const Design& design);

}  // namespace ebprde
