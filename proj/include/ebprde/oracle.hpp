#pragma once

#include "ebprde/eb_select.hpp"
#include "ebprde/estimators.hpp"
#include "ebprde/fission.hpp"
#include "ebprde/lmm.hpp"
#include "ebprde/numerics.hpp"
#include "ebprde/prior.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace ebprde {

// log predictive density of future coordinate (unit i, replicate k) at y;
// callbacks built here keep a reference to the design
using Prde = std::function<double(std::size_t i, std::size_t k, double y)>;

// Exact risk terms at known (beta, sigma, gamma). With `scope` the sums run
// over the flagged coordinates only and are normalized by their count.
RiskBreakdown true_risk_decomposed(const ModelTruth& truth, const Design& design, const Prior& g,
                                   std::size_t nodes = 61, const std::vector<char>* scope = nullptr);

// R1 - R2 for the prior N(0, tau) in closed form
double gaussian_prior_risk_difference(const Design& design, const std::vector<double>& gamma, double tau, double sigma);

double kl_loss_prde(const Prde& prde, const ModelTruth& truth, const Design& design, std::size_t nodes = 61);

Prde true_density_prde(const ModelTruth& truth, const Design& design);

// p[beta_hat, sigma_hat, g] on every coordinate
Prde bayes_prde(const Prior& g, const SuffStats& stats, const FitResult& fit, const Design& design);

// p[beta_hat, sigma_hat, g] on improved coordinates, flat-prior predictive elsewhere
Prde modified_prde(const Prior& g, const SuffStats& stats, const FitResult& fit, const Design& design,
                   const FissionPlan& plan);

// kappa^{-1} sum over improved coordinates of E_{gamma ~ g0} E[log tilde m_g(W)],
// W | gamma ~ N(v gamma / sigma, v^2/(u^2 + v^2)): the mean of r2_hat when gamma is i.i.d. g0
double exchangeable_r2_target(const Prior& g0, const Prior& g, const FissionPlan& plan, const Design& design,
                              double sigma, std::size_t nodes = 61);

MeanSe bayes_risk(const Prior& g0, const Design& design, std::size_t reps, std::size_t nodes, std::uint64_t seed,
                  double sigma = 1.0);

// argmin over the class of the true risk; mixture classes by exponentiated gradient
Prior oracle_select(const ClassSpec& cls, const ModelTruth& truth, const Design& design, std::size_t nodes = 61,
                    const std::vector<char>* scope = nullptr);

}  // namespace ebprde
