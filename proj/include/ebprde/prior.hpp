#pragma once

#include <string>
#include <variant>
#include <vector>

namespace ebprde {

struct UniformPrior {};

// (1 - eta) delta_0 + eta * Laplace(rate a)
struct SpikeSlabPrior {
    double eta = 0.5;
    double a = 1.0;
};

// sum_l weights[l] * N(0, variances[l])
struct GaussMixPrior {
    std::vector<double> weights;
    std::vector<double> variances;
};

// sum_l weights[l] * delta_{support[l]}
struct DiscretePrior {
    std::vector<double> weights;
    std::vector<double> support;
};

// N(0, tau), tau a variance
struct GaussianScalarPrior {
    double tau = 1.0;
};

using Prior = std::variant<UniformPrior, SpikeSlabPrior, GaussMixPrior, DiscretePrior, GaussianScalarPrior>;

struct HyperBox {
    double eta_lo = 0.01, eta_hi = 0.99;
    double a_lo = 0.1, a_hi = 10.0;
};

void validate_prior(const Prior& g, const HyperBox& box = {});
bool is_proper(const Prior& g);
std::string prior_kind(const Prior& g);

Prior point_mass(double at = 0.0);

// log int phi(x; m, s) g(x) dx; for the flat prior this is 0
double log_gauss_integral(const Prior& g, double m, double s);

// E[gamma | data] when the likelihood of gamma is proportional to phi(gamma; m, s)
double posterior_mean_gauss(const Prior& g, double m, double s);

}  // namespace ebprde
