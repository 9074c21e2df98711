#pragma once

#include "ebprde/prior.hpp"

#include <cmath>
#include <cstddef>
#include <functional>

namespace ebprde {

// log int phi(a; c * gamma, sd) g(gamma) d gamma, closed form
double log_convolve(const Prior& g, double a, double mean_scale, double sd);

// m_g(a; u, v, sigma): kernel mean v*gamma/sigma, sd v/u
double log_marginal_m(const Prior& g, double a, double u, double v, double sigma);

// tilde m_g(a; u, v, sigma): kernel mean v*gamma/sigma, sd v/sqrt(u^2 + v^2)
double log_marginal_m_tilde(const Prior& g, double a, double u, double v, double sigma);

inline double sd_m(double u, double v) { return v / u; }
inline double sd_m_tilde(double u, double v) { return v / std::sqrt(u * u + v * v); }

// Same integral as log_convolve by quadrature: Gauss-Hermite over Gaussian
// components, composite Gauss-Legendre on each half-line of a Laplace slab, atoms exact.
double gh_convolve(const Prior& g, double a, double mean_scale, double sd, std::size_t nodes = 61);

// log density at y of int phi(y; mean_offset + v gamma, sigma) p(gamma | z) d gamma,
// where p(gamma | z) is proportional to phi(z; gamma/sigma, 1/u) g(gamma)
double posterior_predictive_logpdf(const Prior& g, double z, double u, double v, double mean_offset,
                                   double sigma, double y);

// E_{gamma ~ g} f(gamma); Gaussian parts by Gauss-Hermite, Laplace slab by Gauss-Laguerre
double expect_over_prior(const Prior& g, const std::function<double(double)>& f, std::size_t nodes = 61);

}  // namespace ebprde
