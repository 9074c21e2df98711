#include "ebprde/marginals.hpp"

#include "ebprde/numerics.hpp"
#include "ebprde/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace ebprde {

namespace {

void check_scales(double u, double v, double sigma)
{
    if (!(u > 0.0) || !(v > 0.0) || !(sigma > 0.0) || !std::isfinite(u) || !std::isfinite(v) || !std::isfinite(sigma))
        throw std::invalid_argument("marginal: u, v and sigma must be positive and finite");
}

void require_proper(const Prior& g)
{
    if (!is_proper(g)) throw std::invalid_argument("marginal: flat prior has no proper marginal");
}

// log int phi(a; c*gamma, sd) N(gamma; 0, var) d gamma by Gauss-Hermite,
// integrating against whichever Gaussian factor is narrower in gamma
double gh_gauss_component(double a, double c, double sd, double var, const QuadratureRule& rule)
{
    if (var == 0.0) return log_phi(a, 0.0, sd);
    const double prior_sd = std::sqrt(var);
    const double kernel_sd = sd / c;
    std::vector<double> terms(rule.size());
    if (prior_sd <= kernel_sd) {
        for (std::size_t q = 0; q < rule.size(); ++q)
            terms[q] = std::log(rule.weights[q]) + log_phi(a, c * prior_sd * rule.nodes[q], sd);
    } else {
        // phi(a; c g, sd) = phi(g; a/c, sd/c) / c
        for (std::size_t q = 0; q < rule.size(); ++q)
            terms[q] = std::log(rule.weights[q]) + log_phi(a / c + kernel_sd * rule.nodes[q], 0.0, prior_sd);
        return log_sum_exp(terms) - std::log(c);
    }
    return log_sum_exp(terms);
}

// log int_0^inf phi(a; sign c g, sd) (rate/2) e^{-rate g} dg by composite
// Gauss-Legendre on panels placed around the peak of the integrand
double half_line_laplace(double a, double c, double sd, double rate, double sign, std::size_t nodes)
{
    const double m = sign * a / c, s = sd / c;
    auto log_f = [&](double g) { return log_phi(a, sign * c * g, sd) + std::log(0.5 * rate) - rate * g; };
    const double peak = m - rate * s * s;
    double lo = 0.0, hi = 0.0;
    if (peak > 0.0) {
        lo = std::max(0.0, peak - 12.0 * s);
        hi = peak + 12.0 * s;
    } else {
        hi = std::min(12.0 * s, 40.0 * s * s / -peak);
    }
    const auto& rule = gauss_legendre(nodes);
    constexpr int panels = 8;
    const double width = (hi - lo) / panels;
    std::vector<double> terms;
    terms.reserve(panels * rule.size());
    for (int p = 0; p < panels; ++p) {
        const double mid = lo + (p + 0.5) * width;
        for (std::size_t q = 0; q < rule.size(); ++q)
            terms.push_back(std::log(rule.weights[q] * width) + log_f(mid + 0.5 * width * rule.nodes[q]));
    }
    return log_sum_exp(terms);
}

}  // namespace

double log_convolve(const Prior& g, double a, double mean_scale, double sd)
{
    require_proper(g);
    if (!(sd > 0.0) || !(mean_scale > 0.0)) throw std::invalid_argument("log_convolve: scales must be positive");
    // phi(a; c g, sd) = phi(g; a/c, sd/c) / c
    return log_gauss_integral(g, a / mean_scale, sd / mean_scale) - std::log(mean_scale);
}

double log_marginal_m(const Prior& g, double a, double u, double v, double sigma)
{
    check_scales(u, v, sigma);
    return log_convolve(g, a, v / sigma, sd_m(u, v));
}

double log_marginal_m_tilde(const Prior& g, double a, double u, double v, double sigma)
{
    check_scales(u, v, sigma);
    return log_convolve(g, a, v / sigma, sd_m_tilde(u, v));
}

double gh_convolve(const Prior& g, double a, double mean_scale, double sd, std::size_t nodes)
{
    require_proper(g);
    if (!(sd > 0.0)) throw std::invalid_argument("gh_convolve: sd must be positive");
    if (!(mean_scale > 0.0)) throw std::invalid_argument("gh_convolve: mean scale must be positive");
    if (nodes < 3) throw std::invalid_argument("gh_convolve: need at least 3 nodes");
    const double c = mean_scale;
    if (const auto* p = std::get_if<DiscretePrior>(&g)) {
        std::vector<double> terms;
        for (std::size_t l = 0; l < p->weights.size(); ++l)
            if (p->weights[l] > 0.0) terms.push_back(std::log(p->weights[l]) + log_phi(a, c * p->support[l], sd));
        return log_sum_exp(terms);
    }
    if (const auto* p = std::get_if<GaussMixPrior>(&g)) {
        const auto& rule = gauss_hermite(nodes);
        std::vector<double> terms;
        for (std::size_t l = 0; l < p->weights.size(); ++l)
            if (p->weights[l] > 0.0)
                terms.push_back(std::log(p->weights[l]) + gh_gauss_component(a, c, sd, p->variances[l], rule));
        return log_sum_exp(terms);
    }
    if (const auto* p = std::get_if<GaussianScalarPrior>(&g)) return gh_gauss_component(a, c, sd, p->tau, gauss_hermite(nodes));
    const auto& p = std::get<SpikeSlabPrior>(g);
    const double spike = std::log1p(-p.eta) + log_phi(a, 0.0, sd);
    const double slab = std::log(p.eta) + log_add_exp(half_line_laplace(a, c, sd, p.a, 1.0, nodes),
                                                        half_line_laplace(a, c, sd, p.a, -1.0, nodes));
    return log_add_exp(spike, slab);
}

double posterior_predictive_logpdf(const Prior& g, double z, double u, double v, double mean_offset, double sigma,
                                   double y)
{
    check_scales(u, v, sigma);
    // likelihood of gamma from the future draw: phi(gamma; m1, s1)/v; from z: phi(gamma; m2, s2)*sigma
    const double m1 = (y - mean_offset) / v;
    const double s1 = sigma / v;
    const double m2 = sigma * z;
    const double s2 = sigma / u;
    const double p1 = 1.0 / (s1 * s1), p2 = 1.0 / (s2 * s2);
    const double s_star = 1.0 / std::sqrt(p1 + p2);
    const double m_star = (p1 * m1 + p2 * m2) / (p1 + p2);
    const double joint = log_phi(m1, m2, std::sqrt(s1 * s1 + s2 * s2));
    if (!is_proper(g)) return joint - std::log(v);
    return joint - std::log(v) + log_gauss_integral(g, m_star, s_star) - log_gauss_integral(g, m2, s2);
}

double expect_over_prior(const Prior& g, const std::function<double(double)>& f, std::size_t nodes)
{
    require_proper(g);
    if (const auto* p = std::get_if<DiscretePrior>(&g)) {
        CompensatedSum s;
        for (std::size_t l = 0; l < p->weights.size(); ++l)
            if (p->weights[l] > 0.0) s.add(p->weights[l] * f(p->support[l]));
        return s.value();
    }
    const auto& gh = gauss_hermite(nodes);
    auto gauss = [&](double var) {
        if (var == 0.0) return f(0.0);
        CompensatedSum s;
        const double sd = std::sqrt(var);
        for (std::size_t q = 0; q < gh.size(); ++q) s.add(gh.weights[q] * f(sd * gh.nodes[q]));
        return s.value();
    };
    if (const auto* p = std::get_if<GaussMixPrior>(&g)) {
        CompensatedSum s;
        for (std::size_t l = 0; l < p->weights.size(); ++l)
            if (p->weights[l] > 0.0) s.add(p->weights[l] * gauss(p->variances[l]));
        return s.value();
    }
    if (const auto* p = std::get_if<GaussianScalarPrior>(&g)) return gauss(p->tau);
    const auto& p = std::get<SpikeSlabPrior>(g);
    const auto& gl = gauss_laguerre(nodes);
    CompensatedSum slab;
    for (std::size_t q = 0; q < gl.size(); ++q) {
        const double x = gl.nodes[q] / p.a;
        slab.add(0.5 * gl.weights[q] * (f(x) + f(-x)));
    }
    return (1.0 - p.eta) * f(0.0) + p.eta * slab.value();
}

}  // namespace ebprde
