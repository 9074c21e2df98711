#include "ebprde/prior.hpp"

#include "ebprde/numerics.hpp"

#include <cmath>
#include <stdexcept>

namespace ebprde {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_simplex(const std::vector<double>& w, std::size_t expected, const char* what)
{
    if (w.empty()) throw std::invalid_argument(std::string(what) + ": empty weight vector");
    if (w.size() != expected) throw std::invalid_argument(std::string(what) + ": weights and grid differ in length");
    double total = 0.0;
    for (double x : w) {
        if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument(std::string(what) + ": negative or non-finite weight");
        total += x;
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument(std::string(what) + ": weights do not sum to one");
}

}  // namespace

void validate_prior(const Prior& g, const HyperBox& box)
{
    std::visit(overloaded{
                   [](const UniformPrior&) {},
                   [&](const SpikeSlabPrior& p) {
                       if (!(p.eta >= box.eta_lo && p.eta <= box.eta_hi))
                           throw std::invalid_argument("SpikeSlab: eta outside its box");
                       if (!(p.a >= box.a_lo && p.a <= box.a_hi))
                           throw std::invalid_argument("SpikeSlab: a outside its box");
                   },
                   [](const GaussMixPrior& p) {
                       check_simplex(p.weights, p.variances.size(), "GaussMix");
                       for (double v : p.variances)
                           if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("GaussMix: bad variance");
                   },
                   [](const DiscretePrior& p) {
                       check_simplex(p.weights, p.support.size(), "Discrete");
                       for (double t : p.support)
                           if (!std::isfinite(t)) throw std::invalid_argument("Discrete: non-finite atom");
                   },
                   [](const GaussianScalarPrior& p) {
                       if (!(p.tau >= 0.0) || !std::isfinite(p.tau)) throw std::invalid_argument("GaussianScalar: bad tau");
                   },
               },
               g);
}

bool is_proper(const Prior& g) { return !std::holds_alternative<UniformPrior>(g); }

std::string prior_kind(const Prior& g)
{
    static const char* names[] = {"uniform", "spike_slab", "gauss_mix", "discrete", "gaussian_scalar"};
    return names[g.index()];
}

Prior point_mass(double at) { return DiscretePrior{{1.0}, {at}}; }

double log_gauss_integral(const Prior& g, double m, double s)
{
    return std::visit(overloaded{
                          [](const UniformPrior&) { return 0.0; },
                          [&](const SpikeSlabPrior& p) {
                              const double spike = std::log1p(-p.eta) + log_phi(0.0, m, s);
                              const double slab = std::log(p.eta) + log_laplace_gauss(m, s, p.a);
                              return log_add_exp(spike, slab);
                          },
                          [&](const GaussMixPrior& p) {
                              double acc = kNegInf;
                              for (std::size_t l = 0; l < p.weights.size(); ++l) {
                                  if (p.weights[l] <= 0.0) continue;
                                  acc = log_add_exp(acc, std::log(p.weights[l]) +
                                                             log_phi(m, 0.0, std::sqrt(s * s + p.variances[l])));
                              }
                              return acc;
                          },
                          [&](const DiscretePrior& p) {
                              double acc = kNegInf;
                              for (std::size_t l = 0; l < p.weights.size(); ++l) {
                                  if (p.weights[l] <= 0.0) continue;
                                  acc = log_add_exp(acc, std::log(p.weights[l]) + log_phi(p.support[l], m, s));
                              }
                              return acc;
                          },
                          [&](const GaussianScalarPrior& p) { return log_phi(m, 0.0, std::sqrt(s * s + p.tau)); },
                      },
                      g);
}

double posterior_mean_gauss(const Prior& g, double m, double s)
{
    return std::visit(overloaded{
                          [&](const UniformPrior&) { return m; },
                          [&](const SpikeSlabPrior&) {
                              // Tweedie: E = m + s^2 d/dm log int phi(x; m, s) g(x) dx
                              const double h = 1e-5 * std::max(1.0, s);
                              const double dl = (log_gauss_integral(g, m + h, s) - log_gauss_integral(g, m - h, s)) / (2.0 * h);
                              return m + s * s * dl;
                          },
                          [&](const GaussMixPrior& p) {
                              std::vector<double> logw(p.weights.size(), kNegInf);
                              for (std::size_t l = 0; l < p.weights.size(); ++l)
                                  if (p.weights[l] > 0.0)
                                      logw[l] = std::log(p.weights[l]) + log_phi(m, 0.0, std::sqrt(s * s + p.variances[l]));
                              const double lz = log_sum_exp(logw);
                              double mean = 0.0;
                              for (std::size_t l = 0; l < p.weights.size(); ++l) {
                                  if (logw[l] == kNegInf) continue;
                                  const double shrink = p.variances[l] / (p.variances[l] + s * s);
                                  mean += std::exp(logw[l] - lz) * shrink * m;
                              }
                              return mean;
                          },
                          [&](const DiscretePrior& p) {
                              std::vector<double> logw(p.weights.size(), kNegInf);
                              for (std::size_t l = 0; l < p.weights.size(); ++l)
                                  if (p.weights[l] > 0.0) logw[l] = std::log(p.weights[l]) + log_phi(p.support[l], m, s);
                              const double lz = log_sum_exp(logw);
                              double mean = 0.0;
                              for (std::size_t l = 0; l < p.weights.size(); ++l)
                                  if (logw[l] != kNegInf) mean += std::exp(logw[l] - lz) * p.support[l];
                              return mean;
                          },
                          [&](const GaussianScalarPrior& p) { return p.tau / (p.tau + s * s) * m; },
                      },
                      g);
}

}  // namespace ebprde
