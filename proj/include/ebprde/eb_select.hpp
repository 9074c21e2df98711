#pragma once

#include "ebprde/estimators.hpp"
#include "ebprde/fission.hpp"
#include "ebprde/objective.hpp"
#include "ebprde/prior.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ebprde {

struct ClassSpec {
    enum class Kind { Uniform, GaussMix, Discrete, SpikeSlab, GaussianScalar };
    Kind kind = Kind::GaussMix;
    std::vector<double> grid;  // variances, atoms or tau values
    std::vector<double> eta_grid;
    std::vector<double> a_grid;

    static ClassSpec uniform();
    static ClassSpec gauss_mix(std::vector<double> variances);
    static ClassSpec discrete(std::vector<double> support);
    static ClassSpec gaussian_scalar(std::vector<double> taus);
    static ClassSpec spike_slab(std::vector<double> eta_grid, std::vector<double> a_grid);
    static ClassSpec spike_slab_default(const HyperBox& box = {}, std::size_t points = 15);

    bool is_mixture() const { return kind == Kind::GaussMix || kind == Kind::Discrete; }
    void validate() const;
};

std::vector<double> log_spaced(double lo, double hi, std::size_t points);

// single-component priors of a mixture class
std::vector<Prior> class_components(const ClassSpec& cls);
Prior mixture_prior(const ClassSpec& cls, const std::vector<double>& weights);

struct SelectionResult {
    Prior g_hat = UniformPrior{};
    std::vector<double> weights;
    RiskBreakdown risk_at_opt;
    std::vector<double> trace;
    std::size_t iterations = 0;
    bool converged = false;
    bool no_improved_coordinates = false;
};

struct MixtureFit {
    std::vector<double> weights;
    std::vector<double> trace;
    std::size_t iterations = 0;
    bool converged = false;
};

MixtureFit fit_mixture_weights(const MixtureObjective& objective, std::vector<double> init = {},
                               std::size_t max_iter = 500, double tol = 1e-9);

struct GridFit {
    double eta = 0.0;
    double a = 0.0;
    double value = 0.0;
    std::vector<double> trace;  // running minimum over the visited grid
};

GridFit fit_spike_slab(const std::vector<double>& grid_eta, const std::vector<double>& grid_a,
                       const std::function<double(const Prior&)>& objective);

enum class ScarcePolicy { Auto, Normal, Scarce };

struct SelectOptions {
    RiskOptions risk;
    ScarcePolicy scarce = ScarcePolicy::Auto;
    std::size_t max_iter = 500;
    double tol = 1e-9;
    std::vector<double> init;  // empty = uniform
};

bool resolve_scarce(ScarcePolicy policy, const Design& design);

SelectionResult select(const ClassSpec& cls, const Dataset& data, const Design& design, const FitResult& fit,
                       const HPolicy& h_policy, const SelectOptions& opts = {});

// Same as select, with statistics, a plan for the chosen h and (for mixture
// classes) a precomputed component table supplied by the caller.
SelectionResult select_with_plan(const ClassSpec& cls, const SuffStats& stats, const FissionPlan& plan,
                                 const Design& design, const FitResult& fit, bool scarce_mode,
                                 std::shared_ptr<const ComponentTable> table, const SelectOptions& opts = {});

}  // namespace ebprde
