#pragma once

#include "ebprde/prior.hpp"
#include "ebprde/rng.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace ebprde {

struct Unit {
    std::vector<double> u;         // past weights u_ik, k < K_i
    std::vector<double> x;         // past covariates, K_i rows of length d
    std::vector<double> v;         // future weights v_ik, k < K~_i
    std::vector<double> x_future;  // future covariates, K~_i rows of length d
    double u_agg = 0.0;            // (sum_k u_ik^2)^{1/2}
};

struct Design {
    std::size_t d = 0;
    std::vector<Unit> units;

    std::size_t n() const { return units.size(); }
    std::size_t kappa() const;
    std::size_t replicated_units() const;
};

// fills u_agg and checks every invariant
Design make_design(std::size_t d, std::vector<Unit> units);
void validate_design(const Design& design);

struct Coordinate {
    std::size_t unit;
    std::size_t k;
};

// future coordinates (i, k) in unit-major order
std::vector<Coordinate> future_coordinates(const Design& design);

struct ModelTruth {
    std::vector<double> beta;
    double sigma = 1.0;
    std::vector<double> gamma;
    Prior g0 = UniformPrior{};
};

struct Dataset {
    std::vector<std::vector<double>> y;
    std::optional<std::vector<std::vector<double>>> y_future;
};

void validate_dataset(const Dataset& data, const Design& design);

double past_mean(const Design& design, const ModelTruth& truth, std::size_t i, std::size_t k);
double future_mean(const Design& design, const ModelTruth& truth, std::size_t i, std::size_t k);
double future_offset(const Design& design, const std::vector<double>& beta, std::size_t i, std::size_t k);
double past_offset(const Design& design, const std::vector<double>& beta, std::size_t i, std::size_t k);

enum class CaseId { A, B, C, D, E, F };

CaseId parse_case(const std::string& text);
std::string case_name(CaseId id);

struct CaseSpec {
    CaseId id = CaseId::A;
    std::size_t n = 100;
    bool covariates_are_squared = true;
    std::size_t d = 0;                  // > 0 adds standard-normal fixed-effect covariates
    std::optional<double> eta_override; // fraction of units with two past replicates
};

double case_eta(const CaseSpec& spec);

Design build_case_design(const CaseSpec& spec, RngStream& rng);

Dataset simulate(const Design& design, const ModelTruth& truth, RngStream& rng);

double sample_prior(const Prior& g, RngStream& rng);

ModelTruth draw_truth(const Prior& g0, std::size_t n, std::vector<double> beta, double sigma, RngStream& rng);

// samplers exposed for testing
double sample_truncated_normal(double mean, double sd, double lo, double hi, RngStream& rng);
double truncated_exp_quantile(double p, double hi);
double case_f_quantile(double p);
double case_c_copula_correlation();
double case_c_target_correlation(double copula_rho);

}  // namespace ebprde
