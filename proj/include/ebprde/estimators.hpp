#pragma once

#include "ebprde/lmm.hpp"
#include "ebprde/rng.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace ebprde {

inline constexpr double kSigmaFloor = 1e-6;

struct SuffStats {
    std::vector<double> z;      // Z_i(beta, sigma)
    std::vector<double> u_agg;  // u_i
    std::vector<double> beta_used;
    double sigma_used = 1.0;
};

enum class Regime { Contrast, Batched, Known };

std::string regime_name(Regime r);

struct FitResult {
    std::vector<double> beta_hat;
    double sigma_hat = 1.0;
    Regime regime = Regime::Known;
    std::size_t units_used = 0;  // replicated units (contrast) or batches (batched)
};

SuffStats aggregate_stats(const Dataset& data, const Design& design, const std::vector<double>& beta, double sigma);

// per-unit contrast (u_i2 r_i1 - u_i1 r_i2)/sqrt(u_i1^2 + u_i2^2), r_ik = y_ik - x_ik' beta
double unit_contrast(const Dataset& data, const Design& design, std::size_t i, const std::vector<double>& beta);

FitResult contrast_fit(const Dataset& data, const Design& design);

// batch_size = 0 selects ceil(sqrt(n))
FitResult batched_fit(const Dataset& data, const Design& design, std::size_t batch_size, RngStream& rng);

FitResult select_estimator(const Dataset& data, const Design& design, RngStream& rng);

FitResult known_fit(std::vector<double> beta, double sigma);

}  // namespace ebprde
