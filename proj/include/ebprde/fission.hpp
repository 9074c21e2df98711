#pragma once

#include "ebprde/estimators.hpp"
#include "ebprde/lmm.hpp"
#include "ebprde/numerics.hpp"
#include "ebprde/prior.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace ebprde {

struct HPolicy {
    enum class Kind { Constant, LogN, QuarterPower, HalfPower };
    Kind kind = Kind::Constant;
    std::size_t k = 1;

    std::size_t resolve(std::size_t n) const;
    std::string name() const;
    static HPolicy parse(const std::string& text);
};

struct FissionPlan {
    std::size_t h = 1;
    std::vector<Coordinate> coords;
    std::vector<std::vector<std::uint32_t>> members;  // S_ik, ascending unit index
    std::vector<std::vector<double>> coef;            // d_ikj, aligned with members
    std::vector<char> improved;                       // |S_ik| >= h
    std::size_t improved_count = 0;
    double dependency_sum = 0.0;  // sum over improved coordinates of 1/|S_ik|
    double D_n = 0.0;             // dependency_sum / kappa
    double IF_n = 0.0;            // improved_count / kappa
};

struct SetDiagnostics {
    double dependency_sum = 0.0;
    double D_n = 0.0;
    double IF_n = 0.0;
    std::size_t improved_count = 0;
};

FissionPlan build_fission_plan(const Design& design, std::size_t h);

// |S_ik| per future coordinate without materializing the sets
std::vector<std::size_t> reuse_set_sizes(const Design& design);
SetDiagnostics set_diagnostics(const std::vector<std::size_t>& sizes, std::size_t h);

struct RiskBreakdown {
    double a_n = 0.0;
    double r1_hat = 0.0;
    double r2_hat = 0.0;
    double total = 0.0;
    std::size_t h_used = 0;
    bool scarce_mode = false;
    double D_n = 0.0;
    double IF_n = 0.0;
};

struct RiskOptions {
    std::size_t rb_nodes = 21;
    bool legacy_sigma_noise = false;  // adds sigma_hat to the fission noise scale
};

double a_n(const Design& design);

double r1_hat(const Prior& g, const SuffStats& stats, const Design& design, double sigma_hat);

double rb_surrogate_term(const Prior& g, double z_j, double u_i, double v_ik, double sigma_hat, double d_ikj,
                         std::size_t nodes = 21, bool legacy_sigma_noise = false);

double r2_hat(const Prior& g, const SuffStats& stats, const FissionPlan& plan, const Design& design, double sigma_hat,
              const RiskOptions& opts = {});

RiskBreakdown risk_hat(const Prior& g, const SuffStats& stats, const FissionPlan& plan, const Design& design,
                       double sigma_hat, bool scarce_mode, const RiskOptions& opts = {});

// scarce mode is the default when n * eta < sqrt(n), eta the replicated fraction
bool default_scarce_mode(const Design& design);

struct DiagnosticsPoint {
    std::size_t n = 0;
    std::size_t h = 0;
    MeanSe D_n;
    MeanSe IF_n;
    MeanSe dependency_sum;
};

std::vector<DiagnosticsPoint> diagnostics_curve(const CaseSpec& family, const std::vector<std::size_t>& n_grid,
                                                const HPolicy& policy, std::size_t reps, std::uint64_t seed);

}  // namespace ebprde
