#pragma once

#include "ebprde/baselines.hpp"
#include "ebprde/eb_select.hpp"
#include "ebprde/oracle.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ebprde {

enum class MethodKind { Oracle, Bayes, Uniform, Proposed, ProposedModified, GModel, GModelBayes, Naive };

std::string method_name(MethodKind kind);
MethodKind parse_method(const std::string& name);
bool method_uses_h(MethodKind kind);

struct MethodSpec {
    MethodKind kind = MethodKind::Proposed;
    ClassSpec cls = ClassSpec::gauss_mix({0.25, 1.0});
    HPolicy h;
    SelectOptions select;
    std::vector<double> em_grid = {0.25, 1.0};

    std::string label() const;
};

enum class ParamMode { Known, Estimated };

struct TruthFamily {
    Prior g0 = GaussMixPrior{{0.7, 0.3}, {0.25, 1.0}};
    std::vector<double> beta;
    double sigma = 1.0;
    bool redraw_gamma = true;
    std::vector<double> fixed_gamma;
    ParamMode mode = ParamMode::Known;
};

struct MethodResult {
    MethodSpec spec;
    double loss = 0.0;
    bool failed = false;
    std::string error;
    std::optional<SelectionResult> selection;
    std::optional<EmFit> em;
};

// KL losses of several methods on one dataset; statistics, reuse sets and
// component tables are shared between the methods
std::vector<MethodResult> evaluate_methods(const std::vector<MethodSpec>& specs, const Design& design,
                                           const ModelTruth& truth, const Dataset& data, const FitResult& fit,
                                           std::size_t nodes = 61);

FitResult fit_parameters(ParamMode mode, const ModelTruth& truth, const Dataset& data, const Design& design,
                         RngStream& rng);

struct RiskReport {
    std::string method;
    MeanSe risk;
    MeanSe excess;  // paired with the Bayes rule under g0 at known parameters
    std::size_t reps = 0;
    std::size_t failures = 0;
    std::vector<std::string> errors;
};

RiskReport risk_of_method(const MethodSpec& spec, const TruthFamily& family, const Design& design, std::size_t reps,
                          std::uint64_t seed, std::size_t nodes = 61);

}  // namespace ebprde
