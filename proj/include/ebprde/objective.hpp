#pragma once

#include "ebprde/fission.hpp"
#include "ebprde/prior.hpp"

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace ebprde {

// Rows of per-component densities, stored as exp(log m_l - shift) so that
// log sum_l pi_l m_l = shift + log sum_l pi_l e_l. Rows are grouped in blocks.
struct ComponentTable {
    std::size_t L = 0;
    std::vector<double> dens;
    std::vector<double> shift;
    std::vector<double> row_weight;
    std::vector<std::size_t> block_start;  // size blocks + 1

    std::size_t rows() const { return shift.size(); }
    std::size_t blocks() const { return block_start.empty() ? 0 : block_start.size() - 1; }

    void begin_block();
    void add_row(std::span<const double> log_dens, double weight);
    void end_blocks();
};

// constant + sum_b block_weight[b] sum_{r in b} row_weight[r] log(sum_l pi_l m_rl)
class MixtureObjective {
public:
    MixtureObjective(std::shared_ptr<const ComponentTable> table, std::vector<double> block_weight, double constant);

    std::size_t components() const { return table_->L; }
    double constant() const { return constant_; }
    double value(std::span<const double> pi) const;
    double value_and_gradient(std::span<const double> pi, std::span<double> grad) const;
    MixtureObjective shifted(double delta) const;

private:
    std::shared_ptr<const ComponentTable> table_;
    std::vector<double> block_weight_;
    double constant_;
};

// Estimated-risk table: blocks [0, kappa) hold the first-term rows of each
// coordinate, blocks [kappa, 2 kappa) the Rao-Blackwellized surrogate rows
// over the full reuse set. `plan` must carry complete sets (any h).
std::shared_ptr<const ComponentTable> build_risk_table(const std::vector<Prior>& components, const SuffStats& stats,
                                                       const FissionPlan& plan, const Design& design, double sigma_hat,
                                                       const RiskOptions& opts = {});

MixtureObjective risk_objective(std::shared_ptr<const ComponentTable> table, const FissionPlan& plan,
                                const Design& design, bool scarce_mode);

// parts of the estimated risk of the mixture with weights pi, read off the table
RiskBreakdown risk_breakdown(std::shared_ptr<const ComponentTable> table, const FissionPlan& plan,
                             const Design& design, bool scarce_mode, std::span<const double> pi);

}  // namespace ebprde
