#include "ebprde/objective.hpp"

#include "ebprde/marginals.hpp"
#include "ebprde/numerics.hpp"
#include "ebprde/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ebprde {

void ComponentTable::begin_block() { block_start.push_back(shift.size()); }

void ComponentTable::add_row(std::span<const double> log_dens, double weight)
{
    if (log_dens.size() != L) throw std::invalid_argument("ComponentTable: row has the wrong number of components");
    double mx = kNegInf;
    for (double x : log_dens) mx = std::max(mx, x);
    if (!std::isfinite(mx)) throw std::runtime_error("ComponentTable: degenerate marginal row");
    for (double x : log_dens) dens.push_back(std::exp(x - mx));
    shift.push_back(mx);
    row_weight.push_back(weight);
}

void ComponentTable::end_blocks() { block_start.push_back(shift.size()); }

MixtureObjective::MixtureObjective(std::shared_ptr<const ComponentTable> table, std::vector<double> block_weight,
                                   double constant)
    : table_(std::move(table)), block_weight_(std::move(block_weight)), constant_(constant)
{
    if (!table_ || table_->L == 0) throw std::invalid_argument("MixtureObjective: empty component class");
    if (block_weight_.size() != table_->blocks()) throw std::invalid_argument("MixtureObjective: block weight count mismatch");
    // fold the constant shifts into the constant term
    CompensatedSum c;
    c.add(constant_);
    for (std::size_t b = 0; b < block_weight_.size(); ++b) {
        if (block_weight_[b] == 0.0) continue;
        for (std::size_t r = table_->block_start[b]; r < table_->block_start[b + 1]; ++r)
            c.add(block_weight_[b] * table_->row_weight[r] * table_->shift[r]);
    }
    constant_ = c.value();
}

double MixtureObjective::value(std::span<const double> pi) const
{
    const std::size_t L = table_->L;
    if (pi.size() != L) throw std::invalid_argument("MixtureObjective: weight vector has the wrong length");
    const double* dens = table_->dens.data();
    double total = constant_;
    for (std::size_t b = 0; b < block_weight_.size(); ++b) {
        const double bw = block_weight_[b];
        if (bw == 0.0) continue;
        double acc = 0.0;
        for (std::size_t r = table_->block_start[b]; r < table_->block_start[b + 1]; ++r) {
            const double* e = dens + r * L;
            double m = 0.0;
            for (std::size_t l = 0; l < L; ++l) m += pi[l] * e[l];
            acc += table_->row_weight[r] * std::log(m);
        }
        total += bw * acc;
    }
    if (std::isnan(total)) throw std::runtime_error("MixtureObjective: NaN objective (degenerate marginals)");
    return total;
}

double MixtureObjective::value_and_gradient(std::span<const double> pi, std::span<double> grad) const
{
    const std::size_t L = table_->L;
    if (pi.size() != L || grad.size() != L) throw std::invalid_argument("MixtureObjective: weight vector has the wrong length");
    std::fill(grad.begin(), grad.end(), 0.0);
    std::vector<double> bgrad(L);
    const double* dens = table_->dens.data();
    double total = constant_;
    for (std::size_t b = 0; b < block_weight_.size(); ++b) {
        const double bw = block_weight_[b];
        if (bw == 0.0) continue;
        double acc = 0.0;
        std::fill(bgrad.begin(), bgrad.end(), 0.0);
        for (std::size_t r = table_->block_start[b]; r < table_->block_start[b + 1]; ++r) {
            const double* e = dens + r * L;
            double m = 0.0;
            for (std::size_t l = 0; l < L; ++l) m += pi[l] * e[l];
            const double w = table_->row_weight[r];
            acc += w * std::log(m);
            const double ratio = w / m;
            for (std::size_t l = 0; l < L; ++l) bgrad[l] += ratio * e[l];
        }
        total += bw * acc;
        for (std::size_t l = 0; l < L; ++l) grad[l] += bw * bgrad[l];
    }
    if (std::isnan(total)) throw std::runtime_error("MixtureObjective: NaN objective (degenerate marginals)");
    return total;
}

MixtureObjective MixtureObjective::shifted(double delta) const
{
    MixtureObjective out = *this;
    out.constant_ += delta;
    return out;
}

std::shared_ptr<const ComponentTable> build_risk_table(const std::vector<Prior>& components, const SuffStats& stats,
                                                       const FissionPlan& plan, const Design& design, double sigma_hat,
                                                       const RiskOptions& opts)
{
    if (components.empty()) throw std::invalid_argument("build_risk_table: empty component class");
    for (const auto& g : components)
        if (!is_proper(g)) throw std::invalid_argument("build_risk_table: components must be proper");
    if (plan.coords.size() != design.kappa()) throw std::invalid_argument("build_risk_table: plan built from a different design");
    auto table = std::make_shared<ComponentTable>();
    const std::size_t L = components.size();
    table->L = L;
    std::vector<double> row(L);
    for (const auto& [i, k] : plan.coords) {
        const double v = design.units[i].v[k], u = design.units[i].u_agg;
        table->begin_block();
        for (std::size_t l = 0; l < L; ++l) row[l] = log_marginal_m(components[l], v * stats.z[i], u, v, sigma_hat);
        table->add_row(row, 1.0);
    }
    const auto& gh = gauss_hermite(opts.rb_nodes);
    for (std::size_t c = 0; c < plan.coords.size(); ++c) {
        const auto [i, k] = plan.coords[c];
        const double v = design.units[i].v[k], u = design.units[i].u_agg;
        table->begin_block();
        for (std::size_t t = 0; t < plan.members[c].size(); ++t) {
            const double centre = v * stats.z[plan.members[c][t]];
            const double d = plan.coef[c][t];
            if (d == 0.0) {
                for (std::size_t l = 0; l < L; ++l) row[l] = log_marginal_m_tilde(components[l], centre, u, v, sigma_hat);
                table->add_row(row, 1.0);
                continue;
            }
            const double scale = std::sqrt(d) * (opts.legacy_sigma_noise ? sigma_hat : 1.0);
            for (std::size_t q = 0; q < gh.size(); ++q) {
                for (std::size_t l = 0; l < L; ++l)
                    row[l] = log_marginal_m_tilde(components[l], centre + scale * gh.nodes[q], u, v, sigma_hat);
                table->add_row(row, gh.weights[q]);
            }
        }
    }
    table->end_blocks();
    return table;
}

namespace {

struct RiskWeights {
    std::vector<double> first;   // nonzero on first-term blocks only
    std::vector<double> second;  // nonzero on surrogate blocks only
    double a_n = 0.0;
};

RiskWeights risk_weights(const ComponentTable& table, const FissionPlan& plan, const Design& design, bool scarce_mode)
{
    const std::size_t kappa = plan.coords.size();
    if (table.blocks() != 2 * kappa) throw std::invalid_argument("risk_objective: table does not match plan");
    RiskWeights w;
    w.first.assign(2 * kappa, 0.0);
    w.second.assign(2 * kappa, 0.0);
    double norm = static_cast<double>(kappa);
    if (scarce_mode) {
        if (plan.improved_count == 0) throw std::invalid_argument("risk_objective: scarce mode with no improved coordinates");
        norm = static_cast<double>(plan.improved_count);
    }
    CompensatedSum an;
    for (std::size_t c = 0; c < kappa; ++c) {
        const auto [i, k] = plan.coords[c];
        const double v = design.units[i].v[k], u = design.units[i].u_agg;
        if (!scarce_mode || plan.improved[c]) {
            w.first[c] = 1.0 / norm;
            an.add(0.5 * std::log1p(v * v / (u * u)));
        }
        if (plan.improved[c]) w.second[kappa + c] = 1.0 / (norm * static_cast<double>(plan.members[c].size()));
    }
    w.a_n = an.value() / norm;
    return w;
}

}  // namespace

MixtureObjective risk_objective(std::shared_ptr<const ComponentTable> table, const FissionPlan& plan,
                                const Design& design, bool scarce_mode)
{
    if (!table) throw std::invalid_argument("risk_objective: missing table");
    RiskWeights w = risk_weights(*table, plan, design, scarce_mode);
    for (std::size_t b = 0; b < w.first.size(); ++b) w.first[b] -= w.second[b];
    return MixtureObjective(std::move(table), std::move(w.first), w.a_n);
}

RiskBreakdown risk_breakdown(std::shared_ptr<const ComponentTable> table, const FissionPlan& plan,
                             const Design& design, bool scarce_mode, std::span<const double> pi)
{
    if (!table) throw std::invalid_argument("risk_breakdown: missing table");
    RiskWeights w = risk_weights(*table, plan, design, scarce_mode);
    RiskBreakdown out;
    out.a_n = w.a_n;
    out.r1_hat = MixtureObjective(table, std::move(w.first), 0.0).value(pi);
    out.r2_hat = MixtureObjective(table, std::move(w.second), 0.0).value(pi);
    out.total = out.a_n + out.r1_hat - out.r2_hat;
    out.h_used = plan.h;
    out.scarce_mode = scarce_mode;
    out.D_n = plan.D_n;
    out.IF_n = plan.IF_n;
    return out;
}

}  // namespace ebprde
