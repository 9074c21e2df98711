#include "ebprde/fission.hpp"

#include "ebprde/marginals.hpp"
#include "ebprde/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ebprde {

std::size_t HPolicy::resolve(std::size_t n) const
{
    const double nn = static_cast<double>(n);
    double raw = 1.0;
    switch (kind) {
    case Kind::Constant:
        raw = static_cast<double>(k);
        break;
    case Kind::LogN:
        raw = std::log(nn);
        break;
    case Kind::QuarterPower:
        raw = std::pow(nn, 0.25);
        break;
    case Kind::HalfPower:
        raw = std::sqrt(nn);
        break;
    }
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(raw + 1e-9)));
}

std::string HPolicy::name() const
{
    switch (kind) {
    case Kind::Constant:
        return std::to_string(k);
    case Kind::LogN:
        return "log_n";
    case Kind::QuarterPower:
        return "n^0.25";
    case Kind::HalfPower:
        return "n^0.5";
    }
    return "?";
}

HPolicy HPolicy::parse(const std::string& text)
{
    if (text == "log_n" || text == "logn" || text == "log") return {Kind::LogN, 0};
    if (text == "n^0.25" || text == "n^1/4" || text == "n14") return {Kind::QuarterPower, 0};
    if (text == "n^0.5" || text == "n^1/2" || text == "sqrt_n" || text == "n12") return {Kind::HalfPower, 0};
    std::size_t pos = 0;
    long long k = 0;
    try {
        k = std::stoll(text, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != text.size() || text.empty()) throw std::invalid_argument("unknown h policy '" + text + "'");
    if (k < 1) throw std::invalid_argument("h policy constant must be at least 1");
    return {Kind::Constant, static_cast<std::size_t>(k)};
}

namespace {

std::vector<double> squared_aggregates(const Design& design)
{
    std::vector<double> u2(design.n());
    for (std::size_t j = 0; j < design.n(); ++j) {
        double s = 0.0;
        for (double w : design.units[j].u) s += w * w;
        u2[j] = s;
    }
    return u2;
}

}  // namespace

FissionPlan build_fission_plan(const Design& design, std::size_t h)
{
    if (h < 1) throw std::invalid_argument("build_fission_plan: h must be at least 1");
    const auto u2 = squared_aggregates(design);
    std::vector<std::uint32_t> by_u2(design.n());
    std::iota(by_u2.begin(), by_u2.end(), 0u);
    std::stable_sort(by_u2.begin(), by_u2.end(), [&](std::uint32_t a, std::uint32_t b) { return u2[a] < u2[b]; });
    std::vector<double> sorted_u2(design.n());
    for (std::size_t t = 0; t < design.n(); ++t) sorted_u2[t] = u2[by_u2[t]];

    FissionPlan plan;
    plan.h = h;
    plan.coords = future_coordinates(design);
    const std::size_t kappa = plan.coords.size();
    plan.members.resize(kappa);
    plan.coef.resize(kappa);
    plan.improved.assign(kappa, 0);
    CompensatedSum dep;
    for (std::size_t c = 0; c < kappa; ++c) {
        const auto [i, k] = plan.coords[c];
        const double v2 = design.units[i].v[k] * design.units[i].v[k];
        const double threshold = u2[i] + v2;
        const auto first = std::lower_bound(sorted_u2.begin(), sorted_u2.end(), threshold);
        auto& mem = plan.members[c];
        mem.assign(by_u2.begin() + (first - sorted_u2.begin()), by_u2.end());
        std::sort(mem.begin(), mem.end());
        auto& cf = plan.coef[c];
        cf.resize(mem.size());
        for (std::size_t t = 0; t < mem.size(); ++t) cf[t] = v2 * (1.0 / threshold - 1.0 / u2[mem[t]]);
        if (!mem.empty() && mem.size() >= h) {
            plan.improved[c] = 1;
            ++plan.improved_count;
            dep.add(1.0 / static_cast<double>(mem.size()));
        }
    }
    plan.dependency_sum = dep.value();
    plan.D_n = plan.dependency_sum / static_cast<double>(kappa);
    plan.IF_n = static_cast<double>(plan.improved_count) / static_cast<double>(kappa);
    return plan;
}

std::vector<std::size_t> reuse_set_sizes(const Design& design)
{
    auto u2 = squared_aggregates(design);
    std::vector<double> sorted_u2 = u2;
    std::sort(sorted_u2.begin(), sorted_u2.end());
    std::vector<std::size_t> sizes;
    sizes.reserve(design.kappa());
    for (std::size_t i = 0; i < design.n(); ++i)
        for (double v : design.units[i].v) {
            const auto first = std::lower_bound(sorted_u2.begin(), sorted_u2.end(), u2[i] + v * v);
            sizes.push_back(static_cast<std::size_t>(sorted_u2.end() - first));
        }
    return sizes;
}

SetDiagnostics set_diagnostics(const std::vector<std::size_t>& sizes, std::size_t h)
{
    if (h < 1) throw std::invalid_argument("set_diagnostics: h must be at least 1");
    SetDiagnostics out;
    CompensatedSum dep;
    for (std::size_t s : sizes)
        if (s > 0 && s >= h) {
            ++out.improved_count;
            dep.add(1.0 / static_cast<double>(s));
        }
    out.dependency_sum = dep.value();
    if (!sizes.empty()) {
        out.D_n = out.dependency_sum / static_cast<double>(sizes.size());
        out.IF_n = static_cast<double>(out.improved_count) / static_cast<double>(sizes.size());
    }
    return out;
}

double a_n(const Design& design)
{
    CompensatedSum s;
    for (const auto& unit : design.units)
        for (double v : unit.v) s.add(std::log1p(v * v / (unit.u_agg * unit.u_agg)));
    return s.value() / (2.0 * static_cast<double>(design.kappa()));
}

double r1_hat(const Prior& g, const SuffStats& stats, const Design& design, double sigma_hat)
{
    if (!is_proper(g)) return 0.0;
    if (stats.z.size() != design.n()) throw std::invalid_argument("r1_hat: statistics do not match design");
    CompensatedSum s;
    for (std::size_t i = 0; i < design.n(); ++i)
        for (double v : design.units[i].v) s.add(log_marginal_m(g, v * stats.z[i], design.units[i].u_agg, v, sigma_hat));
    return s.value() / static_cast<double>(design.kappa());
}

double rb_surrogate_term(const Prior& g, double z_j, double u_i, double v_ik, double sigma_hat, double d_ikj,
                         std::size_t nodes, bool legacy_sigma_noise)
{
    if (d_ikj < 0.0) throw std::invalid_argument("rb_surrogate_term: negative fission coefficient");
    const double centre = v_ik * z_j;
    if (d_ikj == 0.0) return log_marginal_m_tilde(g, centre, u_i, v_ik, sigma_hat);
    const double scale = std::sqrt(d_ikj) * (legacy_sigma_noise ? sigma_hat : 1.0);
    const auto& rule = gauss_hermite(nodes);
    CompensatedSum s;
    for (std::size_t q = 0; q < rule.size(); ++q)
        s.add(rule.weights[q] * log_marginal_m_tilde(g, centre + scale * rule.nodes[q], u_i, v_ik, sigma_hat));
    return s.value();
}

namespace {

// sum over improved coordinates of the |S|-averaged surrogate terms
double r2_sum(const Prior& g, const SuffStats& stats, const FissionPlan& plan, const Design& design, double sigma_hat,
              const RiskOptions& opts)
{
    if (plan.coords.size() != design.kappa()) throw std::invalid_argument("r2_hat: plan built from a different design");
    CompensatedSum total;
    for (std::size_t c = 0; c < plan.coords.size(); ++c) {
        if (!plan.improved[c]) continue;
        const auto [i, k] = plan.coords[c];
        const double v = design.units[i].v[k];
        CompensatedSum s;
        for (std::size_t t = 0; t < plan.members[c].size(); ++t)
            s.add(rb_surrogate_term(g, stats.z[plan.members[c][t]], design.units[i].u_agg, v, sigma_hat, plan.coef[c][t],
                                    opts.rb_nodes, opts.legacy_sigma_noise));
        total.add(s.value() / static_cast<double>(plan.members[c].size()));
    }
    return total.value();
}

}  // namespace

double r2_hat(const Prior& g, const SuffStats& stats, const FissionPlan& plan, const Design& design, double sigma_hat,
              const RiskOptions& opts)
{
    if (!is_proper(g)) return 0.0;
    return r2_sum(g, stats, plan, design, sigma_hat, opts) / static_cast<double>(design.kappa());
}

RiskBreakdown risk_hat(const Prior& g, const SuffStats& stats, const FissionPlan& plan, const Design& design,
                       double sigma_hat, bool scarce_mode, const RiskOptions& opts)
{
    RiskBreakdown out;
    out.h_used = plan.h;
    out.scarce_mode = scarce_mode;
    out.D_n = plan.D_n;
    out.IF_n = plan.IF_n;
    if (!scarce_mode) {
        out.a_n = a_n(design);
        out.r1_hat = r1_hat(g, stats, design, sigma_hat);
        out.r2_hat = r2_hat(g, stats, plan, design, sigma_hat, opts);
    } else {
        if (plan.improved_count == 0) throw std::invalid_argument("risk_hat: scarce mode with no improved coordinates");
        const double norm = static_cast<double>(plan.improved_count);
        CompensatedSum an, r1;
        for (std::size_t c = 0; c < plan.coords.size(); ++c) {
            if (!plan.improved[c]) continue;
            const auto [i, k] = plan.coords[c];
            const double u = design.units[i].u_agg, v = design.units[i].v[k];
            an.add(0.5 * std::log1p(v * v / (u * u)));
            if (is_proper(g)) r1.add(log_marginal_m(g, v * stats.z[i], u, v, sigma_hat));
        }
        out.a_n = an.value() / norm;
        out.r1_hat = r1.value() / norm;
        out.r2_hat = is_proper(g) ? r2_sum(g, stats, plan, design, sigma_hat, opts) / norm : 0.0;
    }
    out.total = out.a_n + out.r1_hat - out.r2_hat;
    return out;
}

bool default_scarce_mode(const Design& design)
{
    const double n = static_cast<double>(design.n());
    return static_cast<double>(design.replicated_units()) < std::sqrt(n);
}

std::vector<DiagnosticsPoint> diagnostics_curve(const CaseSpec& family, const std::vector<std::size_t>& n_grid,
                                                const HPolicy& policy, std::size_t reps, std::uint64_t seed)
{
    std::vector<DiagnosticsPoint> out;
    for (std::size_t n : n_grid) {
        CaseSpec spec = family;
        spec.n = n;
        const std::size_t h = policy.resolve(n);
        std::vector<double> dn, ifn, dep;
        for (std::size_t r = 0; r < reps; ++r) {
            auto rng = seed_stream(seed, case_name(spec.id), n, r, "design");
            const Design design = build_case_design(spec, rng);
            const auto diag = set_diagnostics(reuse_set_sizes(design), h);
            dn.push_back(diag.D_n);
            ifn.push_back(diag.IF_n);
            dep.push_back(diag.dependency_sum);
        }
        out.push_back({n, h, mean_se(dn), mean_se(ifn), mean_se(dep)});
    }
    return out;
}

}  // namespace ebprde
