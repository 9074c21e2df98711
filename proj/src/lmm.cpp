#include "ebprde/lmm.hpp"

#include "ebprde/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ebprde {

std::size_t Design::kappa() const
{
    std::size_t k = 0;
    for (const auto& u : units) k += u.v.size();
    return k;
}

std::size_t Design::replicated_units() const
{
    return static_cast<std::size_t>(std::count_if(units.begin(), units.end(), [](const Unit& u) { return u.u.size() >= 2; }));
}

Design make_design(std::size_t d, std::vector<Unit> units)
{
    Design design;
    design.d = d;
    design.units = std::move(units);
    for (auto& unit : design.units) {
        double s = 0.0;
        for (double w : unit.u) s += w * w;
        unit.u_agg = std::sqrt(s);
    }
    validate_design(design);
    return design;
}

void validate_design(const Design& design)
{
    if (design.units.empty()) throw std::invalid_argument("design: no units");
    for (std::size_t i = 0; i < design.units.size(); ++i) {
        const auto& unit = design.units[i];
        const std::string where = "design unit " + std::to_string(i) + ": ";
        if (unit.u.empty()) throw std::invalid_argument(where + "needs at least one past observation");
        if (unit.v.empty()) throw std::invalid_argument(where + "needs at least one future observation");
        if (unit.x.size() != unit.u.size() * design.d || unit.x_future.size() != unit.v.size() * design.d)
            throw std::invalid_argument(where + "covariate block has the wrong shape");
        double s = 0.0;
        for (double w : unit.u) {
            if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument(where + "past weight must be positive and finite");
            s += w * w;
        }
        for (double w : unit.v)
            if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument(where + "future weight must be positive and finite");
        if (std::abs(std::sqrt(s) - unit.u_agg) > 1e-12 * unit.u_agg)
            throw std::invalid_argument(where + "cached aggregate weight is stale");
    }
}

std::vector<Coordinate> future_coordinates(const Design& design)
{
    std::vector<Coordinate> out;
    out.reserve(design.kappa());
    for (std::size_t i = 0; i < design.n(); ++i)
        for (std::size_t k = 0; k < design.units[i].v.size(); ++k) out.push_back({i, k});
    return out;
}

void validate_dataset(const Dataset& data, const Design& design)
{
    if (data.y.size() != design.n()) throw std::invalid_argument("dataset: unit count differs from design");
    for (std::size_t i = 0; i < design.n(); ++i)
        if (data.y[i].size() != design.units[i].u.size())
            throw std::invalid_argument("dataset: replicate count differs from design at unit " + std::to_string(i));
    if (data.y_future) {
        if (data.y_future->size() != design.n()) throw std::invalid_argument("dataset: future unit count differs");
        for (std::size_t i = 0; i < design.n(); ++i)
            if ((*data.y_future)[i].size() != design.units[i].v.size())
                throw std::invalid_argument("dataset: future replicate count differs at unit " + std::to_string(i));
    }
}

namespace {

double dot_row(const std::vector<double>& block, std::size_t row, const std::vector<double>& beta)
{
    double s = 0.0;
    for (std::size_t j = 0; j < beta.size(); ++j) s += block[row * beta.size() + j] * beta[j];
    return s;
}

void check_beta(const Design& design, const std::vector<double>& beta)
{
    if (beta.size() != design.d) throw std::invalid_argument("beta length differs from design dimension");
}

}  // namespace

double past_offset(const Design& design, const std::vector<double>& beta, std::size_t i, std::size_t k)
{
    return design.d == 0 ? 0.0 : dot_row(design.units[i].x, k, beta);
}

double future_offset(const Design& design, const std::vector<double>& beta, std::size_t i, std::size_t k)
{
    return design.d == 0 ? 0.0 : dot_row(design.units[i].x_future, k, beta);
}

double past_mean(const Design& design, const ModelTruth& truth, std::size_t i, std::size_t k)
{
    return past_offset(design, truth.beta, i, k) + design.units[i].u[k] * truth.gamma[i];
}

double future_mean(const Design& design, const ModelTruth& truth, std::size_t i, std::size_t k)
{
    return future_offset(design, truth.beta, i, k) + design.units[i].v[k] * truth.gamma[i];
}

CaseId parse_case(const std::string& text)
{
    static const char* letters[] = {"A", "B", "C", "D", "E", "F"};
    for (int c = 0; c < 6; ++c)
        if (text == letters[c] || text == std::string(1, static_cast<char>('a' + c)) || text == std::to_string(c + 1))
            return static_cast<CaseId>(c);
    throw std::invalid_argument("unknown case id '" + text + "'");
}

std::string case_name(CaseId id) { return std::string(1, static_cast<char>('A' + static_cast<int>(id))); }

double case_eta(const CaseSpec& spec)
{
    if (spec.eta_override) return *spec.eta_override;
    switch (spec.id) {
    case CaseId::D:
        return 1.0 / std::sqrt(static_cast<double>(spec.n));
    case CaseId::E:
        return 0.1;
    default:
        return 0.0;
    }
}

double sample_truncated_normal(double mean, double sd, double lo, double hi, RngStream& rng)
{
    for (int attempt = 0; attempt < 1000000; ++attempt) {
        const double x = mean + sd * rng.normal();
        if (x > lo && x < hi) return x;
    }
    throw std::runtime_error("truncated normal sampler exceeded its attempt cap");
}

double truncated_exp_quantile(double p, double hi)
{
    return -std::log1p(-p * (-std::expm1(-hi)));
}

double case_f_quantile(double p)
{
    // inverse of F(x) = 1 - exp(-(1 - x)^{-2}) on [1/2, 1)
    return 1.0 - 1.0 / std::sqrt(-std::log1p(-p));
}

namespace {

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / M_SQRT2); }

double truncated_exp_from_normal(double z) { return truncated_exp_quantile(std_normal_cdf(z), 2.0); }

}  // namespace

double case_c_target_correlation(double rho)
{
    const auto& gh = gauss_hermite(96);
    const double c = std::sqrt(1.0 - rho * rho);
    double m = 0.0, m2 = 0.0, cross = 0.0;
    for (std::size_t a = 0; a < gh.size(); ++a) {
        const double x1 = truncated_exp_from_normal(gh.nodes[a]);
        m += gh.weights[a] * x1;
        m2 += gh.weights[a] * x1 * x1;
        double inner = 0.0;
        for (std::size_t b = 0; b < gh.size(); ++b)
            inner += gh.weights[b] * truncated_exp_from_normal(rho * gh.nodes[a] + c * gh.nodes[b]);
        cross += gh.weights[a] * x1 * inner;
    }
    return (cross - m * m) / (m2 - m * m);
}

double case_c_copula_correlation()
{
    static const double rho = [] {
        double lo = 0.0, hi = 0.999;
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (case_c_target_correlation(mid) < 0.5)
                lo = mid;
            else
                hi = mid;
        }
        return 0.5 * (lo + hi);
    }();
    return rho;
}

namespace {

struct Draw {
    double past;
    double future;
};

double draw_past(CaseId id, RngStream& rng)
{
    switch (id) {
    case CaseId::A:
        return sample_truncated_normal(2.0, 1.0, 0.0, 4.0, rng);
    case CaseId::B:
        for (int attempt = 0; attempt < 1000000; ++attempt) {
            const double x = rng.exponential(1.0);
            if (x < 2.0) return x;
        }
        throw std::runtime_error("truncated exponential sampler exceeded its attempt cap");
    case CaseId::D:
    case CaseId::E:
        return sample_truncated_normal(1.0, 1.0, 0.0, 2.0, rng);
    case CaseId::F: {
        const double q = std::exp(-4.0) * rng.uniform();  // q = 1 - p, p ~ U(F(1/2), 1)
        return 1.0 - 1.0 / std::sqrt(-std::log(q));
    }
    case CaseId::C:
        break;
    }
    throw std::logic_error("draw_past: case C is drawn jointly");
}

double draw_future(CaseId id, RngStream& rng)
{
    switch (id) {
    case CaseId::E:
        for (int attempt = 0; attempt < 1000000; ++attempt) {
            const double z = rng.normal();
            if (z * z < 3.0) return z * z;
        }
        throw std::runtime_error("truncated chi-square sampler exceeded its attempt cap");
    case CaseId::F:
        return rng.uniform(0.5, 1.0);
    default:
        return draw_past(id, rng);
    }
}

Draw draw_case_c(RngStream& rng)
{
    const double rho = case_c_copula_correlation();
    const double z1 = rng.normal();
    const double z2 = rho * z1 + std::sqrt(1.0 - rho * rho) * rng.normal();
    return {truncated_exp_from_normal(z1), truncated_exp_from_normal(z2)};
}

}  // namespace

Design build_case_design(const CaseSpec& spec, RngStream& rng)
{
    if (spec.n == 0) throw std::invalid_argument("case design: n must be positive");
    const double eta = case_eta(spec);
    const double target = eta * static_cast<double>(spec.n);
    if (!(target >= 0.0) || target > static_cast<double>(spec.n))
        throw std::invalid_argument("case design: eta*n outside [0, n]");
    const std::size_t replicated = static_cast<std::size_t>(std::ceil(target - 1e-9));

    // partial Fisher-Yates: the first `replicated` entries are the replicated units
    std::vector<std::size_t> order(spec.n);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t r = 0; r < replicated; ++r) std::swap(order[r], order[r + rng.below(spec.n - r)]);
    std::vector<char> twice(spec.n, 0);
    for (std::size_t r = 0; r < replicated; ++r) twice[order[r]] = 1;

    auto to_weight = [&](double draw) { return spec.covariates_are_squared ? std::sqrt(draw) : draw; };
    std::vector<Unit> units(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) {
        Unit& unit = units[i];
        const std::size_t K = twice[i] ? 2 : 1;
        if (spec.id == CaseId::C) {
            const Draw first = draw_case_c(rng);
            unit.u.push_back(to_weight(first.past));
            unit.v.push_back(to_weight(first.future));
            for (std::size_t k = 1; k < K; ++k) unit.u.push_back(to_weight(draw_case_c(rng).past));
        } else {
            for (std::size_t k = 0; k < K; ++k) unit.u.push_back(to_weight(draw_past(spec.id, rng)));
            unit.v.push_back(to_weight(draw_future(spec.id, rng)));
        }
        for (std::size_t k = 0; k < K * spec.d; ++k) unit.x.push_back(rng.normal());
        for (std::size_t k = 0; k < spec.d; ++k) unit.x_future.push_back(rng.normal());
    }
    return make_design(spec.d, std::move(units));
}

Dataset simulate(const Design& design, const ModelTruth& truth, RngStream& rng)
{
    check_beta(design, truth.beta);
    if (truth.gamma.size() != design.n()) throw std::invalid_argument("simulate: gamma length differs from n");
    if (!(truth.sigma > 0.0)) throw std::invalid_argument("simulate: sigma must be positive");
    Dataset data;
    data.y.resize(design.n());
    std::vector<std::vector<double>> yf(design.n());
    for (std::size_t i = 0; i < design.n(); ++i) {
        const auto& unit = design.units[i];
        for (std::size_t k = 0; k < unit.u.size(); ++k)
            data.y[i].push_back(past_mean(design, truth, i, k) + truth.sigma * rng.normal());
    }
    for (std::size_t i = 0; i < design.n(); ++i) {
        const auto& unit = design.units[i];
        for (std::size_t k = 0; k < unit.v.size(); ++k)
            yf[i].push_back(future_mean(design, truth, i, k) + truth.sigma * rng.normal());
    }
    data.y_future = std::move(yf);
    return data;
}

double sample_prior(const Prior& g, RngStream& rng)
{
    auto pick = [&](const std::vector<double>& w) {
        double u = rng.uniform(), acc = 0.0;
        for (std::size_t l = 0; l < w.size(); ++l) {
            acc += w[l];
            if (u < acc) return l;
        }
        return w.size() - 1;
    };
    if (const auto* p = std::get_if<DiscretePrior>(&g)) return p->support[pick(p->weights)];
    if (const auto* p = std::get_if<GaussMixPrior>(&g)) return std::sqrt(p->variances[pick(p->weights)]) * rng.normal();
    if (const auto* p = std::get_if<GaussianScalarPrior>(&g)) return std::sqrt(p->tau) * rng.normal();
    if (const auto* p = std::get_if<SpikeSlabPrior>(&g)) {
        if (rng.uniform() >= p->eta) return 0.0;
        const double mag = rng.exponential(p->a);
        return rng.uniform() < 0.5 ? -mag : mag;
    }
    throw std::invalid_argument("cannot sample from the flat prior");
}

ModelTruth draw_truth(const Prior& g0, std::size_t n, std::vector<double> beta, double sigma, RngStream& rng)
{
    if (!is_proper(g0)) throw std::invalid_argument("draw_truth: generating prior must be proper");
    if (!(sigma > 0.0)) throw std::invalid_argument("draw_truth: sigma must be positive");
    validate_prior(g0);
    ModelTruth truth;
    truth.beta = std::move(beta);
    truth.sigma = sigma;
    truth.g0 = g0;
    truth.gamma.resize(n);
    for (auto& g : truth.gamma) g = sample_prior(g0, rng);
    return truth;
}

}  // namespace ebprde
