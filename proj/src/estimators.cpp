#include "ebprde/estimators.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace ebprde {

std::string regime_name(Regime r)
{
    switch (r) {
    case Regime::Contrast:
        return "contrast";
    case Regime::Batched:
        return "batched";
    case Regime::Known:
        return "known";
    }
    return "unknown";
}

SuffStats aggregate_stats(const Dataset& data, const Design& design, const std::vector<double>& beta, double sigma)
{
    if (!(sigma > 0.0)) throw std::invalid_argument("aggregate_stats: sigma must be positive");
    if (beta.size() != design.d) throw std::invalid_argument("aggregate_stats: beta length differs from design dimension");
    validate_dataset(data, design);
    SuffStats st;
    st.beta_used = beta;
    st.sigma_used = sigma;
    st.z.resize(design.n());
    st.u_agg.resize(design.n());
    for (std::size_t i = 0; i < design.n(); ++i) {
        const auto& unit = design.units[i];
        double s = 0.0;
        for (std::size_t k = 0; k < unit.u.size(); ++k) s += unit.u[k] * (data.y[i][k] - past_offset(design, beta, i, k));
        st.u_agg[i] = unit.u_agg;
        st.z[i] = s / (sigma * unit.u_agg * unit.u_agg);
        if (!std::isfinite(st.z[i])) throw std::runtime_error("aggregate_stats: non-finite statistic at unit " + std::to_string(i));
    }
    return st;
}

double unit_contrast(const Dataset& data, const Design& design, std::size_t i, const std::vector<double>& beta)
{
    const auto& unit = design.units[i];
    if (unit.u.size() < 2) throw std::invalid_argument("unit_contrast: unit has a single replicate");
    const double r1 = data.y[i][0] - past_offset(design, beta, i, 0);
    const double r2 = data.y[i][1] - past_offset(design, beta, i, 1);
    return (unit.u[1] * r1 - unit.u[0] * r2) / std::hypot(unit.u[0], unit.u[1]);
}

namespace {

Eigen::VectorXd solve_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs, const char* what)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (!(lo > 1e-12 * std::max(hi, 1e-300))) {
        std::ostringstream os;
        os << what << ": singular Gram matrix (smallest eigenvalue " << lo << ")";
        throw std::runtime_error(os.str());
    }
    return gram.ldlt().solve(rhs);
}

double floored_sigma(double mean_square) { return std::max(std::sqrt(std::max(mean_square, 0.0)), kSigmaFloor); }

}  // namespace

FitResult contrast_fit(const Dataset& data, const Design& design)
{
    validate_dataset(data, design);
    const std::size_t d = design.d;
    std::vector<std::size_t> reps;
    for (std::size_t i = 0; i < design.n(); ++i)
        if (design.units[i].u.size() >= 2) reps.push_back(i);
    if (reps.empty()) throw std::invalid_argument("contrast_fit: no replicated units");

    // f_i(beta) = r_i - s_i' beta
    Eigen::MatrixXd S(static_cast<Eigen::Index>(reps.size()), static_cast<Eigen::Index>(d));
    Eigen::VectorXd r(static_cast<Eigen::Index>(reps.size()));
    for (std::size_t row = 0; row < reps.size(); ++row) {
        const std::size_t i = reps[row];
        const auto& unit = design.units[i];
        const double norm = std::hypot(unit.u[0], unit.u[1]);
        r(static_cast<Eigen::Index>(row)) = (unit.u[1] * data.y[i][0] - unit.u[0] * data.y[i][1]) / norm;
        for (std::size_t j = 0; j < d; ++j)
            S(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j)) =
                (unit.u[1] * unit.x[j] - unit.u[0] * unit.x[d + j]) / norm;
    }
    FitResult fit;
    fit.regime = Regime::Contrast;
    fit.units_used = reps.size();
    Eigen::VectorXd resid = r;
    if (d > 0) {
        const Eigen::VectorXd beta = solve_gram(S.transpose() * S, S.transpose() * r, "contrast_fit");
        fit.beta_hat.assign(beta.data(), beta.data() + beta.size());
        resid -= S * beta;
    }
    fit.sigma_hat = floored_sigma(resid.squaredNorm() / static_cast<double>(reps.size()));
    return fit;
}

FitResult batched_fit(const Dataset& data, const Design& design, std::size_t batch_size, RngStream& rng)
{
    validate_dataset(data, design);
    const std::size_t n = design.n();
    const std::size_t d = design.d;
    const std::size_t m = batch_size == 0 ? static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n)))) : batch_size;
    if (n < 2 * m) throw std::invalid_argument("batched_fit: need n >= 2 * batch_size");
    const std::size_t B = n / m;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    Eigen::MatrixXd X(static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(d));
    Eigen::VectorXd y(static_cast<Eigen::Index>(B));
    const double scale = 1.0 / std::sqrt(static_cast<double>(m));
    for (std::size_t b = 0; b < B; ++b) {
        std::size_t reps = 0;
        for (std::size_t t = 0; t < m; ++t) reps += design.units[order[b * m + t]].u.size();
        const double w = 1.0 / std::sqrt(static_cast<double>(reps));
        double yb = 0.0;
        std::vector<double> xb(d, 0.0);
        for (std::size_t t = 0; t < m; ++t) {
            const std::size_t i = order[b * m + t];
            const auto& unit = design.units[i];
            for (std::size_t k = 0; k < unit.u.size(); ++k) {
                yb += w * data.y[i][k];
                for (std::size_t j = 0; j < d; ++j) xb[j] += w * unit.x[k * d + j];
            }
        }
        y(static_cast<Eigen::Index>(b)) = scale * yb;
        for (std::size_t j = 0; j < d; ++j) X(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(j)) = scale * xb[j];
    }
    FitResult fit;
    fit.regime = Regime::Batched;
    fit.units_used = B;
    Eigen::VectorXd resid = y;
    if (d > 0) {
        const Eigen::VectorXd beta = solve_gram(X.transpose() * X, X.transpose() * y, "batched_fit");
        fit.beta_hat.assign(beta.data(), beta.data() + beta.size());
        resid -= X * beta;
    }
    fit.sigma_hat = floored_sigma(resid.squaredNorm() / static_cast<double>(B));
    return fit;
}

FitResult select_estimator(const Dataset& data, const Design& design, RngStream& rng)
{
    const double replicated = static_cast<double>(design.replicated_units());
    if (replicated > 0.0 && replicated >= std::sqrt(static_cast<double>(design.n()))) return contrast_fit(data, design);
    return batched_fit(data, design, 0, rng);
}

FitResult known_fit(std::vector<double> beta, double sigma)
{
    if (!(sigma > 0.0)) throw std::invalid_argument("known_fit: sigma must be positive");
    FitResult fit;
    fit.beta_hat = std::move(beta);
    fit.sigma_hat = sigma;
    fit.regime = Regime::Known;
    return fit;
}

}  // namespace ebprde
