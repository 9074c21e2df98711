#include "ebprde/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace ebprde {

namespace {

// Golub-Welsch on a symmetric tridiagonal Jacobi matrix; the weight function
// is assumed normalized so that the zeroth moment is one.
QuadratureRule golub_welsch(const Eigen::VectorXd& diag, const Eigen::VectorXd& off)
{
    const Eigen::Index n = diag.size();
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) J(i, i) = diag(i);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        J(i, i + 1) = off(i);
        J(i + 1, i) = off(i);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    if (es.info() != Eigen::Success) throw std::runtime_error("golub_welsch: eigen solver failed");
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        rule.nodes[i] = es.eigenvalues()(i);
        const double v0 = es.eigenvectors()(0, i);
        rule.weights[i] = v0 * v0;
        total += rule.weights[i];
    }
    for (auto& w : rule.weights) w /= total;
    return rule;
}

QuadratureRule build_hermite(std::size_t n)
{
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    Eigen::VectorXd off(static_cast<Eigen::Index>(n > 0 ? n - 1 : 0));
    for (Eigen::Index k = 0; k < off.size(); ++k) off(k) = std::sqrt(static_cast<double>(k + 1));
    QuadratureRule rule = golub_welsch(diag, off);
    // exact symmetry of the rule
    for (std::size_t i = 0; i < n / 2; ++i) {
        const double x = 0.5 * (rule.nodes[n - 1 - i] - rule.nodes[i]);
        const double w = 0.5 * (rule.weights[n - 1 - i] + rule.weights[i]);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

QuadratureRule build_laguerre(std::size_t n)
{
    Eigen::VectorXd diag(static_cast<Eigen::Index>(n));
    Eigen::VectorXd off(static_cast<Eigen::Index>(n > 0 ? n - 1 : 0));
    for (Eigen::Index k = 0; k < diag.size(); ++k) diag(k) = 2.0 * static_cast<double>(k) + 1.0;
    for (Eigen::Index k = 0; k < off.size(); ++k) off(k) = static_cast<double>(k + 1);
    return golub_welsch(diag, off);
}

QuadratureRule build_legendre(std::size_t n)
{
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    Eigen::VectorXd off(static_cast<Eigen::Index>(n > 0 ? n - 1 : 0));
    for (Eigen::Index k = 0; k < off.size(); ++k) {
        const double j = static_cast<double>(k + 1);
        off(k) = j / std::sqrt(4.0 * j * j - 1.0);
    }
    return golub_welsch(diag, off);
}

struct RuleCache {
    std::mutex mu;
    std::map<std::size_t, std::unique_ptr<QuadratureRule>> rules;
};

template <typename Builder>
const QuadratureRule& cached(RuleCache& cache, std::size_t n, Builder build)
{
    if (n == 0) throw std::invalid_argument("quadrature rule needs at least one node");
    std::lock_guard<std::mutex> lock(cache.mu);
    auto it = cache.rules.find(n);
    if (it == cache.rules.end())
        it = cache.rules.emplace(n, std::make_unique<QuadratureRule>(build(n))).first;
    return *it->second;
}

}  // namespace

const QuadratureRule& gauss_hermite(std::size_t n)
{
    static RuleCache cache;
    return cached(cache, n, build_hermite);
}

const QuadratureRule& gauss_laguerre(std::size_t n)
{
    static RuleCache cache;
    return cached(cache, n, build_laguerre);
}

const QuadratureRule& gauss_legendre(std::size_t n)
{
    static RuleCache cache;
    return cached(cache, n, build_legendre);
}

namespace {

QuadratureRule build_normal_panels(std::size_t n)
{
    constexpr int panels = 16;
    constexpr double half_range = 10.0;
    const auto& gl = gauss_legendre((n + 1) / 2);
    const double width = 2.0 * half_range / panels;
    QuadratureRule rule;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double mid = -half_range + (p + 0.5) * width;
        for (std::size_t q = 0; q < gl.size(); ++q) {
            const double x = mid + 0.5 * width * gl.nodes[q];
            const double w = gl.weights[q] * width * std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
            rule.nodes.push_back(x);
            rule.weights.push_back(w);
            total += w;
        }
    }
    for (auto& w : rule.weights) w /= total;
    return rule;
}

}  // namespace

const QuadratureRule& normal_panels(std::size_t n)
{
    static RuleCache cache;
    return cached(cache, n, build_normal_panels);
}

}  // namespace ebprde
