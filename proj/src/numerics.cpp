#include "ebprde/numerics.hpp"

#include <algorithm>
#include <stdexcept>

namespace ebprde {

double log_sum_exp(std::span<const double> xs)
{
    double mx = kNegInf;
    for (double x : xs) mx = std::max(mx, x);
    if (mx == kNegInf) return kNegInf;
    if (std::isinf(mx)) return mx;
    CompensatedSum s;
    for (double x : xs) s.add(std::exp(x - mx));
    return mx + std::log(s.value());
}

double erfcx(double x)
{
    if (x < 0.0) return 2.0 * std::exp(x * x) - erfcx(-x);
    if (x < 25.0) return std::exp(x * x) * std::erfc(x);
    // asymptotic expansion: 1/(x sqrt(pi)) * sum_k (-1)^k (2k-1)!! / (2x^2)^k
    const double inv2x2 = 1.0 / (2.0 * x * x);
    double term = 1.0;
    double acc = 1.0;
    for (int k = 1; k < 8; ++k) {
        term *= -(2.0 * k - 1.0) * inv2x2;
        acc += term;
    }
    return acc / (x * std::sqrt(M_PI));
}

double log_ndtr(double x)
{
    if (x > 5.0) return std::log1p(-0.5 * std::erfc(x / M_SQRT2));
    if (x > -20.0) return std::log(0.5 * std::erfc(-x / M_SQRT2));
    const double t = -x / M_SQRT2;
    return std::log(0.5 * erfcx(t)) - t * t;
}

double log_laplace_gauss(double m, double s, double lambda)
{
    if (!(s > 0.0) || !(lambda > 0.0))
        throw std::invalid_argument("log_laplace_gauss: scale and rate must be positive");
    const double base = std::log(0.5 * lambda) + 0.5 * lambda * lambda * s * s;
    const double pos = base - lambda * m + log_ndtr(m / s - lambda * s);
    const double neg = base + lambda * m + log_ndtr(-m / s - lambda * s);
    return log_add_exp(pos, neg);
}

MeanSe mean_se(std::span<const double> xs)
{
    MeanSe out;
    out.count = xs.size();
    if (xs.empty()) return out;
    CompensatedSum s;
    for (double x : xs) s.add(x);
    out.mean = s.value() / static_cast<double>(xs.size());
    if (xs.size() < 2) return out;
    CompensatedSum ss;
    for (double x : xs) ss.add((x - out.mean) * (x - out.mean));
    const double var = ss.value() / static_cast<double>(xs.size() - 1);
    out.se = std::sqrt(var / static_cast<double>(xs.size()));
    return out;
}

double pearson_correlation(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size() || a.size() < 2)
        throw std::invalid_argument("pearson_correlation: need two equal-length samples");
    const double n = static_cast<double>(a.size());
    CompensatedSum sa, sb;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sa.add(a[i]);
        sb.add(b[i]);
    }
    const double ma = sa.value() / n, mb = sb.value() / n;
    CompensatedSum cab, caa, cbb;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        cab.add(da * db);
        caa.add(da * da);
        cbb.add(db * db);
    }
    return cab.value() / std::sqrt(caa.value() * cbb.value());
}

}  // namespace ebprde
