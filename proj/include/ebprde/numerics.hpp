#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace ebprde {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log of the normal density with mean `mean` and standard deviation `sd`
inline double log_phi(double x, double mean, double sd)
{
    const double z = (x - mean) / sd;
    return -0.5 * z * z - std::log(sd) - kLogSqrt2Pi;
}

inline double log_add_exp(double a, double b)
{
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

double log_sum_exp(std::span<const double> xs);

// exp(x^2) * erfc(x)
double erfcx(double x);

// log of the standard normal cdf, accurate far into both tails
double log_ndtr(double x);

// log of  int (lambda/2) exp(-lambda |g|) phi(g; m, s) dg
double log_laplace_gauss(double m, double s, double lambda);

// Neumaier-compensated running sum
class CompensatedSum {
public:
    void add(double x)
    {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
    std::size_t count = 0;
};

MeanSe mean_se(std::span<const double> xs);

double pearson_correlation(std::span<const double> a, std::span<const double> b);

}  // namespace ebprde
