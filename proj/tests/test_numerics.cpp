#include <catch_amalgamated.hpp>

#include "ebprde/numerics.hpp"
#include "ebprde/quadrature.hpp"
#include "ebprde/rng.hpp"

#include <cmath>
#include <set>
#include <vector>

using namespace ebprde;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("log_sum_exp handles large and empty inputs")
{
    std::vector<double> xs = {1000.0, 1000.0};
    CHECK_THAT(log_sum_exp(xs), WithinAbs(1000.0 + std::log(2.0), 1e-12));
    std::vector<double> none;
    CHECK(log_sum_exp(none) == kNegInf);
    std::vector<double> mixed = {kNegInf, -3.0};
    CHECK_THAT(log_sum_exp(mixed), WithinAbs(-3.0, 1e-15));
    CHECK_THAT(log_add_exp(std::log(2.0), std::log(3.0)), WithinAbs(std::log(5.0), 1e-15));
    CHECK(log_add_exp(kNegInf, 4.0) == 4.0);
}

TEST_CASE("log_phi matches the density formula")
{
    CHECK_THAT(log_phi(0.0, 0.0, 1.0), WithinAbs(-0.918938533204673, 1e-14));
    CHECK_THAT(std::exp(log_phi(1.3, -0.2, 2.5)),
               WithinRel(std::exp(-0.5 * 0.36) / (2.5 * std::sqrt(2.0 * M_PI)), 1e-13));
}

TEST_CASE("erfcx agrees with exp(x^2) erfc(x) and with its asymptotic series")
{
    for (double x : {-3.0, -1.0, 0.0, 0.3, 1.0, 4.0, 10.0, 20.0})
        CHECK_THAT(erfcx(x), WithinRel(std::exp(x * x) * std::erfc(x), 1e-10));
    for (double x : {30.0, 100.0, 1e4}) {
        const double series = (1.0 - 0.5 / (x * x) + 0.75 / std::pow(x, 4)) / (x * std::sqrt(M_PI));
        CHECK_THAT(erfcx(x), WithinRel(series, 1e-8));
    }
}

TEST_CASE("log_ndtr is accurate in both tails")
{
    for (double x : {-5.0, -1.0, 0.0, 2.0, 6.0})
        CHECK_THAT(log_ndtr(x), WithinAbs(std::log(0.5 * std::erfc(-x / std::sqrt(2.0))), 1e-12));
    // Mills ratio expansion: Phi(x) ~ phi(x)/|x| (1 - 1/x^2 + 3/x^4)
    const double x = -40.0;
    const double expect = log_phi(x, 0.0, 1.0) - std::log(-x) + std::log(1.0 - 1.0 / (x * x) + 3.0 / std::pow(x, 4));
    CHECK_THAT(log_ndtr(x), WithinAbs(expect, 1e-8));
    CHECK_THAT(log_ndtr(40.0), WithinAbs(0.0, 1e-300));
}

TEST_CASE("log_laplace_gauss matches trapezoid integration")
{
    for (auto [m, s, lam] : std::vector<std::tuple<double, double, double>>{{0.0, 1.0, 1.0}, {2.0, 0.3, 4.0}, {-1.5, 2.0, 0.5}}) {
        const double lo = -60.0, hi = 60.0;
        const int N = 600000;
        const double h = (hi - lo) / N;
        double acc = 0.0;
        for (int i = 0; i <= N; ++i) {
            const double g = lo + i * h;
            const double f = 0.5 * lam * std::exp(-lam * std::abs(g)) * std::exp(log_phi(g, m, s));
            acc += (i == 0 || i == N) ? 0.5 * f : f;
        }
        CHECK_THAT(log_laplace_gauss(m, s, lam), WithinAbs(std::log(acc * h), 1e-7));
    }
}

TEST_CASE("compensated sum recovers small terms")
{
    CompensatedSum s;
    s.add(1e16);
    for (int i = 0; i < 1000; ++i) s.add(1.0);
    s.add(-1e16);
    CHECK(s.value() == 1000.0);
}

TEST_CASE("mean_se and pearson_correlation")
{
    std::vector<double> xs = {1.0, 2.0, 3.0, 4.0};
    const MeanSe m = mean_se(xs);
    CHECK_THAT(m.mean, WithinAbs(2.5, 1e-15));
    CHECK_THAT(m.se, WithinAbs(std::sqrt(5.0 / 3.0 / 4.0), 1e-14));
    CHECK(m.count == 4);
    std::vector<double> ys = {2.0, 4.0, 6.0, 8.0}, zs = {4.0, 3.0, 2.0, 1.0};
    CHECK_THAT(pearson_correlation(xs, ys), WithinAbs(1.0, 1e-14));
    CHECK_THAT(pearson_correlation(xs, zs), WithinAbs(-1.0, 1e-14));
}

TEST_CASE("Gauss-Hermite rule integrates normal moments")
{
    for (std::size_t n : {5u, 21u, 61u}) {
        const auto& q = gauss_hermite(n);
        REQUIRE(q.size() == n);
        double w = 0.0, m2 = 0.0, m4 = 0.0, m1 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            w += q.weights[i];
            m1 += q.weights[i] * q.nodes[i];
            m2 += q.weights[i] * std::pow(q.nodes[i], 2);
            m4 += q.weights[i] * std::pow(q.nodes[i], 4);
        }
        CHECK_THAT(w, WithinAbs(1.0, 1e-13));
        CHECK_THAT(m1, WithinAbs(0.0, 1e-13));
        CHECK_THAT(m2, WithinAbs(1.0, 1e-12));
        CHECK_THAT(m4, WithinAbs(3.0, 1e-11));
    }
    // E X^20 = 19!! is exact for 11 or more nodes
    const auto& q = gauss_hermite(21);
    double m20 = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) m20 += q.weights[i] * std::pow(q.nodes[i], 20);
    CHECK_THAT(m20, WithinRel(654729075.0, 1e-9));
}

TEST_CASE("Gauss-Laguerre rule integrates t^k e^-t")
{
    const auto& q = gauss_laguerre(30);
    double fact = 1.0;
    for (int k = 0; k <= 12; ++k) {
        if (k > 0) fact *= k;
        double acc = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) acc += q.weights[i] * std::pow(q.nodes[i], k);
        CHECK_THAT(acc, WithinRel(fact, 1e-9));
    }
}

TEST_CASE("RNG streams are deterministic and label-separated")
{
    auto a = seed_stream(42, "case", 3, "design");
    auto b = seed_stream(42, "case", 3, "design");
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    auto c = seed_stream(42, "rep", 0), d = seed_stream(42, "rep", 1);
    std::vector<double> x, y;
    for (int i = 0; i < 100000; ++i) {
        x.push_back(c.normal());
        y.push_back(d.normal());
    }
    CHECK(std::abs(pearson_correlation(x, y)) < 0.01);
    const MeanSe mx = mean_se(x);
    CHECK(std::abs(mx.mean) < 4.0 * mx.se);

    auto e = seed_stream(7, "a", "b");
    const std::string text = e.serialize();
    CHECK(text == "7:a/b");
    auto f = RngStream::deserialize(text);
    for (int i = 0; i < 50; ++i) CHECK(e.next_u64() == f.next_u64());
    CHECK_THROWS(RngStream::deserialize("nonsense"));
}

TEST_CASE("RNG bounded draws and uniforms stay in range")
{
    auto r = seed_stream(1, "bounds");
    std::set<std::size_t> seen;
    for (int i = 0; i < 10000; ++i) {
        const auto k = r.below(7);
        REQUIRE(k < 7);
        seen.insert(k);
        const double u = r.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
    }
    CHECK(seen.size() == 7);
    std::vector<double> ex;
    for (int i = 0; i < 100000; ++i) ex.push_back(r.exponential(2.0));
    const MeanSe m = mean_se(ex);
    CHECK(std::abs(m.mean - 0.5) < 4.0 * m.se);
}
