#pragma once

#include <cstddef>
#include <vector>

namespace ebprde {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    std::size_t size() const { return nodes.size(); }
};

// Rule for E f(X), X ~ N(0,1); weights sum to one.
const QuadratureRule& gauss_hermite(std::size_t n);

// Rule for int_0^inf e^{-t} f(t) dt; weights sum to one.
const QuadratureRule& gauss_laguerre(std::size_t n);

// Rule for (1/2) int_{-1}^{1} f(x) dx; weights sum to one.
const QuadratureRule& gauss_legendre(std::size_t n);

// Rule for E f(X), X ~ N(0,1), from Gauss-Legendre panels on [-10, 10] with
// about n/2 points each. Slower than Gauss-Hermite but robust to integrands
// with sharp bends, such as log-marginals of atomic priors.
const QuadratureRule& normal_panels(std::size_t n);

}  // namespace ebprde
