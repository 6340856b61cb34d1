#pragma once

#include <vector>

namespace chaoslab::quad {

// Gauss-Legendre rule with n nodes on [a, b].
struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
    int size() const { return static_cast<int>(nodes.size()); }
};

// Nodes/weights on [-1, 1], exact for polynomials up to degree 2n-1.
Rule gauss_legendre(int n);

Rule mapped(const Rule& base, double a, double b);

Rule gauss_legendre(int n, double a, double b);

}  // namespace chaoslab::quad
