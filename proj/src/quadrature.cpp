#include "chaoslab/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace chaoslab::quad {

Rule gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: need n >= 1");
    Rule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        // Chebyshev-based initial guess, then Newton on P_n.
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        r.nodes[i] = -x;
        r.nodes[n - 1 - i] = x;
        r.weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
        r.weights[n - 1 - i] = r.weights[i];
    }
    if (n % 2 == 1) r.nodes[n / 2] = 0.0;
    return r;
}

Rule mapped(const Rule& base, double a, double b) {
    Rule r = base;
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (b + a);
    for (std::size_t i = 0; i < r.nodes.size(); ++i) {
        r.nodes[i] = mid + half * base.nodes[i];
        r.weights[i] = half * base.weights[i];
    }
    return r;
}

Rule gauss_legendre(int n, double a, double b) { return mapped(gauss_legendre(n), a, b); }

}  // namespace chaoslab::quad
