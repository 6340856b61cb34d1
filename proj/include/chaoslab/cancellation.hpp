#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chaoslab/combinatorics.hpp"
#include "chaoslab/kernels.hpp"
#include "chaoslab/reference_law.hpp"

// Numerical verification of the cancellation structure of R_N: the
// product integrals
//   int prod_nu F_{i_nu} . k_{i_nu, j_nu}  f^{(x)N} dZ,
// their vanishing for non-effective index pairs, and the effective-set
// expansion identity for int R_N^{2k} f_N.

namespace chaoslab::cancel {

enum class Method { quadrature, monte_carlo };

struct ProductIntegralSpec {
    comb::IndexTuple index_i;  // I, entries in 1..n
    comb::IndexTuple index_j;  // J, same length
    const ReferenceLaw* law = nullptr;
    const Kernel* kernel = nullptr;
    std::size_t n = 0;
    Method method = Method::quadrature;
    int quad_nodes = 64;       // per active coordinate; halved for the error estimate
    std::size_t samples = 100000;
    std::uint64_t seed = 1;
};

struct IntegralResult {
    double value = 0.0;
    double error = 0.0;  // node-doubling estimate (quadrature) or stderr (MC)
};

// Integrates only over the active particles S(I) u S(J); every inactive
// particle integrates to 1.  Quadrature is a Gauss-Legendre tensor rule
// per active coordinate, evaluated by iterated integration (velocity
// moments first), and supports up to 4 active particles.
IntegralResult integral_product(const ProductIntegralSpec& spec, int threads = 1);

struct CheckRow {
    std::string check;
    std::string tuple_i;
    std::string tuple_j;
    std::size_t n = 0;
    std::string method;
    double value = 0.0;
    double error = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct Report {
    std::vector<CheckRow> rows;
    bool all_pass() const;
};

// int R_N f_N dZ = 0: quadrature (small n) or Monte-Carlo mean within
// 3 stderr.
Report verify_mean_cancellation(const ReferenceLaw& law, const Kernel& kernel, std::size_t n,
                      Method method, std::size_t samples = 100000, std::uint64_t seed = 1,
                      int threads = 1);

// int R_N^2 f_N equals the diagonal-only sum and obeys the bound
// 4 |K|^2 M_2^2.
Report verify_second_moment(const ReferenceLaw& law, const Kernel& kernel, std::size_t n,
                      Method method, std::size_t samples = 100000, std::uint64_t seed = 1,
                      int threads = 1);

// Exhaustive scan of all (I, J) pairs of length p <= p_max over {1..n}:
// every pair hit by case 1 or case 2 of the cancellation rule integrates
// to |value| <= 1e-8; effective pairs are recorded.
Report verify_cancellation_scan(const ReferenceLaw& law, const Kernel& kernel, std::size_t n,
                           int p_max, int quad_nodes = 64, int threads = 1);

// The full T x T sum over index pairs equals the effective-set restricted
// sum, equals N^{2k} int R_N^{2k} f_N (Monte-Carlo), and dropping one
// effective term breaks the identity.
Report verify_expansion(const ReferenceLaw& law, const Kernel& kernel, std::size_t n, int k,
                        std::size_t samples = 200000, std::uint64_t seed = 1,
                        int quad_nodes = 64, int threads = 1);

}  // namespace chaoslab::cancel
