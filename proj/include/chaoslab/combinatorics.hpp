#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <optional>
#include <set>
#include <vector>

// Exact enumeration and counting of the index sets that survive the
// cancellation rule: the overall set T_{q,p}, the effective sets E_{q,p}
// and P^I_{N,2k}, and the combinatorial bounds used to sum the series.
// All exact counts use arbitrary-precision integers.

namespace chaoslab::comb {

using BigInt = mpz_class;

// Enumeration guard: brute-force scans refuse more than this many tuples.
inline constexpr double kEnumGuard = 1e8;

struct IndexTuple {
    std::vector<int> entries;  // each in 1..q
    int q = 0;

    int p() const { return static_cast<int>(entries.size()); }
    void validate() const;
};

struct MultiplicitySignature {
    std::vector<int> counts;  // a_1..a_q, sum = p

    int sum() const;
};

struct EffectiveCounts {
    int q = 0, p = 0;
    BigInt exact_count;
    BigInt formula_count;
    double upper_bound = 0.0;
    bool consistent() const;
};

MultiplicitySignature multiplicity(const IndexTuple& tuple);
std::set<int> support(const IndexTuple& tuple);

// A tuple is effective when every symbol it uses appears at least twice.
bool is_effective(const IndexTuple& tuple);

// |E_{q,p}| by exhaustive enumeration of the q^p tuples.  p = 0 counts the
// empty tuple (1, matching the k = 0 term of the series).
BigInt count_effective_bruteforce(int q, int p);

// |E_{q,p}| = sum_{l=1}^{floor(p/2)} C(q,l) * W^l_{q,p} with
// W^l = sum over compositions of p into l parts >= 2 of p!/(a_1!...a_l!).
BigInt count_effective_formula(int q, int p);

// (p/2) e^{p/2} q^{p/2} (p/2)^{p/2}; requires 1 <= p <= q.
double effective_count_bound(int q, int p);

// Convenience: all three routes for |E_{q,p}|.
EffectiveCounts effective_counts(int q, int p);

// Membership rule for P^I_{N,2k}: every component of J outside S(I) must
// be repeated in J.  (The "all components inside S(I)" clause of the
// definition is the vacuous case of this one.)
bool p_membership(const IndexTuple& I, const IndexTuple& J);

// |P^I_{N,2k}| by enumerating all J in {1..n}^{|I|}; I must be effective.
BigInt count_p_bruteforce(const IndexTuple& I, int n);

// |P^I| = l^{2k} + sum_{h=2}^{2k} l^{2k-h} C(2k,h) |E_{N-l,h}|,
// depending on I only through l = |S(I)|.
BigInt count_p_formula(int l, int n, int k);

// P_{N,2k} = 2k e^k 4^k k^k N^k.
double p_count_bound(int n, int k);

// Ordered compositions of q into p parts, each part >= min_part.
std::vector<std::vector<int>> enumerate_compositions(int q, int p, int min_part);

// Positive compositions of q into p parts: C(q-1, p-1).
BigInt compositions_count(int q, int p);

// U^l_{2k} = sum over compositions of 2k into l parts >= 2 of
// (2k)!/(a_1!...a_l!) * a_1^{a_1}...a_l^{a_l}.
BigInt u_exact(int k, int l);

// (2e)^{2k} (2k)! / sqrt(k).
double u_bound(int k);

// Nonnegative solutions of a_1+...+a_N = 2k: C(2k+N-1, N-1).
BigInt v_count(int n, int k);
BigInt v_bruteforce(int n, int k);

// Per-k bounds of the two series halves at x = |K|_inf * sup_p(M_p/p):
// small-k term 2k (8e^2 x)^{2k}, large-k term (5e^2 x)^{2k}; the summed
// small series 2 sum k r^k = 2r/(1-r)^2 at r = (8e^2 x)^2 when r < 1.
struct TermBounds {
    double small_term = 0.0;
    double big_term = 0.0;
    std::optional<double> small_series;
    std::optional<double> big_series;
};
TermBounds proposition_term_bounds(int k, double x);

BigInt binomial(unsigned long n, unsigned long k);
BigInt factorial(unsigned long n);

}  // namespace chaoslab::comb
