#include "chaoslab/combinatorics.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace chaoslab::comb {

namespace {

// Visits every tuple in {1..q}^p in lexicographic order.
template <typename F>
void for_each_tuple(int q, int p, F&& visit) {
    std::vector<int> t(p, 1);
    if (p == 0) {
        visit(t);
        return;
    }
    while (true) {
        visit(t);
        int pos = p - 1;
        while (pos >= 0 && t[pos] == q) {
            t[pos] = 1;
            --pos;
        }
        if (pos < 0) break;
        ++t[pos];
    }
}

void check_enum_guard(int q, int p) {
    if (p > 0 && std::pow(static_cast<double>(q), p) > kEnumGuard)
        throw std::invalid_argument("enumeration guard: q^p exceeds 1e8 tuples");
}

}  // namespace

BigInt binomial(unsigned long n, unsigned long k) {
    BigInt r;
    if (k > n) return 0;
    mpz_bin_uiui(r.get_mpz_t(), n, k);
    return r;
}

BigInt factorial(unsigned long n) {
    BigInt r;
    mpz_fac_ui(r.get_mpz_t(), n);
    return r;
}

void IndexTuple::validate() const {
    if (q < 1) throw std::invalid_argument("IndexTuple: alphabet size q must be >= 1");
    for (int e : entries)
        if (e < 1 || e > q) throw std::invalid_argument("IndexTuple: entry outside 1..q");
}

int MultiplicitySignature::sum() const {
    int s = 0;
    for (int c : counts) s += c;
    return s;
}

bool EffectiveCounts::consistent() const {
    return exact_count == formula_count && mpz_get_d(exact_count.get_mpz_t()) <= upper_bound;
}

MultiplicitySignature multiplicity(const IndexTuple& tuple) {
    tuple.validate();
    MultiplicitySignature sig;
    sig.counts.assign(tuple.q, 0);
    for (int e : tuple.entries) ++sig.counts[e - 1];
    return sig;
}

std::set<int> support(const IndexTuple& tuple) {
    tuple.validate();
    return std::set<int>(tuple.entries.begin(), tuple.entries.end());
}

bool is_effective(const IndexTuple& tuple) {
    const auto sig = multiplicity(tuple);
    for (int c : sig.counts)
        if (c == 1) return false;
    return true;
}

BigInt count_effective_bruteforce(int q, int p) {
    if (q < 1 || p < 0) throw std::invalid_argument("count_effective: need q >= 1, p >= 0");
    if (p == 0) return 1;  // the empty tuple
    check_enum_guard(q, p);
    BigInt count = 0;
    std::vector<int> mult(q, 0);
    for_each_tuple(q, p, [&](const std::vector<int>& t) {
        for (int& m : mult) m = 0;
        for (int e : t) ++mult[e - 1];
        for (int m : mult)
            if (m == 1) return;
        ++count;
    });
    return count;
}

std::vector<std::vector<int>> enumerate_compositions(int q, int p, int min_part) {
    std::vector<std::vector<int>> out;
    if (p == 0) {
        if (q == 0) out.push_back({});
        return out;
    }
    // Depth-first over part values.
    std::vector<int> current(p, 0);
    std::function<void(int, int)> rec = [&](int idx, int remaining) {
        if (idx == p - 1) {
            if (remaining >= min_part) {
                current[idx] = remaining;
                out.push_back(current);
            }
            return;
        }
        const int slots_left = p - idx - 1;
        for (int a = min_part; remaining - a >= min_part * slots_left; ++a) {
            current[idx] = a;
            rec(idx + 1, remaining - a);
        }
    };
    rec(0, q);
    return out;
}

BigInt count_effective_formula(int q, int p) {
    if (q < 1 || p < 0) throw std::invalid_argument("count_effective: need q >= 1, p >= 0");
    if (p == 0) return 1;
    if (p == 1) return 0;
    const BigInt pfac = factorial(p);
    BigInt total = 0;
    for (int l = 1; l <= p / 2; ++l) {
        if (l > q) break;
        BigInt w = 0;  // W^l_{q,p}
        for (const auto& comp : enumerate_compositions(p, l, 2)) {
            BigInt denom = 1;
            for (int a : comp) denom *= factorial(a);
            w += pfac / denom;
        }
        total += binomial(q, l) * w;
    }
    return total;
}

double effective_count_bound(int q, int p) {
    // The chain of inequalities is proven for 1 <= p <= q; the closed form
    // itself is total and stays valid on the desk-scale grid.
    if (p < 1 || q < 1) throw std::invalid_argument("effective_count_bound: need p, q >= 1");
    const double half = 0.5 * p;
    return half * std::exp(half) * std::pow(static_cast<double>(q), half) * std::pow(half, half);
}

EffectiveCounts effective_counts(int q, int p) {
    EffectiveCounts ec;
    ec.q = q;
    ec.p = p;
    ec.exact_count = count_effective_bruteforce(q, p);
    ec.formula_count = count_effective_formula(q, p);
    ec.upper_bound = (p >= 1 && p <= q) ? effective_count_bound(q, p)
                                        : std::numeric_limits<double>::infinity();
    return ec;
}

bool p_membership(const IndexTuple& I, const IndexTuple& J) {
    if (I.entries.size() != J.entries.size())
        throw std::invalid_argument("p_membership: I and J must have equal length");
    const auto s = support(I);
    const auto jm = multiplicity(J);
    for (int e : J.entries)
        if (!s.count(e) && jm.counts[e - 1] < 2) return false;
    return true;
}

BigInt count_p_bruteforce(const IndexTuple& I, int n) {
    I.validate();
    if (I.q != n) throw std::invalid_argument("count_p_bruteforce: I alphabet must be 1..n");
    if (!is_effective(I))
        throw std::invalid_argument("count_p_bruteforce: I must be effective");
    const int p = I.p();
    check_enum_guard(n, p);
    const auto s = support(I);
    BigInt count = 0;
    std::vector<int> mult(n, 0);
    for_each_tuple(n, p, [&](const std::vector<int>& t) {
        for (int& m : mult) m = 0;
        for (int e : t) ++mult[e - 1];
        for (int e : t)
            if (!s.count(e) && mult[e - 1] < 2) return;
        ++count;
    });
    return count;
}

BigInt count_p_formula(int l, int n, int k) {
    if (l < 1 || k < 1 || n < l)
        throw std::invalid_argument("count_p_formula: need 1 <= l <= n, k >= 1");
    const int p = 2 * k;
    BigInt total;
    mpz_ui_pow_ui(total.get_mpz_t(), static_cast<unsigned long>(l), p);
    // No symbols outside S(I) to pick from: only the l^{2k} block remains.
    if (n == l) return total;
    for (int h = 2; h <= p; ++h) {
        BigInt lpow;
        mpz_ui_pow_ui(lpow.get_mpz_t(), static_cast<unsigned long>(l), p - h);
        total += lpow * binomial(p, h) * count_effective_formula(n - l, h);
    }
    return total;
}

double p_count_bound(int n, int k) {
    if (k < 1 || n < 1) throw std::invalid_argument("p_count_bound: need n, k >= 1");
    const double kd = k;
    return 2.0 * kd * std::exp(kd) * std::pow(4.0, kd) * std::pow(kd, kd) *
           std::pow(static_cast<double>(n), kd);
}

BigInt compositions_count(int q, int p) {
    if (p < 1 || q < p) throw std::invalid_argument("compositions_count: need q >= p >= 1");
    return binomial(q - 1, p - 1);
}

BigInt u_exact(int k, int l) {
    if (k < 1 || l < 1 || l > k) throw std::invalid_argument("u_exact: need 1 <= l <= k");
    const int p = 2 * k;
    const BigInt pfac = factorial(p);
    BigInt total = 0;
    for (const auto& comp : enumerate_compositions(p, l, 2)) {
        BigInt denom = 1;
        BigInt selfpow = 1;
        for (int a : comp) {
            denom *= factorial(a);
            BigInt ap;
            mpz_ui_pow_ui(ap.get_mpz_t(), static_cast<unsigned long>(a),
                          static_cast<unsigned long>(a));
            selfpow *= ap;
        }
        total += pfac / denom * selfpow;
    }
    return total;
}

double u_bound(int k) {
    if (k < 1) throw std::invalid_argument("u_bound: need k >= 1");
    const double fac = mpz_get_d(factorial(2 * k).get_mpz_t());
    return std::pow(2.0 * std::exp(1.0), 2.0 * k) * fac / std::sqrt(static_cast<double>(k));
}

BigInt v_count(int n, int k) {
    if (n < 1 || k < 0) throw std::invalid_argument("v_count: need n >= 1, k >= 0");
    return binomial(2 * k + n - 1, n - 1);
}

BigInt v_bruteforce(int n, int k) {
    if (n < 1 || k < 0) throw std::invalid_argument("v_bruteforce: need n >= 1, k >= 0");
    // Count nonnegative (a_1..a_n) with sum 2k.
    BigInt count = 0;
    std::function<void(int, int)> rec = [&](int idx, int remaining) {
        if (idx == n - 1) {
            ++count;
            return;
        }
        for (int a = 0; a <= remaining; ++a) rec(idx + 1, remaining - a);
    };
    rec(0, 2 * k);
    return count;
}

TermBounds proposition_term_bounds(int k, double x) {
    if (k < 1 || x < 0.0)
        throw std::invalid_argument("proposition_term_bounds: need k >= 1, x >= 0");
    TermBounds tb;
    const double e2 = std::exp(2.0);
    const double small_base = 8.0 * e2 * x;
    const double big_base = 5.0 * e2 * x;
    tb.small_term = 2.0 * k * std::pow(small_base, 2 * k);
    tb.big_term = std::pow(big_base, 2 * k);
    if (small_base < 1.0) {
        const double r = small_base * small_base;
        tb.small_series = 2.0 * r / ((1.0 - r) * (1.0 - r));
        const double rb = big_base * big_base;
        tb.big_series = rb / (1.0 - rb);
    }
    return tb;
}

}  // namespace chaoslab::comb
