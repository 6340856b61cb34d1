#include "chaoslab/chaos_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "chaoslab/parallel.hpp"
#include "chaoslab/quadrature.hpp"
#include "chaoslab/rng.hpp"

namespace chaoslab {

RnEvaluator::RnEvaluator(const ReferenceLaw& law, const Kernel& kernel)
    : law_(law), kernel_(kernel), conv_(law.conv_field(kernel)) {
    if (kernel.dim() != 1)
        throw std::invalid_argument("RnEvaluator: only 1-d kernels supported");
}

double RnEvaluator::operator()(std::span<const double> xs,
                               std::span<const double> vs) const {
    const std::size_t n = xs.size();
    // (1/N) sum_i F_i ( sum_{j != i} K(x_i - x_j) - N K*rho(x_i) ); the
    // diagonal j = i contributes only -K*rho via K(0) = 0.
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double pair_sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            pair_sum += kernel_.eval1(xs[i] - xs[j]);
        }
        const double field = pair_sum - static_cast<double>(n) * conv_(xs[i]);
        acc += law_.score_v(xs[i], vs[i]) * field;
    }
    return acc / static_cast<double>(n);
}

double RnEvaluator::value(const ParticleEnsemble& ens) const {
    if (ens.dim != 1) throw std::invalid_argument("RnEvaluator: ensemble must be 1-d");
    return (*this)(ens.positions, ens.velocities);
}

double RnEvaluator::trivial_bound(std::span<const double> xs,
                                  std::span<const double> vs) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        acc += std::abs(law_.score_v(xs[i], vs[i]));
    return 2.0 * kernel_.sup_norm() * acc;
}

double r_n(const ParticleEnsemble& ens, const ReferenceLaw& law, const Kernel& kernel) {
    return RnEvaluator(law, kernel).value(ens);
}

double m_p(const ReferenceLaw& law, int p) { return law.m_p(p); }

double m_p_quadrature(const ReferenceLaw& law, int p, int x_nodes, int v_nodes) {
    if (p < 1) throw std::invalid_argument("m_p_quadrature: need p >= 1");
    const double vmax = 10.0 * law.sigma() + 2.0;
    const quad::Rule rx = quad::gauss_legendre(x_nodes, 0.0, 1.0);
    // |score|^p has a kink where the score vanishes (v = 0 for the built-in
    // family); integrate the halves separately so the rule sees smooth data.
    const quad::Rule half = quad::gauss_legendre(v_nodes / 2);
    const quad::Rule rv_neg = quad::mapped(half, -vmax, 0.0);
    const quad::Rule rv_pos = quad::mapped(half, 0.0, vmax);
    double acc = 0.0;
    for (int i = 0; i < rx.size(); ++i) {
        double inner = 0.0;
        for (const quad::Rule* rv : {&rv_neg, &rv_pos})
            for (int j = 0; j < rv->size(); ++j) {
                const double s = std::abs(law.score_v(rx.nodes[i], rv->nodes[j]));
                inner += rv->weights[j] * std::pow(s, p) *
                         law.density(rx.nodes[i], rv->nodes[j]);
            }
        acc += rx.weights[i] * inner;
    }
    if (!(acc > 0.0) || !std::isfinite(acc))
        throw std::runtime_error("m_p_quadrature: quadrature did not converge");
    return std::pow(acc, 1.0 / p);
}

double sup_ratio(const ReferenceLaw& law, int p_max) {
    double best = 0.0;
    for (int p = 1; p <= p_max; ++p) best = std::max(best, law.m_p(p) / p);
    return best;
}

double choose_nu(double k_norm, double sup_ratio_value) {
    if (!(k_norm > 0.0) || !(sup_ratio_value > 0.0))
        throw std::invalid_argument("choose_nu: inputs must be positive");
    return 1.0 / (16.0 * std::exp(2.0) * k_norm * sup_ratio_value);
}

double theorem_bound(double a) {
    if (a < 0.0 || a >= 1.0)
        throw std::invalid_argument("theorem_bound: outside theorem regime (need 0 <= a < 1)");
    const double q = a / (1.0 - a * a);
    return 5.0 + 6.0 * q * q;
}

namespace {

constexpr std::size_t kMcChunk = 4096;

struct ChunkExp {
    double max_arg = -std::numeric_limits<double>::infinity();
    double sum1 = 0.0;  // sum exp(arg - max_arg)
    double sum2 = 0.0;  // sum exp(2 (arg - max_arg))
};

// Streams sample exp-arguments chunk by chunk in log space.
void merge(ChunkExp& into, const ChunkExp& c) {
    if (c.max_arg == -std::numeric_limits<double>::infinity()) return;
    if (c.max_arg <= into.max_arg) {
        const double shift = std::exp(c.max_arg - into.max_arg);
        into.sum1 += c.sum1 * shift;
        into.sum2 += c.sum2 * shift * shift;
    } else {
        const double shift = std::exp(into.max_arg - c.max_arg);
        into.sum1 = into.sum1 * shift + c.sum1;
        into.sum2 = into.sum2 * shift * shift + c.sum2;
        into.max_arg = c.max_arg;
    }
}

}  // namespace

ExpMomentResult mc_exp_moment(const ReferenceLaw& law, const Kernel& kernel, double nu,
                              std::size_t n, std::size_t samples, std::uint64_t seed,
                              int threads) {
    if (!(nu > 0.0)) throw std::invalid_argument("mc_exp_moment: nu must be > 0");
    if (n < 1 || samples < 2)
        throw std::invalid_argument("mc_exp_moment: need n >= 1 and samples >= 2");
    if (!law.has_sampler()) throw std::invalid_argument("mc_exp_moment: law has no sampler");
    const RnEvaluator rn(law, kernel);
    const std::uint64_t key = rng::derive_key(seed, rng::kPurposeMc);

    // Each chunk re-derives its samples from counters; double evaluation
    // of each sample (max pass + sum pass) is avoided by caching per chunk.
    const std::size_t nchunks = (samples + kMcChunk - 1) / kMcChunk;
    std::vector<ChunkExp> chunks(nchunks);
    parallel_for_blocks(nchunks, threads, [&](std::size_t c) {
        const std::size_t lo = c * kMcChunk;
        const std::size_t hi = std::min(samples, lo + kMcChunk);
        std::vector<double> xs(n), vs(n), args;
        args.reserve(hi - lo);
        double max_arg = -std::numeric_limits<double>::infinity();
        for (std::size_t s = lo; s < hi; ++s) {
            for (std::size_t i = 0; i < n; ++i)
                law.sample(key, s * n + i, xs[i], vs[i]);
            const double a = nu * std::abs(rn(xs, vs));
            args.push_back(a);
            max_arg = std::max(max_arg, a);
        }
        ChunkExp& ce = chunks[c];
        ce.max_arg = max_arg;
        for (double a : args) {
            const double d = a - max_arg;
            ce.sum1 += std::exp(d);
            ce.sum2 += std::exp(2.0 * d);
        }
    });
    ChunkExp total;
    for (const ChunkExp& c : chunks) merge(total, c);

    ExpMomentResult res;
    res.samples = samples;
    const double logn = std::log(static_cast<double>(samples));
    const double log_mean = total.max_arg + std::log(total.sum1) - logn;
    res.estimate = std::exp(log_mean);
    const double mean2 = std::exp(2.0 * total.max_arg + std::log(total.sum2) - logn);
    const double var = std::max(0.0, mean2 - res.estimate * res.estimate) *
                       (static_cast<double>(samples) / std::max<double>(1.0, samples - 1));
    res.stderr_est = std::sqrt(var / static_cast<double>(samples));
    res.max_share = std::exp(total.max_arg - (log_mean + logn));
    res.unstable = res.max_share > 0.05;
    return res;
}

RnMoments mc_rn_moments(const ReferenceLaw& law, const Kernel& kernel, std::size_t n,
                        std::size_t samples, std::uint64_t seed, int threads) {
    if (n < 1 || samples < 2)
        throw std::invalid_argument("mc_rn_moments: need n >= 1 and samples >= 2");
    const RnEvaluator rn(law, kernel);
    const std::uint64_t key = rng::derive_key(seed, rng::kPurposeMc);
    const std::size_t nchunks = (samples + kMcChunk - 1) / kMcChunk;
    struct Acc {
        double sum_r = 0.0, sum_r2 = 0.0, sum_r4 = 0.0;
    };
    std::vector<Acc> accs(nchunks);
    parallel_for_blocks(nchunks, threads, [&](std::size_t c) {
        const std::size_t lo = c * kMcChunk;
        const std::size_t hi = std::min(samples, lo + kMcChunk);
        std::vector<double> xs(n), vs(n);
        Acc& a = accs[c];
        for (std::size_t s = lo; s < hi; ++s) {
            for (std::size_t i = 0; i < n; ++i)
                law.sample(key, s * n + i, xs[i], vs[i]);
            const double r = rn(xs, vs);
            const double r2 = r * r;
            a.sum_r += r;
            a.sum_r2 += r2;
            a.sum_r4 += r2 * r2;  // for the stderr of the second moment
        }
    });
    double s1 = 0.0, s2 = 0.0, s4 = 0.0;
    for (const Acc& a : accs) {
        s1 += a.sum_r;
        s2 += a.sum_r2;
        s4 += a.sum_r4;
    }
    const double ns = static_cast<double>(samples);
    RnMoments m;
    m.mean = s1 / ns;
    m.second = s2 / ns;
    const double var1 = std::max(0.0, s2 / ns - m.mean * m.mean);
    const double var2 = std::max(0.0, s4 / ns - m.second * m.second);
    m.mean_stderr = std::sqrt(var1 / ns);
    m.second_stderr = std::sqrt(var2 / ns);
    return m;
}

// ---- marginals ----------------------------------------------------------

namespace {

int clampi(int v, int lo, int hi) { return std::max(lo, std::min(hi, v)); }

int bin_of(double x, double v, const BinSpec& bins) {
    const int bx = clampi(static_cast<int>(wrap_torus(x) * bins.bx), 0, bins.bx - 1);
    const double vs = (v + bins.vmax) / (2.0 * bins.vmax);
    const int bv = clampi(static_cast<int>(vs * bins.bv), 0, bins.bv - 1);
    return bx * bins.bv + bv;
}

}  // namespace

std::vector<double> bin_law(const ReferenceLaw& law, const BinSpec& bins) {
    // Per-bin mass by Gauss-Legendre within each cell; velocity tails
    // beyond vmax are folded into the edge bins, matching the sample rule.
    std::vector<double> probs(static_cast<std::size_t>(bins.bx) * bins.bv, 0.0);
    const quad::Rule base = quad::gauss_legendre(16);
    for (int ix = 0; ix < bins.bx; ++ix) {
        const double x0 = static_cast<double>(ix) / bins.bx;
        const double x1 = static_cast<double>(ix + 1) / bins.bx;
        const quad::Rule rx = quad::mapped(base, x0, x1);
        for (int iv = 0; iv < bins.bv; ++iv) {
            double v0 = -bins.vmax + 2.0 * bins.vmax * iv / bins.bv;
            double v1 = -bins.vmax + 2.0 * bins.vmax * (iv + 1) / bins.bv;
            if (iv == 0) v0 = -20.0 * bins.vmax;
            if (iv == bins.bv - 1) v1 = 20.0 * bins.vmax;
            const quad::Rule rv = quad::mapped(base, v0, v1);
            double acc = 0.0;
            for (int i = 0; i < rx.size(); ++i)
                for (int j = 0; j < rv.size(); ++j)
                    acc += rx.weights[i] * rv.weights[j] *
                           law.density(rx.nodes[i], rv.nodes[j]);
            probs[static_cast<std::size_t>(ix) * bins.bv + iv] = acc;
        }
    }
    double total = 0.0;
    for (double p : probs) total += p;
    for (double& p : probs) p /= total;
    return probs;
}

namespace {

// Overlap lengths of the interval [a, b] within uniform bins over [lo, hi];
// appends (bin, length) pairs.  At most two bins for cells narrower than a
// bin.
void split_interval(double a, double b, int nbins, double lo, double hi,
                    std::vector<std::pair<int, double>>& out) {
    const double width = (hi - lo) / nbins;
    a = std::max(a, lo);
    b = std::min(b, hi);
    if (b <= a) return;
    int ia = clampi(static_cast<int>((a - lo) / width), 0, nbins - 1);
    const int ib = clampi(static_cast<int>((b - lo) / width * (1.0 - 1e-15)), 0, nbins - 1);
    for (int i = ia; i <= ib; ++i) {
        const double seg_lo = std::max(a, lo + i * width);
        const double seg_hi = std::min(b, lo + (i + 1) * width);
        if (seg_hi > seg_lo) out.emplace_back(i, seg_hi - seg_lo);
    }
}

}  // namespace

std::vector<double> bin_phase_density(const PhaseDensity& f, const BinSpec& bins) {
    // Treat the grid function as piecewise constant on node cells and split
    // each cell's mass across bins by exact overlap; binning by node
    // position alone would misplace O(dv) of mass at every bin edge.
    std::vector<double> probs(static_cast<std::size_t>(bins.bx) * bins.bv, 0.0);
    const PhaseGrid& grid = f.grid;
    const double dx = grid.dx(), dv = grid.dv();
    std::vector<std::pair<int, double>> xs, vs;
    for (int g = 0; g < grid.gx; ++g) {
        xs.clear();
        // periodic x-cell, possibly straddling the wrap point
        const double xa = grid.x(g) - 0.5 * dx;
        const double xb = grid.x(g) + 0.5 * dx;
        if (xa < 0.0) {
            split_interval(xa + 1.0, 1.0, bins.bx, 0.0, 1.0, xs);
            split_interval(0.0, xb, bins.bx, 0.0, 1.0, xs);
        } else if (xb > 1.0) {
            split_interval(xa, 1.0, bins.bx, 0.0, 1.0, xs);
            split_interval(0.0, xb - 1.0, bins.bx, 0.0, 1.0, xs);
        } else {
            split_interval(xa, xb, bins.bx, 0.0, 1.0, xs);
        }
        for (int h = 0; h < grid.gv; ++h) {
            const double fval = f.at(g, h);
            if (fval == 0.0) continue;
            vs.clear();
            split_interval(grid.v(h) - 0.5 * dv, grid.v(h) + 0.5 * dv, bins.bv,
                           -bins.vmax, bins.vmax, vs);
            for (const auto& [ix, wx] : xs)
                for (const auto& [iv, wv] : vs)
                    probs[static_cast<std::size_t>(ix) * bins.bv + iv] += fval * wx * wv;
        }
    }
    double total = 0.0;
    for (double p : probs) total += p;
    for (double& p : probs) p /= total;
    return probs;
}

namespace {

std::size_t occupied_bins_of(const std::vector<double>& reference, int order) {
    std::size_t occ = 0;
    if (order == 1) {
        for (double p : reference)
            if (p > 1e-12) ++occ;
    } else {
        for (double p : reference)
            for (double q : reference)
                if (p * q > 1e-12) ++occ;
    }
    return std::max<std::size_t>(occ, 1);
}

std::vector<double> halve_reference(const std::vector<double>& ref, const BinSpec& from) {
    const BinSpec half{from.bx / 2, from.bv / 2, from.vmax};
    std::vector<double> coarse(static_cast<std::size_t>(half.bx) * half.bv, 0.0);
    for (int ix = 0; ix < from.bx; ++ix)
        for (int iv = 0; iv < from.bv; ++iv)
            coarse[static_cast<std::size_t>(ix / 2) * half.bv + iv / 2] +=
                ref[static_cast<std::size_t>(ix) * from.bv + iv];
    return coarse;
}

}  // namespace

BinSpec effective_bins(std::span<const double> ref1, BinSpec bins, int k,
                       std::size_t samples) {
    std::vector<double> ref(ref1.begin(), ref1.end());
    while (bins.bx > 2 && bins.bv > 2 &&
           static_cast<double>(samples) / occupied_bins_of(ref, k) < 20.0) {
        ref = halve_reference(ref, bins);
        bins = BinSpec{bins.bx / 2, bins.bv / 2, bins.vmax};
    }
    return bins;
}

MarginalDistance marginal_and_distance(const std::vector<ParticleEnsemble>& replicas,
                                       std::span<const double> ref1, int k, BinSpec bins) {
    if (replicas.empty()) throw std::invalid_argument("marginal_and_distance: no replicas");
    if (k < 1 || k > 2) throw std::invalid_argument("marginal_and_distance: k must be 1 or 2");
    const std::size_t n = replicas.front().n;
    for (const auto& r : replicas)
        if (r.n != n || r.dim != 1)
            throw std::invalid_argument("marginal_and_distance: replicas must share (n, dim=1)");
    if (static_cast<std::size_t>(k) > n)
        throw std::invalid_argument("marginal_and_distance: k exceeds particle count");
    if (ref1.size() != static_cast<std::size_t>(bins.bx) * bins.bv)
        throw std::invalid_argument("marginal_and_distance: ref1 size mismatch");

    const std::size_t blocks_per_replica = n / k;
    const std::size_t total_samples = blocks_per_replica * replicas.size();

    // Widen bins until each occupied bin expects >= 20 samples.
    BinSpec eff = bins;
    std::vector<double> ref(ref1.begin(), ref1.end());
    int widenings = 0;
    while (eff.bx > 2 && eff.bv > 2 &&
           static_cast<double>(total_samples) / occupied_bins_of(ref, k) < 20.0) {
        ref = halve_reference(ref, eff);
        eff = BinSpec{eff.bx / 2, eff.bv / 2, eff.vmax};
        ++widenings;
    }

    const std::size_t cells1 = static_cast<std::size_t>(eff.bx) * eff.bv;
    const std::size_t cells = k == 1 ? cells1 : cells1 * cells1;

    // Per-replica counts for the jackknife.
    std::vector<std::vector<double>> counts(replicas.size(),
                                            std::vector<double>(cells, 0.0));
    for (std::size_t r = 0; r < replicas.size(); ++r) {
        const auto& ens = replicas[r];
        for (std::size_t b = 0; b < blocks_per_replica; ++b) {
            if (k == 1) {
                ++counts[r][bin_of(ens.positions[b], ens.velocities[b], eff)];
            } else {
                const std::size_t i0 = 2 * b, i1 = 2 * b + 1;
                const std::size_t c0 = bin_of(ens.positions[i0], ens.velocities[i0], eff);
                const std::size_t c1 = bin_of(ens.positions[i1], ens.velocities[i1], eff);
                ++counts[r][c0 * cells1 + c1];
            }
        }
    }

    // Reference for order k: the k-fold product of ref.
    auto ref_at = [&](std::size_t cell) {
        return k == 1 ? ref[cell] : ref[cell / cells1] * ref[cell % cells1];
    };

    std::vector<double> pooled(cells, 0.0);
    for (const auto& c : counts)
        for (std::size_t i = 0; i < cells; ++i) pooled[i] += c[i];

    auto l1_of = [&](const std::vector<double>& cnt, double total) {
        double acc = 0.0;
        for (std::size_t i = 0; i < cells; ++i) acc += std::abs(cnt[i] / total - ref_at(i));
        return acc;
    };

    MarginalDistance out;
    out.histogram.order = k;
    out.histogram.bins = eff;
    out.histogram.samples = total_samples;
    out.histogram.widenings = widenings;
    out.histogram.probs.resize(cells);
    for (std::size_t i = 0; i < cells; ++i)
        out.histogram.probs[i] = pooled[i] / static_cast<double>(total_samples);

    out.l1 = l1_of(pooled, static_cast<double>(total_samples));

    // Jackknife over replicas.
    if (replicas.size() > 1) {
        std::vector<double> jack(replicas.size());
        std::vector<double> minus(cells);
        for (std::size_t r = 0; r < replicas.size(); ++r) {
            for (std::size_t i = 0; i < cells; ++i) minus[i] = pooled[i] - counts[r][i];
            jack[r] = l1_of(minus, static_cast<double>(total_samples - blocks_per_replica));
        }
        double mean = 0.0;
        for (double j : jack) mean += j;
        mean /= jack.size();
        double var = 0.0;
        for (double j : jack) var += (j - mean) * (j - mean);
        const double rr = static_cast<double>(jack.size());
        out.l1_stderr = std::sqrt(var * (rr - 1.0) / rr);
    }

    // Per-replica distances (diagnostic spread).
    for (std::size_t r = 0; r < replicas.size(); ++r)
        out.per_replica_l1.push_back(
            l1_of(counts[r], static_cast<double>(blocks_per_replica)));

    // Plug-in KL with Miller-Madow bias correction.
    double kl = 0.0;
    std::size_t occupied = 0;
    for (std::size_t i = 0; i < cells; ++i) {
        const double p = out.histogram.probs[i];
        if (p <= 0.0) continue;
        ++occupied;
        kl += p * std::log(p / std::max(ref_at(i), 1e-300));
    }
    out.occupied_bins = occupied;
    out.kl_plugin = kl;
    out.kl_mm = kl - (static_cast<double>(occupied) - 1.0) /
                         (2.0 * static_cast<double>(total_samples));
    return out;
}

double hn_gronwall_envelope(double h0, double alpha_n, double big_l, double nu, double t,
                            double horizon, std::size_t n) {
    if (h0 < 0.0 || alpha_n < 0.0 || big_l < 0.0 || !(nu > 0.0) || t < 0.0 ||
        horizon < 0.0 || n < 1)
        throw std::invalid_argument("hn_gronwall_envelope: invalid arguments");
    return (h0 + alpha_n + big_l * horizon / (nu * static_cast<double>(n))) *
           std::exp(t / nu);
}

}  // namespace chaoslab
