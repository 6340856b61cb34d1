#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "chaoslab/kernels.hpp"
#include "chaoslab/particle_system.hpp"
#include "chaoslab/reference_law.hpp"
#include "chaoslab/vlasov.hpp"

// The entropy-dissipation functional
//   R_N = (1/N) sum_{i,j} (d/dv log f)(z_i) { K(x_i - x_j) - K*rho(x_i) }
// with K(0) = 0, its Monte-Carlo exponential moments under the product
// law, the moment norms M_p, the closed-form bound on int f_N exp|R_N|,
// and marginal distances for the chaos study.

namespace chaoslab {

// Caches K*rho so that R_N evaluation is O(N^2) with no setup per sample.
class RnEvaluator {
  public:
    RnEvaluator(const ReferenceLaw& law, const Kernel& kernel);

    double operator()(std::span<const double> xs, std::span<const double> vs) const;
    double value(const ParticleEnsemble& ens) const;
    // 2 |K|_inf sum_i |score_i|
    double trivial_bound(std::span<const double> xs, std::span<const double> vs) const;

  private:
    const ReferenceLaw& law_;
    const Kernel& kernel_;
    ConvField conv_;
};

double r_n(const ParticleEnsemble& ens, const ReferenceLaw& law, const Kernel& kernel);

// M_p by the law's closed form; m_p_quadrature is the independent route.
double m_p(const ReferenceLaw& law, int p);
double m_p_quadrature(const ReferenceLaw& law, int p, int x_nodes = 128, int v_nodes = 256);

// max_{1 <= p <= p_max} M_p / p.
double sup_ratio(const ReferenceLaw& law, int p_max = 64);

// nu with nu |K| sup_p(M_p/p) = 1/(16 e^2).
double choose_nu(double k_norm, double sup_ratio_value);

// 5 + 6 (a / (1 - a^2))^2 for a = 8 e^2 |K| sup_p(M_p/p) in [0, 1).
double theorem_bound(double a);

struct ExpMomentResult {
    double estimate = 0.0;
    double stderr_est = 0.0;
    double max_share = 0.0;  // largest sample's share of the sum
    bool unstable = false;   // heavy-tail warning: max dominates
    std::size_t samples = 0;
};

// Mean of exp(nu |R_N|) over i.i.d. Z ~ f^{(x)N}; accumulated in log space
// chunk-by-chunk in fixed order, so results are bit-reproducible and
// independent of the worker count.
ExpMomentResult mc_exp_moment(const ReferenceLaw& law, const Kernel& kernel, double nu,
                              std::size_t n, std::size_t samples, std::uint64_t seed,
                              int threads = 1);

struct RnMoments {
    double mean = 0.0;
    double mean_stderr = 0.0;
    double second = 0.0;
    double second_stderr = 0.0;
};

// Plain Monte-Carlo mean and second moment of R_N under the product law.
RnMoments mc_rn_moments(const ReferenceLaw& law, const Kernel& kernel, std::size_t n,
                        std::size_t samples, std::uint64_t seed, int threads = 1);

// ---- marginals ----------------------------------------------------------

struct BinSpec {
    int bx = 16;
    int bv = 16;
    double vmax = 6.0;
};

struct MarginalHistogram {
    int order = 1;  // k
    BinSpec bins;
    std::vector<double> probs;  // normalized, (bx*bv)^k cells
    std::uint64_t samples = 0;
    int widenings = 0;  // times the bins were coarsened against undersampling
};

struct MarginalDistance {
    MarginalHistogram histogram;
    double l1 = 0.0;
    double l1_stderr = 0.0;  // jackknife over replicas
    double kl_plugin = 0.0;
    double kl_mm = 0.0;  // Miller-Madow corrected
    std::size_t occupied_bins = 0;
    std::vector<double> per_replica_l1;
};

// One-particle reference bin masses (row-major x-major), normalized.
std::vector<double> bin_law(const ReferenceLaw& law, const BinSpec& bins);
std::vector<double> bin_phase_density(const PhaseDensity& f, const BinSpec& bins);

// The widening rule applied up front: halve (bx, bv) until the expected
// count per occupied order-k bin reaches 20.  Used by studies that must
// keep one binning across several sample sizes.
BinSpec effective_bins(std::span<const double> ref1, BinSpec bins, int k,
                       std::size_t samples);

// Pools disjoint particle blocks of size k across replicas and compares
// the order-k histogram against the k-fold product of ref1.  Bins are
// widened (and counted) until the expected count per occupied bin is
// at least 20.
MarginalDistance marginal_and_distance(const std::vector<ParticleEnsemble>& replicas,
                                       std::span<const double> ref1, int k, BinSpec bins);

// Gronwall envelope (H0 + alpha_N + L T/(nu N)) exp(t / nu).
double hn_gronwall_envelope(double h0, double alpha_n, double big_l, double nu, double t,
                            double horizon, std::size_t n);

}  // namespace chaoslab
