#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "chaoslab/kernels.hpp"

// Analytic phase-space laws on T^1 x R with closed-form density, score
// d/dv log f, moment norms M_p, an exact sampler, and the mean-field drift
// K*rho per kernel.  These are the strong reference solutions every metric
// is evaluated against.

namespace chaoslab {

// x |-> (K*rho)(x) on the torus.
using ConvField = std::function<double(double)>;

class ReferenceLaw {
  public:
    virtual ~ReferenceLaw() = default;

    virtual std::string name() const = 0;
    virtual double sigma() const = 0;

    virtual double density(double x, double v) const = 0;  // f(x, v)
    virtual double rho(double x) const = 0;
    virtual double score_v(double x, double v) const = 0;  // d/dv log f
    virtual double grad_x_log(double x, double v) const = 0;

    // M_p = (int |d/dv log f|^p f)^{1/p}; closed form where available.
    virtual double m_p(int p) const = 0;
    // Certified bound on sup_p M_p / p.
    virtual double sup_mp_over_p() const = 0;

    // Polynomial envelope |grad_{x,v} log f| <= C (1 + |x|^k + |v|^k),
    // when one is certified for the law.
    struct GradientEnvelope {
        double c = 0.0;
        int k = 1;
    };
    virtual std::optional<GradientEnvelope> full_gradient_bound() const {
        return std::nullopt;
    }

    virtual bool has_sampler() const { return true; }
    // One exact i.i.d. draw; pure in (key, stream).
    virtual void sample(std::uint64_t key, std::uint64_t stream, double& x,
                        double& v) const = 0;

    // Closed form (zero/constant) where symmetry allows, otherwise
    // precomputed on a fine grid and interpolated.
    virtual ConvField conv_field(const Kernel& kernel) const;

    // Velocity truncation used by grids and histograms built from this law.
    double default_vmax() const { return 6.0 * sigma(); }
};

// Uniform-in-x Maxwellian: f = (2 pi s^2)^{-1/2} exp(-v^2 / 2 s^2).
// Score -v/s^2, rho = 1, K*rho = 0 for odd kernels.
class MaxwellianLaw final : public ReferenceLaw {
  public:
    explicit MaxwellianLaw(double sigma = 1.0);

    std::string name() const override { return "maxwellian"; }
    double sigma() const override { return sigma_; }
    double density(double x, double v) const override;
    double rho(double) const override { return 1.0; }
    double score_v(double, double v) const override { return -v / (sigma_ * sigma_); }
    double grad_x_log(double, double) const override { return 0.0; }
    double m_p(int p) const override;
    double sup_mp_over_p() const override;
    void sample(std::uint64_t key, std::uint64_t stream, double& x,
                double& v) const override;
    // K*rho is the constant mean of K (zero for odd kernels).
    ConvField conv_field(const Kernel& kernel) const override;
    // |grad log f| = |v|/s^2 <= (1/s^2)(1 + |v|)
    std::optional<GradientEnvelope> full_gradient_bound() const override {
        return GradientEnvelope{1.0 / (sigma_ * sigma_), 1};
    }

  private:
    double sigma_;
};

// Cosine-modulated Maxwellian: rho = 1 + a cos(2 pi x), 0 <= a < 1, with
// the same Maxwellian velocity profile.  Exact x-sampler by inverting the
// CDF x + a sin(2 pi x)/(2 pi) with Newton.
class CosineMaxwellianLaw final : public ReferenceLaw {
  public:
    CosineMaxwellianLaw(double sigma, double amplitude);

    std::string name() const override { return "cosine_maxwellian"; }
    double sigma() const override { return sigma_; }
    double amplitude() const { return amplitude_; }
    double density(double x, double v) const override;
    double rho(double x) const override;
    double score_v(double, double v) const override { return -v / (sigma_ * sigma_); }
    double grad_x_log(double x, double) const override;
    double m_p(int p) const override;
    double sup_mp_over_p() const override;
    void sample(std::uint64_t key, std::uint64_t stream, double& x,
                double& v) const override;
    ConvField conv_field(const Kernel& kernel) const override;
    // |grad_x log f| <= 2 pi a / (1 - a), |grad_v log f| = |v|/s^2
    std::optional<GradientEnvelope> full_gradient_bound() const override {
        const double cx = 2.0 * M_PI * amplitude_ / (1.0 - amplitude_);
        return GradientEnvelope{std::max(1.0 / (sigma_ * sigma_), cx), 1};
    }

  private:
    double sigma_;
    double amplitude_;
};

// Gaussian moment helper: E|Z|^p for Z ~ N(0,1), p >= 0.
double gaussian_abs_moment(int p);

// Maxwellian closed form M_p = s^{-1} (2^{p/2} Gamma((p+1)/2) / sqrt(pi))^{1/p}.
double maxwellian_m_p(double sigma, int p);

std::shared_ptr<const ReferenceLaw> make_law(const std::string& kind, double sigma,
                                             double amplitude);

}  // namespace chaoslab
