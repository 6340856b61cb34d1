#include "chaoslab/reference_law.hpp"

#include <cmath>
#include <stdexcept>

#include "chaoslab/quadrature.hpp"
#include "chaoslab/rng.hpp"

namespace chaoslab {

namespace {
constexpr double kTwoPi = 6.28318530717958647692528676655900577;
constexpr double kSqrtPi = 1.77245385090551602729816748334114518;
}  // namespace

ConvField ReferenceLaw::conv_field(const Kernel& kernel) const {
    if (kernel.dim() != 1)
        throw std::invalid_argument("conv_field: only 1-d kernels supported");
    // Precompute on a fine grid, linear interpolation in between.
    const int g = 4096;
    const quad::Rule rule = quad::gauss_legendre(256, 0.0, 1.0);
    auto table = std::make_shared<std::vector<double>>(g + 1, 0.0);
    for (int i = 0; i <= g; ++i) {
        const double x = static_cast<double>(i) / g;
        double acc = 0.0;
        for (int j = 0; j < rule.size(); ++j)
            acc += rule.weights[j] * kernel.eval1(x - rule.nodes[j]) * rho(rule.nodes[j]);
        (*table)[i] = acc;
    }
    return [table, g](double x) {
        const double s = wrap_torus(x) * g;
        const int i = static_cast<int>(s);
        const double frac = s - i;
        return (*table)[i] * (1.0 - frac) + (*table)[i + 1] * frac;
    };
}

double gaussian_abs_moment(int p) {
    if (p < 0) throw std::invalid_argument("gaussian_abs_moment: need p >= 0");
    if (p == 0) return 1.0;
    // E|Z|^p = 2^{p/2} Gamma((p+1)/2) / sqrt(pi)
    return std::exp(0.5 * p * std::log(2.0) + std::lgamma(0.5 * (p + 1))) / kSqrtPi;
}

double maxwellian_m_p(double sigma, int p) {
    if (p < 1) throw std::invalid_argument("maxwellian_m_p: need p >= 1");
    const double log_moment =
        0.5 * p * std::log(2.0) + std::lgamma(0.5 * (p + 1)) - std::log(kSqrtPi);
    return std::exp(log_moment / p) / sigma;
}

MaxwellianLaw::MaxwellianLaw(double sigma) : sigma_(sigma) {
    if (sigma_ <= 0.0) throw std::invalid_argument("MaxwellianLaw: sigma must be > 0");
}

double MaxwellianLaw::density(double, double v) const {
    const double s2 = sigma_ * sigma_;
    return std::exp(-0.5 * v * v / s2) / std::sqrt(kTwoPi * s2);
}

double MaxwellianLaw::m_p(int p) const { return maxwellian_m_p(sigma_, p); }

double MaxwellianLaw::sup_mp_over_p() const {
    // M_p/p = (E|Z|^p)^{1/p} / (sigma p) with (E|Z|^p)^{1/p} ~ sqrt(p);
    // the ratio is maximal at p = 1.
    return std::sqrt(2.0 / M_PI) / sigma_;
}

void MaxwellianLaw::sample(std::uint64_t key, std::uint64_t stream, double& x,
                           double& v) const {
    x = rng::uniform(key, stream, 0);
    v = sigma_ * rng::normal(key, stream, 1);
}

ConvField MaxwellianLaw::conv_field(const Kernel& kernel) const {
    if (kernel.dim() != 1)
        throw std::invalid_argument("conv_field: only 1-d kernels supported");
    if (kernel.is_odd()) return [](double) { return 0.0; };
    // Uniform rho: K*rho is the mean of K over the torus.
    const quad::Rule rule = quad::gauss_legendre(512, -0.5, 0.5);
    double mean = 0.0;
    for (int j = 0; j < rule.size(); ++j)
        mean += rule.weights[j] * kernel.eval1(rule.nodes[j]);
    return [mean](double) { return mean; };
}

CosineMaxwellianLaw::CosineMaxwellianLaw(double sigma, double amplitude)
    : sigma_(sigma), amplitude_(amplitude) {
    if (sigma_ <= 0.0) throw std::invalid_argument("CosineMaxwellianLaw: sigma must be > 0");
    if (amplitude_ < 0.0 || amplitude_ >= 1.0)
        throw std::invalid_argument("CosineMaxwellianLaw: amplitude must be in [0, 1)");
}

double CosineMaxwellianLaw::rho(double x) const {
    return 1.0 + amplitude_ * std::cos(kTwoPi * x);
}

double CosineMaxwellianLaw::density(double x, double v) const {
    const double s2 = sigma_ * sigma_;
    return rho(x) * std::exp(-0.5 * v * v / s2) / std::sqrt(kTwoPi * s2);
}

double CosineMaxwellianLaw::grad_x_log(double x, double) const {
    return -amplitude_ * kTwoPi * std::sin(kTwoPi * x) / rho(x);
}

double CosineMaxwellianLaw::m_p(int p) const {
    // The v-profile carries the whole score; rho integrates out.
    return maxwellian_m_p(sigma_, p);
}

double CosineMaxwellianLaw::sup_mp_over_p() const { return std::sqrt(2.0 / M_PI) / sigma_; }

void CosineMaxwellianLaw::sample(std::uint64_t key, std::uint64_t stream, double& x,
                                 double& v) const {
    const double u = rng::uniform(key, stream, 0);
    // Invert CDF(x) = x + a sin(2 pi x)/(2 pi); CDF' = rho >= 1 - a > 0.
    double y = u;
    for (int it = 0; it < 64; ++it) {
        const double fy = y + amplitude_ * std::sin(kTwoPi * y) / kTwoPi - u;
        if (std::abs(fy) < 1e-15) break;
        y -= fy / rho(y);
    }
    x = wrap_torus(y);
    v = sigma_ * rng::normal(key, stream, 1);
}

ConvField CosineMaxwellianLaw::conv_field(const Kernel& kernel) const {
    if (kernel.name() == "zero") return [](double) { return 0.0; };
    if (kernel.name() == "sine" && kernel.dim() == 1) {
        // int kappa sin(2 pi (x-y)) (1 + a cos(2 pi y)) dy = kappa a/2 sin(2 pi x)
        const double c = kernel.sup_norm();  // |kappa|; recover sign via eval
        const double kappa = kernel.eval1(0.25) >= 0.0 ? c : -c;
        const double amp = amplitude_;
        return [kappa, amp](double x) { return 0.5 * kappa * amp * std::sin(kTwoPi * x); };
    }
    return ReferenceLaw::conv_field(kernel);
}

std::shared_ptr<const ReferenceLaw> make_law(const std::string& kind, double sigma,
                                             double amplitude) {
    if (kind == "maxwellian") return std::make_shared<MaxwellianLaw>(sigma);
    if (kind == "cosine_maxwellian")
        return std::make_shared<CosineMaxwellianLaw>(sigma, amplitude);
    throw std::invalid_argument("unknown law kind: " + kind);
}

}  // namespace chaoslab
