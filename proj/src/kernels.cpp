#include "chaoslab/kernels.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace chaoslab {

namespace {
constexpr double kTwoPi = 6.28318530717958647692528676655900577;

double norm2(std::span<const double> x) {
    double s = 0.0;
    for (double xi : x) s += xi * xi;
    return std::sqrt(s);
}
}  // namespace

Kernel::Kernel(std::string name, int dim, Domain domain, Evaluator evaluator,
               double sup_norm, bool is_odd, Smoothness smoothness)
    : name_(std::move(name)),
      dim_(dim),
      domain_(domain),
      evaluator_(std::move(evaluator)),
      sup_norm_(sup_norm),
      is_odd_(is_odd),
      smoothness_(smoothness) {
    if (dim_ < 1) throw std::invalid_argument("Kernel: dim must be >= 1");
    if (sup_norm_ < 0.0) throw std::invalid_argument("Kernel: sup_norm must be >= 0");
}

Kernel::Kernel(std::string name, Domain domain, ScalarEvaluator evaluator, double sup_norm,
               bool is_odd, Smoothness smoothness)
    : name_(std::move(name)),
      dim_(1),
      domain_(domain),
      scalar_(std::move(evaluator)),
      sup_norm_(sup_norm),
      is_odd_(is_odd),
      smoothness_(smoothness) {
    if (sup_norm_ < 0.0) throw std::invalid_argument("Kernel: sup_norm must be >= 0");
    evaluator_ = [f = scalar_](std::span<const double> x, std::span<double> out) {
        out[0] = f(x[0]);
    };
}

void Kernel::eval(std::span<const double> dx, std::span<double> force) const {
    if (static_cast<int>(dx.size()) != dim_ || static_cast<int>(force.size()) != dim_)
        throw std::invalid_argument("Kernel::eval: dimension mismatch");
    if (dim_ == 1) {
        force[0] = eval1(dx[0]);
        return;
    }
    double wrapped_buf[8];
    std::span<double> wrapped(wrapped_buf, dx.size());
    std::vector<double> big;
    if (dim_ > 8) {
        big.resize(dim_);
        wrapped = std::span<double>(big);
    }
    bool zero = true;
    for (int c = 0; c < dim_; ++c) {
        wrapped[c] = domain_ == Domain::torus ? min_image(dx[c]) : dx[c];
        if (wrapped[c] != 0.0) zero = false;
    }
    if (zero) {
        for (int c = 0; c < dim_; ++c) force[c] = 0.0;
        return;
    }
    evaluator_(wrapped, force);
}

Kernel make_zero_kernel(int dim) {
    if (dim == 1)
        return Kernel("zero", Domain::torus, [](double) { return 0.0; }, 0.0,
                      /*is_odd=*/true, Smoothness::smooth);
    return Kernel(
        "zero", dim, Domain::torus,
        [](std::span<const double>, std::span<double> out) {
            for (double& o : out) o = 0.0;
        },
        0.0, /*is_odd=*/true, Smoothness::smooth);
}

Kernel make_sine_kernel(double kappa, int dim) {
    if (dim == 1)
        return Kernel(
            "sine", Domain::torus,
            [kappa](double x) { return kappa * std::sin(kTwoPi * x); }, std::abs(kappa),
            /*is_odd=*/true, Smoothness::smooth);
    return Kernel(
        "sine", dim, Domain::torus,
        [kappa](std::span<const double> x, std::span<double> out) {
            for (std::size_t c = 0; c < x.size(); ++c) out[c] = kappa * std::sin(kTwoPi * x[c]);
        },
        std::abs(kappa), /*is_odd=*/true, Smoothness::smooth);
}

Kernel make_coulomb_trunc_kernel(double kappa, double delta, int dim) {
    if (delta <= 0.0) throw std::invalid_argument("coulomb_trunc: delta must be > 0");
    // |K| peaks at |x| = delta with kappa / delta^{d-1}.
    const double sup = std::abs(kappa) / std::pow(delta, dim - 1);
    if (dim == 1)
        return Kernel(
            "coulomb_trunc", Domain::torus,
            [kappa, delta](double x) { return kappa * x / std::max(std::abs(x), delta); },
            sup, /*is_odd=*/true, Smoothness::rough);
    return Kernel(
        "coulomb_trunc", dim, Domain::torus,
        [kappa, delta](std::span<const double> x, std::span<double> out) {
            const double r = std::max(norm2(x), delta);
            double rd = 1.0;
            for (std::size_t c = 0; c < x.size(); ++c) rd *= r;
            for (std::size_t c = 0; c < x.size(); ++c) out[c] = kappa * x[c] / rd;
        },
        sup, /*is_odd=*/true, Smoothness::rough);
}

Kernel make_rough_sign_kernel(double kappa, int dim) {
    if (dim == 1)
        return Kernel(
            "rough_sign", Domain::torus,
            [kappa](double x) {
                const double s = std::sin(1.0 / std::abs(x)) >= 0.0 ? 1.0 : -1.0;
                return kappa * s * (x > 0.0 ? 1.0 : -1.0);
            },
            std::abs(kappa), /*is_odd=*/true, Smoothness::rough);
    return Kernel(
        "rough_sign", dim, Domain::torus,
        [kappa](std::span<const double> x, std::span<double> out) {
            const double r = norm2(x);
            const double s = std::sin(1.0 / r) >= 0.0 ? 1.0 : -1.0;
            for (std::size_t c = 0; c < x.size(); ++c) out[c] = kappa * s * x[c] / r;
        },
        std::abs(kappa), /*is_odd=*/true, Smoothness::rough);
}

double DensityField::mass() const {
    double m = 0.0;
    for (double v : values) m += v;
    return m * cell_volume;
}

void DensityField::validate() const {
    if (values.empty() || cell_volume <= 0.0)
        throw std::invalid_argument("DensityField: empty grid");
    for (double v : values)
        if (!(v >= 0.0)) throw std::invalid_argument("DensityField: negative or NaN value");
    if (std::abs(mass() - 1.0) > 1e-10)
        throw std::invalid_argument("DensityField: mass differs from 1 beyond 1e-10");
}

std::vector<double> convolve(const Kernel& kernel, const DensityField& rho) {
    rho.validate();
    if (kernel.dim() != 1) throw std::invalid_argument("convolve: kernel must be 1-d");
    if (kernel.domain() != rho.domain)
        throw std::invalid_argument("convolve: kernel/density topology mismatch");
    const std::size_t g = rho.values.size();
    const double h = rho.cell_volume;
    std::vector<double> field(g, 0.0);
    for (std::size_t a = 0; a < g; ++a) {
        const double xa = static_cast<double>(a) * h;
        double acc = 0.0;
        for (std::size_t c = 0; c < g; ++c) {
            const double xc = static_cast<double>(c) * h;
            acc += kernel.eval1(xa - xc) * rho.values[c];
        }
        field[a] = acc * h;
    }
    return field;
}

}  // namespace chaoslab
