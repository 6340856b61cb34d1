#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

// Bounded interaction forces K and the mean-field convolution K*rho.
// The spatial domain is the unit torus T^d by default; displacements are
// reduced to the fundamental cell [-1/2, 1/2)^d before evaluation.

namespace chaoslab {

enum class Domain { torus, free_space };
enum class Smoothness { smooth, rough };

// into [0, 1)
inline double wrap_torus(double x) {
    double y = x - static_cast<long long>(x >= 0.0 ? x : x - 1.0);
    if (y >= 1.0) y -= 1.0;
    if (y < 0.0) y += 1.0;
    return y;
}

// into [-1/2, 1/2)
inline double min_image(double dx) {
    double y = dx - static_cast<long long>(dx >= 0.0 ? dx + 0.5 : dx - 0.5);
    if (y >= 0.5) y -= 1.0;
    if (y < -0.5) y += 1.0;
    return y;
}

class Kernel {
  public:
    // Evaluator maps a (wrapped) displacement to a force vector; it may
    // assume the input is never exactly zero.
    using Evaluator = std::function<void(std::span<const double>, std::span<double>)>;
    using ScalarEvaluator = std::function<double(double)>;

    Kernel(std::string name, int dim, Domain domain, Evaluator evaluator,
           double sup_norm, bool is_odd, Smoothness smoothness);
    // d = 1 kernels carry a scalar evaluator for the hot pair loops.
    Kernel(std::string name, Domain domain, ScalarEvaluator evaluator, double sup_norm,
           bool is_odd, Smoothness smoothness);

    // K(0) = 0 is enforced here, not left to the evaluator.
    void eval(std::span<const double> dx, std::span<double> force) const;

    // d = 1 path; kept inline since the N^2 loops live on it.
    double eval1(double dx) const {
        const double w = domain_ == Domain::torus ? min_image(dx) : dx;
        if (w == 0.0) return 0.0;
        return scalar_(w);
    }

    const std::string& name() const { return name_; }
    int dim() const { return dim_; }
    Domain domain() const { return domain_; }
    double sup_norm() const { return sup_norm_; }
    bool is_odd() const { return is_odd_; }
    Smoothness smoothness() const { return smoothness_; }

  private:
    std::string name_;
    int dim_;
    Domain domain_;
    Evaluator evaluator_;
    ScalarEvaluator scalar_;  // set iff dim == 1
    double sup_norm_;
    bool is_odd_;
    Smoothness smoothness_;
};

// Built-in catalog.
Kernel make_zero_kernel(int dim = 1);
Kernel make_sine_kernel(double kappa, int dim = 1);                       // kappa sin(2 pi x) per component
Kernel make_coulomb_trunc_kernel(double kappa, double delta = 1e-3, int dim = 1);
Kernel make_rough_sign_kernel(double kappa, int dim = 1);                 // kappa sign(sin(1/|x|)) x/|x|

// Probability density on a uniform periodic grid over T^1; nodes x_g = g/G.
struct DensityField {
    std::vector<double> values;
    double cell_volume = 0.0;
    Domain domain = Domain::torus;

    double mass() const;
    // mass must equal 1 within 1e-10
    void validate() const;
};

// Direct O(G^2) quadrature of (K*rho)(x_g) = sum_c K(x_g - x_c) rho(x_c) dV.
// Requires a d=1 kernel on the same topology as rho.
std::vector<double> convolve(const Kernel& kernel, const DensityField& rho);

}  // namespace chaoslab
