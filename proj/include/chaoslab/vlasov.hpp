#pragma once

#include <functional>
#include <vector>

#include "chaoslab/kernels.hpp"

// Semi-Lagrangian Strang-split solver for the kinetic equation
//   f_t + v f_x + (K*rho) f_v - eps f_vv = 0
// on T^1 x [-vmax, vmax], plus the entropy and exponential-moment
// diagnostics of the strong solution.

namespace chaoslab {

struct PhaseGrid {
    int gx = 0;          // x nodes, x_g = g / gx, periodic
    int gv = 0;          // v nodes, v_h = -vmax + h dv, endpoints included
    double vmax = 0.0;

    double dx() const { return 1.0 / gx; }
    double dv() const { return 2.0 * vmax / (gv - 1); }
    double x(int g) const { return static_cast<double>(g) / gx; }
    double v(int h) const { return -vmax + h * dv(); }
    // Trapezoid weight in v.
    double vweight(int h) const { return (h == 0 || h == gv - 1) ? 0.5 : 1.0; }
    bool operator==(const PhaseGrid&) const = default;
};

struct PhaseDensity {
    PhaseGrid grid;
    std::vector<double> values;  // row-major [g * gv + h], nonnegative
    double time = 0.0;

    double& at(int g, int h) { return values[static_cast<std::size_t>(g) * grid.gv + h]; }
    double at(int g, int h) const { return values[static_cast<std::size_t>(g) * grid.gv + h]; }

    double mass() const;
    double tail_mass() const;  // outer two v-rows on each side
    // mass within 1e-10 of 1, values >= 0, tail below 1e-6
    void validate() const;

    DensityField density() const;  // rho = int f dv, trapezoid
};

// Discretizes f0 on the grid and normalizes mass to exactly 1.
PhaseDensity make_phase_density(const PhaseGrid& grid,
                                const std::function<double(double, double)>& f0);

struct SolverConfig {
    double dt = 0.0;
    double epsilon = 0.0;   // diffusion coefficient of the PDE
    int interp_order = 3;   // 1, 3 or 5 (Lagrange stencil width - 1)
};

// Guards: dt vmax <= dx, dt |K| <= dv, and for epsilon > 0 the discrete
// heat kernel must be resolved: sqrt(2 eps dt) >= 0.8 dv.
void validate_solver_config(const PhaseGrid& grid, const Kernel& kernel,
                            const SolverConfig& cfg);

struct StepAudit {
    double mass_drift_pre_renorm = 0.0;
    double clamped_mass = 0.0;
    double renorm_factor = 1.0;
    double tail_mass = 0.0;
};

// One Strang-split step: half x-advection, full v-advection with the
// frozen field K*rho, half x-advection, then exact-in-time v-diffusion by
// convolution with a discrete heat kernel of variance 2 eps dt.
StepAudit step_vlasov(PhaseDensity& f, const Kernel& kernel, const SolverConfig& cfg);

// H(ft | f) = int ft log(ft/f) under the grid quadrature; f floored at
// 1e-300.  Throws if ft carries mass where f vanishes.
double relative_entropy_grid(const PhaseDensity& f_tilde, const PhaseDensity& f);

// Grid L1 distance (same quadrature weights as the entropy).
double l1_distance_grid(const PhaseDensity& a, const PhaseDensity& b);

struct ThetaResult {
    double value = 0.0;
    bool overflow = false;
    long floored_cells = 0;
};

// int f exp(lambda |d/dv log f|); overflow is reported, not thrown.
ThetaResult theta_exp_moment(const PhaseDensity& f, double lambda);
// Same with the full (x, v) log-gradient.
ThetaResult theta_exp_moment_full(const PhaseDensity& f, double lambda);

// Right-hand side (2/lambda)(3/2 + log theta)(sqrt(H) + H/2) of the
// weighted CKP inequality with weight |d/dv log f|; +inf when theta
// overflows.
double weighted_ckp_bound(const PhaseDensity& f_tilde, const PhaseDensity& f, double lambda);
// Left-hand side int |d/dv log f| |ft - f|.
double weighted_ckp_lhs(const PhaseDensity& f_tilde, const PhaseDensity& f);

struct MonitorPoint {
    double t = 0.0;
    double entropy = 0.0;
    double theta = 0.0;
    double c_hat_running = 0.0;
};

struct MonitorResult {
    std::vector<MonitorPoint> series;
    bool regime_exited = false;  // H exceeded 1; series truncated there
    double exit_time = 0.0;
    double sup_entropy = 0.0;
};

// Evolves both densities with step_vlasov and records H(t), theta_f and
// the running Gronwall rate log(H(t)/H(0))/t.  The monitored window ends
// at the first time H > 1.
MonitorResult weak_strong_monitor(PhaseDensity f_tilde, PhaseDensity f, const Kernel& kernel,
                                  const SolverConfig& cfg, double t_end, double lambda,
                                  std::size_t record_every = 1);

}  // namespace chaoslab
