#include "chaoslab/vlasov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace chaoslab {

namespace {

constexpr double kFloor = 1e-300;

// Lagrange weights for interpolating at offset `frac` in [0,1) between
// stencil points {-(half-1), ..., half} relative to the base node.
void lagrange_weights(int order, double frac, double* w) {
    const int np = order + 1;
    const int half = np / 2;
    // stencil offsets: -(half-1) .. half
    for (int a = 0; a < np; ++a) {
        const double xa = static_cast<double>(a - (half - 1));
        double num = 1.0, den = 1.0;
        for (int b = 0; b < np; ++b) {
            if (b == a) continue;
            const double xb = static_cast<double>(b - (half - 1));
            num *= frac - xb;
            den *= xa - xb;
        }
        w[a] = num / den;
    }
}

}  // namespace

double PhaseDensity::mass() const {
    const double cell = grid.dx() * grid.dv();
    double m = 0.0;
    for (int g = 0; g < grid.gx; ++g)
        for (int h = 0; h < grid.gv; ++h) m += grid.vweight(h) * at(g, h);
    return m * cell;
}

double PhaseDensity::tail_mass() const {
    const double cell = grid.dx() * grid.dv();
    double m = 0.0;
    for (int g = 0; g < grid.gx; ++g)
        for (int h : {0, 1, grid.gv - 2, grid.gv - 1}) m += grid.vweight(h) * at(g, h);
    return m * cell;
}

void PhaseDensity::validate() const {
    if (grid.gx < 4 || grid.gv < 8 || grid.vmax <= 0.0)
        throw std::invalid_argument("PhaseDensity: degenerate grid");
    for (double v : values)
        if (!(v >= 0.0)) throw std::invalid_argument("PhaseDensity: negative or NaN value");
    if (std::abs(mass() - 1.0) > 1e-10)
        throw std::invalid_argument("PhaseDensity: mass differs from 1 beyond 1e-10");
    if (tail_mass() >= 1e-6)
        throw std::invalid_argument("PhaseDensity: tail mass >= 1e-6, vmax too small");
}

DensityField PhaseDensity::density() const {
    DensityField rho;
    rho.cell_volume = grid.dx();
    rho.values.resize(grid.gx);
    const double dv = grid.dv();
    for (int g = 0; g < grid.gx; ++g) {
        double acc = 0.0;
        for (int h = 0; h < grid.gv; ++h) acc += grid.vweight(h) * at(g, h);
        rho.values[g] = acc * dv;
    }
    return rho;
}

PhaseDensity make_phase_density(const PhaseGrid& grid,
                                const std::function<double(double, double)>& f0) {
    PhaseDensity f;
    f.grid = grid;
    f.values.resize(static_cast<std::size_t>(grid.gx) * grid.gv);
    for (int g = 0; g < grid.gx; ++g)
        for (int h = 0; h < grid.gv; ++h) {
            const double val = f0(grid.x(g), grid.v(h));
            if (!(val >= 0.0))
                throw std::invalid_argument("make_phase_density: f0 must be nonnegative");
            f.at(g, h) = val;
        }
    const double m = f.mass();
    if (m <= 0.0) throw std::invalid_argument("make_phase_density: zero initial mass");
    for (double& v : f.values) v /= m;
    return f;
}

void validate_solver_config(const PhaseGrid& grid, const Kernel& kernel,
                            const SolverConfig& cfg) {
    if (!(cfg.dt > 0.0)) throw std::invalid_argument("SolverConfig: dt must be > 0");
    if (cfg.epsilon < 0.0) throw std::invalid_argument("SolverConfig: epsilon must be >= 0");
    if (cfg.interp_order != 1 && cfg.interp_order != 3 && cfg.interp_order != 5)
        throw std::invalid_argument("SolverConfig: interp_order must be 1, 3 or 5");
    if (cfg.dt * grid.vmax > grid.dx() * (1.0 + 1e-12))
        throw std::invalid_argument("SolverConfig: CFL guard dt*vmax <= dx violated");
    if (cfg.dt * kernel.sup_norm() > grid.dv() * (1.0 + 1e-12))
        throw std::invalid_argument("SolverConfig: CFL guard dt*|K| <= dv violated");
    if (cfg.epsilon > 0.0 && std::sqrt(2.0 * cfg.epsilon * cfg.dt) < 0.8 * grid.dv())
        throw std::invalid_argument(
            "SolverConfig: diffusion kernel unresolved, need sqrt(2 eps dt) >= 0.8 dv");
}

namespace {

// Shift one x-row (periodic) by `shift` grid units: out[g] = in[g - shift].
void advect_periodic(const double* in, double* out, int n, double shift, int order) {
    if (shift == 0.0) {
        std::copy(in, in + n, out);
        return;
    }
    const int np = order + 1;
    const int half = np / 2;
    double w[8];
    const double t = -shift;  // displacement added to the index
    const double fl = std::floor(t);
    const int base = static_cast<int>(fl);
    lagrange_weights(order, t - fl, w);
    for (int g = 0; g < n; ++g) {
        double acc = 0.0;
        for (int a = 0; a < np; ++a) {
            int idx = g + base + (a - (half - 1));
            idx %= n;
            if (idx < 0) idx += n;
            acc += w[a] * in[idx];
        }
        out[g] = acc;
    }
}

// Shift one v-column by `shift` grid units with zero inflow outside.
void advect_bounded(const double* in, double* out, int n, double shift, int order) {
    if (shift == 0.0) {
        std::copy(in, in + n, out);
        return;
    }
    const int np = order + 1;
    const int half = np / 2;
    double w[8];
    const double t = -shift;
    const double fl = std::floor(t);
    const int base = static_cast<int>(fl);
    lagrange_weights(order, t - fl, w);
    for (int h = 0; h < n; ++h) {
        double acc = 0.0;
        for (int a = 0; a < np; ++a) {
            const int idx = h + base + (a - (half - 1));
            if (idx >= 0 && idx < n) acc += w[a] * in[idx];
        }
        out[h] = acc;
    }
}

void x_advection(PhaseDensity& f, double dt, int order, std::vector<double>& row_in,
                 std::vector<double>& row_out) {
    const PhaseGrid& grid = f.grid;
    const double dx = grid.dx();
    for (int h = 0; h < grid.gv; ++h) {
        const double shift = grid.v(h) * dt / dx;
        for (int g = 0; g < grid.gx; ++g) row_in[g] = f.at(g, h);
        advect_periodic(row_in.data(), row_out.data(), grid.gx, shift, order);
        for (int g = 0; g < grid.gx; ++g) f.at(g, h) = row_out[g];
    }
}

void v_advection(PhaseDensity& f, const std::vector<double>& field, double dt, int order) {
    const PhaseGrid& grid = f.grid;
    const double dv = grid.dv();
    std::vector<double> col(grid.gv);
    for (int g = 0; g < grid.gx; ++g) {
        const double shift = field[g] * dt / dv;
        if (shift == 0.0) continue;
        double* column = &f.values[static_cast<std::size_t>(g) * grid.gv];
        advect_bounded(column, col.data(), grid.gv, shift, order);
        std::copy(col.begin(), col.end(), column);
    }
}

void v_diffusion(PhaseDensity& f, double epsilon, double dt) {
    const PhaseGrid& grid = f.grid;
    const double dv = grid.dv();
    const double s = std::sqrt(2.0 * epsilon * dt);
    const int m = static_cast<int>(std::ceil(8.0 * s / dv)) + 2;
    std::vector<double> w(2 * m + 1);
    double norm = 0.0;
    for (int j = -m; j <= m; ++j) {
        const double u = j * dv / s;
        w[j + m] = std::exp(-0.5 * u * u);
        norm += w[j + m];
    }
    for (double& wi : w) wi /= norm;
    std::vector<double> col(grid.gv);
    for (int g = 0; g < grid.gx; ++g) {
        double* column = &f.values[static_cast<std::size_t>(g) * grid.gv];
        for (int h = 0; h < grid.gv; ++h) {
            double acc = 0.0;
            const int lo = std::max(-m, -h);
            const int hi = std::min(m, grid.gv - 1 - h);
            for (int j = lo; j <= hi; ++j) acc += w[j + m] * column[h + j];
            col[h] = acc;
        }
        std::copy(col.begin(), col.end(), column);
    }
}

}  // namespace

StepAudit step_vlasov(PhaseDensity& f, const Kernel& kernel, const SolverConfig& cfg) {
    validate_solver_config(f.grid, kernel, cfg);
    const PhaseGrid& grid = f.grid;
    StepAudit audit;

    std::vector<double> row_in(grid.gx), row_out(grid.gx);
    x_advection(f, 0.5 * cfg.dt, cfg.interp_order, row_in, row_out);

    const DensityField rho = f.density();
    const std::vector<double> field = convolve(kernel, rho);
    v_advection(f, field, cfg.dt, cfg.interp_order);

    x_advection(f, 0.5 * cfg.dt, cfg.interp_order, row_in, row_out);

    if (cfg.epsilon > 0.0) v_diffusion(f, cfg.epsilon, cfg.dt);

    // Audit: positivity clamp, conservation drift, renormalization.
    const double cell = grid.dx() * grid.dv();
    double clamped = 0.0;
    for (int g = 0; g < grid.gx; ++g)
        for (int h = 0; h < grid.gv; ++h) {
            double& val = f.at(g, h);
            if (val < 0.0) {
                clamped += -val * grid.vweight(h) * cell;
                val = 0.0;
            }
        }
    audit.clamped_mass = clamped;
    if (clamped >= 1e-8)
        throw std::runtime_error("step_vlasov: clamped mass exceeds 1e-8");

    const double m = f.mass();
    audit.mass_drift_pre_renorm = (m - clamped) - 1.0;
    audit.renorm_factor = 1.0 / m;
    for (double& val : f.values) val *= audit.renorm_factor;

    audit.tail_mass = f.tail_mass();
    if (audit.tail_mass >= 1e-6)
        throw std::runtime_error("step_vlasov: tail mass exceeds 1e-6, vmax too small");

    f.time += cfg.dt;
    return audit;
}

double relative_entropy_grid(const PhaseDensity& f_tilde, const PhaseDensity& f) {
    if (!(f_tilde.grid == f.grid))
        throw std::invalid_argument("relative_entropy_grid: grid mismatch");
    const PhaseGrid& grid = f.grid;
    const double cell = grid.dx() * grid.dv();
    double h_sum = 0.0;
    for (int g = 0; g < grid.gx; ++g)
        for (int h = 0; h < grid.gv; ++h) {
            const double ft = f_tilde.at(g, h);
            if (ft <= 0.0) continue;
            const double fv = f.at(g, h);
            if (fv < kFloor && ft > 1e-10)
                throw std::domain_error(
                    "relative_entropy_grid: f_tilde not absolutely continuous w.r.t. f");
            h_sum += grid.vweight(h) * ft * std::log(ft / std::max(fv, kFloor));
        }
    return h_sum * cell;
}

double l1_distance_grid(const PhaseDensity& a, const PhaseDensity& b) {
    if (!(a.grid == b.grid)) throw std::invalid_argument("l1_distance_grid: grid mismatch");
    const PhaseGrid& grid = a.grid;
    const double cell = grid.dx() * grid.dv();
    double acc = 0.0;
    for (int g = 0; g < grid.gx; ++g)
        for (int h = 0; h < grid.gv; ++h)
            acc += grid.vweight(h) * std::abs(a.at(g, h) - b.at(g, h));
    return acc * cell;
}

namespace {

// |d/dv log f| by centered differences of log f (floored), one-sided at the
// v boundary.
double abs_grad_v_log(const PhaseDensity& f, int g, int h, long& floored) {
    const PhaseGrid& grid = f.grid;
    auto logf = [&](int gg, int hh) {
        const double v = f.at(gg, hh);
        if (v < kFloor) {
            ++floored;
            return std::log(kFloor);
        }
        return std::log(v);
    };
    const double dv = grid.dv();
    if (h == 0) return std::abs((logf(g, 1) - logf(g, 0)) / dv);
    if (h == grid.gv - 1) return std::abs((logf(g, h) - logf(g, h - 1)) / dv);
    return std::abs((logf(g, h + 1) - logf(g, h - 1)) / (2.0 * dv));
}

double grad_x_log(const PhaseDensity& f, int g, int h, long& floored) {
    const PhaseGrid& grid = f.grid;
    auto logf = [&](int gg, int hh) {
        const double v = f.at((gg % grid.gx + grid.gx) % grid.gx, hh);
        if (v < kFloor) {
            ++floored;
            return std::log(kFloor);
        }
        return std::log(v);
    };
    return (logf(g + 1, h) - logf(g - 1, h)) / (2.0 * grid.dx());
}

ThetaResult theta_impl(const PhaseDensity& f, double lambda, bool full_gradient) {
    if (lambda < 0.0) throw std::invalid_argument("theta_exp_moment: lambda must be >= 0");
    const PhaseGrid& grid = f.grid;
    const double cell = grid.dx() * grid.dv();
    ThetaResult res;
    double acc = 0.0;
    for (int g = 0; g < grid.gx; ++g)
        for (int h = 0; h < grid.gv; ++h) {
            const double fv = f.at(g, h);
            if (fv <= 0.0) continue;
            double grad = abs_grad_v_log(f, g, h, res.floored_cells);
            if (full_gradient) {
                const double gx = grad_x_log(f, g, h, res.floored_cells);
                grad = std::sqrt(grad * grad + gx * gx);
            }
            const double arg = lambda * grad;
            if (arg > 700.0) {
                res.overflow = true;
                res.value = std::numeric_limits<double>::infinity();
                return res;
            }
            acc += grid.vweight(h) * fv * std::exp(arg);
            if (!std::isfinite(acc)) {
                res.overflow = true;
                res.value = std::numeric_limits<double>::infinity();
                return res;
            }
        }
    res.value = acc * cell;
    return res;
}

}  // namespace

ThetaResult theta_exp_moment(const PhaseDensity& f, double lambda) {
    return theta_impl(f, lambda, false);
}

ThetaResult theta_exp_moment_full(const PhaseDensity& f, double lambda) {
    return theta_impl(f, lambda, true);
}

double weighted_ckp_bound(const PhaseDensity& f_tilde, const PhaseDensity& f, double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("weighted_ckp_bound: lambda must be > 0");
    const ThetaResult theta = theta_exp_moment(f, lambda);
    if (theta.overflow) return std::numeric_limits<double>::infinity();
    const double h = std::max(relative_entropy_grid(f_tilde, f), 0.0);
    return (2.0 / lambda) * (1.5 + std::log(theta.value)) * (std::sqrt(h) + 0.5 * h);
}

double weighted_ckp_lhs(const PhaseDensity& f_tilde, const PhaseDensity& f) {
    if (!(f_tilde.grid == f.grid)) throw std::invalid_argument("weighted_ckp_lhs: grid mismatch");
    const PhaseGrid& grid = f.grid;
    const double cell = grid.dx() * grid.dv();
    long floored = 0;
    double acc = 0.0;
    for (int g = 0; g < grid.gx; ++g)
        for (int h = 0; h < grid.gv; ++h)
            acc += grid.vweight(h) * abs_grad_v_log(f, g, h, floored) *
                   std::abs(f_tilde.at(g, h) - f.at(g, h));
    return acc * cell;
}

MonitorResult weak_strong_monitor(PhaseDensity f_tilde, PhaseDensity f, const Kernel& kernel,
                                  const SolverConfig& cfg, double t_end, double lambda,
                                  std::size_t record_every) {
    f_tilde.validate();
    f.validate();
    const double h0 = relative_entropy_grid(f_tilde, f);
    if (h0 > 1.0)
        throw std::invalid_argument("weak_strong_monitor: initial entropy H(0) > 1");
    if (record_every < 1) record_every = 1;

    MonitorResult res;
    auto record = [&](double t) {
        MonitorPoint pt;
        pt.t = t;
        pt.entropy = relative_entropy_grid(f_tilde, f);
        pt.theta = theta_exp_moment(f, lambda).value;
        pt.c_hat_running = 0.0;
        if (t > 0.0 && h0 > 0.0 && pt.entropy > 0.0)
            pt.c_hat_running = std::log(pt.entropy / h0) / t;
        res.series.push_back(pt);
        res.sup_entropy = std::max(res.sup_entropy, pt.entropy);
        return pt.entropy;
    };
    record(0.0);

    const auto nsteps = static_cast<std::size_t>(std::llround(t_end / cfg.dt));
    // Running max of the Gronwall rate over the recorded window.
    double chat_max = 0.0;
    for (std::size_t s = 0; s < nsteps; ++s) {
        step_vlasov(f_tilde, kernel, cfg);
        step_vlasov(f, kernel, cfg);
        if ((s + 1) % record_every == 0 || s + 1 == nsteps) {
            const double t = f.time;
            const double h = record(t);
            chat_max = std::max(chat_max, res.series.back().c_hat_running);
            res.series.back().c_hat_running = chat_max;
            if (h > 1.0) {
                res.regime_exited = true;
                res.exit_time = t;
                break;
            }
        }
    }
    return res;
}

}  // namespace chaoslab
