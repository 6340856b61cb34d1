// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure.  Tolerances are pinned here; nothing is deferred to calibration.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "chaoslab/cancellation.hpp"
#include "chaoslab/chaos_metrics.hpp"
#include "chaoslab/experiments.hpp"
#include "chaoslab/parallel.hpp"
#include "chaoslab/particle_system.hpp"
#include "chaoslab/rng.hpp"
#include "chaoslab/vlasov.hpp"

using namespace chaoslab;
using nlohmann::json;

namespace {

int g_threads = 0;
std::uint64_t g_seed = 20240817;

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::ostringstream& operator<<(std::ostringstream& os, const Outcome&) = delete;

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

json base(const char* experiment) {
    json j;
    j["experiment"] = experiment;
    j["seed"] = g_seed;
    j["threads"] = g_threads;
    return j;
}

// ---- 1. combinatorics exactness -----------------------------------------

Outcome criterion_combinatorics() {
    json j = base("combinatorics_verify");
    j["q_max"] = 7;
    j["p_max"] = 6;
    j["n_max"] = 6;
    j["k_max"] = 2;
    const auto rec = exp::run_combinatorics_verify(exp::parse_config(j));
    Outcome out;
    out.pass = rec.all_pass;
    std::size_t rows = 0;
    for (char c : rec.files.at("combinatorics_verify.csv"))
        if (c == '\n') ++rows;
    out.detail = "exact-count rows checked: " + std::to_string(rows - 1);
    return out;
}

// ---- 2. cancellation zeros ------------------------------------------------

Outcome criterion_cancellation_zeros() {
    const MaxwellianLaw law(1.0);
    const Kernel kernel = make_sine_kernel(1.0);
    Outcome out;
    std::ostringstream detail;

    const cancel::Report scan = cancel::verify_cancellation_scan(law, kernel, 3, 3, 64, g_threads);
    double max_zero = 0.0;
    for (const auto& row : scan.rows) {
        if (row.check.rfind("general_rule_case", 0) == 0) {
            if (!row.pass) out.pass = false;
            max_zero = std::max(max_zero, std::abs(row.value));
        }
    }
    detail << "max case-1/2 |integral| at n<=3,p<=3: " << max_zero;

    const cancel::Report v1q =
        cancel::verify_mean_cancellation(law, kernel, 2, cancel::Method::quadrature, 0, 0, g_threads);
    if (!v1q.all_pass()) out.pass = false;
    detail << "; quad int R_2 f_2 = " << v1q.rows.front().value;

    for (std::size_t n : {std::size_t{10}, std::size_t{100}}) {
        const cancel::Report v1 = cancel::verify_mean_cancellation(
            law, kernel, n, cancel::Method::monte_carlo, 100000, g_seed, g_threads);
        if (!v1.all_pass()) out.pass = false;
        detail << "; mc mean(n=" << n << ") = " << v1.rows.front().value << " (3se "
               << v1.rows.front().tolerance << ")";
    }
    out.detail = detail.str();
    return out;
}

// ---- 3. second-moment identity and bound ----------------------------------

Outcome criterion_second_moment() {
    const MaxwellianLaw law(1.0);
    const Kernel kernel = make_sine_kernel(1.0);
    Outcome out;
    std::ostringstream detail;

    // Quadrature at n = 2: the full second moment equals (N-1)/N * 1/2.
    const cancel::Report quad =
        cancel::verify_second_moment(law, kernel, 2, cancel::Method::quadrature, 0, 0, g_threads);
    if (!quad.all_pass()) out.pass = false;
    for (const auto& row : quad.rows)
        if (row.check == "second_moment_bound") {
            if (std::abs(row.value - 0.25) > 1e-6) out.pass = false;
            detail << "quad n=2 value " << row.value << " (expect 0.25)";
        }

    for (std::size_t n : {std::size_t{3}, std::size_t{4}, std::size_t{8}}) {
        const RnMoments m = mc_rn_moments(law, kernel, n, 100000, g_seed, g_threads);
        const double expected = 0.5 * static_cast<double>(n - 1) / static_cast<double>(n);
        if (std::abs(m.second - expected) > 3.0 * m.second_stderr) out.pass = false;
        if (m.second > 4.0 + 3.0 * m.second_stderr) out.pass = false;
        detail << "; mc n=" << n << ": " << m.second << "+-" << m.second_stderr;
    }
    detail << "; bound 4";
    out.detail = detail.str();
    return out;
}

// ---- 4. exponential moment --------------------------------------------------

Outcome criterion_exp_moment() {
    // Kernel scaled so a = 8 e^2 |K| sup(M_p/p) = 1/2, hence nu = 1 and the
    // closed-form bound is 5 + 6 (0.5/0.75)^2 = 23/3.
    const MaxwellianLaw law(1.0);
    const double sr = sup_ratio(law);
    const double kappa = 0.5 / (8.0 * std::exp(2.0) * sr);
    json j = base("expmoment");
    j["kernel"] = {{"kind", "sine"}, {"kappa", kappa}};
    j["n_list"] = {8, 32, 128};
    j["samples"] = 100000;
    const auto rec = exp::run_expmoment(exp::parse_config(j));
    Outcome out;
    out.pass = rec.all_pass;
    const std::string& csv = rec.files.at("expmoment.csv");
    std::istringstream is(csv);
    std::string line;
    std::getline(is, line);  // header
    std::ostringstream detail;
    detail << "bound " << theorem_bound(0.5) << ";";
    while (std::getline(is, line)) {
        std::istringstream ls(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        detail << " N=" << cells[0] << ": " << cells[4] << "+-" << cells[5];
    }
    out.detail = detail.str();
    return out;
}

// ---- 5. propagation-of-chaos trend -----------------------------------------

struct ChaosRow {
    std::size_t n = 0;
    MarginalDistance d1, d2;
};

std::vector<ChaosRow> run_chaos_trend(const std::vector<std::size_t>& n_list,
                                      std::size_t replicas, double dt, double t_end,
                                      std::uint64_t seed, Integrator integrator) {
    const CosineMaxwellianLaw law(1.0, 0.5);
    const Kernel kernel = make_sine_kernel(1.0);
    const PhaseGrid grid{128, 161, 6.0};
    PhaseDensity f = make_phase_density(
        grid, [&](double x, double v) { return law.density(x, v); });
    SolverConfig sc;
    sc.dt = t_end / std::ceil(t_end / std::min(dt, 0.9 * grid.dx() / grid.vmax));
    sc.epsilon = 0.0;
    sc.interp_order = 3;
    const auto pde_steps = static_cast<std::size_t>(std::llround(t_end / sc.dt));
    for (std::size_t s = 0; s < pde_steps; ++s) step_vlasov(f, kernel, sc);

    const BinSpec bins{16, 16, grid.vmax};
    const auto probe = bin_phase_density(f, bins);
    const std::size_t n_min = n_list.front();
    const BinSpec bins1 = effective_bins(probe, bins, 1, n_min * replicas);
    const BinSpec bins2 = effective_bins(probe, bins, 2, (n_min / 2) * replicas);
    const auto ref1 = bin_phase_density(f, bins1);
    const auto ref2 = bin_phase_density(f, bins2);

    const auto nsteps = static_cast<std::size_t>(std::llround(t_end / dt));
    std::vector<ChaosRow> rows;
    for (std::size_t n : n_list) {
        std::vector<ParticleEnsemble> replica_set(replicas);
        parallel_for_blocks(replicas, g_threads, [&](std::size_t r) {
            const std::uint64_t rs =
                rng::hash3(rng::derive_key(seed, rng::kPurposeReplica), n, r);
            ParticleEnsemble ens = sample_initial(law, n, rs);
            for (std::size_t s = 0; s < nsteps; ++s)
                step(ens, kernel, NoiseSchedule::zero(), dt, integrator, 1);
            replica_set[r] = std::move(ens);
        });
        ChaosRow row;
        row.n = n;
        row.d1 = marginal_and_distance(replica_set, ref1, 1, bins1);
        row.d2 = marginal_and_distance(replica_set, ref2, 2, bins2);
        rows.push_back(std::move(row));
    }
    return rows;
}

Outcome criterion_chaos_trend() {
    // Velocity Verlet at dt = 0.04: the time-discretization bias is far
    // below the sampling floor (checked against dt = 0.005 runs).
    const std::vector<std::size_t> n_list = {250, 1000, 4000};
    const auto rows =
        run_chaos_trend(n_list, 20, 0.04, 1.0, g_seed, Integrator::velocity_verlet);
    Outcome out;
    std::ostringstream detail;
    detail << "l1_k1:";
    for (const auto& r : rows) detail << " " << r.d1.l1;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double ratio = rows[i].d1.l1 / rows[i - 1].d1.l1;
        if (ratio < 0.35 || ratio > 0.65) out.pass = false;
        detail << (i == 1 ? "; ratios: " : ", ") << ratio;
    }
    detail << "; l1_k2:";
    for (const auto& r : rows) detail << " " << r.d2.l1 << "+-" << r.d2.l1_stderr;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double slack = 2.0 * std::sqrt(rows[i].d2.l1_stderr * rows[i].d2.l1_stderr +
                                             rows[i - 1].d2.l1_stderr * rows[i - 1].d2.l1_stderr);
        if (rows[i].d2.l1 > rows[i - 1].d2.l1 + slack) out.pass = false;
    }
    out.detail = detail.str();
    return out;
}

// ---- 6. solver correctness ---------------------------------------------------

Outcome criterion_solver() {
    Outcome out;
    std::ostringstream detail;
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    auto bump = [](double x, double v) {
        return (1.0 + 0.5 * std::cos(kTwoPi * x)) *
               std::exp(-0.5 * v * v) / std::sqrt(kTwoPi);
    };

    // Free streaming at G = 256, t = 0.5.
    {
        const PhaseGrid grid{256, 257, 6.0};
        PhaseDensity f = make_phase_density(grid, bump);
        SolverConfig cfg;
        cfg.dt = 0.9 * grid.dx() / grid.vmax;
        cfg.interp_order = 3;
        const Kernel k = make_zero_kernel();
        const double t_end = 0.5;
        const auto steps = static_cast<std::size_t>(std::ceil(t_end / cfg.dt));
        cfg.dt = t_end / static_cast<double>(steps);
        double max_drift = 0.0;
        for (std::size_t s = 0; s < steps; ++s) {
            const StepAudit a = step_vlasov(f, k, cfg);
            max_drift = std::max(max_drift, std::abs(a.mass_drift_pre_renorm));
        }
        const PhaseDensity oracle = make_phase_density(
            grid, [&](double x, double v) { return bump(x - v * t_end, v); });
        const double err = l1_distance_grid(f, oracle);
        if (err > 1e-3) out.pass = false;
        if (max_drift >= 1e-8) out.pass = false;
        detail << "free-stream L1 " << err << " (tol 1e-3); max mass drift " << max_drift
               << " (tol 1e-8)";
    }

    // Heat spreading of the velocity marginal.
    {
        const PhaseGrid grid{4, 281, 7.0};
        PhaseDensity f = make_phase_density(grid, [](double, double v) {
            return std::exp(-0.5 * v * v);
        });
        SolverConfig cfg;
        cfg.dt = 0.025;
        cfg.epsilon = 0.05;
        const Kernel k = make_zero_kernel();
        for (int s = 0; s < 40; ++s) step_vlasov(f, k, cfg);
        double var = 0.0;
        const double cell = grid.dx() * grid.dv();
        for (int g = 0; g < grid.gx; ++g)
            for (int h = 0; h < grid.gv; ++h)
                var += grid.vweight(h) * grid.v(h) * grid.v(h) * f.at(g, h) * cell;
        const double expected = 1.0 + 2.0 * 0.05 * 1.0;
        const double rel = std::abs(var - expected) / expected;
        if (rel > 1e-3) out.pass = false;
        detail << "; heat variance rel err " << rel << " (tol 1e-3)";
    }
    out.detail = detail.str();
    return out;
}

// ---- 7. momentum conservation -------------------------------------------------

Outcome criterion_momentum() {
    const MaxwellianLaw law(1.0);
    ParticleEnsemble ens = sample_initial(law, 1000, g_seed);
    const Kernel kernel = make_sine_kernel(1.0);
    const NoiseSchedule noise = NoiseSchedule::zero();
    double max_step_drift = 0.0;
    double p_prev = total_momentum(ens);
    for (int s = 0; s < 10000; ++s) {
        step(ens, kernel, noise, 1e-3, Integrator::euler_maruyama, g_threads);
        const double p = total_momentum(ens);
        max_step_drift = std::max(max_step_drift, std::abs(p - p_prev));
        p_prev = p;
    }
    Outcome out;
    out.pass = max_step_drift <= 1e-12;
    std::ostringstream detail;
    detail << "max per-step |dP| over 1e4 steps at N=1000: " << max_step_drift
           << " (tol 1e-12)";
    out.detail = detail.str();
    return out;
}

// ---- 8. weak-strong monitoring --------------------------------------------------

Outcome criterion_weakstrong() {
    json j = base("weakstrong");
    j["grid"] = {{"gx", 64}, {"gv", 97}, {"vmax", 6.0}};
    j["dt"] = 0.002;
    j["t_end"] = 1.0;
    j["h0_list"] = {1e-2, 1e-3, 1e-4};
    j["record_every"] = 20;
    j["law"] = {{"kind", "cosine_maxwellian"}, {"sigma", 1.0}, {"amplitude", 0.3}};
    j["kernel"] = {{"kind", "sine"}, {"kappa", 1.0}};
    const auto rec = exp::run_weakstrong(exp::parse_config(j));
    Outcome out;
    out.pass = rec.all_pass;
    const std::string& summary = rec.files.at("weakstrong_summary.csv");
    std::istringstream is(summary);
    std::string line;
    std::ostringstream detail;
    while (std::getline(is, line))
        if (line.rfind("linear_scaling_factor", 0) == 0 ||
            line.rfind("identical_data_sup_H", 0) == 0)
            detail << line << "; ";
    out.detail = detail.str();
    return out;
}

// ---- 9. reproducibility -----------------------------------------------------------

Outcome criterion_reproducibility() {
    Outcome out;
    std::ostringstream detail;

    auto byte_identical = [&](const char* name, const json& cfg) {
        const auto a = exp::run_experiment(exp::parse_config(cfg));
        const auto b = exp::run_experiment(exp::parse_config(cfg));
        const bool same = a.files == b.files;
        if (!same) out.pass = false;
        detail << name << (same ? " byte-identical; " : " DIFFERS; ");
        return a;
    };

    {
        json j = base("combinatorics_verify");
        j["q_max"] = 7;
        j["p_max"] = 6;
        j["n_max"] = 6;
        j["k_max"] = 2;
        byte_identical("combinatorics", j);
    }
    {
        const double kappa = 0.5 / (8.0 * std::exp(2.0) * sup_ratio(MaxwellianLaw(1.0)));
        json j = base("expmoment");
        j["kernel"] = {{"kind", "sine"}, {"kappa", kappa}};
        j["n_list"] = {8, 32, 128};
        j["samples"] = 100000;
        byte_identical("expmoment", j);

        // Pass/fail decisions stable across 5 seeds.
        bool stable = true;
        for (std::uint64_t s = 1; s <= 5; ++s) {
            j["seed"] = s;
            const auto rec = exp::run_expmoment(exp::parse_config(j));
            stable = stable && rec.all_pass;
        }
        if (!stable) out.pass = false;
        detail << "expmoment pass stable over 5 seeds: " << (stable ? "yes" : "NO") << "; ";
    }
    {
        json j = base("cancellation_verify");
        j["samples"] = 100000;
        j["cancel_mc_n"] = {10, 100};
        j["scan_n"] = 3;
        j["scan_p"] = 2;
        byte_identical("cancellation", j);

        bool stable = true;
        for (std::uint64_t s = 1; s <= 5; ++s) {
            const MaxwellianLaw law(1.0);
            const auto rep = cancel::verify_mean_cancellation(law, make_sine_kernel(1.0), 100,
                                                    cancel::Method::monte_carlo, 100000, s,
                                                    g_threads);
            stable = stable && rep.all_pass();
        }
        if (!stable) out.pass = false;
        detail << "mean-cancellation MC stable over 5 seeds: " << (stable ? "yes" : "NO") << "; ";
    }
    {
        json j = base("weakstrong");
        j["grid"] = {{"gx", 32}, {"gv", 49}, {"vmax", 6.0}};
        j["dt"] = 0.004;
        j["t_end"] = 0.2;
        j["h0_list"] = {1e-2, 1e-3};
        j["record_every"] = 20;
        j["law"] = {{"kind", "cosine_maxwellian"}, {"sigma", 1.0}, {"amplitude", 0.3}};
        byte_identical("weakstrong", j);
    }
    {
        json j = base("chaos_study");
        j["n_list"] = {64, 128};
        j["replicas"] = 6;
        j["dt"] = 0.01;
        j["t_end"] = 0.2;
        j["exp_samples"] = 1000;
        j["grid"] = {{"gx", 64}, {"gv", 65}, {"vmax", 6.0}};
        j["law"] = {{"kind", "cosine_maxwellian"}, {"sigma", 1.0}, {"amplitude", 0.5}};
        byte_identical("chaos(reduced)", j);
    }

    out.detail = detail.str();
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--threads") == 0 && i + 1 < argc)
            g_threads = std::atoi(argv[++i]);
        else if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc)
            only = std::atoi(argv[++i]);
        else if (std::strcmp(argv[i], "--seed") == 0 && i + 1 < argc)
            g_seed = std::strtoull(argv[++i], nullptr, 10);
    }
    if (g_threads == 0)
        if (const char* env = std::getenv("CHAOSLAB_THREADS")) g_threads = std::atoi(env);

    struct Criterion {
        int id;
        const char* name;
        Outcome (*fn)();
    };
    const std::vector<Criterion> criteria = {
        {1, "combinatorics exactness", criterion_combinatorics},
        {2, "cancellation zeros", criterion_cancellation_zeros},
        {3, "second-moment identity and bound", criterion_second_moment},
        {4, "exponential moment vs closed-form bound", criterion_exp_moment},
        {5, "propagation-of-chaos trend", criterion_chaos_trend},
        {6, "solver correctness", criterion_solver},
        {7, "momentum conservation", criterion_momentum},
        {8, "weak-strong entropy monitoring", criterion_weakstrong},
        {9, "reproducibility", criterion_reproducibility},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        if (only != 0 && c.id != only) continue;
        const double t0 = now_seconds();
        Outcome out;
        try {
            out = c.fn();
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail = std::string("exception: ") + e.what();
        }
        const double dt = now_seconds() - t0;
        std::printf("[%s] %d. %s (%.1fs) — %s\n", out.pass ? "PASS" : "FAIL", c.id, c.name,
                    dt, out.detail.c_str());
        std::fflush(stdout);
        if (!out.pass) ++failures;
    }
    if (failures == 0)
        std::printf("acceptance: all criteria passed\n");
    else
        std::printf("acceptance: %d criterion(s) FAILED\n", failures);
    return failures == 0 ? 0 : 1;
}
