#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chaoslab/chaos_metrics.hpp"
#include "chaoslab/particle_system.hpp"
#include "chaoslab/vlasov.hpp"

// Experiment orchestration: JSON configs, seeds, deterministic CSV
// emission, and the per-experiment drivers behind the CLI subcommands.

namespace chaoslab::exp {

// Thrown on malformed configs; the CLI maps it to exit code 2.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct KernelSpec {
    std::string kind = "sine";  // zero | sine | coulomb_trunc | rough_sign
    double kappa = 1.0;
    double delta = 1e-3;
};

struct LawSpec {
    std::string kind = "maxwellian";  // maxwellian | cosine_maxwellian
    double sigma = 1.0;
    double amplitude = 0.0;
};

struct GridSpec {
    int gx = 128;
    int gv = 129;
    double vmax = 6.0;
};

struct ExperimentConfig {
    std::string experiment;
    KernelSpec kernel;
    LawSpec law;
    std::vector<std::size_t> n_list{64};
    std::size_t replicas = 4;
    std::size_t samples = 100000;
    std::size_t exp_samples = 2000;  // exp-moment column inside chaos studies
    double dt = 0.005;
    double t_end = 1.0;
    Integrator integrator = Integrator::euler_maruyama;
    NoiseSchedule noise;
    std::uint64_t seed = 0;
    std::string out = "out";
    int threads = 0;  // 0 = hardware
    GridSpec grid;
    int interp_order = 3;
    BinSpec bins{16, 16, 6.0};
    double lambda = 0.5;
    double nu = 0.0;  // 0 = choose via the 1/(16 e^2) rule
    std::size_t record_every = 10;
    std::vector<double> h0_list{1e-2, 1e-3, 1e-4};
    int q_max = 7, p_max = 6;       // combinatorics E-grid
    int n_max = 6, k_max = 2;       // combinatorics P-grid
    std::size_t cancel_quad_n = 2;  // quadrature n for the mean/second-moment checks
    std::vector<std::size_t> cancel_mc_n{10, 100};
    std::size_t scan_n = 3;  // general-rule scan size
    int scan_p = 3;
    bool test_hook_break_formula = false;

    nlohmann::json echo;  // effective config as parsed
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config_file(const std::string& path);

// SHA-1 of the canonical (sorted-key, whitespace-free) dump with the
// non-semantic fields (out, threads) removed.
std::string config_hash(const nlohmann::json& j);
std::string sha1_hex(const std::string& data);

Kernel make_kernel(const KernelSpec& spec);

struct RunRecord {
    nlohmann::json config_echo;
    std::string hash;
    // file name -> full contents; all deterministic for a fixed seed
    std::map<std::string, std::string> files;
    bool all_pass = true;
    double wall_seconds = 0.0;  // reported on stdout only, never persisted
};

RunRecord run_simulate(const ExperimentConfig& cfg);
RunRecord run_chaos_study(const ExperimentConfig& cfg);
RunRecord run_expmoment(const ExperimentConfig& cfg);
RunRecord run_combinatorics_verify(const ExperimentConfig& cfg);
RunRecord run_cancellation_verify(const ExperimentConfig& cfg);
RunRecord run_vlasov(const ExperimentConfig& cfg);
RunRecord run_weakstrong(const ExperimentConfig& cfg);

// Dispatches on cfg.experiment.
RunRecord run_experiment(const ExperimentConfig& cfg);

void write_outputs(const RunRecord& record, const std::string& out_dir);

std::string format_double(double v);  // 17 significant digits

}  // namespace chaoslab::exp
