#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chaoslab/kernels.hpp"
#include "chaoslab/reference_law.hpp"

// The N-particle system: positions on the torus, velocities in R^d, pair
// forces scaled by 1/N, and Wiener forcing scaled by the noise schedule.

namespace chaoslab {

struct NoiseSchedule {
    enum class Kind { zero, fixed, vanishing };
    Kind kind = Kind::zero;
    double epsilon0 = 0.0;
    double gamma = 0.0;  // vanishing rule eps_N = epsilon0 * N^-gamma

    double epsilon_for(std::size_t n) const;
    // Diffusion coefficient of the limiting PDE.
    double epsilon_limit() const;
    static NoiseSchedule zero() { return {}; }
    static NoiseSchedule fixed(double eps) { return {Kind::fixed, eps, 0.0}; }
    static NoiseSchedule vanishing(double eps0, double gamma) {
        return {Kind::vanishing, eps0, gamma};
    }
};

enum class Integrator { euler_maruyama, velocity_verlet };

struct ParticleEnsemble {
    std::size_t n = 0;
    int dim = 1;
    std::vector<double> positions;             // n*dim, torus-wrapped
    std::vector<double> velocities;            // n*dim
    std::vector<std::uint64_t> noise_streams;  // per-particle stream ids
    double time = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t step_index = 0;  // noise counter

    double& x(std::size_t i, int c = 0) { return positions[i * dim + c]; }
    double x(std::size_t i, int c = 0) const { return positions[i * dim + c]; }
    double& v(std::size_t i, int c = 0) { return velocities[i * dim + c]; }
    double v(std::size_t i, int c = 0) const { return velocities[i * dim + c]; }

    void validate() const;
};

struct EmpiricalMeasure {
    std::size_t n = 0;
    int dim = 1;
    std::vector<double> positions;
    std::vector<double> velocities;
    double weight() const { return 1.0 / static_cast<double>(n); }
};

// N i.i.d. draws from the law; bit-reproducible for a fixed seed.
ParticleEnsemble sample_initial(const ReferenceLaw& law, std::size_t n, std::uint64_t seed,
                                int dim = 1);

// Mean-field forces (1/N) sum_{j != i} K(x_i - x_j), accumulated in a fixed
// block order so results do not depend on the worker count.  Odd kernels
// use one evaluation per pair applied antisymmetrically, which conserves
// total momentum exactly up to rounding of the per-particle sums.
std::vector<double> interaction_forces(const ParticleEnsemble& ens, const Kernel& kernel,
                                       int threads = 1);

// One step:
//   euler_maruyama:  X += V dt;  V += F(X_old) dt + sqrt(2 eps_N dt) xi
//   velocity_verlet: X += V dt + F dt^2/2;  V += (F(X_old)+F(X_new)) dt/2
// Verlet is deterministic only (rejects eps_N > 0).
void step(ParticleEnsemble& ens, const Kernel& kernel, const NoiseSchedule& noise, double dt,
          Integrator integrator = Integrator::euler_maruyama, int threads = 1);

struct ObserverRecord {
    double t = 0.0;
    std::string name;
    double value = 0.0;
};

struct Observer {
    std::string name;
    std::function<double(const ParticleEnsemble&)> fn;
};

Observer momentum_observer(int component);
Observer kinetic_energy_observer();          // (1/N) sum |v|^2 / 2
Observer velocity_variance_observer(int component);

// Repeated steps until t_end, recording observers every `record_every`
// steps (and at the initial and final states).
std::vector<ObserverRecord> simulate(ParticleEnsemble& ens, const Kernel& kernel,
                                     const NoiseSchedule& noise, double dt, double t_end,
                                     const std::vector<Observer>& observers,
                                     std::size_t record_every = 1, int threads = 1,
                                     Integrator integrator = Integrator::euler_maruyama);

EmpiricalMeasure empirical_measure(const ParticleEnsemble& ens);

// Compensated (Neumaier) total over particles of component c.
double total_momentum(const ParticleEnsemble& ens, int component = 0);

}  // namespace chaoslab
