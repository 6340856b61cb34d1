#include "chaoslab/particle_system.hpp"

#include <cmath>
#include <stdexcept>

#include "chaoslab/parallel.hpp"
#include "chaoslab/rng.hpp"

namespace chaoslab {

double NoiseSchedule::epsilon_for(std::size_t n) const {
    switch (kind) {
        case Kind::zero:
            return 0.0;
        case Kind::fixed:
            return epsilon0;
        case Kind::vanishing:
            return epsilon0 * std::pow(static_cast<double>(n), -gamma);
    }
    return 0.0;
}

double NoiseSchedule::epsilon_limit() const {
    switch (kind) {
        case Kind::zero:
            return 0.0;
        case Kind::fixed:
            return epsilon0;
        case Kind::vanishing:
            return gamma > 0.0 ? 0.0 : epsilon0;
    }
    return 0.0;
}

void ParticleEnsemble::validate() const {
    if (n < 1) throw std::invalid_argument("ParticleEnsemble: need n >= 1");
    if (dim < 1) throw std::invalid_argument("ParticleEnsemble: need dim >= 1");
    if (positions.size() != n * dim || velocities.size() != n * dim ||
        noise_streams.size() != n)
        throw std::invalid_argument("ParticleEnsemble: inconsistent array sizes");
    for (double p : positions) {
        if (!std::isfinite(p) || p < 0.0 || p >= 1.0)
            throw std::invalid_argument("ParticleEnsemble: position outside torus cell");
    }
    for (double v : velocities)
        if (!std::isfinite(v)) throw std::invalid_argument("ParticleEnsemble: non-finite velocity");
}

ParticleEnsemble sample_initial(const ReferenceLaw& law, std::size_t n, std::uint64_t seed,
                                int dim) {
    if (n < 1) throw std::invalid_argument("sample_initial: need n >= 1");
    if (!law.has_sampler()) throw std::invalid_argument("sample_initial: law has no sampler");
    if (dim != 1)
        throw std::invalid_argument("sample_initial: built-in laws are 1-d");
    ParticleEnsemble ens;
    ens.n = n;
    ens.dim = dim;
    ens.seed = seed;
    ens.positions.resize(n);
    ens.velocities.resize(n);
    ens.noise_streams.resize(n);
    const std::uint64_t key = rng::derive_key(seed, rng::kPurposeSampling);
    for (std::size_t i = 0; i < n; ++i) {
        law.sample(key, i, ens.positions[i], ens.velocities[i]);
        ens.positions[i] = wrap_torus(ens.positions[i]);
        ens.noise_streams[i] = i;
    }
    return ens;
}

std::vector<double> interaction_forces(const ParticleEnsemble& ens, const Kernel& kernel,
                                       int threads) {
    const std::size_t n = ens.n;
    const int d = ens.dim;
    if (kernel.dim() != d)
        throw std::invalid_argument("interaction_forces: kernel/ensemble dimension mismatch");
    if (kernel.sup_norm() == 0.0) return std::vector<double>(n * d, 0.0);
    const double inv_n = 1.0 / static_cast<double>(n);

    // Fixed block decomposition: per-block partial sums merged in block
    // order keep the result independent of the worker count.
    const std::size_t nblocks = std::min<std::size_t>(n, 64);
    std::vector<std::vector<double>> partial(nblocks);

    if (d == 1 && kernel.is_odd()) {
        // One evaluation per pair, applied with opposite signs.
        const double* xs = ens.positions.data();
        parallel_for_blocks(nblocks, threads, [&](std::size_t b) {
            auto [lo, hi] = block_range(n, nblocks, b);
            auto& acc = partial[b];
            acc.assign(n, 0.0);
            for (std::size_t i = lo; i < hi; ++i) {
                const double xi = xs[i];
                double fi = 0.0;
                for (std::size_t j = i + 1; j < n; ++j) {
                    const double f = kernel.eval1(xi - xs[j]);
                    fi += f;
                    acc[j] -= f;
                }
                acc[i] += fi;
            }
        });
    } else if (d == 1) {
        const double* xs = ens.positions.data();
        parallel_for_blocks(nblocks, threads, [&](std::size_t b) {
            auto [lo, hi] = block_range(n, nblocks, b);
            auto& acc = partial[b];
            acc.assign(n, 0.0);
            for (std::size_t i = lo; i < hi; ++i) {
                double fi = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    if (j == i) continue;
                    fi += kernel.eval1(xs[i] - xs[j]);
                }
                acc[i] = fi;
            }
        });
    } else if (kernel.is_odd()) {
        parallel_for_blocks(nblocks, threads, [&](std::size_t b) {
            auto [lo, hi] = block_range(n, nblocks, b);
            auto& acc = partial[b];
            acc.assign(n * d, 0.0);
            std::vector<double> dx(d), f(d);
            for (std::size_t i = lo; i < hi; ++i) {
                for (std::size_t j = i + 1; j < n; ++j) {
                    for (int c = 0; c < d; ++c) dx[c] = ens.x(i, c) - ens.x(j, c);
                    kernel.eval(dx, f);
                    for (int c = 0; c < d; ++c) {
                        acc[i * d + c] += f[c];
                        acc[j * d + c] -= f[c];
                    }
                }
            }
        });
    } else {
        parallel_for_blocks(nblocks, threads, [&](std::size_t b) {
            auto [lo, hi] = block_range(n, nblocks, b);
            auto& acc = partial[b];
            acc.assign(n * d, 0.0);
            std::vector<double> dx(d), f(d);
            for (std::size_t i = lo; i < hi; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    if (j == i) continue;
                    for (int c = 0; c < d; ++c) dx[c] = ens.x(i, c) - ens.x(j, c);
                    kernel.eval(dx, f);
                    for (int c = 0; c < d; ++c) acc[i * d + c] += f[c];
                }
            }
        });
    }

    std::vector<double> force(n * d, 0.0);
    for (std::size_t b = 0; b < nblocks; ++b) {
        if (partial[b].empty()) continue;
        for (std::size_t k = 0; k < n * static_cast<std::size_t>(d); ++k)
            force[k] += partial[b][k];
    }
    for (double& f : force) f *= inv_n;
    return force;
}

void step(ParticleEnsemble& ens, const Kernel& kernel, const NoiseSchedule& noise, double dt,
          Integrator integrator, int threads) {
    if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be > 0");
    const std::size_t n = ens.n;
    const int d = ens.dim;
    const double eps = noise.epsilon_for(n);

    if (integrator == Integrator::velocity_verlet) {
        if (eps > 0.0)
            throw std::invalid_argument("step: velocity_verlet requires zero noise");
        const std::vector<double> f0 = interaction_forces(ens, kernel, threads);
        for (std::size_t k = 0; k < n * static_cast<std::size_t>(d); ++k)
            ens.positions[k] = ens.positions[k] + ens.velocities[k] * dt + 0.5 * f0[k] * dt * dt;
        for (double& p : ens.positions) p = wrap_torus(p);
        const std::vector<double> f1 = interaction_forces(ens, kernel, threads);
        for (std::size_t k = 0; k < n * static_cast<std::size_t>(d); ++k)
            ens.velocities[k] += 0.5 * (f0[k] + f1[k]) * dt;
    } else {
        const std::vector<double> force = interaction_forces(ens, kernel, threads);
        const double noise_scale = std::sqrt(2.0 * eps * dt);
        const std::uint64_t key = rng::derive_key(ens.seed, rng::kPurposeNoise);
        for (std::size_t i = 0; i < n; ++i) {
            for (int c = 0; c < d; ++c) {
                const std::size_t k = i * d + c;
                ens.positions[k] = wrap_torus(ens.positions[k] + ens.velocities[k] * dt);
                double dv = force[k] * dt;
                if (noise_scale > 0.0)
                    dv += noise_scale * rng::normal(key, ens.noise_streams[i],
                                                    ens.step_index * d + c);
                ens.velocities[k] += dv;
            }
        }
    }

    ens.time += dt;
    ++ens.step_index;
    for (double v : ens.velocities)
        if (!std::isfinite(v)) throw std::runtime_error("step: non-finite state (step-size fault)");
}

Observer momentum_observer(int component) {
    return {"momentum_" + std::to_string(component),
            [component](const ParticleEnsemble& e) { return total_momentum(e, component); }};
}

Observer kinetic_energy_observer() {
    return {"kinetic_energy", [](const ParticleEnsemble& e) {
                double acc = 0.0;
                for (double v : e.velocities) acc += v * v;
                return 0.5 * acc / static_cast<double>(e.n);
            }};
}

Observer velocity_variance_observer(int component) {
    return {"velocity_variance_" + std::to_string(component),
            [component](const ParticleEnsemble& e) {
                double mean = 0.0;
                for (std::size_t i = 0; i < e.n; ++i) mean += e.v(i, component);
                mean /= static_cast<double>(e.n);
                double var = 0.0;
                for (std::size_t i = 0; i < e.n; ++i) {
                    const double dv = e.v(i, component) - mean;
                    var += dv * dv;
                }
                return var / static_cast<double>(e.n);
            }};
}

std::vector<ObserverRecord> simulate(ParticleEnsemble& ens, const Kernel& kernel,
                                     const NoiseSchedule& noise, double dt, double t_end,
                                     const std::vector<Observer>& observers,
                                     std::size_t record_every, int threads,
                                     Integrator integrator) {
    if (t_end < ens.time) throw std::invalid_argument("simulate: t_end before current time");
    if (record_every < 1) record_every = 1;
    std::vector<ObserverRecord> out;
    auto record = [&]() {
        for (const auto& ob : observers) out.push_back({ens.time, ob.name, ob.fn(ens)});
    };
    record();
    const auto nsteps =
        static_cast<std::size_t>(std::llround((t_end - ens.time) / dt));
    for (std::size_t s = 0; s < nsteps; ++s) {
        step(ens, kernel, noise, dt, integrator, threads);
        if ((s + 1) % record_every == 0 || s + 1 == nsteps) record();
    }
    return out;
}

EmpiricalMeasure empirical_measure(const ParticleEnsemble& ens) {
    ens.validate();
    return {ens.n, ens.dim, ens.positions, ens.velocities};
}

double total_momentum(const ParticleEnsemble& ens, int component) {
    // Neumaier summation: the measurement should not add its own drift.
    double sum = 0.0, comp = 0.0;
    for (std::size_t i = 0; i < ens.n; ++i) {
        const double x = ens.v(i, component);
        const double t = sum + x;
        comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
        sum = t;
    }
    return sum + comp;
}

}  // namespace chaoslab
