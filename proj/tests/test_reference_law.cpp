#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "chaoslab/quadrature.hpp"
#include "chaoslab/reference_law.hpp"
#include "chaoslab/rng.hpp"

using namespace chaoslab;

namespace {

// Test-only oracle: Simpson integration of |score|^p f over x and v,
// independent of the library quadrature path.
double mp_simpson(const ReferenceLaw& law, int p) {
    const int nx = 201, nv = 4001;
    const double vmax = 12.0 * law.sigma();
    const double hx = 1.0 / (nx - 1), hv = 2.0 * vmax / (nv - 1);
    auto simpson_w = [](int i, int n) {
        if (i == 0 || i == n - 1) return 1.0;
        return i % 2 == 1 ? 4.0 : 2.0;
    };
    double acc = 0.0;
    for (int i = 0; i < nx; ++i) {
        const double x = i * hx;
        double inner = 0.0;
        for (int j = 0; j < nv; ++j) {
            const double v = -vmax + j * hv;
            inner += simpson_w(j, nv) * std::pow(std::abs(law.score_v(x, v)), p) *
                     law.density(x, v);
        }
        acc += simpson_w(i, nx) * inner * hv / 3.0;
    }
    acc *= hx / 3.0;
    return std::pow(acc, 1.0 / p);
}

double law_mass_quadrature(const ReferenceLaw& law) {
    const quad::Rule rx = quad::gauss_legendre(64, 0.0, 1.0);
    const quad::Rule rv = quad::gauss_legendre(128, -12.0 * law.sigma(), 12.0 * law.sigma());
    double acc = 0.0;
    for (int i = 0; i < rx.size(); ++i)
        for (int j = 0; j < rv.size(); ++j)
            acc += rx.weights[i] * rv.weights[j] * law.density(rx.nodes[i], rv.nodes[j]);
    return acc;
}

}  // namespace

TEST_SUITE("reference_law") {

TEST_CASE("laws integrate to one") {
    CHECK(law_mass_quadrature(MaxwellianLaw(1.0)) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(law_mass_quadrature(MaxwellianLaw(0.7)) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(law_mass_quadrature(CosineMaxwellianLaw(1.0, 0.5)) ==
          doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("Maxwellian closed-form moments") {
    const MaxwellianLaw law(1.0);
    CHECK(law.m_p(2) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(law.m_p(1) == doctest::Approx(std::sqrt(2.0 / M_PI)).epsilon(1e-12));
    // sigma scaling: M_p ~ 1/sigma
    const MaxwellianLaw half(0.5);
    CHECK(half.m_p(2) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("closed-form M_p matches an independent Simpson oracle for p <= 8") {
    const MaxwellianLaw law(1.0);
    const CosineMaxwellianLaw mod(1.0, 0.4);
    for (int p = 1; p <= 8; ++p) {
        CAPTURE(p);
        CHECK(law.m_p(p) == doctest::Approx(mp_simpson(law, p)).epsilon(1e-6));
        CHECK(mod.m_p(p) == doctest::Approx(mp_simpson(mod, p)).epsilon(1e-6));
    }
}

TEST_CASE("sup of M_p/p is certified: scan up to p = 64 stays below the bound") {
    for (double sigma : {0.5, 1.0, 2.0}) {
        const MaxwellianLaw law(sigma);
        double scan = 0.0;
        for (int p = 1; p <= 64; ++p) scan = std::max(scan, law.m_p(p) / p);
        CHECK(scan <= law.sup_mp_over_p() + 1e-12);
        CHECK(scan == doctest::Approx(law.sup_mp_over_p()).epsilon(1e-10));  // attained at p=1
    }
}

TEST_CASE("M_p/p decreases in p for the Gaussian family") {
    const MaxwellianLaw law(1.0);
    double prev = law.m_p(1) / 1.0;
    for (int p = 2; p <= 64; ++p) {
        const double cur = law.m_p(p) / p;
        CHECK(cur <= prev + 1e-12);
        prev = cur;
    }
}

TEST_CASE("score is the velocity log-gradient") {
    const CosineMaxwellianLaw law(0.8, 0.3);
    const double h = 1e-6;
    for (double x : {0.1, 0.6}) {
        for (double v : {-1.2, 0.4, 2.0}) {
            const double fd =
                (std::log(law.density(x, v + h)) - std::log(law.density(x, v - h))) / (2 * h);
            CHECK(law.score_v(x, v) == doctest::Approx(fd).epsilon(1e-6));
            const double fdx =
                (std::log(law.density(x + h, v)) - std::log(law.density(x - h, v))) / (2 * h);
            CHECK(law.grad_x_log(x, v) == doctest::Approx(fdx).epsilon(1e-5));
        }
    }
}

TEST_CASE("sampler is exact: uniform/inverse-CDF positions, Gaussian velocities") {
    const CosineMaxwellianLaw law(1.0, 0.5);
    const std::uint64_t key = rng::derive_key(11, rng::kPurposeSampling);
    const int n = 200000;
    double sum_v = 0.0, sum_v2 = 0.0, sum_cos = 0.0;
    for (int i = 0; i < n; ++i) {
        double x, v;
        law.sample(key, i, x, v);
        REQUIRE(x >= 0.0);
        REQUIRE(x < 1.0);
        sum_v += v;
        sum_v2 += v * v;
        sum_cos += std::cos(2.0 * M_PI * x);
    }
    // E cos(2 pi x) = amplitude / 2 under rho = 1 + a cos.
    CHECK(sum_cos / n == doctest::Approx(0.25).epsilon(0.05));
    CHECK(sum_v / n == doctest::Approx(0.0).epsilon(1e-4 * 3 * 10));
    CHECK(std::abs(sum_v2 / n - 1.0) < 3.0 * std::sqrt(2.0 / n));
}

TEST_CASE("conv field: odd kernel x uniform law vanishes; cosine law closed form") {
    const MaxwellianLaw uni(1.0);
    const Kernel sine = make_sine_kernel(1.0);
    const ConvField zero = uni.conv_field(sine);
    for (double x : {0.0, 0.3, 0.77}) CHECK(zero(x) == 0.0);

    const CosineMaxwellianLaw mod(1.0, 0.4);
    const ConvField conv = mod.conv_field(sine);
    for (double x : {0.0, 0.2, 0.5, 0.9})
        CHECK(conv(x) == doctest::Approx(0.2 * std::sin(2.0 * M_PI * x)).epsilon(1e-12));

    // Grid fallback agrees with the closed form for the sine kernel.
    const ConvField grid = mod.ReferenceLaw::conv_field(sine);
    for (double x : {0.05, 0.42, 0.88})
        CHECK(grid(x) == doctest::Approx(0.2 * std::sin(2.0 * M_PI * x)).epsilon(1e-6));
}

TEST_CASE("full-gradient polynomial envelope holds on a dense grid") {
    const MaxwellianLaw uni(0.8);
    const CosineMaxwellianLaw mod(1.0, 0.4);
    for (const ReferenceLaw* law : {static_cast<const ReferenceLaw*>(&uni),
                                    static_cast<const ReferenceLaw*>(&mod)}) {
        const auto env = law->full_gradient_bound();
        REQUIRE(env.has_value());
        for (int i = 0; i < 40; ++i)
            for (int j = 0; j < 80; ++j) {
                const double x = i / 40.0;
                const double v = -8.0 + 16.0 * j / 79.0;
                const double gx = law->grad_x_log(x, v);
                const double gv = law->score_v(x, v);
                const double grad = std::sqrt(gx * gx + gv * gv);
                const double cap =
                    env->c * (1.0 + std::pow(std::abs(x), env->k) +
                              std::pow(std::abs(v), env->k));
                CHECK(grad <= cap * (1.0 + 1e-12) + 1e-12);
            }
    }
}

TEST_CASE("factory") {
    CHECK(make_law("maxwellian", 1.0, 0.0)->name() == "maxwellian");
    CHECK(make_law("cosine_maxwellian", 1.0, 0.3)->name() == "cosine_maxwellian");
    CHECK_THROWS_AS(make_law("cauchy", 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(CosineMaxwellianLaw(1.0, 1.0), std::invalid_argument);
}

}  // TEST_SUITE
