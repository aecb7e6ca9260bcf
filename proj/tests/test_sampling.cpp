#include <catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "ilrapprox/harness.hpp"
#include "ilrapprox/sampling.hpp"

using namespace ilrapprox;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

struct Moments {
    double mean = 0.0;
    double var = 0.0;
};

template <typename F>
Moments moments_of(std::size_t n, F&& draw) {
    std::vector<double> x(n);
    for (auto& v : x) {
        v = static_cast<double>(draw());
    }
    const auto [mean, cov] = sample_moments(x, 1);
    return {mean[0], cov(0, 0)};
}

void check_mean_within(const Moments& m, double mean, double var, std::size_t n) {
    const double se = std::sqrt(var / static_cast<double>(n));
    CHECK(std::abs(m.mean - mean) < 4.0 * se);
}

}

TEST_CASE("engine matches the standard 64-bit Mersenne Twister", "[sampling]") {
    RandomStream rng(5489u);
    std::uint64_t value = 0;
    for (int i = 0; i < 10000; ++i) {
        value = rng.next();
    }
    CHECK(value == 9981545732273789042ULL);
}

TEST_CASE("derived seeds are deterministic and distinct", "[sampling]") {
    CHECK(derive_seed(1, 2) == derive_seed(1, 2));
    CHECK(derive_seed(1, 2) != derive_seed(1, 3));
    CHECK(derive_seed(1, 2) != derive_seed(2, 2));
    auto a = RandomStream::substream(7, 3);
    auto b = RandomStream::substream(7, 3);
    for (int i = 0; i < 10; ++i) {
        CHECK(a.next() == b.next());
    }
}

TEST_CASE("uniform and normal draws", "[sampling]") {
    RandomStream rng(1);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        const double o = rng.uniform_open();
        CHECK((u >= 0.0 && u < 1.0));
        CHECK((o > 0.0 && o < 1.0));
    }
    const auto m = moments_of(200000, [&] { return rng.normal(); });
    CHECK(std::abs(m.mean) < 0.01);
    CHECK_THAT(m.var, WithinRel(1.0, 0.01));
}

TEST_CASE("binomial edge cases", "[sampling]") {
    RandomStream rng(2);
    CHECK(sample_binomial(0, 0.3, rng) == 0);
    CHECK(sample_binomial(10, 0.0, rng) == 0);
    CHECK(sample_binomial(10, 1.0, rng) == 10);
    CHECK_THROWS_AS(sample_binomial(-1, 0.3, rng), InvalidArgument);
    CHECK_THROWS_AS(sample_binomial(5, 1.5, rng), InvalidArgument);
    for (int i = 0; i < 1000; ++i) {
        const auto x = sample_binomial(7, 0.9, rng);
        CHECK((x >= 0 && x <= 7));
    }
}

TEST_CASE("binomial frequencies match the pmf on both branches", "[sampling]") {
    RandomStream rng(3);
    // n p = 2 uses inversion; n p = 12 uses the rejection sampler.
    for (const auto& [n, p] : std::vector<std::pair<std::int64_t, double>>{{10, 0.2}, {30, 0.4}, {40, 0.7}}) {
        constexpr std::size_t draws = 200000;
        std::map<std::int64_t, double> freq;
        for (std::size_t i = 0; i < draws; ++i) {
            freq[sample_binomial(n, p, rng)] += 1.0;
        }
        double chi2 = 0.0;
        int cells = 0;
        for (std::int64_t k = 0; k <= n; ++k) {
            const double logp = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
                                k * std::log(p) + (n - k) * std::log1p(-p);
            const double expected = std::exp(logp) * draws;
            if (expected < 5.0) {
                continue;
            }
            const double d = freq[k] - expected;
            chi2 += d * d / expected;
            ++cells;
        }
        // Mean chi-square is the cell count; allow five standard deviations.
        CHECK(chi2 < cells + 5.0 * std::sqrt(2.0 * cells));
    }
}

TEST_CASE("binomial moments at large n", "[sampling]") {
    RandomStream rng(4);
    constexpr std::size_t draws = 100000;
    for (const auto& [n, p] : std::vector<std::pair<std::int64_t, double>>{{1000000, 0.01}, {1000000, 0.5}, {100000000, 0.3}}) {
        const auto m = moments_of(draws, [&] { return sample_binomial(n, p, rng); });
        const double var = n * p * (1 - p);
        check_mean_within(m, n * p, var, draws);
        CHECK_THAT(m.var, WithinRel(var, 0.03));
    }
}

TEST_CASE("gamma moments across shapes", "[sampling]") {
    RandomStream rng(5);
    constexpr std::size_t draws = 200000;
    for (double shape : {0.01, 0.3, 1.0, 4.5, 250.0}) {
        bool positive = true;
        const auto m = moments_of(draws, [&] {
            const double g = sample_gamma(shape, rng);
            positive &= g > 0.0;
            return g;
        });
        CHECK(positive);
        check_mean_within(m, shape, shape, draws);
        CHECK_THAT(m.var, WithinRel(shape, shape < 0.1 ? 0.15 : 0.03));
    }
    CHECK_THROWS_AS(sample_gamma(0.0, rng), InvalidArgument);
}

TEST_CASE("dirichlet draws stay on the simplex", "[sampling]") {
    RandomStream rng(6);
    const DirichletSpec spec(Composition({0.01, 0.04, 0.15, 0.3, 0.5}), 1.0);
    for (int i = 0; i < 5000; ++i) {
        const auto p = sample_dirichlet(spec, rng);
        double sum = 0.0;
        for (double x : p.parts()) {
            CHECK(x > 0.0);
            sum += x;
        }
        CHECK_THAT(sum, WithinAbs(1.0, 1e-12));
    }
}

TEST_CASE("multinomial conserves the total and matches a cell probability", "[sampling]") {
    RandomStream rng(7);
    const Composition p({0.2, 0.3, 0.5});
    constexpr std::size_t draws = 1000000;
    double hits = 0.0;
    for (std::size_t i = 0; i < draws; ++i) {
        const auto x = sample_multinomial(4, p, rng);
        CHECK(x.total() == 4);
        hits += (x[0] == 0 && x[1] == 0 && x[2] == 4) ? 1.0 : 0.0;
    }
    const double se = std::sqrt(0.0625 * 0.9375 / draws);
    CHECK(std::abs(hits / draws - 0.0625) < 3.0 * se);

    const auto big = sample_multinomial(1000000, Composition({0.01, 0.04, 0.15, 0.3, 0.5}), rng);
    CHECK(big.total() == 1000000);
    CHECK_THROWS_AS(sample_multinomial(0, p, rng), InvalidArgument);
}

TEST_CASE("lognormal totals are positive integers with the right spread", "[sampling]") {
    RandomStream rng(8);
    const TotalCountSpec spec = LognormalTotal{std::log(1000.0), 0.1};
    const auto m = moments_of(100000, [&] {
        const auto k = sample_total(spec, rng);
        CHECK(k >= 1);
        return k;
    });
    CHECK_THAT(std::sqrt(m.var) / m.mean, WithinRel(std::sqrt(std::expm1(0.1)), 0.05));
    CHECK(sample_total(TotalCountSpec{FixedTotal{42}}, rng) == 42);

    const TotalCountSpec tiny = LognormalTotal{std::log(1.0), 1.0};
    for (int i = 0; i < 1000; ++i) {
        CHECK(sample_total(tiny, rng) >= 1);
    }
}

TEST_CASE("pmf values", "[sampling]") {
    const CountVector x({1, 2, 3});
    const Composition p({0.2, 0.3, 0.5});
    CHECK_THAT(multinomial_log_pmf(x, p), WithinAbs(-2.0024805005437063, 1e-12));
    CHECK_THAT(dm_log_pmf(x, DirichletSpec(p, 10.0)), WithinAbs(-2.4779379804719106, 1e-12));
    CHECK_THAT(dm_log_pmf(x, DirichletSpec(p, 1e9)), WithinAbs(multinomial_log_pmf(x, p), 1e-6));
}

TEST_CASE("dirichlet-multinomial pmf sums to one", "[sampling][property]") {
    const auto model = ModelSpec::dirichlet_multinomial(DirichletSpec(Composition({0.2, 0.3, 0.5}), 3.0), 6);
    const auto exact = enumerate_exact(model, pivotal_sbp(3), 0.5);
    CHECK(exact.probabilities.size() == 28);
    CHECK_THAT(exact.total_probability, WithinAbs(1.0, 1e-12));
}

TEST_CASE("count draws follow the model's total", "[sampling]") {
    RandomStream rng(10);
    const Composition p({0.1, 0.2, 0.7});
    CHECK(sample_counts(ModelSpec::multinomial(p, 101), rng).total() == 101);
    CHECK(sample_counts(ModelSpec::dirichlet_multinomial(DirichletSpec(p, 5.0), 77), rng).total() == 77);
    const auto x = sample_counts(ModelSpec::lognormal_dirichlet_multinomial(DirichletSpec(p, 5.0), 3.0, 0.5), rng);
    CHECK(x.total() >= 1);
}

TEST_CASE("sampling is reproducible from a seed", "[sampling]") {
    const auto model = ModelSpec::lognormal_dirichlet_multinomial(
        DirichletSpec(Composition({0.01, 0.04, 0.15, 0.3, 0.5}), 101.0), std::log(1000.0), 1.0);
    RandomStream a(99);
    RandomStream b(99);
    for (int i = 0; i < 200; ++i) {
        CHECK(sample_counts(model, a).counts() == sample_counts(model, b).counts());
    }
}
