#include <catch_amalgamated.hpp>

#include <cmath>

#include "ilrapprox/ilrapprox.hpp"

using namespace ilrapprox;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const Composition reference({0.01, 0.04, 0.15, 0.3, 0.5});

Scenario make_scenario(ModelSpec model, std::int64_t draws, std::uint64_t seed, std::string label) {
    const auto parts = model.parts();
    return Scenario{std::move(model), pivotal_sbp(parts), draws, 0.5, ZeroPolicy::renormalize, seed, std::move(label)};
}

bool same_summary(const EmpiricalSummary& a, const EmpiricalSummary& b) {
    return a.mean_ilr == b.mean_ilr && a.cov_ilr == b.cov_ilr && a.eigenvalues == b.eigenvalues &&
           a.mean_props == b.mean_props && a.cov_props == b.cov_props && a.zero_fraction == b.zero_fraction;
}

}

TEST_CASE("sample moments use the n - 1 divisor", "[harness]") {
    const std::vector<double> rows{1, 2, 3, 4, 5, 9};
    const auto [mean, cov] = sample_moments(rows, 2);
    CHECK(mean == std::vector<double>{3.0, 5.0});
    CHECK(cov(0, 0) == 4.0);
    CHECK(cov(1, 1) == 13.0);
    CHECK(cov(0, 1) == 7.0);
    CHECK_THROWS_AS(sample_moments(std::vector<double>{1, 2, 3, 4, 5}, 2), DimensionError);
    CHECK_THROWS_AS(sample_moments(std::vector<double>{1, 2}, 2), InvalidArgument);
}

TEST_CASE("sample moments are stable under a large offset", "[harness]") {
    std::vector<double> rows;
    for (int i = 0; i < 1000; ++i) {
        rows.push_back(1e9 + (i % 2 == 0 ? 1.0 : -1.0));
    }
    const auto [mean, cov] = sample_moments(rows, 1);
    CHECK(mean[0] == 1e9);
    CHECK_THAT(cov(0, 0), WithinRel(1000.0 / 999.0, 1e-12));
}

TEST_CASE("normal quantiles", "[harness]") {
    CHECK_THAT(normal_quantile(0.975), WithinAbs(1.959963984540054, 1e-14));
    CHECK_THAT(normal_quantile(0.5), WithinAbs(0.0, 1e-15));
    CHECK_THAT(normal_quantile(1e-10), WithinAbs(-6.361340902404056, 1e-12));
    CHECK_THROWS_AS(normal_quantile(0.0), InvalidArgument);
    CHECK_THROWS_AS(normal_quantile(1.0), InvalidArgument);
}

TEST_CASE("qq series of normal draws is nearly a straight line", "[harness]") {
    RandomStream rng(31);
    std::vector<double> x(10000);
    for (auto& v : x) {
        v = 2.0 + 3.0 * rng.normal();
    }
    std::sort(x.begin(), x.end());
    SymmetricMatrix cov(1);
    cov.set(0, 0, 9.0);
    const auto qq = qq_series(x, NormalApprox({2.0}, cov), 0);
    CHECK(qq.theoretical_quantiles.size() == 10000);
    CHECK_THAT(qq.theoretical_quantiles[0], WithinAbs(2.0 + 3.0 * normal_quantile(0.5 / 10000), 1e-12));
    CHECK(qq_correlation(qq) > 0.9999);

    std::vector<double> flat(10, 1.0);
    CHECK(qq_correlation(qq_series(flat, NormalApprox({2.0}, cov), 0)) == 0.0);
    std::vector<double> unsorted{2.0, 1.0};
    CHECK_THROWS_AS(qq_series(unsorted, NormalApprox({2.0}, cov), 0), InvalidArgument);
    CHECK_THROWS_AS(qq_series(x, NormalApprox({2.0}, cov), 1), InvalidArgument);
}

TEST_CASE("comparison log-ratios and sign mismatches", "[harness]") {
    EmpiricalSummary e;
    e.mean_ilr = {-2.0, 1.0, 0.0, 0.0};
    e.eigenvalues = {4.0, 1.0, 0.5, 0.0};
    SymmetricMatrix cov = SymmetricMatrix::diagonal(std::vector<double>{2.0, 1.0, 0.5, 0.25});
    const auto r = compare(e, NormalApprox({-1.0, -1.0, 0.0, 3.0}, cov));
    CHECK_THAT(r.log_ratio_means[0], WithinAbs(std::log(2.0), 1e-15));
    CHECK_FALSE(r.sign_mismatch[0]);
    CHECK(r.log_ratio_means[1] == 0.0);
    CHECK(r.sign_mismatch[1]);
    CHECK(r.log_ratio_means[2] == 0.0);
    CHECK_FALSE(r.sign_mismatch[2]);
    CHECK(std::isnan(r.log_ratio_means[3]));
    CHECK(r.sign_mismatch[3]);
    CHECK_THAT(r.log_ratio_eigs[0], WithinAbs(std::log(2.0), 1e-15));
    CHECK(std::isnan(r.log_ratio_eigs[3]));
    CHECK_THROWS_AS(compare(e, NormalApprox({1.0}, SymmetricMatrix(1))), DimensionError);
}

TEST_CASE("excess variability table", "[harness]") {
    const auto cells = excess_variability_table(standard_excess_rows());
    REQUIRE(cells.size() == 90);
    CHECK(cells.front().dgd == Dgd::multinomial);
    CHECK(cells.front().excess == 1.0);
    auto find = [&](Dgd d, double as, double s2, double k) {
        for (const auto& c : cells) {
            if (c.dgd == d && (c.alpha_s == as || std::isinf(as)) && c.sigma_sq == s2 && c.k == k) {
                return std::round(c.excess * 100.0) / 100.0;
            }
        }
        return -1.0;
    };
    CHECK(find(Dgd::dirichlet_multinomial, 101, 0.0, 101) == 1.98);
    CHECK(find(Dgd::dirichlet_multinomial, 10000, 0.0, 100000) == 11.0);
    CHECK(find(Dgd::lognormal_multinomial, infinite_concentration, 0.1, 1000) == 1.05);
    CHECK(find(Dgd::lognormal_dirichlet_multinomial, 101, 0.1, 101) == 2.03);
    CHECK(find(Dgd::lognormal_dirichlet_multinomial, 101, 1.0, 1000000) == 9805.55);
}

TEST_CASE("exact enumeration of a small multinomial", "[harness]") {
    const auto model = ModelSpec::multinomial(Composition({0.2, 0.3, 0.5}), 2);
    const auto exact = enumerate_exact(model, pivotal_sbp(3), 0.5);
    CHECK(exact.outcomes.size() == 6);
    CHECK_THAT(exact.total_probability, WithinAbs(1.0, 1e-15));
    CHECK_THAT(exact.mean[0], WithinAbs(-0.22638092, 1e-8));
    CHECK_THAT(exact.mean[1], WithinAbs(-0.19605163, 1e-8));
    CHECK_THAT(exact.cov(0, 0), WithinAbs(0.23061745, 1e-8));
    CHECK_THAT(exact.cov(0, 1), WithinAbs(0.03328676, 1e-8));
    CHECK_THAT(exact.cov(1, 1), WithinAbs(0.36514429, 1e-8));

    CHECK(composition_count(6, 3) == 28.0);
    CHECK_THROWS_AS(enumerate_exact(ModelSpec::lognormal_multinomial(Composition({0.5, 0.5}), 1.0, 0.1),
                                    pivotal_sbp(2), 0.5),
                    InvalidArgument);
    CHECK_THROWS_AS(enumerate_exact(ModelSpec::multinomial(reference, 1000), pivotal_sbp(5), 0.5), InvalidArgument);
}

TEST_CASE("simulated moments agree with exact enumeration", "[harness][property]") {
    const Composition p({0.2, 0.3, 0.5});
    for (const auto& model : {ModelSpec::multinomial(p, 4),
                              ModelSpec::dirichlet_multinomial(DirichletSpec(p, 10.0), 4)}) {
        constexpr std::int64_t draws = 100000;
        const auto s = run_scenario(make_scenario(model, draws, 17, "exact"));
        const auto exact = enumerate_exact(model, pivotal_sbp(3), 0.5);
        for (std::size_t c = 0; c < 2; ++c) {
            const double se = std::sqrt(exact.cov(c, c) / draws);
            CHECK(std::abs(s.mean_ilr[c] - exact.mean[c]) < 4.0 * se);
        }
    }
}

TEST_CASE("scenarios are deterministic in their seed", "[harness]") {
    const auto model = ModelSpec::dirichlet_multinomial(DirichletSpec(reference, 101), 101);
    const auto a = run_scenario(make_scenario(model, 2000, 5, "x"));
    const auto b = run_scenario(make_scenario(model, 2000, 5, "x"));
    const auto c = run_scenario(make_scenario(model, 2000, 6, "x"));
    CHECK(same_summary(a, b));
    CHECK_FALSE(same_summary(a, c));
    CHECK(a.zero_fraction > 0.0);
    CHECK(a.sorted_coords.size() == 4);
    CHECK(std::is_sorted(a.sorted_coords[0].begin(), a.sorted_coords[0].end()));
    CHECK_THROWS_AS(run_scenario(make_scenario(model, 1, 5, "x")), InvalidArgument);
}

TEST_CASE("zero policy changes proportions but not ilr moments", "[harness]") {
    const auto model = ModelSpec::multinomial(reference, 101);
    auto s = make_scenario(model, 3000, 8, "z");
    const auto a = run_scenario(s);
    s.zero_policy = ZeroPolicy::divide_by_original_total;
    const auto b = run_scenario(s);
    CHECK(a.mean_ilr == b.mean_ilr);
    CHECK(a.mean_props != b.mean_props);
}

TEST_CASE("grid results do not depend on parallelism", "[harness]") {
    std::vector<Scenario> scenarios;
    std::uint64_t seed = 100;
    for (std::int64_t k : {101, 1000, 10000}) {
        scenarios.push_back(make_scenario(ModelSpec::multinomial(reference, k), 1000, seed++, "a_k" + std::to_string(k)));
        scenarios.push_back(make_scenario(ModelSpec::dirichlet_multinomial(DirichletSpec(reference, 101), k), 1000,
                                          seed++, "b_k" + std::to_string(k)));
    }
    const auto serial = run_grid(scenarios, {1, CorrectionMode::consistent});
    const auto threaded = run_grid(scenarios, {4, CorrectionMode::consistent});
    REQUIRE(serial.size() == threaded.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].scenario.label == threaded[i].scenario.label);
        CHECK(same_summary(*serial[i].summary, *threaded[i].summary));
        CHECK(serial[i].comparisons.size() == 3);
    }
    CHECK(std::is_sorted(serial.begin(), serial.end(),
                         [](const auto& a, const auto& b) { return a.scenario.label < b.scenario.label; }));

    scenarios.push_back(scenarios.front());
    CHECK_THROWS_AS(run_grid(scenarios), InvalidArgument);
}

TEST_CASE("a failing scenario does not stop the grid", "[harness]") {
    std::vector<Scenario> scenarios{
        make_scenario(ModelSpec::multinomial(reference, 101), 500, 1, "good"),
        make_scenario(ModelSpec::multinomial(reference, 101), 1, 2, "bad"),
    };
    const auto results = run_grid(scenarios, {2, CorrectionMode::consistent});
    REQUIRE(results.size() == 2);
    CHECK_FALSE(results[0].ok());
    CHECK(results[0].scenario.label == "bad");
    CHECK_FALSE(results[0].summary.has_value());
    CHECK(results[1].ok());
}

TEST_CASE("dirichlet sampler reproduces its moments", "[harness][property]") {
    RandomStream rng(41);
    const DirichletSpec spec(reference, 101.0);
    constexpr std::size_t draws = 100000;
    std::vector<double> rows;
    rows.reserve(draws * 5);
    for (std::size_t i = 0; i < draws; ++i) {
        const auto p = sample_dirichlet(spec, rng);
        rows.insert(rows.end(), p.parts().begin(), p.parts().end());
    }
    const auto [mean, cov] = sample_moments(rows, 5);
    for (std::size_t j = 0; j < 5; ++j) {
        const double var = reference[j] * (1.0 - reference[j]) / 102.0;
        CHECK(std::abs(mean[j] - reference[j]) < 4.0 * std::sqrt(var / draws));
        CHECK_THAT(cov(j, j), WithinRel(var, 0.05));
    }
}
