#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "polymart/envelope.hpp"
#include "polymart/numeric.hpp"

using namespace polymart;

namespace {

// |eps^(1/r1)|_p from E eps^q = 1/(1-q), q = p/r1.
double pareto_norm(double r1, double p) { return std::pow(1.0 / (1.0 - p / r1), 1.0 / p); }

}  // namespace

TEST_CASE("indicator envelope is one on its support and infinite beyond") {
    const auto ind = MomentEnvelope::indicator(4.0);
    CHECK(ind(3.0) == 1.0);
    CHECK(ind(4.0) == 1.0);
    CHECK(std::isinf(ind(4.5)));
}

TEST_CASE("power singularity at unit gap") {
    const auto ps = MomentEnvelope::power_singularity(1.0, 6.0, 1.0 / 6.0);
    CHECK(ps(5.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::isinf(ps(6.0)));
    CHECK(ps(6.0 - 1e-12) > 50.0);
}

TEST_CASE("evaluation rejects p below one and non-finite p") {
    const auto ind = MomentEnvelope::indicator(4.0);
    CHECK_THROWS_AS(ind(0.5), std::domain_error);
    CHECK_THROWS_AS(ind(std::nan("")), std::domain_error);
    CHECK_THROWS_AS(ind(kInf), std::domain_error);
}

TEST_CASE("every form is infinite outside its support") {
    const std::vector<MomentEnvelope> envs{
        MomentEnvelope::indicator(3.0),
        MomentEnvelope::power_singularity(2.0, 3.0, 0.5),
        MomentEnvelope::tabulated({1.0, 2.0, 3.0}, {1.0, 1.5, 2.0}),
        MomentEnvelope::scaled(MomentEnvelope::indicator(3.0), 2.0),
        MomentEnvelope::product({MomentEnvelope::indicator(3.0), MomentEnvelope::power_singularity(1.0, 5.0, 0.2)}),
        MomentEnvelope::root_singularity(1.0, 3.0, 1.0)};
    for (const auto& e : envs) {
        CHECK(std::isinf(e(3.5)));
        CHECK(std::isinf(e(10.0)));
        CHECK(std::isfinite(e(2.0)));
        CHECK(e(2.0) > 0.0);
    }
}

TEST_CASE("power growth and slowly varying factors") {
    const auto g = MomentEnvelope::power_growth(3.0, 0.5, SlowlyVarying::log_power(2.0));
    CHECK(g(4.0) == doctest::Approx(3.0 * 2.0 * std::pow(1.0 + std::log(4.0), 2.0)));
    CHECK(SlowlyVarying::constant(2.5)(1e9) == 2.5);
    CHECK(SlowlyVarying::log_power(1.0)(0.1) == doctest::Approx(1.0));
    CHECK_THROWS(SlowlyVarying::constant(-1.0));
}

TEST_CASE("tabulated envelope interpolates log-linearly") {
    const auto t = MomentEnvelope::tabulated({1.0, 3.0}, {1.0, 4.0});
    CHECK(t(2.0) == doctest::Approx(2.0));
    CHECK(std::isinf(t(3.01)));
    CHECK_THROWS(MomentEnvelope::tabulated({1.0, 1.0}, {1.0, 2.0}));
    CHECK_THROWS(MomentEnvelope::tabulated({1.0, 2.0}, {1.0, 0.0}));
}

TEST_CASE("support interval validation") {
    CHECK_THROWS(MomentEnvelope::indicator(0.5));
    CHECK_THROWS(MomentEnvelope::power_singularity(1.0, 2.0, 0.5, SlowlyVarying::constant(), 3.0));
    SupportInterval s{2.0, 5.0, true};
    CHECK(s.contains(5.0));
    CHECK_FALSE(s.contains(1.5));
}

TEST_CASE("natural moments of the Pareto power law") {
    CHECK(natural_moments_pareto_power(4.0, 2.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
    CHECK(natural_moments_pareto_power(4.0, 1.0) == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
    CHECK(natural_moments_pareto_power(2.0, 1.0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK_THROWS(natural_moments_pareto_power(4.0, 4.0));
}

TEST_CASE("gls norm of a natural function is one") {
    const std::vector<double> grid{1.0, 1.5, 2.0, 2.5, 3.0, 3.5};
    std::vector<double> vals;
    for (double p : grid) vals.push_back(pareto_norm(4.0, p));
    const auto env = MomentEnvelope::tabulated(grid, vals);
    CHECK(gls_norm([](double p) { return pareto_norm(4.0, p); }, env, grid) == 1.0);
    CHECK(gls_norm([](double) { return 0.0; }, env, grid) == 0.0);
}

TEST_CASE("gls norm against a dense-grid maximization") {
    const auto env = MomentEnvelope::power_singularity(1.0, 4.0, 0.25);
    auto ratio = [&](double p) { return pareto_norm(4.0, p) / env(p); };
    const std::vector<double> grid{2.0, 3.0, 3.5, 3.9};
    const double coarse = gls_norm([](double p) { return pareto_norm(4.0, p); }, env, grid);
    double oracle = 0.0;
    for (double p : grid) oracle = std::max(oracle, ratio(p));
    CHECK(coarse == doctest::Approx(oracle).epsilon(1e-15));
    double dense = 0.0;
    for (int k = 0; k <= 190; ++k) dense = std::max(dense, ratio(2.0 + 1.9 * k / 190.0));
    CHECK(std::isfinite(coarse));
    CHECK(coarse <= dense + 1e-15);
}

TEST_CASE("gls norm scales inversely with the envelope") {
    const auto env = MomentEnvelope::power_singularity(1.0, 4.0, 0.25);
    const auto grid = default_gls_grid(env);
    auto m = [](double p) { return pareto_norm(4.0, p); };
    for (double c : {0.5, 2.0, 7.0})
        CHECK(gls_norm(m, MomentEnvelope::scaled(env, c), grid) == doctest::Approx(gls_norm(m, env, grid) / c));
}

TEST_CASE("gls norm grid refinement never decreases the value") {
    const auto env = MomentEnvelope::power_singularity(1.0, 4.0, 0.25);
    auto m = [](double p) { return pareto_norm(4.0, p); };
    const auto g1 = linear_grid(2.0, 3.9, 5);
    const auto g2 = merge_grids(g1, linear_grid(2.0, 3.9, 37));
    CHECK(gls_norm(m, env, g2) >= gls_norm(m, env, g1));
}

TEST_CASE("gls norm input errors") {
    const auto env = MomentEnvelope::indicator(4.0);
    CHECK_THROWS(gls_norm([](double) { return 1.0; }, env, std::vector<double>{}));
    CHECK_THROWS(gls_norm([](double) { return 1.0; }, env, std::vector<double>{2.0, 5.0}));
}

TEST_CASE("default gls grid starts at two") {
    const auto g = default_gls_grid(MomentEnvelope::power_singularity(1.0, 4.0, 0.25));
    CHECK(g.front() == 2.0);
    CHECK(g.back() < 4.0);
}

TEST_CASE("moments from a Pareto tail match the closed form") {
    const auto tail = TailBound::regular_variation(4.0, 0.0, SlowlyVarying::constant(), 1.0);
    CHECK(moments_from_tail(tail, 2.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
    for (double p = 1.0; p <= 3.5; p += 0.5)
        CHECK(moments_from_tail(tail, p) == doctest::Approx(pareto_norm(4.0, p)).epsilon(1e-6));
    CHECK(moments_from_tail_report(tail, 4.0).divergent);
    CHECK(std::isinf(moments_from_tail(tail, 4.5)));
}

TEST_CASE("moments from degenerate and exponential tails") {
    // Tail 1 below x = 1 and 0 above: |X| = 1 almost surely.
    const auto unit = TailBound::tabulated({1.0, 2.0}, {0.0, 0.0});
    CHECK(moments_from_tail(unit, 2.0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(moments_from_tail(unit, 5.0) == doctest::Approx(1.0).epsilon(1e-9));
    const auto expo = TailBound::weibull(1.0, 1.0);
    CHECK(moments_from_tail(expo, 1.0) == doctest::Approx(1.0).epsilon(1e-9));
    // E X^2 = 2 for the unit exponential.
    CHECK(moments_from_tail(expo, 2.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
}

TEST_CASE("tail bounds are clamped and non-increasing") {
    const auto rv = TailBound::regular_variation(2.0, 1.0, SlowlyVarying::constant(), 2.718281828459045, 50.0);
    double prev = 1.0;
    for (double x = 0.5; x < 1e4; x *= 1.7) {
        const double t = rv(x);
        CHECK(t >= 0.0);
        CHECK(t <= 1.0);
        CHECK(t <= prev + 1e-15);
        prev = t;
    }
}

TEST_CASE("empirical moments on small samples") {
    const std::vector<double> s{1.0, -1.0, 1.0, -1.0};
    CHECK(empirical_moments(s, 2.0).value == doctest::Approx(1.0));
    const std::vector<double> one{2.0};
    CHECK(empirical_moments(one, 3.0).value == doctest::Approx(2.0));
    CHECK_THROWS(empirical_moments(std::vector<double>{}, 2.0));
}

TEST_CASE("empirical moments are non-decreasing in p") {
    std::mt19937_64 gen(42);
    std::student_t_distribution<double> t(3.0);
    std::vector<double> s(2000);
    for (auto& v : s) v = t(gen);
    double prev = 0.0;
    for (double p = 1.0; p <= 6.0; p += 0.25) {
        const double v = empirical_moments(s, p).value;
        CHECK(v >= prev * (1.0 - 1e-14));
        prev = v;
    }
}

TEST_CASE("empirical Pareto moment at p = 2 matches the exact norm") {
    std::mt19937_64 gen(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> s(1000000);
    for (auto& v : s) v = std::pow(1.0 / (1.0 - u(gen)), 0.25);
    const auto e = empirical_moments(s, 2.0, 4.0);
    CHECK(std::abs(e.value - std::sqrt(2.0)) <= 3.0 * e.stderr);
    CHECK(e.batches == 1000);
    CHECK_FALSE(e.high_variance);
    CHECK(empirical_moments(s, 3.0, 4.0).high_variance);
}
