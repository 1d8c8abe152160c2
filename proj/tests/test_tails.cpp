#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "polymart/tails.hpp"

using namespace polymart;

namespace {

MomentEnvelope random_tabulated(std::mt19937_64& gen) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double upper = 2.0 + 10.0 * u(gen);
    const int nodes = 4 + static_cast<int>(12 * u(gen));
    std::vector<double> ps = linear_grid(1.0, upper, nodes), vals;
    // Increasing log-convex values so p log nu(p) is convex.
    double lv = std::log(0.5 + u(gen)), slope = 0.05 * u(gen);
    for (std::size_t i = 0; i < ps.size(); ++i) {
        vals.push_back(std::exp(lv));
        slope += 0.3 * u(gen);
        lv += slope * (i + 1 < ps.size() ? ps[i + 1] - ps[i] : 0.0);
    }
    return MomentEnvelope::tabulated(ps, vals);
}

}  // namespace

TEST_CASE("indicator tail at x = 10") {
    const auto spec = ConjugateSpec::with_default_grid(MomentEnvelope::indicator(4.0));
    const double t = tail_from_envelope(spec, 10.0);
    CHECK(std::abs(std::log(t) - std::log(1e-4)) <= 1e-10 * std::abs(std::log(1e-4)));
    CHECK(tail_optimal_p(spec, 10.0) == doctest::Approx(4.0));
}

TEST_CASE("tails below e are vacuous") {
    const auto spec = ConjugateSpec::with_default_grid(MomentEnvelope::power_growth(1.0, 0.5));
    CHECK(tail_inf_form(spec, 2.0) == 1.0);
    CHECK(tail_conjugate_form(spec, std::exp(1.0)) == 1.0);
    CHECK(tail_inf_form(spec, 0.1) == 1.0);
}

TEST_CASE("square-root growth gives a Gaussian-type tail") {
    // inf_p (sqrt(p)/x)^p is attained at p = x^2/e with log value -x^2/(2e).
    const auto spec = ConjugateSpec::with_default_grid(MomentEnvelope::power_growth(1.0, 0.5));
    const double limit = -1.0 / (2.0 * std::exp(1.0));
    for (double x : {10.0, 20.0, 30.0, 40.0}) {
        const double ratio = std::log(tail_inf_form(spec, x)) / (x * x);
        CHECK(ratio < 0.0);
        CHECK(ratio == doctest::Approx(limit).epsilon(1e-6));
        CHECK(tail_optimal_p(spec, x) == doctest::Approx(x * x / std::exp(1.0)).epsilon(1e-4));
    }
}

TEST_CASE("inf-form and conjugate form agree on random tabulated envelopes") {
    std::mt19937_64 gen(31);
    for (int k = 0; k < 50; ++k) {
        const auto spec = ConjugateSpec::with_default_grid(random_tabulated(gen));
        for (double x : {3.0, 10.0, 100.0, 1e4}) {
            const double a = tail_inf_form(spec, x);
            const double b = tail_conjugate_form(spec, x);
            CHECK(std::abs(std::log(a) - std::log(b)) <= 1e-10 * std::max(1.0, std::abs(std::log(a))));
        }
    }
}

TEST_CASE("refining the p grid never increases the tail") {
    const auto env = MomentEnvelope::power_singularity(1.0, 5.0, 0.7);
    ConjugateSpec coarse{env, 1.0, linear_grid(1.0, 4.9, 7), false};
    ConjugateSpec fine{env, 1.0, merge_grids(coarse.p_grid, linear_grid(1.0, 4.9, 101)), false};
    for (double x = 3.0; x < 1e5; x *= 2.3) CHECK(tail_inf_form(fine, x) <= tail_inf_form(coarse, x));
}

TEST_CASE("tails are non-increasing in x") {
    const auto spec = ConjugateSpec::with_default_grid(MomentEnvelope::power_singularity(2.0, 3.0, 0.5));
    double prev = 1.0;
    for (double x = 1.0; x < 1e6; x *= 1.5) {
        const double t = tail_inf_form(spec, x);
        CHECK(t <= prev);
        CHECK(t >= 0.0);
        prev = t;
    }
}

TEST_CASE("norm factor rescales x") {
    const auto env = MomentEnvelope::power_singularity(1.0, 6.0, 0.4);
    const ConjugateSpec base{env, 1.0, linear_grid(1.0, 5.99, 400), false};
    const ConjugateSpec scaled{env, 3.0, base.p_grid, false};
    for (double x : {30.0, 100.0, 1000.0})
        CHECK(tail_inf_form(scaled, x) == doctest::Approx(tail_inf_form(base, x / 3.0)).epsilon(1e-12));
}

TEST_CASE("moments recomputed from a conjugate tail are no smaller than the envelope") {
    const auto env = MomentEnvelope::power_singularity(1.0, 4.0, 0.25);
    const auto tail = TailBound::conjugate(env);
    for (double p : {1.0, 1.5, 2.0, 2.5, 3.0}) CHECK(moments_from_tail(tail, p) >= env(p));
}

TEST_CASE("regular variation tails") {
    const auto L = SlowlyVarying::constant();
    CHECK(regular_variation_tail(4.0, -1.0, L, 10.0) == doctest::Approx(1e-4).epsilon(1e-14));
    const double e2 = std::exp(2.0);
    CHECK(regular_variation_tail(4.0, 0.0, L, e2) == doctest::Approx(2.0 * std::exp(-8.0)).epsilon(1e-14));
    for (double r : {1.5, 3.0, 6.0})
        for (double g : {-1.0, 0.0, 2.0}) CHECK(regular_variation_tail(r, g, L, 100.0) < regular_variation_tail(r, g, L, 10.0));
    CHECK_THROWS(regular_variation_tail(4.0, 0.0, L, 2.0));
    CHECK(regular_variation_tail(0.1, 3.0, L, 3.0) == 1.0);
}

TEST_CASE("regular variation closed form and conjugate share the log-log slope") {
    // Pareto(4) with its natural envelope: both decay like x^-4 up to logarithms.
    std::vector<double> grid = linear_grid(1.0, 3.999, 300), vals;
    for (double p : grid) vals.push_back(natural_moments_pareto_power(4.0, p));
    const auto spec = ConjugateSpec::with_default_grid(MomentEnvelope::tabulated(grid, vals));
    auto slope = [](auto f) { return (std::log(f(1000.0)) - std::log(f(10.0))) / std::log(100.0); };
    const double s_conj = slope([&](double x) { return tail_inf_form(spec, x); });
    const double s_rv = slope([](double x) { return regular_variation_tail(4.0, -1.0, SlowlyVarying::constant(), x); });
    CHECK(s_rv == doctest::Approx(-4.0));
    CHECK(std::abs(s_conj - s_rv) < 0.5);
}

TEST_CASE("dominance check trivial cases") {
    const std::vector<double> xs{5.0, 10.0, 20.0};
    auto one = [](double) { return 1.0; };
    auto zero = [](double) { return std::make_pair(0.0, 0.0); };
    auto half = [](double) { return std::make_pair(0.5, 0.01); };
    CHECK(dominance_check(one, half, xs).pass);
    CHECK(dominance_check([](double) { return 0.0; }, zero, xs).pass);
    const auto bad = dominance_check([](double x) { return 0.1 / x; }, half, xs);
    CHECK_FALSE(bad.pass);
    CHECK(bad.violating_x.size() == 3);
}

TEST_CASE("dominance uses two standard errors of slack") {
    const std::vector<double> xs{5.0};
    auto emp = [](double) { return std::make_pair(0.12, 0.01); };
    CHECK(dominance_check([](double) { return 0.1; }, emp, xs).pass);
    CHECK_FALSE(dominance_check([](double) { return 0.099; }, emp, xs).pass);
}

TEST_CASE("tail rescale fit makes the bound tight at x0") {
    auto bound = [](double x) { return std::min(1.0, std::pow(x, -3.0)); };
    const double c = fit_tail_rescale(bound, 5.0, 1e-3);
    CHECK(bound(5.0 / c) == doctest::Approx(1e-3).epsilon(1e-8));
    CHECK(c == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("single Pareto variable is dominated by its conjugate bound") {
    std::vector<double> grid = linear_grid(1.0, 3.99, 200), vals;
    for (double p : grid) vals.push_back(natural_moments_pareto_power(4.0, p));
    const auto spec = ConjugateSpec::with_default_grid(MomentEnvelope::tabulated(grid, vals));
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t n = 1000000;
    std::vector<double> xs{5.0, 10.0, 20.0, 50.0}, counts(4, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double v = std::pow(1.0 / (1.0 - u(gen)), 0.25);
        for (std::size_t j = 0; j < 4; ++j) counts[j] += v >= xs[j];
    }
    std::size_t j = 0;
    const auto rep = dominance_check(
        [&](double x) { return tail_inf_form(spec, x); },
        [&](double) {
            const double p = counts[j++] / n;
            return std::make_pair(p, std::sqrt(p * (1 - p) / n));
        },
        xs);
    CHECK(rep.pass);
}

TEST_CASE("conjugate spec validation") {
    ConjugateSpec bad{MomentEnvelope::indicator(4.0), 1.0, {}, true};
    CHECK_THROWS(bad.validate());
    ConjugateSpec outside{MomentEnvelope::indicator(4.0), 1.0, {2.0, 5.0}, true};
    CHECK_THROWS(outside.validate());
    ConjugateSpec neg{MomentEnvelope::indicator(4.0), -1.0, {2.0}, true};
    CHECK_THROWS(neg.validate());
}
