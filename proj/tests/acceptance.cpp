// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "polymart/mcverify.hpp"

using namespace polymart;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;
    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [" << what << "]";
        }
    }
};

using Criterion = std::function<void(Outcome&)>;

double log_rel(double a, double b) { return std::abs(std::log(a) - std::log(b)) / std::max(1.0, std::abs(std::log(b))); }

void otimes_closed_form(Outcome& o) {
    const auto g = MomentEnvelope::power_growth(1.0, 0.5);
    double worst = 0.0, worst_a = 0.0;
    for (int p = 1; p <= 10; ++p) {
        const auto r = otimes_detail(g, g, p);
        worst = std::max(worst, std::abs(r.value - 2.0 * p) / (2.0 * p));
        worst_a = std::max(worst_a, std::abs(r.a - 0.5));
    }
    o.require(worst <= 1e-6, "value");
    o.require(worst_a <= 1e-4, "minimizer");
    o.detail << " max rel err " << worst << ", max |a - 1/2| " << worst_a;
}

void lebesgue_reduction(Outcome& o) {
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> u(2.2, 12.0);
    int bad = 0;
    for (int k = 0; k < 20; ++k) {
        const double r1 = u(gen), r2 = u(gen);
        const double r = 1.0 / (1.0 / r1 + 1.0 / r2);
        const auto a = MomentEnvelope::indicator(r1), b = MomentEnvelope::indicator(r2);
        for (double f : {0.0, 0.3, 0.7, 0.97}) {
            const double p = 1.0 + f * (r - 1.0);
            if (otimes(a, b, p) != 1.0) ++bad;
        }
        for (double f : {1.01, 1.5, 3.0})
            if (!std::isinf(otimes(a, b, f * r))) ++bad;
    }
    o.require(bad == 0, "mismatches");
    o.detail << " 20 pairs, " << bad << " mismatches";
}

void pareto_exactness(Outcome& o) {
    const auto dist = InputDistribution::pareto_power(4.0);
    const auto tail = TailBound::regular_variation(4.0, 0.0, SlowlyVarying::constant(), 1.0);
    for (double p : {1.0, 2.0, 3.0, 3.5}) {
        const double exact = std::pow(4.0 / (4.0 - p), 1.0 / p);
        const auto e = stratified_abs_moment(dist, p, 1000000, 3);
        const double z = (e.value - exact) / e.stderr;
        const double q = moments_from_tail(tail, p);
        o.require(std::abs(z) <= 3.0, "MC p=" + std::to_string(p));
        o.require(std::abs(q - exact) <= 1e-6 * exact, "quadrature p=" + std::to_string(p));
        o.detail << " p=" << p << ": z=" << z << " quad err " << std::abs(q - exact) / exact << ";";
    }
}

void conjugate_tail(Outcome& o) {
    const auto spec = ConjugateSpec::with_default_grid(MomentEnvelope::indicator(4.0));
    const double t = tail_from_envelope(spec, 10.0);
    o.require(log_rel(t, 1e-4) <= 1e-10, "indicator");
    std::mt19937_64 gen(31);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
        const double upper = 2.0 + 10.0 * u(gen);
        const int nodes = 4 + static_cast<int>(12 * u(gen));
        std::vector<double> ps = linear_grid(1.0, upper, nodes), vals;
        double lv = std::log(0.5 + u(gen)), slope = 0.05 * u(gen);
        for (std::size_t i = 0; i < ps.size(); ++i) {
            vals.push_back(std::exp(lv));
            slope += 0.3 * u(gen);
            lv += slope * (i + 1 < ps.size() ? ps[i + 1] - ps[i] : 0.0);
        }
        const auto s = ConjugateSpec::with_default_grid(MomentEnvelope::tabulated(ps, vals));
        for (double x : {3.0, 10.0, 100.0, 1e4})
            worst = std::max(worst, log_rel(tail_inf_form(s, x), tail_conjugate_form(s, x)));
    }
    o.require(worst <= 1e-10, "forms");
    o.detail << " T(10)=" << t << ", max log discrepancy " << worst;
}

void exhaustive_oracle(Outcome& o) {
    PolynomialModel m;
    m.d = 2;
    m.n = 3;
    m.coefficients = CoefficientTensor::uniform(2, 3).normalized();
    m.regime.tag = Regime::CommonIndependent;
    m.factors.assign(2, InputDistribution::rademacher());
    const std::vector<double> ps{1.0, 2.0, 3.0, 4.0};
    const auto exact = brute_force_moments(m, ps);
    const auto xs = sample_Q(m, 5, 1000000, resolve_threads(0));
    for (std::size_t k = 0; k < ps.size(); ++k) {
        const auto e = empirical_moments(xs, ps[k]);
        const double z = (e.power_mean - exact[k]) / e.power_stderr;
        o.require(std::abs(z) <= 4.0, "p=" + std::to_string(ps[k]));
        o.detail << " p=" << ps[k] << ": z=" << z << ";";
    }
    const double v = variance_of_Q(m.coefficients, std::vector<std::vector<double>>(3, std::vector<double>(2, 1.0)));
    o.require(std::abs(v - 1.0) <= 1e-15, "variance");
    o.detail << " Var Q = " << v;
}

struct BatteryResult {
    std::string label;
    bool moments_ok = true;
    bool tails_ok = true;
    double worst = 0.0;
    double rescale = 1.0;
};

std::vector<BatteryResult>& battery() {
    static std::vector<BatteryResult> results;
    if (!results.empty()) return results;
    for (Regime reg : {Regime::CommonIndependent, Regime::InsideIndependent, Regime::VectorIndependent,
                       Regime::Martingale})
        for (int d : {1, 2, 3})
            for (int n : {5, 20})
                for (double r : {6.0, 8.0}) {
                    PolynomialModel m;
                    m.d = d;
                    m.n = n;
                    m.coefficients = CoefficientTensor::uniform(d, n).normalized();
                    m.regime.tag = reg;
                    m.factors.assign(static_cast<std::size_t>(d), standardized_pareto(r));
                    if (reg == Regime::InsideIndependent) m.sharing = Sharing::Diagonal;
                    if (reg == Regime::Martingale) {
                        m.sharing = Sharing::Diagonal;
                        m.modulator = true;
                    }
                    ExperimentPlan plan;
                    plan.model = m;
                    plan.replications = 1000000;
                    plan.seed = 7;
                    const double rc = r / d;
                    for (int k = 1; k <= 5; ++k) plan.p_grid.push_back(1.0 + (0.9 * rc - 1.0) * k / 6.0);
                    ChainGrid grid;
                    grid.extra_points = plan.p_grid;
                    plan.bound = zeta_chain(m.regime, natural_inputs(m), GrowthConstant::martingale(),
                                            GrowthConstant::independent(), grid)
                                     .bound();
                    plan.x_grid = {5.0, 10.0, 20.0, 50.0};
                    const auto rep = run_experiment(plan);
                    BatteryResult res;
                    std::ostringstream label;
                    label << rep.regime << " d=" << d << " n=" << n << " r=" << r;
                    res.label = label.str();
                    res.moments_ok = rep.moments_pass();
                    res.tails_ok = rep.tails_pass() && rep.x_rescale_fitted;
                    res.rescale = rep.x_rescale;
                    for (const auto& row : rep.moments)
                        res.worst = std::max(res.worst, (row.empirical - 2.0 * row.stderr) / row.bound);
                    results.push_back(res);
                }
    return results;
}

void dominance_battery(Outcome& o) {
    int violations = 0;
    double worst = 0.0;
    for (const auto& r : battery()) {
        if (!r.moments_ok) {
            ++violations;
            o.detail << " violation: " << r.label << ";";
        }
        worst = std::max(worst, r.worst);
    }
    o.require(violations == 0, "violations");
    o.detail << " " << battery().size() << " models, " << violations << " violations, worst (emp - 2se)/zeta " << worst;
}

void tail_battery(Outcome& o) {
    int failures = 0;
    double lo = 1e300, hi = 0.0;
    for (const auto& r : battery()) {
        lo = std::min(lo, r.rescale);
        hi = std::max(hi, r.rescale);
        if (!r.tails_ok) {
            ++failures;
            o.detail << " fail: " << r.label << " (c=" << r.rescale << ");";
        }
    }
    o.require(failures == 0, "tail failures");
    o.detail << " " << failures << "/" << battery().size() << " models fail; fitted x-rescale in [" << lo << ", " << hi
             << "]";
}

void dominant_term(Outcome& o) {
    PolynomialModel m;
    m.d = 1;
    m.n = 10;
    m.coefficients = CoefficientTensor::uniform(1, 10).normalized();
    m.regime.tag = Regime::CommonIndependent;
    m.factors = {InputDistribution::pareto_power(6.0)};
    ExperimentPlan plan;
    plan.model = m;
    plan.statistic = Statistic::R;
    plan.multiplicities = {2};
    plan.replications = 1000000;
    plan.seed = 1;
    plan.p_grid = {1.5, 2.0, 2.5};
    const auto dom = polynomial_dominant_envelope({{6.0, 0.0, SlowlyVarying::constant()}}, 2);
    plan.bound = dom.envelope;
    plan.fit_moment_constant = true;
    const auto rep = run_experiment(plan);
    o.require(rep.moments_pass(), "rho dominance");
    o.detail << " edge " << dom.edge << ", C=" << rep.moment_constant << ", ratios";
    for (const auto& row : rep.moments) o.detail << " " << row.ratio;

    std::vector<std::size_t> schedule;
    for (std::size_t N = 4000; N <= 1024000; N *= 2) schedule.push_back(N);
    plan.threads = 1;
    const Sampler s = [plan](std::uint64_t seed, std::size_t count) { return sample_statistic(plan, seed, count); };
    const auto stable = convergence_diagnostics(s, 2.5, schedule, 1);
    const auto drift = convergence_diagnostics(s, 3.5, schedule, 1);
    o.require(!stable.drift, "p=2.5 drift");
    o.require(drift.drift, "p=3.5 stable");
    o.detail << "; slope p=2.5 " << stable.slope << ", p=3.5 " << drift.slope << " (threshold " << drift.threshold
             << ")";
}

void reverse_symmetry(Outcome& o) {
    const auto e = standardized_pareto(8.0).natural_envelope();
    double worst = 0.0;
    for (Regime tag : {Regime::Martingale, Regime::CommonIndependent, Regime::InsideIndependent,
                       Regime::VectorIndependent}) {
        const auto f = zeta_chain({tag, Direction::Forward}, {e, e});
        const auto r = zeta_chain({tag, Direction::Reverse}, {e, e});
        for (double p = 1.0; p < 3.9; p += 0.25)
            worst = std::max(worst, std::abs(f.bound()(p) - r.bound()(p)) / f.bound()(p));
    }
    o.require(worst <= 1e-15, "chains");
    PolynomialModel m;
    m.d = 2;
    m.n = 6;
    m.coefficients = CoefficientTensor::random_unit(2, 6, 4, 0);
    m.regime.tag = Regime::CommonIndependent;
    m.factors = {standardized_pareto(8.0), InputDistribution::rademacher()};
    const unsigned threads = resolve_threads(0);
    const auto q = sample_Q(m, 21, 1000000, threads);
    const auto v = sample_reverse_V(m, 22, 1000000, 1, m.n, threads);
    o.detail << " chain max rel diff " << worst << ";";
    for (double p : {1.0, 2.0, 3.0}) {
        const auto a = empirical_moments(q, p), b = empirical_moments(v, p);
        const double z = (a.power_mean - b.power_mean) / std::hypot(a.power_stderr, b.power_stderr);
        o.require(std::abs(z) <= 4.0, "window p=" + std::to_string(p));
        o.detail << " p=" << p << ": z=" << z << ";";
    }
}

void doob_factor(Outcome& o) {
    ExperimentPlan plan;
    plan.model.d = 1;
    plan.model.n = 8;
    plan.model.coefficients = CoefficientTensor::uniform(1, 8).normalized();
    plan.model.regime.tag = Regime::Martingale;
    plan.model.factors = {InputDistribution::rademacher()};
    plan.statistic = Statistic::RunningMax;
    plan.replications = 1000000;
    plan.seed = 8;
    plan.p_grid = {1.5, 2.0, 3.0, 4.0, 6.0};
    const auto zeta = zeta_chain(plan.model.regime, natural_inputs(plan.model));
    plan.bound = zeta.bound();
    const auto rep = doob_experiment(plan);
    const auto exact = brute_force_running_max(plan.model, plan.p_grid);
    const auto doob = doob_maximal_envelope(zeta.bound());
    const auto final_moments = brute_force_moments(plan.model, plan.p_grid);
    for (std::size_t k = 0; k < plan.p_grid.size(); ++k) {
        const double p = plan.p_grid[k];
        const double norm = std::pow(exact[k], 1.0 / p);
        const double z = (rep.moments[k].empirical - norm) / rep.moments[k].stderr;
        o.require(std::abs(z) <= 4.0, "simulation p=" + std::to_string(p));
        o.require(norm <= doob(p), "bound p=" + std::to_string(p));
        o.require(norm <= p / (p - 1.0) * std::pow(final_moments[k], 1.0 / p), "Doob on S_n p=" + std::to_string(p));
        o.detail << " p=" << p << ": exact " << norm << " z=" << z << " bound " << doob(p) << ";";
    }
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, Criterion>> criteria{
        {"otimes closed form for square-root growth", otimes_closed_form},
        {"otimes of indicators reduces to a Lebesgue space", lebesgue_reduction},
        {"Pareto power moments: simulation and tail quadrature", pareto_exactness},
        {"conjugate tail sanity", conjugate_tail},
        {"exhaustive oracle equivalence", exhaustive_oracle},
        {"dominance battery", dominance_battery},
        {"tail dominance after x-rescale fit", tail_battery},
        {"dominant term and convergence diagnostics", dominant_term},
        {"reverse martingale symmetry", reverse_symmetry},
        {"Doob factor", doob_factor},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::stoi(argv[i]));

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i + 1);
        if (!selected.empty() && !selected.count(id)) continue;
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            criteria[i].second(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " exception: " << e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("[%s] %2d %s (%.1fs):%s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(), secs,
                    o.detail.str().c_str());
        std::fflush(stdout);
        failed += !o.pass;
    }
    std::printf("%d criteria failed\n", failed);
    return failed == 0 ? 0 : 1;
}
