#include "polymart/tails.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace polymart {

namespace {

constexpr double kMaxUnboundedP = 1e4;

bool vacuous(double x) { return !(x > std::numbers::e); }

// p (log(k nu(p)) - log x); +inf outside the envelope's finite range.
double log_objective(const ConjugateSpec& spec, double p, double log_x) {
    const double nu = spec.envelope(p);
    if (!std::isfinite(nu)) return kInf;
    return p * (std::log(spec.norm_factor * nu) - log_x);
}

struct Optimum {
    double p = 0.0;
    double value = kInf;
};

Optimum minimize_over_grid(const ConjugateSpec& spec, const std::function<double(double)>& f) {
    const auto& g = spec.p_grid;
    Optimum best;
    std::size_t k_best = g.size();
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double v = f(g[k]);
        if (v < best.value) {
            best = {g[k], v};
            k_best = k;
        }
    }
    if (k_best == g.size()) throw std::domain_error("conjugate tail: no grid point with a finite envelope");
    if (spec.polish && g.size() > 1) {
        const double lo = g[k_best == 0 ? 0 : k_best - 1];
        const double hi = g[std::min(k_best + 1, g.size() - 1)];
        MinimizeResult r = golden_section(f, lo, hi, 1e-13);
        if (r.fx < best.value) best = {r.x, r.fx};
    }
    return best;
}

}  // namespace

ConjugateSpec ConjugateSpec::with_default_grid(const MomentEnvelope& env, double norm_factor, std::size_t count) {
    ConjugateSpec spec{env, norm_factor, {}, true};
    const SupportInterval& dom = env.finite_domain();
    const double lo = std::max(1.0, dom.lower);
    if (std::isinf(dom.upper)) {
        spec.p_grid.resize(count);
        const double ratio = std::log(kMaxUnboundedP / lo);
        for (std::size_t k = 0; k < count; ++k)
            spec.p_grid[k] = lo * std::exp(ratio * static_cast<double>(k) / static_cast<double>(count - 1));
        spec.p_grid.front() = lo;
    } else {
        const double hi = dom.upper_closed ? dom.upper : lo + (dom.upper - lo) * (1.0 - 1e-9);
        spec.p_grid = hi > lo ? chebyshev_grid(lo, hi, count) : std::vector<double>{lo};
    }
    return spec;
}

void ConjugateSpec::validate() const {
    if (!(norm_factor > 0.0) || !std::isfinite(norm_factor))
        throw std::invalid_argument("conjugate tail: norm factor must be positive");
    if (p_grid.empty()) throw std::invalid_argument("conjugate tail: empty p grid");
    if (!strictly_increasing(p_grid)) throw std::invalid_argument("conjugate tail: p grid must be increasing");
    for (double p : p_grid)
        if (!envelope.support().contains(p)) throw std::invalid_argument("conjugate tail: grid point outside support");
}

double tail_inf_form(const ConjugateSpec& spec, double x) {
    if (std::isnan(x)) throw std::domain_error("tail evaluated at NaN");
    if (vacuous(x)) return 1.0;
    const double log_x = std::log(x);
    const Optimum opt = minimize_over_grid(spec, [&](double p) { return log_objective(spec, p, log_x); });
    return std::min(1.0, std::exp(opt.value));
}

double tail_conjugate_form(const ConjugateSpec& spec, double x) {
    if (std::isnan(x)) throw std::domain_error("tail evaluated at NaN");
    if (vacuous(x)) return 1.0;
    const double log_x = std::log(x);
    // Legendre transform of h(p) = p log(k nu(p)) at y = log x, maximized as a
    // minimization of its negative.
    auto neg = [&](double p) {
        const double nu = spec.envelope(p);
        if (!std::isfinite(nu)) return kInf;
        return -(p * log_x - p * std::log(spec.norm_factor * nu));
    };
    const Optimum opt = minimize_over_grid(spec, neg);
    const double legendre = -opt.value;
    return std::min(1.0, std::exp(-legendre));
}

double tail_optimal_p(const ConjugateSpec& spec, double x) {
    if (vacuous(x)) return std::nan("");
    const double log_x = std::log(x);
    return minimize_over_grid(spec, [&](double p) { return log_objective(spec, p, log_x); }).p;
}

std::vector<double> tail_curve(const ConjugateSpec& spec, const std::vector<double>& xs) {
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = tail_inf_form(spec, xs[i]);
    return out;
}

double regular_variation_tail(double r, double gamma, const SlowlyVarying& L, double x, double c) {
    if (!(x > std::numbers::e)) throw std::domain_error("regular_variation_tail requires x > e");
    const double lx = std::log(x);
    const double v = c * std::pow(x, -r) * std::pow(lx, gamma + 1.0) * L(lx);
    return std::clamp(v, 0.0, 1.0);
}

DominanceReport dominance_check(const std::function<double(double)>& bound, const EmpiricalTail& empirical,
                                const std::vector<double>& x_grid, double x_rescale) {
    if (!(x_rescale > 0.0)) throw std::invalid_argument("dominance_check: x rescale must be positive");
    DominanceReport rep;
    rep.x_rescale = x_rescale;
    for (double x : x_grid) {
        DominanceRow row;
        row.x = x;
        row.bound = bound(x / x_rescale);
        const auto [est, se] = empirical(x);
        row.empirical = est;
        row.stderr = se;
        row.pass = !(est - 2.0 * se > row.bound);
        if (!row.pass) {
            rep.pass = false;
            rep.violating_x.push_back(x);
        }
        rep.rows.push_back(row);
    }
    return rep;
}

double fit_tail_rescale(const std::function<double(double)>& bound, double x0, double target) {
    double lo = std::log(1e-6), hi = std::log(1e6);
    if (bound(x0 / std::exp(lo)) >= target) return std::exp(lo);
    if (bound(x0 / std::exp(hi)) < target) return std::exp(hi);
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (bound(x0 / std::exp(mid)) >= target) hi = mid;
        else lo = mid;
    }
    return std::exp(hi);
}

}  // namespace polymart
