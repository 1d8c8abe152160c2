#pragma once

// Moment envelope -> tail bound by Young-Fenchel conjugation, the equivalent
// inf-form, regular-variation tails and the dominance comparison used in reports.

#include <functional>
#include <utility>
#include <vector>

#include "polymart/envelope.hpp"

namespace polymart {

struct ConjugateSpec {
    MomentEnvelope envelope;
    double norm_factor = 1.0;
    std::vector<double> p_grid;
    /// Golden-section polish around the best grid point.
    bool polish = true;

    /// 512 points covering the finite domain; [lower, 1e4] geometric when unbounded.
    static ConjugateSpec with_default_grid(const MomentEnvelope& env, double norm_factor = 1.0,
                                           std::size_t count = 512);
    void validate() const;
};

/// min(1, inf_p (k nu(p) / x)^p); 1 for x <= e.
double tail_inf_form(const ConjugateSpec& spec, double x);
/// exp(-sup_p [p log x - p log(k nu(p))]); 1 for x <= e.
double tail_conjugate_form(const ConjugateSpec& spec, double x);
/// Minimizing p for the inf-form (NaN for x <= e).
double tail_optimal_p(const ConjugateSpec& spec, double x);

inline double tail_from_envelope(const ConjugateSpec& spec, double x) { return tail_inf_form(spec, x); }
std::vector<double> tail_curve(const ConjugateSpec& spec, const std::vector<double>& xs);

/// C x^(-r) (log x)^(gamma+1) L(log x), clamped to [0, 1]. Throws for x <= e.
double regular_variation_tail(double r, double gamma, const SlowlyVarying& L, double x, double c = 1.0);

struct DominanceRow {
    double x = 0.0;
    double bound = 0.0;
    double empirical = 0.0;
    double stderr = 0.0;
    bool pass = true;
};

struct DominanceReport {
    std::vector<DominanceRow> rows;
    std::vector<double> violating_x;
    double x_rescale = 1.0;
    bool pass = true;
};

using EmpiricalTail = std::function<std::pair<double, double>(double)>;

/// Compares empirical - 2 stderr against bound(x / x_rescale) at each grid x.
DominanceReport dominance_check(const std::function<double(double)>& bound, const EmpiricalTail& empirical,
                                const std::vector<double>& x_grid, double x_rescale = 1.0);

/// Rescale C with bound(x0 / C) = target, found by bisection on log C in [1e-6, 1e6].
double fit_tail_rescale(const std::function<double(double)>& bound, double x0, double target);

}  // namespace polymart
