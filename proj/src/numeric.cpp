#include "polymart/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace polymart {

namespace {

constexpr double kGoldenFraction = 0.38196601125010515;  // (3 - sqrt 5) / 2

void keep_best(MinimizeResult& best, double x, double fx) {
    if (fx < best.fx) {
        best.x = x;
        best.fx = fx;
    }
}

}  // namespace

MinimizeResult golden_section(const std::function<double(double)>& f, double lo, double hi,
                              double tol, std::size_t max_iter) {
    if (!(lo <= hi)) throw std::invalid_argument("golden_section: empty bracket");
    MinimizeResult best;
    best.x = 0.5 * (lo + hi);
    best.fx = kInf;
    std::size_t evals = 0;
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        const double width = hi - lo;
        if (width <= tol * (1.0 + std::abs(lo) + std::abs(hi))) break;
        const double x1 = lo + kGoldenFraction * width;
        const double x2 = hi - kGoldenFraction * width;
        const double f1 = f(x1);
        const double f2 = f(x2);
        evals += 2;
        keep_best(best, x1, f1);
        keep_best(best, x2, f2);
        if (f1 < f2) {
            hi = x2;
        } else if (f2 < f1) {
            lo = x1;
        } else {
            lo = x1;
            hi = x2;
        }
    }
    best.evaluations = evals;
    return best;
}

MinimizeResult scan_then_golden(const std::function<double(double)>& f, double lo, double hi,
                                std::size_t scan_points, double tol) {
    if (!(lo <= hi)) throw std::invalid_argument("scan_then_golden: empty interval");
    if (scan_points < 3) scan_points = 3;
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    const double last = static_cast<double>(scan_points - 1);
    std::vector<double> ts(scan_points);
    std::vector<double> fs(scan_points);
    for (std::size_t k = 0; k < scan_points; ++k) {
        // s_k = (2k - last) / last is exactly antisymmetric in k <-> last - k.
        const double s = (2.0 * static_cast<double>(k) - last) / last;
        ts[k] = mid + half * s;
        fs[k] = f(ts[k]);
    }
    const double fmin = *std::min_element(fs.begin(), fs.end());
    std::size_t first = scan_points, final_idx = 0;
    for (std::size_t k = 0; k < scan_points; ++k) {
        if (fs[k] == fmin) {
            first = std::min(first, k);
            final_idx = k;
        }
    }
    MinimizeResult best;
    best.fx = kInf;
    // Report the tied minimum nearest the centre; identical values either way.
    std::size_t pick = first;
    for (std::size_t k = first; k <= final_idx; ++k) {
        if (fs[k] == fmin &&
            std::abs(2.0 * static_cast<double>(k) - last) < std::abs(2.0 * static_cast<double>(pick) - last))
            pick = k;
    }
    best.x = ts[pick];
    best.fx = fmin;
    if (std::isinf(fmin) && fmin > 0) {
        best.evaluations = scan_points;
        return best;
    }
    const double blo = first == 0 ? ts.front() : ts[first - 1];
    const double bhi = final_idx + 1 >= scan_points ? ts.back() : ts[final_idx + 1];
    MinimizeResult refined = golden_section(f, blo, bhi, tol);
    if (refined.fx < best.fx) {
        best.x = refined.x;
        best.fx = refined.fx;
    }
    best.evaluations = scan_points + refined.evaluations;
    return best;
}

std::vector<double> chebyshev_grid(double a, double b, std::size_t count) {
    if (count == 0) return {};
    if (count == 1) return {a};
    if (!(a < b)) throw std::invalid_argument("chebyshev_grid: need a < b");
    std::vector<double> xs(count);
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    for (std::size_t k = 0; k < count; ++k) {
        const double theta = std::numbers::pi * static_cast<double>(k) / static_cast<double>(count - 1);
        xs[k] = mid - half * std::cos(theta);
    }
    xs.front() = a;
    xs.back() = b;
    return xs;
}

std::vector<double> linear_grid(double a, double b, std::size_t count) {
    if (count == 0) return {};
    if (count == 1) return {a};
    std::vector<double> xs(count);
    for (std::size_t k = 0; k < count; ++k)
        xs[k] = a + (b - a) * static_cast<double>(k) / static_cast<double>(count - 1);
    xs.back() = b;
    return xs;
}

std::vector<double> merge_grids(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out;
    out.reserve(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

bool strictly_increasing(const std::vector<double>& xs) {
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (!(xs[i - 1] < xs[i])) return false;
    return true;
}

double integrate_smooth(const std::function<double(double)>& f, double a, double b, double rel_tol,
                        double* error) {
    if (a == b) return 0.0;
    double err = 0.0;
    const double value =
        boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, rel_tol, &err);
    if (error) *error = err;
    return value;
}

double integrate_endpoint_singular(const std::function<double(double)>& f, double a, double b,
                                   double rel_tol) {
    if (a == b) return 0.0;
    thread_local boost::math::quadrature::tanh_sinh<double> integrator;
    return integrator.integrate(f, a, b, rel_tol);
}

double integrate_to_infinity(const std::function<double(double)>& f, double a, double rel_tol) {
    thread_local boost::math::quadrature::exp_sinh<double> integrator;
    return integrator.integrate(f, a, kInf, rel_tol);
}

}  // namespace polymart
