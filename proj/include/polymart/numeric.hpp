#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

namespace polymart {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct MinimizeResult {
    double x = 0.0;
    double fx = kInf;
    std::size_t evaluations = 0;
};

// Golden-section search on [lo, hi]. Both interior points are recomputed from
// the bracket ends on every iteration, so minimizing f(-t) on [-hi, -lo]
// visits exactly the mirrored points. Ties shrink the bracket from both sides.
MinimizeResult golden_section(const std::function<double(double)>& f, double lo, double hi,
                              double tol = 1e-12, std::size_t max_iter = 200);

// Coarse scan over `scan_points` symmetric points of [lo, hi], then golden-section
// refinement inside the bracket around the best scan point.
MinimizeResult scan_then_golden(const std::function<double(double)>& f, double lo, double hi,
                                std::size_t scan_points = 64, double tol = 1e-12);

// Chebyshev-Lobatto nodes on [a, b], endpoints included, increasing.
std::vector<double> chebyshev_grid(double a, double b, std::size_t count);
std::vector<double> linear_grid(double a, double b, std::size_t count);

// Sorted union of two increasing grids with exact duplicates removed.
std::vector<double> merge_grids(const std::vector<double>& a, const std::vector<double>& b);

bool strictly_increasing(const std::vector<double>& xs);

// Adaptive Gauss-Kronrod on a finite interval.
double integrate_smooth(const std::function<double(double)>& f, double a, double b,
                        double rel_tol = 1e-12, double* error = nullptr);
// tanh-sinh on a finite interval; tolerates integrable endpoint singularities.
double integrate_endpoint_singular(const std::function<double(double)>& f, double a, double b,
                                   double rel_tol = 1e-12);
// exp-sinh on [a, +inf).
double integrate_to_infinity(const std::function<double(double)>& f, double a,
                             double rel_tol = 1e-12);

}  // namespace polymart
