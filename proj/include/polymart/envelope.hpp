#pragma once

// Moment envelopes (nu-functions) of Grand Lebesgue Spaces, GLS norms, natural
// functions and the two moment <-> tail conversion formulas.

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "polymart/numeric.hpp"

namespace polymart {

/// A requested order lies outside an envelope's finite range.
class SupportExceeded : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct SupportInterval {
    double lower = 1.0;
    double upper = kInf;
    bool upper_closed = false;

    bool contains(double p) const noexcept {
        return p >= lower && (p < upper || (upper_closed && p == upper));
    }
    void validate() const;
};

/// Positive slowly varying function L on [1, inf). Arguments below 1 are
/// evaluated at 1.
class SlowlyVarying {
public:
    enum class Kind { Constant, LogPower, Custom };

    SlowlyVarying() = default;
    static SlowlyVarying constant(double c = 1.0);
    /// L(x) = (1 + log x)^kappa.
    static SlowlyVarying log_power(double kappa);
    static SlowlyVarying custom(std::function<double(double)> fn, std::string label);

    double operator()(double x) const;
    Kind kind() const noexcept { return kind_; }
    double parameter() const noexcept { return param_; }
    bool is_unit() const noexcept { return kind_ == Kind::Constant && param_ == 1.0; }
    std::string describe() const;

private:
    Kind kind_ = Kind::Constant;
    double param_ = 1.0;
    std::function<double(double)> fn_;
    std::string label_;
};

class MomentEnvelope;

namespace form {
/// p -> C (r - p)^(-delta) L(1 / (r - p)) on [lower, r).
struct PowerSingularity {
    double c, r, delta;
    SlowlyVarying L;
};
/// p -> C p^mu L(p) on [lower, inf).
struct PowerGrowth {
    double c, mu;
    SlowlyVarying L;
};
/// 1 on [lower, r], +inf beyond.
struct Indicator {
    double r;
};
/// Log-linear interpolation in (p, log nu); +inf outside the nodes.
struct Tabulated {
    std::vector<double> ps;
    std::vector<double> values;
    std::vector<double> log_values;
};
struct Scaled {
    std::shared_ptr<const MomentEnvelope> inner;
    double factor;
};
struct Product {
    std::vector<MomentEnvelope> factors;
};
/// inner(p) * weight(p) for an explicit positive weight such as K(p) or p/(p-1).
struct Weighted {
    std::shared_ptr<const MomentEnvelope> inner;
    std::function<double(double)> weight;
    std::string label;
};
/// p -> [C (r - p)^(-kappa) L(1 / (r - p))]^(1/p): a bound on E|X|^p turned into a norm bound.
struct RootSingularity {
    double c, r, kappa;
    SlowlyVarying L;
};
}  // namespace form

/// Immutable moment envelope. Cheap to copy (shared representation).
class MomentEnvelope {
public:
    using Form = std::variant<form::PowerSingularity, form::PowerGrowth, form::Indicator, form::Tabulated,
                              form::Scaled, form::Product, form::Weighted, form::RootSingularity>;

    static MomentEnvelope power_singularity(double c, double r, double delta,
                                            SlowlyVarying L = SlowlyVarying::constant(), double lower = 1.0);
    static MomentEnvelope power_growth(double c, double mu, SlowlyVarying L = SlowlyVarying::constant(),
                                       double lower = 1.0);
    static MomentEnvelope indicator(double r, double lower = 1.0);
    /// Declared support defaults to the node range; a wider declared support
    /// (for example [1, r) of a composed envelope) may be supplied.
    static MomentEnvelope tabulated(std::vector<double> ps, std::vector<double> values,
                                    std::optional<SupportInterval> declared = std::nullopt);
    static MomentEnvelope scaled(const MomentEnvelope& inner, double factor);
    static MomentEnvelope product(std::vector<MomentEnvelope> factors);
    static MomentEnvelope weighted(const MomentEnvelope& inner, std::function<double(double)> weight,
                                   std::string label);
    static MomentEnvelope root_singularity(double c, double r, double kappa,
                                           SlowlyVarying L = SlowlyVarying::constant(), double lower = 1.0);

    /// nu(p); +inf outside the support. Throws std::domain_error for p < 1 or non-finite p.
    double operator()(double p) const;
    double log_value(double p) const;

    /// Declared support.
    const SupportInterval& support() const noexcept { return rep_->support; }
    /// Range on which the envelope can actually be finite (declared support
    /// intersected with the node range for tabulated forms).
    const SupportInterval& finite_domain() const noexcept { return rep_->finite; }
    const Form& form() const noexcept { return rep_->form; }
    std::string describe() const;

private:
    struct Rep {
        Form form;
        SupportInterval support;
        SupportInterval finite;
    };
    explicit MomentEnvelope(std::shared_ptr<const Rep> rep) : rep_(std::move(rep)) {}
    static MomentEnvelope make(Form f, SupportInterval support, std::optional<SupportInterval> finite = {});
    double eval_inside(double p) const;

    std::shared_ptr<const Rep> rep_;
};

/// Sample the envelope of a function on a grid (e.g. a natural function).
MomentEnvelope tabulate(const std::function<double(double)>& fn, const std::vector<double>& grid,
                        std::optional<SupportInterval> declared = std::nullopt);

inline double eval_envelope(const MomentEnvelope& env, double p) { return env(p); }

/// Grid used by gls_norm when none is given: starts at 2 (clipped to the
/// support) and stays strictly inside an open upper end.
std::vector<double> default_gls_grid(const MomentEnvelope& env, std::size_t count = 64);

/// max over the grid of |xi|_p / nu(p): a lower bound for the GLS norm.
double gls_norm(const std::function<double(double)>& moments, const MomentEnvelope& env,
                std::span<const double> p_grid);

/// |xi|_p for xi = eps^(1/r1), P(eps > x) = 1/x (x > 1): (r1 / (r1 - p))^(1/p).
double natural_moments_pareto_power(double r1, double p);

// ---------------------------------------------------------------------------
// Tail functions.

namespace tailform {
/// T(x) = min(1, C x^(-r) log^gamma(x) L(log x)) for x > threshold, 1 below.
struct RegularVariation {
    double r, gamma;
    SlowlyVarying L;
    double threshold;
    double c;
};
/// T(x) = exp(-c x^alpha).
struct WeibullType {
    double c, alpha;
};
/// T(x) = inf_p (k nu(p) / x)^p, evaluated by the tails module.
struct Conjugate {
    MomentEnvelope envelope;
    double norm_factor;
};
/// Log-log linear interpolation; 1 before the first node, 0 after the last.
struct Tabulated {
    std::vector<double> xs;
    std::vector<double> values;
};
}  // namespace tailform

class TailBound {
public:
    using Form = std::variant<tailform::RegularVariation, tailform::WeibullType, tailform::Conjugate,
                              tailform::Tabulated>;

    static TailBound regular_variation(double r, double gamma, SlowlyVarying L = SlowlyVarying::constant(),
                                       double threshold = 2.718281828459045, double c = 1.0);
    static TailBound weibull(double c, double alpha);
    static TailBound conjugate(const MomentEnvelope& env, double norm_factor = 1.0);
    static TailBound tabulated(std::vector<double> xs, std::vector<double> values);

    /// T(x), clipped to [0, 1].
    double operator()(double x) const;
    const Form& form() const noexcept { return form_; }

private:
    explicit TailBound(Form f) : form_(std::move(f)) {}
    Form form_;
};

struct QuadratureReport {
    double value = 0.0;  ///< |xi|_p, +inf when the integral diverges
    double power_moment = 0.0;  ///< E|xi|^p
    bool divergent = false;
    double upper_cutoff = 0.0;  ///< X_max where numeric integration stopped
};

/// |xi|_p = [p int_0^inf u^(p-1) T(u) du]^(1/p).
QuadratureReport moments_from_tail_report(const TailBound& tail, double p);
double moments_from_tail(const TailBound& tail, double p);

struct MomentEstimate {
    double value = 0.0;          ///< (mean |x|^p)^(1/p)
    double power_mean = 0.0;     ///< mean |x|^p
    double power_stderr = 0.0;   ///< batch-means standard error of power_mean
    double stderr = 0.0;         ///< delta-method standard error of value
    std::size_t batches = 0;
    bool high_variance = false;  ///< p > r/2 for a supplied moment index r
};

/// Batch means with floor(sqrt(N)) batches.
MomentEstimate empirical_moments(std::span<const double> sample, double p,
                                 std::optional<double> moment_index = std::nullopt);

/// Turn a power-mean estimate and its standard error into a norm estimate.
MomentEstimate norm_from_power_mean(double power_mean, double power_stderr, double p, std::size_t batches);

/// Batch-means statistics of equal-size batch means.
void batch_mean_stats(std::span<const double> batch_means, double& mean, double& stderr);

}  // namespace polymart
