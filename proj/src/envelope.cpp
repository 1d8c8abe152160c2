#include "polymart/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "polymart/tails.hpp"

namespace polymart {

void SupportInterval::validate() const {
    if (!(lower >= 1.0) || !std::isfinite(lower))
        throw std::invalid_argument("support lower endpoint must be finite and >= 1");
    if (!(lower < upper) && !(upper_closed && lower == upper))
        throw std::invalid_argument("support requires lower < upper");
}

// ---------------------------------------------------------------------------
// SlowlyVarying

SlowlyVarying SlowlyVarying::constant(double c) {
    if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("slowly varying constant must be positive");
    SlowlyVarying L;
    L.kind_ = Kind::Constant;
    L.param_ = c;
    return L;
}

SlowlyVarying SlowlyVarying::log_power(double kappa) {
    if (!std::isfinite(kappa)) throw std::invalid_argument("log_power exponent must be finite");
    SlowlyVarying L;
    L.kind_ = Kind::LogPower;
    L.param_ = kappa;
    return L;
}

SlowlyVarying SlowlyVarying::custom(std::function<double(double)> fn, std::string label) {
    if (!fn) throw std::invalid_argument("custom slowly varying function is empty");
    SlowlyVarying L;
    L.kind_ = Kind::Custom;
    L.fn_ = std::move(fn);
    L.label_ = std::move(label);
    return L;
}

double SlowlyVarying::operator()(double x) const {
    const double arg = std::max(x, 1.0);
    switch (kind_) {
        case Kind::Constant: return param_;
        case Kind::LogPower: return std::pow(1.0 + std::log(arg), param_);
        case Kind::Custom: {
            const double v = fn_(arg);
            if (!(v > 0.0)) throw std::domain_error("slowly varying function must stay positive");
            return v;
        }
    }
    return param_;
}

std::string SlowlyVarying::describe() const {
    std::ostringstream os;
    switch (kind_) {
        case Kind::Constant: os << param_; break;
        case Kind::LogPower: os << "(1+log x)^" << param_; break;
        case Kind::Custom: os << (label_.empty() ? "custom" : label_); break;
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// MomentEnvelope construction

namespace {

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be positive and finite");
}

SupportInterval intersect(const SupportInterval& a, const SupportInterval& b) {
    SupportInterval s;
    s.lower = std::max(a.lower, b.lower);
    if (a.upper < b.upper) {
        s.upper = a.upper;
        s.upper_closed = a.upper_closed;
    } else if (b.upper < a.upper) {
        s.upper = b.upper;
        s.upper_closed = b.upper_closed;
    } else {
        s.upper = a.upper;
        s.upper_closed = a.upper_closed && b.upper_closed;
    }
    return s;
}

}  // namespace

MomentEnvelope MomentEnvelope::make(Form f, SupportInterval support, std::optional<SupportInterval> finite) {
    support.validate();
    auto rep = std::make_shared<Rep>(Rep{std::move(f), support, finite.value_or(support)});
    return MomentEnvelope(std::move(rep));
}

MomentEnvelope MomentEnvelope::power_singularity(double c, double r, double delta, SlowlyVarying L, double lower) {
    require_positive(c, "PowerSingularity constant");
    if (!std::isfinite(r) || !(r > lower)) throw std::invalid_argument("PowerSingularity needs lower < r < inf");
    if (!(delta >= 0.0) || !std::isfinite(delta)) throw std::invalid_argument("PowerSingularity exponent must be >= 0");
    return make(form::PowerSingularity{c, r, delta, std::move(L)}, SupportInterval{lower, r, false});
}

MomentEnvelope MomentEnvelope::power_growth(double c, double mu, SlowlyVarying L, double lower) {
    require_positive(c, "PowerGrowth constant");
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw std::invalid_argument("PowerGrowth exponent must be >= 0");
    return make(form::PowerGrowth{c, mu, std::move(L)}, SupportInterval{lower, kInf, false});
}

MomentEnvelope MomentEnvelope::indicator(double r, double lower) {
    if (!(r >= lower)) throw std::invalid_argument("Indicator needs r >= lower");
    return make(form::Indicator{r}, SupportInterval{lower, r, true});
}

MomentEnvelope MomentEnvelope::tabulated(std::vector<double> ps, std::vector<double> values,
                                         std::optional<SupportInterval> declared) {
    if (ps.empty() || ps.size() != values.size())
        throw std::invalid_argument("tabulated envelope needs equal-length non-empty grids");
    if (!strictly_increasing(ps)) throw std::invalid_argument("tabulated envelope grid must be strictly increasing");
    if (ps.front() < 1.0) throw std::invalid_argument("tabulated envelope grid must start at p >= 1");
    std::vector<double> logs(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        require_positive(values[i], "tabulated envelope value");
        logs[i] = std::log(values[i]);
    }
    SupportInterval nodes{ps.front(), ps.back(), true};
    SupportInterval decl = declared.value_or(nodes);
    SupportInterval finite = intersect(decl, nodes);
    return make(form::Tabulated{std::move(ps), std::move(values), std::move(logs)}, decl, finite);
}

MomentEnvelope MomentEnvelope::scaled(const MomentEnvelope& inner, double factor) {
    require_positive(factor, "scale factor");
    return make(form::Scaled{std::make_shared<const MomentEnvelope>(inner), factor}, inner.support(),
                inner.finite_domain());
}

MomentEnvelope MomentEnvelope::product(std::vector<MomentEnvelope> factors) {
    if (factors.empty()) throw std::invalid_argument("product envelope needs at least one factor");
    SupportInterval s = factors.front().support();
    SupportInterval f = factors.front().finite_domain();
    for (std::size_t i = 1; i < factors.size(); ++i) {
        s = intersect(s, factors[i].support());
        f = intersect(f, factors[i].finite_domain());
    }
    return make(form::Product{std::move(factors)}, s, f);
}

MomentEnvelope MomentEnvelope::weighted(const MomentEnvelope& inner, std::function<double(double)> weight,
                                        std::string label) {
    if (!weight) throw std::invalid_argument("weighted envelope needs a weight function");
    return make(form::Weighted{std::make_shared<const MomentEnvelope>(inner), std::move(weight), std::move(label)},
                inner.support(), inner.finite_domain());
}

MomentEnvelope MomentEnvelope::root_singularity(double c, double r, double kappa, SlowlyVarying L, double lower) {
    require_positive(c, "RootSingularity constant");
    if (!std::isfinite(r) || !(r > lower)) throw std::invalid_argument("RootSingularity needs lower < r < inf");
    if (!std::isfinite(kappa)) throw std::invalid_argument("RootSingularity exponent must be finite");
    return make(form::RootSingularity{c, r, kappa, std::move(L)}, SupportInterval{lower, r, false});
}

// ---------------------------------------------------------------------------
// Evaluation

double MomentEnvelope::operator()(double p) const {
    if (!std::isfinite(p)) throw std::domain_error("envelope evaluated at a non-finite p");
    if (p < 1.0) throw std::domain_error("envelope evaluated at p < 1");
    if (!rep_->support.contains(p) || !rep_->finite.contains(p)) return kInf;
    return eval_inside(p);
}

double MomentEnvelope::log_value(double p) const { return std::log((*this)(p)); }

namespace {

double eval_tabulated(const form::Tabulated& t, double p) {
    const auto& ps = t.ps;
    auto it = std::lower_bound(ps.begin(), ps.end(), p);
    if (it == ps.end()) return kInf;
    const std::size_t i = static_cast<std::size_t>(it - ps.begin());
    if (*it == p) return t.values[i];
    if (i == 0) return kInf;
    const double w = (p - ps[i - 1]) / (ps[i] - ps[i - 1]);
    return std::exp(t.log_values[i - 1] + w * (t.log_values[i] - t.log_values[i - 1]));
}

}  // namespace

double MomentEnvelope::eval_inside(double p) const {
    return std::visit(
        [p](const auto& f) -> double {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, form::PowerSingularity>) {
                const double gap = f.r - p;
                return f.c * std::pow(gap, -f.delta) * f.L(1.0 / gap);
            } else if constexpr (std::is_same_v<T, form::PowerGrowth>) {
                return f.c * std::pow(p, f.mu) * f.L(p);
            } else if constexpr (std::is_same_v<T, form::Indicator>) {
                return 1.0;
            } else if constexpr (std::is_same_v<T, form::Tabulated>) {
                return eval_tabulated(f, p);
            } else if constexpr (std::is_same_v<T, form::Scaled>) {
                return f.factor * (*f.inner)(p);
            } else if constexpr (std::is_same_v<T, form::Product>) {
                double v = 1.0;
                for (const auto& g : f.factors) {
                    v *= g(p);
                    if (std::isinf(v)) return kInf;
                }
                return v;
            } else if constexpr (std::is_same_v<T, form::Weighted>) {
                const double inner = (*f.inner)(p);
                if (std::isinf(inner)) return kInf;
                return inner * f.weight(p);
            } else {
                const double gap = f.r - p;
                const double moment = f.c * std::pow(gap, -f.kappa) * f.L(1.0 / gap);
                return std::pow(moment, 1.0 / p);
            }
        },
        rep_->form);
}

std::string MomentEnvelope::describe() const {
    std::ostringstream os;
    std::visit(
        [&os](const auto& f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, form::PowerSingularity>) {
                os << "PowerSingularity(C=" << f.c << ", r=" << f.r << ", delta=" << f.delta << ", L=" << f.L.describe()
                   << ")";
            } else if constexpr (std::is_same_v<T, form::PowerGrowth>) {
                os << "PowerGrowth(C=" << f.c << ", mu=" << f.mu << ", L=" << f.L.describe() << ")";
            } else if constexpr (std::is_same_v<T, form::Indicator>) {
                os << "Indicator(r=" << f.r << ")";
            } else if constexpr (std::is_same_v<T, form::Tabulated>) {
                os << "Tabulated(" << f.ps.size() << " nodes on [" << f.ps.front() << ", " << f.ps.back() << "])";
            } else if constexpr (std::is_same_v<T, form::Scaled>) {
                os << f.factor << " * " << f.inner->describe();
            } else if constexpr (std::is_same_v<T, form::Product>) {
                os << "Product(";
                for (std::size_t i = 0; i < f.factors.size(); ++i) os << (i ? ", " : "") << f.factors[i].describe();
                os << ")";
            } else if constexpr (std::is_same_v<T, form::Weighted>) {
                os << f.label << " * " << f.inner->describe();
            } else {
                os << "RootSingularity(C=" << f.c << ", r=" << f.r << ", kappa=" << f.kappa << ", L=" << f.L.describe()
                   << ")";
            }
        },
        rep_->form);
    return os.str();
}

MomentEnvelope tabulate(const std::function<double(double)>& fn, const std::vector<double>& grid,
                        std::optional<SupportInterval> declared) {
    std::vector<double> values(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) values[i] = fn(grid[i]);
    return MomentEnvelope::tabulated(grid, std::move(values), declared);
}

// ---------------------------------------------------------------------------
// GLS norm

std::vector<double> default_gls_grid(const MomentEnvelope& env, std::size_t count) {
    const SupportInterval& s = env.finite_domain();
    const double lo = std::max(2.0, s.lower);
    double hi = s.upper;
    if (std::isinf(hi)) hi = std::max(lo + 1.0, 64.0);
    else if (!s.upper_closed) hi = lo + (hi - lo) * 0.999;
    if (!(lo < hi)) return {std::min(lo, hi)};
    return chebyshev_grid(lo, hi, count);
}

double gls_norm(const std::function<double(double)>& moments, const MomentEnvelope& env,
                std::span<const double> p_grid) {
    if (p_grid.empty()) throw std::invalid_argument("gls_norm: empty grid");
    double best = 0.0;
    for (double p : p_grid) {
        const double nu = env(p);
        if (!std::isfinite(nu)) throw std::domain_error("gls_norm: grid point outside the envelope support");
        const double m = moments(p);
        if (!std::isfinite(m)) throw std::domain_error("gls_norm: moment is not finite on the grid");
        best = std::max(best, m / nu);
    }
    return best;
}

double natural_moments_pareto_power(double r1, double p) {
    if (!(r1 > 1.0)) throw std::invalid_argument("Pareto-power index must exceed 1");
    if (!(p > 0.0)) throw std::domain_error("moment order must be positive");
    if (p >= r1) throw std::domain_error("moment of order p >= r1 is infinite");
    return std::pow(r1 / (r1 - p), 1.0 / p);
}

// ---------------------------------------------------------------------------
// TailBound

TailBound TailBound::regular_variation(double r, double gamma, SlowlyVarying L, double threshold, double c) {
    if (!(r > 0.0)) throw std::invalid_argument("regular variation index must be positive");
    if (!(threshold >= 1.0)) throw std::invalid_argument("regular variation threshold must be >= 1");
    require_positive(c, "regular variation constant");
    return TailBound(tailform::RegularVariation{r, gamma, std::move(L), threshold, c});
}

TailBound TailBound::weibull(double c, double alpha) {
    require_positive(c, "Weibull rate");
    require_positive(alpha, "Weibull shape");
    return TailBound(tailform::WeibullType{c, alpha});
}

TailBound TailBound::conjugate(const MomentEnvelope& env, double norm_factor) {
    require_positive(norm_factor, "norm factor");
    return TailBound(tailform::Conjugate{env, norm_factor});
}

TailBound TailBound::tabulated(std::vector<double> xs, std::vector<double> values) {
    if (xs.empty() || xs.size() != values.size()) throw std::invalid_argument("tabulated tail needs matching grids");
    if (!strictly_increasing(xs) || xs.front() <= 0.0)
        throw std::invalid_argument("tabulated tail grid must be positive and increasing");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] >= 0.0 && values[i] <= 1.0)) throw std::invalid_argument("tail values must lie in [0, 1]");
        if (i > 0 && values[i] > values[i - 1]) throw std::invalid_argument("tail values must be non-increasing");
    }
    return TailBound(tailform::Tabulated{std::move(xs), std::move(values)});
}

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

double regular_variation_raw(const tailform::RegularVariation& f, double x) {
    const double lx = std::log(x);
    return f.c * std::pow(x, -f.r) * (f.gamma == 0.0 ? 1.0 : std::pow(lx, f.gamma)) * f.L(lx);
}

double tabulated_tail(const tailform::Tabulated& t, double x) {
    if (x <= t.xs.front()) return x < t.xs.front() ? 1.0 : t.values.front();
    if (x > t.xs.back()) return 0.0;
    auto it = std::lower_bound(t.xs.begin(), t.xs.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - t.xs.begin());
    if (*it == x) return t.values[i];
    const double v0 = t.values[i - 1], v1 = t.values[i];
    if (v0 == 0.0 || v1 == 0.0) return v1;
    const double w = (std::log(x) - std::log(t.xs[i - 1])) / (std::log(t.xs[i]) - std::log(t.xs[i - 1]));
    return std::exp(std::log(v0) + w * (std::log(v1) - std::log(v0)));
}

}  // namespace

double TailBound::operator()(double x) const {
    if (std::isnan(x)) throw std::domain_error("tail evaluated at NaN");
    if (x <= 0.0) return 1.0;
    return std::visit(
        [x](const auto& f) -> double {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, tailform::RegularVariation>) {
                if (x <= f.threshold) return 1.0;
                return clamp01(regular_variation_raw(f, x));
            } else if constexpr (std::is_same_v<T, tailform::WeibullType>) {
                return clamp01(std::exp(-f.c * std::pow(x, f.alpha)));
            } else if constexpr (std::is_same_v<T, tailform::Conjugate>) {
                ConjugateSpec spec = ConjugateSpec::with_default_grid(f.envelope, f.norm_factor);
                return tail_from_envelope(spec, x);
            } else {
                return clamp01(tabulated_tail(f, x));
            }
        },
        form_);
}

// ---------------------------------------------------------------------------
// Moments from tails

namespace {

constexpr double kRemainderFraction = 1e-9;

// p int_{t0}^{t1} e^{p t} T(e^t) dt on unit chunks, stopping once a geometric
// remainder estimate falls below kRemainderFraction of the running total.
QuadratureReport integrate_log_chunks(const std::function<double(double)>& tail, double p, double t_start,
                                      double initial, double chunk = 1.0, std::size_t max_chunks = 20000) {
    QuadratureReport rep;
    double acc = initial;
    double prev = -1.0;
    std::size_t rising = 0;
    double t = t_start;
    for (std::size_t k = 0; k < max_chunks; ++k) {
        const double a = t, b = t + chunk;
        const double piece = integrate_smooth([&](double s) { return p * std::exp(p * s) * tail(std::exp(s)); }, a, b, 1e-11);
        if (!std::isfinite(piece)) {
            rep.divergent = true;
            break;
        }
        acc += piece;
        t = b;
        if (piece == 0.0) {
            rep.upper_cutoff = std::exp(t);
            break;
        }
        if (prev > 0.0) {
            const double ratio = piece / prev;
            if (ratio >= 1.0) {
                ++rising;
                if (t > 60.0 && rising > 8) {
                    rep.divergent = true;
                    break;
                }
            } else {
                rising = 0;
                const double remainder = piece * ratio / (1.0 - ratio);
                if (remainder < kRemainderFraction * acc) {
                    acc += remainder;
                    rep.upper_cutoff = std::exp(t);
                    break;
                }
            }
        }
        prev = piece;
        if (t > 700.0) {
            rep.divergent = true;
            break;
        }
    }
    if (rep.divergent) {
        rep.power_moment = kInf;
        rep.value = kInf;
        return rep;
    }
    rep.power_moment = acc;
    rep.value = acc > 0.0 ? std::pow(acc, 1.0 / p) : 0.0;
    return rep;
}

QuadratureReport regular_variation_moment(const tailform::RegularVariation& f, double p) {
    QuadratureReport rep;
    const bool divergent = p > f.r || (p == f.r && f.gamma >= -1.0);
    if (divergent) {
        rep.divergent = true;
        rep.value = rep.power_moment = kInf;
        return rep;
    }
    // Below the threshold T = 1.
    double acc = std::pow(f.threshold, p);
    double t = std::log(f.threshold);
    const double step = 1.0;
    for (int k = 0; k < 100000; ++k) {
        const double a = t, b = t + step;
        acc += integrate_smooth(
            [&](double s) {
                const double x = std::exp(s);
                return p * std::exp(p * s) * std::min(1.0, regular_variation_raw(f, x));
            },
            a, b, 1e-12);
        t = b;
        // Pareto remainder beyond X = e^t (leading asymptotic; exact for gamma = 0 and constant L).
        double remainder;
        const double lt = std::max(t, 1e-300);
        const double shape = (f.gamma == 0.0 ? 1.0 : std::pow(lt, f.gamma)) * f.L(t);
        if (p < f.r) {
            remainder = p * f.c * std::exp((p - f.r) * t) * shape / (f.r - p);
        } else {
            remainder = p * f.c * t * shape / (-f.gamma - 1.0);
        }
        if (t > 1.0 && remainder < kRemainderFraction * acc) {
            acc += remainder;
            rep.upper_cutoff = std::exp(t);
            break;
        }
    }
    rep.power_moment = acc;
    rep.value = std::pow(acc, 1.0 / p);
    return rep;
}

}  // namespace

QuadratureReport moments_from_tail_report(const TailBound& tail, double p) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw std::domain_error("moments_from_tail needs finite p >= 1");
    return std::visit(
        [&](const auto& f) -> QuadratureReport {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, tailform::RegularVariation>) {
                return regular_variation_moment(f, p);
            } else if constexpr (std::is_same_v<T, tailform::WeibullType>) {
                QuadratureReport rep;
                rep.power_moment = integrate_to_infinity(
                    [&](double u) { return p * std::pow(u, p - 1.0) * std::exp(-f.c * std::pow(u, f.alpha)); }, 0.0,
                    1e-13);
                rep.value = std::pow(rep.power_moment, 1.0 / p);
                rep.upper_cutoff = kInf;
                return rep;
            } else if constexpr (std::is_same_v<T, tailform::Conjugate>) {
                const SupportInterval& dom = f.envelope.finite_domain();
                if (p > dom.upper || (p == dom.upper)) {
                    QuadratureReport rep;
                    rep.divergent = true;
                    rep.value = rep.power_moment = kInf;
                    return rep;
                }
                ConjugateSpec spec = ConjugateSpec::with_default_grid(f.envelope, f.norm_factor);
                auto T = [&spec](double x) { return tail_from_envelope(spec, x); };
                // T = 1 on [0, e].
                return integrate_log_chunks(T, p, 1.0, std::exp(p));
            } else {
                const auto& xs = f.xs;
                double acc = std::pow(xs.front(), p);
                TailBound self = tail;
                for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
                    acc += integrate_smooth(
                        [&](double s) { return p * std::exp(p * s) * self(std::exp(s)); }, std::log(xs[i]),
                        std::log(xs[i + 1]), 1e-12);
                }
                QuadratureReport rep;
                rep.power_moment = acc;
                rep.value = std::pow(acc, 1.0 / p);
                rep.upper_cutoff = xs.back();
                return rep;
            }
        },
        tail.form());
}

double moments_from_tail(const TailBound& tail, double p) { return moments_from_tail_report(tail, p).value; }

// ---------------------------------------------------------------------------
// Empirical moments

void batch_mean_stats(std::span<const double> batch_means, double& mean, double& stderr) {
    const std::size_t b = batch_means.size();
    if (b == 0) {
        mean = 0.0;
        stderr = 0.0;
        return;
    }
    mean = std::accumulate(batch_means.begin(), batch_means.end(), 0.0) / static_cast<double>(b);
    if (b < 2) {
        stderr = 0.0;
        return;
    }
    double ss = 0.0;
    for (double v : batch_means) ss += (v - mean) * (v - mean);
    stderr = std::sqrt(ss / static_cast<double>(b - 1) / static_cast<double>(b));
}

MomentEstimate norm_from_power_mean(double power_mean, double power_stderr, double p, std::size_t batches) {
    MomentEstimate est;
    est.power_mean = power_mean;
    est.power_stderr = power_stderr;
    est.batches = batches;
    est.value = power_mean > 0.0 ? std::pow(power_mean, 1.0 / p) : 0.0;
    est.stderr = power_mean > 0.0 ? power_stderr * std::pow(power_mean, 1.0 / p - 1.0) / p : 0.0;
    return est;
}

MomentEstimate empirical_moments(std::span<const double> sample, double p, std::optional<double> moment_index) {
    if (sample.empty()) throw std::invalid_argument("empirical_moments: empty sample");
    if (!(p >= 1.0) || !std::isfinite(p)) throw std::domain_error("empirical_moments needs finite p >= 1");
    const std::size_t n = sample.size();
    const std::size_t batches = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(n))));
    std::vector<double> sums(batches, 0.0);
    std::vector<std::size_t> counts(batches, 0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = std::pow(std::abs(sample[i]), p);
        const std::size_t b = i * batches / n;
        sums[b] += v;
        ++counts[b];
        total += v;
    }
    std::vector<double> means(batches);
    for (std::size_t b = 0; b < batches; ++b) means[b] = sums[b] / static_cast<double>(counts[b]);
    double unused = 0.0, se = 0.0;
    batch_mean_stats(means, unused, se);
    MomentEstimate est = norm_from_power_mean(total / static_cast<double>(n), se, p, batches);
    if (moment_index) est.high_variance = p > *moment_index / 2.0;
    return est;
}

}  // namespace polymart
