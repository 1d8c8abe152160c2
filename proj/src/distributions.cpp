#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "polymart/polymodel.hpp"

namespace polymart {

namespace {

constexpr double kUniformEps = 0x1.0p-54;

void require_finite_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be positive");
}

}  // namespace

InputDistribution InputDistribution::pareto_power(double r1) {
    if (!(r1 > 0.0) || !std::isfinite(r1)) throw std::invalid_argument("ParetoPower index must be positive");
    InputDistribution d;
    d.kind_ = Kind::ParetoPower;
    d.params_ = {r1};
    return d;
}

InputDistribution InputDistribution::log_perturbed_pareto(double r, double kappa, SlowlyVarying L) {
    require_finite_positive(r, "LogPerturbedPareto index");
    if (!std::isfinite(kappa)) throw std::invalid_argument("LogPerturbedPareto exponent must be finite");
    InputDistribution d;
    d.kind_ = Kind::LogPerturbedPareto;
    d.params_ = {r, kappa};
    d.L_ = std::move(L);
    return d;
}

InputDistribution InputDistribution::log_power_only(double mu) {
    require_finite_positive(mu, "LogPowerOnly exponent");
    InputDistribution d;
    d.kind_ = Kind::LogPowerOnly;
    d.params_ = {mu};
    return d;
}

InputDistribution InputDistribution::double_exp_discrete(double r, double beta) {
    require_finite_positive(r, "DoubleExpDiscrete index");
    require_finite_positive(beta, "DoubleExpDiscrete beta");
    InputDistribution d;
    d.kind_ = Kind::DoubleExpDiscrete;
    d.params_ = {r, beta};
    std::vector<double> logw;
    // Atoms exp(e^k) overflow beyond k = 6; the truncated mass there is below
    // exp(-r (e^7 - 7 beta)).
    for (int k = 1; k <= 6; ++k) {
        const double lw = beta * r * k - r * std::exp(static_cast<double>(k));
        if (!logw.empty() && lw - *std::max_element(logw.begin(), logw.end()) < std::log(1e-300)) break;
        logw.push_back(lw);
        d.atoms_.push_back(std::exp(std::exp(static_cast<double>(k))));
    }
    const double lmax = *std::max_element(logw.begin(), logw.end());
    double total = 0.0;
    for (double lw : logw) total += std::exp(lw - lmax);
    for (double lw : logw) d.probs_.push_back(std::exp(lw - lmax) / total);
    std::partial_sum(d.probs_.begin(), d.probs_.end(), std::back_inserter(d.cumulative_));
    d.cumulative_.back() = 1.0;
    return d;
}

InputDistribution InputDistribution::weibull(double c, double alpha) {
    require_finite_positive(c, "Weibull rate");
    require_finite_positive(alpha, "Weibull shape");
    InputDistribution d;
    d.kind_ = Kind::Weibull;
    d.params_ = {c, alpha};
    return d;
}

InputDistribution InputDistribution::rademacher() {
    InputDistribution d;
    d.kind_ = Kind::Rademacher;
    d.atoms_ = {-1.0, 1.0};
    d.probs_ = {0.5, 0.5};
    d.cumulative_ = {0.5, 1.0};
    return d;
}

InputDistribution InputDistribution::discrete(std::vector<double> atoms, std::vector<double> probs) {
    if (atoms.empty() || atoms.size() != probs.size())
        throw std::invalid_argument("discrete distribution needs matching atoms and probabilities");
    double total = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (!std::isfinite(atoms[i])) throw std::invalid_argument("discrete atoms must be finite");
        if (!(probs[i] >= 0.0)) throw std::invalid_argument("discrete probabilities must be non-negative");
        total += probs[i];
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("discrete probabilities must sum to 1");
    InputDistribution d;
    d.kind_ = Kind::Discrete;
    d.atoms_ = std::move(atoms);
    d.probs_ = std::move(probs);
    std::partial_sum(d.probs_.begin(), d.probs_.end(), std::back_inserter(d.cumulative_));
    d.cumulative_.back() = 1.0;
    return d;
}

InputDistribution InputDistribution::custom(std::function<double(double)> quantile, std::string label) {
    if (!quantile) throw std::invalid_argument("custom distribution needs a quantile function");
    InputDistribution d;
    d.kind_ = Kind::Custom;
    d.quantile_ = std::move(quantile);
    d.label_ = std::move(label);
    return d;
}

InputDistribution InputDistribution::centered() const {
    if (centered_) return *this;
    const double m = base_mean();
    if (!std::isfinite(m)) throw std::domain_error("cannot center a distribution with infinite mean");
    InputDistribution d = *this;
    d.centered_ = true;
    d.shift_ = m;
    return d;
}

InputDistribution InputDistribution::symmetrized() const {
    InputDistribution d = *this;
    d.symmetric_ = true;
    return d;
}

InputDistribution InputDistribution::scaled(double factor) const {
    require_finite_positive(factor, "scale factor");
    InputDistribution d = *this;
    d.scale_ *= factor;
    return d;
}

std::string InputDistribution::describe() const {
    std::ostringstream os;
    switch (kind_) {
        case Kind::ParetoPower: os << "ParetoPower(" << params_[0] << ")"; break;
        case Kind::LogPerturbedPareto:
            os << "LogPerturbedPareto(" << params_[0] << ", " << params_[1] << ", " << L_.describe() << ")";
            break;
        case Kind::LogPowerOnly: os << "LogPowerOnly(" << params_[0] << ")"; break;
        case Kind::DoubleExpDiscrete: os << "DoubleExpDiscrete(" << params_[0] << ", " << params_[1] << ")"; break;
        case Kind::Weibull: os << "Weibull(" << params_[0] << ", " << params_[1] << ")"; break;
        case Kind::Rademacher: os << "Rademacher"; break;
        case Kind::Discrete: os << "Discrete(" << atoms_.size() << " atoms)"; break;
        case Kind::Custom: os << (label_.empty() ? "Custom" : label_); break;
    }
    if (centered_) os << " centered";
    if (symmetric_) os << " symmetrized";
    if (scale_ != 1.0) os << " x" << scale_;
    return os.str();
}

double InputDistribution::base_quantile(double u) const {
    switch (kind_) {
        case Kind::ParetoPower: return std::pow(u, -1.0 / params_[0]);
        case Kind::LogPerturbedPareto: {
            const double s = -std::log(u);
            return std::pow(u, -1.0 / params_[0]) * std::pow(s, params_[1]) * L_(s);
        }
        case Kind::LogPowerOnly: return std::pow(-std::log(u), params_[0]);
        case Kind::Weibull: return std::pow(-std::log(u) / params_[0], 1.0 / params_[1]);
        case Kind::Custom: return quantile_(u);
        case Kind::DoubleExpDiscrete:
        case Kind::Rademacher:
        case Kind::Discrete: {
            auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), u);
            if (it == cumulative_.end()) --it;
            return atoms_[static_cast<std::size_t>(it - cumulative_.begin())];
        }
    }
    return 0.0;
}

double InputDistribution::transform(double u, double u_sign) const {
    double v = scale_ * (base_quantile(u) - shift_);
    if (symmetric_ && u_sign < 0.5) v = -v;
    return v;
}

bool InputDistribution::finite_support() const noexcept {
    return kind_ == Kind::Rademacher || kind_ == Kind::Discrete || kind_ == Kind::DoubleExpDiscrete;
}

std::vector<std::pair<double, double>> InputDistribution::atoms() const {
    if (!finite_support()) throw std::logic_error("atoms requested for a continuous distribution");
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
        const double v = scale_ * (atoms_[i] - shift_);
        if (symmetric_) {
            out.emplace_back(-v, 0.5 * probs_[i]);
            out.emplace_back(v, 0.5 * probs_[i]);
        } else {
            out.emplace_back(v, probs_[i]);
        }
    }
    return out;
}

double InputDistribution::moment_index() const {
    switch (kind_) {
        case Kind::ParetoPower:
        case Kind::LogPerturbedPareto:
        case Kind::DoubleExpDiscrete: return params_[0];
        default: return kInf;
    }
}

namespace {

// int_0^1 h(u) du written as int_0^inf h(e^-s) e^-s ds and split at the sign
// changes of g(s) = base(e^-s) - shift so each piece is smooth.
double integrate_over_uniform(const std::function<double(double)>& base, double shift,
                              const std::function<double(double)>& h, double s_from = 0.0) {
    auto g = [&](double s) { return base(std::exp(-s)) - shift; };
    std::vector<double> cuts{s_from};
    if (shift != 0.0) {
        double prev_s = s_from;
        double prev_g = g(std::max(prev_s, 1e-300));
        for (int k = 1; k <= 400; ++k) {
            const double s = s_from + 1e-6 * std::pow(1.06, k);
            const double gs = g(s);
            if (std::signbit(gs) != std::signbit(prev_g)) {
                double a = prev_s, b = s;
                for (int it = 0; it < 200 && b - a > 1e-15 * (1.0 + b); ++it) {
                    const double mid = 0.5 * (a + b);
                    if (std::signbit(g(mid)) == std::signbit(prev_g)) a = mid;
                    else b = mid;
                }
                cuts.push_back(0.5 * (a + b));
            }
            prev_s = s;
            prev_g = gs;
            if (s > 800.0) break;
        }
    }
    auto integrand = [&](double s) {
        const double v = h(base(std::exp(-s)) - shift) * std::exp(-s);
        return std::isfinite(v) ? v : 0.0;
    };
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) total += integrate_endpoint_singular(integrand, cuts[i], cuts[i + 1], 1e-12);
    total += integrate_to_infinity(integrand, cuts.back(), 1e-12);
    return total;
}

}  // namespace

double InputDistribution::base_mean() const {
    switch (kind_) {
        case Kind::ParetoPower: {
            const double r = params_[0];
            return r > 1.0 ? r / (r - 1.0) : kInf;
        }
        case Kind::LogPowerOnly: return std::tgamma(params_[0] + 1.0);
        case Kind::Weibull: return std::tgamma(1.0 + 1.0 / params_[1]) * std::pow(params_[0], -1.0 / params_[1]);
        case Kind::LogPerturbedPareto:
            if (params_[0] <= 1.0) return kInf;
            [[fallthrough]];
        case Kind::Custom:
            return integrate_over_uniform([this](double u) { return base_quantile(u); }, 0.0,
                                          [](double v) { return v; });
        case Kind::DoubleExpDiscrete:
        case Kind::Rademacher:
        case Kind::Discrete: {
            double m = 0.0;
            for (std::size_t i = 0; i < atoms_.size(); ++i) m += atoms_[i] * probs_[i];
            return m;
        }
    }
    return 0.0;
}

double InputDistribution::abs_moment(double p) const {
    if (!(p > 0.0)) throw std::domain_error("abs_moment needs p > 0");
    if (p >= moment_index()) return kInf;
    if (finite_support()) {
        double s = 0.0;
        for (const auto& [v, w] : atoms()) s += w * std::pow(std::abs(v), p);
        return s;
    }
    if (kind_ == Kind::ParetoPower && shift_ == 0.0) return std::pow(scale_, p) * params_[0] / (params_[0] - p);
    const double raw = integrate_over_uniform([this](double u) { return base_quantile(u); }, shift_,
                                              [p](double v) { return std::pow(std::abs(v), p); });
    return std::pow(scale_, p) * raw;
}

double InputDistribution::raw_moment(int k) const {
    if (k < 1) throw std::domain_error("raw_moment needs k >= 1");
    if (static_cast<double>(k) >= moment_index()) return std::nan("");
    if (symmetric_ && k % 2 == 1) return 0.0;
    if (finite_support()) {
        double s = 0.0;
        for (const auto& [v, w] : atoms()) s += w * std::pow(v, k);
        return s;
    }
    if (kind_ == Kind::ParetoPower && shift_ == 0.0) return std::pow(scale_, k) * params_[0] / (params_[0] - k);
    const double raw = integrate_over_uniform([this](double u) { return base_quantile(u); }, shift_,
                                              [k](double v) { return std::pow(v, k); });
    return std::pow(scale_, k) * raw;
}

double InputDistribution::variance() const {
    if (2.0 >= moment_index()) return kInf;
    const double m1 = raw_moment(1);
    return raw_moment(2) - m1 * m1;
}

MomentEnvelope InputDistribution::natural_envelope(const std::vector<double>& grid) const {
    const double r = moment_index();
    std::vector<double> vals(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double m = abs_moment(grid[i]);
        if (!std::isfinite(m)) throw std::domain_error("natural_envelope: grid reaches the moment index");
        vals[i] = std::pow(m, 1.0 / grid[i]);
    }
    return MomentEnvelope::tabulated(grid, std::move(vals), SupportInterval{1.0, r, false});
}

MomentEnvelope InputDistribution::natural_envelope(std::size_t nodes, double p_max) const {
    const double r = moment_index();
    const double hi = std::isfinite(r) ? std::min(0.999 * r, p_max) : p_max;
    if (!(hi > 1.0)) throw std::domain_error("natural_envelope: moment index must exceed 1");
    return natural_envelope(chebyshev_grid(1.0, hi, nodes));
}

InputDistribution standardized_pareto(double r1) {
    InputDistribution c = InputDistribution::pareto_power(r1).centered();
    const double var = c.variance();
    if (!std::isfinite(var) || !(var > 0.0)) throw std::domain_error("standardized_pareto requires r1 > 2");
    return c.scaled(1.0 / std::sqrt(var));
}

MomentEstimate stratified_abs_moment(const InputDistribution& dist, double p, std::size_t samples,
                                     std::uint64_t seed, double tail_mass) {
    if (samples == 0) throw std::invalid_argument("stratified_abs_moment: no samples");
    if (!(tail_mass > 0.0 && tail_mass < 1.0)) throw std::invalid_argument("stratified_abs_moment: tail mass in (0,1)");
    if (!dist.closed_form_quantile() || dist.finite_support())
        throw std::invalid_argument("stratified_abs_moment needs a continuous law with explicit quantile");
    if (p >= dist.moment_index()) throw std::domain_error("stratified_abs_moment: moment is infinite");

    // Exact part: u in (0, tail_mass), i.e. s = -log u in (-log tail_mass, inf).
    auto base = [&dist](double u) { return dist.transform(u, 1.0); };
    const double tail = integrate_over_uniform(base, 0.0, [p](double v) { return std::pow(std::abs(v), p); },
                                               -std::log(tail_mass));

    Philox4x32 rng(seed);
    const std::size_t batches = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(double(samples))));
    std::vector<double> sums(batches, 0.0);
    std::vector<std::size_t> counts(batches, 0);
    double total = 0.0;
    for (std::size_t k = 0; k < samples; ++k) {
        const double u = tail_mass + (1.0 - tail_mass) * std::max(rng.uniforms(k, 0)[0], kUniformEps);
        const double v = std::pow(std::abs(dist.transform(u, 1.0)), p);
        const std::size_t b = k * batches / samples;
        sums[b] += v;
        ++counts[b];
        total += v;
    }
    std::vector<double> means(batches);
    for (std::size_t b = 0; b < batches; ++b) means[b] = (1.0 - tail_mass) * sums[b] / double(counts[b]);
    double unused = 0.0, se = 0.0;
    batch_mean_stats(means, unused, se);
    const double power_mean = tail + (1.0 - tail_mass) * total / double(samples);
    MomentEstimate est = norm_from_power_mean(power_mean, se, p, batches);
    est.high_variance = p > dist.moment_index() / 2.0;
    return est;
}

}  // namespace polymart
