#include "polymart/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace polymart {

// ---------------------------------------------------------------------------
// Regimes and constants

std::string DependenceRegime::tag_name(Regime r) {
    switch (r) {
        case Regime::Martingale: return "martingale";
        case Regime::CommonIndependent: return "common_independent";
        case Regime::InsideIndependent: return "inside_independent";
        case Regime::VectorIndependent: return "vector_independent";
    }
    return "martingale";
}

std::string DependenceRegime::name() const {
    return tag_name(tag) + (direction == Direction::Reverse ? "/reverse" : "/forward");
}

Regime DependenceRegime::parse_tag(const std::string& s) {
    if (s == "martingale") return Regime::Martingale;
    if (s == "common_independent") return Regime::CommonIndependent;
    if (s == "inside_independent") return Regime::InsideIndependent;
    if (s == "vector_independent") return Regime::VectorIndependent;
    throw std::invalid_argument("unknown regime '" + s + "'");
}

Direction DependenceRegime::parse_direction(const std::string& s) {
    if (s == "forward") return Direction::Forward;
    if (s == "reverse") return Direction::Reverse;
    throw std::invalid_argument("unknown direction '" + s + "'");
}

GrowthConstant GrowthConstant::martingale() { return GrowthConstant{}; }

GrowthConstant GrowthConstant::independent() {
    GrowthConstant k;
    k.kind_ = Kind::IndependentKI;
    return k;
}

GrowthConstant GrowthConstant::custom(std::function<double(double)> fn, std::string label) {
    if (!fn) throw std::invalid_argument("custom growth constant is empty");
    GrowthConstant k;
    k.kind_ = Kind::Custom;
    k.fn_ = std::move(fn);
    k.label_ = std::move(label);
    return k;
}

double GrowthConstant::operator()(double p) const {
    const double q = std::max(p, 2.0);
    switch (kind_) {
        case Kind::MartingaleKM: return q * std::numbers::sqrt2;
        case Kind::IndependentKI: return 0.87 * q / std::log(q);
        case Kind::Custom: {
            const double v = fn_(p);
            if (!(v > 0.0)) throw std::domain_error("growth constant must be positive");
            return v;
        }
    }
    return q;
}

std::string GrowthConstant::describe() const {
    switch (kind_) {
        case Kind::MartingaleKM: return "K_M(p) = sqrt(2) max(p,2)";
        case Kind::IndependentKI: return "K_I(p) = 0.87 max(p,2) / log max(p,2)";
        case Kind::Custom: return label_.empty() ? "custom" : label_;
    }
    return "";
}

// ---------------------------------------------------------------------------
// Composition

namespace {

constexpr double kInset = 1e-12;

// Clamp an argument that rounding pushed just past a closed endpoint.
double snap(double q, const SupportInterval& s) {
    if (q < s.lower && q >= s.lower * (1.0 - kInset)) return s.lower;
    if (s.upper_closed && q > s.upper && q <= s.upper * (1.0 + kInset)) return s.upper;
    return q;
}

double eval_at(const MomentEnvelope& nu, double q) {
    q = snap(q, nu.finite_domain());
    if (q < 1.0) return kInf;
    return nu(q);
}

// Smallest admissible share for a factor whose finite domain is dom.
double min_share(double p, const SupportInterval& dom) {
    if (std::isinf(dom.upper)) return kInset;
    const double s = p / dom.upper;
    return dom.upper_closed ? s : s * (1.0 + kInset);
}

}  // namespace

OtimesResult otimes_detail(const MomentEnvelope& nu1, const MomentEnvelope& nu2, double p,
                           std::size_t scan_points) {
    if (!std::isfinite(p)) throw std::domain_error("otimes evaluated at a non-finite p");
    if (p < 1.0) throw std::domain_error("otimes evaluated at p < 1");
    OtimesResult res;
    const SupportInterval& d1 = nu1.finite_domain();
    const SupportInterval& d2 = nu2.finite_domain();
    const double s1 = p / d1.upper + p / d2.upper;
    if (s1 > 1.0 || (s1 == 1.0 && !(d1.upper_closed && d2.upper_closed))) return res;

    // a = 1/2 + t, b = 1/2 - t; the bounds below are mirror images under swapping.
    double a_min = min_share(p, d1);
    double b_min = min_share(p, d2);
    a_min = std::max(a_min, 1.0 - p / d2.lower);
    b_min = std::max(b_min, 1.0 - p / d1.lower);
    const double t_lo = a_min - 0.5;
    const double t_hi = 0.5 - b_min;
    if (t_lo > t_hi) return res;

    auto f = [&](double t) { return eval_at(nu1, p / (0.5 + t)) * eval_at(nu2, p / (0.5 - t)); };
    MinimizeResult best;
    if (t_lo == t_hi) {
        best.x = t_lo;
        best.fx = f(t_lo);
        best.evaluations = 1;
    } else {
        best = scan_then_golden(f, t_lo, t_hi, scan_points, 1e-12);
    }
    res.a = 0.5 + best.x;
    res.value = best.fx;
    res.feasible = std::isfinite(best.fx);
    res.evaluations = best.evaluations;
    return res;
}

double otimes(const MomentEnvelope& nu1, const MomentEnvelope& nu2, double p) {
    return otimes_detail(nu1, nu2, p).value;
}

double combined_exponent(const std::vector<double>& rs) {
    if (rs.empty()) throw std::invalid_argument("combined_exponent: no factors");
    double s = 0.0;
    for (double r : rs) {
        if (!(r > 0.0)) throw std::invalid_argument("combined_exponent: exponents must be positive");
        if (std::isfinite(r)) s += 1.0 / r;
    }
    return s == 0.0 ? kInf : 1.0 / s;
}

double combined_exponent(const std::vector<MomentEnvelope>& envs) {
    std::vector<double> rs;
    rs.reserve(envs.size());
    for (const auto& e : envs) rs.push_back(e.finite_domain().upper);
    return combined_exponent(rs);
}

namespace {

struct StageRange {
    double hi;
    SupportInterval declared;
};

StageRange stage_range(double rc, bool closed, const ChainGrid& grid) {
    if (!(rc > 1.0)) {
        std::ostringstream os;
        os << "combined exponent r = " << rc << " must exceed 1";
        throw std::invalid_argument(os.str());
    }
    if (std::isinf(rc)) return {grid.unbounded_p_max, SupportInterval{1.0, kInf, false}};
    if (closed) return {rc, SupportInterval{1.0, rc, true}};
    double hi = rc * grid.edge_fraction;
    if (!(hi > 1.0)) hi = 1.0 + (rc - 1.0) * grid.edge_fraction;
    return {hi, SupportInterval{1.0, rc, false}};
}

}  // namespace

MomentEnvelope otimes_envelope(const MomentEnvelope& nu1, const MomentEnvelope& nu2, const ChainGrid& grid,
                               const std::function<double(double)>& weight) {
    const SupportInterval& d1 = nu1.finite_domain();
    const SupportInterval& d2 = nu2.finite_domain();
    const double rc = combined_exponent(std::vector<double>{d1.upper, d2.upper});
    const bool closed = d1.upper_closed && d2.upper_closed && std::isfinite(rc);
    const StageRange range = stage_range(rc, closed, grid);

    std::vector<double> nodes = chebyshev_grid(1.0, range.hi, grid.nodes);
    std::vector<double> extra;
    for (double p : grid.extra_points)
        if (p >= 1.0 && p <= range.hi) extra.push_back(p);
    std::sort(extra.begin(), extra.end());
    nodes = merge_grids(nodes, extra);

    std::vector<double> ps, vals;
    ps.reserve(nodes.size());
    vals.reserve(nodes.size());
    for (double p : nodes) {
        double v = otimes(nu1, nu2, p);
        if (weight && std::isfinite(v)) v *= weight(p);
        if (std::isfinite(v) && v > 0.0) {
            ps.push_back(p);
            vals.push_back(v);
        }
    }
    if (ps.empty()) throw std::domain_error("otimes_envelope: composition is infinite on the whole range");
    return MomentEnvelope::tabulated(std::move(ps), std::move(vals), range.declared);
}

MomentEnvelope otimes_chain(const std::vector<MomentEnvelope>& envs, const ChainGrid& grid) {
    if (envs.empty()) throw std::invalid_argument("otimes_chain: empty list");
    const double rc = combined_exponent(envs);
    if (!(rc > 1.0)) throw std::invalid_argument("otimes_chain: combined exponent must exceed 1");
    MomentEnvelope acc = envs.front();
    for (std::size_t i = 1; i < envs.size(); ++i) acc = otimes_envelope(acc, envs[i], grid);
    return acc;
}

// ---------------------------------------------------------------------------
// Zeta chains

ZetaChain zeta_chain(const DependenceRegime& regime, const std::vector<MomentEnvelope>& nus,
                     const GrowthConstant& km, const GrowthConstant& ki, const ChainGrid& grid) {
    if (nus.empty()) throw std::invalid_argument("zeta_chain: no input envelopes");
    ZetaChain chain;
    chain.regime = regime;
    chain.inputs = nus;
    chain.km = km;
    chain.ki = ki;
    chain.combined_r = combined_exponent(nus);
    if (!(chain.combined_r > 1.0)) {
        std::ostringstream os;
        os << "combined exponent r = (sum 1/r_m)^(-1) = " << chain.combined_r << " must exceed 1";
        throw std::invalid_argument(os.str());
    }

    const int d = static_cast<int>(nus.size());
    std::vector<int> order(d);
    for (int k = 0; k < d; ++k) order[k] = regime.direction == Direction::Forward ? k : d - 1 - k;

    const bool starts_independent =
        regime.tag == Regime::CommonIndependent || regime.tag == Regime::InsideIndependent;
    const bool composes = regime.tag == Regime::Martingale || regime.tag == Regime::InsideIndependent;
    const GrowthConstant first_k = starts_independent ? ki : km;
    auto km_fn = [km](double p) { return km(p); };

    std::vector<double> processed;
    for (int k = 0; k < d; ++k) {
        const int m = order[k];
        const MomentEnvelope& nu = nus[m];
        processed.push_back(nu.finite_domain().upper);
        if (k == 0) {
            chain.stages.push_back(
                MomentEnvelope::weighted(nu, [first_k](double p) { return first_k(p); }, first_k.describe()));
        } else if (composes) {
            chain.stages.push_back(otimes_envelope(chain.stages.back(), nu, grid, km_fn));
        } else {
            chain.stages.push_back(
                MomentEnvelope::weighted(MomentEnvelope::product({chain.stages.back(), nu}), km_fn, km.describe()));
        }
        chain.stage_factor.push_back(m + 1);
        chain.partial_r.push_back(combined_exponent(processed));
    }

    for (double p : grid.extra_points) {
        if (p < 1.0 || !std::isfinite(chain.bound()(p)))
            throw SupportExceeded("support exceeded: grid point outside the bound's support");
    }
    return chain;
}

double explicit_product_bound(Regime tag, const std::vector<MomentEnvelope>& nus, double p,
                              const GrowthConstant& km, const GrowthConstant& ki) {
    if (nus.empty()) throw std::invalid_argument("explicit_product_bound: no input envelopes");
    const double d = static_cast<double>(nus.size());
    double v;
    if (tag == Regime::CommonIndependent) v = ki(p) * std::pow(km(p), d - 1.0);
    else if (tag == Regime::VectorIndependent) v = std::pow(km(p), d);
    else throw std::invalid_argument("explicit_product_bound: regime has no product solution");
    for (const auto& nu : nus) v *= nu(p);
    return v;
}

// ---------------------------------------------------------------------------
// Derived envelopes

DominantEnvelope polynomial_dominant_envelope(const std::vector<TailParameters>& tails, int d, double constant) {
    if (tails.empty()) throw std::invalid_argument("polynomial_dominant_envelope: no tail parameters");
    if (d < 1) throw std::invalid_argument("polynomial_dominant_envelope: d must be >= 1");
    double r_min = kInf;
    for (const auto& t : tails) r_min = std::min(r_min, t.r);
    if (!(r_min > d)) throw std::invalid_argument("polynomial_dominant_envelope: requires min r > d");
    double gamma_bar = -kInf;
    for (const auto& t : tails)
        if (t.r == r_min) gamma_bar = std::max(gamma_bar, t.gamma);
    std::vector<SlowlyVarying> ls;
    for (const auto& t : tails)
        if (t.r == r_min && t.gamma == gamma_bar) ls.push_back(t.L);
    SlowlyVarying lbar = ls.front();
    if (ls.size() > 1) {
        lbar = SlowlyVarying::custom(
            [ls](double x) {
                double v = 0.0;
                for (const auto& l : ls) v = std::max(v, l(x));
                return v;
            },
            "max L");
    }
    const double edge = r_min / d;
    DominantEnvelope out{MomentEnvelope::root_singularity(constant, edge, gamma_bar + 1.0, lbar), edge, gamma_bar,
                         constant, true};
    return out;
}

MomentEnvelope doob_maximal_envelope(const MomentEnvelope& zeta) {
    return MomentEnvelope::weighted(
        zeta,
        [](double p) {
            if (!(p > 1.0)) throw std::domain_error("Doob factor requires p > 1");
            return p / (p - 1.0);
        },
        "p/(p-1)");
}

GoodLambdaEnvelope good_lambda_envelope(const MomentEnvelope& psi, double beta, double epsilon,
                                        double comparison_constant) {
    if (!(beta > 1.0)) throw std::invalid_argument("good-lambda: beta must exceed 1");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("good-lambda: epsilon must lie in (0, 1)");
    const double r = std::abs(std::log(epsilon) / std::log(beta));
    if (!(r > 1.0)) throw std::invalid_argument("good-lambda: r = |log eps / log beta| must exceed 1");
    MomentEnvelope corr = MomentEnvelope::power_singularity(1.0, r, 1.0 / r);
    return {MomentEnvelope::product({psi, corr}), r, comparison_constant};
}

AsymptoticOrder delta2_fast_path(const std::vector<MomentEnvelope>& envs) {
    if (envs.empty()) throw std::invalid_argument("delta2_fast_path: no factors");
    double c = 1.0, delta = 0.0;
    std::vector<double> rs;
    std::vector<SlowlyVarying> ls;
    bool constant_l = true;
    for (const auto& e : envs) {
        const auto* ps = std::get_if<form::PowerSingularity>(&e.form());
        if (!ps) throw std::invalid_argument("delta2_fast_path: every factor must be a PowerSingularity");
        c *= ps->c;
        delta += ps->delta;
        rs.push_back(ps->r);
        if (ps->L.kind() == SlowlyVarying::Kind::Constant) c *= ps->L.parameter();
        else {
            constant_l = false;
            ls.push_back(ps->L);
        }
    }
    SlowlyVarying L = SlowlyVarying::constant();
    if (!constant_l) {
        L = SlowlyVarying::custom(
            [ls](double x) {
                double v = 1.0;
                for (const auto& l : ls) v *= l(x);
                return v;
            },
            "prod L");
    }
    const double r = combined_exponent(rs);
    return {MomentEnvelope::power_singularity(c, r, delta, L), r, delta, "asymptotic-order result"};
}

std::vector<double> holder_weights(const std::vector<double>& rs) {
    const double r = combined_exponent(rs);
    std::vector<double> z(rs.size());
    for (std::size_t i = 0; i < rs.size(); ++i) {
        if (!std::isfinite(rs[i])) throw std::invalid_argument("holder_weights: exponents must be finite");
        z[i] = r / rs[i];
    }
    return z;
}

double holder_split_bound(const std::vector<MomentEnvelope>& envs, double p) {
    std::vector<double> rs;
    for (const auto& e : envs) rs.push_back(e.finite_domain().upper);
    const auto z = holder_weights(rs);
    double v = 1.0;
    for (std::size_t i = 0; i < envs.size(); ++i) {
        v *= eval_at(envs[i], p / z[i]);
        if (std::isinf(v)) return kInf;
    }
    return v;
}

}  // namespace polymart
