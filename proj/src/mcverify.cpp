#include "polymart/mcverify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <locale>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace polymart {

std::string statistic_name(Statistic s) {
    switch (s) {
        case Statistic::Q: return "Q";
        case Statistic::RunningMax: return "running_max";
        case Statistic::R: return "R";
        case Statistic::ReverseV: return "reverse_V";
    }
    return "Q";
}

Statistic parse_statistic(const std::string& s) {
    if (s == "Q") return Statistic::Q;
    if (s == "running_max") return Statistic::RunningMax;
    if (s == "R") return Statistic::R;
    if (s == "reverse_V") return Statistic::ReverseV;
    throw std::invalid_argument("unknown statistic '" + s + "'");
}

namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Maps (seed, replication) to one value per tensor for the plan's statistic.
class StatEngine {
public:
    StatEngine(const ExperimentPlan& plan, std::uint64_t seed, bool sweep)
        : stat_(plan.statistic), d_(plan.model.d), n_(plan.model.n), mult_(plan.multiplicities),
          sampler_(sampler_model(plan), seed) {
        const auto& b = plan.model.coefficients;
        if (stat_ == Statistic::ReverseV) {
            if (plan.window_start < 1 || plan.window_start > n_ - d_ + 1)
                throw std::invalid_argument("reverse window too small");
            add("model", b.restrict_window(plan.window_start, n_));
        } else {
            add("model", b);
        }
        if (stat_ == Statistic::R) {
            if (mult_.size() != static_cast<std::size_t>(d_))
                throw std::invalid_argument("statistic R needs one multiplicity per factor");
            for (int k : mult_)
                if (k < 1) throw std::invalid_argument("multiplicities must be >= 1");
            if (plan.model.regime.tag != Regime::CommonIndependent)
                throw std::invalid_argument("statistic R requires common independent inputs");
            for (int l = 0; l < d_; ++l) {
                centers_.push_back(plan.model.factors[l].raw_moment(mult_[l]));
                if (!std::isfinite(centers_.back())) throw std::domain_error("E xi^k is infinite");
            }
        }
        if (sweep) {
            add("uniform", CoefficientTensor::uniform(d_, n_).normalized());
            IndexTuple first(d_);
            std::iota(first.begin(), first.end(), 1);
            add("single", CoefficientTensor::single(d_, n_, first));
            for (std::size_t k = 0; k < plan.b_sweep; ++k)
                add("random_" + std::to_string(k), CoefficientTensor::random_unit(d_, n_, plan.seed, k));
        }
    }

    std::size_t tensors() const { return evals_.size(); }
    const std::string& label(std::size_t t) const { return labels_[t]; }

    void values(std::uint64_t rep, std::vector<double>& cells, std::vector<double>& scratch,
                std::vector<double>& out) const {
        sampler_.fill(rep, cells);
        if (stat_ == Statistic::ReverseV) {
            scratch.resize(cells.size());
            for (int i = 0; i < n_; ++i)
                for (int m = 0; m < d_; ++m)
                    scratch[static_cast<std::size_t>(i * d_ + m)] =
                        cells[static_cast<std::size_t>((n_ - 1 - i) * d_ + (d_ - 1 - m))];
            cells.swap(scratch);
        } else if (stat_ == Statistic::R) {
            for (std::size_t c = 0; c < cells.size(); ++c) {
                const std::size_t l = c % static_cast<std::size_t>(d_);
                cells[c] = std::pow(cells[c], mult_[l]) - centers_[l];
            }
        }
        out.resize(evals_.size());
        for (std::size_t t = 0; t < evals_.size(); ++t) {
            if (stat_ == Statistic::RunningMax) {
                evals_[t].partial_sums(cells, scratch);
                double mx = 0.0;
                for (double v : scratch) mx = std::max(mx, std::abs(v));
                out[t] = mx;
            } else {
                out[t] = evals_[t](cells);
            }
        }
    }

private:
    static PolynomialModel sampler_model(const ExperimentPlan& plan) {
        PolynomialModel m = plan.model;
        if (plan.statistic == Statistic::ReverseV) std::reverse(m.factors.begin(), m.factors.end());
        return m;
    }
    void add(std::string label, const CoefficientTensor& b) {
        labels_.push_back(std::move(label));
        evals_.emplace_back(b);
    }

    Statistic stat_;
    int d_, n_;
    std::vector<int> mult_;
    std::vector<double> centers_;
    CellSampler sampler_;
    std::vector<TensorEvaluator> evals_;
    std::vector<std::string> labels_;
};

struct Accumulated {
    std::size_t batches = 0;
    std::vector<std::size_t> batch_size;
    // [batch][tensor][p]
    std::vector<std::vector<std::vector<double>>> power;
    // [batch][x]
    std::vector<std::vector<double>> exceed;
};

Accumulated accumulate(const StatEngine& engine, std::size_t reps, const std::vector<double>& ps,
                       const std::vector<double>& xs, unsigned threads) {
    Accumulated acc;
    acc.batches = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(reps))));
    acc.batch_size.assign(acc.batches, 0);
    acc.power.assign(acc.batches, std::vector<std::vector<double>>(engine.tensors(), std::vector<double>(ps.size(), 0.0)));
    acc.exceed.assign(acc.batches, std::vector<double>(xs.size(), 0.0));
    parallel_ranges(acc.batches, resolve_threads(threads), [&](std::size_t first, std::size_t last) {
        std::vector<double> cells, scratch, vals;
        for (std::size_t b = first; b < last; ++b) {
            const std::size_t lo = b * reps / acc.batches;
            const std::size_t hi = (b + 1) * reps / acc.batches;
            acc.batch_size[b] = hi - lo;
            for (std::size_t r = lo; r < hi; ++r) {
                engine.values(r, cells, scratch, vals);
                for (std::size_t t = 0; t < vals.size(); ++t) {
                    const double a = std::abs(vals[t]);
                    for (std::size_t k = 0; k < ps.size(); ++k) acc.power[b][t][k] += std::pow(a, ps[k]);
                }
                const double a0 = std::abs(vals[0]);
                for (std::size_t j = 0; j < xs.size(); ++j)
                    if (a0 >= xs[j]) acc.exceed[b][j] += 1.0;
            }
        }
    });
    return acc;
}

MomentEstimate estimate(const Accumulated& acc, std::size_t reps, std::size_t t, std::size_t k, double p) {
    std::vector<double> means(acc.batches);
    double total = 0.0;
    for (std::size_t b = 0; b < acc.batches; ++b) {
        total += acc.power[b][t][k];
        means[b] = acc.power[b][t][k] / static_cast<double>(acc.batch_size[b]);
    }
    double unused = 0.0, se = 0.0;
    batch_mean_stats(means, unused, se);
    return norm_from_power_mean(total / static_cast<double>(reps), se, p, acc.batches);
}

std::pair<double, double> tail_estimate(const Accumulated& acc, std::size_t reps, std::size_t j) {
    std::vector<double> means(acc.batches);
    double total = 0.0;
    for (std::size_t b = 0; b < acc.batches; ++b) {
        total += acc.exceed[b][j];
        means[b] = acc.exceed[b][j] / static_cast<double>(acc.batch_size[b]);
    }
    double unused = 0.0, se = 0.0;
    batch_mean_stats(means, unused, se);
    return {total / static_cast<double>(reps), se};
}

MomentRow make_row(double p, const MomentEstimate& est, double bound, const std::string& label) {
    MomentRow row;
    row.p = p;
    row.empirical = est.value;
    row.stderr = est.stderr;
    row.bound = bound;
    row.ratio = bound > 0.0 ? est.value / bound : kInf;
    row.pass = !(est.value - 2.0 * est.stderr > bound);
    row.tensor = label;
    return row;
}

}  // namespace

std::vector<double> sample_statistic(const ExperimentPlan& plan, std::uint64_t seed, std::size_t replications) {
    const StatEngine engine(plan, seed, false);
    std::vector<double> out(replications);
    parallel_ranges(replications, resolve_threads(plan.threads), [&](std::size_t first, std::size_t last) {
        std::vector<double> cells, scratch, vals;
        for (std::size_t r = first; r < last; ++r) {
            engine.values(r, cells, scratch, vals);
            out[r] = vals[0];
        }
    });
    return out;
}

VerificationReport run_experiment(const ExperimentPlan& plan) {
    const auto start = std::chrono::steady_clock::now();
    plan.model.validate();
    if (!plan.bound) throw std::invalid_argument("experiment plan has no bound envelope");
    if (plan.p_grid.empty()) throw std::invalid_argument("experiment plan has an empty p grid");
    if (plan.replications < plan.min_replications)
        throw std::invalid_argument("replication count below the minimum of " + std::to_string(plan.min_replications));
    if (!(plan.bound_scale > 0.0)) throw std::invalid_argument("bound scale must be positive");

    const MomentEnvelope base_bound = plan.bound_scale == 1.0 ? *plan.bound
                                                              : MomentEnvelope::scaled(*plan.bound, plan.bound_scale);
    VerificationReport rep;
    rep.experiment = statistic_name(plan.statistic);
    rep.regime = plan.model.regime.name();
    rep.sharing = sharing_name(plan.model.sharing) + (plan.model.modulator ? "+modulator" : "");
    rep.bound_label = plan.bound_label.empty() ? base_bound.describe() : plan.bound_label;
    rep.d = plan.model.d;
    rep.n = plan.model.n;
    rep.replications = plan.replications;
    rep.seed = plan.seed;
    rep.constants = plan.constants;
    if (plan.bound_scale != 1.0) {
        std::ostringstream os;
        os.imbue(std::locale::classic());
        os << std::setprecision(17) << plan.bound_scale;
        rep.constants["bound_scale"] = os.str();
    }

    std::vector<double> bounds;
    const double support_upper = base_bound.finite_domain().upper;
    for (double p : plan.p_grid) {
        const double v = base_bound(p);
        if (!std::isfinite(v)) {
            std::ostringstream os;
            os << "support exceeded: bound is infinite at p = " << p;
            throw SupportExceeded(os.str());
        }
        bounds.push_back(v);
        if (p > 0.8 * support_upper) {
            std::ostringstream os;
            os << "p = " << p << " exceeds 0.8 of the bound's support; estimates are high variance";
            rep.warnings.push_back(os.str());
        }
    }

    const bool sweep = plan.b_sweep > 0;
    if (sweep && (plan.statistic == Statistic::R || plan.statistic == Statistic::ReverseV))
        throw std::invalid_argument("coefficient sweeps apply to Q and running_max only");
    const StatEngine engine(plan, plan.seed, sweep);
    const Accumulated acc = accumulate(engine, plan.replications, plan.p_grid, plan.x_grid, plan.threads);

    std::vector<MomentEstimate> main_est;
    for (std::size_t k = 0; k < plan.p_grid.size(); ++k)
        main_est.push_back(estimate(acc, plan.replications, 0, k, plan.p_grid[k]));

    std::size_t p0 = 0;
    for (std::size_t k = 1; k < plan.p_grid.size(); ++k)
        if (plan.p_grid[k] < plan.p_grid[p0]) p0 = k;
    if (plan.fit_moment_constant && main_est[p0].value > 0.0) {
        rep.moment_constant = std::pow(main_est[p0].value / bounds[p0], plan.p_grid[p0]);
        rep.moment_constant_fitted = true;
        for (std::size_t k = 0; k < bounds.size(); ++k)
            bounds[k] *= std::pow(rep.moment_constant, 1.0 / plan.p_grid[k]);
    }

    for (std::size_t k = 0; k < plan.p_grid.size(); ++k) {
        MomentRow row = make_row(plan.p_grid[k], main_est[k], bounds[k], "model");
        row.high_variance = plan.p_grid[k] > 0.5 * support_upper;
        rep.moments.push_back(row);
    }

    if (sweep) {
        for (std::size_t t = 0; t < engine.tensors(); ++t) rep.sweep_ratios[engine.label(t)] = {};
        for (std::size_t k = 0; k < plan.p_grid.size(); ++k) {
            MomentRow best;
            bool have = false;
            for (std::size_t t = 0; t < engine.tensors(); ++t) {
                const MomentEstimate e = estimate(acc, plan.replications, t, k, plan.p_grid[k]);
                MomentRow row = make_row(plan.p_grid[k], e, bounds[k], engine.label(t));
                rep.sweep_ratios[engine.label(t)].push_back(row.ratio);
                if (!have || row.empirical > best.empirical) {
                    best = row;
                    have = true;
                }
            }
            rep.sweep.push_back(best);
        }
    }

    if (!plan.x_grid.empty()) {
        const ConjugateSpec spec = ConjugateSpec::with_default_grid(base_bound, plan.tail_norm_factor);
        auto tail = [&spec](double x) { return tail_inf_form(spec, x); };
        std::vector<std::pair<double, double>> emp;
        for (std::size_t j = 0; j < plan.x_grid.size(); ++j) emp.push_back(tail_estimate(acc, plan.replications, j));
        std::size_t j0 = 0;
        for (std::size_t j = 1; j < plan.x_grid.size(); ++j)
            if (plan.x_grid[j] < plan.x_grid[j0]) j0 = j;
        rep.x_rescale = plan.x_rescale;
        if (plan.fit_tail_rescale) {
            if (emp[j0].first > 0.0) {
                rep.x_rescale = fit_tail_rescale(tail, plan.x_grid[j0], emp[j0].first);
                rep.x_rescale_fitted = true;
                rep.tail_checks_hard = true;
            } else {
                rep.warnings.push_back("no exceedances at the smallest x; tail rescale not fitted");
            }
        }
        std::size_t j = 0;
        const DominanceReport dom = dominance_check(
            tail, [&](double) { return emp[j++]; }, plan.x_grid, rep.x_rescale);
        for (const auto& r : dom.rows) rep.tails.push_back({r.x, r.empirical, r.stderr, r.bound, r.pass});
    }

    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

VerificationReport doob_experiment(const ExperimentPlan& plan) {
    if (!plan.bound) throw std::invalid_argument("experiment plan has no bound envelope");
    for (double p : plan.p_grid)
        if (!(p > 1.0)) throw std::invalid_argument("Doob experiment needs p > 1");
    ExperimentPlan doob = plan;
    doob.statistic = Statistic::RunningMax;
    doob.bound = doob_maximal_envelope(*plan.bound);
    if (doob.bound_label.empty()) doob.bound_label = "p/(p-1) * " + plan.bound->describe();
    else doob.bound_label = "p/(p-1) * " + plan.bound_label;
    return run_experiment(doob);
}

// ---------------------------------------------------------------------------
// Report serialization

namespace {

nlohmann::json num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

nlohmann::json moment_rows(const std::vector<MomentRow>& rows) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : rows) {
        out.push_back({{"p", num(r.p)},
                       {"empirical", num(r.empirical)},
                       {"stderr", num(r.stderr)},
                       {"bound", num(r.bound)},
                       {"ratio", num(r.ratio)},
                       {"pass", r.pass},
                       {"high_variance", r.high_variance},
                       {"tensor", r.tensor}});
    }
    return out;
}

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << std::setprecision(17) << v;
    return os.str();
}

}  // namespace

bool VerificationReport::moments_pass() const {
    for (const auto& r : moments)
        if (!r.pass) return false;
    for (const auto& r : sweep)
        if (!r.pass) return false;
    return true;
}

bool VerificationReport::tails_pass() const {
    for (const auto& r : tails)
        if (!r.pass) return false;
    return true;
}

bool VerificationReport::pass() const { return moments_pass() && (!tail_checks_hard || tails_pass()); }

nlohmann::json VerificationReport::to_json(bool include_timing) const {
    nlohmann::json j;
    j["schema"] = "polymart.report/1";
    j["experiment"] = experiment;
    j["regime"] = regime;
    j["sharing"] = sharing;
    j["bound"] = bound_label;
    j["d"] = d;
    j["n"] = n;
    j["replications"] = replications;
    j["seed"] = seed;
    j["constants"] = constants;
    j["warnings"] = warnings;
    j["moment_constant"] = {{"value", num(moment_constant)}, {"fitted", moment_constant_fitted}};
    j["x_rescale"] = {{"value", num(x_rescale)}, {"fitted", x_rescale_fitted}, {"hard", tail_checks_hard}};
    j["moments"] = moment_rows(moments);
    j["sweep"] = moment_rows(sweep);
    nlohmann::json ratios = nlohmann::json::object();
    for (const auto& [label, vals] : sweep_ratios) {
        nlohmann::json arr = nlohmann::json::array();
        for (double v : vals) arr.push_back(num(v));
        ratios[label] = arr;
    }
    j["sweep_ratios"] = ratios;
    nlohmann::json tl = nlohmann::json::array();
    for (const auto& r : tails)
        tl.push_back({{"x", num(r.x)},
                      {"empirical", num(r.empirical)},
                      {"stderr", num(r.stderr)},
                      {"bound", num(r.bound)},
                      {"pass", r.pass}});
    j["tails"] = tl;
    j["moments_pass"] = moments_pass();
    j["tails_pass"] = tails_pass();
    j["pass"] = pass();
    if (include_timing) j["wall_seconds"] = wall_seconds;
    if (!config.is_null()) j["config"] = config;
    return j;
}

std::string VerificationReport::moments_csv() const {
    std::string out = "p,empirical,stderr,bound,ratio,pass\n";
    for (const auto* rows : {&moments, &sweep})
        for (const auto& r : *rows)
            out += fmt(r.p) + "," + fmt(r.empirical) + "," + fmt(r.stderr) + "," + fmt(r.bound) + "," + fmt(r.ratio) +
                   "," + (r.pass ? "1" : "0") + "\n";
    return out;
}

std::string VerificationReport::tails_csv() const {
    std::string out = "x,empirical,stderr,bound,pass\n";
    for (const auto& r : tails)
        out += fmt(r.x) + "," + fmt(r.empirical) + "," + fmt(r.stderr) + "," + fmt(r.bound) + "," +
               (r.pass ? "1" : "0") + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Enumeration oracles

namespace {

template <class Stat>
std::vector<double> enumerate_model(const PolynomialModel& model, const std::vector<double>& p_list, Stat stat) {
    model.validate();
    const int n = model.n, d = model.d;
    if (model.sharing == Sharing::Diagonal) throw std::invalid_argument("brute force: diagonal sharing unsupported");
    std::vector<std::vector<std::pair<double, double>>> factor_atoms;
    for (const auto& f : model.factors) {
        if (!f.finite_support()) throw std::invalid_argument("brute force needs finitely supported inputs");
        factor_atoms.push_back(f.atoms());
    }
    const bool coincident = model.sharing == Sharing::Coincident;
    if (coincident) {
        for (const auto& a : factor_atoms)
            if (a != factor_atoms[0]) throw std::invalid_argument("brute force: coincident cells need one common law");
    }
    // Independent base cells and the atoms each one ranges over.
    const int base = coincident ? n : n * d;
    std::vector<const std::vector<std::pair<double, double>>*> choices(static_cast<std::size_t>(base));
    double states = 1.0;
    for (int c = 0; c < base; ++c) {
        choices[c] = &factor_atoms[coincident ? 0 : c % d];
        states *= static_cast<double>(choices[c]->size());
    }
    if (states > 16777216.0) throw std::invalid_argument("brute force: state space exceeds 2^24");

    std::vector<std::size_t> idx(static_cast<std::size_t>(base), 0);
    std::vector<double> cells(static_cast<std::size_t>(n * d));
    std::vector<double> sums(p_list.size(), 0.0);
    const TensorEvaluator eval(model.coefficients);
    std::vector<double> scratch;
    while (true) {
        double w = 1.0;
        for (int c = 0; c < base; ++c) w *= (*choices[c])[idx[c]].second;
        if (w > 0.0) {
            for (int i = 0; i < n; ++i)
                for (int m = 0; m < d; ++m) {
                    const int c = coincident ? i : i * d + m;
                    cells[static_cast<std::size_t>(i * d + m)] = (*choices[c])[idx[c]].first;
                }
            if (model.modulator) apply_modulator(cells, n, d, model.modulator_strength);
            const double v = std::abs(stat(eval, cells, scratch));
            for (std::size_t k = 0; k < p_list.size(); ++k) sums[k] += w * std::pow(v, p_list[k]);
        }
        int c = 0;
        while (c < base && ++idx[c] == choices[c]->size()) {
            idx[c] = 0;
            ++c;
        }
        if (c == base) break;
    }
    return sums;
}

}  // namespace

std::vector<double> brute_force_moments(const PolynomialModel& model, const std::vector<double>& p_list) {
    return enumerate_model(model, p_list, [](const TensorEvaluator& e, const std::vector<double>& cells,
                                             std::vector<double>&) { return e(cells); });
}

std::vector<double> brute_force_running_max(const PolynomialModel& model, const std::vector<double>& p_list) {
    return enumerate_model(model, p_list,
                           [](const TensorEvaluator& e, const std::vector<double>& cells, std::vector<double>& s) {
                               e.partial_sums(cells, s);
                               double mx = 0.0;
                               for (double v : s) mx = std::max(mx, std::abs(v));
                               return mx;
                           });
}

// ---------------------------------------------------------------------------
// Convergence diagnostics

ConvergenceReport convergence_diagnostics(const Sampler& sampler, double p, const std::vector<std::size_t>& schedule,
                                          std::uint64_t seed, std::size_t repeats, double threshold) {
    if (schedule.empty()) throw std::invalid_argument("convergence_diagnostics: empty schedule");
    for (std::size_t i = 1; i < schedule.size(); ++i)
        if (schedule[i] <= schedule[i - 1]) throw std::invalid_argument("convergence_diagnostics: schedule must increase");
    repeats = std::max<std::size_t>(1, repeats);
    ConvergenceReport rep;
    rep.p = p;
    rep.threshold = threshold;
    for (std::size_t s = 0; s < schedule.size(); ++s) {
        std::vector<double> logs;
        for (std::size_t k = 0; k < repeats; ++k) {
            const std::uint64_t sd = splitmix(seed ^ splitmix(s * 1000003ull + k));
            const auto xs = sampler(sd, schedule[s]);
            double total = 0.0;
            for (double x : xs) total += std::pow(std::abs(x), p);
            logs.push_back(std::log(total / static_cast<double>(xs.size())));
        }
        std::sort(logs.begin(), logs.end());
        auto quantile = [&](double q) {
            const double pos = q * static_cast<double>(logs.size() - 1);
            const std::size_t lo = static_cast<std::size_t>(pos);
            const std::size_t hi = std::min(lo + 1, logs.size() - 1);
            return logs[lo] + (pos - static_cast<double>(lo)) * (logs[hi] - logs[lo]);
        };
        ConvergenceRow row;
        row.replications = schedule[s];
        row.log_power_mean = quantile(0.5);
        row.estimate = std::exp(row.log_power_mean / p);
        row.spread = quantile(0.75) - quantile(0.25);
        rep.rows.push_back(row);
    }
    if (rep.rows.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double m = static_cast<double>(rep.rows.size());
        for (const auto& r : rep.rows) {
            const double x = std::log(static_cast<double>(r.replications));
            sx += x;
            sy += r.log_power_mean;
            sxx += x * x;
            sxy += x * r.log_power_mean;
        }
        rep.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        rep.monotone = true;
        for (std::size_t i = 1; i < rep.rows.size(); ++i)
            if (!(rep.rows[i].log_power_mean > rep.rows[i - 1].log_power_mean)) rep.monotone = false;
    }
    rep.drift = rep.slope > threshold;
    return rep;
}

ConvergenceReport convergence_diagnostics(const PolynomialModel& model, double p,
                                          const std::vector<std::size_t>& schedule, std::uint64_t seed,
                                          std::size_t repeats, double threshold) {
    ExperimentPlan plan;
    plan.model = model;
    plan.threads = 1;
    Sampler sampler = [plan](std::uint64_t sd, std::size_t count) { return sample_statistic(plan, sd, count); };
    return convergence_diagnostics(sampler, p, schedule, seed, repeats, threshold);
}

std::vector<MomentEnvelope> natural_inputs(const PolynomialModel& model) {
    std::vector<MomentEnvelope> out;
    for (const auto& f : model.factors) {
        MomentEnvelope e = f.natural_envelope();
        if (model.modulator) e = MomentEnvelope::scaled(e, model.modulator_bound());
        out.push_back(e);
    }
    return out;
}

}  // namespace polymart
