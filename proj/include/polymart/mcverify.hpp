#pragma once

// Monte Carlo verification of envelope bounds, exact enumeration oracles and
// convergence diagnostics.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "polymart/polymodel.hpp"
#include "polymart/tails.hpp"

namespace polymart {

enum class Statistic {
    Q,           ///< Q_d
    RunningMax,  ///< max_k |Q(d, k, b)|
    R,           ///< polynomial with multiplicities
    ReverseV     ///< reverse window n_start..n
};

std::string statistic_name(Statistic s);
Statistic parse_statistic(const std::string& s);

struct ExperimentPlan {
    PolynomialModel model;
    Statistic statistic = Statistic::Q;
    std::vector<int> multiplicities;  ///< Statistic::R
    int window_start = 1;             ///< Statistic::ReverseV
    std::size_t replications = 100000;
    std::size_t min_replications = 1000;
    std::vector<double> p_grid;
    std::vector<double> x_grid;
    std::optional<MomentEnvelope> bound;
    std::string bound_label;
    /// Multiplies the bound before comparison (1 in every real check).
    double bound_scale = 1.0;
    /// Shape-only bounds: multiply by C^(1/p) with C making the bound tight at the smallest p.
    bool fit_moment_constant = false;
    double tail_norm_factor = 1.0;
    bool fit_tail_rescale = true;
    double x_rescale = 1.0;
    std::uint64_t seed = 1;
    /// Random unit tensors added to the uniform and single-tuple extremes.
    std::size_t b_sweep = 0;
    unsigned threads = 0;
    std::map<std::string, std::string> constants;
};

struct MomentRow {
    double p = 0.0;
    double empirical = 0.0;
    double stderr = 0.0;
    double bound = 0.0;
    double ratio = 0.0;
    bool pass = true;
    bool high_variance = false;
    std::string tensor = "model";
};

struct TailRow {
    double x = 0.0;
    double empirical = 0.0;
    double stderr = 0.0;
    double bound = 0.0;
    bool pass = true;
};

struct VerificationReport {
    std::string experiment;
    std::string regime;
    std::string sharing;
    std::string bound_label;
    int d = 0;
    int n = 0;
    std::size_t replications = 0;
    std::uint64_t seed = 0;
    double wall_seconds = 0.0;
    std::map<std::string, std::string> constants;
    std::vector<std::string> warnings;

    std::vector<MomentRow> moments;
    /// Per p, the largest empirical moment over the swept tensors.
    std::vector<MomentRow> sweep;
    /// Per p, every swept tensor's ratio (tensor label -> ratios in p order).
    std::map<std::string, std::vector<double>> sweep_ratios;
    std::vector<TailRow> tails;
    double moment_constant = 1.0;
    bool moment_constant_fitted = false;
    double x_rescale = 1.0;
    bool x_rescale_fitted = false;
    bool tail_checks_hard = false;

    nlohmann::json config;  ///< scenario that produced the report, when known

    bool moments_pass() const;
    bool tails_pass() const;
    /// All hard checks: moment rows, sweep rows, and tail rows when the rescale was fitted.
    bool pass() const;

    nlohmann::json to_json(bool include_timing = true) const;
    std::string moments_csv() const;
    std::string tails_csv() const;
};

VerificationReport run_experiment(const ExperimentPlan& plan);
/// Running maximum of the partial sums against the Doob-scaled bound.
VerificationReport doob_experiment(const ExperimentPlan& plan);

/// Samples of the plan's statistic, in replication order.
std::vector<double> sample_statistic(const ExperimentPlan& plan, std::uint64_t seed, std::size_t replications);

/// Exact E|Q|^p by enumeration of finitely supported inputs (at most 2^24 states).
std::vector<double> brute_force_moments(const PolynomialModel& model, const std::vector<double>& p_list);
/// Exact E max_k |Q(d, k, b)|^p.
std::vector<double> brute_force_running_max(const PolynomialModel& model, const std::vector<double>& p_list);

struct ConvergenceRow {
    std::size_t replications = 0;
    double estimate = 0.0;        ///< median over repeats of |X|_p
    double log_power_mean = 0.0;  ///< median over repeats of log mean |X|^p
    double spread = 0.0;          ///< interquartile range of the log power means
};

struct ConvergenceReport {
    double p = 0.0;
    std::vector<ConvergenceRow> rows;
    double slope = 0.0;  ///< least squares d log(power mean) / d log N
    double threshold = 0.0;
    bool monotone = false;
    bool drift = false;
};

using Sampler = std::function<std::vector<double>(std::uint64_t seed, std::size_t count)>;

ConvergenceReport convergence_diagnostics(const Sampler& sampler, double p, const std::vector<std::size_t>& schedule,
                                          std::uint64_t seed, std::size_t repeats = 9, double threshold = 0.12);
ConvergenceReport convergence_diagnostics(const PolynomialModel& model, double p,
                                          const std::vector<std::size_t>& schedule, std::uint64_t seed,
                                          std::size_t repeats = 9, double threshold = 0.12);

/// Natural envelope of each factor, scaled by the modulator bound.
std::vector<MomentEnvelope> natural_inputs(const PolynomialModel& model);

}  // namespace polymart
