#pragma once

// Index sets, coefficient tensors, input distributions and samplers for the
// polynomial forms Q_d, V_d (reverse window) and R_d (with multiplicities).

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "polymart/calculus.hpp"
#include "polymart/envelope.hpp"
#include "polymart/rng.hpp"

namespace polymart {

using IndexTuple = std::vector<int>;  // 1-based, strictly increasing

/// All strictly increasing d-tuples in {1..n}, lexicographic. With last_fixed = k
/// only tuples ending in k are produced.
std::vector<IndexTuple> enumerate_indices(int d, int n, std::optional<int> last_fixed = std::nullopt);
std::uint64_t binomial(int n, int k);

class CoefficientTensor {
public:
    CoefficientTensor(int d, int n);

    static CoefficientTensor uniform(int d, int n);
    static CoefficientTensor single(int d, int n, const IndexTuple& index, double value = 1.0);
    /// Uniform on the unit sphere of the C(n,d)-dimensional coefficient space.
    static CoefficientTensor random_unit(int d, int n, std::uint64_t seed, std::uint64_t stream);

    void set(const IndexTuple& index, double value);
    double get(const IndexTuple& index) const;
    int d() const noexcept { return d_; }
    int n() const noexcept { return n_; }
    const std::map<IndexTuple, double>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }

    double sum_squares() const;
    bool is_normalized(double tol = 1e-12) const;
    CoefficientTensor normalized() const;
    CoefficientTensor scaled(double factor) const;
    /// Entries with lo <= i_1 and i_d <= hi.
    CoefficientTensor restrict_window(int lo, int hi) const;
    /// Every tuple present with one common value.
    std::optional<double> constant_full_value() const;

private:
    void check(const IndexTuple& index) const;
    int d_, n_;
    std::map<IndexTuple, double> entries_;
};

/// sum_I b(I)^2 prod_m sigma(i_m, m)^2 with sigma[i-1][m-1].
double variance_of_Q(const CoefficientTensor& b, const std::vector<std::vector<double>>& sigma);

class InputDistribution {
public:
    enum class Kind {
        ParetoPower,
        LogPerturbedPareto,
        LogPowerOnly,
        DoubleExpDiscrete,
        Weibull,
        Rademacher,
        Discrete,
        Custom
    };

    /// eps^(1/r1) with P(eps > x) = 1/x.
    static InputDistribution pareto_power(double r1);
    /// omega^(-1/r) |log omega|^kappa L(|log omega|), omega uniform.
    static InputDistribution log_perturbed_pareto(double r, double kappa, SlowlyVarying L = SlowlyVarying::constant());
    /// |log omega|^mu.
    static InputDistribution log_power_only(double mu);
    /// P(zeta = exp(e^k)) proportional to exp(beta r k - r e^k), k >= 1.
    static InputDistribution double_exp_discrete(double r, double beta);
    /// P(X > x) = exp(-c x^alpha).
    static InputDistribution weibull(double c, double alpha);
    static InputDistribution rademacher();
    static InputDistribution discrete(std::vector<double> atoms, std::vector<double> probs);
    /// Quantile-type map u -> value for u uniform on (0, 1).
    static InputDistribution custom(std::function<double(double)> quantile, std::string label);

    /// Subtract the mean of the base law.
    InputDistribution centered() const;
    /// Multiply by an independent random sign.
    InputDistribution symmetrized() const;
    InputDistribution scaled(double factor) const;

    Kind kind() const noexcept { return kind_; }
    bool is_centered() const noexcept { return centered_; }
    bool is_symmetric() const noexcept { return symmetric_; }
    double scale() const noexcept { return scale_; }
    const std::vector<double>& parameters() const noexcept { return params_; }
    std::string describe() const;

    /// Base draw for a uniform u in (0, 1), before centering, sign and scale.
    double base_quantile(double u) const;
    /// Final value from a value uniform and a sign uniform.
    double transform(double u, double u_sign) const;

    double base_mean() const;
    /// E|X|^p of the final law; +inf when infinite.
    double abs_moment(double p) const;
    /// E X^k of the final law for integer k >= 1.
    double raw_moment(int k) const;
    double variance() const;
    /// Largest finite moment order (inf for light tails).
    double moment_index() const;

    bool finite_support() const noexcept;
    /// Final atoms and probabilities (finite support only; a sign doubles the atoms).
    std::vector<std::pair<double, double>> atoms() const;

    /// p -> |X|_p tabulated on the grid, declared support [1, moment index).
    MomentEnvelope natural_envelope(const std::vector<double>& grid) const;
    /// Same on Chebyshev nodes of [1, min(0.999 r, p_max)].
    MomentEnvelope natural_envelope(std::size_t nodes = 129, double p_max = 64.0) const;

    /// True when the base law has an explicit quantile (all kinds except Custom).
    bool closed_form_quantile() const noexcept { return kind_ != Kind::Custom; }

private:
    Kind kind_ = Kind::Rademacher;
    std::vector<double> params_;
    SlowlyVarying L_;
    std::function<double(double)> quantile_;
    std::string label_;
    std::vector<double> atoms_, probs_, cumulative_;
    bool centered_ = false;
    bool symmetric_ = false;
    double shift_ = 0.0;
    double scale_ = 1.0;
};

enum class Sharing {
    Independent,  ///< every cell (i, m) has its own stream
    Coincident,   ///< xi(i, m) built from the stream of cell (i, 1)
    Diagonal      ///< xi(i, m) = fresh sign * base draw number i - m + 1
};

std::string sharing_name(Sharing s);
Sharing parse_sharing(const std::string& s);

struct PolynomialModel {
    int d = 1;
    int n = 1;
    CoefficientTensor coefficients{1, 1};
    DependenceRegime regime;
    std::vector<InputDistribution> factors;  ///< one per m = 1..d
    Sharing sharing = Sharing::Independent;
    /// xi(i, m) = eta(i, m) w_i with w_i = 1 + strength * (mean sign of all earlier cells).
    bool modulator = false;
    double modulator_strength = 0.5;

    /// Throws std::invalid_argument on inconsistent fields or regime/sharing combinations.
    void validate() const;
    /// Upper bound of the modulator, 1 + strength (1 without modulator).
    double modulator_bound() const { return modulator ? 1.0 + modulator_strength : 1.0; }
};

/// Deterministic map (seed, replication) -> cells xi(i, m), stored at (i-1) d + (m-1).
class CellSampler {
public:
    CellSampler(const PolynomialModel& model, std::uint64_t seed);
    void fill(std::uint64_t replication, std::vector<double>& cells) const;
    const PolynomialModel& model() const noexcept { return model_; }

private:
    PolynomialModel model_;
    Philox4x32 rng_;
};

/// Applies the past-sign modulator in place to cells laid out as in CellSampler.
void apply_modulator(std::vector<double>& cells, int n, int d, double strength);

/// Evaluates sum_I b(I) prod_m cells(i_m, m). A tensor holding every tuple with one
/// common value uses the prefix recursion S_m(k) = S_m(k-1) + xi(k, m) S_(m-1)(k-1).
class TensorEvaluator {
public:
    explicit TensorEvaluator(const CoefficientTensor& b);
    double operator()(const std::vector<double>& cells) const;
    /// Partial sums Q(d, k, b), k = 1..n.
    void partial_sums(const std::vector<double>& cells, std::vector<double>& out) const;
    bool uses_prefix_path() const noexcept { return uniform_; }

private:
    int d_, n_;
    bool uniform_ = false;
    double value_ = 0.0;
    std::vector<std::uint32_t> offsets_;  // d per entry
    std::vector<double> coefs_;
    std::vector<int> last_;
};

/// Runs `body(first, last)` over [0, count) split across `threads` workers.
void parallel_ranges(std::size_t count, unsigned threads,
                     const std::function<void(std::size_t, std::size_t)>& body);
/// Worker count: explicit value, else POLYMART_THREADS, else hardware concurrency.
unsigned resolve_threads(unsigned requested);

std::vector<double> sample_Q(const PolynomialModel& model, std::uint64_t seed, std::size_t replications,
                             unsigned threads = 1);

/// Arbitrary centered polynomial with multiplicities k(l), l = 1..L, sum k(l) = d:
/// sum_I b(I) prod_l [xi(i_l, l)^k(l) - E xi(i_l, l)^k(l)]. The tensor has dimension L.
std::vector<double> sample_R(const PolynomialModel& model, const std::vector<int>& multiplicities,
                             std::uint64_t seed, std::size_t replications, unsigned threads = 1);

/// Reverse-window form over n_start <= i_1 < ... < i_d <= N (N = model.n), built from
/// forward cells of the factor-reversed model on reversed time.
std::vector<double> sample_reverse_V(const PolynomialModel& model, std::uint64_t seed, std::size_t replications,
                                     int n_start, int N, unsigned threads = 1);

struct NormalizedModel {
    PolynomialModel model;  ///< standardized inputs, coefficients times prod sigma_m
    double q_scale = 1.0;   ///< sqrt Var(Q); Q-hat = Q / q_scale
};

NormalizedModel normalize_model(const PolynomialModel& model);

/// Standardized centered ParetoPower input used throughout the verification battery.
InputDistribution standardized_pareto(double r1);

/// Stratified estimate of E|X|^p: the lowest `tail_mass` of the value uniform is
/// integrated exactly, the rest by Monte Carlo with batch means.
MomentEstimate stratified_abs_moment(const InputDistribution& dist, double p, std::size_t samples,
                                     std::uint64_t seed, double tail_mass = 1e-3);

}  // namespace polymart
