#pragma once

// The infimal product composition of envelopes and the zeta recursions that
// bound polynomial martingale transforms.

#include <functional>
#include <string>
#include <vector>

#include "polymart/envelope.hpp"

namespace polymart {

enum class Regime { Martingale, CommonIndependent, InsideIndependent, VectorIndependent };
enum class Direction { Forward, Reverse };

struct DependenceRegime {
    Regime tag = Regime::Martingale;
    Direction direction = Direction::Forward;

    std::string name() const;
    /// Accepts "martingale", "common_independent", "inside_independent", "vector_independent".
    static Regime parse_tag(const std::string& s);
    static Direction parse_direction(const std::string& s);
    static std::string tag_name(Regime r);
    bool operator==(const DependenceRegime&) const = default;
};

/// K(p). Below p = 2 the built-in constants are held at their p = 2 values.
class GrowthConstant {
public:
    enum class Kind { MartingaleKM, IndependentKI, Custom };

    static GrowthConstant martingale();
    static GrowthConstant independent();
    static GrowthConstant custom(std::function<double(double)> fn, std::string label);

    double operator()(double p) const;
    Kind kind() const noexcept { return kind_; }
    std::string describe() const;

private:
    Kind kind_ = Kind::MartingaleKM;
    std::function<double(double)> fn_;
    std::string label_;
};

struct OtimesResult {
    double value = kInf;
    double a = 0.5;  ///< minimizing split; b = 1 - a
    bool feasible = false;
    std::size_t evaluations = 0;
};

/// inf over a + b = 1 of nu1(p / a) nu2(p / b).
OtimesResult otimes_detail(const MomentEnvelope& nu1, const MomentEnvelope& nu2, double p,
                           std::size_t scan_points = 64);
double otimes(const MomentEnvelope& nu1, const MomentEnvelope& nu2, double p);

/// (sum 1/r_m)^(-1); infinite r_m contribute nothing.
double combined_exponent(const std::vector<double>& rs);
double combined_exponent(const std::vector<MomentEnvelope>& envs);

struct ChainGrid {
    std::vector<double> extra_points;  ///< merged into the nodes when inside the stage range
    std::size_t nodes = 257;
    double edge_fraction = 0.999;
    double unbounded_p_max = 64.0;
};

/// nu1 (x) nu2 tabulated on Chebyshev nodes of its finite range.
MomentEnvelope otimes_envelope(const MomentEnvelope& nu1, const MomentEnvelope& nu2, const ChainGrid& grid = {},
                               const std::function<double(double)>& weight = {});

/// Left fold ((nu1 (x) nu2) (x) ...) (x) nu_d.
MomentEnvelope otimes_chain(const std::vector<MomentEnvelope>& envs, const ChainGrid& grid = {});

struct ZetaChain {
    DependenceRegime regime;
    std::vector<MomentEnvelope> inputs;
    /// Stages in processing order: zeta_1..zeta_d forward, zeta_d..zeta_1 reverse.
    std::vector<MomentEnvelope> stages;
    /// Factor index (1-based) processed at each stage.
    std::vector<int> stage_factor;
    /// Combined exponent of the factors processed up to each stage.
    std::vector<double> partial_r;
    double combined_r = kInf;
    GrowthConstant km = GrowthConstant::martingale();
    GrowthConstant ki = GrowthConstant::independent();

    const MomentEnvelope& bound() const { return stages.back(); }
};

ZetaChain zeta_chain(const DependenceRegime& regime, const std::vector<MomentEnvelope>& nus,
                     const GrowthConstant& km = GrowthConstant::martingale(),
                     const GrowthConstant& ki = GrowthConstant::independent(), const ChainGrid& grid = {});

/// Closed-form final stage for the product regimes:
/// CommonIndependent K_I K_M^(d-1) prod nu_m, VectorIndependent K_M^d prod nu_m.
double explicit_product_bound(Regime tag, const std::vector<MomentEnvelope>& nus, double p,
                              const GrowthConstant& km = GrowthConstant::martingale(),
                              const GrowthConstant& ki = GrowthConstant::independent());

struct TailParameters {
    double r = 0.0;
    double gamma = 0.0;
    SlowlyVarying L;
};

struct DominantEnvelope {
    MomentEnvelope envelope;
    double edge = 0.0;  ///< min r / d
    double gamma_bar = 0.0;
    double constant = 1.0;
    bool shape_only = true;
};

/// [C (r_min/d - p)^(-gamma_bar - 1) Lbar(1 / (r_min/d - p))]^(1/p) on [1, r_min/d).
DominantEnvelope polynomial_dominant_envelope(const std::vector<TailParameters>& tails, int d,
                                              double constant = 1.0);

/// zeta(p) p / (p - 1). Throws on evaluation at p <= 1.
MomentEnvelope doob_maximal_envelope(const MomentEnvelope& zeta);

struct GoodLambdaEnvelope {
    MomentEnvelope envelope;
    double r = 0.0;
    double comparison_constant = 1.0;  ///< ||X|| <= C ||Y||, unspecified and user supplied
};

/// psi(p) (r - p)^(-1/r) with r = |log epsilon / log beta|.
GoodLambdaEnvelope good_lambda_envelope(const MomentEnvelope& psi, double beta, double epsilon,
                                        double comparison_constant = 1.0);

struct AsymptoticOrder {
    MomentEnvelope envelope;
    double r = 0.0;
    double delta = 0.0;
    std::string label = "asymptotic-order result";
};

/// For PowerSingularity factors: (r - p)^(-sum delta_k) prod C_k L_k at the combined r.
/// An order statement only, never substituted for the numeric composition.
AsymptoticOrder delta2_fast_path(const std::vector<MomentEnvelope>& envs);

/// z_m = r / r_m, the fixed Hoelder split.
std::vector<double> holder_weights(const std::vector<double>& rs);
/// prod nu_m(p / z_m): an upper bound for the iterated composition.
double holder_split_bound(const std::vector<MomentEnvelope>& envs, double p);

}  // namespace polymart
