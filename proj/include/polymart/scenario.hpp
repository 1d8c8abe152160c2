#pragma once

// Scenario documents: named envelopes, a polynomial model, an experiment plan
// and output paths, parsed from strict JSON.

#include <map>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "polymart/mcverify.hpp"

namespace polymart {

/// Schema or reference error in a scenario document.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct OutputSpec {
    std::string json;         ///< report document
    std::string moments_csv;  ///< p,empirical,stderr,bound,ratio,pass
    std::string tails_csv;    ///< x,empirical,stderr,bound,pass
};

struct Scenario {
    nlohmann::json document;  ///< the validated source, embedded in reports
    std::map<std::string, MomentEnvelope> envelopes;
    ExperimentPlan plan;
    bool doob = false;
    /// Bound chain when the bound is a zeta chain.
    std::optional<ZetaChain> chain;
    OutputSpec output;

    VerificationReport run() const;
};

/// Parses an envelope definition such as {"form": "indicator", "r": 4}.
MomentEnvelope parse_envelope(const nlohmann::json& j, const std::string& where = "envelope");
InputDistribution parse_factor(const nlohmann::json& j, const std::string& where = "factor");

Scenario parse_scenario(const nlohmann::json& doc);
/// Reads a scenario file, or the "config" member of a report document.
Scenario load_scenario(const std::string& path);

/// Envelopes available by name without a scenario: ind2..ind8, ps_r4..ps_r8, pgrow05, pgrow1.
std::map<std::string, MomentEnvelope> builtin_envelopes();

}  // namespace polymart
