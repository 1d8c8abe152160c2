#include "polymart/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace polymart {

namespace {

using nlohmann::json;

void require_object(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    require_object(j, where);
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

const json& need(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
    return j.at(key);
}

double number(const json& j, const std::string& where) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return kInf;
    }
    throw ConfigError(where + ": expected a number");
}

double num_or(const json& j, const std::string& key, double fallback, const std::string& where) {
    return j.contains(key) ? number(j.at(key), where + "." + key) : fallback;
}

bool bool_or(const json& j, const std::string& key, bool fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_boolean()) throw ConfigError(where + "." + key + ": expected a boolean");
    return j.at(key).get<bool>();
}

std::string str(const json& j, const std::string& where) {
    if (!j.is_string()) throw ConfigError(where + ": expected a string");
    return j.get<std::string>();
}

int integer(const json& j, const std::string& where) {
    if (!j.is_number_integer()) throw ConfigError(where + ": expected an integer");
    return j.get<int>();
}

std::vector<double> numbers(const json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + ": expected an array");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

std::vector<int> integers(const json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + ": expected an array");
    std::vector<int> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(integer(j[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

std::uint64_t seed_value(const json& j, const std::string& where) {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0))
        throw ConfigError(where + ": expected a non-negative integer");
    return j.get<std::uint64_t>();
}

SlowlyVarying parse_L(const json& j, const std::string& where) {
    check_keys(j, {"constant", "log_power"}, where);
    if (j.size() != 1) throw ConfigError(where + ": give exactly one of constant, log_power");
    if (j.contains("constant")) return SlowlyVarying::constant(number(j["constant"], where + ".constant"));
    return SlowlyVarying::log_power(number(j["log_power"], where + ".log_power"));
}

CoefficientTensor parse_coefficients(const json& j, int d, int n, const std::string& where) {
    check_keys(j, {"type", "index", "value", "entries", "seed", "stream", "normalize"}, where);
    const std::string type = str(need(j, "type", where), where + ".type");
    CoefficientTensor b(d, n);
    if (type == "uniform") {
        b = CoefficientTensor::uniform(d, n);
    } else if (type == "single") {
        b = CoefficientTensor::single(d, n, integers(need(j, "index", where), where + ".index"),
                                      num_or(j, "value", 1.0, where));
    } else if (type == "explicit") {
        const json& entries = need(j, "entries", where);
        if (!entries.is_array()) throw ConfigError(where + ".entries: expected an array");
        for (std::size_t k = 0; k < entries.size(); ++k) {
            const std::string w = where + ".entries[" + std::to_string(k) + "]";
            check_keys(entries[k], {"index", "value"}, w);
            b.set(integers(need(entries[k], "index", w), w + ".index"), number(need(entries[k], "value", w), w + ".value"));
        }
    } else if (type == "random") {
        b = CoefficientTensor::random_unit(d, n, j.contains("seed") ? seed_value(j["seed"], where + ".seed") : 1,
                                           j.contains("stream") ? seed_value(j["stream"], where + ".stream") : 0);
    } else {
        throw ConfigError(where + ".type: unknown coefficient type '" + type + "'");
    }
    if (bool_or(j, "normalize", false, where)) b = b.normalized();
    return b;
}

PolynomialModel parse_model(const json& j) {
    const std::string where = "model";
    check_keys(j, {"d", "n", "regime", "direction", "sharing", "modulator", "modulator_strength", "factors",
                   "coefficients"},
               where);
    PolynomialModel m;
    m.d = integer(need(j, "d", where), "model.d");
    m.n = integer(need(j, "n", where), "model.n");
    if (m.d < 1 || m.n < m.d) throw ConfigError("model: need 1 <= d <= n");
    m.regime.tag = DependenceRegime::parse_tag(str(need(j, "regime", where), "model.regime"));
    if (j.contains("direction"))
        m.regime.direction = DependenceRegime::parse_direction(str(j["direction"], "model.direction"));
    if (j.contains("sharing")) m.sharing = parse_sharing(str(j["sharing"], "model.sharing"));
    m.modulator = bool_or(j, "modulator", false, where);
    m.modulator_strength = num_or(j, "modulator_strength", 0.5, where);
    const json& factors = need(j, "factors", where);
    if (!factors.is_array() || factors.empty()) throw ConfigError("model.factors: expected a non-empty array");
    if (factors.size() != 1 && factors.size() != static_cast<std::size_t>(m.d))
        throw ConfigError("model.factors: give one factor or exactly d factors");
    for (int k = 0; k < m.d; ++k) {
        const std::size_t idx = factors.size() == 1 ? 0 : static_cast<std::size_t>(k);
        m.factors.push_back(parse_factor(factors[idx], "model.factors[" + std::to_string(idx) + "]"));
    }
    if (j.contains("coefficients"))
        m.coefficients = parse_coefficients(j["coefficients"], m.d, m.n, "model.coefficients");
    else
        m.coefficients = CoefficientTensor::uniform(m.d, m.n);
    m.validate();
    return m;
}

}  // namespace

InputDistribution parse_factor(const json& j, const std::string& where) {
    check_keys(j, {"kind", "params", "centered", "symmetrized", "standardize", "scale", "atoms", "probs", "L"}, where);
    const std::string kind = str(need(j, "kind", where), where + ".kind");
    const std::vector<double> p = j.contains("params") ? numbers(j["params"], where + ".params") : std::vector<double>{};
    auto want = [&](std::size_t k) {
        if (p.size() != k)
            throw ConfigError(where + ".params: kind '" + kind + "' takes " + std::to_string(k) + " parameters");
    };
    InputDistribution f = InputDistribution::rademacher();
    if (kind == "pareto_power") {
        want(1);
        f = InputDistribution::pareto_power(p[0]);
    } else if (kind == "log_perturbed_pareto") {
        want(2);
        f = InputDistribution::log_perturbed_pareto(
            p[0], p[1], j.contains("L") ? parse_L(j["L"], where + ".L") : SlowlyVarying::constant());
    } else if (kind == "log_power_only") {
        want(1);
        f = InputDistribution::log_power_only(p[0]);
    } else if (kind == "double_exp_discrete") {
        want(2);
        f = InputDistribution::double_exp_discrete(p[0], p[1]);
    } else if (kind == "weibull") {
        want(2);
        f = InputDistribution::weibull(p[0], p[1]);
    } else if (kind == "rademacher") {
        want(0);
    } else if (kind == "discrete") {
        f = InputDistribution::discrete(numbers(need(j, "atoms", where), where + ".atoms"),
                                        numbers(need(j, "probs", where), where + ".probs"));
    } else {
        throw ConfigError(where + ".kind: unknown input kind '" + kind + "'");
    }
    if (bool_or(j, "centered", false, where)) f = f.centered();
    if (bool_or(j, "symmetrized", false, where)) f = f.symmetrized();
    if (bool_or(j, "standardize", false, where)) {
        if (!f.is_centered() && !f.is_symmetric() && std::abs(f.raw_moment(1)) > 1e-12) f = f.centered();
        const double var = f.variance();
        if (!std::isfinite(var) || !(var > 0.0)) throw ConfigError(where + ": cannot standardize (variance not finite)");
        f = f.scaled(1.0 / std::sqrt(var));
    }
    if (j.contains("scale")) f = f.scaled(number(j["scale"], where + ".scale"));
    return f;
}

MomentEnvelope parse_envelope(const json& j, const std::string& where) {
    require_object(j, where);
    const std::string form = str(need(j, "form", where), where + ".form");
    const double lower = num_or(j, "lower", 1.0, where);
    if (form == "indicator") {
        check_keys(j, {"form", "r", "lower"}, where);
        return MomentEnvelope::indicator(number(need(j, "r", where), where + ".r"), lower);
    }
    if (form == "power_singularity") {
        check_keys(j, {"form", "c", "r", "delta", "L", "lower"}, where);
        return MomentEnvelope::power_singularity(num_or(j, "c", 1.0, where), number(need(j, "r", where), where + ".r"),
                                                 number(need(j, "delta", where), where + ".delta"),
                                                 j.contains("L") ? parse_L(j["L"], where + ".L") : SlowlyVarying::constant(),
                                                 lower);
    }
    if (form == "power_growth") {
        check_keys(j, {"form", "c", "mu", "L", "lower"}, where);
        return MomentEnvelope::power_growth(num_or(j, "c", 1.0, where), number(need(j, "mu", where), where + ".mu"),
                                            j.contains("L") ? parse_L(j["L"], where + ".L") : SlowlyVarying::constant(),
                                            lower);
    }
    if (form == "tabulated") {
        check_keys(j, {"form", "p", "values"}, where);
        return MomentEnvelope::tabulated(numbers(need(j, "p", where), where + ".p"),
                                         numbers(need(j, "values", where), where + ".values"));
    }
    if (form == "natural") {
        check_keys(j, {"form", "factor"}, where);
        return parse_factor(need(j, "factor", where), where + ".factor").natural_envelope();
    }
    throw ConfigError(where + ".form: unknown envelope form '" + form + "'");
}

std::map<std::string, MomentEnvelope> builtin_envelopes() {
    std::map<std::string, MomentEnvelope> out;
    for (int r : {2, 4, 6, 8}) {
        out.emplace("ind" + std::to_string(r), MomentEnvelope::indicator(r));
        if (r >= 4) out.emplace("ps_r" + std::to_string(r), MomentEnvelope::power_singularity(1.0, r, 1.0 / r));
    }
    out.emplace("pgrow05", MomentEnvelope::power_growth(1.0, 0.5));
    out.emplace("pgrow1", MomentEnvelope::power_growth(1.0, 1.0));
    return out;
}

Scenario parse_scenario(const json& doc) {
    Scenario sc;
    check_keys(doc, {"name", "description", "envelopes", "model", "plan", "output"}, "scenario");
    sc.document = doc;

    sc.envelopes = builtin_envelopes();
    if (doc.contains("envelopes")) {
        require_object(doc["envelopes"], "envelopes");
        for (const auto& [name, def] : doc["envelopes"].items())
            sc.envelopes.insert_or_assign(name, parse_envelope(def, "envelopes." + name));
    }

    ExperimentPlan& plan = sc.plan;
    plan.model = parse_model(need(doc, "model", "scenario"));

    const json& pj = need(doc, "plan", "scenario");
    const std::string w = "plan";
    check_keys(pj, {"experiment", "statistic", "multiplicities", "window_start", "replications", "min_replications",
                    "p_grid", "x_grid", "bound", "bound_scale", "fit_moment_constant", "tail_norm_factor",
                    "fit_tail_rescale", "x_rescale", "seed", "b_sweep", "threads"},
               w);
    const std::string experiment = pj.contains("experiment") ? str(pj["experiment"], "plan.experiment") : "moments";
    if (experiment == "doob") sc.doob = true;
    else if (experiment != "moments") throw ConfigError("plan.experiment: expected 'moments' or 'doob'");
    try {
        if (pj.contains("statistic")) plan.statistic = parse_statistic(str(pj["statistic"], "plan.statistic"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("plan.statistic: ") + e.what());
    }
    if (pj.contains("multiplicities")) plan.multiplicities = integers(pj["multiplicities"], "plan.multiplicities");
    if (pj.contains("window_start")) plan.window_start = integer(pj["window_start"], "plan.window_start");
    if (pj.contains("replications")) plan.replications = seed_value(pj["replications"], "plan.replications");
    if (pj.contains("min_replications"))
        plan.min_replications = seed_value(pj["min_replications"], "plan.min_replications");
    plan.p_grid = numbers(need(pj, "p_grid", w), "plan.p_grid");
    if (pj.contains("x_grid")) plan.x_grid = numbers(pj["x_grid"], "plan.x_grid");
    plan.bound_scale = num_or(pj, "bound_scale", 1.0, w);
    plan.fit_moment_constant = bool_or(pj, "fit_moment_constant", false, w);
    plan.tail_norm_factor = num_or(pj, "tail_norm_factor", 1.0, w);
    plan.fit_tail_rescale = bool_or(pj, "fit_tail_rescale", true, w);
    plan.x_rescale = num_or(pj, "x_rescale", 1.0, w);
    if (pj.contains("seed")) plan.seed = seed_value(pj["seed"], "plan.seed");
    if (pj.contains("b_sweep")) plan.b_sweep = seed_value(pj["b_sweep"], "plan.b_sweep");
    if (pj.contains("threads")) plan.threads = static_cast<unsigned>(seed_value(pj["threads"], "plan.threads"));

    const json& bj = need(pj, "bound", w);
    const std::string bw = "plan.bound";
    require_object(bj, bw);
    const std::string type = str(need(bj, "type", bw), bw + ".type");
    if (type == "zeta") {
        check_keys(bj, {"type", "inputs"}, bw);
        std::vector<MomentEnvelope> inputs;
        const json& ij = need(bj, "inputs", bw);
        if (ij.is_string() && ij.get<std::string>() == "natural") {
            inputs = natural_inputs(plan.model);
            plan.constants["inputs"] = "natural";
        } else if (ij.is_array()) {
            std::string names;
            for (const auto& e : ij) {
                const std::string name = str(e, bw + ".inputs[]");
                auto it = sc.envelopes.find(name);
                if (it == sc.envelopes.end()) throw ConfigError(bw + ".inputs: unresolved envelope '" + name + "'");
                inputs.push_back(it->second);
                names += (names.empty() ? "" : ",") + name;
            }
            plan.constants["inputs"] = names;
        } else {
            throw ConfigError(bw + ".inputs: expected \"natural\" or a list of envelope names");
        }
        if (inputs.size() != static_cast<std::size_t>(plan.model.d))
            throw ConfigError(bw + ".inputs: need one envelope per factor");
        try {
            sc.chain = zeta_chain(plan.model.regime, inputs, GrowthConstant::martingale(), GrowthConstant::independent(),
                                  ChainGrid{plan.p_grid});
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        plan.bound = sc.chain->bound();
        plan.bound_label = "zeta_" + std::to_string(plan.model.d) + " " + plan.model.regime.name();
        plan.constants["K_M"] = sc.chain->km.describe();
        plan.constants["K_I"] = sc.chain->ki.describe();
        plan.constants["combined_r"] = std::to_string(sc.chain->combined_r);
    } else if (type == "envelope") {
        check_keys(bj, {"type", "name"}, bw);
        const std::string name = str(need(bj, "name", bw), bw + ".name");
        auto it = sc.envelopes.find(name);
        if (it == sc.envelopes.end()) throw ConfigError(bw + ".name: unresolved envelope '" + name + "'");
        plan.bound = it->second;
        plan.bound_label = name;
    } else if (type == "dominant") {
        check_keys(bj, {"type", "tails", "constant"}, bw);
        const json& tj = need(bj, "tails", bw);
        if (!tj.is_array()) throw ConfigError(bw + ".tails: expected an array");
        std::vector<TailParameters> tails;
        for (std::size_t k = 0; k < tj.size(); ++k) {
            const std::string tw = bw + ".tails[" + std::to_string(k) + "]";
            check_keys(tj[k], {"r", "gamma", "L"}, tw);
            TailParameters t;
            t.r = number(need(tj[k], "r", tw), tw + ".r");
            t.gamma = num_or(tj[k], "gamma", 0.0, tw);
            if (tj[k].contains("L")) t.L = parse_L(tj[k]["L"], tw + ".L");
            tails.push_back(t);
        }
        int degree = plan.model.d;
        if (plan.statistic == Statistic::R && !plan.multiplicities.empty()) {
            degree = 0;
            for (int k : plan.multiplicities) degree += k;
        }
        const DominantEnvelope dom = polynomial_dominant_envelope(tails, degree, num_or(bj, "constant", 1.0, bw));
        plan.bound = dom.envelope;
        plan.bound_label = "rho_" + std::to_string(degree) + (dom.shape_only ? " (shape-only)" : "");
    } else {
        throw ConfigError(bw + ".type: expected zeta, envelope or dominant");
    }

    if (doc.contains("output")) {
        const json& oj = doc["output"];
        check_keys(oj, {"json", "moments_csv", "tails_csv"}, "output");
        if (oj.contains("json")) sc.output.json = str(oj["json"], "output.json");
        if (oj.contains("moments_csv")) sc.output.moments_csv = str(oj["moments_csv"], "output.moments_csv");
        if (oj.contains("tails_csv")) sc.output.tails_csv = str(oj["tails_csv"], "output.tails_csv");
    }
    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    if (doc.is_object() && doc.contains("schema") && doc.contains("config")) doc = doc["config"];
    try {
        return parse_scenario(doc);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    } catch (const json::exception& e) {
        throw ConfigError(e.what());
    }
}

VerificationReport Scenario::run() const {
    VerificationReport rep = doob ? doob_experiment(plan) : run_experiment(plan);
    rep.config = document;
    return rep;
}

}  // namespace polymart
