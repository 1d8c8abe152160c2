#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "polymart/calculus.hpp"
#include "polymart/mcverify.hpp"
#include "polymart/scenario.hpp"
#include "polymart/tails.hpp"

using namespace polymart;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kConfig = 2, kViolation = 3, kNumeric = 4 };

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

/// "a:b:n" -> n points from a to b inclusive; otherwise a single number.
std::vector<double> expand_grid(const std::vector<std::string>& specs) {
    std::vector<double> out;
    for (const auto& s : specs) {
        const auto c1 = s.find(':');
        if (c1 == std::string::npos) {
            out.push_back(std::stod(s));
            continue;
        }
        const auto c2 = s.find(':', c1 + 1);
        if (c2 == std::string::npos) throw ConfigError("grid '" + s + "': expected a:b:n");
        const double a = std::stod(s.substr(0, c1));
        const double b = std::stod(s.substr(c1 + 1, c2 - c1 - 1));
        const int n = std::stoi(s.substr(c2 + 1));
        if (n < 1) throw ConfigError("grid '" + s + "': need n >= 1");
        if (n == 1) {
            out.push_back(a);
            continue;
        }
        for (int k = 0; k < n; ++k) out.push_back(a + (b - a) * k / (n - 1));
    }
    return out;
}

struct EnvelopeBook {
    std::map<std::string, MomentEnvelope> named = builtin_envelopes();

    void load(const std::string& path) {
        if (path.empty()) return;
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open '" + path + "'");
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError(path + ": " + e.what());
        }
        if (doc.contains("config")) doc = doc["config"];
        if (!doc.contains("envelopes")) return;
        for (const auto& [name, def] : doc["envelopes"].items())
            named.insert_or_assign(name, parse_envelope(def, "envelopes." + name));
    }

    /// A name, or an inline JSON definition.
    MomentEnvelope get(const std::string& key) const {
        if (!key.empty() && key.front() == '{') {
            try {
                return parse_envelope(json::parse(key));
            } catch (const json::parse_error& e) {
                throw ConfigError(std::string("inline envelope: ") + e.what());
            }
        }
        auto it = named.find(key);
        if (it == named.end()) throw ConfigError("unresolved envelope name '" + key + "'");
        return it->second;
    }
};

void write_file(const std::string& path, const std::string& text) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
}

/// Scenario document with command-line overrides applied, so the embedded config reproduces the run.
Scenario load_with_overrides(const std::string& path, std::optional<std::uint64_t> seed,
                             std::optional<std::uint64_t> reps, std::optional<unsigned> threads) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    if (doc.is_object() && doc.contains("schema") && doc.contains("config")) doc = doc["config"];
    if (!doc.is_object() || !doc.contains("plan") || !doc["plan"].is_object())
        throw ConfigError(path + ": missing plan section");
    if (seed) doc["plan"]["seed"] = *seed;
    if (reps) doc["plan"]["replications"] = *reps;
    Scenario sc;
    try {
        sc = parse_scenario(doc);
    } catch (const ConfigError&) {
        throw;
    } catch (const SupportExceeded&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    } catch (const json::exception& e) {
        throw ConfigError(e.what());
    }
    if (threads) sc.plan.threads = *threads;
    return sc;
}

void print_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows,
                 std::ostream& os) {
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << "\n";
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
        os << "\n";
    }
}

void emit(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows,
          const std::string& out) {
    if (out.empty()) {
        print_table(header, rows, std::cout);
        return;
    }
    std::ostringstream os;
    print_table(header, rows, os);
    write_file(out, os.str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"polymart: moment envelopes, zeta bounds, conjugate tails and Monte Carlo verification"};
    app.require_subcommand(1);

    std::string envelope_file;
    std::string out;
    std::optional<std::uint64_t> seed, reps;
    std::optional<unsigned> threads;

    // envelope
    auto* env_cmd = app.add_subcommand("envelope", "Evaluate, compose or measure moment envelopes");
    env_cmd->require_subcommand(1);
    std::string env_name, env_a, env_b, factor_kind;
    std::vector<std::string> p_specs;
    std::vector<double> factor_params;
    bool factor_centered = false;

    auto* env_eval = env_cmd->add_subcommand("eval", "nu(p) on a p grid");
    env_eval->add_option("--name", env_name, "Envelope name or inline JSON")->required();
    env_eval->add_option("--p", p_specs, "p values or a:b:n grids")->required();
    env_eval->add_option("--envelopes", envelope_file, "Scenario file with named envelopes");
    env_eval->add_option("--out", out, "CSV output path");

    auto* env_otimes = env_cmd->add_subcommand("otimes", "(a (x) b)(p) and the minimizing split");
    env_otimes->add_option("--a", env_a, "First envelope")->required();
    env_otimes->add_option("--b", env_b, "Second envelope")->required();
    env_otimes->add_option("--p", p_specs, "p values or a:b:n grids")->required();
    env_otimes->add_option("--envelopes", envelope_file, "Scenario file with named envelopes");
    env_otimes->add_option("--out", out, "CSV output path");

    auto* env_norm = env_cmd->add_subcommand("norm", "GLS norm of an input law against an envelope");
    env_norm->add_option("--name", env_name, "Envelope name or inline JSON")->required();
    env_norm->add_option("--factor", factor_kind, "Input kind, e.g. pareto_power")->required();
    env_norm->add_option("--param", factor_params, "Input parameters");
    env_norm->add_flag("--centered", factor_centered, "Center the input");
    env_norm->add_option("--p", p_specs, "p grid (default: envelope grid)");
    env_norm->add_option("--envelopes", envelope_file, "Scenario file with named envelopes");

    // zeta
    auto* zeta_cmd = app.add_subcommand("zeta", "Zeta chain stages on a p grid");
    std::string zeta_config, regime_name = "common_independent", direction_name = "forward";
    std::vector<std::string> zeta_inputs;
    zeta_cmd->add_option("--config", zeta_config, "Scenario file (regime, inputs and p grid)");
    zeta_cmd->add_option("--regime", regime_name, "martingale, common_independent, inside_independent, vector_independent");
    zeta_cmd->add_option("--direction", direction_name, "forward or reverse");
    zeta_cmd->add_option("--inputs", zeta_inputs, "Envelope names, one per factor")->delimiter(',');
    zeta_cmd->add_option("--p", p_specs, "p values or a:b:n grids");
    zeta_cmd->add_option("--envelopes", envelope_file, "Scenario file with named envelopes");
    zeta_cmd->add_option("--out", out, "CSV output path");

    // tail
    auto* tail_cmd = app.add_subcommand("tail", "Conjugate tail bound of an envelope");
    std::vector<std::string> x_specs;
    double norm_factor = 1.0;
    tail_cmd->add_option("--name", env_name, "Envelope name or inline JSON")->required();
    tail_cmd->add_option("--x", x_specs, "x values or a:b:n grids")->required();
    tail_cmd->add_option("--norm-factor", norm_factor, "GLS norm multiplier k");
    tail_cmd->add_option("--envelopes", envelope_file, "Scenario file with named envelopes");
    tail_cmd->add_option("--out", out, "CSV output path");

    // simulate / verify
    std::string config;
    std::string samples_path, samples_format = "csv";
    auto add_run_flags = [&](CLI::App* c) {
        c->add_option("--config", config, "Scenario or report file")->required();
        c->add_option("--seed", seed, "Override the plan seed");
        c->add_option("--reps", reps, "Override the replication count");
        c->add_option("--threads", threads, "Worker cap (overrides POLYMART_THREADS)");
        c->add_option("--out", out, "Output directory");
    };
    auto* sim_cmd = app.add_subcommand("simulate", "Draw the plan's statistic and tabulate empirical moments");
    add_run_flags(sim_cmd);
    sim_cmd->add_option("--samples", samples_path, "Write raw samples here");
    sim_cmd->add_option("--format", samples_format, "csv or bin (little-endian float64)")
        ->check(CLI::IsMember({"csv", "bin"}));
    auto* verify_cmd = app.add_subcommand("verify", "Run the dominance checks and write the report");
    add_run_flags(verify_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfig;
    }

    try {
        EnvelopeBook book;
        book.load(envelope_file);

        if (env_eval->parsed()) {
            const MomentEnvelope env = book.get(env_name);
            std::vector<std::vector<std::string>> rows;
            for (double p : expand_grid(p_specs)) rows.push_back({fmt(p), fmt(env(p))});
            emit({"p", "value"}, rows, out);
            return kOk;
        }
        if (env_otimes->parsed()) {
            const MomentEnvelope a = book.get(env_a), b = book.get(env_b);
            std::vector<std::vector<std::string>> rows;
            for (double p : expand_grid(p_specs)) {
                const OtimesResult r = otimes_detail(a, b, p);
                rows.push_back({fmt(p), fmt(r.value), r.feasible ? fmt(r.a) : "nan"});
            }
            emit({"p", "value", "a"}, rows, out);
            return kOk;
        }
        if (env_norm->parsed()) {
            const MomentEnvelope env = book.get(env_name);
            json fj = {{"kind", factor_kind}, {"params", factor_params}, {"centered", factor_centered}};
            const InputDistribution f = parse_factor(fj);
            const std::vector<double> grid = p_specs.empty() ? default_gls_grid(env) : expand_grid(p_specs);
            for (double p : grid)
                if (!std::isfinite(f.abs_moment(p))) {
                    std::ostringstream os;
                    os << "the input has no moment of order " << p << " (moment index " << f.moment_index()
                       << "); its norm in this space is infinite, restrict --p";
                    throw ConfigError(os.str());
                }
            const double norm = gls_norm([&](double p) { return std::pow(f.abs_moment(p), 1.0 / p); }, env, grid);
            std::cout << fmt(norm) << "\n";
            return kOk;
        }
        if (zeta_cmd->parsed()) {
            DependenceRegime regime;
            std::vector<MomentEnvelope> inputs;
            std::vector<double> grid;
            if (!zeta_config.empty()) {
                const Scenario sc = load_scenario(zeta_config);
                if (!sc.chain) throw ConfigError(zeta_config + ": plan.bound is not a zeta chain");
                regime = sc.chain->regime;
                inputs = sc.chain->inputs;
                grid = sc.plan.p_grid;
            } else {
                try {
                    regime.tag = DependenceRegime::parse_tag(regime_name);
                    regime.direction = DependenceRegime::parse_direction(direction_name);
                } catch (const std::invalid_argument& e) {
                    throw ConfigError(e.what());
                }
                if (zeta_inputs.empty()) throw ConfigError("zeta: give --inputs or --config");
                for (const auto& name : zeta_inputs) inputs.push_back(book.get(name));
            }
            if (!p_specs.empty()) grid = expand_grid(p_specs);
            if (grid.empty()) throw ConfigError("zeta: no p grid");
            ZetaChain chain;
            try {
                chain = zeta_chain(regime, inputs);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
            std::vector<std::string> header{"p"};
            for (std::size_t s = 0; s < chain.stages.size(); ++s)
                header.push_back("zeta_stage" + std::to_string(s + 1) + "_m" + std::to_string(chain.stage_factor[s]));
            std::vector<std::vector<std::string>> rows;
            for (double p : grid) {
                std::vector<std::string> row{fmt(p)};
                for (const auto& st : chain.stages) row.push_back(fmt(st(p)));
                rows.push_back(row);
            }
            emit(header, rows, out);
            return kOk;
        }
        if (tail_cmd->parsed()) {
            const MomentEnvelope env = book.get(env_name);
            const ConjugateSpec spec = ConjugateSpec::with_default_grid(env, norm_factor);
            std::vector<std::vector<std::string>> rows;
            for (double x : expand_grid(x_specs)) {
                if (x <= std::exp(1.0)) {
                    rows.push_back({fmt(x), fmt(1.0), "nan", "vacuous"});
                    continue;
                }
                rows.push_back({fmt(x), fmt(tail_inf_form(spec, x)), fmt(tail_optimal_p(spec, x)), ""});
            }
            emit({"x", "tail", "p_star", "note"}, rows, out);
            return kOk;
        }
        if (sim_cmd->parsed()) {
            const Scenario sc = load_with_overrides(config, seed, reps, threads);
            const auto xs = sample_statistic(sc.plan, sc.plan.seed, sc.plan.replications);
            if (!samples_path.empty()) {
                if (samples_format == "bin") {
                    std::string bytes(xs.size() * sizeof(double), '\0');
                    for (std::size_t i = 0; i < xs.size(); ++i) {
                        std::uint64_t u;
                        std::memcpy(&u, &xs[i], sizeof u);
                        for (int k = 0; k < 8; ++k) bytes[i * 8 + k] = static_cast<char>((u >> (8 * k)) & 0xFF);
                    }
                    write_file(samples_path, bytes);
                } else {
                    std::string text = "value\n";
                    for (double v : xs) text += fmt(v) + "\n";
                    write_file(samples_path, text);
                }
            }
            std::vector<std::vector<std::string>> rows;
            for (double p : sc.plan.p_grid) {
                const MomentEstimate e = empirical_moments(xs, p);
                rows.push_back({fmt(p), fmt(e.value), fmt(e.stderr)});
            }
            emit({"p", "empirical", "stderr"}, rows, out.empty() ? "" : (std::filesystem::path(out) / "moments.csv").string());
            return kOk;
        }
        if (verify_cmd->parsed()) {
            const Scenario sc = load_with_overrides(config, seed, reps, threads);
            const VerificationReport rep = sc.run();
            auto resolve = [&](const std::string& configured, const std::string& fallback) -> std::string {
                if (!out.empty()) return (std::filesystem::path(out) / fallback).string();
                return configured;
            };
            const std::string json_path = resolve(sc.output.json, "report.json");
            const std::string mcsv = resolve(sc.output.moments_csv, "moments.csv");
            const std::string tcsv = resolve(sc.output.tails_csv, "tails.csv");
            if (!json_path.empty()) write_file(json_path, rep.to_json().dump(2) + "\n");
            if (!mcsv.empty()) write_file(mcsv, rep.moments_csv());
            if (!tcsv.empty() && !rep.tails.empty()) write_file(tcsv, rep.tails_csv());
            std::cout << rep.moments_csv();
            if (!rep.tails.empty()) std::cout << rep.tails_csv();
            for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
            std::cout << "result: " << (rep.pass() ? "pass" : "FAIL") << "\n";
            return rep.pass() ? kOk : kViolation;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const SupportExceeded& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kNumeric;
    }
    return kConfig;
}
