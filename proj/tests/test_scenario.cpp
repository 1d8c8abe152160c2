#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "polymart/scenario.hpp"

using namespace polymart;
using nlohmann::json;

namespace {

json small_doc() {
    return json::parse(R"({
      "name": "t",
      "envelopes": {"e8": {"form": "indicator", "r": 8}},
      "model": {"d": 2, "n": 3, "regime": "common_independent",
                "factors": [{"kind": "rademacher"}],
                "coefficients": {"type": "uniform", "normalize": true}},
      "plan": {"replications": 20000, "seed": 3, "p_grid": [2, 3],
               "bound": {"type": "zeta", "inputs": ["e8", "e8"]}}
    })");
}

std::string source(const std::string& rel) { return std::string(POLYMART_SOURCE_DIR) + "/" + rel; }

}  // namespace

TEST_CASE("builtin envelopes") {
    const auto b = builtin_envelopes();
    for (const char* name : {"ind2", "ind4", "ind6", "ind8", "ps_r4", "ps_r6", "ps_r8", "pgrow05", "pgrow1"})
        CHECK(b.count(name) == 1);
    CHECK(b.at("ind4")(3.0) == 1.0);
    CHECK(std::isinf(b.at("ps_r6")(6.0)));
    CHECK(b.at("pgrow1")(3.0) == doctest::Approx(3.0));
}

TEST_CASE("envelope and factor parsing") {
    const auto e = parse_envelope(json::parse(R"({"form": "power_growth", "c": 2, "mu": 0.5, "L": {"constant": 1}})"));
    CHECK(e(4.0) == doctest::Approx(4.0));
    CHECK_THROWS_AS(parse_envelope(json::parse(R"({"form": "indicator", "r": 4, "colour": 1})")), ConfigError);
    CHECK_THROWS_AS(parse_envelope(json::parse(R"({"form": "spline"})")), ConfigError);
    const auto f = parse_factor(json::parse(R"({"kind": "pareto_power", "params": [8], "standardize": true})"));
    CHECK(f.variance() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_THROWS_AS(parse_factor(json::parse(R"({"kind": "pareto_power", "params": [2], "standardize": true})")),
                    ConfigError);
    CHECK_THROWS_AS(parse_factor(json::parse(R"({"kind": "weibull", "params": [1]})")), ConfigError);
}

TEST_CASE("scenario parsing") {
    const auto sc = parse_scenario(small_doc());
    CHECK(sc.plan.model.d == 2);
    CHECK(sc.plan.model.coefficients.is_normalized());
    CHECK(sc.chain.has_value());
    CHECK(sc.plan.bound.has_value());
    CHECK_FALSE(sc.doob);

    auto doc = small_doc();
    doc["plan"]["colour"] = "red";
    CHECK_THROWS_AS(parse_scenario(doc), ConfigError);
    doc = small_doc();
    doc["plan"]["bound"]["inputs"] = {"e8", "e9"};
    CHECK_THROWS_AS(parse_scenario(doc), ConfigError);
    doc = small_doc();
    doc["model"].erase("n");
    CHECK_THROWS_AS(parse_scenario(doc), ConfigError);
    doc = small_doc();
    doc["model"]["factors"] = json::array({{{"kind", "rademacher"}}, {{"kind", "rademacher"}}, {{"kind", "rademacher"}}});
    CHECK_THROWS_AS(parse_scenario(doc), ConfigError);
    doc = small_doc();
    doc["plan"]["experiment"] = "quantiles";
    CHECK_THROWS_AS(parse_scenario(doc), ConfigError);
}

TEST_CASE("run and reproduce from the embedded config") {
    const auto sc = parse_scenario(small_doc());
    const auto rep = sc.run();
    CHECK(rep.pass());
    CHECK(rep.config == small_doc());
    const auto path = std::filesystem::temp_directory_path() / "polymart_scenario_report.json";
    {
        std::ofstream out(path);
        out << rep.to_json().dump(2);
    }
    const auto again = load_scenario(path.string()).run();
    CHECK(again.to_json(false) == rep.to_json(false));
    std::filesystem::remove(path);
}

TEST_CASE("file errors") {
    CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), ConfigError);
    CHECK_THROWS_AS(load_scenario(source("tests/data/unknown_key.json")), ConfigError);
    CHECK_THROWS_AS(load_scenario(source("tests/data/support_exceeded.json")).run(), SupportExceeded);
}

TEST_CASE("bundled scenarios parse") {
    int count = 0;
    for (const auto& entry : std::filesystem::directory_iterator(source("scenarios"))) {
        if (entry.path().extension() != ".json") continue;
        CAPTURE(entry.path().string());
        const auto sc = load_scenario(entry.path().string());
        CHECK(sc.plan.replications >= sc.plan.min_replications);
        CHECK_FALSE(sc.output.json.empty());
        ++count;
    }
    CHECK(count == 11);
}

TEST_CASE("dominant bound degree follows the multiplicities") {
    const auto sc = load_scenario(source("scenarios/dominant_diagonal.json"));
    REQUIRE(sc.plan.bound.has_value());
    // rho for r = 6 and total degree 2 lives on [1, 3).
    CHECK(std::isfinite((*sc.plan.bound)(2.9)));
    CHECK(std::isinf((*sc.plan.bound)(3.0)));
    CHECK(sc.plan.fit_moment_constant);
}
