#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "wickspec/scenario.hpp"

using namespace wickspec;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("wickspec_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

fs::path write_file(const fs::path& dir, const std::string& name, const std::string& text) {
    const fs::path p = dir / name;
    std::ofstream(p) << text;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json saddle_scenario() {
    return json::parse(R"({
      "schema_version": 1,
      "name": "saddle",
      "profiles": {"square": {"kind": "power", "params": {"gamma": 2}}, "expm1": {"kind": "exp-minus-one"}},
      "checks": [{"id": "saddle", "kind": "saddle-identity", "profiles": ["square", "expm1"], "k_max": 40}]
    })");
}

}  // namespace

TEST_CASE("saddle identity over two profiles passes with exit status 0") {
    const auto b = run_checks(scenario_from_json(saddle_scenario()));
    REQUIRE(b.checks.size() == 1);
    CHECK(b.checks[0].report.passed());
    CHECK(b.checks[0].report.constants.at("max_relative_gap") <= 1e-6);
    CHECK(b.checks[0].report.budgets.at("seed") == double(kDefaultSeed));
    REQUIRE(b.checks[0].tables.size() == 1);
    CHECK(b.checks[0].tables[0].rows.size() == 2 * 41);
    CHECK(b.exit_status() == 0);
}

TEST_CASE("an undefined profile is reported by name before any check runs") {
    auto j = saddle_scenario();
    j["checks"].push_back({{"kind", "doubling"}, {"profile", "nosuch"}});
    const auto s = scenario_from_json(j);
    try {
        run_checks(s);
        FAIL("expected an unresolved reference");
    } catch (const UnresolvedReference& e) {
        CHECK(e.name == "nosuch");
        CHECK(e.location == "/checks/1/profile");
        CHECK(std::string(e.what()).find("nosuch") != std::string::npos);
    }
    // A name inside a list is located by index.
    j = saddle_scenario();
    j["checks"][0]["profiles"] = {"square", "cube"};
    try {
        run_checks(scenario_from_json(j));
        FAIL("expected an unresolved reference");
    } catch (const UnresolvedReference& e) {
        CHECK(e.name == "cube");
        CHECK(e.location == "/checks/0/profiles/1");
    }
}

TEST_CASE("an empty checks list gives exit status 0 and an empty bundle") {
    const auto b = run_checks(scenario_from_json(json::parse(R"({"schema_version": 1, "checks": []})")));
    CHECK(b.checks.empty());
    CHECK(b.exit_status() == 0);
    CHECK(to_json(b)["checks"].empty());
}

TEST_CASE("schema violations carry their location") {
    auto expect_at = [](const std::string& text, const std::string& loc) {
        try {
            scenario_from_json(json::parse(text));
            FAIL("expected a schema error for " << text);
        } catch (const ScenarioError& e) {
            CHECK(e.location == loc);
        }
    };
    expect_at(R"({"checks": []})", "");
    expect_at(R"({"schema_version": 2})", "/schema_version");
    expect_at(R"({"schema_version": 1, "extra": 0})", "/extra");
    expect_at(R"({"schema_version": 1, "seed": -1})", "/seed");
    expect_at(R"({"schema_version": 1, "checks": [{"kind": "nosuch"}]})", "/checks/0/kind");
    expect_at(R"({"schema_version": 1, "checks": [{"id": "x"}]})", "/checks/0");
    expect_at(R"({"schema_version": 1, "profiles": {"p": {"kind": "cubic"}}})", "/profiles/p");
    expect_at(R"({"schema_version": 1, "sign_convention": 0})", "/sign_convention");
    expect_at(R"({"schema_version": 1, "output": {"formats": ["xml"]}})", "/output/formats/0");
    // Wrong parameter type is caught when the check is resolved.
    try {
        run_checks(scenario_from_json(json::parse(
            R"({"schema_version": 1, "profiles": {"b": {"kind": "power", "params": {"gamma": 0.5}}},
                "checks": [{"kind": "indicator-sandwich", "profile": "b", "eps": "small"}]})")));
        FAIL("expected a schema error");
    } catch (const ScenarioError& e) {
        CHECK(e.location == "/checks/0/eps");
    }
    const auto dir = scratch("parse");
    const auto p = write_file(dir, "broken.json", "{\"schema_version\": 1,\n \"checks\": [}");
    try {
        load_scenario(p);
        FAIL("expected a parse error");
    } catch (const ScenarioError& e) {
        CHECK(e.location.rfind("byte ", 0) == 0);
    }
}

TEST_CASE("exit status is 1 exactly when some check fails") {
    auto j = saddle_scenario();
    j["profiles"]["linear"] = {{"kind", "linear"}};
    j["checks"].push_back({{"id", "nqa"}, {"kind", "nonquasianalytic"}, {"profile", "linear"}});
    const auto b = run_checks(scenario_from_json(j));
    CHECK(b.checks[1].report.failed());
    CHECK_FALSE(b.checks[1].report.witness.empty());
    CHECK(b.exit_status() == 1);
    CHECK(to_json(b)["summary"]["fail"] == 1);
}

TEST_CASE("a module precondition violation becomes a failed report") {
    const auto j = json::parse(R"({"schema_version": 1, "coefficients": {"d": {"kind": "inverse-factorial"}},
        "checks": [{"id": "short", "kind": "coefficient-conditions", "coefficients": "d", "k_max": 5}]})");
    const auto b = run_checks(scenario_from_json(j));
    REQUIRE(b.checks.size() == 1);
    CHECK(b.checks[0].report.failed());
    CHECK(b.checks[0].report.witness.count("precondition") == 1);
    CHECK(b.exit_status() == 1);
}

TEST_CASE("reports are byte-identical across runs and timestamps stay out of them") {
    const auto dir = scratch("determinism");
    auto j = saddle_scenario();
    j["seed"] = 7;
    j["checks"].push_back(json::parse(R"({"id": "sandwich", "kind": "indicator-sandwich", "profile": "sqrt", "eps": 0.1})"));
    j["profiles"]["sqrt"] = {{"kind", "power"}, {"params", {{"gamma", 0.5}}}};
    const auto path = write_file(dir, "s.json", j.dump());
    const auto r1 = run_scenario(path, (dir / "one").string());
    const auto r2 = run_scenario(path, (dir / "two").string());
    CHECK(r1.exit_status == 0);
    const std::string a = slurp(dir / "one" / "report.json"), b = slurp(dir / "two" / "report.json");
    CHECK(!a.empty());
    CHECK(a == b);
    CHECK(a.find("timestamp") == std::string::npos);
    CHECK(json::parse(slurp(dir / "one" / "metadata.json")).contains("timestamp"));
    CHECK(json::parse(a)["seed"] == 7);
    CHECK(slurp(dir / "one" / "summary.csv") == slurp(dir / "two" / "summary.csv"));
    CHECK(slurp(dir / "one" / "summary.csv").rfind("check_id,kind,status,quantity,name,value\n", 0) == 0);
    CHECK(fs::exists(dir / "one" / "saddle.saddle_identity.csv"));
}

TEST_CASE("output directory precedence: override, scenario, environment") {
    const auto dir = scratch("outdir");
    auto j = json::parse(R"({"schema_version": 1, "checks": []})");
    const auto plain = write_file(dir, "plain.json", j.dump());
    ::setenv(kOutputEnvVar, (dir / "env").string().c_str(), 1);
    CHECK(run_scenario(plain).directory == dir / "env");
    CHECK(fs::exists(dir / "env" / "report.json"));
    j["output"] = {{"directory", (dir / "file").string()}, {"formats", {"json"}}};
    const auto with_dir = write_file(dir, "with_dir.json", j.dump());
    CHECK(run_scenario(with_dir).directory == dir / "file");
    CHECK_FALSE(fs::exists(dir / "file" / "summary.csv"));
    CHECK(run_scenario(with_dir, (dir / "flag").string()).directory == dir / "flag");
    ::unsetenv(kOutputEnvVar);
    CHECK_FALSE(run_scenario(plain).directory.has_value());
}

TEST_CASE("CSV cells are quoted when needed") {
    Table t{"t", {"a", "b"}, {{"x,y", "say \"hi\""}, {"1", csv_cell(0.5)}}};
    CHECK(to_csv(t) == "a,b\n\"x,y\",\"say \"\"hi\"\"\"\n1,0.5\n");
    CHECK(csv_cell(-std::numeric_limits<double>::infinity()) == "-inf");
}

TEST_CASE("shipped scenarios parse and resolve") {
    const fs::path root = WICKSPEC_SOURCE_DIR;
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(root / "scenarios")) {
        if (e.path().extension() != ".json") continue;
        INFO(e.path().string());
        const auto s = load_scenario(e.path());
        CHECK_FALSE(s.checks.empty());
        for (std::size_t i = 0; i < s.checks.size(); ++i) CHECK_NOTHROW(detail::run_check(s, s.checks[i], i, true));
        ++n;
    }
    CHECK(n >= 5);
    CHECK(json::parse(slurp(root / "schema" / "scenario.schema.json"))["properties"]["schema_version"]["const"] == kScenarioSchemaVersion);
}
