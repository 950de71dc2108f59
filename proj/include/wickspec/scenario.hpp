#pragma once

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wickspec/function_space.hpp"
#include "wickspec/laplace.hpp"
#include "wickspec/spectral_demo.hpp"
#include "wickspec/wick.hpp"

namespace wickspec {

inline constexpr int kScenarioSchemaVersion = 1;
inline constexpr std::uint64_t kDefaultSeed = 20240601;
inline constexpr const char* kOutputEnvVar = "WICKSPEC_OUT";

/// Malformed scenario content. `location` is a JSON pointer into the file.
struct ScenarioError : std::runtime_error {
    std::string location;
    ScenarioError(std::string loc, const std::string& msg) : std::runtime_error(loc + ": " + msg), location(std::move(loc)) {}
};

/// A check names an object that the scenario does not define.
struct UnresolvedReference : ScenarioError {
    std::string name;
    UnresolvedReference(std::string loc, const std::string& table, std::string n)
        : ScenarioError(std::move(loc), "undefined " + table + " '" + n + "'"), name(std::move(n)) {}
};

/// A plot-ready table. Cells are preformatted so CSV output is reproducible.
struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

inline std::string csv_cell(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

inline std::string to_csv(const Table& t) {
    std::ostringstream os;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const bool quote = cells[i].find_first_of(",\"\n") != std::string::npos;
            if (i) os << ',';
            if (!quote) {
                os << cells[i];
                continue;
            }
            os << '"';
            for (char c : cells[i]) os << (c == '"' ? "\"\"" : std::string(1, c));
            os << '"';
        }
        os << '\n';
    };
    line(t.columns);
    for (const auto& r : t.rows) line(r);
    return os.str();
}

struct CheckOutcome {
    std::string id;
    std::string kind;
    BoundReport report;
    std::vector<Table> tables;
};

struct ReportBundle {
    std::string scenario;
    std::uint64_t seed = kDefaultSeed;
    std::vector<CheckOutcome> checks;

    std::size_t count(Status s) const {
        std::size_t n = 0;
        for (const auto& c : checks) n += c.report.status == s;
        return n;
    }
    int exit_status() const { return count(Status::fail) == 0 ? 0 : 1; }
};

/// Deterministic part of the output: no timings, no timestamps.
inline nlohmann::json to_json(const ReportBundle& b) {
    nlohmann::json j;
    j["schema_version"] = kScenarioSchemaVersion;
    j["scenario"] = b.scenario;
    j["seed"] = b.seed;
    j["summary"] = {{"pass", b.count(Status::pass)}, {"fail", b.count(Status::fail)}, {"undetermined", b.count(Status::undetermined)}};
    j["checks"] = nlohmann::json::array();
    for (const auto& c : b.checks) {
        auto r = to_json(c.report);
        r["id"] = c.id;
        r["kind"] = c.kind;
        j["checks"].push_back(std::move(r));
    }
    return j;
}

/// One row per constant, witness coordinate and budget of every check.
inline Table summary_table(const ReportBundle& b) {
    Table t{"summary", {"check_id", "kind", "status", "quantity", "name", "value"}, {}};
    for (const auto& c : b.checks) {
        const std::string st = to_string(c.report.status);
        if (c.report.constants.empty() && c.report.witness.empty() && c.report.budgets.empty())
            t.rows.push_back({c.id, c.kind, st, "", "", ""});
        for (const auto& [k, v] : c.report.constants) t.rows.push_back({c.id, c.kind, st, "constant", k, csv_cell(v)});
        for (const auto& [k, v] : c.report.witness) t.rows.push_back({c.id, c.kind, st, "witness", k, csv_cell(v)});
        for (const auto& [k, v] : c.report.budgets) t.rows.push_back({c.id, c.kind, st, "budget", k, csv_cell(v)});
    }
    return t;
}

// ---------------------------------------------------------------- scenario

/// Parsed scenario. Named objects live in tables keyed by name; checks stay
/// JSON and are resolved against the tables by `validate_scenario`.
struct Scenario {
    std::string name;
    std::uint64_t seed = kDefaultSeed;
    LaplaceConvention convention;
    std::map<std::string, FunctionProfile> profiles;
    std::map<std::string, Cone> cones;
    std::map<std::string, WickCoefficients> coefficients;
    std::map<std::string, TwoPointModel> models;
    std::map<std::string, TestFunction> functions;
    std::map<std::string, Functional> functionals;
    std::vector<nlohmann::json> checks;
    std::optional<std::string> output_directory;
    std::vector<std::string> formats{"json", "csv"};
};

namespace detail {

inline std::string ptr(const std::string& base, const std::string& key) { return base + "/" + key; }
inline std::string ptr(const std::string& base, std::size_t i) { return base + "/" + std::to_string(i); }

inline const nlohmann::json& field(const nlohmann::json& j, const std::string& key, const std::string& at) {
    if (!j.contains(key)) throw ScenarioError(at, "missing required field '" + key + "'");
    return j.at(key);
}

inline std::string get_string(const nlohmann::json& j, const std::string& key, const std::string& at) {
    const auto& v = field(j, key, at);
    if (!v.is_string()) throw ScenarioError(ptr(at, key), "expected a string");
    return v.get<std::string>();
}

inline double get_number(const nlohmann::json& j, const std::string& key, const std::string& at, std::optional<double> dflt = {}) {
    if (!j.contains(key)) {
        if (dflt) return *dflt;
        throw ScenarioError(at, "missing required field '" + key + "'");
    }
    if (!j.at(key).is_number()) throw ScenarioError(ptr(at, key), "expected a number");
    return j.at(key).get<double>();
}

inline std::size_t get_count(const nlohmann::json& j, const std::string& key, const std::string& at, std::size_t dflt) {
    if (!j.contains(key)) return dflt;
    if (!j.at(key).is_number_unsigned()) throw ScenarioError(ptr(at, key), "expected a nonnegative integer");
    return j.at(key).get<std::size_t>();
}

inline std::vector<double> get_numbers(const nlohmann::json& j, const std::string& key, const std::string& at,
                                       std::optional<std::vector<double>> dflt = {}) {
    if (!j.contains(key)) {
        if (dflt) return *dflt;
        throw ScenarioError(at, "missing required field '" + key + "'");
    }
    const auto& v = j.at(key);
    if (!v.is_array()) throw ScenarioError(ptr(at, key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) throw ScenarioError(ptr(ptr(at, key), i), "expected a number");
        out.push_back(v[i].get<double>());
    }
    return out;
}

inline std::vector<std::string> get_names(const nlohmann::json& j, const std::string& key, const std::string& at) {
    const auto& v = field(j, key, at);
    if (v.is_string()) return {v.get<std::string>()};
    if (!v.is_array()) throw ScenarioError(ptr(at, key), "expected a name or an array of names");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_string()) throw ScenarioError(ptr(ptr(at, key), i), "expected a name");
        out.push_back(v[i].get<std::string>());
    }
    return out;
}

template <class T>
const T& lookup(const std::map<std::string, T>& table, const char* what, const nlohmann::json& j, const std::string& key,
                const std::string& at) {
    const std::string n = get_string(j, key, at);
    const auto it = table.find(n);
    if (it == table.end()) throw UnresolvedReference(ptr(at, key), what, n);
    return it->second;
}

template <class T, class Parse>
void load_table(const nlohmann::json& root, const char* key, std::map<std::string, T>& out, Parse parse) {
    if (!root.contains(key)) return;
    const auto& obj = root.at(key);
    const std::string at = std::string("/") + key;
    if (!obj.is_object()) throw ScenarioError(at, "expected an object mapping names to definitions");
    for (const auto& [name, def] : obj.items()) {
        try {
            out.emplace(name, parse(def));
        } catch (const ScenarioError&) {
            throw;
        } catch (const std::exception& e) {
            throw ScenarioError(ptr(at, name), e.what());
        }
    }
}

inline DecreasingProfile decreasing_from_json(const nlohmann::json& j, const std::string& at) {
    const std::string kind = get_string(j, "kind", at);
    if (kind == "log-inverse") return DecreasingProfile::log_inverse();
    if (kind == "inverse-power") return DecreasingProfile::inverse_power(get_number(j, "m", at, 1.0));
    if (kind == "constant") return DecreasingProfile::constant(get_number(j, "c", at));
    throw ScenarioError(ptr(at, "kind"), "unknown decreasing profile kind '" + kind + "'");
}

}  // namespace detail

/// The check kinds understood by `run_check`, in documentation order.
inline const std::vector<std::string>& check_kinds() {
    static const std::vector<std::string> k{"saddle-identity",  "conjugate-involution", "indicator-sandwich", "nonquasianalytic",
                                            "doubling",         "compact-subcone",      "membership",         "cone-decompose",
                                            "coefficient-conditions", "majorant-bound", "wick-indicator",     "spectral-fft",
                                            "laplace-growth",   "convolution",          "gamma-conjugate"};
    return k;
}

/// Builds a scenario from parsed JSON. Throws ScenarioError with a JSON
/// pointer on any schema violation.
inline Scenario scenario_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ScenarioError("", "scenario must be a JSON object");
    Scenario s;
    if (!j.contains("schema_version")) throw ScenarioError("", "missing required field 'schema_version'");
    if (!j.at("schema_version").is_number_integer() || j.at("schema_version").get<int>() != kScenarioSchemaVersion)
        throw ScenarioError("/schema_version", "unsupported schema version, expected " + std::to_string(kScenarioSchemaVersion));
    static const std::vector<std::string> known{"schema_version", "name",         "seed",      "sign_convention", "profiles",
                                                "cones",          "coefficients", "models",    "functions",       "functionals",
                                                "checks",         "output",       "description"};
    for (const auto& [k, v] : j.items())
        if (std::find(known.begin(), known.end(), k) == known.end()) throw ScenarioError("/" + k, "unknown top-level field");
    s.name = j.value("name", std::string("unnamed"));
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned()) throw ScenarioError("/seed", "expected a nonnegative integer");
        s.seed = j.at("seed").get<std::uint64_t>();
    }
    if (j.contains("sign_convention")) {
        const auto& v = j.at("sign_convention");
        if (!v.is_number_integer() || (v.get<int>() != 1 && v.get<int>() != -1))
            throw ScenarioError("/sign_convention", "expected +1 or -1");
        s.convention.sign = v.get<int>();
    }
    detail::load_table(j, "profiles", s.profiles, [](const nlohmann::json& d) { return profile_from_json(d); });
    detail::load_table(j, "cones", s.cones, [](const nlohmann::json& d) { return Cone::from_json(d); });
    detail::load_table(j, "coefficients", s.coefficients, [](const nlohmann::json& d) { return WickCoefficients::from_json(d); });
    detail::load_table(j, "models", s.models, [](const nlohmann::json& d) { return TwoPointModel::from_json(d); });
    detail::load_table(j, "functions", s.functions, [](const nlohmann::json& d) { return TestFunction::from_json(d); });
    detail::load_table(j, "functionals", s.functionals, [](const nlohmann::json& d) { return Functional::from_json(d); });
    if (j.contains("checks")) {
        if (!j.at("checks").is_array()) throw ScenarioError("/checks", "expected an array");
        for (std::size_t i = 0; i < j.at("checks").size(); ++i) {
            const auto& c = j.at("checks")[i];
            const std::string at = detail::ptr("/checks", i);
            if (!c.is_object()) throw ScenarioError(at, "expected an object");
            const std::string kind = detail::get_string(c, "kind", at);
            const auto& kinds = check_kinds();
            if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end())
                throw ScenarioError(detail::ptr(at, "kind"), "unknown check kind '" + kind + "'");
            s.checks.push_back(c);
        }
    }
    if (j.contains("output")) {
        const auto& o = j.at("output");
        if (!o.is_object()) throw ScenarioError("/output", "expected an object");
        if (o.contains("directory")) s.output_directory = detail::get_string(o, "directory", "/output");
        if (o.contains("formats")) {
            s.formats = detail::get_names(o, "formats", "/output");
            for (std::size_t i = 0; i < s.formats.size(); ++i)
                if (s.formats[i] != "json" && s.formats[i] != "csv")
                    throw ScenarioError("/output/formats/" + std::to_string(i), "expected 'json' or 'csv'");
        }
    }
    return s;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("", "cannot open scenario file " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ScenarioError("byte " + std::to_string(e.byte), std::string("JSON parse error: ") + e.what());
    }
    return scenario_from_json(j);
}

// ---------------------------------------------------------------- checks

namespace detail {

inline std::string check_id(const nlohmann::json& c, std::size_t index) {
    if (c.contains("id") && c.at("id").is_string()) return c.at("id").get<std::string>();
    return std::to_string(index) + ":" + c.at("kind").get<std::string>();
}

/// Resolves every reference of a check and runs it. `resolve_only` stops
/// after resolution, which validates the whole scenario before any work.
inline CheckOutcome run_check(const Scenario& s, const nlohmann::json& c, std::size_t index, bool resolve_only) {
    const std::string at = ptr("/checks", index);
    const std::string kind = c.at("kind").get<std::string>();
    CheckOutcome out{check_id(c, index), kind, {}, {}};
    auto profile = [&](const char* key) -> const FunctionProfile& { return lookup(s.profiles, "profile", c, key, at); };
    auto cone = [&](const char* key) -> const Cone& { return lookup(s.cones, "cone", c, key, at); };
    auto coeffs = [&]() -> const WickCoefficients& { return lookup(s.coefficients, "coefficients", c, "coefficients", at); };
    auto model = [&]() -> const TwoPointModel& { return lookup(s.models, "model", c, "model", at); };
    auto function = [&](const char* key) -> const TestFunction& { return lookup(s.functions, "function", c, key, at); };
    auto functional = [&]() -> const Functional& { return lookup(s.functionals, "functional", c, "functional", at); };
    auto profiles = [&]() {
        std::vector<std::pair<std::string, const FunctionProfile*>> ps;
        const auto names = get_names(c, "profiles", at);
        for (std::size_t i = 0; i < names.size(); ++i) {
            const auto it = s.profiles.find(names[i]);
            if (it == s.profiles.end()) throw UnresolvedReference(ptr(ptr(at, "profiles"), i), "profile", names[i]);
            ps.emplace_back(names[i], &it->second);
        }
        return ps;
    };
    BoundReport& r = out.report;

    if (kind == "saddle-identity") {
        const auto ps = profiles();
        const std::size_t k_max = get_count(c, "k_max", at, 40);
        const double tol = get_number(c, "tolerance", at, 1e-6);
        if (resolve_only) return out;
        r.check = "saddle_identity";
        Table t{"saddle_identity", {"profile", "k", "relative_gap"}, {}};
        double worst = 0.0;
        for (const auto& [name, p] : ps)
            for (std::size_t k = 0; k <= k_max; ++k) {
                // Both sides are ln-values; exp(gap) - 1 is the relative gap.
                const double g = std::expm1(saddle_identity_gap(*p, k));
                t.rows.push_back({name, std::to_string(k), csv_cell(g)});
                if (!(g <= worst)) {
                    worst = g;
                    if (g > tol) r.set_witness("k", double(k)).note("first violation in profile " + name);
                }
            }
        r.set_constant("max_relative_gap", worst).set_budget("k_max", double(k_max)).set_budget("tolerance", tol);
        r.status = worst <= tol ? Status::pass : Status::fail;
        out.tables.push_back(std::move(t));
    } else if (kind == "conjugate-involution") {
        const auto ps = profiles();
        const std::size_t n = get_count(c, "grid_points", at, 512);
        const double lo = get_number(c, "s_min", at, 1e-2), hi = get_number(c, "s_max", at, 1e2);
        const double tol = get_number(c, "tolerance", at, 1e-6);
        if (resolve_only) return out;
        r.check = "conjugate_involution";
        double worst = 0.0;
        bool subadditive = true;
        for (const auto& [name, p] : ps)
            for (double x : log_grid(lo, hi, n)) {
                const double dc = double_conjugate(*p, x).as_double(), v = (*p)(x);
                const double rel = std::abs(dc - v) / std::max(std::abs(v), 1e-300);
                if (!(rel <= worst)) {
                    worst = rel;
                    if (rel > tol) r.set_witness("s", x).note("involution gap in profile " + name);
                }
                const double c1 = convex_conjugate(*p, x).as_double(), c2 = convex_conjugate(*p, 2.0 * x).as_double();
                if (!(2.0 * c1 <= c2 + 1e-12 * std::max(1.0, std::abs(c2)))) {
                    subadditive = false;
                    r.set_witness("subadditivity_s", x).note("2 alpha_*(s) > alpha_*(2s) in profile " + name);
                }
            }
        r.set_constant("max_relative_gap", worst).set_budget("grid_points", double(n)).set_budget("tolerance", tol);
        r.details["subadditive"] = subadditive;
        r.status = worst <= tol && subadditive ? Status::pass : Status::fail;
    } else if (kind == "indicator-sandwich") {
        const auto& beta = profile("profile");
        const double eps = get_number(c, "eps", at);
        const std::size_t n = get_count(c, "grid_points", at, 512);
        if (resolve_only) return out;
        r = indicator_sandwich(beta, eps, get_number(c, "s_min", at, 1e-3), get_number(c, "s_max", at, 1e6), n);
    } else if (kind == "nonquasianalytic") {
        const auto& beta = profile("profile");
        if (resolve_only) return out;
        const auto q = check_nonquasianalytic(beta);
        r.check = "nonquasianalytic";
        r.status = q.status;
        r.set_constant("integral", q.integral.as_double()).set_constant("tail", q.tail).set_constant("local_slope", q.local_slope);
        r.set_budget("cutoff", q.cutoff);
        if (q.status == Status::fail) r.set_witness("cutoff", q.cutoff).note("integrand decays no faster than 1/s");
    } else if (kind == "doubling") {
        const auto& beta = profile("profile");
        const double h_max = get_number(c, "h_max", at, 64.0);
        if (resolve_only) return out;
        const auto d = check_doubling(beta, h_max);
        r.check = "doubling";
        r.set_budget("h_max", h_max).set_budget("grid_points", double(d.grid_points));
        if (d.h) {
            r.status = Status::pass;
            r.set_constant("h", *d.h);
        } else {
            r.status = Status::fail;
            r.set_witness("s", d.witness_s);
        }
    } else if (kind == "compact-subcone") {
        const auto& inner = cone("inner");
        const auto& outer = cone("outer");
        const std::size_t n = get_count(c, "samples", at, 10000);
        if (resolve_only) return out;
        const auto sc = is_compact_subcone(inner, outer, n);
        r.check = "compact_subcone";
        r.set_budget("samples", double(sc.samples)).set_constant("min_depth", sc.min_depth);
        r.status = sc.compact ? Status::pass : Status::fail;
        if (!sc.compact) put_vector(r, "direction", sc.witness);
    } else if (kind == "membership") {
        const auto& g = function("function");
        const auto& alpha = profile("alpha");
        const auto& beta = profile("beta");
        const auto& U = cone("cone");
        if (resolve_only) return out;
        r = check_membership_entire(g, SpaceSpec(alpha, beta, U));
    } else if (kind == "cone-decompose") {
        const auto& g = function("function");
        const auto& e0 = function("mollifier");
        const auto& K1 = cone("K1");
        const auto& K2 = cone("K2");
        const auto& alpha = profile("alpha");
        const auto& beta = profile("beta");
        if (resolve_only) return out;
        r = cone_decompose(g, K1, K2, normalized(e0), alpha, beta).report;
    } else if (kind == "coefficient-conditions") {
        const auto& d = coeffs();
        const std::size_t k_max = get_count(c, "k_max", at, 200);
        const double h_max = get_number(c, "h_max", at, 64.0);
        if (resolve_only) return out;
        r = check_coefficient_conditions(d, k_max, h_max);
    } else if (kind == "majorant-bound") {
        const auto& m = model();
        const auto& Vp = cone("cone");
        MajorantSampling opt;
        opt.samples = get_count(c, "samples", at, opt.samples);
        if (resolve_only) return out;
        r = majorant_bound_check(m, Vp, opt);
    } else if (kind == "wick-indicator") {
        const auto& d = coeffs();
        const auto& m = model();
        const auto& alpha = profile("alpha");
        const auto& beta = profile("beta");
        const auto L = get_numbers(c, "L", at, std::vector<double>{1.0});
        const auto eps = get_numbers(c, "eps", at);
        if (resolve_only) return out;
        r = wick_indicator_check(d, m.ir(), m.uv(), alpha, beta, L, eps);
    } else if (kind == "spectral-fft") {
        const auto& m = model();
        const auto& d = coeffs();
        const int n = int(get_number(c, "n", at, 2.0));
        const auto sizes = get_numbers(c, "sizes", at, std::vector<double>{256, 512, 1024});
        LatticeSpec lat;
        lat.h = get_number(c, "h", at, lat.h);
        lat.eps = get_number(c, "eps", at, lat.eps);
        if (c.contains("y")) lat.y = get_numbers(c, "y", at);
        if (c.contains("window")) {
            const std::string w = get_string(c, "window", at);
            if (w != "gaussian" && w != "none") throw ScenarioError(ptr(at, "window"), "expected 'gaussian' or 'none'");
            lat.window = w == "none" ? Window::none : Window::gaussian;
        }
        const int N_max = int(get_number(c, "N_max", at, 10.0));
        if (resolve_only) return out;
        std::vector<std::size_t> ns;
        for (double v : sizes) ns.push_back(std::size_t(v));
        r = spectral_fft_check(m, d, n, ns, lat, N_max);
        Table t{"spectral_fft", {"N", "outside_fraction"}, {}};
        for (const auto& row : r.details.at("lattices"))
            t.rows.push_back({std::to_string(row.at("N").get<std::size_t>()), csv_cell(row.at("outside_fraction").get<double>())});
        out.tables.push_back(std::move(t));
    } else if (kind == "laplace-growth") {
        const auto& u = functional();
        const auto& alpha = profile("alpha");
        const auto& beta = profile("beta");
        const auto& Vp = cone("inner");
        const auto& V = cone("outer");
        const double eps = get_number(c, "eps", at);
        if (resolve_only) return out;
        const auto conv = s.convention;
        r = laplace_growth_check([&](std::span<const Complex> z) { return laplace_transform(u, TubePoint::from(z), conv); }, alpha,
                                 beta, Vp, V, eps);
    } else if (kind == "convolution") {
        const auto& u = functional();
        const auto& g = function("function");
        const auto& beta = profile("beta");
        const double eps = get_number(c, "eps", at);
        if (resolve_only) return out;
        r = convolution_bound_check(u, g, beta, eps);
    } else if (kind == "gamma-conjugate") {
        const auto gamma = decreasing_from_json(field(c, "gamma", at), ptr(at, "gamma"));
        const auto& beta = profile("beta");
        const auto eps = get_numbers(c, "eps", at);
        if (resolve_only) return out;
        r = gamma_conjugate_check(gamma, beta, eps);
    }
    r.set_budget("seed", double(s.seed));
    r.finalize();
    return out;
}

}  // namespace detail

/// Resolves every reference, then runs the checks in file order.
inline ReportBundle run_checks(const Scenario& s) {
    for (std::size_t i = 0; i < s.checks.size(); ++i) detail::run_check(s, s.checks[i], i, true);
    ReportBundle b;
    b.scenario = s.name;
    b.seed = s.seed;
    for (std::size_t i = 0; i < s.checks.size(); ++i) {
        try {
            b.checks.push_back(detail::run_check(s, s.checks[i], i, false));
        } catch (const ScenarioError&) {
            throw;
        } catch (const std::exception& e) {
            // Precondition violations found by the module itself.
            CheckOutcome o{detail::check_id(s.checks[i], i), s.checks[i].at("kind").get<std::string>(), {}, {}};
            o.report.check = o.kind;
            o.report.status = Status::fail;
            o.report.set_witness("precondition", 1.0).note(std::string("precondition violated: ") + e.what());
            o.report.set_budget("seed", double(s.seed));
            b.checks.push_back(std::move(o));
        }
    }
    return b;
}

/// Output directory: explicit override, then the scenario, then the
/// environment variable. Empty when none is set.
inline std::optional<std::filesystem::path> output_directory(const Scenario& s, const std::optional<std::string>& override_dir) {
    if (override_dir) return *override_dir;
    if (s.output_directory) return *s.output_directory;
    if (const char* env = std::getenv(kOutputEnvVar); env && *env) return std::string(env);
    return std::nullopt;
}

/// Writes report.json (deterministic), metadata.json (timestamp, wall time)
/// and the CSV tables into `dir`.
inline void write_bundle(const ReportBundle& b, const Scenario& s, const std::filesystem::path& dir, double seconds) {
    std::filesystem::create_directories(dir);
    auto has = [&](const char* f) { return std::find(s.formats.begin(), s.formats.end(), f) != s.formats.end(); };
    if (has("json")) {
        std::ofstream(dir / "report.json") << to_json(b).dump(2) << '\n';
    }
    if (has("csv")) {
        std::ofstream(dir / "summary.csv") << to_csv(summary_table(b));
        for (const auto& c : b.checks)
            for (const auto& t : c.tables) {
                std::string file = c.id + "." + t.name + ".csv";
                for (char& ch : file)
                    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '.' && ch != '-' && ch != '_') ch = '_';
                std::ofstream(dir / file) << to_csv(t);
            }
    }
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::ostringstream ts;
    ts << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ");
    nlohmann::json meta{{"scenario", b.scenario}, {"timestamp", ts.str()}, {"wall_seconds", seconds}};
    std::ofstream(dir / "metadata.json") << meta.dump(2) << '\n';
}

struct RunResult {
    int exit_status = 0;
    ReportBundle bundle;
    std::optional<std::filesystem::path> directory;
};

/// Loads, validates and runs a scenario file. Exit status 0 iff no check
/// failed. Schema and reference errors propagate as ScenarioError.
inline RunResult run_scenario(const std::filesystem::path& path, const std::optional<std::string>& override_dir = std::nullopt) {
    const auto t0 = std::chrono::steady_clock::now();
    const Scenario s = load_scenario(path);
    RunResult res;
    res.bundle = run_checks(s);
    res.exit_status = res.bundle.exit_status();
    res.directory = output_directory(s, override_dir);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (res.directory) write_bundle(res.bundle, s, *res.directory, secs);
    return res;
}

}  // namespace wickspec
