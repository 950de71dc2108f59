// Command-line front end: thin wrappers over the library plus the scenario runner.
// Results go to stdout as JSON; `--csv <path>` writes a table instead.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "wickspec/wickspec.hpp"

using namespace wickspec;
using nlohmann::json;

namespace {

struct Output {
    std::string csv_path;

    // Emits `j` as JSON, or `t` as CSV when --csv was given.
    void emit(const json& j, const Table& t) const {
        if (csv_path.empty()) {
            std::cout << j.dump(2) << '\n';
            return;
        }
        std::ofstream f(csv_path);
        if (!f) throw std::runtime_error("cannot write " + csv_path);
        f << to_csv(t);
    }
    void emit_report(const BoundReport& r) const {
        ReportBundle b;
        b.checks.push_back({r.check, r.check, r, {}});
        emit(to_json(r), summary_table(b));
    }
};

// Profile flags shared by several subcommands.
struct ProfileFlags {
    std::string kind = "power";
    double gamma = 2.0, c = 1.0;

    void add(CLI::App* app, const std::string& prefix = "") {
        app->add_option("--" + prefix + "kind", kind, "power | quadratic | exp-minus-one | linear | entropy | log-growth")
            ->capture_default_str();
        app->add_option("--" + prefix + "gamma", gamma, "exponent of the power profile")->capture_default_str();
        app->add_option("--" + prefix + "c", c, "coefficient of power and linear profiles")->capture_default_str();
    }
    FunctionProfile build() const {
        json p{{"kind", kind}, {"params", {{"gamma", gamma}, {"c", c}}}};
        return profile_from_json(p);
    }
};

Cone parse_cone(const std::string& text) {
    try {
        return Cone::from_json(json::parse(text));
    } catch (const json::exception& e) {
        throw CLI::ValidationError("cone", std::string("expected a cone as JSON: ") + e.what());
    }
}

Table single(const std::string& col, const std::string& v) { return Table{"value", {col}, {{v}}}; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical checks for weighted test-function spaces, cones and Wick series"};
    app.require_subcommand(1);
    Output out;
    app.add_option("--csv", out.csv_path, "write a CSV table to this path instead of JSON on stdout");

    // ------------------------------------------------------------ profile
    auto* profile = app.add_subcommand("profile", "growth profiles and their conjugates");
    profile->require_subcommand(1);
    ProfileFlags pf;
    double r_arg = 1.0;
    auto* conj = profile->add_subcommand("conjugate", "convex conjugate alpha_*(r) = sup_s (r s - alpha(s))");
    pf.add(conj);
    conj->add_option("--r", r_arg, "argument r > 0")->required();
    conj->callback([&] {
        const double v = convex_conjugate(pf.build(), r_arg).as_double();
        out.emit(json_number(v), single("value", csv_cell(v)));
    });
    auto* cconj = profile->add_subcommand("concave-conjugate", "concave conjugate beta^*(t) = inf_s (s t - beta(s))");
    pf.add(cconj);
    cconj->add_option("--t", r_arg, "argument t > 0")->required();
    cconj->callback([&] {
        const double v = concave_conjugate(pf.build(), r_arg).as_double();
        out.emit(json_number(v), single("value", csv_cell(v)));
    });
    double h_max = 64.0;
    auto* dbl = profile->add_subcommand("doubling", "smallest h with 2 beta(s) <= beta(h s)");
    pf.add(dbl);
    dbl->add_option("--h-max", h_max)->capture_default_str();
    dbl->callback([&] {
        const auto d = check_doubling(pf.build(), h_max);
        json j{{"h", d.h ? json(*d.h) : json(nullptr)}, {"witness_s", d.witness_s}};
        out.emit(j, Table{"doubling", {"h", "witness_s"}, {{d.h ? csv_cell(*d.h) : "", csv_cell(d.witness_s)}}});
    });
    auto* nqa = profile->add_subcommand("nonquasianalytic", "integral of beta(s)/s^2 over [1, inf)");
    pf.add(nqa);
    nqa->callback([&] {
        const auto q = check_nonquasianalytic(pf.build());
        json j{{"status", to_string(q.status)}, {"integral", json_number(q.integral.as_double())}, {"cutoff", q.cutoff}};
        out.emit(j, Table{"nonquasianalytic", {"status", "integral"}, {{to_string(q.status), csv_cell(q.integral.as_double())}}});
    });
    double eps = 0.1;
    auto* sand = profile->add_subcommand("sandwich", "indicator sandwich b(s) <= e^beta(s) <= C' b((1+eps)s)");
    pf.add(sand);
    sand->add_option("--eps", eps)->capture_default_str();
    sand->callback([&] { out.emit_report(indicator_sandwich(pf.build(), eps)); });

    // ------------------------------------------------------------ sequence
    auto* sequence = app.add_subcommand("sequence", "defining sequences and indicators");
    sequence->require_subcommand(1);
    std::string role = "a";
    std::size_t k_max = 40;
    auto* build = sequence->add_subcommand("build", "ln a_k (role a, from alpha) or ln b_l (role b, from beta)");
    pf.add(build);
    build->add_option("--role", role)->check(CLI::IsMember({"a", "b"}))->capture_default_str();
    build->add_option("--k-max", k_max)->capture_default_str();
    build->callback([&] {
        const auto seq = defining_sequence(pf.build(), role == "a" ? SequenceRole::a_from_alpha : SequenceRole::b_from_beta, k_max);
        Table t{"sequence", {"k", "ln_value"}, {}};
        json arr = json::array();
        for (std::size_t k = 0; k < seq.values.size(); ++k) {
            arr.push_back(json_number(seq.values[k]));
            t.rows.push_back({std::to_string(k), csv_cell(seq.values[k])});
        }
        out.emit(json{{"role", role}, {"ln_values", arr}}, t);
    });
    double s_arg = 1.0;
    auto* ind = sequence->add_subcommand("indicator", "ln of sup_k s^k / m_k for the sequence of a profile");
    pf.add(ind);
    ind->add_option("--role", role)->check(CLI::IsMember({"a", "b"}))->capture_default_str();
    ind->add_option("--k-max", k_max)->capture_default_str();
    ind->add_option("--s", s_arg)->required();
    ind->callback([&] {
        const auto seq = defining_sequence(pf.build(), role == "a" ? SequenceRole::a_from_alpha : SequenceRole::b_from_beta, k_max);
        const auto v = indicator_eval(seq, s_arg);
        json j{{"ln_value", json_number(v.ln_value)}, {"argmax", v.argmax}, {"truncated", v.truncated}};
        out.emit(j, Table{"indicator", {"s", "ln_value", "argmax"}, {{csv_cell(s_arg), csv_cell(v.ln_value), std::to_string(v.argmax)}}});
    });

    // ------------------------------------------------------------ cone
    auto* cone = app.add_subcommand("cone", "cone membership and distances");
    cone->require_subcommand(1);
    std::string variant = "lorentz-forward", cone_json;
    std::size_t n_arg = 2, d_arg = 2;
    std::string sign = "-";
    double aperture = 1.0;
    std::vector<double> point;
    auto add_cone_flags = [&](CLI::App* c) {
        c->add_option("--variant", variant, "lorentz-forward | lorentz-backward | spectral, or use --cone")->capture_default_str();
        c->add_option("--n", n_arg, "number of momenta (spectral)")->capture_default_str();
        c->add_option("--d", d_arg, "space-time dimension")->capture_default_str();
        c->add_option("--sign", sign, "spectral cone orientation")->check(CLI::IsMember({"-", "+"}))->capture_default_str();
        c->add_option("--aperture", aperture)->capture_default_str();
        c->add_option("--cone", cone_json, "any cone as JSON; overrides the other cone flags");
        c->add_option("--point", point, "point coordinates")->required()->expected(1, -1);
    };
    auto make_cone = [&] {
        if (!cone_json.empty()) return parse_cone(cone_json);
        if (variant == "spectral") return Cone::spectral(n_arg, d_arg, sign == "+" ? 1 : -1);
        if (variant == "lorentz-forward" || variant == "lorentz-backward")
            return Cone::lorentz(d_arg, variant == "lorentz-forward" ? 1 : -1, aperture);
        throw CLI::ValidationError("--variant", "unknown variant '" + variant + "'");
    };
    auto* contains = cone->add_subcommand("contains", "membership of a point");
    add_cone_flags(contains);
    contains->callback([&] {
        const bool in = make_cone().contains(point);
        out.emit(json(in), single("contains", in ? "true" : "false"));
    });
    auto* distance = cone->add_subcommand("distance", "Euclidean distance from a point to the cone");
    add_cone_flags(distance);
    distance->callback([&] {
        const double v = make_cone().distance(point);
        out.emit(json_number(v), single("distance", csv_cell(v)));
    });

    // ------------------------------------------------------------ space
    auto* space = app.add_subcommand("space", "weighted function-space norms");
    space->require_subcommand(1);
    std::string fn_json = R"({"kind":"gaussian","c":1})", u_json;
    ProfileFlags alpha_f{"quadratic", 2.0, 1.0}, beta_f{"power", 0.5, 1.0};
    double A = 1.0, B = 1.0;
    auto add_space_flags = [&](CLI::App* c) {
        c->add_option("--function", fn_json, "test function as JSON")->capture_default_str();
        alpha_f.add(c, "alpha-");
        beta_f.add(c, "beta-");
        c->add_option("--cone", u_json, "cone U as JSON; default: the full space");
    };
    auto make_spec = [&](const TestFunction& g) {
        const Cone U = u_json.empty() ? Cone::full_space(g.dim()) : parse_cone(u_json);
        return SpaceSpec(alpha_f.build(), beta_f.build(), U);
    };
    auto* norm = space->add_subcommand("norm", "grid estimate of the weighted sup norm at (A, B)");
    add_space_flags(norm);
    norm->add_option("--A", A)->capture_default_str();
    norm->add_option("--B", B)->capture_default_str();
    norm->callback([&] {
        const auto g = TestFunction::from_json(json::parse(fn_json));
        out.emit_report(estimate_norm(g, make_spec(g), A, B));
    });
    auto* member = space->add_subcommand("membership", "smallest lattice (A, B) with a finite norm");
    add_space_flags(member);
    member->callback([&] {
        const auto g = TestFunction::from_json(json::parse(fn_json));
        out.emit_report(check_membership_entire(g, make_spec(g)));
    });

    // ------------------------------------------------------------ wick
    auto* wick = app.add_subcommand("wick", "Wick coefficients and series");
    wick->require_subcommand(1);
    std::string ckind = "inverse-factorial";
    double sigma = 1.0, rho = 1.0;
    auto add_coeff_flags = [&](CLI::App* c) {
        c->add_option("--kind", ckind)->check(CLI::IsMember({"inverse-factorial", "geometric-damped", "free-field"}))->capture_default_str();
        c->add_option("--sigma", sigma)->capture_default_str();
        c->add_option("--rho", rho)->capture_default_str();
    };
    auto make_coeffs = [&] {
        if (ckind == "inverse-factorial") return WickCoefficients::inverse_factorial(sigma);
        if (ckind == "geometric-damped") return WickCoefficients::geometric_damped(rho, sigma);
        return WickCoefficients::free_field();
    };
    std::size_t coeff_k_max = 200;
    auto* coeffs = wick->add_subcommand("coeffs", "check the growth and product conditions on d_k");
    add_coeff_flags(coeffs);
    coeffs->add_option("--k-max", coeff_k_max)->capture_default_str();
    coeffs->callback([&] { out.emit_report(check_coefficient_conditions(make_coeffs(), coeff_k_max)); });
    double w_re = 0.0, w_im = 0.0;
    int N_max = 30;
    auto* series = wick->add_subcommand("series", "two-point series sum_k d_k^2 k! w^k");
    add_coeff_flags(series);
    series->add_option("--w-re", w_re)->capture_default_str();
    series->add_option("--w-im", w_im)->capture_default_str();
    series->add_option("--N", N_max)->capture_default_str();
    series->callback([&] {
        const Complex v = two_point_series(make_coeffs(), Complex(w_re, w_im), N_max);
        out.emit(json{{"re", v.real()}, {"im", v.imag()}}, Table{"series", {"re", "im"}, {{csv_cell(v.real()), csv_cell(v.imag())}}});
    });
    std::vector<int> legs;
    auto* count = wick->add_subcommand("contractions", "contraction matrices of a leg vector with their integer factors");
    count->add_option("--k", legs, "legs per vertex")->required()->expected(1, -1);
    count->callback([&] {
        Table t{"contractions", {"matrix", "factor"}, {}};
        json arr = json::array();
        for_each_contraction(legs, [&](const ContractionMatrix& K) {
            const auto f = contraction_factor(K);
            arr.push_back({{"entries", K.k}, {"factor", f}});
            std::string cells;
            for (std::size_t i = 0; i < K.k.size(); ++i) cells += (i ? " " : "") + std::to_string(K.k[i]);
            t.rows.push_back({cells, std::to_string(f)});
        });
        out.emit(arr, t);
    });

    // ------------------------------------------------------------ laplace
    auto* laplace = app.add_subcommand("laplace", "Fourier-Laplace transforms of cone-carried functionals");
    laplace->require_subcommand(1);
    std::string u_spec = R"({"kind":"exp-density"})";
    std::vector<double> xs, ys;
    int conv_sign = 1;
    auto* transform = laplace->add_subcommand("transform", "v(z) = (u, exp(sign i (., z)))");
    transform->add_option("--functional", u_spec, "functional as JSON")->capture_default_str();
    transform->add_option("--x", xs)->required()->expected(1, -1);
    transform->add_option("--y", ys)->required()->expected(1, -1);
    transform->add_option("--sign", conv_sign)->check(CLI::IsMember({-1, 1}))->capture_default_str();
    transform->callback([&] {
        const auto u = Functional::from_json(json::parse(u_spec));
        const auto v = laplace_transform_detailed(u, TubePoint{xs, ys}, LaplaceConvention{conv_sign});
        json j{{"re", v.value.real()}, {"im", v.value.imag()}, {"error", v.error}, {"converged", v.converged}};
        out.emit(j, Table{"transform", {"re", "im", "error"}, {{csv_cell(v.value.real()), csv_cell(v.value.imag()), csv_cell(v.error)}}});
    });
    std::string vp_json = R"({"variant":"ray","direction":[1]})", v_json = R"({"variant":"half-space","normal":[1]})";
    auto* growth = laplace->add_subcommand("growth", "fit the tube growth bound of the transform");
    growth->add_option("--functional", u_spec, "functional as JSON")->capture_default_str();
    alpha_f.add(growth, "alpha-");
    beta_f.add(growth, "beta-");
    growth->add_option("--inner", vp_json, "compact subcone V' as JSON")->capture_default_str();
    growth->add_option("--outer", v_json, "cone V as JSON")->capture_default_str();
    growth->add_option("--eps", eps)->capture_default_str();
    growth->add_option("--sign", conv_sign)->check(CLI::IsMember({-1, 1}))->capture_default_str();
    growth->callback([&] {
        const auto u = Functional::from_json(json::parse(u_spec));
        const LaplaceConvention conv{conv_sign};
        out.emit_report(laplace_growth_check([&](std::span<const Complex> z) { return laplace_transform(u, TubePoint::from(z), conv); },
                                             alpha_f.build(), beta_f.build(), parse_cone(vp_json), parse_cone(v_json), eps));
    });

    // ------------------------------------------------------------ run
    std::string scenario_path, out_dir;
    auto* run = app.add_subcommand("run", "run a scenario file; exit status 0 iff no check failed");
    run->add_option("scenario", scenario_path)->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, std::string("output directory; overrides the scenario and ") + kOutputEnvVar);
    int exit_status = 0;
    run->callback([&] {
        const auto res = run_scenario(scenario_path, out_dir.empty() ? std::nullopt : std::optional<std::string>(out_dir));
        out.emit(to_json(res.bundle), summary_table(res.bundle));
        exit_status = res.exit_status;
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const UnresolvedReference& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const ScenarioError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return exit_status;
}
