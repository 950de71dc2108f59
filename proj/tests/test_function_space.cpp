#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "wickspec/function_space.hpp"

using namespace wickspec;
using Catch::Approx;

namespace {

std::vector<TestFunction> catalog() {
    return {TestFunction::gaussian(1.0),
            TestFunction::gaussian(-0.25),
            TestFunction::cosh_decay(),
            TestFunction::modulated({3.0}, 1.0),
            TestFunction::poly_gaussian({2}, 0.5),
            TestFunction::product({TestFunction::gaussian(1.0), TestFunction::cosh_decay()}),
            TestFunction::scaled(Complex(2.0, -1.0), TestFunction::gaussian(2.0, 2))};
}

SpaceSpec gauss_space() { return SpaceSpec::full(FunctionProfile::quadratic(), FunctionProfile::power(0.5)); }

}  // namespace

TEST_CASE("catalog functions are entire") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (const auto& g : catalog()) {
        for (int i = 0; i < 50; ++i) {
            CVec z(g.dim());
            for (auto& x : z) x = Complex(u(rng), u(rng));
            CHECK(cauchy_riemann_residual(g, z) <= 1e-6);
        }
    }
}

TEST_CASE("closed-form moduli") {
    const auto g = TestFunction::gaussian(1.0);
    const auto h = TestFunction::cosh_decay();
    for (double p : {-3.0, -0.7, 0.0, 1.2, 4.0})
        for (double q : {-2.0, -0.3, 0.0, 0.9, 3.0}) {
            CHECK(std::abs(g.at({p, q})) == Approx(std::exp(q * q - p * p)).epsilon(1e-12));
            CHECK(std::abs(h.at({p, q})) == Approx(std::exp(-4.0 * std::cosh(p) * std::cos(q))).epsilon(1e-12));
            // Direct evaluation without the log representation.
            CHECK(std::abs(g.at({p, q}) - std::exp(-Complex(p, q) * Complex(p, q))) <= 1e-12 * std::abs(g.at({p, q})));
        }
    // Large moduli stay representable in log form.
    CHECK(g.log_abs_at({0.0, 40.0}) == Approx(1600.0));
}

TEST_CASE("products factorize and JSON round-trips") {
    const auto a = TestFunction::gaussian(1.0), b = TestFunction::modulated({2.0}, 0.5);
    const auto ab = TestFunction::product({a, b});
    const CVec z{Complex(0.3, -0.2), Complex(-1.1, 0.4)};
    CHECK(std::abs(ab(z) - a.at(z[0]) * b.at(z[1])) <= 1e-14);
    for (const auto& g : catalog()) {
        const auto back = TestFunction::from_json(g.to_json());
        CVec w(g.dim(), Complex(0.37, 0.21));
        CHECK(std::abs(back(w) - g(w)) <= 1e-14 * std::max(1.0, std::abs(g(w))));
    }
    CHECK_THROWS(TestFunction::from_json(nlohmann::json{{"kind", "spline"}}));
    CHECK_THROWS(TestFunction::times(a, ab).to_json());
}

TEST_CASE("norm estimate: trivial cases and a grid oracle") {
    const auto spec = gauss_space();
    const auto z = estimate_norm(TestFunction::zero(), spec, 2.0, 1.0);
    CHECK(z.passed());
    CHECK(z.constants.at("norm") == 0.0);

    const auto g = TestFunction::gaussian(1.0);
    const auto r = estimate_norm(g, spec, 2.0, 1.0);
    REQUIRE(r.passed());
    // |g| · weight = exp(-p² - 3q² + sqrt(p)), maximal at q = 0, p^{3/2} = 1/4.
    double oracle = -kInf;
    for (int i = 0; i <= 200000; ++i) {
        const double p = 2.0 * i / 200000.0;
        oracle = std::max(oracle, -p * p + std::sqrt(p));
    }
    CHECK(r.constants.at("ln_norm") <= oracle + 1e-12);
    CHECK(r.constants.at("ln_norm") >= oracle - 2e-3);

    const auto c = estimate_norm(TestFunction::scaled(Complex(0.0, -3.5), g), spec, 2.0, 1.0);
    CHECK(c.constants.at("norm") == Approx(3.5 * r.constants.at("norm")).epsilon(1e-12));
}

TEST_CASE("norm estimate is monotone in A and B") {
    const auto spec = gauss_space();
    for (const auto& g : {TestFunction::gaussian(1.0), TestFunction::modulated({3.0}, 1.0), TestFunction::poly_gaussian({3}, 1.0)}) {
        for (double A : {1.5, 2.0, 4.0})
            for (double B : {0.5, 1.0, 2.0}) {
                const auto base = estimate_norm_value(g, spec, A, B);
                REQUIRE(base.finite);
                for (auto [A2, B2] : {std::pair{A * 2, B}, std::pair{A, B * 2}, std::pair{A * 1.5, B * 3}}) {
                    const auto more = estimate_norm_value(g, spec, A2, B2);
                    REQUIRE(more.finite);
                    CHECK(std::exp(more.ln_norm) <= std::exp(base.ln_norm) * (1 + 1e-9));
                }
            }
    }
}

TEST_CASE("entire membership") {
    const auto spec = gauss_space();
    const auto g = check_membership_entire(TestFunction::gaussian(1.0), spec);
    REQUIRE(g.passed());
    CHECK(g.constants.at("A") == 2.0);

    const auto one = check_membership_entire(TestFunction::constant(1.0), spec);
    CHECK(one.failed());
    CHECK(std::abs(one.witness.at("p0")) >= 1000.0);

    // The strip space with linear β: e^{-4 cosh z} decays like e^{-e^{|x|}} for |y| < π/3.
    const SpaceSpec strip(FunctionProfile::linear(), FunctionProfile::linear(), Cone::full_space(1), 1.0);
    const auto h = check_membership_entire(TestFunction::cosh_decay(), strip);
    REQUIRE(h.passed());
    CHECK(h.constants.at("A") >= 3.0 / std::numbers::pi);
    // Below A = 3/π the strip reaches |y| = π/2, where |g| = 1 has no decay.
    CHECK(estimate_norm(TestFunction::cosh_decay(), strip, 0.5, 1.0).failed());
}

TEST_CASE("smooth membership with sequences from (s², √s)") {
    const auto a = defining_sequence(FunctionProfile::quadratic(), SequenceRole::a_from_alpha, 16);
    const auto b = defining_sequence(FunctionProfile::power(0.5), SequenceRole::b_from_beta, 16);
    const auto g = check_membership_smooth(TestFunction::gaussian(1.0), a, b, 16, 16);
    CHECK(g.passed());
    CHECK(g.warnings.empty());

    const auto z = check_membership_smooth(TestFunction::zero(), a, b, 8, 8);
    CHECK(z.passed());
    CHECK(z.constants.at("C") == 0.0);

    const auto one = check_membership_smooth(TestFunction::constant(1.0), a, b, 8, 8);
    CHECK(one.failed());
    CHECK(one.witness.at("lambda") >= 1.0);
}

TEST_CASE("Cauchy-circle derivatives of the gaussian match Hermite values") {
    // d^k/dp^k e^{-p²} = (-1)^k H_k(p) e^{-p²}, with H_{k+1} = 2p H_k - 2k H_{k-1}.
    const auto g = TestFunction::gaussian(1.0);
    for (double p : {0.0, 0.4, 1.3, -2.2})
        for (int k = 1; k <= 12; ++k) {
            double h0 = 1.0, h1 = 2.0 * p;
            for (int j = 1; j < k; ++j) {
                const double h2 = 2.0 * p * h1 - 2.0 * j * h0;
                h0 = h1;
                h1 = h2;
            }
            const double exact = std::abs(h1) * std::exp(-p * p);
            const auto [ln_v, ln_noise] = detail::cauchy_log_derivative(g, p, k, 2.0);
            if (exact > 1e-6) {
                CHECK(std::exp(ln_v) == Approx(exact).epsilon(1e-6));
                CHECK(ln_noise < ln_v);
            }
        }
}

TEST_CASE("entire and smooth descriptions agree") {
    const auto spec = gauss_space();
    const auto g = entire_smooth_crosscheck(TestFunction::gaussian(1.0), spec);
    CHECK(g.passed());
    CHECK(g.details["member"] == true);
    const auto one = entire_smooth_crosscheck(TestFunction::constant(1.0), spec, 8, 8);
    CHECK(one.passed());
    CHECK(one.details["member"] == false);

    const auto mod = entire_smooth_crosscheck(TestFunction::modulated({6.0}, 1.0), spec);
    CHECK(mod.passed());
    CHECK(mod.details["member"] == true);
    const double A_mod = mod.details["smooth"]["constants"]["A"].get<double>();
    const double A_g = g.details["smooth"]["constants"]["A"].get<double>();
    CHECK(A_mod > A_g);
}

TEST_CASE("embedding constant chain bounds the fitted constants") {
    // (2(A + H/B + ε))^κ (2B)^λ a_κ b_λ with the entire-side (A, B) of the gaussian.
    const auto spec = gauss_space();
    const auto entire = check_membership_entire(TestFunction::gaussian(1.0), spec);
    REQUIRE(entire.passed());
    const auto prec = check_precedes(spec.beta, spec.alpha);
    REQUIRE(prec.constants);
    const double A = entire.constants.at("A"), B = entire.constants.at("B"), H = prec.constants->second, eps = 0.1;
    const auto a = defining_sequence(spec.alpha, SequenceRole::a_from_alpha, 16);
    const auto b = defining_sequence(spec.beta, SequenceRole::b_from_beta, 16);
    const auto t = derivative_table(TestFunction::gaussian(1.0), 16, 16);
    CHECK(smooth_fit_stable(t, a, b, 2.0 * (A + H / B + eps), 2.0 * B));
    CHECK(std::isfinite(fit_smooth_constant(t, a, b, 2.0 * (A + H / B + eps), 2.0 * B, 16, 16)));
}

TEST_CASE("Riemann-sum approximation") {
    const auto g = TestFunction::gaussian(1.0), e0 = TestFunction::gaussian(1.0);
    const auto trace = riemann_trace(g, e0, {2, 4, 8, 16}, gauss_space(), 2.0, 1.0);
    REQUIRE(trace.size() == 4);
    for (std::size_t i = 1; i < trace.size(); ++i) {
        CHECK(trace[i].sup_error <= trace[i - 1].sup_error + 1e-15);
        CHECK(trace[i].norm_error <= trace[i - 1].norm_error + 1e-15);
        CHECK(std::abs(trace[i].e_at_zero - 1.0) <= std::abs(trace[i - 1].e_at_zero - 1.0) + 1e-15);
    }
    CHECK(trace.front().sup_error > 1e-6);
    CHECK(trace.back().sup_error < 1e-12);
    CHECK(std::abs(trace.back().e_at_zero - 1.0) < 1e-12);

    const auto z = riemann_approximate(TestFunction::zero(), e0, 4);
    CHECK(z.g_nu.at({0.3, 0.1}) == Complex(0.0));
}

TEST_CASE("cone decomposition on the line") {
    const auto K1 = Cone::ray({1.0}), K2 = Cone::ray({-1.0});
    const auto e0 = normalized(TestFunction::gaussian(64.0));
    const auto g = TestFunction::gaussian(-0.25);
    const auto d = cone_decompose(g, K1, K2, e0, FunctionProfile::quadratic(), FunctionProfile::power(0.5));
    CHECK(d.e.at(0.0).real() == Approx(0.5).epsilon(1e-10));
    CHECK(d.report.constants.at("identity_max_rel") <= 1e-12);
    CHECK(d.report.details["constraint_ok"] == true);
    CHECK(d.report.passed());

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-6.0, 6.0), v(-0.1, 0.1);
    for (int i = 0; i < 200; ++i) {
        const Complex z(u(rng), v(rng));
        const Complex gv = g.at(z);
        CHECK(std::abs(d.g1.at(z) + d.g2.at(z) - gv) <= 1e-12 * std::abs(gv));
    }
    // e decays on K1 and tends to 1 on K2.
    CHECK(std::abs(d.e.at(2.0)) < 1e-100);
    CHECK(std::abs(d.e.at(-2.0) - 1.0) < 1e-12);
    CHECK_THROWS(cone_decompose(g, K1, K2, TestFunction::gaussian(64.0), FunctionProfile::quadratic(),
                                FunctionProfile::power(0.5)));
}
