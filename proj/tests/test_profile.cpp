#include <catch_amalgamated.hpp>

#include <cmath>

#include "wickspec/profile.hpp"

using namespace wickspec;
using Catch::Approx;

namespace {

// Independent oracle: brute sup/inf over a dense log grid, then a local
// dense rescan around the best point.
template <class F>
double dense_sup(F f, double lo = 1e-8, double hi = 1e8, int n = 200000) {
    double best = -kInf, arg = lo;
    const double a = std::log(lo), b = std::log(hi);
    for (int i = 0; i <= n; ++i) {
        const double s = std::exp(a + (b - a) * i / n);
        const double v = f(s);
        if (v > best) best = v, arg = s;
    }
    const double step = (b - a) / n;
    for (int i = -2000; i <= 2000; ++i) {
        const double s = arg * std::exp(step * i / 1000.0);
        best = std::max(best, f(s));
    }
    return best;
}

}  // namespace

TEST_CASE("catalog profiles are normalized, nonnegative and nondecreasing") {
    const std::vector<FunctionProfile> cat{FunctionProfile::power(0.5), FunctionProfile::power(2.5, 3.0),
                                           FunctionProfile::quadratic(),  FunctionProfile::exp_minus_one(),
                                           FunctionProfile::linear(),     FunctionProfile::entropy(),
                                           FunctionProfile::log_growth()};
    const auto g = log_grid(1e-3, 1e2, 300);
    for (const auto& p : cat) {
        CHECK(p(0.0) == 0.0);
        double prev = 0.0;
        for (double s : g) {
            const double v = p(s);
            CHECK(v >= 0.0);
            CHECK(v >= prev);
            prev = v;
        }
    }
}

TEST_CASE("declared attributes are validated at construction") {
    CHECK(FunctionProfile::power(0.5).attributes().concave);
    CHECK_FALSE(FunctionProfile::power(0.5).attributes().convex);
    // Decreasing samples declared increasing must be rejected.
    ProfileAttributes inc;
    CHECK_THROWS_AS(FunctionProfile::sampled({0.0, 1.0, 2.0}, {0.0, -1.0, -2.0}, inc), std::invalid_argument);
    ProfileAttributes cvx;
    cvx.convex = true;
    CHECK_THROWS_AS(FunctionProfile::sampled({0.0, 1.0, 2.0, 3.0}, {0.0, 1.0, 1.5, 1.7}, cvx), std::invalid_argument);
    CHECK_THROWS(FunctionProfile::power(-1.0));
}

TEST_CASE("sampled profiles interpolate linearly and detect attributes") {
    auto p = FunctionProfile::sampled({1.0, 2.0, 3.0, 4.0}, {5.0, 6.0, 8.0, 11.0});
    CHECK(p(0.0) == 0.0);  // value below the first sample is normalized away
    CHECK(p(2.5) == Approx(2.0));
    CHECK(p(5.0) == Approx(9.0));
    CHECK(p.attributes().convex);
    CHECK(p.attributes().increasing);
    auto j = to_json(p);
    auto q = profile_from_json(j);
    CHECK(q(3.5) == Approx(p(3.5)));
}

TEST_CASE("profile JSON round trip") {
    auto p = profile_from_json(nlohmann::json::parse(R"({"kind":"power","params":{"gamma":0.9}})"));
    CHECK(p(2.0) == Approx(std::pow(2.0, 0.9)));
    auto q = profile_from_json(to_json(FunctionProfile::power(1.5, 2.0)));
    CHECK(q(4.0) == Approx(16.0));
    CHECK_THROWS(profile_from_json(nlohmann::json::parse(R"({"kind":"nope"})")));
}

TEST_CASE("convex conjugate closed-form cases") {
    CHECK(convex_conjugate(FunctionProfile::quadratic(), 2.0).value() == Approx(1.0).epsilon(1e-9));
    const auto lin = FunctionProfile::linear();
    CHECK(convex_conjugate(lin, 0.5).value() == Approx(0.0).margin(1e-12));
    CHECK(convex_conjugate(lin, 2.0).is_pos_inf());
    // r ln r - r + 1 at r = e equals 1.
    const double e = std::exp(1.0);
    CHECK(convex_conjugate(FunctionProfile::exp_minus_one(), e).value() == Approx(1.0).epsilon(1e-9));
    CHECK_THROWS(convex_conjugate(FunctionProfile::power(0.5), 1.0));
}

TEST_CASE("convex conjugate agrees with a dense grid oracle") {
    for (const auto& a : {FunctionProfile::exp_minus_one(), FunctionProfile::entropy(), FunctionProfile::power(1.7, 0.3)}) {
        for (double r : {0.3, 1.0, 2.7, 9.0}) {
            const double oracle = std::max(0.0, dense_sup([&](double s) { return r * s - a(s); }));
            CHECK(convex_conjugate(a, r).value() == Approx(oracle).epsilon(1e-8).margin(1e-12));
        }
    }
}

TEST_CASE("concave conjugate examples") {
    CHECK(concave_conjugate(FunctionProfile::power(0.5), 0.5).value() == Approx(-0.5).epsilon(1e-9));
    CHECK(concave_conjugate(FunctionProfile::power(2.0 / 3.0), 1.0).value() == Approx(-4.0 / 27.0).epsilon(1e-9));
    const auto b = FunctionProfile::power(0.9);
    const double oracle = -dense_sup([&](double s) { return -(0.3 * s - b(s)); });
    CHECK(concave_conjugate(b, 0.3).value() == Approx(oracle).epsilon(1e-8));
    CHECK_THROWS_AS(concave_conjugate(b, 0.0), std::domain_error);
}

TEST_CASE("conjugate properties: sign, monotonicity, subadditivity") {
    const auto a = FunctionProfile::entropy();
    const auto b = FunctionProfile::power(0.5);
    double prev_a = -kInf, prev_b = -kInf;
    for (double x : log_grid(1e-2, 10.0, 60)) {
        const double ca = convex_conjugate(a, x).value();
        const double cb = concave_conjugate(b, x).value();
        CHECK(ca >= 0.0);
        CHECK(cb <= 0.0);
        CHECK(ca >= prev_a - 1e-12);
        CHECK(cb >= prev_b - 1e-12);
        CHECK(2.0 * ca <= convex_conjugate(a, 2.0 * x).value() + 1e-12);
        prev_a = ca;
        prev_b = cb;
    }
}

TEST_CASE("doubling transfer: 2β*(t) >= β*(2t/h)") {
    const auto b = FunctionProfile::power(2.0 / 3.0);
    const auto d = check_doubling(b, 16.0);
    REQUIRE(d.h);
    for (double t : log_grid(1e-2, 1e2, 40))
        CHECK(2.0 * concave_conjugate(b, t).value() >= concave_conjugate(b, 2.0 * t / *d.h).value() - 1e-9);
}

TEST_CASE("double conjugate recovers the profile") {
    const auto a = FunctionProfile::quadratic();
    for (double s : {0.01, 0.5, 3.0, 200.0})
        CHECK(double_conjugate(a, s).value() == Approx(a(s)).epsilon(1e-6));
    // The maximizing r = e^s lies far beyond the default search window.
    const auto e = FunctionProfile::exp_minus_one();
    for (double s : {27.0, 50.0, 100.0}) CHECK(double_conjugate(e, s).value() == Approx(e(s)).epsilon(1e-9));
}

TEST_CASE("doubling check") {
    auto sq = check_doubling(FunctionProfile::power(0.5), 16.0);
    REQUIRE(sq.h);
    CHECK(*sq.h == Approx(4.0).epsilon(1e-9));
    auto p23 = check_doubling(FunctionProfile::power(2.0 / 3.0), 16.0);
    REQUIRE(p23.h);
    CHECK(*p23.h == Approx(std::pow(2.0, 1.5)).epsilon(1e-9));
    auto lg = check_doubling(FunctionProfile::log_growth(), 16.0);
    CHECK_FALSE(lg.h);
    CHECK(lg.witness_s > 16.0);
}

TEST_CASE("nonquasianalyticity classification") {
    auto a = check_nonquasianalytic(FunctionProfile::power(0.5));
    CHECK(a.status == Status::pass);
    CHECK(a.integral.value() == Approx(2.0).epsilon(1e-9));
    auto b = check_nonquasianalytic(FunctionProfile::power(0.9));
    CHECK(b.status == Status::pass);
    CHECK(b.integral.value() == Approx(10.0).epsilon(1e-8));
    auto c = check_nonquasianalytic(FunctionProfile::linear());
    CHECK(c.status == Status::fail);
    CHECK(c.integral.is_pos_inf());
    // ∫_1^∞ ln(1+s)/s² ds = 2 ln 2.
    auto d = check_nonquasianalytic(FunctionProfile::log_growth());
    CHECK(d.status == Status::pass);
    CHECK(d.integral.value() == Approx(2.0 * std::log(2.0)).epsilon(1e-6));
}

TEST_CASE("order relation") {
    auto r = check_precedes(FunctionProfile::power(0.5), FunctionProfile::linear());
    REQUIRE(r.constants);
    CHECK(r.constants->second == 1.0);
    CHECK(r.constants->first <= 1.0);
    CHECK(r.constants->first == Approx(0.25).epsilon(1e-9));
    auto bad = check_precedes(FunctionProfile::linear(), FunctionProfile::power(0.5));
    CHECK_FALSE(bad.constants);
    CHECK(bad.witness_s > 1e3);
    auto refl = check_precedes(FunctionProfile::power(0.9), FunctionProfile::power(0.9));
    REQUIRE(refl.constants);
    CHECK(refl.constants->first == 0.0);
    CHECK(refl.constants->second == 1.0);
}

TEST_CASE("log shift margin") {
    // Oracle: maximize √s + ln s - √(2s) directly.
    const double oracle = dense_sup([](double s) { return std::sqrt(s) + std::log(s) - std::sqrt(2.0 * s); }, 1e-3, 1e6);
    auto m = log_shift_margin(FunctionProfile::power(0.5), 1.0);
    REQUIRE(m.c_eps);
    CHECK(*m.c_eps == Approx(oracle).epsilon(1e-9));
    CHECK(log_shift_margin(FunctionProfile::power(0.9), 0.1).c_eps);
    auto f = log_shift_margin(FunctionProfile::log_growth(), 1.0);
    CHECK_FALSE(f.c_eps);
    CHECK(f.witness_s == 1e6);
}

TEST_CASE("doubling implies eventual log dominance for any c") {
    const auto b = FunctionProfile::power(0.5);
    REQUIRE(check_doubling(b, 16.0).h);
    for (double c : {1.0, 5.0, 20.0}) CHECK(log_dominance_threshold(b, c, log_grid(1e-3, 1e8, 512)));
}
