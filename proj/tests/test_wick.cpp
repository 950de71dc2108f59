#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "wickspec/spectral_demo.hpp"
#include "wickspec/wick.hpp"

using namespace wickspec;
using Catch::Approx;

namespace {

// Brute force: label the legs of every vertex and enumerate all perfect
// matchings that never pair two legs of the same vertex. Each matching
// induces a contraction matrix; the map counts matchings per matrix.
std::map<std::vector<int>, std::uint64_t> matchings_by_matrix(const std::vector<int>& k) {
    std::vector<int> owner;
    for (std::size_t j = 0; j < k.size(); ++j)
        for (int l = 0; l < k[j]; ++l) owner.push_back(int(j));
    std::map<std::vector<int>, std::uint64_t> out;
    const std::size_t n = k.size();
    std::vector<bool> used(owner.size(), false);
    std::vector<int> K(n * (n - 1) / 2, 0);
    std::function<void()> rec = [&]() {
        std::size_t a = 0;
        while (a < owner.size() && used[a]) ++a;
        if (a == owner.size()) {
            ++out[K];
            return;
        }
        used[a] = true;
        for (std::size_t b = a + 1; b < owner.size(); ++b) {
            if (used[b] || owner[b] == owner[a]) continue;
            used[b] = true;
            const auto idx = ContractionMatrix::index(n, std::size_t(owner[a]), std::size_t(owner[b]));
            ++K[idx];
            rec();
            --K[idx];
            used[b] = false;
        }
        used[a] = false;
    };
    if (!owner.empty()) rec();
    return out;
}

// Σ_{k>=0} k! x^k / (2k)! = 1 + (1/2) sqrt(πx) e^{x/4} erf(sqrt(x)/2).
double factorial_ratio_series(double x) {
    return 1.0 + 0.5 * std::sqrt(std::numbers::pi * x) * std::exp(x / 4.0) * std::erf(std::sqrt(x) / 2.0);
}

std::uint64_t binomial(int n, int k) {
    std::uint64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * std::uint64_t(n - k + i) / std::uint64_t(i);
    return r;
}

Cone pair_cone(double aperture) { return Cone::product({Cone::lorentz(2, -1, aperture), Cone::lorentz(2, 1, aperture)}); }

}  // namespace

TEST_CASE("coefficient catalog and validation") {
    const auto d = WickCoefficients::inverse_factorial();
    CHECK(d[0] == 1.0);
    CHECK(d[5] == Approx(1.0 / 120.0).epsilon(1e-14));
    CHECK(WickCoefficients::geometric_damped(2.0, 1.0)[3] == Approx(8.0 / 6.0).epsilon(1e-14));
    CHECK(WickCoefficients::free_field()[1] == 1.0);
    CHECK(WickCoefficients::free_field()[2] == 0.0);
    CHECK_THROWS_AS(WickCoefficients::user({2.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(WickCoefficients::user({1.0, -0.5}), std::invalid_argument);
    const auto u = WickCoefficients::user({1.0, 0.5, 0.0, 0.25});
    CHECK(u.k_max() == 3);
    CHECK(u[2] == 0.0);
    CHECK_THROWS_AS(u.ln(4), std::out_of_range);
    for (const auto& c : {d, WickCoefficients::geometric_damped(0.5, 0.7), WickCoefficients::free_field(), u})
        CHECK(WickCoefficients::from_json(c.to_json()).to_json() == c.to_json());
}

TEST_CASE("coefficient conditions: inverse factorial passes with (C, H) = (1, 2)") {
    const auto d = WickCoefficients::inverse_factorial();
    const auto r = check_coefficient_conditions(d);
    CHECK(r.status == Status::pass);
    CHECK(r.constants.at("H") == Approx(2.0).epsilon(1e-12));
    CHECK(r.constants.at("C") == Approx(1.0).epsilon(1e-12));
    // Oracle: d_k d_l / d_{k+l} = binom(k+l, k) <= 2^{k+l}, equality at k = l = 0.
    double worst = 0.0;
    for (int n = 0; n <= 60; ++n)
        for (int k = 0; k <= n; ++k) worst = std::max(worst, double(binomial(n, k)) / std::pow(2.0, n));
    CHECK(std::exp(coefficient_product_constant(d, 2.0, 60)) == Approx(worst).epsilon(1e-12));
}

TEST_CASE("coefficient conditions: fractional power passes at H = 2^0.6") {
    const auto d = WickCoefficients::inverse_factorial(0.6);
    const auto r = check_coefficient_conditions(d);
    CHECK(r.status == Status::pass);
    CHECK(r.constants.at("H") <= std::pow(2.0, 0.6) * (1 + 1e-12));
    // binom^0.6 <= (2^n)^0.6, so C = 1 at H = 2^0.6.
    CHECK(std::exp(coefficient_product_constant(d, std::pow(2.0, 0.6), 200)) == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("coefficient conditions: failures carry witnesses") {
    const auto flat = check_coefficient_conditions(WickCoefficients::inverse_factorial(0.0));
    CHECK(flat.status == Status::fail);
    CHECK(flat.witness.count("trend_slope") == 1);
    // (k! d_k²)^{1/k} -> ρ² for d_k = ρ^k/sqrt(k!): a nonzero limit.
    CHECK(check_coefficient_conditions(WickCoefficients::geometric_damped(2.0, 0.5)).status == Status::fail);
    // d_1² > 0 = C H² d_2 for every (C, H).
    const auto free = check_coefficient_conditions(WickCoefficients::free_field());
    CHECK(free.status == Status::fail);
    CHECK(free.witness.at("k") == 1.0);
    CHECK(free.witness.at("l") == 1.0);
    CHECK_THROWS_AS(check_coefficient_conditions(WickCoefficients::inverse_factorial(), 10), std::invalid_argument);
    CHECK_THROWS_AS(check_coefficient_conditions(WickCoefficients::user({1.0, 0.5}), 30), std::invalid_argument);
}

TEST_CASE("contraction factors match brute-force leg matchings") {
    const std::vector<std::vector<int>> cases{{2, 2}, {1, 1, 1, 1}, {2, 2, 2}, {3, 1, 2}, {4, 2, 2}, {3, 3}, {2, 1, 1, 2}, {3, 3, 2}, {0, 2, 2}};
    for (const auto& k : cases) {
        const auto brute = matchings_by_matrix(k);
        std::map<std::vector<int>, std::uint64_t> ours;
        for_each_contraction(k, [&](const ContractionMatrix& K) {
            CHECK(K.row_sums() == k);
            ours[K.k] = contraction_factor(K);
            CHECK(std::exp(log_contraction_factor(K)) == Approx(double(contraction_factor(K))).epsilon(1e-12));
        });
        CHECK(ours == brute);
    }
}

TEST_CASE("pairing sum equals the sum over matchings") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (const auto& k : std::vector<std::vector<int>>{{2, 2, 2}, {1, 2, 3}, {2, 1, 1, 2}, {4, 4}}) {
        const std::size_t n = k.size();
        std::vector<std::vector<Complex>> w(n, std::vector<Complex>(n));
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t m = j + 1; m < n; ++m) w[j][m] = Complex(u(rng), u(rng));
        Complex ref = 0.0;
        for (const auto& [K, count] : matchings_by_matrix(k)) {
            Complex t = double(count);
            const auto ps = ContractionMatrix::pairs(n);
            for (std::size_t i = 0; i < ps.size(); ++i) t *= std::pow(w[ps[i].first][ps[i].second], K[i]);
            ref += t;
        }
        const auto s = wick_pairing_sum(k, w);
        CHECK(std::abs(s.value - ref) <= 1e-12 * (1.0 + std::abs(ref)));
    }
    const auto odd = wick_pairing_sum({1, 2}, {{0.0, 1.0}, {1.0, 0.0}});
    CHECK(odd.odd_degree);
    CHECK(odd.value == Complex(0.0));
}

TEST_CASE("two-point reduction reproduces the exponential") {
    const auto d = WickCoefficients::inverse_factorial();
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        Complex w(u(rng), u(rng));
        w *= 5.0 * std::abs(u(rng)) / std::max(1e-3, std::abs(w));
        const Complex s = two_point_series(d, w, 30);
        CHECK(std::abs(s - std::exp(w)) <= 1e-10 * std::abs(std::exp(w)));
    }
    // The general n-point sum reduces to the same series for two points.
    const Complex w0(1.2, -0.7);
    const auto konst = TwoPointModel::user(
        2, [w0](std::span<const Complex>) { return w0; },
        [](std::span<const Complex>, std::span<const Complex>) { return 1.0; }, {"1", [](double) { return 1.0; }},
        {"1", [](double) { return 1.0; }});
    const std::vector<CVec> pts{{Complex(0.0, -0.1), 0.0}, {Complex(0.3, 0.2), 0.1}};
    const auto t = truncated_npoint({d}, konst, pts, 30);
    CHECK(std::abs(t.value - two_point_series(d, w0, 30)) <= 1e-14);
    CHECK(std::abs(t.value - std::exp(w0)) <= 1e-10 * std::abs(std::exp(w0)));
}

TEST_CASE("n-point tail bounds decrease and dominate the remainder") {
    const auto d = WickCoefficients::inverse_factorial();
    const auto model = TwoPointModel::mock_massless_2d();
    const std::vector<CVec> pts{{Complex(0.3, -0.2), Complex(0.1, 0.0)},
                                {Complex(-0.5, 0.4), Complex(0.2, 0.1)},
                                {Complex(0.1, 1.1), Complex(-0.2, 0.05)}};
    const auto ref = truncated_npoint({d}, model, pts, 40);
    double prev = kInf;
    for (int N : {6, 10, 14, 18, 22}) {
        const auto r = truncated_npoint({d}, model, pts, N);
        REQUIRE(r.tail_certified);
        CHECK(r.tail_bound < prev);
        prev = r.tail_bound;
        CHECK(std::abs(ref.value - r.value) <= r.tail_bound * (1 + 1e-9) + 1e-14);
    }
}

TEST_CASE("n-point sum is symmetric under joint permutation of points and coefficient rows") {
    const auto model = TwoPointModel::mock_massless_2d();  // w is even in ζ
    const std::vector<WickCoefficients> rows{WickCoefficients::inverse_factorial(), WickCoefficients::inverse_factorial(0.7),
                                             WickCoefficients::geometric_damped(0.5, 1.0)};
    const std::vector<CVec> pts{{Complex(0.3, -0.2), Complex(0.1, 0.0)},
                                {Complex(-0.5, 0.4), Complex(0.2, 0.1)},
                                {Complex(0.1, 1.1), Complex(-0.2, 0.05)}};
    const auto base = truncated_npoint(rows, model, pts, 16).value;
    std::vector<std::size_t> perm{0, 1, 2};
    while (std::next_permutation(perm.begin(), perm.end())) {
        std::vector<CVec> p2;
        std::vector<WickCoefficients> r2;
        for (auto i : perm) p2.push_back(pts[i]), r2.push_back(rows[i]);
        CHECK(std::abs(truncated_npoint(r2, model, p2, 16).value - base) <= 1e-12 * std::abs(base));
    }
}

TEST_CASE("mock majorant satisfies the Cauchy-Schwarz type inequality") {
    const auto model = TwoPointModel::mock_massless_2d();
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0), lg(-3.0, 3.0);
    for (int i = 0; i < 5000; ++i) {
        const double t = std::pow(10.0, lg(rng)), a = 0.999 * u(rng);
        const Vec eta{t, t * a};
        const double R = std::pow(10.0, lg(rng));
        const Vec x{R * u(rng), R * u(rng)}, xp{R * u(rng), R * u(rng)};
        const CVec zeta{Complex(x[0] - xp[0], -2 * eta[0]), Complex(x[1] - xp[1], -2 * eta[1])};
        const CVec a1{Complex(x[0], -eta[0]), Complex(x[1], -eta[1])}, a2{Complex(x[0], eta[0]), Complex(x[1], eta[1])};
        const CVec b1{Complex(xp[0], -eta[0]), Complex(xp[1], -eta[1])}, b2{Complex(xp[0], eta[0]), Complex(xp[1], eta[1])};
        CHECK(std::norm(model.w(zeta)) <= model.w_maj(a1, a2) * model.w_maj(b1, b2));
    }
}

TEST_CASE("majorant fits pass for the built-in models and C2 grows toward the cone boundary") {
    const auto mock = majorant_bound_check(TwoPointModel::mock_massless_2d(), pair_cone(0.5));
    CHECK(mock.status == Status::pass);
    double prev = 0.0;
    for (double a : {0.5, 0.8, 0.95}) {
        const auto r = majorant_bound_check(TwoPointModel::rational(1.0, 1), pair_cone(a));
        CHECK(r.status == Status::pass);
        CHECK(r.constants.at("C2") > prev);
        prev = r.constants.at("C2");
    }
    // The full light cone is not compact in itself.
    CHECK(majorant_bound_check(TwoPointModel::rational(), pair_cone(1.0)).status == Status::fail);
}

TEST_CASE("majorant fit fails when the UV envelope is too weak") {
    const auto mock = TwoPointModel::mock_massless_2d();
    const auto weak = TwoPointModel::user(
        2, [&](std::span<const Complex> z) { return mock.w(z); },
        [&](std::span<const Complex> z, std::span<const Complex> zp) { return mock.w_maj(z, zp); }, mock.ir(),
        {"1+ln(1+1/t)", [](double t) { return 1.0 + std::log1p(1.0 / t); }});
    const auto r = majorant_bound_check(weak, pair_cone(0.5));
    CHECK(r.status == Status::fail);
    CHECK_FALSE(r.witness.empty());
}

TEST_CASE("product bound follows from the majorant fit") {
    for (const auto& model : {TwoPointModel::mock_massless_2d(), TwoPointModel::rational()}) {
        const auto Vp = pair_cone(0.8);
        const auto m = majorant_bound_check(model, Vp);
        REQUIRE(m.status == Status::pass);
        const MajorantFit c{m.constants.at("C0"), m.constants.at("C1"), m.constants.at("C2")};
        for (int k : {0, 1, 3}) CHECK(product_bound_check(model, ContractionMatrix{2, {k}}, Vp, c).status == Status::pass);
        CHECK(product_bound_check(model, ContractionMatrix{4, {1, 2, 0, 1, 1, 2}}, Vp, c).status == Status::pass);
        // Shrinking the constants below the fit must break the single-factor case.
        const MajorantFit small{c.C0 / 50, c.C1 / 50, c.C2 / 50};
        CHECK(product_bound_check(model, ContractionMatrix{2, {1}}, Vp, small).status == Status::fail);
    }
}

TEST_CASE("indicator series matches its closed form") {
    const auto d = WickCoefficients::inverse_factorial();
    for (double x : {0.5, 3.0, 40.0, 700.0}) {
        const auto s = indicator_series(d, 1.0, x);
        CHECK(s.certified);
        CHECK(s.ln_value == Approx(std::log(factorial_ratio_series(x))).epsilon(1e-12));
    }
    CHECK(indicator_series(d, 0.0, 5.0).ln_value == 0.0);
    CHECK(indicator_series(WickCoefficients::free_field(), 3.0, 5.0).ln_value == 0.0);
    CHECK_FALSE(indicator_series(WickCoefficients::user({1.0, 0.5, 0.1}), 1.0, 5.0).certified);
}

TEST_CASE("indicator conditions hold for the mock model and fail for the rational one") {
    const auto d = WickCoefficients::inverse_factorial();
    const auto mock = TwoPointModel::mock_massless_2d();
    const auto r = wick_indicator_check(d, mock.ir(), mock.uv(), FunctionProfile::power(2.0), FunctionProfile::power(0.5),
                                        {1.0, 10.0}, {0.5, 0.1});
    CHECK(r.status == Status::pass);
    // Smaller ε needs a larger constant.
    CHECK(r.constants.at("left_C[L=10,eps=0.1]") > r.constants.at("left_C[L=10,eps=0.5]"));
    // With L = 0 the series is 1 and a(0) = b(0)-side infimum is 1.
    const auto z = wick_indicator_check(d, mock.ir(), mock.uv(), FunctionProfile::power(2.0), FunctionProfile::power(0.5),
                                        {0.0}, {0.5});
    CHECK(z.constants.at("left_C[L=0,eps=0.5]") == Approx(1.0).epsilon(1e-12));
    // UV envelope t^-2 makes the infimum grow like s^{2/3}, beyond ln b(s) ~ sqrt(s).
    const auto rat = TwoPointModel::rational();
    const auto f = wick_indicator_check(d, rat.ir(), rat.uv(), FunctionProfile::power(2.0), FunctionProfile::power(0.5), {1.0},
                                        {0.5});
    CHECK(f.status == Status::fail);
    CHECK(f.witness.count("right_s_C[L=1,eps=0.5]") == 1);
}

TEST_CASE("JSON round trip of two-point models") {
    for (const auto& m : {TwoPointModel::mock_massless_2d(), TwoPointModel::rational(2.0, 2)})
        CHECK(TwoPointModel::from_json(m.to_json()).to_json() == m.to_json());
    CHECK_THROWS(TwoPointModel::from_json(nlohmann::json{{"kind", "massive"}}));
}

TEST_CASE("lattice spectral demo") {
    const auto model = TwoPointModel::mock_massless_2d();
    LatticeSpec flat;
    flat.window = Window::none;
    // A constant transforms to a single lattice delta at p = 0.
    CHECK(spectral_fft_demo(model, WickCoefficients::inverse_factorial(), 1, flat).outside_fraction <= 1e-28);
    for (const auto& d : {WickCoefficients::free_field(), WickCoefficients::inverse_factorial()}) {
        const auto r = spectral_fft_check(model, d, 2, {256, 512, 1024});
        CHECK(r.status == Status::pass);
    }
    LatticeSpec bad;
    bad.y = {0.5, 0.0};
    CHECK_THROWS_AS(spectral_fft_demo(model, WickCoefficients::free_field(), 2, bad), std::invalid_argument);
}
