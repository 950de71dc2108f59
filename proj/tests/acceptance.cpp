// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 iff all pass.
// Each criterion compares the library against a computation done here.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "wickspec/wickspec.hpp"

using namespace wickspec;

namespace {

struct Verdict {
    bool ok = true;
    std::ostringstream why;

    // Records a failed condition; returns `cond` so callers can chain.
    bool require(bool cond, const std::string& what) {
        if (!cond && ok) why << what;
        ok = ok && cond;
        return cond;
    }
};

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// Minimizes a unimodal function of ln s by a dense scan plus golden refinement.
double scan_min_log(const std::function<double(double)>& f, double lo, double hi) {
    const int n = 4000;
    double best = std::numeric_limits<double>::infinity();
    int bi = 0;
    auto at = [&](int i) { return std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / n); };
    for (int i = 0; i <= n; ++i) {
        const double v = f(at(i));
        if (v < best) best = v, bi = i;
    }
    double a = std::log(at(std::max(0, bi - 1))), b = std::log(at(std::min(n, bi + 1)));
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 200; ++it) {
        const double c = b - g * (b - a), d = a + g * (b - a);
        if (f(std::exp(c)) < f(std::exp(d))) b = d;
        else a = c;
    }
    return std::min(best, f(std::exp(0.5 * (a + b))));
}

Vec random_vec(std::mt19937_64& rng, std::size_t n, double scale) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Vec v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

// Perfect matchings of labelled legs with no pair inside one vertex, counted
// per induced contraction matrix.
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
            const std::size_t lo = std::size_t(std::min(owner[a], owner[b])), hi = std::size_t(std::max(owner[a], owner[b]));
            // Row-major position of (lo, hi) among pairs lo < hi.
            const std::size_t idx = lo * n - lo * (lo + 1) / 2 + (hi - lo - 1);
            ++K[idx];
            rec();
            --K[idx];
            used[b] = false;
        }
        used[a] = false;
    };
    if (owner.empty()) out[K] = 1;
    else rec();
    return out;
}

// ---------------------------------------------------------------- criteria

Verdict saddle_identity() {
    Verdict v;
    const auto t0 = Clock::now();
    const std::vector<FunctionProfile> catalog{FunctionProfile::power(2.0), FunctionProfile::exp_minus_one(), FunctionProfile::entropy()};
    double worst = 0.0;
    for (const auto& alpha : catalog) {
        const auto a = defining_sequence(alpha, SequenceRole::a_from_alpha, 40);
        for (std::size_t k = 0; k <= 40; ++k) {
            // (k/e)^k inf_s s^{-k} e^{α(s)}, minimized here.
            const double kk = double(k);
            const double inf = scan_min_log([&](double s) { return alpha(s) - kk * std::log(s); }, 1e-8, 1e3);
            const double rhs = (k == 0 ? 0.0 : kk * (std::log(kk) - 1.0)) + inf;
            const double gap = std::expm1(std::abs(a.values[k] - rhs));
            worst = std::max(worst, gap);
            v.require(gap <= 1e-6, alpha.name() + " k=" + std::to_string(k) + " gap " + std::to_string(gap));
        }
    }
    const double secs = seconds_since(t0);
    v.require(secs < 5.0, "runtime " + std::to_string(secs) + " s");
    if (v.ok) v.why << "max relative gap " << worst << ", " << secs << " s";
    return v;
}

Verdict conjugate_involution() {
    Verdict v;
    const std::vector<FunctionProfile> catalog{FunctionProfile::power(2.0), FunctionProfile::exp_minus_one(), FunctionProfile::entropy()};
    double worst = 0.0;
    for (const auto& alpha : catalog)
        for (double s : log_grid(1e-2, 1e2, 512)) {
            const double g = rel(double_conjugate(alpha, s).as_double(), alpha(s));
            worst = std::max(worst, g);
            v.require(g <= 1e-6, alpha.name() + " involution at s=" + std::to_string(s));
            const double c1 = convex_conjugate(alpha, s).as_double(), c2 = convex_conjugate(alpha, 2.0 * s).as_double();
            v.require(2.0 * c1 <= c2 * (1.0 + 1e-12) + 1e-300, alpha.name() + " subadditivity at s=" + std::to_string(s));
        }
    if (v.ok) v.why << "max relative gap " << worst << " on 3 x 512 points";
    return v;
}

Verdict indicator_sandwich_check() {
    Verdict v;
    const auto beta = FunctionProfile::power(0.5);
    const auto r = indicator_sandwich(beta, 0.1);
    v.require(r.passed(), std::string("report status ") + to_string(r.status));
    v.require(r.details.value("left_inequality", false), "left inequality flagged");
    // Left side recomputed: ln b_l = sup_s (l ln s - √s) = 2l ln(2l) - 2l.
    for (double s : log_grid(1e-3, 1e6, 512)) {
        double lnb = 0.0;
        for (int l = 1; l <= 4000; ++l) lnb = std::max(lnb, l * std::log(s) - (2.0 * l * std::log(2.0 * l) - 2.0 * l));
        v.require(lnb <= std::sqrt(s) * (1.0 + 1e-12), "left inequality at s=" + std::to_string(s));
    }
    if (r.constants.count("refinement_ratio")) {
        v.require(r.constants.at("refinement_ratio") < 1.1, "C' unstable under grid doubling");
        if (v.ok) v.why << "C' = " << r.constants.at("C_prime") << ", doubling ratio " << r.constants.at("refinement_ratio");
    }
    return v;
}

Verdict nonquasianalytic() {
    Verdict v;
    const auto a = check_nonquasianalytic(FunctionProfile::power(0.5));
    const auto b = check_nonquasianalytic(FunctionProfile::power(0.9));
    const auto c = check_nonquasianalytic(FunctionProfile::linear());
    v.require(a.status == Status::pass && std::abs(a.integral.as_double() - 2.0) <= 1e-6, "sqrt: " + std::to_string(a.integral.as_double()));
    v.require(b.status == Status::pass && std::abs(b.integral.as_double() - 10.0) <= 1e-4, "s^0.9: " + std::to_string(b.integral.as_double()));
    v.require(c.status == Status::fail && c.integral.is_pos_inf(), "linear not classified divergent");
    if (v.ok) v.why << "integrals " << a.integral.as_double() << ", " << b.integral.as_double() << ", divergent";
    return v;
}

Verdict wick_oracle() {
    Verdict v;
    const auto t0 = Clock::now();
    std::size_t cases = 0;
    for (std::size_t n = 1; n <= 3; ++n) {
        std::vector<int> k(n, 0);
        for (;;) {
            ++cases;
            const auto brute = matchings_by_matrix(k);
            std::map<std::vector<int>, std::uint64_t> ours;
            for_each_contraction(k, [&](const ContractionMatrix& K) { ours[K.k] = contraction_factor(K); });
            std::ostringstream label;
            for (int x : k) label << x << ' ';
            v.require(ours == brute, "factors differ for k = " + label.str());
            // Integer two-point values keep every sum exact in double precision.
            std::vector<std::vector<Complex>> w(n, std::vector<Complex>(n, 0.0));
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t m = j + 1; m < n; ++m) w[j][m] = Complex(double(j + 2 * m), -double(m));
            Complex ref = 0.0;
            for (const auto& [K, count] : brute) {
                    Complex t = double(count);
                    std::size_t i = 0;
                    for (std::size_t j = 0; j < n; ++j)
                        for (std::size_t m = j + 1; m < n; ++m, ++i)
                            for (int e = 0; e < K[i]; ++e) t *= w[j][m];
                    ref += t;
                }
            v.require(wick_pairing_sum(k, w).value == ref, "pairing sum differs for k = " + label.str());
            std::size_t j = 0;
            while (j < n && k[j] == 4) k[j++] = 0;
            if (j == n) break;
            ++k[j];
        }
    }
    const double secs = seconds_since(t0);
    v.require(secs < 60.0, "runtime " + std::to_string(secs) + " s");
    if (v.ok) v.why << cases << " leg vectors, " << secs << " s";
    return v;
}

Verdict exponential_identity() {
    Verdict v;
    const auto d = WickCoefficients::inverse_factorial();
    double worst = 0.0;
    for (double r : {0.0, 0.5, 1.0, 2.5, 4.0, 5.0})
        for (int a = 0; a < 72; ++a) {
            const Complex w = std::polar(r, 2.0 * std::numbers::pi * a / 72.0);
            const double e = std::abs(two_point_series(d, w, 30) - std::exp(w)) / std::abs(std::exp(w));
            worst = std::max(worst, e);
        }
    v.require(worst <= 1e-10, "max relative error " + std::to_string(worst));
    if (v.ok) v.why << "max relative error " << worst;
    return v;
}

Verdict coefficient_conditions() {
    Verdict v;
    const auto inv = check_coefficient_conditions(WickCoefficients::inverse_factorial());
    v.require(inv.passed(), "1/k! did not pass");
    v.require(inv.passed() && inv.constants.at("C") == 1.0 && inv.constants.at("H") == 2.0, "1/k! constants differ from (1, 2)");
    const auto one = check_coefficient_conditions(WickCoefficients::user(std::vector<double>(400, 1.0)));
    v.require(one.failed() && one.witness.count("trend_slope") == 1, "d_k = 1 did not fail with a trend witness");
    const auto frac = check_coefficient_conditions(WickCoefficients::inverse_factorial(0.6));
    v.require(frac.passed(), "1/(k!)^0.6 did not pass");
    if (v.ok) v.why << "1/(k!)^0.6 at H = " << frac.constants.at("H") << ", d_k = 1 trend slope " << one.witness.at("trend_slope");
    return v;
}

Verdict cone_suite() {
    Verdict v;
    std::mt19937_64 rng(8);
    const auto L = Cone::lorentz(2);
    for (int i = 0; i < 10000; ++i) {
        const Vec y = random_vec(rng, 2, 2.0);
        // Self-duality: y·p >= 0 for all p in L iff y0 >= |y1|.
        if (!v.require(L.dual_contains(y) == (y[0] >= std::abs(y[1])), "self-duality sample")) break;
        if (!v.require(L.contains(y) == (y[0] >= std::abs(y[1])), "membership sample")) break;
    }
    v.require(std::abs(Cone::ray({1.0}).distance(Vec{-3.0}) - 3.0) <= 1e-12, "half-line distance");
    v.require(std::abs(L.distance(Vec{0.0, 1.0}) - std::sqrt(2.0) / 2.0) <= 1e-9, "light cone distance");
    const auto S = Cone::spectral(2, 2, -1);
    int inside = 0;
    for (int i = 0; i < 10000; ++i) {
        const Vec p = random_vec(rng, 4, 2.0);
        const double a0 = p[2], a1 = p[3], b0 = p[0] + p[2], b1 = p[1] + p[3];
        const bool ref = a0 <= -std::abs(a1) && b0 <= -std::abs(b1);
        inside += ref;
        if (!v.require(S.contains(p) == ref, "spectral membership sample")) break;
    }
    if (v.ok) v.why << "10^4 + 10^4 samples, " << inside << " inside the spectral cone";
    return v;
}

Verdict laplace_example() {
    Verdict v;
    const auto u = Functional::exponential_density();
    const Complex I(0.0, 1.0);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> ux(-20.0, 20.0), uy(std::log(0.1), std::log(10.0));
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const Complex z(ux(rng), std::exp(uy(rng)));
        const auto q = laplace_transform_detailed(u, TubePoint{{z.real()}, {z.imag()}}, {}, TransformMethod::quadrature);
        const Complex ref = 1.0 / (1.0 - I * z);
        worst = std::max(worst, std::abs(q.value - ref) / std::abs(ref));
    }
    v.require(worst <= 1e-8, "transform relative error " + std::to_string(worst));
    const auto alpha = FunctionProfile::power(2.0), beta = FunctionProfile::power(0.5);
    const auto g = laplace_growth_check([&](std::span<const Complex> z) { return laplace_transform(u, TubePoint::from(z)); }, alpha,
                                        beta, Cone::ray({1.0}), Cone::half_space({1.0}), 0.5);
    v.require(g.passed(), "growth bound did not pass");
    v.require(g.passed() && g.constants.at("doubling_ratio") < 1.1, "growth constant unstable under sample doubling");
    const auto gauss = TestFunction::gaussian(1.0, 1);
    double spread = 0.0;
    for (double p : {-3.0, -1.0, 0.0, 0.5, 2.0, 4.0}) {
        const Complex base = convolution_contour(u, gauss, p, 0.1).value;
        for (double y : {0.2, 0.4}) spread = std::max(spread, std::abs(convolution_contour(u, gauss, p, y).value - base) / std::abs(base));
    }
    v.require(spread <= 1e-8, "contour value depends on y: " + std::to_string(spread));
    if (v.ok) v.why << "transform error " << worst << ", C = " << g.constants.at("C") << ", y spread " << spread;
    return v;
}

Verdict decomposition() {
    Verdict v;
    const auto g = TestFunction::gaussian(-0.25);
    const auto d = cone_decompose(g, Cone::ray({1.0}), Cone::ray({-1.0}), normalized(TestFunction::gaussian(64.0)),
                                  FunctionProfile::quadratic(), FunctionProfile::power(0.5));
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> ux(-6.0, 6.0), uy(-0.1, 0.1);
    double worst = 0.0;
    for (int i = 0; i < 400; ++i) {
        const Complex z(ux(rng), uy(rng));
        const Complex gv = g.at(z);
        worst = std::max(worst, std::abs(d.g1.at(z) + d.g2.at(z) - gv) / std::abs(gv));
    }
    v.require(worst <= 1e-12, "identity error " + std::to_string(worst));
    v.require(d.report.passed(), std::string("cone-bound report ") + to_string(d.report.status));
    if (v.ok) v.why << "identity error " << worst << ", g1 at A = " << d.report.constants.at("A");
    return v;
}

Verdict wick_indicator() {
    Verdict v;
    const auto mock = TwoPointModel::mock_massless_2d();
    const auto r = wick_indicator_check(WickCoefficients::inverse_factorial(), mock.ir(), mock.uv(), FunctionProfile::power(2.0),
                                        FunctionProfile::power(0.5), {1.0, 10.0}, {0.5, 0.1});
    v.require(r.passed(), std::string("report ") + to_string(r.status));
    std::size_t fitted = 0;
    for (const auto& [k, c] : r.constants) fitted += (k.rfind("left_C[", 0) == 0 || k.rfind("right_C[", 0) == 0) && std::isfinite(c);
    v.require(fitted == 8, "expected 8 fitted constants, got " + std::to_string(fitted));
    if (v.ok) v.why << "8 constants, largest left_C[L=10,eps=0.1] = " << r.constants.at("left_C[L=10,eps=0.1]");
    return v;
}

Verdict spectral_demo() {
    Verdict v;
    const auto mock = TwoPointModel::mock_massless_2d();
    for (const auto& [name, d] : {std::pair{"free field", WickCoefficients::free_field()},
                                  std::pair{"truncated series", WickCoefficients::inverse_factorial()}}) {
        const auto r = spectral_fft_check(mock, d, 2, {256, 512, 1024});
        v.require(r.passed(), std::string(name) + " fraction not decreasing");
        if (r.passed())
            v.why << name << ' ' << r.constants.at("outside_fraction_N256") << " -> " << r.constants.at("outside_fraction_N1024") << "; ";
    }
    return v;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"saddle-point identity for the defining sequences", saddle_identity},
        {"conjugate involution and subadditivity", conjugate_involution},
        {"indicator sandwich for sqrt", indicator_sandwich_check},
        {"integrability classification", nonquasianalytic},
        {"Wick pairing sum vs leg matchings", wick_oracle},
        {"exponential identity of the two-point series", exponential_identity},
        {"coefficient conditions", coefficient_conditions},
        {"cone suite", cone_suite},
        {"Laplace transform of exp(-p)", laplace_example},
        {"cone decomposition", decomposition},
        {"Wick indicator conditions", wick_indicator},
        {"lattice spectral demo", spectral_demo},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = Clock::now();
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v.ok = false;
            v.why << "exception: " << e.what();
        }
        failed += !v.ok;
        std::printf("%s %2zu %s (%.2f s): %s\n", v.ok ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), seconds_since(t0),
                    v.why.str().c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
