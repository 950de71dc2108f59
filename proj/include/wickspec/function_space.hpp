#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "wickspec/cone.hpp"
#include "wickspec/core/report.hpp"
#include "wickspec/profile.hpp"
#include "wickspec/sequence.hpp"
#include "wickspec/test_function.hpp"

namespace wickspec {

/// The pair (α, β) and the cone U of the weighted space.
///
/// `strip` replaces α by the indicator of [0, 1]: q is restricted to
/// |q| < strip/A and the α terms vanish there. This models the spaces whose
/// elements are analytic only in a strip.
struct SpaceSpec {
    FunctionProfile alpha;
    FunctionProfile beta;
    Cone U;
    std::optional<double> strip;

    SpaceSpec(FunctionProfile a, FunctionProfile b, Cone u, std::optional<double> strip_width = std::nullopt)
        : alpha(std::move(a)), beta(std::move(b)), U(std::move(u)), strip(strip_width) {
        if (strip && U.kind() != ConeKind::full_space)
            throw std::invalid_argument("SpaceSpec: strip spaces are defined over the full space only");
    }
    static SpaceSpec full(FunctionProfile a, FunctionProfile b, std::size_t n = 1) {
        return SpaceSpec(std::move(a), std::move(b), Cone::full_space(n));
    }
    std::size_t dim() const { return U.dim(); }
};

struct NormOptions {
    double p_max = 8.0;        ///< initial radial extent in p
    double q_max = 2.0;        ///< initial radial extent in q
    double p_limit = 8192.0;
    double q_limit = 256.0;
    std::size_t p_linear = 160;  ///< points on (0, p_max]; log spacing 2^{1/32} beyond
    std::size_t q_linear = 80;
    double decay_ratio = 1e-3;
};

/// Grid supremum of ln(|g| · weight) with its decay certificate.
struct NormEstimate {
    double ln_norm = -kInf;
    bool finite = false;
    Vec witness_p, witness_q;
    double p_max = 0.0, q_max = 0.0;
    double p_boundary_ln = -kInf, q_boundary_ln = -kInf;
    std::size_t evaluations = 0;
};

namespace detail {

/// Nested radial lattice: linear up to r0, then r0 · 2^{j/32} up to r.
inline std::vector<double> radial_lattice(double r0, std::size_t linear, double r) {
    std::vector<double> v{0.0};
    for (std::size_t i = 1; i <= linear; ++i) v.push_back(r0 * double(i) / double(linear));
    for (int j = 1; r0 * std::pow(2.0, j / 32.0) <= r * (1 + 1e-12); ++j) v.push_back(r0 * std::pow(2.0, j / 32.0));
    return v;
}

inline std::vector<Vec> unit_directions(std::size_t n, const Cone* U = nullptr) {
    std::vector<Vec> dirs;
    for (std::size_t j = 0; j < n; ++j)
        for (double s : {1.0, -1.0}) {
            Vec e(n, 0.0);
            e[j] = s;
            dirs.push_back(e);
        }
    if (n == 1) return dirs;
    for (std::uint64_t i = 1; dirs.size() < 8 * n; ++i) {
        auto h = halton_point(i, n);
        for (auto& x : h) x = 2.0 * x - 1.0;
        const double r = norm2(h);
        if (r < 1e-3) continue;
        for (auto& x : h) x /= r;
        dirs.push_back(h);
    }
    if (U && U->kind() != ConeKind::full_space && U->kind() != ConeKind::origin)
        for (auto& u : U->unit_samples(8)) dirs.push_back(u);
    return dirs;
}

struct Node {
    Vec point;
    double radius;
};

inline std::vector<Node> tube_nodes(const std::vector<double>& radial, const std::vector<Vec>& dirs) {
    std::vector<Node> out;
    out.push_back({Vec(dirs.front().size(), 0.0), 0.0});
    for (std::size_t i = 1; i < radial.size(); ++i)
        for (const auto& d : dirs) {
            Vec p(d.size());
            for (std::size_t k = 0; k < d.size(); ++k) p[k] = radial[i] * d[k];
            out.push_back({std::move(p), radial[i]});
        }
    return out;
}

}  // namespace detail

/// Grid estimate of ‖g‖_{U,A,B} = sup |g(p+iq)| exp{-α(A|q|) - α(A δ_U(p)) + β(|p|/B)}.
///
/// Both radial extents double until the weighted values on the outer shell
/// fall below decay_ratio times the maximum; the lattices are nested, so
/// doubling only adds points. Reaching a limit without decay reports an
/// infinite norm.
inline NormEstimate estimate_norm_value(const TestFunction& g, const SpaceSpec& spec, double A, double B,
                                        const NormOptions& opt = {}) {
    if (!(A > 0.0) || !(B > 0.0)) throw std::invalid_argument("estimate_norm: A and B must be positive");
    const std::size_t n = g.dim();
    if (spec.dim() != n) throw std::invalid_argument("estimate_norm: dimension mismatch between function and cone");
    const auto pdirs = detail::unit_directions(n, &spec.U);
    const auto qdirs = detail::unit_directions(n);
    const bool cone_term = spec.U.kind() != ConeKind::full_space;
    const double ln_ratio = std::log(opt.decay_ratio);

    NormEstimate est;
    double P = opt.p_max, Q = opt.q_max;
    const double q_cap = spec.strip ? *spec.strip / A * (1.0 - 1e-9) : kInf;
    while (true) {
        const auto pr = detail::radial_lattice(opt.p_max, opt.p_linear, P);
        const auto qr = spec.strip ? detail::radial_lattice(q_cap, opt.q_linear, q_cap)
                                   : detail::radial_lattice(opt.q_max, opt.q_linear, Q);
        const auto pn = detail::tube_nodes(pr, pdirs);
        const auto qn = detail::tube_nodes(qr, qdirs);
        const double Pb = pr.back(), Qb = qr.back();

        std::vector<double> wq(qn.size());
        for (std::size_t j = 0; j < qn.size(); ++j) wq[j] = spec.strip ? 0.0 : -spec.alpha(A * qn[j].radius);

        NormEstimate cur;
        cur.p_max = Pb;
        cur.q_max = Qb;
        CVec z(n);
        for (const auto& pnode : pn) {
            double wp = spec.beta(pnode.radius / B);
            if (cone_term) wp -= spec.alpha(A * spec.U.distance(pnode.point));
            if (wp == -kInf) continue;
            for (std::size_t j = 0; j < qn.size(); ++j) {
                if (wq[j] == -kInf) continue;
                for (std::size_t k = 0; k < n; ++k) z[k] = Complex(pnode.point[k], qn[j].point[k]);
                const double la = g.log_abs(z);
                ++cur.evaluations;
                if (la == -kInf) continue;
                const double L = la + wp + wq[j];
                if (std::isnan(L)) throw std::domain_error("estimate_norm: weighted value is NaN for " + g.name());
                if (L > cur.ln_norm) {
                    cur.ln_norm = L;
                    cur.witness_p = pnode.point;
                    cur.witness_q = qn[j].point;
                }
                if (pnode.radius == Pb) cur.p_boundary_ln = std::max(cur.p_boundary_ln, L);
                if (qn[j].radius == Qb) cur.q_boundary_ln = std::max(cur.q_boundary_ln, L);
            }
        }
        est.evaluations += cur.evaluations;
        cur.evaluations = est.evaluations;
        if (cur.ln_norm == -kInf) {
            cur.finite = true;
            return cur;
        }
        const bool p_ok = cur.p_boundary_ln - cur.ln_norm <= ln_ratio;
        const bool q_ok = spec.strip || cur.q_boundary_ln - cur.ln_norm <= ln_ratio;
        if (p_ok && q_ok && std::isfinite(cur.ln_norm)) {
            cur.finite = true;
            return cur;
        }
        const bool p_stuck = !p_ok && P * 2.0 > opt.p_limit * (1 + 1e-12);
        const bool q_stuck = !q_ok && Q * 2.0 > opt.q_limit * (1 + 1e-12);
        if (p_stuck || q_stuck || !std::isfinite(cur.ln_norm)) {
            cur.finite = false;
            cur.ln_norm = kInf;
            // Witness on the shell that failed to decay.
            if (!p_ok) {
                for (const auto& pnode : pn)
                    if (pnode.radius == Pb) {
                        cur.witness_p = pnode.point;
                        break;
                    }
            }
            return cur;
        }
        if (!p_ok) P *= 2.0;
        if (!q_ok) Q *= 2.0;
    }
}

namespace detail {

inline void put_vector(BoundReport& r, const std::string& prefix, const Vec& v) {
    for (std::size_t i = 0; i < v.size(); ++i) r.set_witness(prefix + std::to_string(i), v[i]);
}

}  // namespace detail

inline BoundReport estimate_norm(const TestFunction& g, const SpaceSpec& spec, double A, double B,
                                 const NormOptions& opt = {}) {
    const auto e = estimate_norm_value(g, spec, A, B, opt);
    BoundReport r;
    r.check = "estimate_norm";
    r.set_constant("A", A).set_constant("B", B);
    r.set_budget("evaluations", double(e.evaluations)).set_budget("p_max", e.p_max).set_budget("q_max", e.q_max);
    if (e.finite) {
        r.status = Status::pass;
        r.set_constant("norm", std::exp(e.ln_norm)).set_constant("ln_norm", e.ln_norm);
        r.details["decay"] = {{"interior_ln", json_number(e.ln_norm)},
                              {"p_boundary_ln", json_number(e.p_boundary_ln)},
                              {"q_boundary_ln", json_number(e.q_boundary_ln)}};
        if (!e.witness_p.empty()) {
            r.details["argmax_p"] = e.witness_p;
            r.details["argmax_q"] = e.witness_q;
        }
    } else {
        r.status = Status::fail;
        r.set_constant("norm", kInf);
        r.warn("norm presumed infinite: no decay at the grid boundary");
        detail::put_vector(r, "p", e.witness_p);
        detail::put_vector(r, "q", e.witness_q);
    }
    r.note("grid supremum; the true supremum can only be larger");
    return r.finalize();
}

struct LatticeOptions {
    std::vector<double> A_values, B_values;
    NormOptions norm;

    static LatticeOptions powers_of_two(int lo = -4, int hi = 4) {
        LatticeOptions o;
        for (int j = lo; j <= hi; ++j) {
            o.A_values.push_back(std::ldexp(1.0, j));
            o.B_values.push_back(std::ldexp(1.0, j));
        }
        return o;
    }
};

/// Smallest lattice (A, B) with a finite norm estimate.
///
/// Finiteness is upward closed in both A and B, so a staircase walk over the
/// lattice visits O(|A| + |B|) points. Among the Pareto-minimal points the one
/// with the smallest A·B (then smallest A) is reported.
inline BoundReport check_membership_entire(const TestFunction& g, const SpaceSpec& spec,
                                           const LatticeOptions& opt = LatticeOptions::powers_of_two()) {
    if (opt.A_values.empty() || opt.B_values.empty()) throw std::invalid_argument("membership: empty lattice");
    BoundReport r;
    r.check = "membership_entire";
    const auto& As = opt.A_values;
    const auto& Bs = opt.B_values;
    std::size_t evaluations = 0, estimates = 0;
    auto norm_at = [&](double A, double B) {
        auto e = estimate_norm_value(g, spec, A, B, opt.norm);
        evaluations += e.evaluations;
        ++estimates;
        return e;
    };

    std::optional<NormEstimate> best;
    double bestA = 0, bestB = 0;
    nlohmann::json frontier = nlohmann::json::array();
    std::size_t j = Bs.size() - 1;
    std::optional<NormEstimate> top_failure;
    for (std::size_t i = 0; i < As.size(); ++i) {
        auto e = norm_at(As[i], Bs[j]);
        if (!e.finite) {
            if (i + 1 == As.size()) top_failure = e;
            continue;
        }
        while (j > 0) {
            auto lower = norm_at(As[i], Bs[j - 1]);
            if (!lower.finite) break;
            e = lower;
            --j;
        }
        frontier.push_back({{"A", As[i]}, {"B", Bs[j]}, {"ln_C", json_number(e.ln_norm)}});
        if (!best || As[i] * Bs[j] < bestA * bestB * (1 - 1e-12)) {
            best = e;
            bestA = As[i];
            bestB = Bs[j];
        }
        if (j == 0) break;
    }
    r.set_budget("estimates", double(estimates)).set_budget("evaluations", double(evaluations));
    if (best) {
        r.status = Status::pass;
        r.set_constant("A", bestA).set_constant("B", bestB);
        r.set_constant("C", std::exp(best->ln_norm)).set_constant("ln_C", best->ln_norm);
        r.details["frontier"] = frontier;
    } else {
        r.status = Status::fail;
        const auto e = top_failure ? *top_failure : norm_at(As.back(), Bs.back());
        r.set_witness("A", As.back()).set_witness("B", Bs.back());
        detail::put_vector(r, "p", e.witness_p);
        detail::put_vector(r, "q", e.witness_q);
        r.warn("no lattice point gives a finite norm; largest (A, B) tried");
    }
    return r.finalize();
}

// ---------------------------------------------------------------- smooth side

struct SmoothOptions {
    double A_guess = 2.0;        ///< sets the Cauchy radius max(1, κ/(e A_guess))
    double p_max = 8.0;
    double p_limit = 1024.0;
    std::size_t p_linear = 160;
    double decay_ratio = 1e-3;
    double noise_tolerance = 1e-6;
    std::vector<double> A_values, B_values;  ///< default: 2^{j/2}, j = -8..16

    static std::vector<double> default_lattice() {
        std::vector<double> v;
        for (int j = -8; j <= 16; ++j) v.push_back(std::pow(2.0, j / 2.0));
        return v;
    }
};

/// ln sup_p |p|^λ |g^{(κ)}(p)| on the real line, for κ <= K and λ <= Λ.
struct DerivativeTable {
    std::vector<std::vector<double>> ln_M;  ///< [κ][λ]; +inf when the sup did not decay
    std::vector<std::vector<double>> argmax;
    std::size_t kappa_max = 0, lambda_max = 0;
    std::vector<std::string> warnings;
    double p_max = 0.0;
    std::size_t evaluations = 0;
};

namespace detail {

/// ln|g^{(k)}(p)| by the trapezoidal Cauchy integral on a circle, with the
/// rounding-noise level ln(eps · k!/r^k · max |g| on the circle).
inline std::pair<double, double> cauchy_log_derivative(const TestFunction& g, double p, int k, double A_guess) {
    if (k == 0) return {g.log_abs_at(Complex(p, 0.0)), -kInf};
    const double r = std::max(1.0, double(k) / (std::numbers::e * A_guess));
    const int N = 4 * k + 16;
    std::vector<Complex> lv(std::size_t(N), 0.0);
    double m = -kInf;
    for (int j = 0; j < N; ++j) {
        const Complex w = std::polar(1.0, 2.0 * std::numbers::pi * j / N);
        lv[std::size_t(j)] = g.log_value(std::span<const Complex>(std::array<Complex, 1>{p + r * w}));
        m = std::max(m, lv[std::size_t(j)].real());
    }
    if (m == -kInf) return {-kInf, -kInf};
    Complex sum = 0.0;
    for (int j = 0; j < N; ++j) {
        const Complex w = std::polar(1.0, -2.0 * std::numbers::pi * double(j) * k / N);
        sum += TestFunction::from_log(lv[std::size_t(j)] - m) * w;
    }
    const double scale = m + log_factorial(k) - std::log(double(N)) - k * std::log(r);
    const double ln_noise = std::log(1e-15 * N) + scale;
    const double ln_val = std::abs(sum) == 0.0 ? -kInf : std::log(std::abs(sum)) + scale;
    return {ln_val, ln_noise};
}

}  // namespace detail

/// Derivative table of a one-dimensional function by Cauchy-circle differentiation.
///
/// Values below the rounding-noise level are replaced by the noise level, which
/// keeps every entry an upper bound. When the supremum for some κ is itself
/// noise-dominated beyond noise_tolerance, the table stops at κ - 1 with a warning.
inline DerivativeTable derivative_table(const TestFunction& g, std::size_t kappa_max, std::size_t lambda_max,
                                        const SmoothOptions& opt = {}) {
    if (g.dim() != 1) throw std::invalid_argument("derivative_table: one-dimensional functions only");
    DerivativeTable t;
    t.lambda_max = lambda_max;
    double P = opt.p_max;
    const double ln_ratio = std::log(opt.decay_ratio);
    while (true) {
        auto radial = detail::radial_lattice(opt.p_max, opt.p_linear, P);
        std::vector<double> ps;
        for (auto it = radial.rbegin(); it != radial.rend(); ++it)
            if (*it > 0.0) ps.push_back(-*it);
        ps.insert(ps.end(), radial.begin(), radial.end());
        const double Pb = radial.back();

        t.ln_M.assign(kappa_max + 1, std::vector<double>(lambda_max + 1, -kInf));
        t.argmax.assign(kappa_max + 1, std::vector<double>(lambda_max + 1, 0.0));
        t.warnings.clear();
        std::size_t kmax_eff = kappa_max;
        bool all_decayed = true;
        for (std::size_t k = 0; k <= kappa_max; ++k) {
            std::vector<double> val(ps.size()), noise(ps.size());
            for (std::size_t i = 0; i < ps.size(); ++i) {
                auto [v, nz] = detail::cauchy_log_derivative(g, ps[i], int(k), opt.A_guess);
                val[i] = v;
                noise[i] = nz;
                t.evaluations += k == 0 ? 1 : 4 * k + 16;
            }
            bool noisy = false;
            for (std::size_t l = 0; l <= lambda_max; ++l) {
                double best = -kInf, boundary = -kInf, arg = 0.0, best_noise = -kInf, best_val = -kInf;
                for (std::size_t i = 0; i < ps.size(); ++i) {
                    const double lp = l == 0 ? 0.0 : (ps[i] == 0.0 ? -kInf : double(l) * std::log(std::abs(ps[i])));
                    const double v = lp + std::max(val[i], noise[i]);
                    if (v > best) {
                        best = v;
                        arg = ps[i];
                        best_noise = lp + noise[i];
                        best_val = lp + val[i];
                    }
                    if (std::abs(ps[i]) == Pb) boundary = std::max(boundary, v);
                }
                if (best != -kInf && best_noise > best_val + std::log(opt.noise_tolerance)) noisy = true;
                t.argmax[k][l] = arg;
                if (best == -kInf || boundary - best <= ln_ratio) {
                    t.ln_M[k][l] = best;
                } else {
                    t.ln_M[k][l] = kInf;
                    t.argmax[k][l] = boundary == best ? arg : Pb;
                    all_decayed = false;
                }
            }
            if (noisy && k > 0) {
                kmax_eff = k - 1;
                std::ostringstream os;
                os << "derivative of order " << k << " is dominated by rounding noise; table truncated at order " << kmax_eff;
                t.warnings.push_back(os.str());
                break;
            }
        }
        t.ln_M.resize(kmax_eff + 1);
        t.argmax.resize(kmax_eff + 1);
        t.kappa_max = kmax_eff;
        t.p_max = Pb;
        if (all_decayed || P * 2.0 > opt.p_limit * (1 + 1e-12)) return t;
        P *= 2.0;
    }
}

/// ln C(A, B) = max over κ <= K, λ <= Λ of ln M - κ ln A - λ ln B - ln a_κ - ln b_λ.
inline double fit_smooth_constant(const DerivativeTable& t, const LogSequence& a, const LogSequence& b, double A, double B,
                                  std::size_t K, std::size_t L) {
    double best = -kInf;
    for (std::size_t k = 0; k <= K; ++k)
        for (std::size_t l = 0; l <= L; ++l) {
            const double m = t.ln_M[k][l];
            if (m == -kInf) continue;
            best = std::max(best, m - k * std::log(A) - l * std::log(B) - a[k] - b[l]);
        }
    return best;
}

/// The constant fitted on the full index range equals the one fitted on the
/// lower half range: the bound is attained early and the growth is dominated.
inline bool smooth_fit_stable(const DerivativeTable& t, const LogSequence& a, const LogSequence& b, double A, double B) {
    const double full = fit_smooth_constant(t, a, b, A, B, t.kappa_max, t.lambda_max);
    if (full == -kInf) return true;
    if (!std::isfinite(full)) return false;
    const double half = fit_smooth_constant(t, a, b, A, B, t.kappa_max / 2, t.lambda_max / 2);
    return full <= half + 1e-9 * std::max(1.0, std::abs(half));
}

/// Fitted (A, B, C) with |p^λ g^{(κ)}(p)| <= C A^κ B^λ a_κ b_λ on the sampled range.
inline BoundReport check_membership_smooth(const TestFunction& g, const LogSequence& a, const LogSequence& b,
                                           std::size_t kappa_max, std::size_t lambda_max, const SmoothOptions& opt = {}) {
    if (a.k_max() < kappa_max || b.k_max() < lambda_max)
        throw std::invalid_argument("check_membership_smooth: sequences shorter than the requested orders");
    BoundReport r;
    r.check = "membership_smooth";
    const auto t = derivative_table(g, kappa_max, lambda_max, opt);
    for (const auto& w : t.warnings) r.warn(w);
    r.set_budget("kappa_max", double(t.kappa_max)).set_budget("lambda_max", double(t.lambda_max));
    r.set_budget("p_max", t.p_max).set_budget("evaluations", double(t.evaluations));

    for (std::size_t k = 0; k <= t.kappa_max; ++k)
        for (std::size_t l = 0; l <= t.lambda_max; ++l)
            if (t.ln_M[k][l] == kInf) {
                // Report the highest λ (then κ) whose supremum did not decay.
                std::size_t kw = k, lw = l;
                for (std::size_t kk = 0; kk <= t.kappa_max; ++kk)
                    for (std::size_t ll = 0; ll <= t.lambda_max; ++ll)
                        if (t.ln_M[kk][ll] == kInf && (ll > lw || (ll == lw && kk > kw))) kw = kk, lw = ll;
                r.status = Status::fail;
                r.set_witness("kappa", double(kw)).set_witness("lambda", double(lw)).set_witness("p", t.argmax[kw][lw]);
                r.warn("sup_p |p^λ g^(κ)(p)| did not decay on the grid");
                return r.finalize();
            }

    const auto As = opt.A_values.empty() ? SmoothOptions::default_lattice() : opt.A_values;
    const auto Bs = opt.B_values.empty() ? SmoothOptions::default_lattice() : opt.B_values;
    std::optional<std::pair<double, double>> best;
    for (double A : As)
        for (double B : Bs)
            if (smooth_fit_stable(t, a, b, A, B)) {
                if (!best || std::log(A) + std::log(B) < std::log(best->first) + std::log(best->second) - 1e-12 ||
                    (std::abs(std::log(A * B) - std::log(best->first * best->second)) <= 1e-12 && A < best->first))
                    best = std::pair{A, B};
            }
    if (!best) {
        r.status = Status::fail;
        const double A = As.back(), B = Bs.back();
        double worst = -kInf;
        std::size_t kw = 0, lw = 0;
        for (std::size_t k = 0; k <= t.kappa_max; ++k)
            for (std::size_t l = 0; l <= t.lambda_max; ++l) {
                const double v = t.ln_M[k][l] - k * std::log(A) - l * std::log(B) - a[k] - b[l];
                if (v > worst) worst = v, kw = k, lw = l;
            }
        r.set_witness("kappa", double(kw)).set_witness("lambda", double(lw)).set_witness("p", t.argmax[kw][lw]);
        r.warn("the fitted constant keeps growing at the largest orders for every lattice (A, B)");
        return r.finalize();
    }
    const double lnC = fit_smooth_constant(t, a, b, best->first, best->second, t.kappa_max, t.lambda_max);
    r.status = Status::pass;
    r.set_constant("A", best->first).set_constant("B", best->second);
    r.set_constant("C", lnC == -kInf ? 0.0 : std::exp(lnC)).set_constant("ln_C", lnC);
    return r.finalize();
}

/// Runs both membership checkers (entire bounds, and derivative bounds with
/// the sequences built from α and β) and reports whether their verdicts agree.
inline BoundReport entire_smooth_crosscheck(const TestFunction& g, const SpaceSpec& spec, std::size_t kappa_max = 16,
                                            std::size_t lambda_max = 16,
                                            const LatticeOptions& lattice = LatticeOptions::powers_of_two(),
                                            const SmoothOptions& smooth = {}) {
    BoundReport r;
    r.check = "entire_smooth_crosscheck";
    const auto prec = check_precedes(spec.beta, spec.alpha);
    if (!prec.constants) {
        r.status = Status::undetermined;
        r.set_witness("s", prec.witness_s);
        r.warn("beta does not precede alpha on the grid; the two descriptions need not coincide");
        return r.finalize();
    }
    r.set_constant("precedes_C", prec.constants->first).set_constant("precedes_H", prec.constants->second);
    const auto entire = check_membership_entire(g, spec, lattice);
    const auto a = defining_sequence(spec.alpha, SequenceRole::a_from_alpha, kappa_max);
    const auto b = defining_sequence(spec.beta, SequenceRole::b_from_beta, lambda_max);
    const auto smooth_r = check_membership_smooth(g, a, b, kappa_max, lambda_max, smooth);
    r.details["entire"] = to_json(entire);
    r.details["smooth"] = to_json(smooth_r);
    const bool agree = entire.passed() == smooth_r.passed();
    r.details["member"] = entire.passed();
    if (agree) {
        r.status = Status::pass;
        r.set_budget("estimates", entire.budgets.at("estimates"));
    } else {
        r.status = Status::fail;
        r.set_witness("entire_pass", entire.passed() ? 1.0 : 0.0).set_witness("smooth_pass", smooth_r.passed() ? 1.0 : 0.0);
        for (const auto& [k, v] : entire.witness) r.set_witness("entire_" + k, v);
        for (const auto& [k, v] : smooth_r.witness) r.set_witness("smooth_" + k, v);
    }
    return r.finalize();
}

// ---------------------------------------------------------------- approximation

/// e_ν(z) = Σ_{κ ∈ Z^n, |κ| < ν²} e0(z - κ/ν) ν^{-n}, summed with a common scale.
inline TestFunction riemann_sum(const TestFunction& e0, int nu) {
    if (nu < 1) throw std::invalid_argument("riemann_sum: nu must be >= 1");
    const std::size_t n = e0.dim();
    if (n > 2) throw std::invalid_argument("riemann_sum: dimension <= 2 supported");
    const long R = long(nu) * nu;
    std::vector<Vec> shifts;
    if (n == 1) {
        for (long k = -R + 1; k < R; ++k) shifts.push_back({double(k) / nu});
    } else {
        for (long i = -R + 1; i < R; ++i)
            for (long j = -R + 1; j < R; ++j)
                if (double(i) * i + double(j) * j < double(R) * R) shifts.push_back({double(i) / nu, double(j) / nu});
    }
    const double ln_w = -double(n) * std::log(double(nu));
    return TestFunction::derived("riemann_sum(" + e0.name() + "," + std::to_string(nu) + ")", n,
                                 [e0, shifts = std::move(shifts), ln_w](std::span<const Complex> z) {
                                     std::vector<Complex> lv(shifts.size());
                                     double m = -kInf;
                                     CVec w(z.size());
                                     for (std::size_t s = 0; s < shifts.size(); ++s) {
                                         for (std::size_t k = 0; k < z.size(); ++k) w[k] = z[k] - shifts[s][k];
                                         lv[s] = e0.log_value(w);
                                         m = std::max(m, lv[s].real());
                                     }
                                     if (m == -kInf) return Complex(-kInf, 0.0);
                                     Complex sum = 0.0;
                                     for (const auto& l : lv) sum += TestFunction::from_log(l - m);
                                     if (sum == Complex(0.0)) return Complex(-kInf, 0.0);
                                     return std::log(sum) + m + ln_w;
                                 });
}

struct RiemannStep {
    int nu = 0;
    double sup_error = 0.0;   ///< max |g_ν - g| on the real grid
    double norm_error = 0.0;  ///< estimate of ‖g_ν - g‖ in the given space
    Complex e_at_zero = 0.0;
};

struct RiemannApproximation {
    TestFunction e_nu;
    TestFunction g_nu;
};

/// g_ν = e_ν · g with e0 normalized to unit integral beforehand.
inline RiemannApproximation riemann_approximate(const TestFunction& g, const TestFunction& e0, int nu) {
    if (g.dim() != e0.dim()) throw std::invalid_argument("riemann_approximate: dimension mismatch");
    const auto e = riemann_sum(normalized(e0), nu);
    return {e, TestFunction::times(e, g)};
}

/// Error trace of g_ν over the given ν values.
inline std::vector<RiemannStep> riemann_trace(const TestFunction& g, const TestFunction& e0, const std::vector<int>& nus,
                                              const SpaceSpec& spec, double A, double B, double grid_max = 12.0,
                                              std::size_t grid_points = 481) {
    std::vector<RiemannStep> out;
    const auto e0n = normalized(e0);
    for (int nu : nus) {
        const auto e = riemann_sum(e0n, nu);
        const auto gn = TestFunction::times(e, g);
        RiemannStep st;
        st.nu = nu;
        const Vec zero(g.dim(), 0.0);
        st.e_at_zero = e(std::span<const double>(zero));
        const auto diff = TestFunction::minus(gn, g);
        if (g.dim() == 1) {
            for (std::size_t i = 0; i < grid_points; ++i) {
                const double p = -grid_max + 2.0 * grid_max * double(i) / double(grid_points - 1);
                st.sup_error = std::max(st.sup_error, std::abs(diff.at(Complex(p, 0.0))));
            }
        }
        const auto ne = estimate_norm_value(diff, spec, A, B);
        st.norm_error = ne.finite ? std::exp(ne.ln_norm) : kInf;
        out.push_back(st);
    }
    return out;
}

// ---------------------------------------------------------------- decomposition

struct DecomposeOptions {
    /// Neighborhood U of K1 ∩ K2 in which g is known to lie; default {0}.
    std::optional<Cone> U;
    LatticeOptions lattice = LatticeOptions::powers_of_two();
    /// Norm grid for g1; the q range stays at q_max because e is evaluated by
    /// quadrature and its modulus grows like e^{c q²} off the real axis.
    NormOptions g1_norm{8.0, 2.0, 64.0, 2.0, 64, 32, 1e-3};
    std::vector<double> g1_A_values = {1, 2, 4, 8, 16, 32, 64};
    double quad_tol = 1e-11;
    std::vector<double> identity_p = {-10, -6, -3, -1.5, -0.5, -0.1, 0.0, 0.1, 0.5, 1.5, 3, 6, 10};
    std::vector<double> identity_q = {0.0, 0.1, -0.1, 0.5, -1.0};
};

struct Decomposition {
    TestFunction e;
    TestFunction g1;
    TestFunction g2;
    BoundReport report;
};

namespace detail {

/// e(z) for W2 a half-line, by moving the path of integration: from z straight
/// down to the real point p, then along the real axis. The real part of the
/// path starts its tails at the origin, where catalog kernels concentrate,
/// and is memoized per p since norm grids revisit each p for many q.
class HalfLineCutoff {
public:
    HalfLineCutoff(TestFunction e0, bool upper, double tol)
        : e0_(std::move(e0)), upper_(upper), tol_(tol), cache_(std::make_shared<std::unordered_map<double, Complex>>()) {}

    Complex operator()(Complex z) const {
        const double p = z.real(), q = z.imag();
        Complex v = real_part(p);
        if (q != 0.0) {
            auto f = [&](double s) { return e0_.at(Complex(p, s)); };
            const Complex seg = check(adaptive_gk(f, 0.0, q, std::max(1e-300, tol_ * std::abs(v)), tol_), p, q);
            // ∫_z^p e0 dw = -i ∫_0^q e0(p + is) ds; the lower integral has the opposite orientation.
            v += upper_ ? Complex(0.0, -1.0) * seg : Complex(0.0, 1.0) * seg;
        }
        return v;
    }

private:
    static Complex check(const QuadratureResult<Complex>& r, double p, double q) {
        if (!r.converged) {
            std::ostringstream os;
            os << "cone_decompose: quadrature did not converge at p = " << p << ", q = " << q;
            throw std::runtime_error(os.str());
        }
        return r.value;
    }

    Complex real_part(double x) const {
        if (auto it = cache_->find(x); it != cache_->end()) return it->second;
        auto f = [&](double u) { return e0_.at(Complex(u, 0.0)); };
        auto right_of = [&](double a) { return check(adaptive_gk_semi_infinite(f, a, 1e-300, tol_), x, 0.0); };
        auto left_of = [&](double a) {
            return check(adaptive_gk_semi_infinite([&](double t) { return f(-t); }, -a, 1e-300, tol_), x, 0.0);
        };
        Complex v;
        if (upper_) v = x >= 0.0 ? right_of(x) : right_of(0.0) + left_of(0.0) - left_of(x);
        else v = x <= 0.0 ? left_of(x) : right_of(0.0) + left_of(0.0) - right_of(x);
        cache_->emplace(x, v);
        return v;
    }

    TestFunction e0_;
    bool upper_;
    double tol_;
    std::shared_ptr<std::unordered_map<double, Complex>> cache_;
};

}  // namespace detail

/// Splits g = g1 + g2 with g1 = e·g and e(p) = ∫_{W2} e0(p - η) dη, W2 = K2.
///
/// One-dimensional: the cones are half-lines, {0} or R. g2 is evaluated as
/// g - g1, so the identity g1 + g2 = g holds to rounding whatever the
/// quadrature error in e. The report certifies that g1 has a finite norm in
/// the space over K1 and that the fitted constants satisfy 2 B0 < θ / A.
inline Decomposition cone_decompose(const TestFunction& g, const Cone& K1, const Cone& K2, const TestFunction& e0,
                                    const FunctionProfile& alpha, const FunctionProfile& beta,
                                    const DecomposeOptions& opt = {}) {
    if (g.dim() != 1 || e0.dim() != 1 || K1.dim() != 1 || K2.dim() != 1)
        throw std::invalid_argument("cone_decompose: one-dimensional functions and cones only");
    BoundReport r;
    r.check = "cone_decompose";

    const Complex mass = integrate_real(e0);
    if (std::abs(mass - 1.0) > 1e-8) throw std::invalid_argument("cone_decompose: e0 must have unit integral");
    const auto sep = angular_separation(K1, K2, 64);
    if (!(sep.theta > 0.0)) throw std::domain_error("cone_decompose: K1 and K2 are not angularly separated");

    // Direction of W2 = K2 in R^1: +1, -1, both (R) or none ({0}).
    const bool has_pos = K2.contains(Vec{1.0}), has_neg = K2.contains(Vec{-1.0});
    const double tol = opt.quad_tol;
    TestFunction e = TestFunction::zero(1);
    if (has_pos && has_neg) {
        e = TestFunction::constant(1.0, 1);
    } else if (has_pos || has_neg) {
        // η = ±t: e(z) = ∫_{-∞}^{p} e0 (W2 = R+) or ∫_p^{∞} e0 (W2 = R-).
        const bool upper = has_neg;
        const detail::HalfLineCutoff cutoff(e0, upper, tol);
        e = TestFunction::derived("cutoff(" + e0.name() + ")", 1, [cutoff](std::span<const Complex> z) {
            const Complex v = cutoff(z[0]);
            if (v == Complex(0.0)) return Complex(-kInf, 0.0);
            return std::log(v);
        });
    }
    const auto g1 = TestFunction::times(e, g);
    const auto g2 = TestFunction::minus(g, g1);

    // Identity g1 + g2 = g at the sampled points.
    double worst = 0.0;
    std::size_t checked = 0;
    for (double p : opt.identity_p)
        for (double q : opt.identity_q) {
            const Complex z(p, q);
            const Complex gv = g.at(z), sum = g1.at(z) + g2.at(z);
            if (!std::isfinite(std::abs(gv))) continue;
            ++checked;
            // Rounding is relative to the larger of the two summands.
            const double rel = std::abs(sum - gv) / std::max({std::abs(gv), std::abs(g1.at(z)), 1e-300});
            if (std::abs(gv) > 0.0) worst = std::max(worst, rel);
        }
    r.set_constant("identity_max_rel", worst);
    r.set_budget("identity_points", double(checked));
    const bool identity_ok = worst <= 1e-12;

    // Constants: e0 in the (α, α) space, g in the space over U.
    const auto e0_fit = check_membership_entire(e0, SpaceSpec::full(alpha, alpha, 1), opt.lattice);
    const Cone U = opt.U ? *opt.U : Cone::origin(1);
    const auto g_fit = check_membership_entire(g, SpaceSpec(alpha, beta, U), opt.lattice);
    r.set_constant("theta", sep.theta);
    r.set_constant("e_at_0", e.at(0.0).real());
    bool constraint_ok = false;
    if (e0_fit.passed() && g_fit.passed()) {
        const double B0 = e0_fit.constants.at("B"), A = g_fit.constants.at("A");
        r.set_constant("B0", B0).set_constant("A0", e0_fit.constants.at("A")).set_constant("A", A);
        constraint_ok = 2.0 * B0 < sep.theta / A;
        if (!constraint_ok) r.set_witness("two_B0_times_A", 2.0 * B0 * A).set_witness("theta", sep.theta);
    } else {
        r.warn("could not fit constants for e0 or g");
        r.set_witness("e0_fit", e0_fit.passed() ? 1.0 : 0.0).set_witness("g_fit", g_fit.passed() ? 1.0 : 0.0);
    }

    // Decay of e on K1 against e^{-α(A|p|)}: the weighted sup must be attained inside the grid.
    bool decay_ok = true;
    if (constraint_ok) {
        const double A = g_fit.constants.at("A");
        const double dir = K1.contains(Vec{1.0}) ? 1.0 : -1.0;
        double best = -kInf, boundary = -kInf;
        const auto radial = detail::radial_lattice(4.0, 64, 32.0);
        for (double t : radial) {
            const double v = e.log_abs_at(Complex(dir * t, 0.0)) + alpha(A * t);
            best = std::max(best, v);
            if (t == radial.back()) boundary = v;
        }
        decay_ok = best == -kInf || boundary < best || boundary == -kInf;
        r.set_constant("e_decay_ln_C", best);
        if (!decay_ok) r.set_witness("e_decay_p", dir * radial.back());
    }

    // Cone bound for g1 over K1.
    LatticeOptions g1_lattice = opt.lattice;
    g1_lattice.norm = opt.g1_norm;
    g1_lattice.A_values = opt.g1_A_values;
    const auto g1_fit = constraint_ok ? check_membership_entire(g1, SpaceSpec(alpha, beta, K1), g1_lattice) : BoundReport{};
    if (constraint_ok) {
        r.details["g1_bound"] = to_json(g1_fit);
        if (g1_fit.passed()) {
            r.set_constant("g1_A", g1_fit.constants.at("A")).set_constant("g1_B", g1_fit.constants.at("B"));
            r.set_constant("g1_C", g1_fit.constants.at("C"));
            r.set_budget("g1_evaluations", g1_fit.budgets.at("evaluations"));
        } else {
            for (const auto& [k, v] : g1_fit.witness) r.set_witness("g1_" + k, v);
        }
    }
    r.details["identity_ok"] = identity_ok;
    r.details["constraint_ok"] = constraint_ok;
    r.details["decay_ok"] = decay_ok;
    if (!identity_ok) r.set_witness("identity_max_rel", worst);
    r.status = identity_ok && constraint_ok && decay_ok && g1_fit.passed() ? Status::pass : Status::fail;
    r.finalize();
    return {e, g1, g2, r};
}

/// Real-axis trace "x,re,im,abs" for CSV export.
inline std::string function_csv(const TestFunction& g, const std::vector<double>& xs, double q = 0.0) {
    if (g.dim() != 1) throw std::invalid_argument("function_csv: one-dimensional functions only");
    std::ostringstream os;
    os.precision(17);
    os << "x,q,re,im,abs\n";
    for (double x : xs) {
        const Complex v = g.at(Complex(x, q));
        os << x << ',' << q << ',' << v.real() << ',' << v.imag() << ',' << std::abs(v) << '\n';
    }
    return os.str();
}

}  // namespace wickspec
