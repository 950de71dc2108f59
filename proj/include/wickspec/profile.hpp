#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "wickspec/core/extended.hpp"
#include "wickspec/core/numeric.hpp"
#include "wickspec/core/quadrature.hpp"
#include "wickspec/core/report.hpp"

namespace wickspec {

enum class ProfileKind { power, quadratic, exp_minus_one, linear, entropy, log_growth, sampled };

inline const char* to_string(ProfileKind k) {
    switch (k) {
        case ProfileKind::power: return "power";
        case ProfileKind::quadratic: return "quadratic";
        case ProfileKind::exp_minus_one: return "exp-minus-one";
        case ProfileKind::linear: return "linear";
        case ProfileKind::entropy: return "entropy";
        case ProfileKind::log_growth: return "log-growth";
        default: return "sampled";
    }
}

struct ProfileAttributes {
    bool convex = false;         ///< convex in s
    bool concave = false;        ///< concave in s
    bool convex_in_log = false;  ///< s -> f(e^t) convex in t
    bool differentiable = true;
    bool increasing = true;
    bool nonneg = true;
    double value_at_0 = 0.0;  ///< raw value at s = 0, subtracted by normalization
};

/// An indicator-scale function on s >= 0 (the α or β of a function space).
///
/// Values are normalized so that f(0) = 0. Declared attributes are checked
/// by finite differences when the profile is built; a failed check throws.
class FunctionProfile {
public:
    static FunctionProfile power(double gamma, double c = 1.0) {
        if (!(gamma > 0.0) || !(c > 0.0)) throw std::invalid_argument("power profile needs gamma > 0 and c > 0");
        ProfileAttributes a;
        a.convex = gamma >= 1.0;
        a.concave = gamma <= 1.0;
        a.convex_in_log = true;
        a.differentiable = gamma >= 1.0;
        return FunctionProfile(ProfileKind::power, {{"gamma", gamma}, {"c", c}}, a);
    }
    static FunctionProfile quadratic() {
        ProfileAttributes a;
        a.convex = true;
        a.convex_in_log = true;
        return FunctionProfile(ProfileKind::quadratic, {}, a);
    }
    static FunctionProfile exp_minus_one() {
        ProfileAttributes a;
        a.convex = true;
        a.convex_in_log = true;
        return FunctionProfile(ProfileKind::exp_minus_one, {}, a);
    }
    static FunctionProfile linear(double c = 1.0) {
        if (!(c > 0.0)) throw std::invalid_argument("linear profile needs c > 0");
        ProfileAttributes a;
        a.convex = a.concave = a.convex_in_log = true;
        return FunctionProfile(ProfileKind::linear, {{"c", c}}, a);
    }
    static FunctionProfile entropy() {
        ProfileAttributes a;
        a.convex = true;
        a.convex_in_log = true;
        return FunctionProfile(ProfileKind::entropy, {}, a);
    }
    static FunctionProfile log_growth() {
        ProfileAttributes a;
        a.concave = true;
        a.convex_in_log = true;
        return FunctionProfile(ProfileKind::log_growth, {}, a);
    }

    /// Piecewise-linear profile through (s_i, v_i); s strictly increasing and
    /// positive or starting at 0. Constant below s_0, linear extrapolation
    /// beyond the last sample. Attributes are detected from the samples
    /// unless `declared` is given, in which case they are validated.
    static FunctionProfile sampled(std::vector<double> s, std::vector<double> v,
                                   std::optional<ProfileAttributes> declared = std::nullopt) {
        if (s.size() != v.size() || s.size() < 3) throw std::invalid_argument("sampled profile needs >= 3 matching points");
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (!std::isfinite(s[i]) || !std::isfinite(v[i])) throw std::invalid_argument("sampled profile: non-finite sample");
            if (i > 0 && !(s[i] > s[i - 1])) throw std::invalid_argument("sampled profile: s must be strictly increasing");
        }
        if (s[0] < 0.0) throw std::invalid_argument("sampled profile: s must be nonnegative");
        FunctionProfile p;
        p.kind_ = ProfileKind::sampled;
        p.s_ = std::move(s);
        p.v_ = std::move(v);
        p.attr_.value_at_0 = p.v_[0];
        p.offset_ = p.v_[0];
        p.attr_.differentiable = false;
        const auto detected = p.detect(p.s_);
        if (declared) {
            auto d = *declared;
            d.value_at_0 = p.offset_;
            p.attr_ = d;
            p.validate(p.s_);
        } else {
            p.attr_ = detected;
        }
        return p;
    }

    ProfileKind kind() const { return kind_; }
    const std::map<std::string, double>& params() const { return params_; }
    const ProfileAttributes& attributes() const { return attr_; }
    bool is_sampled() const { return kind_ == ProfileKind::sampled; }
    const std::vector<double>& sample_s() const { return s_; }
    const std::vector<double>& sample_v() const { return v_; }

    double param(const std::string& k) const {
        auto it = params_.find(k);
        if (it == params_.end()) throw std::out_of_range("profile has no parameter " + k);
        return it->second;
    }

    /// Normalized value f(s) - f(0); may be +inf on overflow, never NaN.
    double operator()(double s) const {
        if (s < 0.0) throw std::domain_error("profile evaluated at negative s");
        return raw(s) - offset_;
    }

    /// d ln f / d ln s at s (central difference in ln s).
    double log_slope(double s) const {
        const double h = 1e-4;
        const double fp = (*this)(s * std::exp(h)), fm = (*this)(s * std::exp(-h));
        if (!(fp > 0.0) || !(fm > 0.0)) return 0.0;
        return (std::log(fp) - std::log(fm)) / (2.0 * h);
    }

    std::string name() const {
        switch (kind_) {
            case ProfileKind::power: return "power(" + fmt(param("gamma")) + "," + fmt(param("c")) + ")";
            case ProfileKind::linear: return "linear(" + fmt(param("c")) + ")";
            case ProfileKind::sampled: return "sampled[" + std::to_string(s_.size()) + "]";
            default: return to_string(kind_);
        }
    }

private:
    FunctionProfile() = default;

    FunctionProfile(ProfileKind k, std::map<std::string, double> params, ProfileAttributes a)
        : kind_(k), params_(std::move(params)), attr_(a) {
        if (params_.count("gamma")) gamma_ = params_.at("gamma");
        if (params_.count("c")) c_ = params_.at("c");
        attr_.value_at_0 = raw(0.0);
        offset_ = attr_.value_at_0;
        validate(log_grid(1e-3, 1e2, 200));
    }

    static std::string fmt(double x) {
        std::string s = std::to_string(x);
        s.erase(s.find_last_not_of('0') + 1);
        if (!s.empty() && s.back() == '.') s.pop_back();
        return s;
    }

    double raw(double s) const {
        switch (kind_) {
            case ProfileKind::power: return s == 0.0 ? 0.0 : c_ * std::pow(s, gamma_);
            case ProfileKind::quadratic: return s * s;
            case ProfileKind::exp_minus_one: return std::expm1(s);
            case ProfileKind::linear: return c_ * s;
            case ProfileKind::entropy: return s * std::log1p(s);
            case ProfileKind::log_growth: return std::log1p(s);
            case ProfileKind::sampled: return interpolate(s);
        }
        return 0.0;
    }

    double interpolate(double s) const {
        if (s <= s_.front()) return v_.front();
        const std::size_t n = s_.size();
        std::size_t i;
        if (s >= s_[n - 1]) {
            i = n - 2;
        } else {
            i = static_cast<std::size_t>(std::upper_bound(s_.begin(), s_.end(), s) - s_.begin()) - 1;
        }
        const double w = (s - s_[i]) / (s_[i + 1] - s_[i]);
        return v_[i] + w * (v_[i + 1] - v_[i]);
    }

    struct Diffs {
        std::vector<double> x, f;
    };

    Diffs finite_samples(const std::vector<double>& grid) const {
        Diffs d;
        for (double s : grid) {
            const double f = (*this)(s);
            if (!std::isfinite(f)) break;
            d.x.push_back(s);
            d.f.push_back(f);
        }
        return d;
    }

    static bool slopes_increase(const std::vector<double>& x, const std::vector<double>& f, int sign) {
        for (std::size_t i = 1; i + 1 < x.size(); ++i) {
            const double l = (f[i] - f[i - 1]) / (x[i] - x[i - 1]);
            const double r = (f[i + 1] - f[i]) / (x[i + 1] - x[i]);
            const double tol = 1e-7 * (std::abs(l) + std::abs(r)) + 1e-12;
            if (sign * (r - l) < -tol) return false;
        }
        return true;
    }

    ProfileAttributes detect(const std::vector<double>& grid) const {
        ProfileAttributes a = attr_;
        const auto d = finite_samples(grid);
        a.nonneg = std::all_of(d.f.begin(), d.f.end(), [](double f) { return f >= -1e-12; });
        a.increasing = true;
        for (std::size_t i = 1; i < d.f.size(); ++i)
            if (d.f[i] < d.f[i - 1] - 1e-12 * std::abs(d.f[i - 1])) a.increasing = false;
        a.convex = slopes_increase(d.x, d.f, 1);
        a.concave = slopes_increase(d.x, d.f, -1);
        std::vector<double> t;
        std::vector<double> ft;
        for (std::size_t i = 0; i < d.x.size(); ++i)
            if (d.x[i] > 0.0) {
                t.push_back(std::log(d.x[i]));
                ft.push_back(d.f[i]);
            }
        a.convex_in_log = slopes_increase(t, ft, 1);
        return a;
    }

    void validate(const std::vector<double>& grid) const {
        const auto d = detect(grid);
        auto fail = [&](const char* what) {
            throw std::invalid_argument(std::string("profile ") + name() + ": declared attribute '" + what +
                                        "' fails the finite-difference check");
        };
        if (attr_.nonneg && !d.nonneg) fail("nonneg");
        if (attr_.increasing && !d.increasing) fail("increasing");
        if (attr_.convex && !d.convex) fail("convex");
        if (attr_.concave && !d.concave) fail("concave");
        if (attr_.convex_in_log && !d.convex_in_log) fail("convex-in-ln-s");
    }

    ProfileKind kind_ = ProfileKind::sampled;
    std::map<std::string, double> params_;
    ProfileAttributes attr_;
    double offset_ = 0.0;
    double gamma_ = 1.0, c_ = 1.0;
    std::vector<double> s_, v_;
};

// ---------------------------------------------------------------- JSON

inline nlohmann::json to_json(const FunctionProfile& p) {
    nlohmann::json j;
    j["kind"] = to_string(p.kind());
    if (p.is_sampled()) {
        j["s"] = p.sample_s();
        j["v"] = p.sample_v();
    } else {
        j["params"] = nlohmann::json::object();
        for (const auto& [k, v] : p.params()) j["params"][k] = v;
    }
    return j;
}

inline FunctionProfile profile_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    const nlohmann::json params = j.value("params", nlohmann::json::object());
    auto get = [&](const char* k, double dflt) { return params.contains(k) ? params.at(k).get<double>() : dflt; };
    if (kind == "power") return FunctionProfile::power(params.at("gamma").get<double>(), get("c", 1.0));
    if (kind == "quadratic") return FunctionProfile::quadratic();
    if (kind == "exp-minus-one") return FunctionProfile::exp_minus_one();
    if (kind == "linear") return FunctionProfile::linear(get("c", 1.0));
    if (kind == "entropy") return FunctionProfile::entropy();
    if (kind == "log-growth") return FunctionProfile::log_growth();
    if (kind == "sampled")
        return FunctionProfile::sampled(j.at("s").get<std::vector<double>>(), j.at("v").get<std::vector<double>>());
    throw std::invalid_argument("unknown profile kind '" + kind + "'");
}

// ---------------------------------------------------------------- conjugates

/// α_*(r) = sup_{s>0} (r s - α(s)) for increasing convex α with α(0) = 0.
inline ExtendedValue convex_conjugate(const FunctionProfile& alpha, double r, const SearchOptions& base = {}) {
    if (!alpha.attributes().convex || !alpha.attributes().increasing)
        throw std::invalid_argument("convex_conjugate: profile " + alpha.name() + " is not increasing and convex");
    if (!(r >= 0.0)) throw std::domain_error("convex_conjugate: r must be >= 0");
    SearchOptions opt = base;
    opt.limit_at_zero = 0.0;
    return sup_unimodal_log([&](double s) { return r * s - alpha(s); }, opt).value;
}

/// β^*(t) = inf_{s>0} (s t - β(s)); nonpositive for t > 0.
inline ExtendedValue concave_conjugate(const FunctionProfile& beta, double t, const SearchOptions& base = {}) {
    if (!(t > 0.0)) throw std::domain_error("concave_conjugate: t must be > 0");
    SearchOptions opt = base;
    opt.limit_at_zero = 0.0;
    return inf_unimodal_log([&](double s) { return s * t - beta(s); }, opt).value;
}

/// (α_*)_*(s) = sup_r (r s - α_*(r)), with the inner conjugate recomputed by search.
inline ExtendedValue double_conjugate(const FunctionProfile& alpha, double s, const SearchOptions& opt = {}) {
    SearchOptions outer = opt;
    outer.limit_at_zero = 0.0;
    // The maximizing r is α'(s), which for fast profiles leaves any fixed window.
    outer.s_max = std::max(opt.s_max, 1e150);
    return sup_unimodal_log(
               [&](double r) {
                   const auto c = convex_conjugate(alpha, r, opt);
                   return c.is_finite() ? r * s - c.value() : -kInf;
               },
               outer)
        .value;
}

// ---------------------------------------------------------------- conditions

struct DoublingResult {
    std::optional<double> h;
    double witness_s = 0.0;  ///< largest violation of 2β(s) <= β(h_max s), on failure
    std::size_t grid_points = 0;
};

/// Smallest h in (1, h_max] with 2β(s) <= β(hs) on the grid (bisection to relative 1e-10).
inline DoublingResult check_doubling(const FunctionProfile& beta, double h_max, const std::vector<double>& grid = default_grid()) {
    if (!(h_max > 1.0)) throw std::invalid_argument("check_doubling: h_max must exceed 1");
    DoublingResult r;
    r.grid_points = grid.size();
    auto violation = [&](double h, double& worst_s) {
        double worst = -kInf;
        for (double s : grid) {
            const double lhs = 2.0 * beta(s), rhs = beta(h * s);
            const double v = lhs - rhs - 1e-12 * std::abs(rhs);
            if (v > worst) {
                worst = v;
                worst_s = s;
            }
        }
        return worst;
    };
    double ws = 0.0;
    if (violation(h_max, ws) > 0.0) {
        r.witness_s = ws;
        return r;
    }
    double lo = 1.0, hi = h_max;
    while (hi - lo > 1e-10 * hi) {
        const double mid = 0.5 * (lo + hi);
        double w;
        (violation(mid, w) > 0.0 ? lo : hi) = mid;
    }
    r.h = hi;
    return r;
}

struct NonquasianalyticResult {
    Status status = Status::undetermined;
    ExtendedValue integral;
    double cutoff = 0.0;     ///< last quadrature endpoint S
    double tail = 0.0;       ///< tail estimate beyond S
    double local_slope = 0.0;
};

/// ∫_1^∞ β(s)/s² ds: quadrature on [1, S] in u = ln s plus a power-law tail
/// β(S)/(S(1 - γ)) with γ the local log-slope at S. A persistent slope >= 1
/// certifies divergence (integrand >= c/s); estimates stable across S =
/// 10^2, 10^4, ... to relative 1e-8 certify convergence.
inline NonquasianalyticResult check_nonquasianalytic(const FunctionProfile& beta, double s_limit = 1e12) {
    NonquasianalyticResult r;
    double acc = 0.0, prev_u = 0.0;
    std::optional<double> prev_est;
    int slope_ge_one = 0, steps = 0;
    for (double S = 1e2; S <= s_limit * 1.000001; S *= 1e2) {
        ++steps;
        const double u = std::log(S);
        auto q = adaptive_gk([&](double x) { return beta(std::exp(x)) * std::exp(-x); }, prev_u, u, 1e-15, 1e-14);
        acc += q.value;
        prev_u = u;
        const double g = beta.log_slope(S);
        r.cutoff = S;
        r.local_slope = g;
        if (g >= 1.0 - 1e-9) {
            ++slope_ge_one;
            prev_est.reset();
            continue;
        }
        slope_ge_one = 0;
        const double tail = beta(S) / (S * (1.0 - g));
        const double est = acc + tail;
        r.tail = tail;
        if (prev_est && std::abs(est - *prev_est) <= 1e-8 * std::abs(est)) {
            r.status = Status::pass;
            r.integral = ExtendedValue(est);
            return r;
        }
        prev_est = est;
        r.integral = ExtendedValue(est);
    }
    if (slope_ge_one == steps || slope_ge_one >= 3) {
        r.status = Status::fail;
        r.integral = ExtendedValue::plus_infinity();
    }
    return r;
}

namespace detail {

struct LatticeFit {
    bool ok = false;
    double value = -kInf;
    double argument = 0.0;
};

/// Supremum of f over the grid; rejected when still rising at the last point.
template <class F>
LatticeFit bounded_sup(F&& f, const std::vector<double>& grid) {
    LatticeFit r;
    const auto full = grid_sup(f, grid, true);
    r.value = full.value;
    r.argument = full.rising_at_end ? grid.back() : full.argument;
    r.ok = !full.rising_at_end && std::isfinite(full.value);
    return r;
}

}  // namespace detail

struct PrecedesResult {
    std::optional<std::pair<double, double>> constants;  ///< (C, H)
    double witness_s = 0.0;
};

/// α1 ≺ α: smallest lattice H (powers of 2^{1/4} up to h_max) for which
/// C = sup_s max(0, α1(s) - α(H s)) stays bounded on the grid.
inline PrecedesResult check_precedes(const FunctionProfile& a1, const FunctionProfile& a, double h_max = 64.0,
                                     const std::vector<double>& grid = default_grid()) {
    PrecedesResult r;
    for (double H = 1.0; H <= h_max * (1 + 1e-12); H *= std::pow(2.0, 0.25)) {
        auto fit = detail::bounded_sup([&](double s) { return a1(s) - a(H * s); }, grid);
        if (fit.ok) {
            r.constants = std::pair{std::max(0.0, fit.value), H};
            return r;
        }
        r.witness_s = fit.argument;
    }
    return r;
}

struct MarginResult {
    std::optional<double> c_eps;
    double witness_s = 0.0;
    double argument = 0.0;
};

/// Smallest C with β(s) + ln s <= C + β((1+ε)s) on the grid.
inline MarginResult log_shift_margin(const FunctionProfile& beta, double eps, const std::vector<double>& grid = default_grid()) {
    if (!(eps > 0.0)) throw std::domain_error("log_shift_margin: eps must be > 0");
    MarginResult r;
    auto fit = detail::bounded_sup([&](double s) { return beta(s) + std::log(s) - beta((1.0 + eps) * s); }, grid);
    if (fit.ok) {
        r.c_eps = fit.value;
        r.argument = fit.argument;
    } else {
        r.witness_s = fit.argument;
    }
    return r;
}

/// Threshold beyond which β(s) >= c ln s holds on the rest of the grid, if any.
inline std::optional<double> log_dominance_threshold(const FunctionProfile& beta, double c,
                                                     const std::vector<double>& grid = default_grid()) {
    std::optional<double> thr;
    for (auto it = grid.rbegin(); it != grid.rend(); ++it) {
        if (beta(*it) >= c * std::log(*it)) thr = *it;
        else break;
    }
    if (thr && *thr == grid.back()) return std::nullopt;
    return thr;
}

}  // namespace wickspec
