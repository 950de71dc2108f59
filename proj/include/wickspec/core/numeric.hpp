#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "wickspec/core/extended.hpp"

namespace wickspec {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Number of log-spaced points per default grid, and its range.
inline constexpr std::size_t kDefaultGridSize = 512;
inline constexpr double kDefaultGridMin = 1e-3;
inline constexpr double kDefaultGridMax = 1e6;

/// n log-spaced points on [lo, hi], endpoints included.
inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    if (!(lo > 0.0) || !(hi > lo) || n < 2) throw std::invalid_argument("log_grid: need 0 < lo < hi and n >= 2");
    std::vector<double> g(n);
    const double a = std::log(lo), b = std::log(hi);
    for (std::size_t i = 0; i < n; ++i) g[i] = std::exp(a + (b - a) * double(i) / double(n - 1));
    g.front() = lo;
    g.back() = hi;
    return g;
}

inline std::vector<double> default_grid() { return log_grid(kDefaultGridMin, kDefaultGridMax, kDefaultGridSize); }

/// ln(k!) for integer k >= 0.
inline double log_factorial(int k) { return std::lgamma(double(k) + 1.0); }

/// ln(sum exp(x_i)); -inf entries are ignored, an empty or all -inf input gives -inf.
inline double log_sum_exp(std::span<const double> xs) {
    double m = -kInf;
    for (double x : xs) m = std::max(m, x);
    if (m == -kInf) return -kInf;
    if (m == kInf) return kInf;
    double acc = 0.0;
    for (double x : xs) acc += std::exp(x - m);
    return m + std::log(acc);
}

/// Options for the unimodal search kernels.
///
/// The search runs in t = ln s. A coarse scan at ratio `bracket_factor`
/// covers [s_min, s_max]; the decade around the best scan point is refined
/// by golden-section search until its width in t drops below `rel_width`.
/// s_max doubles as the divergence detection limit: an objective still
/// increasing there is declared unbounded.
struct SearchOptions {
    double s_min = 1e-12;
    double s_max = 1e12;
    double bracket_factor = 10.0;
    double rel_width = 1e-12;
    /// Value of the objective in the limit s -> 0+, when known.
    std::optional<double> limit_at_zero;
};

struct SearchResult {
    ExtendedValue value;
    double argument = 0.0;   ///< maximizer (s); 0 when the limit at zero wins
    bool diverged = false;   ///< objective still increasing at s_max
    bool at_lower_end = false;
};

namespace detail {

inline double clean(double v) {
    if (std::isnan(v)) throw std::domain_error("search objective returned NaN");
    return v;
}

template <class F>
std::pair<double, double> golden_max(F&& f, double a, double b, double tol) {
    constexpr double invphi = 0.6180339887498949;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = clean(f(c)), fd = clean(f(d));
    while (b - a > tol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = clean(f(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = clean(f(d));
        }
    }
    return fc >= fd ? std::pair{c, fc} : std::pair{d, fd};
}

}  // namespace detail

/// Supremum over s > 0 of an objective that is unimodal in ln s.
template <class F>
SearchResult sup_unimodal_log(F&& f, const SearchOptions& opt = {}) {
    const double t_lo = std::log(opt.s_min), t_hi = std::log(opt.s_max);
    const double step = std::log(opt.bracket_factor);
    const auto n = static_cast<std::size_t>(std::ceil((t_hi - t_lo) / step)) + 1;
    std::vector<double> ts(n), vals(n);
    for (std::size_t i = 0; i < n; ++i) {
        ts[i] = std::min(t_lo + step * double(i), t_hi);
        vals[i] = detail::clean(f(std::exp(ts[i])));
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (vals[i] > vals[best]) best = i;

    SearchResult r;
    if (vals[best] == kInf || (best == n - 1 && vals[n - 1] > vals[n - 2])) {
        r.value = ExtendedValue::plus_infinity();
        r.argument = opt.s_max;
        r.diverged = true;
        return r;
    }
    const double a = ts[best == 0 ? 0 : best - 1];
    const double b = ts[std::min(best + 1, n - 1)];
    auto g = [&](double t) { return f(std::exp(t)); };
    auto [t_star, v_star] = detail::golden_max(g, a, b, opt.rel_width);
    double v = std::max(v_star, vals[best]);
    double arg = v_star >= vals[best] ? std::exp(t_star) : std::exp(ts[best]);
    if (opt.limit_at_zero && *opt.limit_at_zero > v) {
        v = *opt.limit_at_zero;
        arg = 0.0;
        r.at_lower_end = true;
    }
    r.value = ExtendedValue(v);
    r.argument = arg;
    return r;
}

/// Infimum over s > 0 of an objective unimodal in ln s; divergence means -inf.
template <class F>
SearchResult inf_unimodal_log(F&& f, SearchOptions opt = {}) {
    if (opt.limit_at_zero) opt.limit_at_zero = -*opt.limit_at_zero;
    auto r = sup_unimodal_log([&](double s) { return -f(s); }, opt);
    r.value = -r.value;
    return r;
}

/// Supremum of sampled values over a grid, with edge diagnostics.
struct GridSup {
    double value = -kInf;
    std::size_t index = 0;
    double argument = 0.0;
    /// The maximum sits on the last grid point and the values still rise there:
    /// the supremum over the unbounded range is presumed infinite.
    bool rising_at_end = false;
};

/// Grid supremum of f over `grid`. When `refine` is set and the maximum is
/// interior, a golden-section search in ln s polishes the value; refinement
/// can only raise the reported supremum.
template <class F>
GridSup grid_sup(F&& f, std::span<const double> grid, bool refine = false) {
    if (grid.size() < 2) throw std::invalid_argument("grid_sup: grid needs at least two points");
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) v[i] = detail::clean(f(grid[i]));
    GridSup r;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (v[i] > r.value) {
            r.value = v[i];
            r.index = i;
        }
    r.argument = grid[r.index];
    const std::size_t last = grid.size() - 1;
    r.rising_at_end = v[last] > v[last - 1] && v[last] >= r.value;
    if (refine && r.index > 0 && r.index < last && grid[r.index - 1] > 0.0 && std::isfinite(r.value)) {
        auto g = [&](double t) { return f(std::exp(t)); };
        auto [t, val] = detail::golden_max(g, std::log(grid[r.index - 1]), std::log(grid[r.index + 1]), 1e-12);
        if (val > r.value) {
            r.value = val;
            r.argument = std::exp(t);
        }
    }
    return r;
}

/// Radical inverse of i in the given base (Halton component).
inline double radical_inverse(std::uint64_t i, unsigned base) {
    double inv = 1.0 / base, f = inv, r = 0.0;
    while (i > 0) {
        r += f * double(i % base);
        i /= base;
        f *= inv;
    }
    return r;
}

/// Point i of the Halton sequence in [0,1)^dim (dim <= 32).
inline std::vector<double> halton_point(std::uint64_t i, std::size_t dim) {
    static constexpr std::array<unsigned, 32> primes{2,  3,  5,  7,  11, 13, 17, 19, 23, 29,  31,
                                                     37, 41, 43, 47, 53, 59, 61, 67, 71, 73,  79,
                                                     83, 89, 97, 101, 103, 107, 109, 113, 127, 131};
    if (dim > primes.size()) throw std::invalid_argument("halton_point: dimension too large");
    std::vector<double> p(dim);
    for (std::size_t k = 0; k < dim; ++k) p[k] = radical_inverse(i + 1, primes[k]);
    return p;
}

inline double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace wickspec
