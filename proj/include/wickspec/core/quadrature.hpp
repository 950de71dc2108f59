#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <queue>
#include <stdexcept>
#include <type_traits>
#include <vector>

namespace wickspec {

template <class T>
struct QuadratureResult {
    T value{};
    double error = 0.0;
    bool converged = false;
    std::size_t evaluations = 0;
};

namespace detail {

inline double magnitude(double x) { return std::abs(x); }
inline double magnitude(std::complex<double> x) { return std::abs(x); }

template <class F, class T>
T simpson_rec(F& f, double a, double b, T fa, T fm, T fb, T whole, double tol, int depth, std::size_t& evals,
              bool& ok) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const T flm = f(lm), frm = f(rm);
    evals += 2;
    const T left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const T right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const T delta = left + right - whole;
    if (depth <= 0) {
        ok = false;
        return left + right + delta / 15.0;
    }
    if (magnitude(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, evals, ok) +
           simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, evals, ok);
}

// Kronrod 15-point nodes/weights and the embedded Gauss 7-point weights.
inline constexpr std::array<double, 8> kXgk{0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                            0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk{0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg{0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                           0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class T>
struct Segment {
    double a, b;
    T value;
    double error;
    bool operator<(const Segment& o) const { return error < o.error; }
};

template <class T, class F>
Segment<T> gk15(F& f, double a, double b) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    const T fc = f(c);
    T kron = fc * kWgk[7];
    T gauss = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kXgk[j];
        const T s = f(c - dx) + f(c + dx);
        kron += s * kWgk[j];
        if (j % 2 == 1) gauss += s * kWg[j / 2];
    }
    return {a, b, kron * h, magnitude((kron - gauss) * h)};
}

}  // namespace detail

/// Adaptive Simpson quadrature on [a, b] to absolute tolerance `tol`.
template <class F>
auto adaptive_simpson(F&& f, double a, double b, double tol, int max_depth = 50) {
    using T = std::decay_t<decltype(f(a))>;
    QuadratureResult<T> r;
    const T fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const T whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    bool ok = true;
    std::size_t evals = 3;
    r.value = detail::simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth, evals, ok);
    r.converged = ok;
    r.error = tol;
    r.evaluations = evals;
    return r;
}

/// Globally adaptive Gauss–Kronrod (7/15) quadrature on [a, b].
///
/// Works for real or complex integrands. Stops once the summed error
/// estimate is below max(abs_tol, rel_tol * |I|) or the segment budget is
/// exhausted; `converged` records which.
template <class F>
auto adaptive_gk(F&& f, double a, double b, double abs_tol, double rel_tol, std::size_t max_segments = 2000) {
    using T = std::decay_t<decltype(f(a))>;
    QuadratureResult<T> r;
    if (a == b) {
        r.converged = true;
        return r;
    }
    std::priority_queue<detail::Segment<T>> heap;
    auto first = detail::gk15<T>(f, a, b);
    T total = first.value;
    double err = first.error;
    heap.push(first);
    std::size_t segments = 1;
    while (err > std::max(abs_tol, rel_tol * detail::magnitude(total)) && segments < max_segments) {
        auto worst = heap.top();
        heap.pop();
        const double m = 0.5 * (worst.a + worst.b);
        auto l = detail::gk15<T>(f, worst.a, m);
        auto rr = detail::gk15<T>(f, m, worst.b);
        total += l.value + rr.value - worst.value;
        err += l.error + rr.error - worst.error;
        heap.push(l);
        heap.push(rr);
        ++segments;
    }
    // Re-sum to drop accumulated cancellation from the incremental updates.
    T sum{};
    double esum = 0.0;
    while (!heap.empty()) {
        sum += heap.top().value;
        esum += heap.top().error;
        heap.pop();
    }
    r.value = sum;
    r.error = esum;
    r.converged = esum <= std::max(abs_tol, rel_tol * detail::magnitude(sum));
    r.evaluations = 15 * (2 * segments - 1);
    return r;
}

/// Integral over [a, inf) via the map s = a + t / (1 - t), t in [0, 1).
template <class F>
auto adaptive_gk_semi_infinite(F&& f, double a, double abs_tol, double rel_tol, std::size_t max_segments = 2000) {
    using T = std::decay_t<decltype(f(a))>;
    auto g = [&](double t) -> T {
        if (t >= 1.0) return T{};
        const double u = 1.0 - t;
        const T v = f(a + t / u);
        if (detail::magnitude(v) == 0.0) return T{};
        return v / (u * u);
    };
    return adaptive_gk(g, 0.0, 1.0, abs_tol, rel_tol, max_segments);
}

}  // namespace wickspec
