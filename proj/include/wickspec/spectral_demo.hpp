#pragma once

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "wickspec/cone.hpp"
#include "wickspec/wick.hpp"

namespace wickspec {

enum class Window { gaussian, none };

struct LatticeSpec {
    std::size_t N = 256;      ///< points per axis (1+1 dimensions)
    double h = 0.1;           ///< lattice spacing
    Vec y{-0.5, 0.0};         ///< fixed imaginary part, inside V_-
    double eps = 0.5;         ///< neighborhood radius around the spectral cone
    Window window = Window::gaussian;
    double window_fraction = 0.125;  ///< Gaussian σ = window_fraction · N h
};

struct SpectralDemoResult {
    std::size_t N = 0;
    double outside_fraction = 0.0;  ///< Σ_{δ_K(p) > ε} |F̂|² / Σ |F̂|²
    double total_mass = 0.0;
};

/// Samples an n-point function of a Wick series at x + iy on an N×N lattice,
/// applies the window, transforms with FFTW and measures the share of
/// spectral energy farther than ε from the closed backward light cone.
///
/// n = 1 is the one-point function, the constant d_0 = 1. n = 2 is the
/// two-point series Σ_{k <= N_max} d_k² k! w(x + iy)^k. The lattice momentum
/// for index j is 2π j'/(N h) with j' the centered index, which matches the
/// convention F(x) = Σ F̂(p) e^{i p·x}.
inline SpectralDemoResult spectral_fft_demo(const TwoPointModel& model, const WickCoefficients& d, int n,
                                            const LatticeSpec& lat, int N_max = 10) {
    if (model.dim() != 2) throw std::invalid_argument("spectral_fft_demo: 1+1 dimensional models only");
    if (n != 1 && n != 2) throw std::invalid_argument("spectral_fft_demo: n must be 1 or 2");
    if (lat.N < 8 || lat.N % 2 != 0) throw std::invalid_argument("spectral_fft_demo: N must be even and >= 8");
    if (lat.y.size() != 2 || !Cone::lorentz(2, -1).contains(lat.y) || lat.y[0] == -std::abs(lat.y[1]))
        throw std::invalid_argument("spectral_fft_demo: y must lie in the open backward cone");
    const std::size_t N = lat.N;
    const double sigma = lat.window_fraction * double(N) * lat.h;

    struct Buffer {
        fftw_complex* p;
        explicit Buffer(std::size_t n) : p(fftw_alloc_complex(n)) {
            if (!p) throw std::bad_alloc();
        }
        ~Buffer() { fftw_free(p); }
        Buffer(const Buffer&) = delete;
        Buffer& operator=(const Buffer&) = delete;
    };
    Buffer in(N * N), out(N * N);
    auto centered = [N](std::size_t j) { return j < N / 2 ? double(j) : double(j) - double(N); };

    for (std::size_t a = 0; a < N; ++a)
        for (std::size_t b = 0; b < N; ++b) {
            const double x0 = centered(a) * lat.h, x1 = centered(b) * lat.h;
            Complex v = 1.0;
            if (n == 2) {
                const CVec z{Complex(x0, lat.y[0]), Complex(x1, lat.y[1])};
                v = two_point_series(d, model.w(z), N_max);
            }
            if (lat.window == Window::gaussian) v *= std::exp(-(x0 * x0 + x1 * x1) / (2.0 * sigma * sigma));
            in.p[a * N + b][0] = v.real();
            in.p[a * N + b][1] = v.imag();
        }
    // FFTW_FORWARD uses e^{-i...}: coefficient at +p of e^{+i p·x}.
    fftw_plan plan = fftw_plan_dft_2d(int(N), int(N), in.p, out.p, FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);

    const auto K = Cone::lorentz(2, -1);
    const double dp = 2.0 * std::numbers::pi / (double(N) * lat.h);
    double total = 0.0, outside = 0.0;
    for (std::size_t a = 0; a < N; ++a)
        for (std::size_t b = 0; b < N; ++b) {
            const double e = out.p[a * N + b][0] * out.p[a * N + b][0] + out.p[a * N + b][1] * out.p[a * N + b][1];
            total += e;
            const Vec p{centered(a) * dp, centered(b) * dp};
            if (K.distance(p) > lat.eps) outside += e;
        }
    SpectralDemoResult r;
    r.N = N;
    r.total_mass = total;
    r.outside_fraction = total > 0.0 ? outside / total : 0.0;
    return r;
}

/// Runs the demo over a sequence of lattice sizes and passes when the outside
/// fraction decreases strictly along the sequence.
inline BoundReport spectral_fft_check(const TwoPointModel& model, const WickCoefficients& d, int n,
                                      const std::vector<std::size_t>& sizes, LatticeSpec lat = {}, int N_max = 10) {
    BoundReport r;
    r.check = "spectral_fft";
    nlohmann::json rows = nlohmann::json::array();
    std::vector<double> fr;
    for (std::size_t N : sizes) {
        lat.N = N;
        const auto res = spectral_fft_demo(model, d, n, lat, N_max);
        fr.push_back(res.outside_fraction);
        rows.push_back({{"N", N}, {"outside_fraction", res.outside_fraction}});
        r.set_constant("outside_fraction_N" + std::to_string(N), res.outside_fraction);
    }
    r.details["lattices"] = rows;
    r.set_budget("N_max", double(N_max)).set_budget("eps", lat.eps).set_budget("h", lat.h);
    bool decreasing = true;
    for (std::size_t i = 1; i < fr.size(); ++i)
        if (!(fr[i] < fr[i - 1])) {
            decreasing = false;
            r.set_witness("N", double(sizes[i]));
        }
    r.status = decreasing ? Status::pass : Status::fail;
    if (!decreasing) r.warn("outside fraction did not decrease with the lattice size");
    return r.finalize();
}

}  // namespace wickspec
