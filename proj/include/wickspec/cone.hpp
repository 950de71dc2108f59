#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "wickspec/core/nnls.hpp"
#include "wickspec/core/numeric.hpp"
#include "wickspec/core/report.hpp"

namespace wickspec {

using Vec = std::vector<double>;

/// Minkowski square p0² - |p_spatial|² (signature +,-,...,-).
inline double minkowski_square(std::span<const double> p) {
    double s = p[0] * p[0];
    for (std::size_t i = 1; i < p.size(); ++i) s -= p[i] * p[i];
    return s;
}

enum class ConeKind { lorentz, half_space, generators, normals, product, spectral, dual_of, origin, full_space };

/// A closed convex cone in R^N.
///
/// Lorentz cones carry an orientation (+1 forward, -1 backward) and an
/// aperture a: {p : |p_spatial| <= a * orientation * p0}; a = 1 is the light
/// cone. The spectral cone holds n momenta of dimension d whose trailing
/// partial sums lie in the closed light cone of the given orientation.
class Cone {
public:
    static Cone lorentz(std::size_t d, int orientation = +1, double aperture = 1.0) {
        if (d < 1 || (orientation != 1 && orientation != -1) || !(aperture > 0.0))
            throw std::invalid_argument("lorentz cone: need d >= 1, orientation +-1, aperture > 0");
        Cone c(ConeKind::lorentz, d);
        c.orientation_ = orientation;
        c.aperture_ = aperture;
        return c;
    }
    static Cone half_space(Vec normal) {
        if (norm2(normal) == 0.0) throw std::invalid_argument("half-space: zero normal");
        Cone c(ConeKind::half_space, normal.size());
        c.vectors_ = {std::move(normal)};
        return c;
    }
    /// cone(g_1, ..., g_m).
    static Cone generators(std::vector<Vec> gens) {
        Cone c(ConeKind::generators, check_vectors(gens));
        c.vectors_ = std::move(gens);
        return c;
    }
    /// {p : n_i · p >= 0 for all i}.
    static Cone normals(std::vector<Vec> ns) {
        Cone c(ConeKind::normals, check_vectors(ns));
        c.vectors_ = std::move(ns);
        return c;
    }
    static Cone ray(Vec direction) { return generators({std::move(direction)}); }
    static Cone product(std::vector<Cone> factors) {
        if (factors.empty()) throw std::invalid_argument("product cone: no factors");
        std::size_t n = 0;
        for (const auto& f : factors) n += f.dim();
        Cone c(ConeKind::product, n);
        c.children_ = std::make_shared<const std::vector<Cone>>(std::move(factors));
        return c;
    }
    /// {(p_1..p_n) in (R^d)^n : p_m + ... + p_n in the closed light cone of `sign`, m = 1..n}.
    static Cone spectral(std::size_t n, std::size_t d, int sign = -1) {
        if (n < 1 || d < 1 || (sign != 1 && sign != -1)) throw std::invalid_argument("spectral cone: bad parameters");
        Cone c(ConeKind::spectral, n * d);
        c.n_ = n;
        c.d_ = d;
        c.orientation_ = sign;
        return c;
    }
    static Cone dual_of(const Cone& inner) {
        Cone c(ConeKind::dual_of, inner.dim());
        c.children_ = std::make_shared<const std::vector<Cone>>(std::vector<Cone>{inner});
        return c;
    }
    static Cone origin(std::size_t n) { return Cone(ConeKind::origin, n); }
    static Cone full_space(std::size_t n) { return Cone(ConeKind::full_space, n); }

    ConeKind kind() const { return kind_; }
    std::size_t dim() const { return dim_; }
    int orientation() const { return orientation_; }
    double aperture() const { return aperture_; }
    std::size_t blocks() const { return n_; }
    std::size_t block_dim() const { return d_; }
    const std::vector<Vec>& vectors() const { return vectors_; }
    const std::vector<Cone>& factors() const { return *children_; }
    const Cone& inner() const { return children_->front(); }

    // ------------------------------------------------------------ membership

    bool contains(std::span<const double> p) const {
        check_dim(p);
        switch (kind_) {
            case ConeKind::lorentz: return lorentz_contains(p, orientation_, aperture_);
            case ConeKind::half_space: return dot(vectors_[0], p) >= 0.0;
            case ConeKind::normals:
                for (const auto& nv : vectors_)
                    if (dot(nv, p) < 0.0) return false;
                return true;
            case ConeKind::generators: return in_generated_cone(vectors_, p);
            case ConeKind::product: {
                std::size_t off = 0;
                for (const auto& f : factors()) {
                    if (!f.contains(p.subspan(off, f.dim()))) return false;
                    off += f.dim();
                }
                return true;
            }
            case ConeKind::spectral: {
                Vec q(d_, 0.0);
                for (std::size_t m = n_; m-- > 0;) {
                    for (std::size_t k = 0; k < d_; ++k) q[k] += p[m * d_ + k];
                    if (!lorentz_contains(q, orientation_, 1.0)) return false;
                }
                return true;
            }
            case ConeKind::dual_of: return inner().dual_contains(p);
            case ConeKind::origin: return std::all_of(p.begin(), p.end(), [](double x) { return x == 0.0; });
            case ConeKind::full_space: return true;
        }
        return false;
    }

    /// y ∈ K* = {y : y · p >= 0 for all p in K}.
    bool dual_contains(std::span<const double> y) const {
        check_dim(y);
        switch (kind_) {
            case ConeKind::lorentz: return lorentz_contains(y, orientation_, 1.0 / aperture_);
            case ConeKind::half_space: return in_generated_cone(vectors_, y);
            case ConeKind::normals: return in_generated_cone(vectors_, y);
            case ConeKind::generators:
                for (const auto& g : vectors_)
                    if (dot(g, y) < 0.0) return false;
                return true;
            case ConeKind::product: {
                std::size_t off = 0;
                for (const auto& f : factors()) {
                    if (!f.dual_contains(y.subspan(off, f.dim()))) return false;
                    off += f.dim();
                }
                return true;
            }
            case ConeKind::spectral: {
                // y = T^T c with c_m in the light cone: c_1 = y_1, c_m = y_m - y_{m-1}.
                Vec c(d_);
                for (std::size_t m = 0; m < n_; ++m) {
                    for (std::size_t k = 0; k < d_; ++k) c[k] = y[m * d_ + k] - (m ? y[(m - 1) * d_ + k] : 0.0);
                    if (!lorentz_contains(c, orientation_, 1.0)) return false;
                }
                return true;
            }
            case ConeKind::dual_of: return inner().contains(y);
            case ConeKind::origin: return true;
            case ConeKind::full_space: return std::all_of(y.begin(), y.end(), [](double x) { return x == 0.0; });
        }
        return false;
    }

    // ------------------------------------------------------------ projection

    /// Euclidean projection onto the cone.
    Vec project(std::span<const double> p) const {
        check_dim(p);
        switch (kind_) {
            case ConeKind::lorentz: return lorentz_project(p, orientation_, aperture_);
            case ConeKind::half_space: {
                const auto& nv = vectors_[0];
                const double s = dot(nv, p);
                Vec r(p.begin(), p.end());
                if (s < 0.0) {
                    const double nn = dot(nv, nv);
                    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= s / nn * nv[i];
                }
                return r;
            }
            case ConeKind::generators: return project_generated(vectors_, p);
            case ConeKind::normals: {
                // Moreau: proj_K(p) = p + proj_{cone(n)}(-p).
                Vec m(p.size());
                for (std::size_t i = 0; i < p.size(); ++i) m[i] = -p[i];
                const Vec q = project_generated(vectors_, m);
                Vec r(p.begin(), p.end());
                for (std::size_t i = 0; i < r.size(); ++i) r[i] += q[i];
                return r;
            }
            case ConeKind::product: {
                Vec r;
                r.reserve(p.size());
                std::size_t off = 0;
                for (const auto& f : factors()) {
                    const Vec b = f.project(p.subspan(off, f.dim()));
                    r.insert(r.end(), b.begin(), b.end());
                    off += f.dim();
                }
                return r;
            }
            case ConeKind::spectral: return spectral_project(p);
            case ConeKind::dual_of: {
                Vec m(p.size());
                for (std::size_t i = 0; i < p.size(); ++i) m[i] = -p[i];
                const Vec q = inner().project(m);
                Vec r(p.begin(), p.end());
                for (std::size_t i = 0; i < r.size(); ++i) r[i] += q[i];
                return r;
            }
            case ConeKind::origin: return Vec(p.size(), 0.0);
            case ConeKind::full_space: return Vec(p.begin(), p.end());
        }
        return {};
    }

    /// Euclidean distance from p to the cone.
    double distance(std::span<const double> p) const {
        check_dim(p);
        if (kind_ == ConeKind::lorentz) {
            double t, r;
            axial(p, orientation_, t, r);
            const double phi = std::atan(aperture_);
            if (r <= aperture_ * t) return 0.0;
            if (aperture_ * r <= -t) return std::hypot(t, r);
            return r * std::cos(phi) - t * std::sin(phi);
        }
        const Vec q = project(p);
        double s = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] - q[i]) * (p[i] - q[i]);
        return std::sqrt(s);
    }

    /// Lower bound on the distance from p to the complement of the cone
    /// (positive iff p is interior). Throws for variants without a facet
    /// description in dimension > 2.
    double interior_depth(std::span<const double> p) const {
        check_dim(p);
        switch (kind_) {
            case ConeKind::lorentz: {
                double t, r;
                axial(p, orientation_, t, r);
                const double phi = std::atan(aperture_);
                return t * std::sin(phi) - r * std::cos(phi);
            }
            case ConeKind::half_space: return dot(vectors_[0], p) / norm2(vectors_[0]);
            case ConeKind::normals: {
                double m = kInf;
                for (const auto& nv : vectors_) m = std::min(m, dot(nv, p) / norm2(nv));
                return m;
            }
            case ConeKind::generators: return as_normals().interior_depth(p);
            case ConeKind::product: {
                double m = kInf;
                std::size_t off = 0;
                for (const auto& f : factors()) {
                    m = std::min(m, f.interior_depth(p.subspan(off, f.dim())));
                    off += f.dim();
                }
                return m;
            }
            case ConeKind::spectral: {
                // q = T p with |T| <= n, so a depth δ in q-space gives δ/n in p-space.
                Vec q(d_, 0.0);
                double m = kInf;
                for (std::size_t k = n_; k-- > 0;) {
                    for (std::size_t j = 0; j < d_; ++j) q[j] += p[k * d_ + j];
                    double t, r;
                    axial(q, orientation_, t, r);
                    m = std::min(m, (t - r) / std::sqrt(2.0));
                }
                return m / double(n_);
            }
            case ConeKind::dual_of: return explicit_dual().interior_depth(p);
            case ConeKind::origin: return -norm2(p);
            case ConeKind::full_space: return kInf;
        }
        return -kInf;
    }

    /// The dual cone as an explicit variant (no dual_of wrapper) when one exists.
    Cone explicit_dual() const {
        switch (kind_) {
            case ConeKind::lorentz: return lorentz(dim_, orientation_, 1.0 / aperture_);
            case ConeKind::half_space: return ray(vectors_[0]);
            case ConeKind::normals: return generators(vectors_);
            case ConeKind::generators: return normals(vectors_);
            case ConeKind::product: {
                std::vector<Cone> fs;
                for (const auto& f : factors()) fs.push_back(f.explicit_dual());
                return product(std::move(fs));
            }
            case ConeKind::dual_of: return inner();
            case ConeKind::origin: return full_space(dim_);
            case ConeKind::full_space: return origin(dim_);
            case ConeKind::spectral: return dual_of(*this);
        }
        return dual_of(*this);
    }

    std::string describe() const {
        switch (kind_) {
            case ConeKind::lorentz:
                return std::string(orientation_ > 0 ? "lorentz-forward(" : "lorentz-backward(") + std::to_string(dim_) +
                       ",a=" + std::to_string(aperture_) + ")";
            case ConeKind::half_space: return "half-space(" + std::to_string(dim_) + ")";
            case ConeKind::generators: return "polyhedral-generators(" + std::to_string(vectors_.size()) + ")";
            case ConeKind::normals: return "polyhedral-normals(" + std::to_string(vectors_.size()) + ")";
            case ConeKind::product: return "product(" + std::to_string(factors().size()) + ")";
            case ConeKind::spectral:
                return "spectral(" + std::to_string(n_) + "," + std::to_string(d_) + (orientation_ < 0 ? ",-)" : ",+)");
            case ConeKind::dual_of: return "dual-of(" + inner().describe() + ")";
            case ConeKind::origin: return "origin(" + std::to_string(dim_) + ")";
            case ConeKind::full_space: return "full-space(" + std::to_string(dim_) + ")";
        }
        return "?";
    }

    // ------------------------------------------------------------ sampling

    /// Deterministic unit vectors in the cone: low-discrepancy interior
    /// points plus boundary points. `offset` selects a fresh stretch of the
    /// sequence (used for validation sets).
    std::vector<Vec> unit_samples(std::size_t count, std::uint64_t offset = 0) const {
        std::vector<Vec> out;
        out.reserve(count);
        auto push = [&](Vec v) {
            const double nv = norm2(v);
            if (nv > 1e-14) {
                for (double& x : v) x /= nv;
                out.push_back(std::move(v));
            }
        };
        switch (kind_) {
            case ConeKind::origin: return out;
            case ConeKind::lorentz: {
                const std::size_t m = dim_ - 1;
                for (std::uint64_t i = offset; out.size() < count; ++i) {
                    const auto h = halton_point(i, std::max<std::size_t>(m + 1, 2));
                    Vec v(dim_);
                    v[0] = double(orientation_);
                    if (m > 0) {
                        Vec dir = sphere_point(h, m);
                        // Every fourth sample sits on the boundary.
                        const double rad = (i % 4 == 3) ? 1.0 : std::pow(h[m], 1.0 / double(m));
                        for (std::size_t k = 0; k < m; ++k) v[k + 1] = aperture_ * rad * dir[k];
                    }
                    push(std::move(v));
                    if (m == 0) break;
                }
                return out;
            }
            case ConeKind::generators: {
                for (const auto& g : vectors_)
                    if (out.size() < count) push(g);
                const std::size_t k = vectors_.size();
                for (std::uint64_t i = offset; out.size() < count && k > 1; ++i) {
                    const auto w = halton_point(i, k);
                    Vec v(dim_, 0.0);
                    for (std::size_t j = 0; j < k; ++j)
                        for (std::size_t a = 0; a < dim_; ++a) v[a] += w[j] * vectors_[j][a];
                    push(std::move(v));
                }
                return out;
            }
            case ConeKind::spectral: {
                // q_m = w_m * (light-cone vector); one sample in three keeps a
                // single block on the boundary (the extreme rays of the cone).
                const std::size_t per = d_ + 1;
                for (std::uint64_t i = offset; out.size() < count; ++i) {
                    const auto h = halton_point(i, std::min<std::size_t>(n_ * per, 32));
                    const int pattern = int(i % 3);
                    const std::size_t single = std::size_t((i / 3) % n_);
                    Vec q(n_ * d_, 0.0);
                    for (std::size_t m = 0; m < n_; ++m) {
                        auto hb = [&](std::size_t k) { return h[(m * per + k) % h.size()]; };
                        const double w = pattern == 0 ? (m == single ? 1.0 : 0.0) : hb(0);
                        const bool boundary = pattern != 2;
                        q[m * d_] = orientation_ * w;
                        if (d_ > 1) {
                            std::vector<double> hd(d_ - 1);
                            for (std::size_t k = 0; k + 1 < d_; ++k) hd[k] = hb(2 + k);
                            const Vec dir = sphere_point(hd, d_ - 1);
                            const double rad = boundary ? 1.0 : std::pow(hb(1), 1.0 / double(d_ - 1));
                            for (std::size_t k = 0; k + 1 < d_; ++k) q[m * d_ + 1 + k] = w * rad * dir[k];
                        }
                    }
                    Vec p(n_ * d_);
                    for (std::size_t m = 0; m < n_; ++m)
                        for (std::size_t k = 0; k < d_; ++k)
                            p[m * d_ + k] = q[m * d_ + k] - (m + 1 < n_ ? q[(m + 1) * d_ + k] : 0.0);
                    push(std::move(p));
                }
                return out;
            }
            default: {
                // Project low-discrepancy points of the cube onto the cone.
                for (std::uint64_t i = offset; out.size() < count && i < offset + 50 * count + 100; ++i) {
                    const auto h = halton_point(i, std::min<std::size_t>(dim_, 32));
                    Vec v(dim_);
                    for (std::size_t a = 0; a < dim_; ++a) v[a] = 2.0 * h[a % h.size()] - 1.0;
                    push(project(v));
                }
                return out;
            }
        }
    }

    // ------------------------------------------------------------ JSON

    nlohmann::json to_json() const {
        nlohmann::json j;
        switch (kind_) {
            case ConeKind::lorentz:
                j["variant"] = orientation_ > 0 ? "lorentz-forward" : "lorentz-backward";
                j["d"] = dim_;
                j["aperture"] = aperture_;
                break;
            case ConeKind::half_space:
                j["variant"] = "half-space";
                j["normal"] = vectors_[0];
                break;
            case ConeKind::generators:
                j["variant"] = "polyhedral";
                j["generators"] = vectors_;
                break;
            case ConeKind::normals:
                j["variant"] = "polyhedral";
                j["normals"] = vectors_;
                break;
            case ConeKind::product: {
                j["variant"] = "product";
                j["factors"] = nlohmann::json::array();
                for (const auto& f : factors()) j["factors"].push_back(f.to_json());
                break;
            }
            case ConeKind::spectral:
                j["variant"] = "spectral";
                j["n"] = n_;
                j["d"] = d_;
                j["sign"] = orientation_ < 0 ? "-" : "+";
                break;
            case ConeKind::dual_of:
                j["variant"] = "dual-of";
                j["inner"] = inner().to_json();
                break;
            case ConeKind::origin:
                j["variant"] = "origin";
                j["dim"] = dim_;
                break;
            case ConeKind::full_space:
                j["variant"] = "full-space";
                j["dim"] = dim_;
                break;
        }
        return j;
    }

    static Cone from_json(const nlohmann::json& j) {
        const std::string v = j.at("variant").get<std::string>();
        if (v == "lorentz-forward" || v == "lorentz-backward")
            return lorentz(j.at("d").get<std::size_t>(), v == "lorentz-forward" ? 1 : -1, j.value("aperture", 1.0));
        if (v == "half-space") return half_space(j.at("normal").get<Vec>());
        if (v == "ray") return ray(j.at("direction").get<Vec>());
        if (v == "polyhedral") {
            if (j.contains("generators")) return generators(j.at("generators").get<std::vector<Vec>>());
            return normals(j.at("normals").get<std::vector<Vec>>());
        }
        if (v == "product") {
            std::vector<Cone> fs;
            for (const auto& f : j.at("factors")) fs.push_back(from_json(f));
            return product(std::move(fs));
        }
        if (v == "spectral") {
            const std::string s = j.value("sign", std::string("-"));
            return spectral(j.at("n").get<std::size_t>(), j.at("d").get<std::size_t>(), s == "+" ? 1 : -1);
        }
        if (v == "dual-of") return dual_of(from_json(j.at("inner")));
        if (v == "origin") return origin(j.at("dim").get<std::size_t>());
        if (v == "full-space") return full_space(j.at("dim").get<std::size_t>());
        throw std::invalid_argument("unknown cone variant '" + v + "'");
    }

private:
    Cone(ConeKind k, std::size_t n) : kind_(k), dim_(n) {
        if (n == 0) throw std::invalid_argument("cone: dimension must be positive");
    }

    void check_dim(std::span<const double> p) const {
        if (p.size() != dim_)
            throw std::invalid_argument("cone " + describe() + ": expected dimension " + std::to_string(dim_) + ", got " +
                                        std::to_string(p.size()));
    }

    static std::size_t check_vectors(const std::vector<Vec>& vs) {
        if (vs.empty()) throw std::invalid_argument("polyhedral cone: no vectors");
        const std::size_t n = vs[0].size();
        for (const auto& v : vs)
            if (v.size() != n || n == 0) throw std::invalid_argument("polyhedral cone: inconsistent dimensions");
        return n;
    }

    static void axial(std::span<const double> p, int orientation, double& t, double& r) {
        t = orientation * p[0];
        double s = 0.0;
        for (std::size_t i = 1; i < p.size(); ++i) s += p[i] * p[i];
        r = std::sqrt(s);
    }

    static bool lorentz_contains(std::span<const double> p, int orientation, double aperture) {
        double t, r;
        axial(p, orientation, t, r);
        return r <= aperture * t;
    }

    static Vec lorentz_project(std::span<const double> p, int orientation, double aperture) {
        double t, r;
        axial(p, orientation, t, r);
        if (r <= aperture * t) return Vec(p.begin(), p.end());
        if (aperture * r <= -t) return Vec(p.size(), 0.0);
        const double phi = std::atan(aperture);
        const double c = std::cos(phi), s = std::sin(phi);
        const double len = t * c + r * s;
        Vec q(p.size(), 0.0);
        q[0] = orientation * len * c;
        if (r > 0.0)
            for (std::size_t i = 1; i < p.size(); ++i) q[i] = len * s * p[i] / r;
        return q;
    }

    static Eigen::MatrixXd as_matrix(const std::vector<Vec>& cols) {
        Eigen::MatrixXd A(Eigen::Index(cols[0].size()), Eigen::Index(cols.size()));
        for (std::size_t j = 0; j < cols.size(); ++j)
            for (std::size_t i = 0; i < cols[j].size(); ++i) A(Eigen::Index(i), Eigen::Index(j)) = cols[j][i];
        return A;
    }

    static Vec project_generated(const std::vector<Vec>& gens, std::span<const double> p) {
        const Eigen::MatrixXd A = as_matrix(gens);
        const Eigen::Map<const Eigen::VectorXd> b(p.data(), Eigen::Index(p.size()));
        const auto sol = nnls(A, b);
        const Eigen::VectorXd q = A * sol.x;
        return Vec(q.data(), q.data() + q.size());
    }

    static bool in_generated_cone(const std::vector<Vec>& gens, std::span<const double> p) {
        const Vec q = project_generated(gens, p);
        double s = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] - q[i]) * (p[i] - q[i]);
        return std::sqrt(s) <= 1e-10 * (1.0 + norm2(p));
    }

    /// Facet description of a generated cone in the plane.
    Cone as_normals() const {
        if (dim_ == 1) {
            std::vector<Vec> ns;
            bool pos = false, neg = false;
            for (const auto& g : vectors_) (g[0] > 0 ? pos : neg) = true;
            if (pos) ns.push_back({1.0});
            if (neg) ns.push_back({-1.0});
            if (pos && neg) return full_space(1);
            return normals(ns);
        }
        if (dim_ != 2) throw std::invalid_argument("interior depth of a generated cone needs dimension <= 2");
        // Extreme rays by angle; the cone is assumed pointed (angular span < π).
        double lo = kInf, hi = -kInf;
        const double ref = std::atan2(vectors_[0][1], vectors_[0][0]);
        for (const auto& g : vectors_) {
            double a = std::atan2(g[1], g[0]) - ref;
            while (a > M_PI) a -= 2 * M_PI;
            while (a <= -M_PI) a += 2 * M_PI;
            lo = std::min(lo, a);
            hi = std::max(hi, a);
        }
        lo += ref;
        hi += ref;
        // Inward normals of the two edges.
        return normals({{-std::sin(lo), std::cos(lo)}, {std::sin(hi), -std::cos(hi)}});
    }

    static Vec sphere_point(const std::vector<double>& h, std::size_t m) {
        if (m == 1) return {h[0] < 0.5 ? -1.0 : 1.0};
        if (m == 2) return {std::cos(2 * M_PI * h[0]), std::sin(2 * M_PI * h[0])};
        Vec v(m);
        for (std::size_t k = 0; k < m; ++k) v[k] = 2.0 * h[k % h.size()] - 1.0;
        const double nv = norm2(v);
        for (double& x : v) x /= (nv > 0 ? nv : 1.0);
        return v;
    }

    /// Projection onto T^{-1}(V^n) by accelerated projected gradient in q = T p.
    Vec spectral_project(std::span<const double> p) const {
        const std::size_t N = n_ * d_;
        auto tinv = [&](const Vec& q) {
            Vec x(N);
            for (std::size_t m = 0; m < n_; ++m)
                for (std::size_t k = 0; k < d_; ++k) x[m * d_ + k] = q[m * d_ + k] - (m + 1 < n_ ? q[(m + 1) * d_ + k] : 0.0);
            return x;
        };
        auto tinv_t = [&](const Vec& x) {  // adjoint of tinv
            Vec g(N);
            for (std::size_t m = 0; m < n_; ++m)
                for (std::size_t k = 0; k < d_; ++k) g[m * d_ + k] = x[m * d_ + k] - (m > 0 ? x[(m - 1) * d_ + k] : 0.0);
            return g;
        };
        auto proj_q = [&](Vec q) {
            for (std::size_t m = 0; m < n_; ++m) {
                std::span<double> blk(q.data() + m * d_, d_);
                const Vec b = lorentz_project(blk, orientation_, 1.0);
                std::copy(b.begin(), b.end(), blk.begin());
            }
            return q;
        };
        Vec q(N, 0.0);
        for (std::size_t m = n_; m-- > 0;)
            for (std::size_t k = 0; k < d_; ++k) q[m * d_ + k] = p[m * d_ + k] + (m + 1 < n_ ? q[(m + 1) * d_ + k] : 0.0);
        q = proj_q(q);
        Vec y = q, prev = q;
        double tk = 1.0;
        const double L = 4.0;
        for (int it = 0; it < 20000; ++it) {
            Vec r = tinv(y);
            for (std::size_t i = 0; i < N; ++i) r[i] -= p[i];
            const Vec g = tinv_t(r);
            Vec z(N);
            for (std::size_t i = 0; i < N; ++i) z[i] = y[i] - g[i] / L;
            Vec qn = proj_q(std::move(z));
            const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
            double diff = 0.0, scale = 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                y[i] = qn[i] + (tk - 1.0) / tn * (qn[i] - prev[i]);
                diff = std::max(diff, std::abs(qn[i] - prev[i]));
                scale = std::max(scale, std::abs(qn[i]));
            }
            prev = std::move(qn);
            tk = tn;
            if (diff <= 1e-15 * std::max(1.0, scale) && it > 10) break;
        }
        return tinv(prev);
    }

    ConeKind kind_;
    std::size_t dim_;
    int orientation_ = 1;
    double aperture_ = 1.0;
    std::size_t n_ = 0, d_ = 0;
    std::vector<Vec> vectors_;
    std::shared_ptr<const std::vector<Cone>> children_;
};

// ---------------------------------------------------------------- free functions

inline bool contains(const Cone& K, std::span<const double> p) { return K.contains(p); }
inline bool dual_contains(const Cone& K, std::span<const double> y) { return K.dual_contains(y); }
inline double distance_to_cone(const Cone& U, std::span<const double> p) { return U.distance(p); }

/// θ(u, v) for unit directions: min over scalings of |p - η| / max(|p|, |η|).
inline double pair_separation(double cosine) { return cosine <= 0.0 ? 1.0 : std::sqrt(std::max(0.0, 1.0 - cosine * cosine)); }

struct SeparationResult {
    double theta = 0.0;            ///< validated value (min over fit and validation samples)
    double theta_fit = 0.0;
    double theta_validation = 0.0;
    Vec witness_p, witness_eta;    ///< closest pair found
    std::size_t samples = 0;
};

/// Largest θ with |p - η| >= θ|p| and >= θ|η| on sphere samples of both cones.
/// Sampling bounds θ from above; the validation pass on fresh samples keeps
/// the reported value consistent with every sample seen.
inline SeparationResult angular_separation(const Cone& K1, const Cone& K2, std::size_t samples = 2000) {
    if (K1.dim() != K2.dim()) throw std::invalid_argument("angular_separation: dimension mismatch");
    SeparationResult r;
    r.samples = samples;
    auto run = [&](std::uint64_t offset, Vec& wp, Vec& we) {
        const auto a = K1.unit_samples(samples, offset), b = K2.unit_samples(samples, offset);
        if (a.empty() || b.empty()) throw std::invalid_argument("angular_separation: both cones must be nonzero");
        double best = -kInf;
        for (const auto& u : a)
            for (const auto& v : b) {
                const double c = dot(u, v);
                if (c > best) {
                    best = c;
                    wp = u;
                    we = v;
                }
            }
        return pair_separation(best);
    };
    Vec wp2, we2;
    r.theta_fit = run(0, r.witness_p, r.witness_eta);
    r.theta_validation = run(1000003, wp2, we2);
    if (r.theta_validation < r.theta_fit) {
        r.witness_p = wp2;
        r.witness_eta = we2;
    }
    r.theta = std::min(r.theta_fit, r.theta_validation);
    return r;
}

struct SubconeResult {
    bool compact = false;
    double min_depth = kInf;
    Vec witness;
    std::size_t samples = 0;
};

/// Every unit sample of V' (boundary included) lies in int V with depth > 1e-9.
inline SubconeResult is_compact_subcone(const Cone& Vp, const Cone& V, std::size_t samples = 10000) {
    if (Vp.dim() != V.dim()) throw std::invalid_argument("is_compact_subcone: dimension mismatch");
    SubconeResult r;
    const auto pts = Vp.unit_samples(samples);
    r.samples = pts.size();
    for (const auto& u : pts) {
        const double d = V.interior_depth(u);
        if (d < r.min_depth) {
            r.min_depth = d;
            r.witness = u;
        }
    }
    r.compact = !pts.empty() && r.min_depth > 1e-9;
    return r;
}

/// An acute cone has a dual with nonempty interior: some y has y·k > 0 on
/// every unit sample k. The candidate is found by perceptron updates from
/// the sample mean; failure to separate within the budget reports false.
inline std::pair<bool, Vec> is_acute(const Cone& K, std::size_t samples = 4000, int max_updates = 20000) {
    const auto pts = K.unit_samples(samples);
    if (pts.empty()) return {true, Vec(K.dim(), 0.0)};
    Vec y(K.dim(), 0.0);
    for (const auto& u : pts)
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += u[i] / double(pts.size());
    for (int it = 0; it < max_updates; ++it) {
        const double ny = norm2(y);
        double worst = kInf;
        const Vec* arg = nullptr;
        for (const auto& u : pts) {
            const double v = ny > 0 ? dot(y, u) / ny : 0.0;
            if (v < worst) {
                worst = v;
                arg = &u;
            }
        }
        if (worst > 1e-9) {
            for (double& x : y) x /= ny;
            return {true, y};
        }
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += (*arg)[i];
    }
    return {false, y};
}

}  // namespace wickspec
