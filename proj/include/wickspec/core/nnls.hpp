#pragma once

#include <Eigen/Dense>

#include <limits>
#include <vector>

namespace wickspec {

struct NnlsResult {
    Eigen::VectorXd x;
    double residual = 0.0;
    bool converged = true;
};

/// Lawson–Hanson active-set solver for min |A x - b| subject to x >= 0.
inline NnlsResult nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, int max_iter = 0) {
    const Eigen::Index n = A.cols();
    if (max_iter <= 0) max_iter = int(3 * n + 30);
    NnlsResult r;
    r.x = Eigen::VectorXd::Zero(n);
    std::vector<bool> passive(std::size_t(n), false);
    const double tol = 1e-12 * std::max(1.0, A.norm() * b.norm());

    auto solve_passive = [&](Eigen::VectorXd& z) {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index j = 0; j < n; ++j)
            if (passive[std::size_t(j)]) idx.push_back(j);
        z = Eigen::VectorXd::Zero(n);
        if (idx.empty()) return;
        Eigen::MatrixXd Ap(A.rows(), Eigen::Index(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) Ap.col(Eigen::Index(k)) = A.col(idx[k]);
        const Eigen::VectorXd zp = Ap.completeOrthogonalDecomposition().solve(b);
        for (std::size_t k = 0; k < idx.size(); ++k) z[idx[k]] = zp[Eigen::Index(k)];
    };

    int iter = 0;
    while (true) {
        const Eigen::VectorXd w = A.transpose() * (b - A * r.x);
        Eigen::Index jmax = -1;
        double wmax = tol;
        for (Eigen::Index j = 0; j < n; ++j)
            if (!passive[std::size_t(j)] && w[j] > wmax) {
                wmax = w[j];
                jmax = j;
            }
        if (jmax < 0) break;
        if (++iter > max_iter) {
            r.converged = false;
            break;
        }
        passive[std::size_t(jmax)] = true;
        Eigen::VectorXd z;
        while (true) {
            solve_passive(z);
            bool feasible = true;
            for (Eigen::Index j = 0; j < n; ++j)
                if (passive[std::size_t(j)] && z[j] <= 0.0) feasible = false;
            if (feasible) break;
            double alpha = std::numeric_limits<double>::infinity();
            for (Eigen::Index j = 0; j < n; ++j)
                if (passive[std::size_t(j)] && z[j] <= 0.0) alpha = std::min(alpha, r.x[j] / (r.x[j] - z[j]));
            r.x += alpha * (z - r.x);
            for (Eigen::Index j = 0; j < n; ++j)
                if (passive[std::size_t(j)] && r.x[j] <= 1e-15) {
                    passive[std::size_t(j)] = false;
                    r.x[j] = 0.0;
                }
        }
        r.x = z;
    }
    r.residual = (A * r.x - b).norm();
    return r;
}

}  // namespace wickspec
