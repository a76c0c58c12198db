// Gaussian smoothness prior over CPA velocity fields, pulled back to theta.
//
// Each basis field is evaluated at the cell centers m_c, giving the linear
// map C with v_centers = C*theta. A squared-exponential kernel
//   K_ij = lambda_var * exp(-(m_i - m_j)^2 / (2*lambda_smooth^2))
// acts as the prior covariance of v_centers, and the theta-space precision is
// Sigma_CPA^{-1} = C^T K^{-1} C. The regularizer is the quadratic form
// L_reg = sum_l theta_l^T Sigma_CPA^{-1} theta_l.
//
// Free-boundary bases contain a sawtooth field that vanishes at every cell
// center, which would make C rank-deficient and the precision singular; the
// endpoint knots a and b are appended to the evaluation points in that case
// so the precision stays positive definite.
#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <stdexcept>
#include <vector>

#include "ditac/tessellation.hpp"

namespace ditac {

struct SmoothnessPrior {
    double lambda_var = 1.0;
    double lambda_smooth = 1.0;
    Eigen::MatrixXd precision;  // d x d, symmetric positive definite
};

inline SmoothnessPrior build_prior(const CpaBasis& basis, double lambda_var,
                                   double lambda_smooth) {
    if (!(lambda_var > 0.0) || !(lambda_smooth > 0.0))
        throw std::invalid_argument("build_prior: hyperparameters must be positive");
    const Tessellation& tess = basis.tess;
    const int n = tess.n_cells;

    std::vector<double> pts;
    std::vector<int> cells;
    pts.reserve(n + 2);
    for (int c = 0; c < n; ++c) {
        pts.push_back(0.5 * (tess.knots[c] + tess.knots[c + 1]));
        cells.push_back(c);
    }
    if (!basis.zero_boundary) {
        pts.push_back(tess.a);
        cells.push_back(0);
        pts.push_back(tess.b);
        cells.push_back(n - 1);
    }
    const int m = static_cast<int>(pts.size());

    Eigen::MatrixXd C(m, basis.d);
    for (int i = 0; i < m; ++i)
        C.row(i) =
            pts[i] * basis.B.row(2 * cells[i]) + basis.B.row(2 * cells[i] + 1);

    Eigen::MatrixXd K(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const double dm = pts[i] - pts[j];
            K(i, j) = lambda_var * std::exp(-dm * dm / (2.0 * lambda_smooth * lambda_smooth));
        }
    K.diagonal().array() += 1e-8 * lambda_var;

    Eigen::LLT<Eigen::MatrixXd> llt(K);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("build_prior: kernel matrix not positive definite");

    SmoothnessPrior prior;
    prior.lambda_var = lambda_var;
    prior.lambda_smooth = lambda_smooth;
    Eigen::MatrixXd P = C.transpose() * llt.solve(C);
    prior.precision = 0.5 * (P + P.transpose());
    return prior;
}

inline double reg_loss(const SmoothnessPrior& prior, const std::vector<Eigen::VectorXd>& thetas) {
    double total = 0.0;
    for (const auto& th : thetas) {
        if (th.size() != prior.precision.rows())
            throw std::invalid_argument("reg_loss: theta dimension mismatch");
        total += th.dot(prior.precision * th);
    }
    return total;
}

inline Eigen::VectorXd reg_grad(const SmoothnessPrior& prior, const Eigen::VectorXd& theta) {
    if (theta.size() != prior.precision.rows())
        throw std::invalid_argument("reg_grad: theta dimension mismatch");
    return 2.0 * (prior.precision * theta);
}

}  // namespace ditac
