// Uniform tessellation of Omega=[a,b] and the constrained CPA velocity basis.
//
// A velocity field v on Omega is continuous piecewise-affine (CPA) w.r.t. the
// tessellation: v(x) = s_c*x + q_c on cell c. Stacking the per-cell
// coefficients as (s_0, q_0, s_1, q_1, ...) in R^{2N}, continuity at the
// interior knots (and optionally v(a)=v(b)=0) is a linear constraint L*w = 0.
// The basis B spans null(L) with orthonormal columns, so theta in R^d
// parameterizes the admissible fields via w = B*theta.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

namespace ditac {

struct Tessellation {
    double a = 0.0;
    double b = 1.0;
    int n_cells = 1;
    std::vector<double> knots;  // n_cells+1 uniform points, knots[0]=a, knots[n]=b

    double cell_width() const { return (b - a) / n_cells; }
};

inline Tessellation build_tessellation(double a, double b, int n_cells) {
    if (!std::isfinite(a) || !std::isfinite(b))
        throw std::invalid_argument("build_tessellation: non-finite endpoint");
    if (!(a < b))
        throw std::invalid_argument("build_tessellation: requires a < b");
    if (n_cells < 1)
        throw std::invalid_argument("build_tessellation: n_cells must be positive");
    Tessellation t;
    t.a = a;
    t.b = b;
    t.n_cells = n_cells;
    t.knots.resize(n_cells + 1);
    for (int k = 0; k <= n_cells; ++k)
        t.knots[k] = a + k * (b - a) / n_cells;
    t.knots[0] = a;
    t.knots[n_cells] = b;
    return t;
}

// Cells are half-open [k_c, k_{c+1}) except the last, which is closed.
// Points outside [a,b] clamp to the nearest edge cell (its affine piece
// extends beyond Omega for free-boundary bases).
inline int cell_of(const Tessellation& tess, double x) {
    int c = static_cast<int>(std::floor((x - tess.a) / tess.cell_width()));
    if (c < 0) c = 0;
    if (c > tess.n_cells - 1) c = tess.n_cells - 1;
    return c;
}

struct CpaBasis {
    Tessellation tess;
    bool zero_boundary = true;
    int d = 0;          // dim of the velocity space V
    Eigen::MatrixXd B;  // (2*n_cells) x d, orthonormal columns
};

// Null space of L via a full Householder QR of L^T: with L^T = Q R and
// rank(L) = m rows, the last 2N-m columns of Q are an orthonormal basis of
// null(L). Householder QR is deterministic, and we canonicalize each column's
// sign (first entry with |.| > 1e-12 made positive) so checkpoints and test
// fixtures are stable across runs.
inline CpaBasis build_basis(const Tessellation& tess, bool zero_boundary) {
    const int n = tess.n_cells;
    if (zero_boundary && n < 2)
        throw std::invalid_argument("build_basis: zero_boundary needs n_cells >= 2 (d would be 0)");

    const int m = (n - 1) + (zero_boundary ? 2 : 0);
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(m, 2 * n);
    for (int c = 0; c < n - 1; ++c) {
        const double k = tess.knots[c + 1];
        L(c, 2 * c) = k;
        L(c, 2 * c + 1) = 1.0;
        L(c, 2 * (c + 1)) = -k;
        L(c, 2 * (c + 1) + 1) = -1.0;
    }
    if (zero_boundary) {
        L(n - 1, 0) = tess.knots[0];
        L(n - 1, 1) = 1.0;
        L(n, 2 * (n - 1)) = tess.knots[n];
        L(n, 2 * (n - 1) + 1) = 1.0;
    }

    CpaBasis basis;
    basis.tess = tess;
    basis.zero_boundary = zero_boundary;
    basis.d = 2 * n - m;
    if (m == 0) {
        basis.B = Eigen::MatrixXd::Identity(2 * n, 2 * n);
    } else {
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(L.transpose());
        Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(2 * n, 2 * n);
        basis.B = Q.rightCols(2 * n - m);
    }
    for (int j = 0; j < basis.B.cols(); ++j) {
        for (int i = 0; i < basis.B.rows(); ++i) {
            if (std::abs(basis.B(i, j)) > 1e-12) {
                if (basis.B(i, j) < 0) basis.B.col(j) = -basis.B.col(j);
                break;
            }
        }
    }
    return basis;
}

// v^theta(x) = s_c*x + q_c with (s,q) rows of B*theta for the cell holding x.
inline double velocity_at(const CpaBasis& basis, const Eigen::VectorXd& theta, double x) {
    if (theta.size() != basis.d)
        throw std::invalid_argument("velocity_at: theta dimension mismatch");
    const int c = cell_of(basis.tess, x);
    const double s = basis.B.row(2 * c).dot(theta);
    const double q = basis.B.row(2 * c + 1).dot(theta);
    return s * x + q;
}

inline nlohmann::json basis_to_json(const CpaBasis& basis) {
    nlohmann::json j;
    j["a"] = basis.tess.a;
    j["b"] = basis.tess.b;
    j["n_cells"] = basis.tess.n_cells;
    j["zero_boundary"] = basis.zero_boundary;
    std::vector<double> rows;
    rows.reserve(static_cast<std::size_t>(basis.B.size()));
    for (int i = 0; i < basis.B.rows(); ++i)
        for (int jj = 0; jj < basis.B.cols(); ++jj)
            rows.push_back(basis.B(i, jj));
    j["B"] = rows;
    return j;
}

inline CpaBasis basis_from_json(const nlohmann::json& j) {
    CpaBasis basis;
    basis.tess = build_tessellation(j.at("a").get<double>(), j.at("b").get<double>(),
                                    j.at("n_cells").get<int>());
    basis.zero_boundary = j.at("zero_boundary").get<bool>();
    const int n = basis.tess.n_cells;
    basis.d = basis.zero_boundary ? n - 1 : n + 1;
    const auto rows = j.at("B").get<std::vector<double>>();
    if (rows.size() != static_cast<std::size_t>(2 * n) * basis.d)
        throw std::runtime_error("basis_from_json: B size mismatch");
    basis.B.resize(2 * n, basis.d);
    std::size_t k = 0;
    for (int i = 0; i < 2 * n; ++i)
        for (int jj = 0; jj < basis.d; ++jj)
            basis.B(i, jj) = rows[k++];
    return basis;
}

}  // namespace ditac
