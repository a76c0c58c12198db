// The DiTAC trainable-activation family and its quantized LUT fast path.
//
// Variants and their branch structure (T = CPAB transform on Omega=[a,b]):
//   DITAC:     T(x)*Phi(x) on [a,b], x*Phi(x) outside (GELU with a warped x)
//   GE_DITAC:  GELU on x<0, T(x) on [0,b], x beyond b (requires a = 0)
//   L_DITAC:   T(x) on [a,b], LReLU outside
//   INF_DITAC: T(x) on [a,b], tangent-line affine extensions outside:
//              T(a) + T'(a)*(x-a) below, T(b) + T'(b)*(x-b) above (C^1 seam)
// All variants reduce to their base AF at theta = 0.
//
// LUT mode quantizes only the CPAB part: Q(x) rounds to the nearest of the
// n_quant+1 grid points (ties toward +infinity) and x~ = T(Q(x)); the outer
// Phi/LReLU/identity factors use the original x. Backward uses the straight-
// through rule: derivatives tabulated at the grid points are broadcast to the
// batch elements that quantize onto them, which is exact on the grid itself.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "ditac/cpab.hpp"
#include "ditac/tessellation.hpp"

namespace ditac {

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double norm_pdf(double x) {
    static const double inv_sqrt_2pi = 0.3989422804014326779;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

// exact GELU via the error function (not the tanh approximation)
inline double gelu(double x) { return x * norm_cdf(x); }

inline double gelu_grad(double x) { return norm_cdf(x) + x * norm_pdf(x); }

enum class Variant { DITAC, GE_DITAC, L_DITAC, INF_DITAC };

inline const char* variant_name(Variant v) {
    switch (v) {
        case Variant::DITAC: return "ditac";
        case Variant::GE_DITAC: return "ge_ditac";
        case Variant::L_DITAC: return "l_ditac";
        case Variant::INF_DITAC: return "inf_ditac";
    }
    return "?";
}

struct ActivationConfig {
    Variant variant = Variant::DITAC;
    CpaBasis basis;
    CpabParams theta;        // length basis.d, the trainable parameters
    int n_quant = 0;         // LUT resolution; 0 = exact mode
    double leaky_slope = 0.01;
};

inline void validate_config(const ActivationConfig& cfg) {
    if (cfg.theta.size() != cfg.basis.d)
        throw std::invalid_argument("activation config: theta dimension mismatch");
    const double a = cfg.basis.tess.a;
    if (cfg.variant == Variant::GE_DITAC && a != 0.0)
        throw std::invalid_argument("ge_ditac requires Omega = [0, b]");
    if (cfg.variant != Variant::INF_DITAC && !cfg.basis.zero_boundary)
        throw std::invalid_argument(
            "only inf_ditac supports free-boundary bases (other variants need fixed endpoints)");
    if (cfg.variant == Variant::L_DITAC && a < 0.0)
        std::cerr << "warning: l_ditac with a < 0 is discontinuous at x = a "
                     "(LReLU(a) != a); proceeding as configured\n";
}

inline ActivationConfig make_activation_config(Variant variant, CpaBasis basis, int n_quant = 0,
                                               double leaky_slope = 0.01) {
    ActivationConfig cfg;
    cfg.variant = variant;
    cfg.basis = std::move(basis);
    cfg.theta = Eigen::VectorXd::Zero(cfg.basis.d);
    cfg.n_quant = n_quant;
    cfg.leaky_slope = leaky_slope;
    validate_config(cfg);
    return cfg;
}

inline double activate_exact(const ActivationConfig& cfg, double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("activate_exact: non-finite input");
    const double a = cfg.basis.tess.a;
    const double b = cfg.basis.tess.b;
    switch (cfg.variant) {
        case Variant::DITAC:
            if (x >= a && x <= b) return transform(cfg.basis, cfg.theta, x).y * norm_cdf(x);
            return gelu(x);
        case Variant::GE_DITAC:
            if (x < 0.0) return gelu(x);
            if (x <= b) return transform(cfg.basis, cfg.theta, x).y;
            return x;
        case Variant::L_DITAC:
            if (x >= a && x <= b) return transform(cfg.basis, cfg.theta, x).y;
            return x > 0.0 ? x : cfg.leaky_slope * x;
        case Variant::INF_DITAC: {
            if (x < a)
                return transform(cfg.basis, cfg.theta, a).y +
                       transform_grad_x(cfg.basis, cfg.theta, a) * (x - a);
            if (x > b)
                return transform(cfg.basis, cfg.theta, b).y +
                       transform_grad_x(cfg.basis, cfg.theta, b) * (x - b);
            return transform(cfg.basis, cfg.theta, x).y;
        }
    }
    throw std::logic_error("unreachable");
}

struct ActGrad {
    double dx = 0.0;
    Eigen::VectorXd dtheta;
};

inline ActGrad activate_grad(const ActivationConfig& cfg, double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("activate_grad: non-finite input");
    const double a = cfg.basis.tess.a;
    const double b = cfg.basis.tess.b;
    ActGrad g;
    g.dtheta = Eigen::VectorXd::Zero(cfg.basis.d);
    const bool inside = (x >= a && x <= b);
    switch (cfg.variant) {
        case Variant::DITAC:
            if (inside) {
                const Eigen::VectorXd w = cfg.basis.B * cfg.theta;
                Eigen::VectorXd wbuf = Eigen::VectorXd::Zero(2 * cfg.basis.tess.n_cells);
                const FlowEval fe = transform_with_grad(cfg.basis, w, x, wbuf.data());
                g.dx = fe.dx * norm_cdf(x) + fe.y * norm_pdf(x);
                g.dtheta = norm_cdf(x) * (cfg.basis.B.transpose() * wbuf);
            } else {
                g.dx = gelu_grad(x);
            }
            return g;
        case Variant::GE_DITAC:
            if (x < 0.0) {
                g.dx = gelu_grad(x);
            } else if (x <= b) {
                const Eigen::VectorXd w = cfg.basis.B * cfg.theta;
                Eigen::VectorXd wbuf = Eigen::VectorXd::Zero(2 * cfg.basis.tess.n_cells);
                const FlowEval fe = transform_with_grad(cfg.basis, w, x, wbuf.data());
                g.dx = fe.dx;
                g.dtheta = cfg.basis.B.transpose() * wbuf;
            } else {
                g.dx = 1.0;
            }
            return g;
        case Variant::L_DITAC:
            if (inside) {
                const Eigen::VectorXd w = cfg.basis.B * cfg.theta;
                Eigen::VectorXd wbuf = Eigen::VectorXd::Zero(2 * cfg.basis.tess.n_cells);
                const FlowEval fe = transform_with_grad(cfg.basis, w, x, wbuf.data());
                g.dx = fe.dx;
                g.dtheta = cfg.basis.B.transpose() * wbuf;
            } else {
                g.dx = x > 0.0 ? 1.0 : cfg.leaky_slope;
            }
            return g;
        case Variant::INF_DITAC: {
            if (inside) {
                const Eigen::VectorXd w = cfg.basis.B * cfg.theta;
                Eigen::VectorXd wbuf = Eigen::VectorXd::Zero(2 * cfg.basis.tess.n_cells);
                const FlowEval fe = transform_with_grad(cfg.basis, w, x, wbuf.data());
                g.dx = fe.dx;
                g.dtheta = cfg.basis.B.transpose() * wbuf;
                return g;
            }
            const double edge = x < a ? a : b;
            g.dx = transform_grad_x(cfg.basis, cfg.theta, edge);
            g.dtheta = transform_grad_theta(cfg.basis, cfg.theta, edge) +
                       (x - edge) * transform_grad_x_theta(cfg.basis, cfg.theta, edge);
            return g;
        }
    }
    throw std::logic_error("unreachable");
}

// ---------------------------------------------------------------- LUT / STE

struct LookupTable {
    double a = 0.0, b = 1.0;
    int n_quant = 0;
    Eigen::VectorXd q;       // n_quant+1 grid points a + k*delta
    Eigen::VectorXd t_vals;  // T^theta(q_k)
    Eigen::VectorXd dx;      // dT/dx at q_k
    Eigen::MatrixXd dtheta;  // (n_quant+1) x d; empty once frozen
    // inf-DiTAC tangent extensions: grad_theta of T'(a) and T'(b)
    Eigen::VectorXd dslope_a, dslope_b;
    std::uint64_t theta_version = 0;
    bool frozen = false;

    double delta() const { return (b - a) / n_quant; }
};

// nearest grid index, ties toward +infinity, clamped to [0, n_quant]
inline int quantize_index(const LookupTable& lut, double x) {
    int k = static_cast<int>(std::floor((x - lut.a) / lut.delta() + 0.5));
    if (k < 0) k = 0;
    if (k > lut.n_quant) k = lut.n_quant;
    return k;
}

inline LookupTable build_lut(const ActivationConfig& cfg, std::uint64_t theta_version = 0) {
    if (cfg.n_quant < 2) throw std::invalid_argument("build_lut: n_quant must be >= 2");
    validate_config(cfg);
    LookupTable lut;
    lut.a = cfg.basis.tess.a;
    lut.b = cfg.basis.tess.b;
    lut.n_quant = cfg.n_quant;
    lut.theta_version = theta_version;
    const int n = cfg.n_quant;
    lut.q.resize(n + 1);
    lut.t_vals.resize(n + 1);
    lut.dx.resize(n + 1);
    lut.dtheta.resize(n + 1, cfg.basis.d);
    const Eigen::VectorXd w = cfg.basis.B * cfg.theta;
    Eigen::VectorXd wbuf(2 * cfg.basis.tess.n_cells);
    for (int k = 0; k <= n; ++k) {
        const double qk = lut.a + k * (lut.b - lut.a) / n;
        wbuf.setZero();
        const FlowEval fe = transform_with_grad(cfg.basis, w, qk, wbuf.data());
        lut.q[k] = qk;
        lut.t_vals[k] = fe.y;
        lut.dx[k] = fe.dx;
        lut.dtheta.row(k) = (cfg.basis.B.transpose() * wbuf).transpose();
    }
    if (cfg.variant == Variant::INF_DITAC) {
        lut.dslope_a = transform_grad_x_theta(cfg.basis, cfg.theta, lut.a);
        lut.dslope_b = transform_grad_x_theta(cfg.basis, cfg.theta, lut.b);
    }
    return lut;
}

namespace detail {

inline void check_fresh(const LookupTable& lut, std::uint64_t current_version) {
    if (!lut.frozen && lut.theta_version != current_version)
        throw std::runtime_error("lookup table is stale: rebuild after theta changed");
}

}  // namespace detail

// forward through the quantized table; out-of-Omega inputs take the variant's
// outside branch (for inf-DiTAC the tangent data comes from the table rows at
// the endpoints, which equal the exact values)
inline Eigen::VectorXd lut_forward(const LookupTable& lut, const ActivationConfig& cfg,
                                   const Eigen::VectorXd& xs, std::uint64_t current_version) {
    detail::check_fresh(lut, current_version);
    Eigen::VectorXd out(xs.size());
    const int n = lut.n_quant;
    for (Eigen::Index i = 0; i < xs.size(); ++i) {
        const double x = xs[i];
        const bool inside = (x >= lut.a && x <= lut.b);
        double y;
        switch (cfg.variant) {
            case Variant::DITAC:
                y = inside ? lut.t_vals[quantize_index(lut, x)] * norm_cdf(x) : gelu(x);
                break;
            case Variant::GE_DITAC:
                y = x < 0.0 ? gelu(x)
                            : (x <= lut.b ? lut.t_vals[quantize_index(lut, x)] : x);
                break;
            case Variant::L_DITAC:
                y = inside ? lut.t_vals[quantize_index(lut, x)]
                           : (x > 0.0 ? x : cfg.leaky_slope * x);
                break;
            case Variant::INF_DITAC:
                if (x < lut.a)
                    y = lut.t_vals[0] + lut.dx[0] * (x - lut.a);
                else if (x > lut.b)
                    y = lut.t_vals[n] + lut.dx[n] * (x - lut.b);
                else
                    y = lut.t_vals[quantize_index(lut, x)];
                break;
            default:
                throw std::logic_error("unreachable");
        }
        out[i] = y;
    }
    return out;
}

// straight-through backward: per-element grad_x plus the accumulated
// grad_theta sum_i upstream_i * (outer factor) * dtheta[Q(x_i)]
inline void lut_backward(const LookupTable& lut, const ActivationConfig& cfg,
                         const Eigen::VectorXd& xs, const Eigen::VectorXd& upstream,
                         std::uint64_t current_version, Eigen::VectorXd& grad_x,
                         Eigen::VectorXd& grad_theta) {
    if (lut.frozen)
        throw std::runtime_error("frozen inference table rejects backward calls");
    detail::check_fresh(lut, current_version);
    if (xs.size() != upstream.size())
        throw std::invalid_argument("lut_backward: batch size mismatch");
    grad_x.resize(xs.size());
    grad_theta = Eigen::VectorXd::Zero(cfg.basis.d);
    const int n = lut.n_quant;
    for (Eigen::Index i = 0; i < xs.size(); ++i) {
        const double x = xs[i];
        const double up = upstream[i];
        const bool inside = (x >= lut.a && x <= lut.b);
        switch (cfg.variant) {
            case Variant::DITAC:
                if (inside) {
                    const int k = quantize_index(lut, x);
                    grad_x[i] = up * (lut.dx[k] * norm_cdf(x) + lut.t_vals[k] * norm_pdf(x));
                    grad_theta += (up * norm_cdf(x)) * lut.dtheta.row(k).transpose();
                } else {
                    grad_x[i] = up * gelu_grad(x);
                }
                break;
            case Variant::GE_DITAC:
                if (x < 0.0) {
                    grad_x[i] = up * gelu_grad(x);
                } else if (x <= lut.b) {
                    const int k = quantize_index(lut, x);
                    grad_x[i] = up * lut.dx[k];
                    grad_theta += up * lut.dtheta.row(k).transpose();
                } else {
                    grad_x[i] = up;
                }
                break;
            case Variant::L_DITAC:
                if (inside) {
                    const int k = quantize_index(lut, x);
                    grad_x[i] = up * lut.dx[k];
                    grad_theta += up * lut.dtheta.row(k).transpose();
                } else {
                    grad_x[i] = up * (x > 0.0 ? 1.0 : cfg.leaky_slope);
                }
                break;
            case Variant::INF_DITAC:
                if (inside) {
                    const int k = quantize_index(lut, x);
                    grad_x[i] = up * lut.dx[k];
                    grad_theta += up * lut.dtheta.row(k).transpose();
                } else if (x < lut.a) {
                    grad_x[i] = up * lut.dx[0];
                    grad_theta +=
                        up * (lut.dtheta.row(0).transpose() + (x - lut.a) * lut.dslope_a);
                } else {
                    grad_x[i] = up * lut.dx[n];
                    grad_theta +=
                        up * (lut.dtheta.row(n).transpose() + (x - lut.b) * lut.dslope_b);
                }
                break;
            default:
                throw std::logic_error("unreachable");
        }
    }
}

// single per-instance table reused at inference; gradient columns dropped
inline LookupTable freeze_for_inference(const ActivationConfig& cfg) {
    ActivationConfig c = cfg;
    if (c.n_quant < 2) c.n_quant = 256;
    LookupTable lut = build_lut(c, 0);
    lut.dtheta.resize(0, 0);
    lut.dslope_a.resize(0);
    lut.dslope_b.resize(0);
    lut.frozen = true;
    return lut;
}

inline nlohmann::json lut_to_json(const LookupTable& lut) {
    nlohmann::json j;
    j["a"] = lut.a;
    j["b"] = lut.b;
    j["n_quant"] = lut.n_quant;
    j["theta_version"] = lut.theta_version;
    j["frozen"] = lut.frozen;
    j["t_vals"] = std::vector<double>(lut.t_vals.data(), lut.t_vals.data() + lut.t_vals.size());
    j["dx"] = std::vector<double>(lut.dx.data(), lut.dx.data() + lut.dx.size());
    return j;
}

inline LookupTable lut_from_json(const nlohmann::json& j) {
    LookupTable lut;
    lut.a = j.at("a").get<double>();
    lut.b = j.at("b").get<double>();
    lut.n_quant = j.at("n_quant").get<int>();
    lut.theta_version = j.at("theta_version").get<std::uint64_t>();
    lut.frozen = j.at("frozen").get<bool>();
    const auto tv = j.at("t_vals").get<std::vector<double>>();
    const auto dxv = j.at("dx").get<std::vector<double>>();
    if (tv.size() != static_cast<std::size_t>(lut.n_quant) + 1 || dxv.size() != tv.size())
        throw std::runtime_error("lut_from_json: table size mismatch");
    lut.q.resize(lut.n_quant + 1);
    lut.t_vals.resize(lut.n_quant + 1);
    lut.dx.resize(lut.n_quant + 1);
    for (int k = 0; k <= lut.n_quant; ++k) {
        lut.q[k] = lut.a + k * (lut.b - lut.a) / lut.n_quant;
        lut.t_vals[k] = tv[k];
        lut.dx[k] = dxv[k];
    }
    return lut;
}

}  // namespace ditac
