// Minimal dense-network training stack: MLP forward/backward, Adam, losses,
// metrics, and the baseline activation zoo used for comparisons.
//
// Conventions deliberately kept small and explicit:
//   * batches are row-major logically (sample index = row): X is batch x in,
//     DenseLayer computes Z = X*W^T + 1*b^T with W out x in;
//   * reverse mode runs layer by layer; elementwise activation gradients are
//     accumulated column-by-column (Eigen storage order), giving one fixed
//     reduction order so training is bitwise deterministic on one platform;
//   * trainable activation scalars (theta, alpha, beta) are registered as
//     no-weight-decay parameters; weight decay, when configured, touches only
//     dense W and b.
#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "ditac/activation.hpp"
#include "ditac/rng.hpp"

namespace ditac {

// ---------------------------------------------------------------------------
// activation kinds

enum class ActKind {
    DITAC,  // DiTAC family; ActivationConfig.variant selects the member
    RELU,
    LRELU,
    PRELU,  // channel-shared trainable alpha
    GELU,
    ELU,
    SOFTPLUS,
    MISH,
    SWISH,  // channel-shared trainable beta
};

inline bool is_ditac(ActKind k) { return k == ActKind::DITAC; }

inline const char* act_kind_name(ActKind k) {
    switch (k) {
        case ActKind::DITAC: return "ditac";
        case ActKind::RELU: return "relu";
        case ActKind::LRELU: return "lrelu";
        case ActKind::PRELU: return "prelu";
        case ActKind::GELU: return "gelu";
        case ActKind::ELU: return "elu";
        case ActKind::SOFTPLUS: return "softplus";
        case ActKind::MISH: return "mish";
        case ActKind::SWISH: return "swish";
    }
    throw std::logic_error("unreachable");
}

// Accepts the family members by variant name so configs can say
// activation=ge_ditac directly; *variant_out is written only for those.
inline ActKind act_kind_from_string(const std::string& s, Variant* variant_out = nullptr) {
    if (s == "ditac" || s == "ge_ditac" || s == "l_ditac" || s == "inf_ditac") {
        if (variant_out) {
            if (s == "ditac") *variant_out = Variant::DITAC;
            if (s == "ge_ditac") *variant_out = Variant::GE_DITAC;
            if (s == "l_ditac") *variant_out = Variant::L_DITAC;
            if (s == "inf_ditac") *variant_out = Variant::INF_DITAC;
        }
        return ActKind::DITAC;
    }
    if (s == "relu") return ActKind::RELU;
    if (s == "lrelu") return ActKind::LRELU;
    if (s == "prelu") return ActKind::PRELU;
    if (s == "gelu") return ActKind::GELU;
    if (s == "elu") return ActKind::ELU;
    if (s == "softplus") return ActKind::SOFTPLUS;
    if (s == "mish") return ActKind::MISH;
    if (s == "swish") return ActKind::SWISH;
    throw std::invalid_argument("unknown activation kind: " + s);
}

// ---------------------------------------------------------------------------
// scalar baselines

inline double sigmoid(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

inline double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// ---------------------------------------------------------------------------
// layers

struct DenseLayer {
    Eigen::MatrixXd W;  // out x in
    Eigen::VectorXd b;  // out
};

struct ActivationLayer {
    ActKind kind = ActKind::GELU;
    ActivationConfig cfg;    // DiTAC family only
    bool train_theta = true; // false = theta-frozen control (gradients zeroed)
    double alpha = 0.25;     // PRELU
    double beta = 1.0;       // SWISH
    double lrelu_slope = 0.01;

    // LUT training state (cfg.n_quant > 0). Callers that mutate theta must
    // bump theta_version; forward rebuilds a stale table, the version check
    // inside lut_backward catches unsynchronized mutation.
    std::uint64_t theta_version = 0;
    LookupTable lut;
    bool lut_built = false;
};

struct MlpModel {
    std::vector<DenseLayer> dense;      // size L
    std::vector<ActivationLayer> acts;  // size L-1, acts[i] follows dense[i]
};

inline MlpModel make_mlp(const std::vector<int>& widths, const ActivationLayer& act_proto) {
    if (widths.size() < 2) throw std::invalid_argument("make_mlp: need at least in/out widths");
    MlpModel m;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        DenseLayer d;
        d.W = Eigen::MatrixXd::Zero(widths[i + 1], widths[i]);
        d.b = Eigen::VectorXd::Zero(widths[i + 1]);
        m.dense.push_back(std::move(d));
        if (i + 2 < widths.size()) m.acts.push_back(act_proto);
    }
    return m;
}

// Dense weights ~ uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)) drawn in Eigen
// storage (column-major) order, biases zero, theta zero, alpha/beta at their
// defaults. Stream consumption is part of the determinism contract.
inline void init_params(MlpModel& m, std::uint64_t seed) {
    Rng rng(seed);
    for (auto& d : m.dense) {
        const double s = std::sqrt(1.0 / static_cast<double>(d.W.cols()));
        for (Eigen::Index i = 0; i < d.W.size(); ++i) d.W.data()[i] = rng.uniform(-s, s);
        d.b.setZero();
    }
    for (auto& a : m.acts) {
        if (is_ditac(a.kind)) {
            a.cfg.theta = Eigen::VectorXd::Zero(a.cfg.basis.d);
            a.theta_version = 0;
            a.lut_built = false;
        }
    }
}

// total plus a per-activation breakdown; dense params count W and b
inline long count_parameters(const MlpModel& m, long* activation_params = nullptr) {
    long dense = 0, act = 0;
    for (const auto& d : m.dense) dense += d.W.size() + d.b.size();
    for (const auto& a : m.acts) {
        if (is_ditac(a.kind)) act += a.cfg.basis.d;
        else if (a.kind == ActKind::PRELU || a.kind == ActKind::SWISH) act += 1;
    }
    if (activation_params) *activation_params = act;
    return dense + act;
}

// ---------------------------------------------------------------------------
// forward

struct ForwardCache {
    std::vector<Eigen::MatrixXd> X;  // input to dense[i]; X[0] is the batch
    std::vector<Eigen::MatrixXd> Z;  // pre-activation output of dense[i], i < acts
    Eigen::MatrixXd out;
};

namespace detail {

inline void act_forward(ActivationLayer& L, const Eigen::MatrixXd& Z, Eigen::MatrixXd& A) {
    A.resizeLike(Z);
    switch (L.kind) {
        case ActKind::DITAC: {
            if (L.cfg.n_quant > 0) {
                if (!L.lut_built || L.lut.theta_version != L.theta_version) {
                    L.lut = build_lut(L.cfg, L.theta_version);
                    L.lut_built = true;
                }
                Eigen::Map<const Eigen::VectorXd> zs(Z.data(), Z.size());
                Eigen::VectorXd ys = lut_forward(L.lut, L.cfg, zs, L.theta_version);
                std::memcpy(A.data(), ys.data(), sizeof(double) * ys.size());
                return;
            }
            // exact mode: hoist w = B*theta once per batch
            const Eigen::VectorXd w = L.cfg.basis.B * L.cfg.theta;
            const double a = L.cfg.basis.tess.a, b = L.cfg.basis.tess.b;
            const Variant var = L.cfg.variant;
            // inf-DiTAC tangent data, computed lazily on first outside hit
            bool edges_ready = false;
            double Ta = 0, Tb = 0, dxa = 1, dxb = 1;
            for (Eigen::Index i = 0; i < Z.size(); ++i) {
                const double x = Z.data()[i];
                double y;
                switch (var) {
                    case Variant::DITAC:
                        y = (x >= a && x <= b)
                                ? transform_with_grad(L.cfg.basis, w, x, nullptr).y * norm_cdf(x)
                                : gelu(x);
                        break;
                    case Variant::GE_DITAC:
                        y = x < 0.0 ? gelu(x)
                            : x <= b ? transform_with_grad(L.cfg.basis, w, x, nullptr).y
                                     : x;
                        break;
                    case Variant::L_DITAC:
                        y = (x >= a && x <= b)
                                ? transform_with_grad(L.cfg.basis, w, x, nullptr).y
                                : (x > 0.0 ? x : L.cfg.leaky_slope * x);
                        break;
                    case Variant::INF_DITAC:
                        if (x >= a && x <= b) {
                            y = transform_with_grad(L.cfg.basis, w, x, nullptr).y;
                        } else {
                            if (!edges_ready) {
                                FlowEval fa = transform_with_grad(L.cfg.basis, w, a, nullptr);
                                FlowEval fb = transform_with_grad(L.cfg.basis, w, b, nullptr);
                                Ta = fa.y; dxa = fa.dx; Tb = fb.y; dxb = fb.dx;
                                edges_ready = true;
                            }
                            y = x < a ? Ta + dxa * (x - a) : Tb + dxb * (x - b);
                        }
                        break;
                    default: throw std::logic_error("unreachable");
                }
                A.data()[i] = y;
            }
            return;
        }
        case ActKind::RELU:
            A = Z.cwiseMax(0.0);
            return;
        case ActKind::LRELU:
            A = Z.unaryExpr([&](double x) { return x > 0.0 ? x : L.lrelu_slope * x; });
            return;
        case ActKind::PRELU:
            A = Z.unaryExpr([&](double x) { return x > 0.0 ? x : L.alpha * x; });
            return;
        case ActKind::GELU:
            A = Z.unaryExpr([](double x) { return gelu(x); });
            return;
        case ActKind::ELU:
            A = Z.unaryExpr([](double x) { return x > 0.0 ? x : std::expm1(x); });
            return;
        case ActKind::SOFTPLUS:
            A = Z.unaryExpr([](double x) { return softplus(x); });
            return;
        case ActKind::MISH:
            A = Z.unaryExpr([](double x) { return x * std::tanh(softplus(x)); });
            return;
        case ActKind::SWISH:
            A = Z.unaryExpr([&](double x) { return x * sigmoid(L.beta * x); });
            return;
    }
    throw std::logic_error("unreachable");
}

}  // namespace detail

inline Eigen::MatrixXd forward(MlpModel& m, const Eigen::MatrixXd& X,
                               ForwardCache* cache = nullptr) {
    if (m.dense.empty()) throw std::invalid_argument("forward: empty model");
    if (X.cols() != m.dense[0].W.cols())
        throw std::invalid_argument("forward: input dim " + std::to_string(X.cols()) +
                                    " != layer 0 fan-in " + std::to_string(m.dense[0].W.cols()));
    if (cache) {
        cache->X.clear();
        cache->Z.clear();
    }
    Eigen::MatrixXd H = X;
    for (std::size_t i = 0; i < m.dense.size(); ++i) {
        if (H.cols() != m.dense[i].W.cols())
            throw std::invalid_argument("forward: dim mismatch at dense layer " +
                                        std::to_string(i));
        if (cache) cache->X.push_back(H);
        Eigen::MatrixXd Znew = (H * m.dense[i].W.transpose()).rowwise() + m.dense[i].b.transpose();
        if (i < m.acts.size()) {
            if (cache) cache->Z.push_back(Znew);
            Eigen::MatrixXd A;
            detail::act_forward(m.acts[i], Znew, A);
            if (!A.allFinite())
                throw std::runtime_error("forward: non-finite activation output at layer " +
                                         std::to_string(i));
            H = std::move(A);
        } else {
            H = std::move(Znew);
        }
    }
    if (cache) cache->out = H;
    return H;
}

// ---------------------------------------------------------------------------
// backward

struct MlpGrads {
    std::vector<Eigen::MatrixXd> dW;
    std::vector<Eigen::VectorXd> db;
    std::vector<Eigen::VectorXd> dtheta;  // per activation layer (empty if not DiTAC)
    std::vector<double> dalpha;           // per activation layer (0 if unused)
    std::vector<double> dbeta;
};

namespace detail {

// dA arrives as the upstream gradient and leaves as dL/dZ; theta/alpha/beta
// gradients accumulate into g. Elements are visited in Eigen storage
// (column-major) order; that fixed order is the documented reduction order.
inline void act_backward(ActivationLayer& L, const Eigen::MatrixXd& Z, Eigen::MatrixXd& dA,
                         Eigen::VectorXd& dtheta, double& dalpha, double& dbeta) {
    switch (L.kind) {
        case ActKind::DITAC: {
            dtheta = Eigen::VectorXd::Zero(L.cfg.basis.d);
            if (L.cfg.n_quant > 0) {
                Eigen::Map<const Eigen::VectorXd> zs(Z.data(), Z.size());
                Eigen::Map<const Eigen::VectorXd> ups(dA.data(), dA.size());
                Eigen::VectorXd gx, gt;
                lut_backward(L.lut, L.cfg, zs, ups, L.theta_version, gx, gt);
                std::memcpy(dA.data(), gx.data(), sizeof(double) * gx.size());
                dtheta = gt;
                return;
            }
            const Eigen::VectorXd w = L.cfg.basis.B * L.cfg.theta;
            const auto& basis = L.cfg.basis;
            const double a = basis.tess.a, b = basis.tess.b;
            const Variant var = L.cfg.variant;
            const int twoN = 2 * basis.tess.n_cells;
            Eigen::VectorXd acc = Eigen::VectorXd::Zero(twoN);
            Eigen::VectorXd wbuf(twoN);
            // inf-DiTAC outside terms factor as sum(up)*g_theta(edge) +
            // sum(up*(x-edge))*g_xtheta(edge); collect the scalars, hoist the
            // edge vectors after the loop
            double sa = 0, sxa = 0, sb = 0, sxb = 0;
            bool edges_ready = false;
            double dxa = 1, dxb = 1;
            for (Eigen::Index i = 0; i < Z.size(); ++i) {
                const double x = Z.data()[i];
                const double up = dA.data()[i];
                double dz;
                switch (var) {
                    case Variant::DITAC:
                        if (x >= a && x <= b) {
                            wbuf.setZero();
                            const FlowEval fe = transform_with_grad(basis, w, x, wbuf.data());
                            const double cdf = norm_cdf(x);
                            dz = up * (fe.dx * cdf + fe.y * norm_pdf(x));
                            acc += (up * cdf) * wbuf;
                        } else {
                            dz = up * gelu_grad(x);
                        }
                        break;
                    case Variant::GE_DITAC:
                        if (x < 0.0) {
                            dz = up * gelu_grad(x);
                        } else if (x <= b) {
                            wbuf.setZero();
                            const FlowEval fe = transform_with_grad(basis, w, x, wbuf.data());
                            dz = up * fe.dx;
                            acc += up * wbuf;
                        } else {
                            dz = up;
                        }
                        break;
                    case Variant::L_DITAC:
                        if (x >= a && x <= b) {
                            wbuf.setZero();
                            const FlowEval fe = transform_with_grad(basis, w, x, wbuf.data());
                            dz = up * fe.dx;
                            acc += up * wbuf;
                        } else {
                            dz = up * (x > 0.0 ? 1.0 : L.cfg.leaky_slope);
                        }
                        break;
                    case Variant::INF_DITAC:
                        if (x >= a && x <= b) {
                            wbuf.setZero();
                            const FlowEval fe = transform_with_grad(basis, w, x, wbuf.data());
                            dz = up * fe.dx;
                            acc += up * wbuf;
                        } else {
                            if (!edges_ready) {
                                dxa = transform_with_grad(basis, w, a, nullptr).dx;
                                dxb = transform_with_grad(basis, w, b, nullptr).dx;
                                edges_ready = true;
                            }
                            if (x < a) {
                                dz = up * dxa;
                                sa += up;
                                sxa += up * (x - a);
                            } else {
                                dz = up * dxb;
                                sb += up;
                                sxb += up * (x - b);
                            }
                        }
                        break;
                    default: throw std::logic_error("unreachable");
                }
                dA.data()[i] = dz;
            }
            dtheta = basis.B.transpose() * acc;
            if (edges_ready) {
                if (sa != 0.0 || sxa != 0.0)
                    dtheta += sa * transform_grad_theta(basis, L.cfg.theta, a) +
                              sxa * transform_grad_x_theta(basis, L.cfg.theta, a);
                if (sb != 0.0 || sxb != 0.0)
                    dtheta += sb * transform_grad_theta(basis, L.cfg.theta, b) +
                              sxb * transform_grad_x_theta(basis, L.cfg.theta, b);
            }
            return;
        }
        case ActKind::RELU:
            dA.array() *= (Z.array() > 0.0).cast<double>();
            return;
        case ActKind::LRELU:
            dA.array() *=
                Z.unaryExpr([&](double x) { return x > 0.0 ? 1.0 : L.lrelu_slope; }).array();
            return;
        case ActKind::PRELU: {
            for (Eigen::Index i = 0; i < Z.size(); ++i) {
                const double x = Z.data()[i];
                if (x > 0.0) continue;
                dalpha += dA.data()[i] * x;
            }
            dA.array() *= Z.unaryExpr([&](double x) { return x > 0.0 ? 1.0 : L.alpha; }).array();
            return;
        }
        case ActKind::GELU:
            dA.array() *= Z.unaryExpr([](double x) { return gelu_grad(x); }).array();
            return;
        case ActKind::ELU:
            dA.array() *=
                Z.unaryExpr([](double x) { return x > 0.0 ? 1.0 : std::exp(x); }).array();
            return;
        case ActKind::SOFTPLUS:
            dA.array() *= Z.unaryExpr([](double x) { return sigmoid(x); }).array();
            return;
        case ActKind::MISH:
            dA.array() *= Z.unaryExpr([](double x) {
                              const double sp = softplus(x);
                              const double th = std::tanh(sp);
                              return th + x * (1.0 - th * th) * sigmoid(x);
                          }).array();
            return;
        case ActKind::SWISH: {
            for (Eigen::Index i = 0; i < Z.size(); ++i) {
                const double x = Z.data()[i];
                const double s = sigmoid(L.beta * x);
                dbeta += dA.data()[i] * x * x * s * (1.0 - s);
                dA.data()[i] *= s + L.beta * x * s * (1.0 - s);
            }
            return;
        }
    }
    throw std::logic_error("unreachable");
}

}  // namespace detail

inline MlpGrads backward(MlpModel& m, const ForwardCache& cache, const Eigen::MatrixXd& dOut) {
    if (cache.X.size() != m.dense.size())
        throw std::invalid_argument("backward: forward cache missing or stale");
    MlpGrads g;
    g.dW.resize(m.dense.size());
    g.db.resize(m.dense.size());
    g.dtheta.resize(m.acts.size());
    g.dalpha.assign(m.acts.size(), 0.0);
    g.dbeta.assign(m.acts.size(), 0.0);
    Eigen::MatrixXd dH = dOut;
    for (int i = static_cast<int>(m.dense.size()) - 1; i >= 0; --i) {
        if (static_cast<std::size_t>(i) < m.acts.size())
            detail::act_backward(m.acts[i], cache.Z[i], dH, g.dtheta[i], g.dalpha[i],
                                 g.dbeta[i]);
        g.dW[i] = dH.transpose() * cache.X[i];
        g.db[i] = dH.colwise().sum().transpose();
        if (i > 0) dH = (dH * m.dense[i].W).eval();
    }
    return g;
}

// ---------------------------------------------------------------------------
// parameter flattening (canonical order: per dense layer W then b, then the
// following activation's trainables). Used by Adam, checkpoints, gradcheck.

struct ParamRef {
    double* p;
    Eigen::Index n;
    bool decay;  // dense params only
};

inline std::vector<ParamRef> param_refs(MlpModel& m) {
    std::vector<ParamRef> refs;
    for (std::size_t i = 0; i < m.dense.size(); ++i) {
        refs.push_back({m.dense[i].W.data(), m.dense[i].W.size(), true});
        refs.push_back({m.dense[i].b.data(), m.dense[i].b.size(), true});
        if (i < m.acts.size()) {
            auto& a = m.acts[i];
            if (is_ditac(a.kind))
                refs.push_back({a.cfg.theta.data(), a.cfg.theta.size(), false});
            else if (a.kind == ActKind::PRELU)
                refs.push_back({&a.alpha, 1, false});
            else if (a.kind == ActKind::SWISH)
                refs.push_back({&a.beta, 1, false});
        }
    }
    return refs;
}

// gradients in the same canonical order
inline std::vector<Eigen::VectorXd> flatten_grads(const MlpModel& m, const MlpGrads& g) {
    std::vector<Eigen::VectorXd> out;
    for (std::size_t i = 0; i < m.dense.size(); ++i) {
        out.emplace_back(Eigen::Map<const Eigen::VectorXd>(g.dW[i].data(), g.dW[i].size()));
        out.push_back(g.db[i]);
        if (i < m.acts.size()) {
            const auto& a = m.acts[i];
            if (is_ditac(a.kind))
                out.push_back(g.dtheta[i]);
            else if (a.kind == ActKind::PRELU)
                out.push_back(Eigen::VectorXd::Constant(1, g.dalpha[i]));
            else if (a.kind == ActKind::SWISH)
                out.push_back(Eigen::VectorXd::Constant(1, g.dbeta[i]));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Adam (bias-corrected; decoupled weight decay on decay-masked params)

struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
    long step = 0;
    std::vector<Eigen::VectorXd> m, v;
};

inline AdamState make_adam(const std::vector<ParamRef>& refs, double lr,
                           double weight_decay = 0.0) {
    AdamState st;
    st.lr = lr;
    st.weight_decay = weight_decay;
    for (const auto& r : refs) {
        st.m.push_back(Eigen::VectorXd::Zero(r.n));
        st.v.push_back(Eigen::VectorXd::Zero(r.n));
    }
    return st;
}

inline void adam_step(AdamState& st, const std::vector<ParamRef>& refs,
                      const std::vector<Eigen::VectorXd>& grads) {
    if (refs.size() != grads.size() || refs.size() != st.m.size())
        throw std::invalid_argument("adam_step: parameter/gradient count mismatch");
    st.step += 1;
    const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
    for (std::size_t k = 0; k < refs.size(); ++k) {
        if (grads[k].size() != refs[k].n)
            throw std::invalid_argument("adam_step: shape mismatch at param " + std::to_string(k));
        Eigen::Map<Eigen::VectorXd> p(refs[k].p, refs[k].n);
        st.m[k] = st.beta1 * st.m[k] + (1.0 - st.beta1) * grads[k];
        st.v[k] = st.beta2 * st.v[k] + (1.0 - st.beta2) * grads[k].cwiseAbs2();
        if (st.weight_decay != 0.0 && refs[k].decay) p -= (st.lr * st.weight_decay) * p;
        Eigen::VectorXd denom = (st.v[k] / bc2).cwiseSqrt();
        denom.array() += st.eps;
        p -= st.lr * (st.m[k] / bc1).cwiseQuotient(denom);
    }
}

// ---------------------------------------------------------------------------
// losses and metrics

// mean over batch and output dims; dpred optional
inline double mse_loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target,
                       Eigen::MatrixXd* dpred = nullptr) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
        throw std::invalid_argument("mse_loss: shape mismatch");
    const Eigen::MatrixXd r = pred - target;
    const double n = static_cast<double>(pred.size());
    if (dpred) *dpred = (2.0 / n) * r;
    return r.squaredNorm() / n;
}

inline double r2_score(const Eigen::VectorXd& pred, const Eigen::VectorXd& target) {
    if (pred.size() != target.size()) throw std::invalid_argument("r2_score: size mismatch");
    const double mean = target.mean();
    const double ss_tot = (target.array() - mean).matrix().squaredNorm();
    if (ss_tot == 0.0) throw std::invalid_argument("r2_score: constant targets, R^2 undefined");
    const double ss_res = (pred - target).squaredNorm();
    return 1.0 - ss_res / ss_tot;
}

// labels are class indices; returns mean negative log-likelihood, stabilized
// with log-sum-exp; dlogits = (softmax - onehot)/batch
inline double cross_entropy_loss(const Eigen::MatrixXd& logits, const Eigen::VectorXi& labels,
                                 Eigen::MatrixXd* dlogits = nullptr) {
    if (logits.rows() != labels.size())
        throw std::invalid_argument("cross_entropy_loss: batch mismatch");
    const Eigen::Index B = logits.rows(), C = logits.cols();
    double loss = 0.0;
    if (dlogits) dlogits->resize(B, C);
    for (Eigen::Index i = 0; i < B; ++i) {
        if (labels[i] < 0 || labels[i] >= C)
            throw std::invalid_argument("cross_entropy_loss: label out of range");
        const double mx = logits.row(i).maxCoeff();
        const Eigen::ArrayXd ex = (logits.row(i).array() - mx).exp();
        const double Zs = ex.sum();
        loss += std::log(Zs) + mx - logits(i, labels[i]);
        if (dlogits) {
            dlogits->row(i) = (ex / Zs).matrix() / static_cast<double>(B);
            (*dlogits)(i, labels[i]) -= 1.0 / static_cast<double>(B);
        }
    }
    return loss / static_cast<double>(B);
}

inline double top1_accuracy(const Eigen::MatrixXd& logits, const Eigen::VectorXi& labels) {
    if (logits.rows() != labels.size())
        throw std::invalid_argument("top1_accuracy: batch mismatch");
    long hits = 0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        Eigen::Index arg;
        logits.row(i).maxCoeff(&arg);
        if (arg == labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(logits.rows());
}

// ---------------------------------------------------------------------------
// checkpoints: JSON manifest + little-endian float64 blob in canonical order

inline void save_checkpoint(MlpModel& m, const std::string& manifest_path,
                            const std::string& blob_path) {
    nlohmann::json j;
    j["format"] = "ditac-checkpoint-v1";
    j["blob"] = blob_path;
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t i = 0; i < m.dense.size(); ++i) {
        layers.push_back({{"type", "dense"},
                          {"out", m.dense[i].W.rows()},
                          {"in", m.dense[i].W.cols()}});
        if (i < m.acts.size()) {
            const auto& a = m.acts[i];
            nlohmann::json la = {{"type", "act"}, {"kind", act_kind_name(a.kind)}};
            if (is_ditac(a.kind)) {
                la["variant"] = variant_name(a.cfg.variant);
                la["basis"] = basis_to_json(a.cfg.basis);
                la["n_quant"] = a.cfg.n_quant;
                la["leaky_slope"] = a.cfg.leaky_slope;
                la["train_theta"] = a.train_theta;
            }
            layers.push_back(la);
        }
    }
    j["layers"] = layers;
    long act_params = 0;
    j["n_params"] = count_parameters(m, &act_params);
    j["n_activation_params"] = act_params;

    std::ofstream blob(blob_path, std::ios::binary);
    if (!blob) throw std::runtime_error("save_checkpoint: cannot open " + blob_path);
    std::size_t n_doubles = 0;
    for (const auto& r : param_refs(m)) {
        blob.write(reinterpret_cast<const char*>(r.p),
                   static_cast<std::streamsize>(sizeof(double) * r.n));
        n_doubles += static_cast<std::size_t>(r.n);
    }
    j["blob_doubles"] = n_doubles;
    std::ofstream man(manifest_path);
    if (!man) throw std::runtime_error("save_checkpoint: cannot open " + manifest_path);
    man << j.dump(2) << "\n";
}

inline MlpModel load_checkpoint(const std::string& manifest_path) {
    std::ifstream man(manifest_path);
    if (!man) throw std::runtime_error("load_checkpoint: cannot open " + manifest_path);
    nlohmann::json j;
    man >> j;
    if (j.value("format", "") != "ditac-checkpoint-v1")
        throw std::runtime_error("load_checkpoint: unknown format");
    MlpModel m;
    for (const auto& l : j.at("layers")) {
        const std::string type = l.at("type");
        if (type == "dense") {
            DenseLayer d;
            d.W = Eigen::MatrixXd::Zero(l.at("out").get<int>(), l.at("in").get<int>());
            d.b = Eigen::VectorXd::Zero(l.at("out").get<int>());
            m.dense.push_back(std::move(d));
        } else {
            ActivationLayer a;
            Variant var = Variant::DITAC;
            a.kind = act_kind_from_string(l.at("kind").get<std::string>(), &var);
            if (is_ditac(a.kind)) {
                a.cfg.basis = basis_from_json(l.at("basis"));
                act_kind_from_string(l.at("variant").get<std::string>(), &var);
                a.cfg.variant = var;
                a.cfg.n_quant = l.at("n_quant").get<int>();
                a.cfg.leaky_slope = l.at("leaky_slope").get<double>();
                a.train_theta = l.value("train_theta", true);
                a.cfg.theta = Eigen::VectorXd::Zero(a.cfg.basis.d);
            }
            m.acts.push_back(std::move(a));
        }
    }
    const std::string blob_path = j.at("blob");
    std::ifstream blob(blob_path, std::ios::binary);
    if (!blob) throw std::runtime_error("load_checkpoint: cannot open " + blob_path);
    for (const auto& r : param_refs(m)) {
        blob.read(reinterpret_cast<char*>(r.p),
                  static_cast<std::streamsize>(sizeof(double) * r.n));
        if (!blob) throw std::runtime_error("load_checkpoint: blob truncated");
    }
    return m;
}

}  // namespace ditac
