// Acceptance gate: ten end-to-end checks over the full stack, printed one
// line each. Exit status is the number of failed checks. An optional integer
// argument restricts the run to that single check; the ctest registration
// uses this so the long training checks get their own timeouts.
//
// Every check is self-contained: it builds its own bases, draws its own
// randomness from fixed seeds, and (for the training checks) runs the real
// harness end to end. Nothing here shares oracle code with the unit tests.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "ditac/train.hpp"

using namespace ditac;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;
};

void note(Outcome& o, bool cond, const std::string& on_fail) {
    if (!cond) {
        o.ok = false;
        if (!o.detail.empty()) o.detail += "; ";
        o.detail += on_fail;
    }
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

double median3(double a, double b, double c) {
    return std::max(std::min(a, b), std::min(std::max(a, b), c));
}

// -------------------------------------------------------------- check 1
// theta = 0 must reduce the transform to the identity and DiTAC to plain
// GELU, both at 1e-12 on 10^4-point grids, in under a second.
Outcome check_identity() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    const CpaBasis basis = build_basis(build_tessellation(-3.0, 3.0, 10), true);
    const Eigen::VectorXd theta = Eigen::VectorXd::Zero(basis.d);

    double worst_t = 0.0;
    for (int k = 0; k < 10000; ++k) {
        const double x = -3.0 + 6.0 * k / 9999.0;
        worst_t = std::max(worst_t, std::abs(transform(basis, theta, x).y - x));
    }
    note(o, worst_t < 1e-12, "max|T(x)-x| = " + fmt("%.2e", worst_t));

    const ActivationConfig cfg = make_activation_config(Variant::DITAC, basis);
    double worst_a = 0.0;
    for (int k = 0; k < 10000; ++k) {
        const double x = -6.0 + 12.0 * k / 9999.0;  // spans both branches
        worst_a = std::max(worst_a, std::abs(activate_exact(cfg, x) - gelu(x)));
    }
    note(o, worst_a < 1e-12, "max|DiTAC-gelu| = " + fmt("%.2e", worst_a));

    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    note(o, secs < 1.0, "runtime " + fmt("%.2f", secs) + "s >= 1s");
    if (o.ok)
        o.detail = "max|T-x|=" + fmt("%.1e", worst_t) + " max|DiTAC-gelu|=" +
                   fmt("%.1e", worst_a) + " " + fmt("%.2f", secs) + "s";
    return o;
}

// -------------------------------------------------------------- check 2
// Closed-form flow vs classical RK4 with 10^5 steps: the integrator knows
// nothing about cell hops, it just steps the velocity field.
Outcome check_rk4_oracle() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(20240202);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n_cells = 2 + trial % 15;
        const bool zb = trial % 2 == 0;
        const CpaBasis basis = build_basis(build_tessellation(-3.0, 3.0, n_cells), zb);
        Eigen::VectorXd theta(basis.d);
        for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] = rng.normal(0.0, 0.5);
        const double x = rng.uniform(-3.0, 3.0);

        const Eigen::VectorXd w = basis.B * theta;
        auto vel = [&](double p) {
            const int c = cell_of(basis.tess, p);
            return w[2 * c] * p + w[2 * c + 1];
        };
        const long steps = 100000;
        const double h = 1.0 / steps;
        double p = x;
        for (long i = 0; i < steps; ++i) {
            const double k1 = vel(p);
            const double k2 = vel(p + 0.5 * h * k1);
            const double k3 = vel(p + 0.5 * h * k2);
            const double k4 = vel(p + h * k3);
            p += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        worst = std::max(worst, std::abs(transform(basis, theta, x).y - p));
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    note(o, worst < 1e-6, "max|closed-form - RK4| = " + fmt("%.2e", worst));
    note(o, secs < 30.0, "runtime " + fmt("%.1f", secs) + "s >= 30s");
    if (o.ok) o.detail = "max err=" + fmt("%.1e", worst) + " over 100 trials, " +
                         fmt("%.1f", secs) + "s";
    return o;
}

// -------------------------------------------------------------- check 3
// Central finite differences against both analytic transform gradients,
// then a full-network gradcheck on a 2-8-1 exact-mode DiTAC MLP.
Outcome check_gradients() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(333);
    const double h = 1e-5;

    double worst_th = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const bool zb = trial % 2 == 0;
        const CpaBasis basis = build_basis(build_tessellation(-3.0, 3.0, 10), zb);
        Eigen::VectorXd theta(basis.d);
        for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] = rng.normal(0.0, 0.5);
        const double x = rng.uniform(-2.9, 2.9);
        const Eigen::VectorXd g = transform_grad_theta(basis, theta, x);
        Eigen::VectorXd fd(basis.d);
        for (Eigen::Index i = 0; i < theta.size(); ++i) {
            Eigen::VectorXd tp = theta, tm = theta;
            tp[i] += h;
            tm[i] -= h;
            fd[i] = (transform(basis, tp, x).y - transform(basis, tm, x).y) / (2.0 * h);
        }
        worst_th = std::max(worst_th, (g - fd).norm() / std::max(1e-12, fd.norm()));
    }
    note(o, worst_th < 1e-5, "grad_theta rel err = " + fmt("%.2e", worst_th));

    double worst_x = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const bool zb = trial % 2 == 0;
        const CpaBasis basis = build_basis(build_tessellation(-3.0, 3.0, 10), zb);
        Eigen::VectorXd theta(basis.d);
        for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] = rng.normal(0.0, 0.5);
        // dT/dx is C0 but not C1 across knots; keep the FD stencil off them
        double x;
        do {
            x = rng.uniform(-2.9, 2.9);
        } while (std::abs(x / 0.6 - std::round(x / 0.6)) * 0.6 < 50.0 * h);
        const double g = transform_grad_x(basis, theta, x);
        const double fd =
            (transform(basis, theta, x + h).y - transform(basis, theta, x - h).y) / (2.0 * h);
        worst_x = std::max(worst_x, std::abs(g - fd) / std::max(1e-12, std::abs(fd)));
    }
    note(o, worst_x < 1e-6, "grad_x rel err = " + fmt("%.2e", worst_x));

    // 2-8-1 exact-mode network, every registered parameter block
    ActivationLayer proto;
    proto.kind = ActKind::DITAC;
    proto.cfg = make_activation_config(Variant::DITAC,
                                       build_basis(build_tessellation(-3.0, 3.0, 10), true));
    MlpModel m = make_mlp({2, 8, 1}, proto);
    init_params(m, 7);
    for (Eigen::Index i = 0; i < m.acts[0].cfg.theta.size(); ++i)
        m.acts[0].cfg.theta[i] = rng.uniform(-0.5, 0.5);
    Eigen::MatrixXd X(6, 2), Y(6, 1);
    for (int i = 0; i < 6; ++i) {
        X(i, 0) = rng.uniform(-2.0, 2.0);
        X(i, 1) = rng.uniform(-2.0, 2.0);
        Y(i, 0) = rng.uniform(-1.0, 1.0);
    }
    ForwardCache cache;
    forward(m, X, &cache);
    // activation seam at the Omega edges: the stencil must not cross +-3
    double seam = 1e9;
    for (const auto& Z : cache.Z)
        for (Eigen::Index i = 0; i < Z.size(); ++i)
            seam = std::min(seam, std::min(std::abs(Z.data()[i] - 3.0),
                                           std::abs(Z.data()[i] + 3.0)));
    note(o, seam > 100.0 * h, "gradcheck batch touches the Omega seam");

    Eigen::MatrixXd dout;
    mse_loss(cache.out, Y, &dout);
    const MlpGrads grads = backward(m, cache, dout);
    const auto flat = flatten_grads(m, grads);
    auto refs = param_refs(m);
    double worst_net = 0.0;
    for (std::size_t k = 0; k < refs.size(); ++k) {
        for (Eigen::Index j = 0; j < refs[k].n; ++j) {
            const double keep = refs[k].p[j];
            auto eval = [&](double v) {
                refs[k].p[j] = v;
                for (auto& a : m.acts) ++a.theta_version;
                return mse_loss(forward(m, X), Y);
            };
            const double fd = (eval(keep + h) - eval(keep - h)) / (2.0 * h);
            refs[k].p[j] = keep;
            for (auto& a : m.acts) ++a.theta_version;
            worst_net = std::max(worst_net, std::abs(flat[k][j] - fd) /
                                                std::max(1.0, std::abs(fd)));
        }
    }
    note(o, worst_net < 1e-4, "network gradcheck rel err = " + fmt("%.2e", worst_net));

    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    note(o, secs < 60.0, "runtime " + fmt("%.1f", secs) + "s >= 60s");
    if (o.ok)
        o.detail = "grad_theta=" + fmt("%.1e", worst_th) + " grad_x=" + fmt("%.1e", worst_x) +
                   " network=" + fmt("%.1e", worst_net) + " " + fmt("%.1f", secs) + "s";
    return o;
}

// -------------------------------------------------------------- check 4
// Diffeomorphism properties at ||theta|| <= 5: strict monotonicity on a
// 10^4 grid, inverse round-trip at 1e-8, and semigroup composition
// phi(x; s+t) = phi(phi(x; s); t) at 1e-8.
Outcome check_diffeomorphism() {
    Outcome o;
    Rng rng(444);
    double worst_rt = 0.0, worst_comp = 0.0;
    int mono_failures = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const bool zb = trial % 2 == 0;
        const CpaBasis basis = build_basis(build_tessellation(-3.0, 3.0, 10), zb);
        Eigen::VectorXd theta(basis.d);
        for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] = rng.normal();
        theta *= rng.uniform(0.2, 1.0) * 5.0 / theta.norm();

        double prev = -1e300;
        for (int k = 0; k < 10000; ++k) {
            const double x = -3.0 + 6.0 * k / 9999.0;
            const double y = transform(basis, theta, x).y;
            if (!(y > prev)) ++mono_failures;
            prev = y;
            if (k % 10 == 0)
                worst_rt = std::max(worst_rt,
                                    std::abs(inverse_transform(basis, theta, y) - x));
        }
        const double s = rng.uniform(0.0, 1.0), t = rng.uniform(0.0, 1.0);
        for (int k = 0; k < 100; ++k) {
            const double x = -3.0 + 6.0 * k / 99.0;
            const double direct = transform(basis, theta, x, s + t).y;
            const double hop = transform(basis, theta, transform(basis, theta, x, s).y, t).y;
            worst_comp = std::max(worst_comp, std::abs(direct - hop));
        }
    }
    note(o, mono_failures == 0,
         std::to_string(mono_failures) + " monotonicity violations");
    note(o, worst_rt < 1e-8, "round-trip err = " + fmt("%.2e", worst_rt));
    note(o, worst_comp < 1e-8, "composition err = " + fmt("%.2e", worst_comp));
    if (o.ok)
        o.detail = "monotone, round-trip=" + fmt("%.1e", worst_rt) +
                   " composition=" + fmt("%.1e", worst_comp);
    return o;
}

// -------------------------------------------------------------- check 5
// LUT fidelity at n_quant = 256: the max error over 10^5 in-Omega points is
// bounded by 2 * max(dT/dx) * delta, halving delta shrinks it by >= 1.6x,
// and the straight-through gradients coincide with the exact ones at grid
// points.
Outcome check_lut() {
    Outcome o;
    Rng rng(555);
    const CpaBasis basis = build_basis(build_tessellation(-3.0, 3.0, 10), true);
    ActivationConfig cfg = make_activation_config(Variant::DITAC, basis, 256);
    for (Eigen::Index i = 0; i < cfg.theta.size(); ++i) cfg.theta[i] = rng.normal();
    cfg.theta *= 2.0 / cfg.theta.norm();

    const LookupTable lut = build_lut(cfg, 1);
    Eigen::VectorXd xs(100000);
    for (Eigen::Index i = 0; i < xs.size(); ++i) xs[i] = rng.uniform(-3.0, 3.0);
    const Eigen::VectorXd approx = lut_forward(lut, cfg, xs, 1);
    double err256 = 0.0;
    for (Eigen::Index i = 0; i < xs.size(); ++i)
        err256 = std::max(err256, std::abs(approx[i] - activate_exact(cfg, xs[i])));
    const double bound = 2.0 * lut.dx.maxCoeff() * lut.delta();
    note(o, err256 <= bound,
         "err " + fmt("%.2e", err256) + " exceeds bound " + fmt("%.2e", bound));

    ActivationConfig cfg512 = cfg;
    cfg512.n_quant = 512;
    const LookupTable lut512 = build_lut(cfg512, 1);
    const Eigen::VectorXd approx512 = lut_forward(lut512, cfg512, xs, 1);
    double err512 = 0.0;
    for (Eigen::Index i = 0; i < xs.size(); ++i)
        err512 = std::max(err512, std::abs(approx512[i] - activate_exact(cfg512, xs[i])));
    note(o, err256 / err512 >= 1.6,
         "halving delta only gained " + fmt("%.2f", err256 / err512) + "x");

    double worst_ste = 0.0;
    for (int k = 0; k <= cfg.n_quant; ++k) {
        Eigen::VectorXd x1(1), up(1), gx;
        x1[0] = lut.q[k];
        up[0] = 1.0;
        Eigen::VectorXd gth;
        lut_backward(lut, cfg, x1, up, 1, gx, gth);
        const ActGrad exact = activate_grad(cfg, lut.q[k]);
        worst_ste = std::max(worst_ste, std::abs(gx[0] - exact.dx));
        worst_ste = std::max(worst_ste, (gth - exact.dtheta).cwiseAbs().maxCoeff());
    }
    note(o, worst_ste < 1e-10, "STE-vs-exact at grid points = " + fmt("%.2e", worst_ste));
    if (o.ok)
        o.detail = "err=" + fmt("%.1e", err256) + " bound=" + fmt("%.1e", bound) +
                   " refine x" + fmt("%.2f", err256 / err512) + " ste=" +
                   fmt("%.1e", worst_ste);
    return o;
}

// -------------------------------------------------------------- check 6
// Parameter accounting on the 2-100-100-10 classifier: 11410 dense weights,
// 11428 once two 10-cell DiTAC instances add 9 parameters each.
Outcome check_param_count() {
    Outcome o;
    ExperimentConfig c = make_experiment_config("gmm2d");
    c.activation = "gelu";
    MlpModel plain = build_model(c, 2, 10);
    const long dense = count_parameters(plain);
    note(o, dense == 11410, "dense count " + std::to_string(dense) + " != 11410");

    c.activation = "ditac";
    MlpModel with_ditac = build_model(c, 2, 10);
    long act = 0;
    const long total = count_parameters(with_ditac, &act);
    note(o, total == 11428, "total count " + std::to_string(total) + " != 11428");
    note(o, act == 18, "activation count " + std::to_string(act) + " != 18");
    if (o.ok) o.detail = "11410 dense + 18 = 11428";
    return o;
}

// -------------------------------------------------------------- check 7
// Toy regression, directional: with the training recipes (40k iterations,
// batch 98, Adam), DiTAC's median test R2 over seeds {0,1,2} beats the best
// baseline median on reg1d_a and reg2d, and clears 0.93 on reg1d_a.
Outcome check_regression() {
    Outcome o;
    const std::vector<std::string> acts = {"ditac", "lrelu", "prelu", "gelu"};
    double max_wall = 0.0;
    std::string summary;
    for (const std::string& task : {std::string("reg1d_a"), std::string("reg2d")}) {
        std::vector<double> med(acts.size());
        for (std::size_t a = 0; a < acts.size(); ++a) {
            double r2[3];
            for (std::uint64_t seed = 0; seed < 3; ++seed) {
                ExperimentConfig c = make_experiment_config(task);
                c.activation = acts[a];
                c.seed = seed;
                const RunReport r = run_experiment(c);
                note(o, !r.diverged, task + "/" + acts[a] + " diverged");
                r2[seed] = r.final_metric;
                max_wall = std::max(max_wall, r.wall_seconds);
            }
            med[a] = median3(r2[0], r2[1], r2[2]);
        }
        const double best_base = std::max({med[1], med[2], med[3]});
        note(o, med[0] > best_base,
             task + ": ditac median " + fmt("%.4f", med[0]) + " <= best baseline " +
                 fmt("%.4f", best_base));
        if (task == "reg1d_a")
            note(o, med[0] >= 0.93, "reg1d_a ditac median " + fmt("%.4f", med[0]) + " < 0.93");
        if (!summary.empty()) summary += "  ";
        summary += task + " ditac=" + fmt("%.3f", med[0]) + ">" + fmt("%.3f", best_base);
    }
    note(o, max_wall <= 1200.0, "slowest run " + fmt("%.0f", max_wall) + "s > 20min");
    if (o.ok) o.detail = summary + "  max wall " + fmt("%.0f", max_wall) + "s";
    return o;
}

// -------------------------------------------------------------- check 8
// Toy classification, directional: per-seed paired top-1 of DiTAC vs the
// theta-frozen control (the same net pinned at GELU), median over seeds
// {0,1,2} must not be negative, on gmm2d and the bundled MNIST subset.
Outcome check_classification() {
    Outcome o;
    double max_wall = 0.0;
    std::string summary;
    for (const std::string& task : {std::string("gmm2d"), std::string("mnist")}) {
        double diff[3];
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
            ExperimentConfig c = make_experiment_config(task);
            c.seed = seed;
            const RunReport trained = run_experiment(c);
            c.train_theta = false;
            const RunReport frozen = run_experiment(c);
            note(o, !trained.diverged && !frozen.diverged, task + " diverged");
            diff[seed] = trained.final_metric - frozen.final_metric;
            max_wall = std::max({max_wall, trained.wall_seconds, frozen.wall_seconds});
        }
        const double med = median3(diff[0], diff[1], diff[2]);
        note(o, med >= 0.0, task + ": median paired top-1 gain " + fmt("%.4f", med) + " < 0");
        if (!summary.empty()) summary += "  ";
        summary += task + " med gain=" + fmt("%+.4f", med);
    }
    note(o, max_wall <= 900.0, "slowest run " + fmt("%.0f", max_wall) + "s > 15min");
    if (o.ok) o.detail = summary + "  max wall " + fmt("%.0f", max_wall) + "s";
    return o;
}

// -------------------------------------------------------------- check 9
// Prior: SPD precision and exact quadratic scaling of the penalty, then
// stability (no non-finite losses) of every default experiment at
// w_reg = 1e-4.
Outcome check_prior_stability() {
    Outcome o;
    const CpaBasis basis = build_basis(build_tessellation(-3.0, 3.0, 10), true);
    const SmoothnessPrior prior = build_prior(basis, 1.0, 0.6);
    const Eigen::LLT<Eigen::MatrixXd> llt(prior.precision);
    note(o, llt.info() == Eigen::Success, "precision matrix is not SPD");
    note(o, (prior.precision - prior.precision.transpose()).cwiseAbs().maxCoeff() < 1e-12,
         "precision matrix is not symmetric");

    Rng rng(999);
    Eigen::VectorXd theta(basis.d);
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] = rng.normal();
    const double l1 = reg_loss(prior, {theta});
    const double l2 = reg_loss(prior, {2.0 * theta});
    note(o, std::abs(l2 - 4.0 * l1) < 1e-10 * std::max(1.0, std::abs(l1)),
         "reg_loss(2t) != 4*reg_loss(t)");
    note(o, l1 > 0.0, "reg_loss not positive at nonzero theta");

    std::string walls;
    for (const char* task :
         {"reg1d_a", "reg1d_b", "reg2d", "gmm2d", "mnist", "auto_mpg"}) {
        ExperimentConfig c = make_experiment_config(task);
        c.w_reg = 1e-4;
        const RunReport r = run_experiment(c);
        bool finite = std::isfinite(r.final_loss) && std::isfinite(r.final_metric);
        for (const auto& row : r.history) finite = finite && std::isfinite(row[1]);
        note(o, !r.diverged && finite, std::string(task) + " unstable at w_reg=1e-4");
        if (!walls.empty()) walls += " ";
        walls += std::string(task) + "=" + fmt("%.0f", r.wall_seconds) + "s";
    }
    if (o.ok) o.detail = "SPD, quadratic, all six defaults stable (" + walls + ")";
    return o;
}

// -------------------------------------------------------------- check 10
// Determinism: identical config + seed must reproduce the identical report
// content hash, at full default length, on a regression and a
// classification task.
Outcome check_determinism() {
    Outcome o;
    std::string hashes;
    for (const char* task : {"reg1d_a", "gmm2d"}) {
        ExperimentConfig c = make_experiment_config(task);
        const RunReport r1 = run_experiment(c);
        const RunReport r2 = run_experiment(c);
        note(o, r1.report_hash == r2.report_hash && r1.report_hash != 0,
             std::string(task) + " re-run hash mismatch");
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(r1.report_hash));
        if (!hashes.empty()) hashes += " ";
        hashes += std::string(task) + "=" + buf;
    }
    if (o.ok) o.detail = "re-runs bit-identical (" + hashes + ")";
    return o;
}

struct Check {
    const char* name;
    std::function<Outcome()> fn;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Check> checks = {
        {"identity reduction at theta=0", check_identity},
        {"closed-form flow vs RK4 oracle", check_rk4_oracle},
        {"analytic gradients vs finite differences", check_gradients},
        {"monotone, invertible, composable flow", check_diffeomorphism},
        {"LUT fidelity and straight-through grads", check_lut},
        {"parameter accounting 11410/11428", check_param_count},
        {"toy regression beats fixed baselines", check_regression},
        {"toy classification beats frozen control", check_classification},
        {"prior properties and w_reg stability", check_prior_stability},
        {"deterministic report hash", check_determinism},
    };

    int only = 0;
    if (argc > 1) {
        only = std::atoi(argv[1]);
        if (only < 1 || only > static_cast<int>(checks.size())) {
            std::fprintf(stderr, "usage: %s [1..%zu]\n", argv[0], checks.size());
            return 2;
        }
    }

    int failures = 0;
    for (std::size_t i = 0; i < checks.size(); ++i) {
        if (only && static_cast<int>(i + 1) != only) continue;
        Outcome o;
        try {
            o = checks[i].fn();
        } catch (const std::exception& e) {
            o.ok = false;
            o.detail = std::string("exception: ") + e.what();
        }
        std::printf("[%2zu] %-42s %s  %s\n", i + 1, checks[i].name,
                    o.ok ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
        if (!o.ok) ++failures;
    }
    return failures;
}
