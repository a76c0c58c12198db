// ditac: command-line front end for the experiment harness.
//
// Config precedence (later wins): task preset < --config file < --override
// key=value pairs < dedicated flags. DITAC_OUTPUT_ROOT supplies a default
// output root; --output-dir overrides it.
#include <cstdio>
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "ditac/train.hpp"

namespace {

struct CommonOpts {
    std::string task;
    std::string config_file;
    std::vector<std::string> overrides;
    std::string activation;
    std::string output_dir;
    long long seed = -1;
    double lr = -1.0;
    long iterations = -1;
    int epochs = -1;
    int batch_size = -1;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--task", o.task, "task preset: gmm2d|mnist|reg1d_a|reg1d_b|reg2d|auto_mpg");
    cmd->add_option("--config", o.config_file, "flat key=value config file");
    cmd->add_option("--override", o.overrides, "extra key=value assignments")
        ->take_all();
    cmd->add_option("--activation", o.activation,
                    "ditac|ge_ditac|l_ditac|inf_ditac|relu|lrelu|prelu|gelu|elu|softplus|mish|swish");
    cmd->add_option("--output-dir", o.output_dir, "run output directory");
    cmd->add_option("--seed", o.seed, "training seed");
    cmd->add_option("--lr", o.lr, "learning rate");
    cmd->add_option("--iterations", o.iterations, "iteration budget (sets epochs=0)");
    cmd->add_option("--epochs", o.epochs, "epoch budget (sets iterations=0)");
    cmd->add_option("--batch-size", o.batch_size, "batch size");
}

ditac::ExperimentConfig assemble(const CommonOpts& o, bool want_output_dir) {
    ditac::ExperimentConfig c;  // reg1d_a-shaped defaults
    if (!o.task.empty()) ditac::apply_preset(c, o.task);
    if (!o.config_file.empty()) ditac::apply_config_file(c, o.config_file);
    for (const auto& kv : o.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw CLI::ValidationError("--override", "expected key=value, got: " + kv);
        ditac::set_config_key(c, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!o.activation.empty()) ditac::set_config_key(c, "activation", o.activation);
    if (o.seed >= 0) c.seed = static_cast<std::uint64_t>(o.seed);
    if (o.lr > 0) c.lr = o.lr;
    if (o.iterations >= 0) {
        c.iterations = o.iterations;
        c.epochs = 0;
    }
    if (o.epochs >= 0) {
        c.epochs = o.epochs;
        if (o.iterations < 0) c.iterations = 0;
    }
    if (o.batch_size > 0) c.batch_size = o.batch_size;
    if (!o.output_dir.empty()) {
        c.output_dir = o.output_dir;
    } else if (want_output_dir) {
        if (const char* root = std::getenv("DITAC_OUTPUT_ROOT")) {
            c.output_dir = std::string(root) + "/" + c.task + "_" + c.activation + "_s" +
                           std::to_string(c.seed);
        }
    }
    return c;
}

int cmd_selftest() {
    using namespace ditac;
    int failures = 0;
    auto check = [&](const char* name, bool ok) {
        std::printf("%-34s %s\n", name, ok ? "PASS" : "FAIL");
        if (!ok) ++failures;
    };

    auto tess = build_tessellation(-3.0, 3.0, 10);
    auto basis = build_basis(tess, true);
    ActivationConfig cfg = make_activation_config(Variant::DITAC, basis);

    {  // identity at theta = 0
        double worst = 0.0;
        for (int i = 0; i <= 1000; ++i) {
            const double x = -3.0 + 6.0 * i / 1000.0;
            worst = std::max(worst, std::abs(transform(basis, cfg.theta, x).y - x));
            worst = std::max(worst, std::abs(activate_exact(cfg, x) - gelu(x)));
        }
        check("identity/base-AF reduction", worst < 1e-12);
    }
    {  // gradient vs central differences
        Rng rng(7);
        Eigen::VectorXd theta(basis.d);
        for (int i = 0; i < basis.d; ++i) theta[i] = rng.normal(0.0, 0.5);
        bool ok = true;
        for (int trial = 0; trial < 20 && ok; ++trial) {
            const double x = rng.uniform(-2.9, 2.9);
            const Eigen::VectorXd g = transform_grad_theta(basis, theta, x);
            for (int j = 0; j < basis.d; ++j) {
                Eigen::VectorXd tp = theta, tm = theta;
                tp[j] += 1e-6;
                tm[j] -= 1e-6;
                const double fd =
                    (transform(basis, tp, x).y - transform(basis, tm, x).y) / 2e-6;
                if (std::abs(g[j] - fd) > 1e-5 * std::max(1.0, std::abs(fd))) ok = false;
            }
        }
        check("grad_theta finite differences", ok);
    }
    {  // monotonicity and inverse round-trip
        Rng rng(9);
        bool ok = true;
        for (int trial = 0; trial < 10 && ok; ++trial) {
            Eigen::VectorXd theta(basis.d);
            for (int i = 0; i < basis.d; ++i) theta[i] = rng.normal(0.0, 1.0);
            double prev = -3.0;
            for (int i = 0; i <= 500; ++i) {
                const double x = -3.0 + 6.0 * i / 500.0;
                const double y = transform(basis, theta, x).y;
                if (i > 0 && y <= prev) ok = false;
                prev = y;
                if (std::abs(inverse_transform(basis, theta, y) - x) > 1e-8) ok = false;
            }
        }
        check("monotone + inverse round-trip", ok);
    }
    {  // LUT agrees with exact at grid points
        ActivationConfig qcfg = cfg;
        qcfg.n_quant = 128;
        Rng rng(11);
        for (int i = 0; i < basis.d; ++i) qcfg.theta[i] = rng.normal(0.0, 0.4);
        const LookupTable lut = build_lut(qcfg, 1);
        bool ok = true;
        for (int k = 0; k <= 128; ++k) {
            const double x = lut.a + k * (lut.b - lut.a) / 128.0;
            Eigen::VectorXd xs(1);
            xs << x;
            if (std::abs(lut_forward(lut, qcfg, xs, 1)[0] - activate_exact(qcfg, x)) > 1e-10)
                ok = false;
        }
        check("LUT exact at grid points", ok);
    }
    {  // prior SPD and quadratic scaling
        const SmoothnessPrior prior = build_prior(basis, 1.0, 0.6);
        Eigen::LLT<Eigen::MatrixXd> llt(prior.precision);
        bool ok = llt.info() == Eigen::Success;
        Rng rng(13);
        Eigen::VectorXd theta(basis.d);
        for (int i = 0; i < basis.d; ++i) theta[i] = rng.normal();
        const double l1 = reg_loss(prior, {theta});
        const double l2 = reg_loss(prior, {Eigen::VectorXd(2.0 * theta)});
        if (std::abs(l2 - 4.0 * l1) > 1e-9 * std::abs(l1)) ok = false;
        check("prior SPD + quadratic scaling", ok);
    }
    {  // tiny training run is finite and deterministic
        ExperimentConfig c = make_experiment_config("reg1d_a");
        c.iterations = 200;
        c.eval_every = 100;
        const RunReport r1 = run_experiment(c);
        const RunReport r2 = run_experiment(c);
        check("short run deterministic", !r1.diverged && r1.report_hash == r2.report_hash);
    }
    std::printf("%s\n", failures == 0 ? "selftest: all checks passed"
                                      : "selftest: FAILURES PRESENT");
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CPAB diffeomorphisms and DiTAC trainable activations"};
    app.require_subcommand(1);

    CommonOpts train_o, sweep_o, eval_o, lut_o, plot_o;

    auto* gen = app.add_subcommand("gen-gmm", "sample the 2D NIW-GMM dataset to CSV");
    std::string gen_out = "gmm2d.csv";
    long long gen_seed = 1234;
    int gen_n = 5000;
    gen->add_option("--out", gen_out, "output CSV path");
    gen->add_option("--seed", gen_seed, "sampling seed");
    gen->add_option("--n-points", gen_n, "number of points");

    auto* train = app.add_subcommand("train", "run one experiment");
    add_common(train, train_o);

    auto* sweep = app.add_subcommand("sweep", "run an lr sweep and select the best");
    add_common(sweep, sweep_o);
    std::vector<double> sweep_lrs;
    sweep->add_option("--lrs", sweep_lrs, "learning rates to try")->required()->take_all();

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on its task");
    add_common(eval, eval_o);
    std::string eval_ckpt;
    eval->add_option("--checkpoint", eval_ckpt, "checkpoint manifest JSON")->required();

    auto* lut = app.add_subcommand("export-lut", "freeze inference LUTs from a checkpoint");
    add_common(lut, lut_o);
    std::string lut_ckpt, lut_out = "ditac";
    int lut_quant = 0;
    lut->add_option("--checkpoint", lut_ckpt, "checkpoint manifest JSON")->required();
    lut->add_option("--out", lut_out, "output path prefix");
    lut->add_option("--n-quant", lut_quant, "table resolution override");

    auto* plot = app.add_subcommand("plot-data", "emit plot-ready CSV grids");
    add_common(plot, plot_o);
    std::string plot_ckpt, plot_what, plot_out;
    plot->add_option("--checkpoint", plot_ckpt, "checkpoint manifest JSON")->required();
    plot->add_option("--what", plot_what,
                     "learned_af_curve|decision_boundary_grid|regression_surface")
        ->required();
    plot->add_option("--out", plot_out, "output CSV path")->required();

    auto* self = app.add_subcommand("selftest", "run the property suites");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            ditac::GmmSpec spec;
            spec.seed = static_cast<std::uint64_t>(gen_seed);
            spec.n_points = gen_n;
            const ditac::LabeledDataset ds = ditac::sample_gmm(spec);
            ditac::export_dataset_csv(ds, gen_out);
            std::printf("wrote %d points to %s\n", ds.n(), gen_out.c_str());
            return 0;
        }
        if (train->parsed()) {
            const ditac::ExperimentConfig c = assemble(train_o, true);
            const ditac::RunReport r = ditac::run_experiment(c);
            std::cout << ditac::report_to_json(r).dump(2) << "\n";
            return 0;
        }
        if (sweep->parsed()) {
            const ditac::ExperimentConfig c = assemble(sweep_o, true);
            std::size_t best = 0;
            const auto reports = ditac::run_sweep(c, sweep_lrs, &best);
            std::printf("%-12s %-12s %-10s %s\n", "lr", "metric", "diverged", "selected");
            for (std::size_t i = 0; i < reports.size(); ++i)
                std::printf("%-12g %-12.6f %-10s %s\n", reports[i].cfg.lr,
                            reports[i].final_metric, reports[i].diverged ? "yes" : "no",
                            i == best ? "*" : "");
            return 0;
        }
        if (eval->parsed()) {
            const ditac::ExperimentConfig c = assemble(eval_o, false);
            ditac::MlpModel m = ditac::load_checkpoint(eval_ckpt);
            const ditac::TaskData td = ditac::load_task_data(c);
            const Eigen::MatrixXd out = ditac::forward(m, td.Xte);
            if (td.classification) {
                std::printf("test top-1 accuracy: %.6f\n", ditac::top1_accuracy(out, td.lte));
            } else {
                std::printf("test R^2: %.6f\n", ditac::r2_score(out.col(0), td.yte.col(0)));
                std::printf("test MSE: %.6g\n", ditac::mse_loss(out, td.yte));
            }
            return 0;
        }
        if (lut->parsed()) {
            ditac::MlpModel m = ditac::load_checkpoint(lut_ckpt);
            const auto paths = ditac::export_lut_files(m, lut_out, lut_quant);
            for (const auto& p : paths) std::printf("wrote %s\n", p.c_str());
            return 0;
        }
        if (plot->parsed()) {
            const ditac::ExperimentConfig c = assemble(plot_o, false);
            ditac::MlpModel m = ditac::load_checkpoint(plot_ckpt);
            ditac::emit_plot_data(m, c, plot_what, plot_out);
            std::printf("wrote %s\n", plot_out.c_str());
            return 0;
        }
        if (self->parsed()) return cmd_selftest();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
