#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "ditac/train.hpp"

using namespace ditac;

TEST(Config, PresetsCarryPaperRecipes) {
    ExperimentConfig g = make_experiment_config("gmm2d");
    EXPECT_EQ(g.epochs, 150);
    EXPECT_EQ(g.batch_size, 64);
    EXPECT_DOUBLE_EQ(g.lr, 1e-4);
    EXPECT_EQ(g.hidden, (std::vector<int>{100, 100}));
    EXPECT_EQ(g.iterations, 0);

    ExperimentConfig r = make_experiment_config("reg2d");
    EXPECT_EQ(r.iterations, 40000);
    EXPECT_EQ(r.batch_size, 98);
    EXPECT_DOUBLE_EQ(r.lr, 0.01);
    EXPECT_EQ(r.hidden, (std::vector<int>{50}));

    ExperimentConfig b = make_experiment_config("reg1d_b");
    EXPECT_DOUBLE_EQ(b.lr, 1e-3);  // appendix exponent-typo reading
    EXPECT_EQ(b.hidden, (std::vector<int>{64}));

    ExperimentConfig m = make_experiment_config("mnist");
    EXPECT_EQ(m.hidden, (std::vector<int>{128, 64}));

    EXPECT_THROW(make_experiment_config("cifar"), std::invalid_argument);
}

TEST(Config, KeyAssignmentAndEchoRoundTrip) {
    ExperimentConfig c = make_experiment_config("reg2d");
    set_config_key(c, "lr", "0.005");
    set_config_key(c, "hidden", "10,20,30");
    set_config_key(c, "zero_boundary", "false");
    set_config_key(c, "seed", "42");
    EXPECT_DOUBLE_EQ(c.lr, 0.005);
    EXPECT_EQ(c.hidden, (std::vector<int>{10, 20, 30}));
    EXPECT_FALSE(c.zero_boundary);
    EXPECT_THROW(set_config_key(c, "no_such_key", "1"), std::invalid_argument);
    EXPECT_THROW(set_config_key(c, "activation", "tanh"), std::invalid_argument);

    // echo -> parse -> echo is a fixed point
    ExperimentConfig d;
    for (const auto& [k, v] : config_items(c)) set_config_key(d, k, v);
    EXPECT_EQ(config_canonical_string(c), config_canonical_string(d));
}

TEST(Config, FilePrecedenceAndComments) {
    const std::string path = "/tmp/ditac-test.cfg";
    std::ofstream f(path);
    f << "# comment line\n";
    f << "task = gmm2d   # preset first, overrides after\n";
    f << "lr = 0.5\n";
    f << "\n";
    f << "batch_size=32\n";
    f.close();
    ExperimentConfig c;
    apply_config_file(c, path);
    EXPECT_EQ(c.task, "gmm2d");
    EXPECT_EQ(c.epochs, 150);        // from the preset
    EXPECT_DOUBLE_EQ(c.lr, 0.5);     // file overrides preset
    EXPECT_EQ(c.batch_size, 32);

    std::ofstream bad("/tmp/ditac-bad.cfg");
    bad << "this line has no equals\n";
    bad.close();
    EXPECT_THROW(apply_config_file(c, "/tmp/ditac-bad.cfg"), std::invalid_argument);
}

TEST(Hashes, Fnv1aKnownVectors) {
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
    EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ull);
}

TEST(Hashes, ConfigHashTracksFields) {
    ExperimentConfig a = make_experiment_config("reg2d");
    ExperimentConfig b = a;
    EXPECT_EQ(fnv1a64(config_canonical_string(a)), fnv1a64(config_canonical_string(b)));
    b.seed = 7;
    EXPECT_NE(fnv1a64(config_canonical_string(a)), fnv1a64(config_canonical_string(b)));
}

TEST(TaskData, ShapesAndFlags) {
    ExperimentConfig c = make_experiment_config("reg2d");
    TaskData td = load_task_data(c);
    EXPECT_FALSE(td.classification);
    EXPECT_EQ(td.Xtr.rows(), 10000);
    EXPECT_EQ(td.Xte.rows(), 2000);
    EXPECT_EQ(td.Xtr.cols(), 2);

    ExperimentConfig g = make_experiment_config("gmm2d");
    TaskData tg = load_task_data(g);
    EXPECT_TRUE(tg.classification);
    EXPECT_EQ(tg.Xtr.rows(), 3500);
    EXPECT_EQ(tg.Xte.rows(), 1500);
    EXPECT_GE(tg.ltr.minCoeff(), 0);
    EXPECT_LE(tg.ltr.maxCoeff(), 9);

    ExperimentConfig m = make_experiment_config("mnist");
    TaskData tm = load_task_data(m);
    EXPECT_EQ(tm.Xtr.rows(), 5000);
    EXPECT_EQ(tm.Xte.rows(), 1000);
    EXPECT_EQ(tm.Xtr.cols(), 784);

    ExperimentConfig a = make_experiment_config("auto_mpg");
    TaskData ta = load_task_data(a);
    EXPECT_EQ(ta.Xtr.rows() + ta.Xte.rows(), 392);
    EXPECT_EQ(ta.Xtr.rows(), 274);  // round(0.7 * 392)
}

TEST(RunExperiment, ModeValidation) {
    ExperimentConfig c = make_experiment_config("reg1d_a");
    c.epochs = 10;  // both modes set
    EXPECT_THROW(run_experiment(c), std::invalid_argument);
    c.epochs = 0;
    c.iterations = 0;  // neither
    EXPECT_THROW(run_experiment(c), std::invalid_argument);
}

TEST(RunExperiment, ReportContractOnTinyRun) {
    ExperimentConfig c = make_experiment_config("gmm2d");
    c.epochs = 1;
    RunReport r = run_experiment(c);
    EXPECT_FALSE(r.diverged);
    EXPECT_EQ(r.n_params, 11428);  // 11410 dense + two 9-parameter DiTACs
    EXPECT_EQ(r.n_act_params, 18);
    EXPECT_EQ(r.steps_run, (3500 + 63) / 64);
    EXPECT_FALSE(r.history.empty());
    EXPECT_TRUE(std::isfinite(r.final_metric));
    EXPECT_GT(r.config_hash, 0u);
    EXPECT_GT(r.report_hash, 0u);

    ExperimentConfig plain = c;
    plain.activation = "gelu";
    RunReport rp = run_experiment(plain);
    EXPECT_EQ(rp.n_params, 11410);
    EXPECT_EQ(rp.n_act_params, 0);
}

TEST(RunExperiment, DeterministicReportHash) {
    ExperimentConfig c = make_experiment_config("reg1d_a");
    c.iterations = 300;
    c.eval_every = 100;
    RunReport r1 = run_experiment(c);
    RunReport r2 = run_experiment(c);
    EXPECT_EQ(r1.report_hash, r2.report_hash);
    EXPECT_EQ(r1.final_metric, r2.final_metric);

    c.seed = 1;
    RunReport r3 = run_experiment(c);
    EXPECT_NE(r1.report_hash, r3.report_hash);
}

TEST(RunExperiment, DivergenceReportedNotThrown) {
    ExperimentConfig c = make_experiment_config("reg1d_a");
    c.iterations = 2000;
    c.lr = 1e100;
    RunReport r;
    ASSERT_NO_THROW(r = run_experiment(c));
    EXPECT_TRUE(r.diverged);
    EXPECT_GT(r.diverged_step, 0);
    EXPECT_LE(r.diverged_step, 2000);
    EXPECT_GT(r.report_hash, 0u);
}

TEST(RunExperiment, OutputDirSelfContained) {
    namespace fs = std::filesystem;
    const std::string dir = "/tmp/ditac-run-out";
    fs::remove_all(dir);
    ExperimentConfig c = make_experiment_config("reg1d_a");
    c.iterations = 120;
    c.eval_every = 60;
    c.output_dir = dir;
    RunReport r = run_experiment(c);
    for (const char* f : {"config.txt", "history.csv", "report.json", "checkpoint.json",
                          "checkpoint.blob"})
        EXPECT_TRUE(fs::exists(dir + "/" + f)) << f;

    // the echoed config replays to the identical run
    ExperimentConfig replay;
    apply_config_file(replay, dir + "/config.txt");
    replay.output_dir.clear();
    ExperimentConfig c2 = c;
    c2.output_dir.clear();
    EXPECT_EQ(config_canonical_string(replay), config_canonical_string(c2));
    RunReport r2 = run_experiment(replay);
    EXPECT_EQ(r.final_metric, r2.final_metric);

    // checkpoint reloads and evaluates
    MlpModel m = load_checkpoint(dir + "/checkpoint.json");
    EXPECT_EQ(count_parameters(m), r.n_params);

    // history has header + one row per eval
    std::ifstream hist(dir + "/history.csv");
    std::string line;
    int lines = 0;
    while (std::getline(hist, line)) ++lines;
    EXPECT_EQ(lines, 3);  // header + evals at steps 60 and 120
}

TEST(RunExperiment, DitacBeatsFrozenControlShortRun) {
    ExperimentConfig c = make_experiment_config("reg1d_a");
    c.iterations = 3000;
    RunReport d = run_experiment(c);
    c.train_theta = false;
    RunReport f = run_experiment(c);
    EXPECT_FALSE(d.diverged);
    EXPECT_FALSE(f.diverged);
    EXPECT_GT(d.final_metric, f.final_metric);
}

TEST(RunExperiment, FrozenControlStaysAtBaseAf) {
    namespace fs = std::filesystem;
    const std::string dir = "/tmp/ditac-frozen-out";
    fs::remove_all(dir);
    ExperimentConfig c = make_experiment_config("reg1d_a");
    c.iterations = 200;
    c.train_theta = false;
    c.output_dir = dir;
    run_experiment(c);
    MlpModel m = load_checkpoint(dir + "/checkpoint.json");
    EXPECT_EQ(m.acts[0].cfg.theta.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Sweep, SingleElementMatchesRunExperiment) {
    ExperimentConfig c = make_experiment_config("reg1d_a");
    c.iterations = 150;
    c.eval_every = 75;
    std::size_t best = 99;
    auto reports = run_sweep(c, {c.lr}, &best);
    ASSERT_EQ(reports.size(), 1u);
    EXPECT_EQ(best, 0u);
    EXPECT_EQ(reports[0].report_hash, run_experiment(c).report_hash);
}

TEST(Sweep, DivergentRunExcluded) {
    ExperimentConfig c = make_experiment_config("reg1d_a");
    c.iterations = 400;
    c.eval_every = 200;
    std::size_t best = 99;
    auto reports = run_sweep(c, {1e100, 0.01}, &best);
    ASSERT_EQ(reports.size(), 2u);
    EXPECT_TRUE(reports[0].diverged);
    EXPECT_EQ(best, 1u);

    EXPECT_THROW(run_sweep(c, {1e100, 1e101}, &best), std::runtime_error);
    EXPECT_THROW(run_sweep(c, {}, &best), std::invalid_argument);
}

TEST(Comparison, TableShapedCsv) {
    ExperimentConfig c = make_experiment_config("reg2d");
    c.iterations = 60;
    c.eval_every = 60;
    const std::string path = "/tmp/ditac-table.csv";
    auto reports = run_comparison_table(c, {"ditac", "gelu", "lrelu", "prelu"}, path);
    EXPECT_EQ(reports.size(), 4u);
    std::ifstream f(path);
    std::string line;
    std::getline(f, line);
    EXPECT_EQ(line, "activation,final_metric,final_loss,diverged");
    int rows = 0;
    while (std::getline(f, line)) ++rows;
    EXPECT_EQ(rows, 4);
}

TEST(LutExport, OneFilePerInstanceAndRoundTrip) {
    ExperimentConfig c = make_experiment_config("gmm2d");
    MlpModel m = build_model(c, 2, 10);
    Rng tr(3);
    for (auto& a : m.acts)
        for (Eigen::Index i = 0; i < a.cfg.theta.size(); ++i)
            a.cfg.theta[i] = tr.uniform(-0.5, 0.5);
    auto paths = export_lut_files(m, "/tmp/ditac-lut", 64);
    ASSERT_EQ(paths.size(), 2u);  // one per DiTAC instance

    std::ifstream f(paths[0]);
    nlohmann::json j;
    f >> j;
    LookupTable lut = lut_from_json(j);
    EXPECT_TRUE(lut.frozen);
    ActivationConfig probe_cfg = m.acts[0].cfg;
    probe_cfg.n_quant = 64;
    Eigen::VectorXd xs = Eigen::VectorXd::LinSpaced(9, -3.0, 3.0);
    const Eigen::VectorXd got = lut_forward(lut, probe_cfg, xs, lut.theta_version);
    const LookupTable train_lut = build_lut(probe_cfg, lut.theta_version);
    const Eigen::VectorXd want = lut_forward(train_lut, probe_cfg, xs, lut.theta_version);
    EXPECT_LT((got - want).cwiseAbs().maxCoeff(), 1e-12);

    ExperimentConfig plain = c;
    plain.activation = "gelu";
    MlpModel mp = build_model(plain, 2, 10);
    EXPECT_THROW(export_lut_files(mp, "/tmp/ditac-lut2"), std::invalid_argument);
}

TEST(PlotData, CurveGridAndErrors) {
    ExperimentConfig c = make_experiment_config("reg2d");
    MlpModel m = build_model(c, 2, 1);

    // theta = 0 learned curve equals GELU samples
    emit_plot_data(m, c, "learned_af_curve", "/tmp/ditac-curve.csv");
    std::ifstream f("/tmp/ditac-curve.csv");
    std::string line;
    std::getline(f, line);
    EXPECT_EQ(line, "x,act0");
    int rows = 0;
    while (std::getline(f, line)) {
        const auto comma = line.find(',');
        const double x = std::stod(line.substr(0, comma));
        const double v = std::stod(line.substr(comma + 1));
        EXPECT_NEAR(v, gelu(x), 1e-12);
        ++rows;
    }
    EXPECT_EQ(rows, 512);

    emit_plot_data(m, c, "regression_surface", "/tmp/ditac-surface.csv");
    std::ifstream s("/tmp/ditac-surface.csv");
    std::getline(s, line);
    EXPECT_EQ(line, "x,y,pred,target");
    rows = 0;
    while (std::getline(s, line)) ++rows;
    EXPECT_EQ(rows, 100 * 100);

    EXPECT_THROW(emit_plot_data(m, c, "heatmap_3d", "/tmp/x.csv"), std::invalid_argument);
    EXPECT_THROW(emit_plot_data(m, c, "decision_boundary_grid", "/tmp/x.csv"),
                 std::invalid_argument);
}

TEST(PlotData, DecisionBoundaryGrid) {
    ExperimentConfig c = make_experiment_config("gmm2d");
    MlpModel m = build_model(c, 2, 10);
    emit_plot_data(m, c, "decision_boundary_grid", "/tmp/ditac-grid.csv");
    std::ifstream f("/tmp/ditac-grid.csv");
    std::string line;
    std::getline(f, line);
    EXPECT_EQ(line, "x,y,label");
    int rows = 0;
    int max_label = 0;
    while (std::getline(f, line)) {
        max_label = std::max(max_label, std::stoi(line.substr(line.rfind(',') + 1)));
        ++rows;
    }
    EXPECT_EQ(rows, 200 * 200);
    EXPECT_LE(max_label, 9);
}

TEST(Regularizer, AppliedOnlyWithDitacPresent) {
    // same tiny run with huge w_reg: DiTAC run is affected, GELU run is not
    ExperimentConfig c = make_experiment_config("reg1d_a");
    c.iterations = 50;
    c.eval_every = 50;
    ExperimentConfig hi = c, lo = c;
    hi.w_reg = 1e6;
    lo.w_reg = 1e-12;
    // theta stays ~0 under huge w_reg, so losses differ between the two
    RunReport rh = run_experiment(hi), rl = run_experiment(lo);
    EXPECT_NE(rh.final_metric, rl.final_metric);

    hi.activation = "gelu";
    lo.activation = "gelu";
    RunReport gh = run_experiment(hi);
    RunReport gl = run_experiment(lo);
    EXPECT_EQ(gh.final_metric, gl.final_metric);
}
