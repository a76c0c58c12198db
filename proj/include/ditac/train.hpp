// Experiment harness: task presets, the flat key=value config format, the
// training loop (Adam + optional CPA smoothness regularizer), run reports with
// content hashes, lr sweeps, LUT export, and plot-data emission.
//
// Determinism contract: a run is a pure function of its config. The dataset
// is drawn from Rng(data_seed) (synthetic tasks) or loaded from disk; dense
// init draws from Rng(seed); batch sampling draws from Rng(seed + 1).
// Training is single threaded and every reduction has a fixed order, so the
// report hash is reproducible bit for bit on one platform.
#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ditac/dataset.hpp"
#include "ditac/nn.hpp"
#include "ditac/prior.hpp"

namespace ditac {

// ---------------------------------------------------------------------------
// config

struct ExperimentConfig {
    std::string task = "reg1d_a";
    std::string activation = "ditac";  // ditac|ge_ditac|l_ditac|inf_ditac|relu|...
    std::vector<int> hidden = {30};
    long iterations = 40000;  // iterations mode when > 0 (epochs must be 0)
    int epochs = 0;           // epochs mode when > 0
    int batch_size = 98;
    double lr = 0.01;
    double weight_decay = 0.0;
    double w_reg = 1e-4;  // CPA smoothness regularizer weight (DiTAC only)
    double lambda_var = 1.0;
    double lambda_smooth = -1.0;  // < 0 resolves to (b - a) / n_cells
    std::uint64_t seed = 0;
    std::uint64_t data_seed = 1234;
    std::string output_dir;  // empty = nothing written
    std::string data_dir = "data";
    // DiTAC-family knobs
    double omega_a = -3.0;
    double omega_b = 3.0;
    int n_cells = 10;
    bool zero_boundary = true;
    int n_quant = 0;  // 0 = exact mode
    double leaky_slope = 0.01;
    bool train_theta = true;  // false = theta-frozen control
    // synthetic regression sampling
    double domain_lo = -1.0;
    double domain_hi = 0.47;
    int n_train = 10000;
    int n_test = 2000;
    long eval_every = 1000;  // iterations mode; epochs mode evaluates per epoch
};

inline bool task_is_classification(const std::string& task) {
    return task == "gmm2d" || task == "mnist";
}

// Paper-recipe defaults per task; everything stays overridable afterwards.
inline void apply_preset(ExperimentConfig& c, const std::string& task) {
    c.task = task;
    if (task == "gmm2d") {
        c.hidden = {100, 100};
        c.epochs = 150;
        c.iterations = 0;
        c.batch_size = 64;
        c.lr = 1e-4;
    } else if (task == "mnist") {
        c.hidden = {128, 64};
        c.epochs = 150;
        c.iterations = 0;
        c.batch_size = 64;
        c.lr = 1e-4;
    } else if (task == "reg1d_a") {
        c.hidden = {30};
        c.iterations = 40000;
        c.epochs = 0;
        c.batch_size = 98;
        c.lr = 0.01;
        // sin(exp 6x) on the full [-1,1] has ~64 periods and no 1-30-1 net
        // fits it; the default domain keeps ~2.7 periods (see README)
        c.domain_lo = -1.0;
        c.domain_hi = 0.47;
        c.w_reg = 1e-3;
    } else if (task == "reg1d_b") {
        c.hidden = {64};
        c.iterations = 40000;
        c.epochs = 0;
        c.batch_size = 98;
        c.lr = 1e-3;
        c.domain_lo = -1.0;
        c.domain_hi = 1.0;
    } else if (task == "reg2d") {
        c.hidden = {50};
        c.iterations = 40000;
        c.epochs = 0;
        c.batch_size = 98;
        c.lr = 0.01;
        c.domain_lo = -1.0;
        c.domain_hi = 1.0;
    } else if (task == "auto_mpg") {
        c.hidden = {100, 100};
        c.iterations = 40000;
        c.epochs = 0;
        c.batch_size = 98;
        c.lr = 0.01;
    } else {
        throw std::invalid_argument("unknown task: " + task);
    }
}

inline ExperimentConfig make_experiment_config(const std::string& task) {
    ExperimentConfig c;
    apply_preset(c, task);
    return c;
}

namespace detail {

inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::invalid_argument("expected bool, got: " + v);
}

inline std::vector<int> parse_int_list(const std::string& v) {
    std::vector<int> out;
    std::stringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stoi(tok));
    }
    return out;
}

}  // namespace detail

// Typed assignment of one flat key. "task" re-applies the task preset, so in
// a config file later keys override preset values (documented precedence:
// preset < file < --override < dedicated flags).
inline void set_config_key(ExperimentConfig& c, const std::string& key,
                           const std::string& value) {
    if (key == "task") apply_preset(c, value);
    else if (key == "activation") { Variant v; (void)act_kind_from_string(value, &v); c.activation = value; }
    else if (key == "hidden") c.hidden = detail::parse_int_list(value);
    else if (key == "iterations") c.iterations = std::stol(value);
    else if (key == "epochs") c.epochs = std::stoi(value);
    else if (key == "batch_size") c.batch_size = std::stoi(value);
    else if (key == "lr") c.lr = std::stod(value);
    else if (key == "weight_decay") c.weight_decay = std::stod(value);
    else if (key == "w_reg") c.w_reg = std::stod(value);
    else if (key == "lambda_var") c.lambda_var = std::stod(value);
    else if (key == "lambda_smooth") c.lambda_smooth = std::stod(value);
    else if (key == "seed") c.seed = std::stoull(value);
    else if (key == "data_seed") c.data_seed = std::stoull(value);
    else if (key == "output_dir") c.output_dir = value;
    else if (key == "data_dir") c.data_dir = value;
    else if (key == "omega_a") c.omega_a = std::stod(value);
    else if (key == "omega_b") c.omega_b = std::stod(value);
    else if (key == "n_cells") c.n_cells = std::stoi(value);
    else if (key == "zero_boundary") c.zero_boundary = detail::parse_bool(value);
    else if (key == "n_quant") c.n_quant = std::stoi(value);
    else if (key == "leaky_slope") c.leaky_slope = std::stod(value);
    else if (key == "train_theta") c.train_theta = detail::parse_bool(value);
    else if (key == "domain_lo") c.domain_lo = std::stod(value);
    else if (key == "domain_hi") c.domain_hi = std::stod(value);
    else if (key == "n_train") c.n_train = std::stoi(value);
    else if (key == "n_test") c.n_test = std::stoi(value);
    else if (key == "eval_every") c.eval_every = std::stol(value);
    else throw std::invalid_argument("unknown config key: " + key);
}

// canonical (key, value) echo; fixed order defines the config hash
inline std::vector<std::pair<std::string, std::string>> config_items(const ExperimentConfig& c) {
    using detail::fmt_g17;
    std::string hidden;
    for (std::size_t i = 0; i < c.hidden.size(); ++i)
        hidden += (i ? "," : "") + std::to_string(c.hidden[i]);
    return {
        {"task", c.task},
        {"activation", c.activation},
        {"hidden", hidden},
        {"iterations", std::to_string(c.iterations)},
        {"epochs", std::to_string(c.epochs)},
        {"batch_size", std::to_string(c.batch_size)},
        {"lr", fmt_g17(c.lr)},
        {"weight_decay", fmt_g17(c.weight_decay)},
        {"w_reg", fmt_g17(c.w_reg)},
        {"lambda_var", fmt_g17(c.lambda_var)},
        {"lambda_smooth", fmt_g17(c.lambda_smooth)},
        {"seed", std::to_string(c.seed)},
        {"data_seed", std::to_string(c.data_seed)},
        {"data_dir", c.data_dir},
        {"omega_a", fmt_g17(c.omega_a)},
        {"omega_b", fmt_g17(c.omega_b)},
        {"n_cells", std::to_string(c.n_cells)},
        {"zero_boundary", c.zero_boundary ? "true" : "false"},
        {"n_quant", std::to_string(c.n_quant)},
        {"leaky_slope", fmt_g17(c.leaky_slope)},
        {"train_theta", c.train_theta ? "true" : "false"},
        {"domain_lo", fmt_g17(c.domain_lo)},
        {"domain_hi", fmt_g17(c.domain_hi)},
        {"n_train", std::to_string(c.n_train)},
        {"n_test", std::to_string(c.n_test)},
        {"eval_every", std::to_string(c.eval_every)},
    };
}

// '#' comments and blank lines allowed; "key = value" with optional spaces
inline void apply_config_file(ExperimentConfig& c, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                        ": expected key=value");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        set_config_key(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

// ---------------------------------------------------------------------------
// reports

struct RunReport {
    ExperimentConfig cfg;
    bool diverged = false;
    long diverged_step = -1;
    long steps_run = 0;
    double final_loss = 0.0;          // train loss at the last step
    double final_metric = 0.0;        // test R^2 (regression) or top-1 (classification)
    double final_train_metric = 0.0;
    double final_test_mse = 0.0;      // regression only
    long n_params = 0;
    long n_act_params = 0;
    double wall_seconds = 0.0;        // excluded from the report hash
    std::vector<std::array<double, 3>> history;  // (step, train_loss, test_metric)
    std::uint64_t config_hash = 0;
    std::uint64_t report_hash = 0;
};

inline std::uint64_t fnv1a64(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string config_canonical_string(const ExperimentConfig& c) {
    std::string s;
    for (const auto& [k, v] : config_items(c)) s += k + "=" + v + "\n";
    return s;
}

// hash covers config, history, finals, and counts; wall clock stays out so
// re-runs of the same config+seed produce the same hash
inline void finalize_hashes(RunReport& r) {
    r.config_hash = fnv1a64(config_canonical_string(r.cfg));
    std::string s = config_canonical_string(r.cfg);
    using detail::fmt_g17;
    for (const auto& row : r.history)
        s += fmt_g17(row[0]) + "," + fmt_g17(row[1]) + "," + fmt_g17(row[2]) + "\n";
    s += "diverged=" + std::to_string(r.diverged ? 1 : 0) + "\n";
    s += "diverged_step=" + std::to_string(r.diverged_step) + "\n";
    s += "steps_run=" + std::to_string(r.steps_run) + "\n";
    s += "final_loss=" + fmt_g17(r.final_loss) + "\n";
    s += "final_metric=" + fmt_g17(r.final_metric) + "\n";
    s += "final_train_metric=" + fmt_g17(r.final_train_metric) + "\n";
    s += "final_test_mse=" + fmt_g17(r.final_test_mse) + "\n";
    s += "n_params=" + std::to_string(r.n_params) + "\n";
    s += "n_act_params=" + std::to_string(r.n_act_params) + "\n";
    r.report_hash = fnv1a64(s);
}

inline nlohmann::json report_to_json(const RunReport& r) {
    nlohmann::json j;
    for (const auto& [k, v] : config_items(r.cfg)) j["config"][k] = v;
    j["diverged"] = r.diverged;
    j["diverged_step"] = r.diverged_step;
    j["steps_run"] = r.steps_run;
    j["final_loss"] = r.final_loss;
    j["final_metric"] = r.final_metric;
    j["final_train_metric"] = r.final_train_metric;
    j["final_test_mse"] = r.final_test_mse;
    j["n_params"] = r.n_params;
    j["n_activation_params"] = r.n_act_params;
    j["wall_seconds"] = r.wall_seconds;
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(r.config_hash));
    j["config_hash"] = buf;
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(r.report_hash));
    j["report_hash"] = buf;
    return j;
}

// ---------------------------------------------------------------------------
// task data

struct TaskData {
    Eigen::MatrixXd Xtr, Xte;
    Eigen::MatrixXd ytr, yte;   // regression targets (n x 1)
    Eigen::VectorXi ltr, lte;   // class labels
    bool classification = false;
};

namespace detail {

inline TaskData split_views(const LabeledDataset& ds) {
    TaskData td;
    td.classification = ds.classification();
    const int ntr = static_cast<int>(ds.train_idx.size());
    const int nte = static_cast<int>(ds.test_idx.size());
    td.Xtr.resize(ntr, ds.dim());
    td.Xte.resize(nte, ds.dim());
    if (td.classification) {
        td.ltr.resize(ntr);
        td.lte.resize(nte);
    } else {
        td.ytr.resize(ntr, 1);
        td.yte.resize(nte, 1);
    }
    for (int i = 0; i < ntr; ++i) {
        td.Xtr.row(i) = ds.X.row(ds.train_idx[i]);
        if (td.classification) td.ltr[i] = ds.labels[ds.train_idx[i]];
        else td.ytr(i, 0) = ds.y[ds.train_idx[i]];
    }
    for (int i = 0; i < nte; ++i) {
        td.Xte.row(i) = ds.X.row(ds.test_idx[i]);
        if (td.classification) td.lte[i] = ds.labels[ds.test_idx[i]];
        else td.yte(i, 0) = ds.y[ds.test_idx[i]];
    }
    return td;
}

}  // namespace detail

inline TaskData load_task_data(const ExperimentConfig& c) {
    if (c.task == "gmm2d") {
        GmmSpec spec;
        spec.seed = c.data_seed;
        return detail::split_views(sample_gmm(spec));
    }
    if (c.task == "mnist") {
        TaskData td;
        td.classification = true;
        const std::string d = c.data_dir + "/mnist/";
        LabeledDataset tr = load_idx(d + "train-images-5k-idx3-ubyte",
                                     d + "train-labels-5k-idx1-ubyte");
        LabeledDataset te = load_idx(d + "t10k-images-1k-idx3-ubyte",
                                     d + "t10k-labels-1k-idx1-ubyte");
        td.Xtr = std::move(tr.X);
        td.ltr = std::move(tr.labels);
        td.Xte = std::move(te.X);
        td.lte = std::move(te.labels);
        return td;
    }
    if (c.task == "auto_mpg")
        return detail::split_views(
            load_auto_mpg(c.data_dir + "/auto_mpg/auto-mpg.data", 0.7, c.data_seed));

    const int n = c.n_train + c.n_test;
    const double frac = static_cast<double>(c.n_train) / n;
    if (c.task == "reg1d_a")
        return detail::split_views(sample_regression_dataset(
            [](const auto& row) { return target_1d_a(row[0]); },
            {{c.domain_lo, c.domain_hi}}, n, c.data_seed, frac));
    if (c.task == "reg1d_b")
        return detail::split_views(sample_regression_dataset(
            [](const auto& row) { return target_1d_b(row[0]); },
            {{c.domain_lo, c.domain_hi}}, n, c.data_seed, frac));
    if (c.task == "reg2d")
        return detail::split_views(sample_regression_dataset(
            [](const auto& row) { return target_2d(row[0], row[1]); },
            {{c.domain_lo, c.domain_hi}, {c.domain_lo, c.domain_hi}}, n, c.data_seed, frac));
    throw std::invalid_argument("unknown task: " + c.task);
}

// ---------------------------------------------------------------------------
// model construction

inline ActivationLayer make_activation_layer(const ExperimentConfig& c) {
    ActivationLayer a;
    Variant var = Variant::DITAC;
    a.kind = act_kind_from_string(c.activation, &var);
    a.lrelu_slope = 0.01;
    if (is_ditac(a.kind)) {
        auto tess = build_tessellation(c.omega_a, c.omega_b, c.n_cells);
        a.cfg = make_activation_config(var, build_basis(tess, c.zero_boundary), c.n_quant,
                                       c.leaky_slope);
        a.train_theta = c.train_theta;
    }
    return a;
}

inline MlpModel build_model(const ExperimentConfig& c, int in_dim, int out_dim) {
    std::vector<int> widths;
    widths.push_back(in_dim);
    for (int h : c.hidden) widths.push_back(h);
    widths.push_back(out_dim);
    MlpModel m = make_mlp(widths, make_activation_layer(c));
    init_params(m, c.seed);
    return m;
}

// ---------------------------------------------------------------------------
// training

namespace detail {

inline double test_metric(MlpModel& m, const TaskData& td) {
    const Eigen::MatrixXd out = forward(m, td.Xte);
    if (td.classification) return top1_accuracy(out, td.lte);
    return r2_score(out.col(0), td.yte.col(0));
}

inline double train_metric(MlpModel& m, const TaskData& td) {
    const Eigen::MatrixXd out = forward(m, td.Xtr);
    if (td.classification) return top1_accuracy(out, td.ltr);
    return r2_score(out.col(0), td.ytr.col(0));
}

}  // namespace detail

inline RunReport run_experiment(const ExperimentConfig& cfg) {
    if ((cfg.iterations > 0) == (cfg.epochs > 0))
        throw std::invalid_argument("config must set exactly one of iterations/epochs > 0");
    if (cfg.batch_size < 1) throw std::invalid_argument("batch_size must be positive");

    const auto t0 = std::chrono::steady_clock::now();
    RunReport rep;
    rep.cfg = cfg;

    const TaskData td = load_task_data(cfg);
    const int in_dim = static_cast<int>(td.Xtr.cols());
    const int out_dim = td.classification ? 10 : 1;
    MlpModel model = build_model(cfg, in_dim, out_dim);
    rep.n_params = count_parameters(model, &rep.n_act_params);

    const bool has_ditac = is_ditac(model.acts.empty() ? ActKind::GELU : model.acts[0].kind);
    SmoothnessPrior prior;
    if (has_ditac && cfg.w_reg > 0.0) {
        const double lam_s = cfg.lambda_smooth > 0.0
                                 ? cfg.lambda_smooth
                                 : (cfg.omega_b - cfg.omega_a) / cfg.n_cells;
        prior = build_prior(model.acts[0].cfg.basis, cfg.lambda_var, lam_s);
    }

    auto refs = param_refs(model);
    AdamState adam = make_adam(refs, cfg.lr, cfg.weight_decay);
    Rng batch_rng(cfg.seed + 1);

    const int ntr = static_cast<int>(td.Xtr.rows());
    const long total_steps =
        cfg.iterations > 0
            ? cfg.iterations
            : static_cast<long>(cfg.epochs) * ((ntr + cfg.batch_size - 1) / cfg.batch_size);
    const long steps_per_epoch = (ntr + cfg.batch_size - 1) / cfg.batch_size;

    std::vector<int> order;
    Eigen::MatrixXd Xb, Yb, dout;
    Eigen::VectorXi Lb;
    ForwardCache cache;
    long step = 0;
    double last_loss = 0.0;
    bool done = false;
    while (!done) {
        // assemble the batch index list for this step
        std::vector<int> idx;
        if (cfg.iterations > 0) {
            idx.resize(cfg.batch_size);
            for (int i = 0; i < cfg.batch_size; ++i)
                idx[i] = static_cast<int>(batch_rng.uniform_index(ntr));
        } else {
            const long pos_in_epoch = step % steps_per_epoch;
            if (pos_in_epoch == 0) order = batch_rng.permutation(ntr);
            const int lo = static_cast<int>(pos_in_epoch) * cfg.batch_size;
            const int hi = std::min(ntr, lo + cfg.batch_size);
            idx.assign(order.begin() + lo, order.begin() + hi);
        }
        const int bs = static_cast<int>(idx.size());
        Xb.resize(bs, in_dim);
        if (td.classification) Lb.resize(bs);
        else Yb.resize(bs, 1);
        for (int i = 0; i < bs; ++i) {
            Xb.row(i) = td.Xtr.row(idx[i]);
            if (td.classification) Lb[i] = td.ltr[idx[i]];
            else Yb(i, 0) = td.ytr(idx[i], 0);
        }

        forward(model, Xb, &cache);
        double loss = td.classification ? cross_entropy_loss(cache.out, Lb, &dout)
                                        : mse_loss(cache.out, Yb, &dout);
        if (has_ditac && cfg.w_reg > 0.0) {
            std::vector<Eigen::VectorXd> thetas;
            for (const auto& a : model.acts) thetas.push_back(a.cfg.theta);
            loss += cfg.w_reg * reg_loss(prior, thetas);
        }
        ++step;
        last_loss = loss;
        if (!std::isfinite(loss)) {
            rep.diverged = true;
            rep.diverged_step = step;
            break;
        }

        MlpGrads g = backward(model, cache, dout);
        for (std::size_t i = 0; i < model.acts.size(); ++i) {
            auto& a = model.acts[i];
            if (!is_ditac(a.kind)) continue;
            if (!a.train_theta) g.dtheta[i].setZero();
            else if (cfg.w_reg > 0.0) g.dtheta[i] += cfg.w_reg * reg_grad(prior, a.cfg.theta);
        }
        adam_step(adam, refs, flatten_grads(model, g));
        for (auto& a : model.acts)
            if (is_ditac(a.kind)) ++a.theta_version;

        const bool at_end = step >= total_steps;
        const bool eval_now =
            cfg.iterations > 0
                ? (cfg.eval_every > 0 && step % cfg.eval_every == 0) || at_end
                : (step % steps_per_epoch == 0) || at_end;
        if (eval_now)
            rep.history.push_back(
                {static_cast<double>(step), loss, detail::test_metric(model, td)});
        done = at_end;
    }
    rep.steps_run = step;
    rep.final_loss = last_loss;
    if (!rep.diverged) {
        rep.final_metric = detail::test_metric(model, td);
        rep.final_train_metric = detail::train_metric(model, td);
        if (!td.classification)
            rep.final_test_mse = mse_loss(forward(model, td.Xte), td.yte);
    }
    finalize_hashes(rep);
    rep.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (!cfg.output_dir.empty()) {
        namespace fs = std::filesystem;
        fs::create_directories(cfg.output_dir);
        std::ofstream cf(cfg.output_dir + "/config.txt");
        cf << config_canonical_string(cfg);
        std::ofstream hist(cfg.output_dir + "/history.csv");
        hist << "step,loss,metric\n";
        for (const auto& row : rep.history)
            hist << static_cast<long>(row[0]) << "," << detail::fmt_g17(row[1]) << ","
                 << detail::fmt_g17(row[2]) << "\n";
        std::ofstream rp(cfg.output_dir + "/report.json");
        rp << report_to_json(rep).dump(2) << "\n";
        save_checkpoint(model, cfg.output_dir + "/checkpoint.json",
                        cfg.output_dir + "/checkpoint.blob");
    }
    return rep;
}

// ---------------------------------------------------------------------------
// lr sweep: argmax by final test metric, divergent runs excluded, ties to the
// lower lr. Throws when every run diverged.

inline std::vector<RunReport> run_sweep(const ExperimentConfig& base,
                                        const std::vector<double>& lrs, std::size_t* best_out) {
    if (lrs.empty()) throw std::invalid_argument("run_sweep: empty lr list");
    std::vector<RunReport> reports;
    for (double lr : lrs) {
        ExperimentConfig c = base;
        c.lr = lr;
        if (!base.output_dir.empty())
            c.output_dir = base.output_dir + "/lr_" + detail::fmt_g17(lr);
        reports.push_back(run_experiment(c));
    }
    std::size_t best = reports.size();
    for (std::size_t i = 0; i < reports.size(); ++i) {
        if (reports[i].diverged) continue;
        if (best == reports.size() || reports[i].final_metric > reports[best].final_metric ||
            (reports[i].final_metric == reports[best].final_metric &&
             reports[i].cfg.lr < reports[best].cfg.lr))
            best = i;
    }
    if (best == reports.size()) throw std::runtime_error("run_sweep: all runs diverged");
    if (best_out) *best_out = best;
    return reports;
}

// comparison grid over activation kinds (Table-2-shaped CSV: one row per
// activation with its final test metric)
inline std::vector<RunReport> run_comparison_table(const ExperimentConfig& base,
                                                   const std::vector<std::string>& kinds,
                                                   const std::string& out_csv) {
    std::vector<RunReport> reports;
    std::ofstream f(out_csv);
    if (!f) throw std::runtime_error("run_comparison_table: cannot open " + out_csv);
    f << "activation,final_metric,final_loss,diverged\n";
    for (const auto& kind : kinds) {
        ExperimentConfig c = base;
        set_config_key(c, "activation", kind);
        if (!base.output_dir.empty()) c.output_dir = base.output_dir + "/" + kind;
        reports.push_back(run_experiment(c));
        const RunReport& r = reports.back();
        f << kind << "," << detail::fmt_g17(r.final_metric) << ","
          << detail::fmt_g17(r.final_loss) << "," << (r.diverged ? 1 : 0) << "\n";
    }
    return reports;
}

// ---------------------------------------------------------------------------
// LUT export: one frozen table per DiTAC instance

inline std::vector<std::string> export_lut_files(MlpModel& model, const std::string& out_prefix,
                                                 int n_quant_override = 0) {
    std::vector<std::string> paths;
    for (std::size_t i = 0; i < model.acts.size(); ++i) {
        auto& a = model.acts[i];
        if (!is_ditac(a.kind)) continue;
        ActivationConfig cfg = a.cfg;
        if (n_quant_override > 0) cfg.n_quant = n_quant_override;
        if (cfg.n_quant <= 0) cfg.n_quant = 256;
        const LookupTable lut = freeze_for_inference(cfg);
        const std::string path = out_prefix + "_act" + std::to_string(i) + ".lut.json";
        std::ofstream f(path);
        f << lut_to_json(lut).dump() << "\n";
        paths.push_back(path);
    }
    if (paths.empty())
        throw std::invalid_argument("export_lut_files: checkpoint has no DiTAC layers");
    return paths;
}

// ---------------------------------------------------------------------------
// plot data emission (CSV only, no rendering)

inline void emit_plot_data(MlpModel& model, const ExperimentConfig& cfg,
                           const std::string& what, const std::string& out_path) {
    std::ofstream f(out_path);
    if (!f) throw std::runtime_error("emit_plot_data: cannot open " + out_path);
    if (what == "learned_af_curve") {
        bool any = false;
        f << "x";
        for (std::size_t i = 0; i < model.acts.size(); ++i)
            if (is_ditac(model.acts[i].kind)) {
                f << ",act" << i;
                any = true;
            }
        f << "\n";
        if (!any) throw std::invalid_argument("emit_plot_data: no DiTAC layers");
        const double lo = cfg.omega_a - 2.0, hi = cfg.omega_b + 2.0;
        for (int k = 0; k < 512; ++k) {
            const double x = lo + (hi - lo) * k / 511.0;
            f << detail::fmt_g17(x);
            for (auto& a : model.acts)
                if (is_ditac(a.kind)) f << "," << detail::fmt_g17(activate_exact(a.cfg, x));
            f << "\n";
        }
        return;
    }
    if (what == "decision_boundary_grid") {
        const TaskData td = load_task_data(cfg);
        if (!td.classification || td.Xtr.cols() != 2)
            throw std::invalid_argument("decision_boundary_grid needs a 2D classification task");
        const double x0 = td.Xtr.col(0).minCoeff(), x1 = td.Xtr.col(0).maxCoeff();
        const double y0 = td.Xtr.col(1).minCoeff(), y1 = td.Xtr.col(1).maxCoeff();
        f << "x,y,label\n";
        Eigen::MatrixXd P(200, 2);
        for (int iy = 0; iy < 200; ++iy) {
            for (int ix = 0; ix < 200; ++ix)
                P.row(ix) << x0 + (x1 - x0) * ix / 199.0, y0 + (y1 - y0) * iy / 199.0;
            const Eigen::MatrixXd out = forward(model, P);
            for (int ix = 0; ix < 200; ++ix) {
                Eigen::Index arg;
                out.row(ix).maxCoeff(&arg);
                f << detail::fmt_g17(P(ix, 0)) << "," << detail::fmt_g17(P(ix, 1)) << ","
                  << arg << "\n";
            }
        }
        return;
    }
    if (what == "regression_surface") {
        if (task_is_classification(cfg.task))
            throw std::invalid_argument("regression_surface needs a regression task");
        if (cfg.task == "reg2d") {
            f << "x,y,pred,target\n";
            Eigen::MatrixXd P(100, 2);
            for (int iy = 0; iy < 100; ++iy) {
                const double y = cfg.domain_lo + (cfg.domain_hi - cfg.domain_lo) * iy / 99.0;
                for (int ix = 0; ix < 100; ++ix)
                    P.row(ix) << cfg.domain_lo +
                                     (cfg.domain_hi - cfg.domain_lo) * ix / 99.0,
                        y;
                const Eigen::MatrixXd out = forward(model, P);
                for (int ix = 0; ix < 100; ++ix)
                    f << detail::fmt_g17(P(ix, 0)) << "," << detail::fmt_g17(P(ix, 1)) << ","
                      << detail::fmt_g17(out(ix, 0)) << ","
                      << detail::fmt_g17(target_2d(P(ix, 0), P(ix, 1))) << "\n";
            }
            return;
        }
        f << "x,pred,target\n";
        const TaskData td = load_task_data(cfg);
        Eigen::MatrixXd P(512, 1);
        const double lo = td.Xtr.col(0).minCoeff(), hi = td.Xtr.col(0).maxCoeff();
        for (int k = 0; k < 512; ++k) P(k, 0) = lo + (hi - lo) * k / 511.0;
        const Eigen::MatrixXd out = forward(model, P);
        for (int k = 0; k < 512; ++k) {
            double target = 0.0;
            if (cfg.task == "reg1d_a") target = target_1d_a(P(k, 0));
            else if (cfg.task == "reg1d_b") target = target_1d_b(P(k, 0));
            f << detail::fmt_g17(P(k, 0)) << "," << detail::fmt_g17(out(k, 0)) << ","
              << detail::fmt_g17(target) << "\n";
        }
        return;
    }
    throw std::invalid_argument("emit_plot_data: unknown plot kind: " + what);
}

}  // namespace ditac
