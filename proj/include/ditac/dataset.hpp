// Synthetic dataset generation (NIW-GMM, analytic regression targets) and
// file loaders (MNIST IDX, Auto-MPG).
#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ditac/rng.hpp"

namespace ditac {

struct LabeledDataset {
    Eigen::MatrixXd X;       // n x dim
    Eigen::VectorXd y;       // regression targets; empty for classification
    Eigen::VectorXi labels;  // class labels; empty for regression
    std::vector<int> train_idx, test_idx;

    int n() const { return static_cast<int>(X.rows()); }
    int dim() const { return static_cast<int>(X.cols()); }
    bool classification() const { return labels.size() > 0; }
};

// disjoint, exhaustive seeded split with |train| = round(frac * n)
inline void make_split(LabeledDataset& ds, double frac, std::uint64_t seed) {
    Rng rng(seed);
    const int n = ds.n();
    auto perm = rng.permutation(n);
    const int ntr = static_cast<int>(std::lround(frac * n));
    ds.train_idx.assign(perm.begin(), perm.begin() + ntr);
    ds.test_idx.assign(perm.begin() + ntr, perm.end());
}

// ------------------------------------------------------------------ 2D GMM

struct GmmSpec {
    int n_components = 10;
    Eigen::Vector2d mu0 = Eigen::Vector2d::Zero();
    double kappa0 = 0.05;
    double nu0 = 5.0;
    Eigen::Matrix2d psi = 0.5 * Eigen::Matrix2d::Identity();
    double dirichlet_alpha = 1.0;
    int n_points = 5000;
    double split = 0.7;
    std::uint64_t seed = 0;
};

struct GmmComponents {
    std::vector<Eigen::Vector2d> mus;
    std::vector<Eigen::Matrix2d> chols;  // lower Cholesky factors of Sigma_k
    std::vector<double> weights;
};

// Sigma_k ~ InverseWishart(nu0, Psi) via the Bartlett decomposition of a
// Wishart(nu0, Psi^{-1}) draw; mu_k ~ N(mu0, Sigma_k/kappa0); weights from
// a symmetric Dirichlet. Draw order is fixed (all Sigma_k/mu_k first, then
// the weights) so a seed fully determines the mixture.
inline GmmComponents draw_gmm_components(const GmmSpec& spec, Rng& rng) {
    Eigen::LLT<Eigen::Matrix2d> psi_llt(spec.psi);
    if (psi_llt.info() != Eigen::Success)
        throw std::invalid_argument("sample_gmm: psi must be SPD");
    if (!(spec.nu0 > 3.0))  // dim + 1
        throw std::invalid_argument("sample_gmm: nu0 must exceed dim + 1");

    const Eigen::Matrix2d psi_inv = spec.psi.inverse();
    const Eigen::Matrix2d L = Eigen::LLT<Eigen::Matrix2d>(psi_inv).matrixL();

    GmmComponents comps;
    comps.mus.resize(spec.n_components);
    comps.chols.resize(spec.n_components);
    for (int k = 0; k < spec.n_components; ++k) {
        Eigen::Matrix2d A = Eigen::Matrix2d::Zero();
        A(0, 0) = std::sqrt(rng.chi_square(spec.nu0));
        A(1, 1) = std::sqrt(rng.chi_square(spec.nu0 - 1.0));
        A(1, 0) = rng.normal();
        const Eigen::Matrix2d LA = L * A;
        const Eigen::Matrix2d W = LA * LA.transpose();
        const Eigen::Matrix2d sigma = W.inverse();
        comps.chols[k] = Eigen::LLT<Eigen::Matrix2d>(sigma).matrixL();
        const Eigen::Matrix2d mu_chol =
            Eigen::LLT<Eigen::Matrix2d>((sigma / spec.kappa0).eval()).matrixL();
        Eigen::Vector2d z(rng.normal(), rng.normal());
        comps.mus[k] = spec.mu0 + mu_chol * z;
    }
    comps.weights = rng.dirichlet(spec.dirichlet_alpha, spec.n_components);
    return comps;
}

inline LabeledDataset sample_gmm(const GmmSpec& spec) {
    Rng rng(spec.seed);
    const GmmComponents comps = draw_gmm_components(spec, rng);
    const auto& mus = comps.mus;
    const auto& chols = comps.chols;
    const auto& weights = comps.weights;

    LabeledDataset ds;
    ds.X.resize(spec.n_points, 2);
    ds.labels.resize(spec.n_points);
    for (int i = 0; i < spec.n_points; ++i) {
        const double u = rng.uniform();
        int k = 0;
        double acc = weights[0];
        while (u >= acc && k + 1 < spec.n_components) acc += weights[++k];
        Eigen::Vector2d z(rng.normal(), rng.normal());
        ds.X.row(i) = (mus[k] + chols[k] * z).transpose();
        ds.labels[i] = k;
    }
    make_split(ds, spec.split, spec.seed + 1);
    return ds;
}

// -------------------------------------------------------- analytic targets

inline double target_1d_a(double x) { return std::sin(std::exp(6.0 * x)); }

inline double target_2d(double x, double y) {
    return 0.4 * std::sin(9.0 * x * y) + 0.1 * std::sin(-9.0 * x + 11.0 * y) +
           0.15 * std::sin(3.0 * x + 13.0 * y) + 0.15 * std::sin(9.0 * x + 9.0 * y) +
           0.1 * std::sin(13.0 * x + 5.0 * y) + 0.1 * std::sin(3.0 * x + 19.0 * y);
}

inline double target_1d_b(double x) {
    return 0.4 * std::sin(19.0 * x) + 0.2 * std::sin(23.0 * x) + 0.3 * std::sin(29.0 * x) +
           0.1 * std::sin(31.0 * x);
}

template <typename Fn>
LabeledDataset sample_regression_dataset(Fn&& fn, const std::vector<std::pair<double, double>>& domain,
                                         int n, std::uint64_t seed, double train_frac = 0.7) {
    const int dim = static_cast<int>(domain.size());
    if (dim == 0) throw std::invalid_argument("sample_regression_dataset: empty domain");
    for (const auto& [lo, hi] : domain)
        if (!(lo < hi)) throw std::invalid_argument("sample_regression_dataset: empty domain box");
    Rng rng(seed);
    LabeledDataset ds;
    ds.X.resize(n, dim);
    ds.y.resize(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < dim; ++j) ds.X(i, j) = rng.uniform(domain[j].first, domain[j].second);
        ds.y[i] = fn(ds.X.row(i));
    }
    make_split(ds, train_frac, seed + 1);
    return ds;
}

// ------------------------------------------------------------- MNIST (IDX)

namespace detail {

inline std::uint32_t read_be_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

inline std::vector<unsigned char> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace detail

// Big-endian IDX pair per the MNIST site layout: images magic 0x00000803
// with [count, rows, cols] dims, labels magic 0x00000801 with [count].
// Pixels scale to [0,1] and flatten row-major to rows*cols features.
inline LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw std::runtime_error("load_idx: cannot open " + images_path);
    if (detail::read_be_u32(img) != 0x00000803u)
        throw std::runtime_error("load_idx: bad image magic in " + images_path);
    const std::uint32_t n = detail::read_be_u32(img);
    const std::uint32_t rows = detail::read_be_u32(img);
    const std::uint32_t cols = detail::read_be_u32(img);

    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw std::runtime_error("load_idx: cannot open " + labels_path);
    if (detail::read_be_u32(lab) != 0x00000801u)
        throw std::runtime_error("load_idx: bad label magic in " + labels_path);
    const std::uint32_t nl = detail::read_be_u32(lab);
    if (n != nl)
        throw std::runtime_error("load_idx: image/label count mismatch: " + std::to_string(n) +
                                 " vs " + std::to_string(nl));

    const std::size_t want = std::size_t(n) * rows * cols;
    std::vector<unsigned char> pix(want);
    img.read(reinterpret_cast<char*>(pix.data()), static_cast<std::streamsize>(want));
    if (static_cast<std::size_t>(img.gcount()) != want)
        throw std::runtime_error("load_idx: truncated image file, expected " +
                                 std::to_string(want + 16) + " bytes, got " +
                                 std::to_string(16 + img.gcount()));
    std::vector<unsigned char> lv(n);
    lab.read(reinterpret_cast<char*>(lv.data()), n);
    if (static_cast<std::size_t>(lab.gcount()) != n)
        throw std::runtime_error("load_idx: truncated label file, expected " +
                                 std::to_string(std::size_t(n) + 8) + " bytes, got " +
                                 std::to_string(8 + lab.gcount()));

    LabeledDataset ds;
    ds.X.resize(n, rows * cols);
    ds.labels.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        for (std::uint32_t p = 0; p < rows * cols; ++p)
            ds.X(i, p) = pix[std::size_t(i) * rows * cols + p] / 255.0;
        ds.labels[i] = lv[i];
    }
    return ds;
}

// ---------------------------------------------------------------- Auto-MPG

// Whitespace-delimited UCI layout: mpg cyl disp horsepower weight accel year
// origin "name". Horsepower '?' rows are dropped. The single feature is
// horsepower standardized with train-split statistics; the target is raw mpg.
inline LabeledDataset load_auto_mpg(const std::string& csv_path, double split = 0.7,
                                    std::uint64_t seed = 0) {
    std::ifstream in(csv_path);
    if (!in) throw std::runtime_error("load_auto_mpg: cannot open " + csv_path);
    std::vector<double> mpg, hp;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        std::istringstream ss(line);
        std::string f[8];
        for (auto& t : f) {
            if (!(ss >> t))
                throw std::runtime_error("load_auto_mpg: malformed row at line " +
                                         std::to_string(lineno));
        }
        if (f[3] == "?") continue;  // known missing-horsepower marker
        try {
            const double m = std::stod(f[0]);
            const double h = std::stod(f[3]);
            mpg.push_back(m);
            hp.push_back(h);
        } catch (const std::exception&) {
            throw std::runtime_error("load_auto_mpg: malformed row at line " +
                                     std::to_string(lineno));
        }
    }
    LabeledDataset ds;
    const int n = static_cast<int>(mpg.size());
    if (n == 0) {
        std::cerr << "warning: load_auto_mpg produced an empty dataset (all rows missing)\n";
        ds.X.resize(0, 1);
        ds.y.resize(0);
        return ds;
    }
    ds.X.resize(n, 1);
    ds.y.resize(n);
    for (int i = 0; i < n; ++i) {
        ds.X(i, 0) = hp[i];
        ds.y[i] = mpg[i];
    }
    make_split(ds, split, seed);
    double mean = 0.0;
    for (int i : ds.train_idx) mean += ds.X(i, 0);
    mean /= static_cast<double>(ds.train_idx.size());
    double var = 0.0;
    for (int i : ds.train_idx) var += (ds.X(i, 0) - mean) * (ds.X(i, 0) - mean);
    const double sd = std::sqrt(var / static_cast<double>(ds.train_idx.size()));
    ds.X.col(0) = (ds.X.col(0).array() - mean) / (sd > 0 ? sd : 1.0);
    return ds;
}

// --------------------------------------------------------------- CSV export

inline void export_dataset_csv(const LabeledDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_dataset_csv: cannot open " + path);
    out.precision(17);
    for (int j = 0; j < ds.dim(); ++j) out << "x" << j << ",";
    out << (ds.classification() ? "label" : "y") << "\n";
    for (int i = 0; i < ds.n(); ++i) {
        for (int j = 0; j < ds.dim(); ++j) out << ds.X(i, j) << ",";
        if (ds.classification())
            out << ds.labels[i] << "\n";
        else
            out << ds.y[i] << "\n";
    }
}

}  // namespace ditac
