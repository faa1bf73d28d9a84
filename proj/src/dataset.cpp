#include "ancl/dataset.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cfenv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <numeric>

#include "ancl/kernels.hpp"
#include "ancl/rng.hpp"

namespace ancl {

void ClassSpec::validate() const {
    if (num_classes < 1 || dim < 1) throw ContractError("ClassSpec: empty spec");
    if (num_classes > dim)
        throw DimensionError("ClassSpec: num_classes exceeds dim (" +
                             std::to_string(num_classes) + " > " + std::to_string(dim) + ")");
    if (means.rows() != dim || means.cols() != num_classes)
        throw DimensionError("ClassSpec: mean matrix shape mismatch");
    if (cov_scale < 0.0) throw ContractError("ClassSpec: negative covariance scale");
}

Mat make_class_means(int num_classes, int dim, std::uint64_t seed) {
    if (num_classes < 1 || dim < 1) throw ContractError("make_class_means: empty shape");
    if (num_classes > dim) throw DimensionError("make_class_means: num_classes > dim");
    Mat g(dim, num_classes);
    auto rng = make_rng(seed, {kStreamInit});
    fill_gaussian(g, 1.0, rng);
    Eigen::BDCSVD<Mat> svd(g, Eigen::ComputeThinU);
    return svd.matrixU().leftCols(num_classes);
}

LabeledDataset sample_dataset(const ClassSpec& spec, int n_per_class, std::uint64_t seed) {
    spec.validate();
    if (n_per_class < 1) throw ContractError("sample_dataset: n_per_class < 1");
    const int n = spec.num_classes * n_per_class;
    LabeledDataset ds;
    ds.spec = spec;
    ds.X.resize(n, spec.dim);
    ds.y.resize(n);
    const double sd = std::sqrt(spec.cov_scale);
    auto rng = make_rng(seed, {kStreamData});
    std::normal_distribution<double> dist(0.0, 1.0);
    Eigen::Index row = 0;
    for (int c = 0; c < spec.num_classes; ++c) {
        for (int i = 0; i < n_per_class; ++i, ++row) {
            double* out = ds.X.data() + row * spec.dim;
            const double* mu = spec.means.data();  // row-major d x C: entry (j, c)
            for (int j = 0; j < spec.dim; ++j)
                out[j] = mu[j * spec.num_classes + c] + sd * dist(rng);
            ds.y[row] = static_cast<std::int32_t>(c);
        }
    }
    return ds;
}

int AugmentationSpec::mask_count(int dim) const {
    if (mask_fraction < 0.0 || mask_fraction > 1.0)
        throw ContractError("AugmentationSpec: mask_fraction outside [0,1]");
    return static_cast<int>(std::nearbyint(mask_fraction * dim));
}

namespace {

void augment_into(const double* x, double* out, int d, const Vec& fill, int count,
                  std::vector<int>& idx, std::mt19937_64& rng) {
    std::memcpy(out, x, sizeof(double) * d);
    if (count == 0) return;
    idx.resize(d);
    std::iota(idx.begin(), idx.end(), 0);
    // partial Fisher-Yates: the first `count` entries form the mask
    for (int i = 0; i < count; ++i) {
        std::uniform_int_distribution<int> pick(i, d - 1);
        std::swap(idx[i], idx[pick(rng)]);
        out[idx[i]] = fill(idx[i]);
    }
}

}  // namespace

Vec augment(const Vec& x, const AugmentationSpec& aug, std::mt19937_64& rng) {
    const int d = static_cast<int>(x.size());
    if (aug.fill.size() != d) throw DimensionError("augment: fill vector length mismatch");
    Vec out(d);
    std::vector<int> idx;
    augment_into(x.data(), out.data(), d, aug.fill, aug.mask_count(d), idx, rng);
    return out;
}

Mat augment_batch(const Mat& X, const AugmentationSpec& aug, std::uint64_t base_seed) {
    const int d = static_cast<int>(X.cols());
    if (aug.fill.size() != d) throw DimensionError("augment_batch: fill vector length mismatch");
    const int count = aug.mask_count(d);
    Mat out(X.rows(), d);
#pragma omp parallel if (kernels::parallel_enabled())
    {
        std::vector<int> idx;
#pragma omp for schedule(static)
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            auto rng = make_rng(derive_seed(base_seed, {static_cast<std::uint64_t>(i)}));
            augment_into(X.data() + i * d, out.data() + i * d, d, aug.fill, count, idx, rng);
        }
    }
    return out;
}

double estimate_aug_noise(const LabeledDataset& ds, const AugmentationSpec& aug, int draws,
                          std::uint64_t seed) {
    if (draws < 1) throw ContractError("estimate_aug_noise: draws < 1");
    const int d = static_cast<int>(ds.dim());
    double total = 0.0;
    for (int t = 0; t < draws; ++t) {
        Mat view = augment_batch(ds.X, aug,
                                 derive_seed(seed, {kStreamNoiseEstimate,
                                                    static_cast<std::uint64_t>(t)}));
        view -= ds.X;
        total += view.squaredNorm() / static_cast<double>(ds.n());
    }
    return total / (draws * static_cast<double>(d));
}

Mat WhiteningTransform::apply(const Mat& X) const {
    if (X.cols() != mean.size()) throw DimensionError("WhiteningTransform: dim mismatch");
    Mat centered = X.rowwise() - mean.transpose();
    Mat out;
    kernels::gemm_nn(centered, transform, out);
    return out;
}

WhiteningTransform WhiteningTransform::identity(int dim) {
    WhiteningTransform t;
    t.mean = Vec::Zero(dim);
    t.transform = Mat::Identity(dim, dim);
    return t;
}

std::pair<LabeledDataset, WhiteningTransform> whiten(const LabeledDataset& ds, double ridge) {
    const Eigen::Index n = ds.n(), d = ds.dim();
    if (n < 2) throw DegenerateDataError("whiten: need at least 2 samples");
    Vec mean = ds.X.colwise().mean();
    Mat centered = ds.X.rowwise() - mean.transpose();
    Mat cov;
    kernels::gemm_tn(centered, centered, cov);
    cov /= static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Mat> eig(cov);
    if (eig.info() != Eigen::Success) throw DegenerateDataError("whiten: eigensolver failed");
    Vec evals = eig.eigenvalues();
    int clamped = 0;
    for (Eigen::Index i = 0; i < d; ++i) {
        if (evals(i) < ridge) {
            evals(i) = ridge;
            ++clamped;
        }
    }
    if (clamped > 0)
        std::cerr << "whiten: clamped " << clamped << " eigenvalues below " << ridge
                  << " (rank-deficient data)\n";
    Mat V = eig.eigenvectors();
    Mat scaled = V * evals.cwiseSqrt().cwiseInverse().asDiagonal();
    WhiteningTransform t;
    t.mean = mean;
    t.transform.resize(d, d);
    kernels::gemm_nt(scaled, V, t.transform);  // V diag(l^-1/2) V^T
    LabeledDataset out;
    out.spec = ds.spec;
    out.y = ds.y;
    out.whitened = true;
    kernels::gemm_nn(centered, t.transform, out.X);
    return {std::move(out), std::move(t)};
}

LabeledDataset make_downstream(const ClassSpec& pretrain, DownstreamMode mode, double sigma,
                               int n_per_class, std::uint64_t seed) {
    pretrain.validate();
    if (pretrain.num_classes != 3)
        throw ContractError("make_downstream: protocol is defined for 3 pretraining classes");
    if (sigma <= 0.0) throw ContractError("make_downstream: sigma must be positive");
    const int d = pretrain.dim;
    Mat means(d, 3);
    if (mode == DownstreamMode::kInterpolate) {
        const int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
        for (int c = 0; c < 3; ++c) {
            Vec m = 0.5 * (pretrain.means.col(pairs[c][0]) + pretrain.means.col(pairs[c][1]));
            means.col(c) = m / m.norm();
        }
    } else {
        Vec global = pretrain.means.rowwise().mean();
        for (int c = 0; c < 3; ++c) {
            Vec m = 2.0 * pretrain.means.col(c) - global;
            means.col(c) = m / m.norm();
        }
    }
    ClassSpec spec{3, d, std::move(means), sigma * sigma};
    return sample_dataset(spec, n_per_class, derive_seed(seed, {kStreamDownstream}));
}

namespace {

constexpr char kDatasetMagic[] = "ANCLDS1";

template <typename T>
void write_pod(std::ofstream& f, T v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& f) {
    T v;
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!f) throw IoError("dataset file truncated");
    return v;
}

}  // namespace

void save_dataset(const std::string& path, const LabeledDataset& ds) {
    static_assert(std::endian::native == std::endian::little,
                  "dataset format is little-endian");
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path);
    f.write(kDatasetMagic, 7);
    write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(ds.n()));
    write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(ds.dim()));
    write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(ds.spec.num_classes));
    write_pod<std::uint8_t>(f, ds.whitened ? 1 : 0);
    f.write(reinterpret_cast<const char*>(ds.X.data()), sizeof(double) * ds.X.size());
    f.write(reinterpret_cast<const char*>(ds.y.data()), sizeof(std::int32_t) * ds.y.size());
    if (!f) throw IoError("write failed: " + path);
}

LabeledDataset load_dataset(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    char magic[7];
    f.read(magic, 7);
    if (!f || std::memcmp(magic, kDatasetMagic, 7) != 0)
        throw IoError("not a dataset file (bad magic): " + path);
    const auto n = read_pod<std::uint32_t>(f);
    const auto d = read_pod<std::uint32_t>(f);
    const auto c = read_pod<std::uint32_t>(f);
    const auto wh = read_pod<std::uint8_t>(f);
    LabeledDataset ds;
    ds.X.resize(n, d);
    ds.y.resize(n);
    f.read(reinterpret_cast<char*>(ds.X.data()), sizeof(double) * ds.X.size());
    f.read(reinterpret_cast<char*>(ds.y.data()), sizeof(std::int32_t) * ds.y.size());
    if (!f) throw IoError("dataset file truncated: " + path);
    ds.whitened = wh != 0;
    ds.spec.num_classes = static_cast<int>(c);
    ds.spec.dim = static_cast<int>(d);
    ds.spec.cov_scale = 0.0;  // generator metadata lives in the config echo
    ds.spec.means = Mat::Zero(d, c);
    return ds;
}

void export_dataset_csv(const std::string& path, const LabeledDataset& ds) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path);
    char buf[32];
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
        for (Eigen::Index j = 0; j < ds.dim(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", ds.X(i, j));
            f << buf << ',';
        }
        f << ds.y[i] << '\n';
    }
    if (!f) throw IoError("write failed: " + path);
}

}  // namespace ancl
