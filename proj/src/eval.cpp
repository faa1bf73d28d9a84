#include "ancl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "ancl/kernels.hpp"
#include "ancl/rng.hpp"
#include "ancl/theory.hpp"

namespace ancl {

Mat extract_features(const Model& m, const LabeledDataset& ds, bool* collapsed) {
    Mat e, z;
    kernels::gemm_nt(ds.X, m.W_enc, e);
    kernels::gemm_nt(e, m.W_proj, z);
    const int degenerate = kernels::normalize_rows(z);
    if (collapsed) *collapsed = degenerate > 0;
    return z;
}

double knn_accuracy(const Mat& train_feats, const std::vector<std::int32_t>& train_labels,
                    const Mat& test_feats, const std::vector<std::int32_t>& test_labels, int k) {
    if (test_feats.rows() != static_cast<Eigen::Index>(test_labels.size()))
        throw DimensionError("knn_accuracy: test labels size mismatch");
    const int num_classes =
        1 + *std::max_element(train_labels.begin(), train_labels.end());
    auto pred = kernels::knn_predict(train_feats, train_labels, test_feats, k, num_classes);
    Eigen::Index correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (pred[i] == test_labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(pred.size());
}

namespace {

// Multinomial logistic regression: weights are C x (p+1) with an appended
// unregularized bias column. Deterministic L-BFGS (m = 10) from zero init
// with Armijo backtracking.
struct SoftmaxProblem {
    const Mat& X;  // n x p
    const std::vector<std::int32_t>& y;
    int C;
    double lambda;

    double eval(const Mat& W, Mat& grad) const {
        const Eigen::Index n = X.rows(), p = X.cols();
        Mat logits;                       // n x C
        kernels::gemm_nt(X, W.leftCols(p), logits);
        logits.rowwise() += W.col(p).transpose();
        double nll = 0.0;
        Mat delta(n, C);  // softmax - onehot
        for (Eigen::Index i = 0; i < n; ++i) {
            const double mx = logits.row(i).maxCoeff();
            double z = 0.0;
            for (int c = 0; c < C; ++c) z += std::exp(logits(i, c) - mx);
            nll += -(logits(i, y[i]) - mx) + std::log(z);
            for (int c = 0; c < C; ++c)
                delta(i, c) = std::exp(logits(i, c) - mx) / z - (y[i] == c ? 1.0 : 0.0);
        }
        grad.resize(C, p + 1);
        Mat gw;
        kernels::gemm_tn(delta, X, gw);
        grad.leftCols(p) = gw / static_cast<double>(n) + lambda * W.leftCols(p);
        grad.col(p) = delta.colwise().sum().transpose() / static_cast<double>(n);
        return nll / static_cast<double>(n) + 0.5 * lambda * W.leftCols(p).squaredNorm();
    }
};

Mat softmax_fit(const Mat& X, const std::vector<std::int32_t>& y, int C, double lambda,
                double grad_tol = 1e-6, int max_iters = 500) {
    SoftmaxProblem prob{X, y, C, lambda};
    const Eigen::Index p = X.cols();
    Mat W = Mat::Zero(C, p + 1);
    Mat grad;
    double f = prob.eval(W, grad);
    constexpr int kMem = 10;
    std::vector<Mat> s_hist, y_hist;
    std::vector<double> rho;
    bool converged = false;
    for (int it = 0; it < max_iters; ++it) {
        if (grad.norm() < grad_tol) {
            converged = true;
            break;
        }
        // two-loop recursion
        Mat q = grad;
        std::vector<double> a(s_hist.size());
        for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
            a[i] = rho[i] * s_hist[i].cwiseProduct(q).sum();
            q -= a[i] * y_hist[i];
        }
        if (!s_hist.empty()) {
            const Mat& sl = s_hist.back();
            const Mat& yl = y_hist.back();
            q *= sl.cwiseProduct(yl).sum() / yl.squaredNorm();
        }
        for (std::size_t i = 0; i < s_hist.size(); ++i) {
            const double b = rho[i] * y_hist[i].cwiseProduct(q).sum();
            q += (a[i] - b) * s_hist[i];
        }
        Mat dir = -q;
        double slope = grad.cwiseProduct(dir).sum();
        if (slope >= 0.0) {  // fall back to steepest descent
            dir = -grad;
            slope = -grad.squaredNorm();
        }
        double t = 1.0;
        Mat W_new, g_new;
        double f_new = f;
        for (int ls = 0; ls < 50; ++ls) {
            W_new = W + t * dir;
            f_new = prob.eval(W_new, g_new);
            if (f_new <= f + 1e-4 * t * slope) break;
            t *= 0.5;
        }
        Mat s = W_new - W;
        Mat yv = g_new - grad;
        const double sy = s.cwiseProduct(yv).sum();
        if (sy > 1e-12 * s.norm() * yv.norm()) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(yv));
            rho.push_back(1.0 / sy);
            if (s_hist.size() > kMem) {
                s_hist.erase(s_hist.begin());
                y_hist.erase(y_hist.begin());
                rho.erase(rho.begin());
            }
        }
        W = std::move(W_new);
        grad = std::move(g_new);
        f = f_new;
    }
    if (!converged && grad.norm() >= grad_tol)
        std::cerr << "linear_probe: L-BFGS stopped at |g| = " << grad.norm()
                  << " after " << max_iters << " iterations\n";
    return W;
}

double probe_accuracy(const Mat& W, const Mat& X, const std::vector<std::int32_t>& y) {
    const Eigen::Index p = X.cols();
    Mat logits;
    kernels::gemm_nt(X, W.leftCols(p), logits);
    logits.rowwise() += W.col(p).transpose();
    Eigen::Index correct = 0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        int best = 0;
        for (int c = 1; c < static_cast<int>(W.rows()); ++c)
            if (logits(i, c) > logits(i, best)) best = c;  // tie keeps smaller class
        if (best == y[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(X.rows());
}

}  // namespace

double linear_probe(const Mat& train_feats, const std::vector<std::int32_t>& train_labels,
                    const Mat& test_feats, const std::vector<std::int32_t>& test_labels,
                    double l2_reg, std::uint64_t seed) {
    if (train_feats.rows() != static_cast<Eigen::Index>(train_labels.size()))
        throw DimensionError("linear_probe: labels size mismatch");
    if (train_feats.rows() < 2) throw ContractError("linear_probe: not enough samples");
    const int C = 1 + *std::max_element(train_labels.begin(), train_labels.end());

    double reg = l2_reg;
    if (reg < 0.0) {
        // held-out 10% split to pick the regularizer, then refit on all
        const Eigen::Index n = train_feats.rows();
        std::vector<Eigen::Index> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        auto rng = make_rng(seed, {kStreamEval, 77});
        std::shuffle(perm.begin(), perm.end(), rng);
        const Eigen::Index n_val = std::max<Eigen::Index>(1, n / 10);
        Mat val_x(n_val, train_feats.cols()), fit_x(n - n_val, train_feats.cols());
        std::vector<std::int32_t> val_y(n_val), fit_y(n - n_val);
        for (Eigen::Index i = 0; i < n_val; ++i) {
            val_x.row(i) = train_feats.row(perm[i]);
            val_y[i] = train_labels[perm[i]];
        }
        for (Eigen::Index i = n_val; i < n; ++i) {
            fit_x.row(i - n_val) = train_feats.row(perm[i]);
            fit_y[i - n_val] = train_labels[perm[i]];
        }
        double best_acc = -1.0;
        for (double cand : {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2}) {
            Mat W = softmax_fit(fit_x, fit_y, C, cand);
            const double acc = probe_accuracy(W, val_x, val_y);
            if (acc > best_acc) {
                best_acc = acc;
                reg = cand;
            }
        }
    }
    Mat W = softmax_fit(train_feats, train_labels, C, reg);
    return probe_accuracy(W, test_feats, test_labels);
}

bool detect_collapse(const Mat& feats, const std::vector<std::int32_t>& labels,
                     const CollapseThresholds& thresholds, std::uint64_t seed) {
    EmpiricalVariances v = empirical_variances(feats, labels);
    if (!v.ratio_valid || v.St < thresholds.st_tol) return true;
    const int C = 1 + *std::max_element(labels.begin(), labels.end());
    const Eigen::Index n = feats.rows();
    std::vector<Eigen::Index> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    auto rng = make_rng(seed, {kStreamEval, 13});
    std::shuffle(perm.begin(), perm.end(), rng);
    const Eigen::Index n_val = std::max<Eigen::Index>(1, n / 10);
    Mat val_x(n_val, feats.cols()), fit_x(n - n_val, feats.cols());
    std::vector<std::int32_t> val_y(n_val), fit_y(n - n_val);
    for (Eigen::Index i = 0; i < n_val; ++i) {
        val_x.row(i) = feats.row(perm[i]);
        val_y[i] = labels[perm[i]];
    }
    for (Eigen::Index i = n_val; i < n; ++i) {
        fit_x.row(i - n_val) = feats.row(perm[i]);
        fit_y[i - n_val] = labels[perm[i]];
    }
    const int k = std::min<int>(thresholds.knn_k, static_cast<int>(fit_x.rows()));
    const double acc = knn_accuracy(fit_x, fit_y, val_x, val_y, k);
    return acc <= thresholds.knn_factor / static_cast<double>(C);
}

EvalReport evaluate(const Model& m, const LabeledDataset& train_ds,
                    const LabeledDataset& test_ds, int knn_k, std::uint64_t seed) {
    EvalReport rep;
    bool degenerate = false;
    Mat train_f = extract_features(m, train_ds, &degenerate);
    Mat test_f = extract_features(m, test_ds);
    EmpiricalVariances v = empirical_variances(train_f, train_ds.y);
    rep.St_tilde = v.St;
    rep.knn_acc = knn_accuracy(train_f, train_ds.y, test_f, test_ds.y, knn_k);
    rep.linear_acc = linear_probe(train_f, train_ds.y, test_f, test_ds.y, -1.0, seed);
    rep.collapsed = degenerate || detect_collapse(train_f, train_ds.y, {}, seed);
    return rep;
}

double transfer_eval(const Model& m, const ClassSpec& pretrain_spec,
                     const WhiteningTransform& transform, DownstreamMode mode, double sigma,
                     std::uint64_t seed, int n_train_per_class, int n_test_per_class) {
    LabeledDataset train_ds =
        make_downstream(pretrain_spec, mode, sigma, n_train_per_class, derive_seed(seed, {1}));
    LabeledDataset test_ds =
        make_downstream(pretrain_spec, mode, sigma, n_test_per_class, derive_seed(seed, {2}));
    train_ds.X = transform.apply(train_ds.X);
    test_ds.X = transform.apply(test_ds.X);
    Mat train_f = extract_features(m, train_ds);
    Mat test_f = extract_features(m, test_ds);
    return linear_probe(train_f, train_ds.y, test_f, test_ds.y, -1.0, seed);
}

}  // namespace ancl
