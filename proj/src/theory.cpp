#include "ancl/theory.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

#include "ancl/rng.hpp"

namespace ancl {

namespace {

// Eigenpairs of S_B = (1/C) M M^T via the C x C Gram matrix, completed to a
// full orthonormal basis with Householder QR. Cheap even at d = 2048.
void fill_eigenbasis(ScatterSummary& sc, const Mat& means, double lambda_w_iso,
                     bool whitened) {
    const Eigen::Index d = means.rows();
    const Eigen::Index c = means.cols();
    Mat gram = means.transpose() * means / static_cast<double>(c);
    Eigen::SelfAdjointEigenSolver<Mat> eig(gram);
    Vec w = eig.eigenvalues();    // ascending
    Mat q = eig.eigenvectors();
    const double tol = 1e-12 * std::max(1.0, w.cwiseAbs().maxCoeff());
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = c - 1; i >= 0; --i)
        if (w(i) > tol) keep.push_back(i);
    const Eigen::Index m = static_cast<Eigen::Index>(keep.size());
    Mat span(d, m);
    Vec lb_span(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const Eigen::Index i = keep[static_cast<std::size_t>(j)];
        span.col(j) = means * q.col(i) / std::sqrt(static_cast<double>(c) * w(i));
        lb_span(j) = w(i);
    }
    if (m == 0) {
        sc.V = Mat::Identity(d, d);
    } else {
        Eigen::HouseholderQR<Mat> qr(span);
        sc.V = qr.householderQ() * Mat::Identity(d, d);
    }
    sc.lambda_B = Vec::Zero(d);
    sc.lambda_B.head(m) = lb_span;
    if (whitened)
        sc.lambda_W = Vec::Ones(d) - sc.lambda_B;
    else
        sc.lambda_W = Vec::Constant(d, lambda_w_iso);
}

Mat pseudo_inverse(const Mat& W, double rel_cutoff = 1e-10) {
    Eigen::BDCSVD<Mat> svd(W, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Vec s = svd.singularValues();
    const double cutoff = rel_cutoff * s.maxCoeff();
    Vec inv = s;
    for (Eigen::Index i = 0; i < s.size(); ++i) inv(i) = s(i) > cutoff ? 1.0 / s(i) : 0.0;
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

void require_symmetric(const Mat& A, const char* what) {
    if (A.rows() != A.cols()) throw DimensionError(std::string(what) + ": not square");
    const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw ContractError(std::string(what) + ": asymmetric input");
}

Vec predictor_gains(const ScatterSummary& sc, double alpha) {
    const Eigen::Index d = sc.lambda_B.size();
    if (d == 0) throw ContractError("scatter summary carries no eigendecomposition");
    Vec g(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        const double den = sc.lambda_B(i) + sc.lambda_W(i) + sc.sigma_e_sq;
        if (den <= 0.0)
            throw DegenerateDataError("predictor gains: zero total variance direction");
        g(i) = (sc.lambda_B(i) + alpha * sc.lambda_W(i)) / den;
    }
    return g;
}

}  // namespace

ScatterSummary population_scatters(const ClassSpec& spec, double sigma_e_sq) {
    spec.validate();
    if (sigma_e_sq < 0.0) throw ContractError("population_scatters: negative sigma_e_sq");
    ScatterSummary sc;
    sc.sigma_e_sq = sigma_e_sq;
    const double c = static_cast<double>(spec.num_classes);
    sc.S_B = spec.means * spec.means.transpose() / c;
    sc.S_W = spec.cov_scale * Mat::Identity(spec.dim, spec.dim);
    sc.S_T = sc.S_B + sc.S_W;
    fill_eigenbasis(sc, spec.means, spec.cov_scale, /*whitened=*/false);
    sc.means = spec.means;
    return sc;
}

ScatterSummary whitened_scatters(const Mat& means, double sigma_e_sq) {
    if (means.rows() < means.cols()) throw DimensionError("whitened_scatters: C > d");
    if (sigma_e_sq < 0.0) throw ContractError("whitened_scatters: negative sigma_e_sq");
    const Eigen::Index d = means.rows();
    Mat centered = means.colwise() - Vec(means.rowwise().mean());
    ScatterSummary sc;
    sc.sigma_e_sq = sigma_e_sq;
    sc.whitened = true;
    sc.S_B = centered * centered.transpose() / static_cast<double>(means.cols());
    fill_eigenbasis(sc, centered, 0.0, /*whitened=*/true);
    if (sc.lambda_B.maxCoeff() >= 1.0)
        throw ContractError("whitened_scatters: means too large, S_W = I - S_B not PSD");
    sc.S_W = Mat::Identity(d, d) - sc.S_B;
    sc.S_T = Mat::Identity(d, d);
    sc.means = centered;
    return sc;
}

ScatterSummary empirical_scatters(const LabeledDataset& ds, double sigma_e_sq) {
    const Eigen::Index n = ds.n(), d = ds.dim();
    const int C = ds.spec.num_classes;
    if (C < 1) throw ContractError("empirical_scatters: dataset without class count");
    std::vector<Eigen::Index> counts(C, 0);
    for (auto label : ds.y) {
        if (label < 0 || label >= C) throw ContractError("empirical_scatters: label out of range");
        ++counts[static_cast<std::size_t>(label)];
    }
    for (int c = 0; c < C; ++c)
        if (counts[static_cast<std::size_t>(c)] < 2)
            throw DegenerateDataError("empirical_scatters: class with < 2 samples");

    Mat means = Mat::Zero(d, C);
    for (Eigen::Index i = 0; i < n; ++i) means.col(ds.y[i]) += ds.X.row(i).transpose();
    for (int c = 0; c < C; ++c) means.col(c) /= static_cast<double>(counts[c]);

    ScatterSummary sc;
    sc.sigma_e_sq = sigma_e_sq;
    sc.S_B = means * means.transpose() / static_cast<double>(C);
    sc.S_W = Mat::Zero(d, d);
    for (int c = 0; c < C; ++c) {
        Mat centered(counts[c], d);
        Eigen::Index row = 0;
        for (Eigen::Index i = 0; i < n; ++i)
            if (ds.y[i] == c) centered.row(row++) = ds.X.row(i) - means.col(c).transpose();
        sc.S_W += centered.transpose() * centered / static_cast<double>(counts[c] - 1);
    }
    sc.S_W /= static_cast<double>(C);
    sc.S_T = sc.S_B + sc.S_W;
    // Empirical S_B and S_W only commute approximately; V diagonalizes S_B
    // exactly and lambda_W is the diagonal of V^T S_W V. Skipped at large d
    // where no closed-form op needs it.
    if (d <= 512) {
        fill_eigenbasis(sc, means, 0.0, /*whitened=*/false);
        sc.lambda_W = (sc.V.transpose() * sc.S_W * sc.V).diagonal();
    }
    sc.means = means;
    return sc;
}

double expected_lagrangian(const Mat& W, const Mat& W_p, const ScatterSummary& sc, double alpha,
                           const LagrangeParams& lam) {
    if (W.cols() != sc.S_T.rows()) throw DimensionError("expected_lagrangian: W dim mismatch");
    if (W_p.rows() != W_p.cols() || W_p.rows() != W.rows())
        throw DimensionError("expected_lagrangian: W_p shape mismatch");
    if (alpha < 0.0 || alpha > 1.0) throw ContractError("expected_lagrangian: alpha");
    Mat WSt = W * sc.S_T;
    Mat cov_z2z1 = WSt * W.transpose();                     // E[z2 z1^T]
    Mat cov_sup = W * sc.S_B * W.transpose();               // E[z2sup z1^T]
    Mat cov_z1 = cov_z2z1 + sc.sigma_e_sq * W * W.transpose();  // E[z1 z1^T]
    const double tr_view = cov_z1.trace();
    return 2.0 - 2.0 * alpha * (W_p.transpose() * cov_z2z1).trace() -
           2.0 * (1.0 - alpha) * (W_p.transpose() * cov_sup).trace() +
           lam.lambda1 * (tr_view - 1.0) + lam.lambda2 * (tr_view - 1.0) +
           lam.lambda3 * ((W_p.transpose() * W_p * cov_z1).trace() - 1.0);
}

Mat lagrangian_grad_wp(const Mat& W, const Mat& W_p, const ScatterSummary& sc, double alpha,
                       const LagrangeParams& lam) {
    Mat cov_z2z1 = W * sc.S_T * W.transpose();
    Mat cov_sup = W * sc.S_B * W.transpose();
    Mat cov_z1 = cov_z2z1 + sc.sigma_e_sq * W * W.transpose();
    return -2.0 * alpha * cov_z2z1 - 2.0 * (1.0 - alpha) * cov_sup +
           2.0 * lam.lambda3 * W_p * cov_z1;
}

Mat optimal_predictor(const Mat& W, const ScatterSummary& sc, double alpha, double lambda3) {
    if (lambda3 <= 0.0) throw ContractError("optimal_predictor: lambda3 must be positive");
    if (W.cols() != sc.lambda_B.size())
        throw DimensionError("optimal_predictor: W dim mismatch");
    Vec g = predictor_gains(sc, alpha);
    Mat filter = sc.V * g.asDiagonal() * sc.V.transpose();
    return (W * filter * pseudo_inverse(W)) / lambda3;
}

Mat numeric_optimal_predictor(const Mat& W, const ScatterSummary& sc, double alpha,
                              const LagrangeParams& lam, int max_iters, double grad_tol) {
    const Eigen::Index k = W.rows();
    Mat cov_z2z1 = W * sc.S_T * W.transpose();
    Mat cov_sup = W * sc.S_B * W.transpose();
    Mat Q = cov_z2z1 + sc.sigma_e_sq * W * W.transpose();
    Mat G = alpha * cov_z2z1 + (1.0 - alpha) * cov_sup;
    Eigen::SelfAdjointEigenSolver<Mat> eig(Q);
    const double lmax = eig.eigenvalues().maxCoeff();
    if (lmax <= 0.0) throw DegenerateDataError("numeric_optimal_predictor: singular covariance");
    const double step = 0.9 / (2.0 * lam.lambda3 * lmax);
    const double stop = grad_tol * std::max(1.0, G.norm());
    Mat W_p = Mat::Zero(k, k);
    for (int it = 0; it < max_iters; ++it) {
        Mat grad = 2.0 * lam.lambda3 * W_p * Q - 2.0 * G;
        if (grad.norm() <= stop) break;
        W_p -= step * grad;
    }
    return W_p;
}

double eigenspace_commute_residual(const Mat& A, const Mat& B) {
    require_symmetric(A, "commute_residual A");
    require_symmetric(B, "commute_residual B");
    if (A.rows() != B.rows()) throw DimensionError("commute_residual: sizes differ");
    const double denom = A.norm() * B.norm() + 1e-300;
    return (A * B - B * A).norm() / denom;
}

double alignment_residual(const Mat& W_p, const Mat& W) {
    if (W_p.rows() != W_p.cols() || W_p.rows() != W.rows())
        throw DimensionError("alignment_residual: shape mismatch");
    Mat diff = W_p.transpose() * W_p - W * W.transpose();
    const double denom = (W * W.transpose()).norm();
    if (denom == 0.0) throw DegenerateDataError("alignment_residual: W W^T is zero");
    return diff.norm() / denom;
}

EmpiricalVariances empirical_variances(const Mat& features,
                                       const std::vector<std::int32_t>& labels) {
    const Eigen::Index n = features.rows();
    if (n < 2) throw ContractError("empirical_variances: need at least 2 samples");
    if (static_cast<Eigen::Index>(labels.size()) != n)
        throw DimensionError("empirical_variances: labels size mismatch");
    const int C = 1 + *std::max_element(labels.begin(), labels.end());
    Mat class_means = Mat::Zero(C, features.cols());
    std::vector<Eigen::Index> counts(C, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
        class_means.row(labels[i]) += features.row(i);
        ++counts[static_cast<std::size_t>(labels[i])];
    }
    for (int c = 0; c < C; ++c)
        if (counts[c] > 0) class_means.row(c) /= static_cast<double>(counts[c]);
    Vec mean = features.colwise().mean();
    EmpiricalVariances out;
    for (Eigen::Index i = 0; i < n; ++i) {
        out.Sw += (features.row(i) - class_means.row(labels[i])).squaredNorm();
        out.St += (features.row(i) - mean.transpose()).squaredNorm();
    }
    out.Sw /= static_cast<double>(n);
    out.St /= static_cast<double>(n);
    out.ratio_valid = out.St > 1e-30;
    out.ratio = out.ratio_valid ? out.Sw / out.St : 0.0;
    return out;
}

Vec predictor_variance_reduction_check(const Mat& W_p_star, const Mat& W,
                                       const ScatterSummary& sc, double alpha) {
    if (W.rows() != W.cols())
        throw ContractError("variance_reduction_check: W must be square in diagnostic mode");
    Eigen::FullPivLU<Mat> lu(W);
    if (!lu.isInvertible())
        throw ContractError("variance_reduction_check: non-invertible W in diagnostic mode");
    Vec gains = predictor_gains(sc, alpha);
    // Theorem-1 consistency: pulling W_p_star back to data space must apply
    // exactly these per-direction gains (lambda3 = 1 convention).
    Mat pullback = sc.V.transpose() * lu.inverse() * W_p_star * W * sc.V;
    const double mismatch = (pullback - Mat(gains.asDiagonal())).cwiseAbs().maxCoeff();
    if (mismatch > 1e-6 * std::max(1.0, gains.cwiseAbs().maxCoeff()))
        throw ContractError("variance_reduction_check: predictor inconsistent with gains");
    return gains;
}

std::pair<double, double> monte_carlo_lagrangian(const Mat& W, const Mat& W_p,
                                                 const ScatterSummary& sc, double alpha,
                                                 const LagrangeParams& lam, int samples,
                                                 std::uint64_t seed) {
    const Eigen::Index d = W.cols();
    const Eigen::Index c = sc.means.cols();
    if (c == 0) throw ContractError("monte_carlo_lagrangian: summary carries no means");
    Mat sqrt_sw = sc.V * sc.lambda_W.cwiseMax(0.0).cwiseSqrt().asDiagonal() * sc.V.transpose();
    const double sig_e = std::sqrt(sc.sigma_e_sq);
    auto rng = make_rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(c) - 1);
    auto draw = [&](Vec& v) {
        for (Eigen::Index i = 0; i < d; ++i) v(i) = gauss(rng);
    };
    Vec e1(d), e2(d), e3(d), g1(d), g2(d);
    double sum = 0.0, sumsq = 0.0;
    for (int s = 0; s < samples; ++s) {
        const int y = pick(rng);
        draw(g1);
        draw(g2);
        Vec x = sc.means.col(y) + sqrt_sw * g1;
        Vec xsup = sc.means.col(y) + sqrt_sw * g2;
        draw(e1);
        draw(e2);
        draw(e3);
        Vec z1 = W * (x + sig_e * e1);
        Vec z2 = W * (x + sig_e * e2);
        Vec zsup = W * (xsup + sig_e * e3);
        Vec wpz1 = W_p * z1;
        const double val = 2.0 - 2.0 * alpha * wpz1.dot(z2) - 2.0 * (1.0 - alpha) * wpz1.dot(zsup) +
                           lam.lambda1 * (z2.squaredNorm() - 1.0) +
                           lam.lambda2 * (zsup.squaredNorm() - 1.0) +
                           lam.lambda3 * (wpz1.squaredNorm() - 1.0);
        sum += val;
        sumsq += val * val;
    }
    const double mean = sum / samples;
    const double var = std::max(0.0, sumsq / samples - mean * mean);
    return {mean, std::sqrt(var / samples)};
}

TheoryCheck theorem2_check(const Mat& W_p, const Mat& W, double threshold) {
    TheoryCheck c;
    c.name = "thm2_predictor_alignment";
    c.residual = alignment_residual(W_p, W);
    c.threshold = threshold;
    c.pass = c.residual < threshold;
    return c;
}

}  // namespace ancl
