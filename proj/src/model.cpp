#include "ancl/model.hpp"

#include <cmath>

#include "ancl/kernels.hpp"
#include "ancl/rng.hpp"

namespace ancl {

namespace {
constexpr double kNormTol = 1e-12;

void check_same_shape(const Mat& a, const Mat& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError(std::string("shape mismatch: ") + what);
}
}  // namespace

Mat Model::composed() const {
    Mat w;
    kernels::gemm_nn(W_proj, W_enc, w);
    return w;
}

void Model::check_finite() const {
    if (!W_enc.allFinite() || !W_proj.allFinite() || !W_pred.allFinite())
        throw ContractError("model parameters contain NaN/Inf");
}

Model init_model(int d, int h, int k, std::uint64_t seed) {
    if (d < 1 || h < 1 || k < 1) throw ContractError("init_model: non-positive dimension");
    Model m;
    m.W_enc.resize(h, d);
    m.W_proj.resize(k, h);
    m.W_pred.resize(k, k);
    auto rng = make_rng(seed, {kStreamInit});
    fill_gaussian(m.W_enc, 1.0 / std::sqrt(static_cast<double>(d)), rng);
    fill_gaussian(m.W_proj, 1.0 / std::sqrt(static_cast<double>(h)), rng);
    fill_gaussian(m.W_pred, 1.0 / std::sqrt(static_cast<double>(k)), rng);
    return m;
}

Vec l2_normalize(const Vec& v) {
    const double n = v.norm();
    if (n < kNormTol)
        throw NormalizationError("l2_normalize: near-zero vector (feature collapse?)");
    return v / n;
}

std::pair<Vec, Vec> forward(const Model& m, const Vec& x) {
    if (x.size() != m.W_enc.cols()) throw DimensionError("forward: input length mismatch");
    if (!x.allFinite()) throw ContractError("forward: non-finite input");
    Vec r = m.W_proj * (m.W_enc * x);
    Vec p = m.W_pred * r;
    return {l2_normalize(r), l2_normalize(p)};
}

BatchActivations forward_batch(const Model& m, const Mat& X) {
    if (X.cols() != m.W_enc.cols()) throw DimensionError("forward_batch: input dim mismatch");
    BatchActivations a;
    kernels::gemm_nt(X, m.W_enc, a.E);
    kernels::gemm_nt(a.E, m.W_proj, a.R);
    kernels::gemm_nt(a.R, m.W_pred, a.U);
    a.P = a.U;
    if (kernels::normalize_rows(a.P, &a.u_norms) > 0)
        throw NormalizationError("forward_batch: collapsed prediction row");
    return a;
}

Mat target_projections(const Mat& W_enc, const Mat& W_proj, const Mat& X) {
    Mat e, z;
    kernels::gemm_nt(X, W_enc, e);
    kernels::gemm_nt(e, W_proj, z);
    if (kernels::normalize_rows(z) > 0)
        throw NormalizationError("target_projections: collapsed projection row");
    return z;
}

namespace {

// d/dU of mean_i (1/(2B)) * || u_i/|u_i| - t_i ||^2-terms, i.e. the combined
// target t = alpha*z + (1-alpha)*zsup per row:
//   dU_i = -(1/B) * (t_i - p_i (p_i . t_i)) / |u_i|
Mat du_for_targets(const Mat& P, const Vec& u_norms, const Mat& T, double inv_batch) {
    Mat dU(P.rows(), P.cols());
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
        const double pt = P.row(i).dot(T.row(i));
        dU.row(i) = -(T.row(i) - pt * P.row(i)) * (inv_batch / u_norms(i));
    }
    return dU;
}

}  // namespace

Gradients backward(const Model& m, const Mat& X1, const Mat& X2, const Mat& Z2t, const Mat& Z1t,
                   const Mat& Z2sup, const Mat& Z1sup, double alpha) {
    if (alpha < 0.0 || alpha > 1.0) throw ContractError("backward: alpha outside [0,1]");
    check_same_shape(X1, X2, "views");
    check_same_shape(Z2t, Z1t, "targets");
    check_same_shape(Z2t, Z2sup, "supervised targets");
    check_same_shape(Z2t, Z1sup, "supervised targets");
    if (Z2t.rows() != X1.rows()) throw DimensionError("backward: batch size mismatch");

    BatchActivations a1 = forward_batch(m, X1);
    BatchActivations a2 = forward_batch(m, X2);
    Mat T1 = alpha * Z2t + (1.0 - alpha) * Z2sup;
    Mat T2 = alpha * Z1t + (1.0 - alpha) * Z1sup;
    return backward_from_activations(m, a1, a2, X1, X2, T1, T2);
}

Gradients backward_from_activations(const Model& m, const BatchActivations& a1,
                                    const BatchActivations& a2, const Mat& X1, const Mat& X2,
                                    const Mat& T1, const Mat& T2) {
    const double inv_b = 1.0 / static_cast<double>(X1.rows());
    Mat dU1 = du_for_targets(a1.P, a1.u_norms, T1, inv_b);
    Mat dU2 = du_for_targets(a2.P, a2.u_norms, T2, inv_b);

    Gradients g;
    kernels::gemm_tn(dU1, a1.R, g.dW_pred);
    kernels::gemm_tn(dU2, a2.R, g.dW_pred, /*accumulate=*/true);
    Mat dR1, dR2;
    kernels::gemm_nn(dU1, m.W_pred, dR1);
    kernels::gemm_nn(dU2, m.W_pred, dR2);
    kernels::gemm_tn(dR1, a1.E, g.dW_proj);
    kernels::gemm_tn(dR2, a2.E, g.dW_proj, /*accumulate=*/true);
    Mat dE1, dE2;
    kernels::gemm_nn(dR1, m.W_proj, dE1);
    kernels::gemm_nn(dR2, m.W_proj, dE2);
    kernels::gemm_tn(dE1, X1, g.dW_enc);
    kernels::gemm_tn(dE2, X2, g.dW_enc, /*accumulate=*/true);
    return g;
}

std::pair<double, double> batch_loss_parts(const Model& m, const Mat& X1, const Mat& X2,
                                           const Mat& Z2t, const Mat& Z1t, const Mat& Z2sup,
                                           const Mat& Z1sup) {
    BatchActivations a1 = forward_batch(m, X1);
    BatchActivations a2 = forward_batch(m, X2);
    const double inv_b = 1.0 / static_cast<double>(X1.rows());
    double ssl = 0.0, sup = 0.0;
    for (Eigen::Index i = 0; i < X1.rows(); ++i) {
        ssl += 0.5 * ((a1.P.row(i) - Z2t.row(i)).squaredNorm() +
                      (a2.P.row(i) - Z1t.row(i)).squaredNorm());
        sup += 0.5 * ((a1.P.row(i) - Z2sup.row(i)).squaredNorm() +
                      (a2.P.row(i) - Z1sup.row(i)).squaredNorm());
    }
    return {ssl * inv_b, sup * inv_b};
}

void ema_update(TargetModel& target, const Model& online, double m) {
    if (m < 0.0 || m > 1.0) throw ContractError("ema_update: momentum outside [0,1]");
    check_same_shape(target.W_enc, online.W_enc, "ema encoder");
    check_same_shape(target.W_proj, online.W_proj, "ema projector");
    target.W_enc = m * target.W_enc + (1.0 - m) * online.W_enc;
    target.W_proj = m * target.W_proj + (1.0 - m) * online.W_proj;
}

}  // namespace ancl
