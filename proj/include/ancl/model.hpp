#pragma once

#include <cstdint>

#include "ancl/common.hpp"

namespace ancl {

/// Linear encoder/projector/predictor. The paper-facing W is the composition
/// W_proj * W_enc; the predictor acts on the raw (un-normalized) projection
/// and only the outputs p and z are L2-normalized.
struct Model {
    Mat W_enc;   // h x d
    Mat W_proj;  // k x h
    Mat W_pred;  // k x k

    int d() const { return static_cast<int>(W_enc.cols()); }
    int h() const { return static_cast<int>(W_enc.rows()); }
    int k() const { return static_cast<int>(W_proj.rows()); }

    Mat composed() const;  // W_proj * W_enc, k x d
    void check_finite() const;
};

/// EMA copy of encoder + projector; never sees gradients.
struct TargetModel {
    Mat W_enc;
    Mat W_proj;

    static TargetModel from(const Model& m) { return {m.W_enc, m.W_proj}; }
};

/// All matrices iid Gaussian with std 1/sqrt(fan_in).
Model init_model(int d, int h, int k, std::uint64_t seed);

Vec l2_normalize(const Vec& v);

/// (z, p) = (normalize(W_proj W_enc x), normalize(W_pred W_proj W_enc x))
std::pair<Vec, Vec> forward(const Model& m, const Vec& x);

/// Batched projections through (enc, proj): Z = normalized rows of X E^T P^T.
/// Raw intermediates are exposed for the backward pass.
struct BatchActivations {
    Mat E;       // n x h
    Mat R;       // n x k, raw projection
    Mat U;       // n x k, raw prediction W_pred * r
    Mat P;       // n x k, normalized prediction
    Vec u_norms;
};

BatchActivations forward_batch(const Model& m, const Mat& X);

/// Normalized projections of the target branch (enc + proj only).
Mat target_projections(const Mat& W_enc, const Mat& W_proj, const Mat& X);

struct Gradients {
    Mat dW_enc;
    Mat dW_proj;
    Mat dW_pred;
};

/// Analytic gradient of the symmetrized batch-mean loss
///   mean_i (1/2)[ l(p1_i; z2_i, z2sup_i) + l(p2_i; z1_i, z1sup_i) ]
/// through the online branch only. Targets enter strictly by value, so the
/// stop-gradient contract holds by construction.
Gradients backward(const Model& m, const Mat& X1, const Mat& X2, const Mat& Z2t, const Mat& Z1t,
                   const Mat& Z2sup, const Mat& Z1sup, double alpha);

/// Same gradient from precomputed activations and per-row combined targets
/// T = alpha * z + (1 - alpha) * zsup (the training hot path).
Gradients backward_from_activations(const Model& m, const BatchActivations& a1,
                                    const BatchActivations& a2, const Mat& X1, const Mat& X2,
                                    const Mat& T1, const Mat& T2);

/// Same loss as `backward` differentiates, with targets held fixed. Used by
/// the finite-difference oracle. Returns (ssl, sup) batch means.
std::pair<double, double> batch_loss_parts(const Model& m, const Mat& X1, const Mat& X2,
                                           const Mat& Z2t, const Mat& Z1t, const Mat& Z2sup,
                                           const Mat& Z1sup);

/// target <- m * target + (1 - m) * online, elementwise.
void ema_update(TargetModel& target, const Model& online, double m);

}  // namespace ancl
