#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ancl/common.hpp"
#include "ancl/dataset.hpp"

namespace ancl {

/// Scatter decomposition of the data distribution plus the augmentation
/// noise scale. S_B = (1/C) sum mu_y mu_y^T, S_W = (1/C) sum Sigma_y,
/// S_T = S_B + S_W, and V diagonalizes both (lambda_B, lambda_W are the
/// eigenvalues in V's column order).
struct ScatterSummary {
    Mat S_B;
    Mat S_W;
    Mat S_T;
    double sigma_e_sq = 0.0;
    Mat V;          // d x d orthogonal
    Vec lambda_B;
    Vec lambda_W;
    bool whitened = false;  // lambda_B + lambda_W == 1 elementwise
    Mat means;      // d x C class means behind the summary (Monte-Carlo oracle)
};

struct LagrangeParams {
    double lambda1 = 1.0;
    double lambda2 = 1.0;
    double lambda3 = 1.0;
};

/// Exact population scatters of a ClassSpec (isotropic S_W = cov_scale * I).
ScatterSummary population_scatters(const ClassSpec& spec, double sigma_e_sq);

/// Whitened summary built from class means: S_W = I - S_B, so S_T = I.
/// Means are centered first so the total mean is zero.
ScatterSummary whitened_scatters(const Mat& means, double sigma_e_sq);

/// Plug-in estimators with uniform class weighting (per-class unbiased
/// covariances). Requires >= 2 samples in every class.
ScatterSummary empirical_scatters(const LabeledDataset& ds, double sigma_e_sq = 0.0);

/// Expected constrained loss:
///   2 - 2a tr(W_p^T W S_T W^T) - 2(1-a) tr(W_p^T W S_B W^T)
///     + (l1 + l2) (tr(W (S_T + s_e^2 I) W^T) - 1)
///     + l3 (tr(W_p^T W_p W (S_T + s_e^2 I) W^T) - 1)
double expected_lagrangian(const Mat& W, const Mat& W_p, const ScatterSummary& sc, double alpha,
                           const LagrangeParams& lam);

/// Closed-form optimal predictor
///   W_p* = (1/l3) W V (L_B + a L_W)(L_B + L_W + s_e^2 I)^{-1} V^T W^+,
/// with the pseudoinverse cut off at singular values below 1e-10 * s_max.
Mat optimal_predictor(const Mat& W, const ScatterSummary& sc, double alpha, double lambda3);

/// Independent numeric oracle: plain gradient descent on expected_lagrangian
/// over W_p from zero init, fixed step 0.9/L. Stops at tolerance or max_iters.
Mat numeric_optimal_predictor(const Mat& W, const ScatterSummary& sc, double alpha,
                              const LagrangeParams& lam, int max_iters = 200000,
                              double grad_tol = 1e-12);

/// Gradient of expected_lagrangian in W_p (the stationarity residual is its
/// Frobenius norm at W_p*).
Mat lagrangian_grad_wp(const Mat& W, const Mat& W_p, const ScatterSummary& sc, double alpha,
                       const LagrangeParams& lam);

/// ||AB - BA||_F / (||A||_F ||B||_F + eps); zero iff A and B share an
/// eigenspace. Inputs must be symmetric to 1e-10.
double eigenspace_commute_residual(const Mat& A, const Mat& B);

/// || W_p^T W_p - W W^T ||_F / || W W^T ||_F
double alignment_residual(const Mat& W_p, const Mat& W);

struct EmpiricalVariances {
    double Sw = 0.0;
    double St = 0.0;
    double ratio = 0.0;
    bool ratio_valid = false;  // false when St ~ 0 (total collapse)
};

/// Intra-class and total variance of feature rows:
/// Sw = mean_i ||z_i - mu_{y_i}||^2, St = mean_i ||z_i - mu||^2.
EmpiricalVariances empirical_variances(const Mat& features,
                                       const std::vector<std::int32_t>& labels);

/// Per-eigendirection gain (L_B + a L_W)(L_B + L_W + s_e^2 I)^{-1} the
/// optimal predictor applies in data space. Diagnostic mode: W must be
/// square and invertible, and W_p_star's pull-back through W must match the
/// gains (the Theorem 1 consistency check).
Vec predictor_variance_reduction_check(const Mat& W_p_star, const Mat& W,
                                       const ScatterSummary& sc, double alpha);

/// Monte-Carlo estimate of expected_lagrangian under the generative model of
/// the summary (Gaussian classes + isotropic Gaussian augmentation noise).
/// Returns (mean, standard error).
std::pair<double, double> monte_carlo_lagrangian(const Mat& W, const Mat& W_p,
                                                 const ScatterSummary& sc, double alpha,
                                                 const LagrangeParams& lam, int samples,
                                                 std::uint64_t seed);

struct TheoryCheck {
    std::string name;
    double residual = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

/// The full closed-form verification battery (everything except the
/// training-dependent Theorem 2 check, which needs a model: pass one).
std::vector<TheoryCheck> run_theory_checks(std::uint64_t seed);
TheoryCheck theorem2_check(const Mat& W_p, const Mat& W, double threshold = 0.1);

}  // namespace ancl
