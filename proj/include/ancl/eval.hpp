#pragma once

#include <cstdint>
#include <vector>

#include "ancl/dataset.hpp"
#include "ancl/model.hpp"

namespace ancl {

struct EvalReport {
    double knn_acc = 0.0;
    double linear_acc = 0.0;
    bool collapsed = false;
    double St_tilde = 0.0;
};

struct CollapseThresholds {
    double st_tol = 1e-3;
    double knn_factor = 1.5;  // collapsed when heldout knn <= factor / C
    int knn_k = 20;
};

/// L2-normalized projector outputs for every sample, no augmentation.
/// Collapsed rows (norm below tolerance) are zeroed and flagged.
Mat extract_features(const Model& m, const LabeledDataset& ds, bool* collapsed = nullptr);

/// Cosine-similarity majority vote; vote ties break to the smaller class.
double knn_accuracy(const Mat& train_feats, const std::vector<std::int32_t>& train_labels,
                    const Mat& test_feats, const std::vector<std::int32_t>& test_labels, int k);

/// Multinomial logistic regression on frozen features (L-BFGS to gradient
/// norm < 1e-6). l2_reg < 0 selects the regularizer on a held-out 10% split
/// over the log grid {1e-4..1e2} by validation accuracy, then refits on the
/// full training set.
double linear_probe(const Mat& train_feats, const std::vector<std::int32_t>& train_labels,
                    const Mat& test_feats, const std::vector<std::int32_t>& test_labels,
                    double l2_reg, std::uint64_t seed = 0);

/// collapsed := (St < st_tol) or (held-out knn accuracy <= knn_factor / C)
bool detect_collapse(const Mat& feats, const std::vector<std::int32_t>& labels,
                     const CollapseThresholds& thresholds = {}, std::uint64_t seed = 0);

/// Features + knn + linear probe + collapse verdict in one pass.
EvalReport evaluate(const Model& m, const LabeledDataset& train_ds,
                    const LabeledDataset& test_ds, int knn_k, std::uint64_t seed);

/// Downstream transfer: build the downstream task from the pretraining spec,
/// map it through the same whitening transform as pretraining (identity when
/// pretraining was not whitened), extract frozen features, linear-probe.
double transfer_eval(const Model& m, const ClassSpec& pretrain_spec,
                     const WhiteningTransform& transform, DownstreamMode mode, double sigma,
                     std::uint64_t seed, int n_train_per_class = 1000,
                     int n_test_per_class = 500);

}  // namespace ancl
