#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ancl/dataset.hpp"
#include "ancl/model.hpp"
#include "ancl/optim.hpp"
#include "ancl/target_pool.hpp"

namespace ancl {

struct TrainConfig {
    int epochs = 200;
    int batch_size = 256;
    double lr = 0.05;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    double alpha = 0.5;

    PoolVariant pool_variant = PoolVariant::kClassAgnostic;
    int pool_size = 4096;  // per-class for kClassWise
    double proto_ema = 0.99;
    bool pool_enabled = true;  // off: supervised targets come from the batch
    int M = kSampleAll;

    bool use_ema = false;  // SupBYOL target network
    double ema_m = 0.996;

    bool predictor_constant_lr = true;
    int hidden_dim = 128;
    int feature_dim = 128;
    double mask_fraction = 0.6;
    std::uint64_t seed = 0;

    bool quiet = false;

    void validate() const;
};

struct MetricsRecord {
    int epoch = 0;
    double ell_ssl = 0.0;
    double ell_sup = 0.0;
    double total = 0.0;
    double Sw_tilde = 0.0;
    double St_tilde = 0.0;
    double ratio = 0.0;
    bool collapse_flag = false;
};

struct SgdBuffers {
    Mat enc;
    Mat proj;
    Mat pred;
};

struct TrainResult {
    Model model;
    TargetModel target;          // == online weights when EMA is off
    TargetPool pool;
    SgdBuffers buffers;
    std::vector<MetricsRecord> history;
    long pool_miss_count = 0;    // samples that fell back to the in-batch positive
};

/// Minibatch SGD on the symmetrized combined loss. Deterministic for a fixed
/// (config, data): every random stream is derived from config.seed.
/// per_epoch, when set, is called with each epoch's MetricsRecord.
TrainResult train(const TrainConfig& config, const LabeledDataset& data,
                  const std::function<void(const MetricsRecord&)>& per_epoch = nullptr);

struct SweepRow {
    double alpha = 0.0;
    MetricsRecord final_metrics;
    double knn_acc = 0.0;
    double linear_acc = 0.0;
    bool collapsed = false;
};

/// One independent run per alpha with identical data and seeds, evaluated on
/// the given test split.
std::vector<SweepRow> run_alpha_sweep(const std::vector<double>& alphas,
                                      const TrainConfig& base, const LabeledDataset& train_ds,
                                      const LabeledDataset& test_ds, int knn_k);

struct AblationResult {
    bool collapsed = false;
    double knn_acc = 0.0;
};

/// Toy analog of the pool/EMA collapse ablation. Requires alpha < 1.
AblationResult collapse_ablation(bool pool_on, bool ema_on, const TrainConfig& config,
                                 const LabeledDataset& train_ds, const LabeledDataset& test_ds,
                                 int knn_k);

}  // namespace ancl
