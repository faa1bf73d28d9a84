#include "ancl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "ancl/eval.hpp"
#include "ancl/kernels.hpp"
#include "ancl/rng.hpp"
#include "ancl/theory.hpp"

namespace ancl {

void TrainConfig::validate() const {
    if (epochs < 0) throw ContractError("TrainConfig: negative epochs");
    if (batch_size < 1) throw ContractError("TrainConfig: batch_size < 1");
    if (alpha < 0.0 || alpha > 1.0) throw ContractError("TrainConfig: alpha outside [0,1]");
    if (momentum < 0.0 || momentum >= 1.0) throw ContractError("TrainConfig: momentum outside [0,1)");
    if (weight_decay < 0.0) throw ContractError("TrainConfig: negative weight_decay");
    if (lr <= 0.0) throw ContractError("TrainConfig: non-positive lr");
    if (ema_m < 0.0 || ema_m > 1.0) throw ContractError("TrainConfig: ema momentum outside [0,1]");
    if (M != kSampleAll && M < 1) throw ContractError("TrainConfig: M must be >= 1 or all");
    if (hidden_dim < 1 || feature_dim < 1) throw ContractError("TrainConfig: bad dims");
}

namespace {

// Slice rows of X given by idx[start, start+len).
Mat take_rows(const Mat& X, const std::vector<Eigen::Index>& idx, std::size_t start,
              std::size_t len) {
    Mat out(static_cast<Eigen::Index>(len), X.cols());
    for (std::size_t i = 0; i < len; ++i) out.row(i) = X.row(idx[start + i]);
    return out;
}

// Supervised targets for one loss direction. Pool mode averages M same-class
// pool entries; batch mode averages the other same-class target projections
// in the batch. A miss falls back to the in-batch positive Zt.row(i).
Mat supervised_targets(const Mat& Zt, const std::vector<std::int32_t>& yb, const TargetPool* pool,
                       int M, std::uint64_t draw_seed, long& miss_count) {
    const Eigen::Index b = Zt.rows();
    Mat out(b, Zt.cols());
    if (pool) {
        for (Eigen::Index i = 0; i < b; ++i) {
            std::optional<Vec> t;
            if (M == kSampleAll) {
                t = pool->sample_supervised_target(yb[i], kSampleAll, nullptr);
            } else {
                auto rng = make_rng(derive_seed(draw_seed, {static_cast<std::uint64_t>(i)}));
                t = pool->sample_supervised_target(yb[i], M, &rng);
            }
            if (t) {
                out.row(i) = t->transpose();
            } else {
                out.row(i) = Zt.row(i);
                ++miss_count;
            }
        }
        return out;
    }
    for (Eigen::Index i = 0; i < b; ++i) {
        Vec mean = Vec::Zero(Zt.cols());
        int n_same = 0;
        for (Eigen::Index j = 0; j < b; ++j) {
            if (j == i || yb[j] != yb[i]) continue;
            mean += Zt.row(j).transpose();
            ++n_same;
        }
        if (n_same > 0) {
            out.row(i) = (mean / n_same).transpose();
        } else {
            out.row(i) = Zt.row(i);
            ++miss_count;
        }
    }
    return out;
}

double mean_row_sqdist(const Mat& A, const Mat& B) {
    return (A - B).rowwise().squaredNorm().mean();
}

}  // namespace

TrainResult train(const TrainConfig& config, const LabeledDataset& data,
                  const std::function<void(const MetricsRecord&)>& per_epoch) {
    config.validate();
    const Eigen::Index n = data.n();
    const int d = static_cast<int>(data.dim());
    if (n == 0) throw ContractError("train: empty dataset");
    {
        std::vector<bool> seen(data.spec.num_classes, false);
        for (auto label : data.y) {
            if (label < 0 || label >= data.spec.num_classes)
                throw ContractError("train: label out of range");
            seen[label] = true;
        }
        if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }))
            throw ContractError("train: some class has no samples");
    }

    TrainResult res{
        init_model(d, config.hidden_dim, config.feature_dim, derive_seed(config.seed, {kStreamInit})),
        TargetModel{},
        TargetPool(config.pool_variant, data.spec.num_classes, config.feature_dim,
                   config.pool_size, config.proto_ema),
        SgdBuffers{},
        {},
        0};
    Model& model = res.model;
    res.target = TargetModel::from(model);  // EMA copy starts bit-identical
    res.buffers.enc = Mat::Zero(model.W_enc.rows(), model.W_enc.cols());
    res.buffers.proj = Mat::Zero(model.W_proj.rows(), model.W_proj.cols());
    res.buffers.pred = Mat::Zero(model.W_pred.rows(), model.W_pred.cols());

    AugmentationSpec aug;
    aug.mask_fraction = config.mask_fraction;
    aug.fill = data.X.colwise().mean();
    aug.rng_seed = derive_seed(config.seed, {kStreamAugment});

    const int steps_per_epoch = static_cast<int>((n + config.batch_size - 1) / config.batch_size);
    const int total_steps = config.epochs * steps_per_epoch;
    int step = 0;

    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        auto shuffle_rng =
            make_rng(config.seed, {kStreamShuffle, static_cast<std::uint64_t>(epoch)});
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double ep_ssl = 0.0, ep_sup = 0.0;
        const long misses_before = res.pool_miss_count;

        for (std::size_t start = 0; start < static_cast<std::size_t>(n);
             start += config.batch_size, ++step) {
            const std::size_t len =
                std::min<std::size_t>(config.batch_size, static_cast<std::size_t>(n) - start);
            Mat Xb = take_rows(data.X, order, start, len);
            std::vector<std::int32_t> yb(len);
            for (std::size_t i = 0; i < len; ++i) yb[i] = data.y[order[start + i]];

            const std::uint64_t step_tag = static_cast<std::uint64_t>(step);
            Mat X1 = augment_batch(Xb, aug, derive_seed(aug.rng_seed, {step_tag, 1}));
            Mat X2 = augment_batch(Xb, aug, derive_seed(aug.rng_seed, {step_tag, 2}));

            BatchActivations a1 = forward_batch(model, X1);
            BatchActivations a2 = forward_batch(model, X2);

            // target branch: online weights for SupSiam (detached copy of the
            // raw projections already at hand), EMA copy for SupBYOL
            Mat Z1t, Z2t;
            if (config.use_ema) {
                Z1t = target_projections(res.target.W_enc, res.target.W_proj, X1);
                Z2t = target_projections(res.target.W_enc, res.target.W_proj, X2);
            } else {
                Z1t = a1.R;
                Z2t = a2.R;
                if (kernels::normalize_rows(Z1t) > 0 || kernels::normalize_rows(Z2t) > 0)
                    throw NormalizationError("train: collapsed target projection");
            }

            const TargetPool* pool = config.pool_enabled ? &res.pool : nullptr;
            Mat Z2sup = supervised_targets(Z2t, yb, pool, config.M,
                                           derive_seed(config.seed, {kStreamPool, step_tag, 1}),
                                           res.pool_miss_count);
            Mat Z1sup = supervised_targets(Z1t, yb, pool, config.M,
                                           derive_seed(config.seed, {kStreamPool, step_tag, 2}),
                                           res.pool_miss_count);

            ep_ssl += 0.5 * (mean_row_sqdist(a1.P, Z2t) + mean_row_sqdist(a2.P, Z1t));
            ep_sup += 0.5 * (mean_row_sqdist(a1.P, Z2sup) + mean_row_sqdist(a2.P, Z1sup));

            Mat T1 = config.alpha * Z2t + (1.0 - config.alpha) * Z2sup;
            Mat T2 = config.alpha * Z1t + (1.0 - config.alpha) * Z1sup;
            Gradients g = backward_from_activations(model, a1, a2, X1, X2, T1, T2);

            const double lr_sched = cosine_lr(config.lr, step, total_steps);
            const double lr_pred = config.predictor_constant_lr ? config.lr : lr_sched;
            sgd_step(model.W_enc, g.dW_enc, res.buffers.enc, lr_sched, config.momentum,
                     config.weight_decay);
            sgd_step(model.W_proj, g.dW_proj, res.buffers.proj, lr_sched, config.momentum,
                     config.weight_decay);
            sgd_step(model.W_pred, g.dW_pred, res.buffers.pred, lr_pred, config.momentum,
                     config.weight_decay);
            model.check_finite();

            // fresh targets enter the pool only after the loss was computed
            for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(len); ++i) {
                res.pool.push(Z1t.row(i).transpose(), yb[i]);
                res.pool.push(Z2t.row(i).transpose(), yb[i]);
            }
            if (config.use_ema) ema_update(res.target, model, config.ema_m);
        }

        MetricsRecord rec;
        rec.epoch = epoch;
        rec.ell_ssl = ep_ssl / steps_per_epoch;
        rec.ell_sup = ep_sup / steps_per_epoch;
        rec.total = config.alpha * rec.ell_ssl + (1.0 - config.alpha) * rec.ell_sup;
        {
            // epoch metrics on the full training set, augmentation disabled
            bool degenerate = false;
            Mat feats = extract_features(model, data, &degenerate);
            EmpiricalVariances v = empirical_variances(feats, data.y);
            rec.Sw_tilde = v.Sw;
            rec.St_tilde = v.St;
            rec.ratio = v.ratio;
            rec.collapse_flag = degenerate || !v.ratio_valid || v.St < 1e-3;
        }
        res.history.push_back(rec);
        if (per_epoch) per_epoch(rec);
        if (!config.quiet && res.pool_miss_count > misses_before)
            std::cerr << "train: epoch " << epoch << ": "
                      << (res.pool_miss_count - misses_before)
                      << " samples fell back to the in-batch positive\n";
    }
    if (!config.use_ema) res.target = TargetModel::from(model);
    return res;
}

std::vector<SweepRow> run_alpha_sweep(const std::vector<double>& alphas,
                                      const TrainConfig& base, const LabeledDataset& train_ds,
                                      const LabeledDataset& test_ds, int knn_k) {
    for (double a : alphas)
        if (a < 0.0 || a > 1.0) throw ContractError("run_alpha_sweep: alpha outside [0,1]");
    std::vector<SweepRow> rows;
    for (double a : alphas) {
        TrainConfig cfg = base;
        cfg.alpha = a;
        TrainResult r = train(cfg, train_ds);
        EvalReport rep = evaluate(r.model, train_ds, test_ds, knn_k,
                                  derive_seed(base.seed, {kStreamEval}));
        SweepRow row;
        row.alpha = a;
        row.final_metrics = r.history.empty() ? MetricsRecord{} : r.history.back();
        row.knn_acc = rep.knn_acc;
        row.linear_acc = rep.linear_acc;
        row.collapsed = rep.collapsed;
        rows.push_back(row);
    }
    return rows;
}

AblationResult collapse_ablation(bool pool_on, bool ema_on, const TrainConfig& config,
                                 const LabeledDataset& train_ds, const LabeledDataset& test_ds,
                                 int knn_k) {
    if (config.alpha >= 1.0)
        throw ContractError("collapse_ablation: needs alpha < 1 (supervised loss active)");
    TrainConfig cfg = config;
    cfg.pool_enabled = pool_on;
    cfg.use_ema = ema_on;
    TrainResult r = train(cfg, train_ds);
    EvalReport rep = evaluate(r.model, train_ds, test_ds, knn_k,
                              derive_seed(config.seed, {kStreamEval}));
    return {rep.collapsed, rep.knn_acc};
}

}  // namespace ancl
