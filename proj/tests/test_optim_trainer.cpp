#include <doctest.h>

#include <cmath>
#include <functional>

#include "ancl/optim.hpp"
#include "ancl/rng.hpp"
#include "ancl/theory.hpp"
#include "ancl/trainer.hpp"

using namespace ancl;

namespace {

// Small 3-class problem that trains in seconds.
LabeledDataset small_data(int d = 24, int n_per = 40, double cov = 0.2,
                          std::uint64_t seed = 3) {
    ClassSpec spec{3, d, make_class_means(3, d, seed), cov};
    LabeledDataset ds = sample_dataset(spec, n_per, seed + 1);
    Vec mean = ds.X.colwise().mean();
    ds.X.rowwise() -= mean.transpose();
    return ds;
}

TrainConfig small_config() {
    TrainConfig cfg;
    cfg.epochs = 8;
    cfg.batch_size = 32;
    cfg.hidden_dim = 12;
    cfg.feature_dim = 8;
    cfg.pool_size = 64;
    cfg.seed = 5;
    cfg.quiet = true;
    return cfg;
}

std::uint64_t hash_mat(const Mat& m) {
    std::uint64_t h = 1469598103934665603ULL;
    const auto* p = reinterpret_cast<const std::uint64_t*>(m.data());
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

TEST_SUITE_BEGIN("optim_trainer");

TEST_CASE("cosine schedule endpoints and midpoint") {
    CHECK(cosine_lr(0.05, 0, 100) == doctest::Approx(0.05));
    CHECK(cosine_lr(0.05, 100, 100) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(cosine_lr(0.05, 50, 100) == doctest::Approx(0.025));
    CHECK_THROWS_AS(cosine_lr(0.05, 101, 100), ContractError);
}

TEST_CASE("sgd_step without momentum or decay is plain descent") {
    Mat p = Mat::Ones(2, 2), g = Mat::Constant(2, 2, 0.5), buf = Mat::Zero(2, 2);
    sgd_step(p, g, buf, 0.1, 0.0, 0.0);
    CHECK((p - Mat::Constant(2, 2, 0.95)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("sgd_step leaves parameters alone for zero gradient") {
    Mat p = Mat::Ones(2, 2), g = Mat::Zero(2, 2), buf = Mat::Zero(2, 2);
    sgd_step(p, g, buf, 0.1, 0.9, 0.0);
    CHECK(p == Mat::Ones(2, 2));
}

TEST_CASE("two momentum steps on a constant gradient accumulate 1 + 1.9") {
    Mat p = Mat::Zero(1, 1), g = Mat::Ones(1, 1), buf = Mat::Zero(1, 1);
    const double lr = 0.1;
    sgd_step(p, g, buf, lr, 0.9, 0.0);
    sgd_step(p, g, buf, lr, 0.9, 0.0);
    CHECK(p(0, 0) == doctest::Approx(-lr * (1.0 + 1.9)).epsilon(1e-14));
}

TEST_CASE("weight decay folds into the gradient") {
    Mat p = Mat::Ones(1, 1), g = Mat::Zero(1, 1), buf = Mat::Zero(1, 1);
    sgd_step(p, g, buf, 0.1, 0.0, 0.01);
    CHECK(p(0, 0) == doctest::Approx(1.0 - 0.1 * 0.01).epsilon(1e-14));
}

TEST_CASE("zero epochs returns the initialized model and empty history") {
    LabeledDataset ds = small_data();
    TrainConfig cfg = small_config();
    cfg.epochs = 0;
    TrainResult r = train(cfg, ds);
    CHECK(r.history.empty());
    Model fresh = init_model(static_cast<int>(ds.dim()), cfg.hidden_dim, cfg.feature_dim,
                             derive_seed(cfg.seed, {kStreamInit}));
    CHECK(r.model.W_enc == fresh.W_enc);
    CHECK(r.model.W_pred == fresh.W_pred);
}

TEST_CASE("training is deterministic down to the bit") {
    LabeledDataset ds = small_data();
    TrainConfig cfg = small_config();
    TrainResult a = train(cfg, ds);
    TrainResult b = train(cfg, ds);
    CHECK(a.model.W_enc == b.model.W_enc);
    CHECK(a.model.W_proj == b.model.W_proj);
    CHECK(a.model.W_pred == b.model.W_pred);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i)
        CHECK(a.history[i].total == b.history[i].total);
    cfg.seed += 1;
    TrainResult c = train(cfg, ds);
    CHECK(a.model.W_enc != c.model.W_enc);
}

TEST_CASE("EMA target stays isolated from gradients and moves only by EMA") {
    LabeledDataset ds = small_data();
    TrainConfig cfg = small_config();
    cfg.use_ema = true;
    cfg.ema_m = 1.0;  // frozen target: EMA never moves it
    TrainResult r = train(cfg, ds);
    Model fresh = init_model(static_cast<int>(ds.dim()), cfg.hidden_dim, cfg.feature_dim,
                             derive_seed(cfg.seed, {kStreamInit}));
    CHECK(r.target.W_enc == fresh.W_enc);      // untouched by training
    CHECK(r.model.W_enc != fresh.W_enc);       // online branch did move
}

TEST_CASE("pool contents are untouched by backward (hash check)") {
    LabeledDataset ds = small_data();
    TrainConfig cfg = small_config();
    cfg.epochs = 1;
    TrainResult r = train(cfg, ds);
    Mat entries = r.pool.entries();
    const std::uint64_t before = hash_mat(entries);
    // a backward pass over arbitrary views must not change pool state
    Mat X1 = ds.X.topRows(8), X2 = ds.X.middleRows(8, 8);
    Mat Z = Mat::Zero(8, cfg.feature_dim);
    for (int i = 0; i < 8; ++i) Z(i, i % cfg.feature_dim) = 1.0;
    (void)backward(r.model, X1, X2, Z, Z, Z, Z, 0.5);
    CHECK(hash_mat(r.pool.entries()) == before);
}

TEST_CASE("training loss decreases on the small problem") {
    LabeledDataset ds = small_data();
    TrainConfig cfg = small_config();
    cfg.epochs = 20;
    TrainResult r = train(cfg, ds);
    const double first = r.history.front().total;
    const double last = r.history.back().total;
    CHECK(last < first);
}

TEST_CASE("pool misses fall back to the in-batch positive and are counted") {
    LabeledDataset ds = small_data();
    TrainConfig cfg = small_config();
    cfg.epochs = 1;
    TrainResult r = train(cfg, ds);
    // the very first batch starts with an empty pool
    CHECK(r.pool_miss_count > 0);
}

TEST_CASE("metrics record the spec'd fields consistently") {
    LabeledDataset ds = small_data();
    TrainConfig cfg = small_config();
    cfg.epochs = 3;
    TrainResult r = train(cfg, ds);
    REQUIRE(r.history.size() == 3);
    for (const auto& rec : r.history) {
        CHECK(rec.total ==
              doctest::Approx(cfg.alpha * rec.ell_ssl + (1.0 - cfg.alpha) * rec.ell_sup));
        if (rec.St_tilde > 0)
            CHECK(rec.ratio == doctest::Approx(rec.Sw_tilde / rec.St_tilde));
    }
}

TEST_CASE("alpha sweep: singleton sweep equals a single train call") {
    LabeledDataset ds = small_data();
    LabeledDataset test = small_data(24, 15, 0.2, 9);
    TrainConfig cfg = small_config();
    auto rows = run_alpha_sweep({0.5}, cfg, ds, test, 5);
    REQUIRE(rows.size() == 1);
    cfg.alpha = 0.5;
    TrainResult r = train(cfg, ds);
    CHECK(rows[0].final_metrics.total == doctest::Approx(r.history.back().total));
}

TEST_CASE("alpha sweep is reproducible") {
    LabeledDataset ds = small_data();
    LabeledDataset test = small_data(24, 15, 0.2, 9);
    TrainConfig cfg = small_config();
    auto a = run_alpha_sweep({0.0, 1.0}, cfg, ds, test, 5);
    auto b = run_alpha_sweep({0.0, 1.0}, cfg, ds, test, 5);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].knn_acc == b[i].knn_acc);
        CHECK(a[i].linear_acc == b[i].linear_acc);
        CHECK(a[i].final_metrics.Sw_tilde == b[i].final_metrics.Sw_tilde);
    }
}

TEST_CASE("collapse_ablation requires an active supervised loss") {
    LabeledDataset ds = small_data();
    LabeledDataset test = small_data(24, 15, 0.2, 9);
    TrainConfig cfg = small_config();
    cfg.alpha = 1.0;
    CHECK_THROWS_AS(collapse_ablation(true, false, cfg, ds, test, 5), ContractError);
}

TEST_CASE("train rejects datasets with a missing class") {
    LabeledDataset ds = small_data();
    for (auto& y : ds.y)
        if (y == 2) y = 1;  // class 2 disappears
    TrainConfig cfg = small_config();
    CHECK_THROWS_AS(train(cfg, ds), ContractError);
}

TEST_SUITE_END();
