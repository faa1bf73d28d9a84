#include "ancl/pipeline.hpp"

#include "ancl/rng.hpp"

namespace ancl {

Pipeline build_pipeline(const RunConfig& cfg) {
    cfg.validate();
    Pipeline p;
    p.spec.num_classes = cfg.classes;
    p.spec.dim = cfg.dim;
    p.spec.cov_scale = cfg.cov_scale;
    p.spec.means = make_class_means(cfg.classes, cfg.dim, derive_seed(cfg.seed, {kStreamData}));
    p.train = sample_dataset(p.spec, cfg.n_per_class, derive_seed(cfg.seed, {kStreamData, 1}));
    p.test = sample_dataset(p.spec, cfg.test_per_class, derive_seed(cfg.seed, {kStreamTestData}));

    if (cfg.preprocess == "whiten") {
        auto [wh_train, transform] = whiten(p.train);
        p.train = std::move(wh_train);
        p.transform = std::move(transform);
        p.test.X = p.transform.apply(p.test.X);
        p.test.whitened = true;
    } else if (cfg.preprocess == "center") {
        p.transform = WhiteningTransform::identity(cfg.dim);
        p.transform.mean = p.train.X.colwise().mean();
        p.train.X.rowwise() -= p.transform.mean.transpose();
        p.test.X.rowwise() -= p.transform.mean.transpose();
    } else {
        p.transform = WhiteningTransform::identity(cfg.dim);
    }

    AugmentationSpec aug;
    aug.mask_fraction = cfg.mask_fraction;
    aug.fill = p.train.X.colwise().mean();
    p.sigma_e_estimate = estimate_aug_noise(p.train, aug, /*draws=*/2,
                                            derive_seed(cfg.seed, {kStreamNoiseEstimate}));
    return p;
}

}  // namespace ancl
