#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ancl/common.hpp"

namespace ancl {

/// Gaussian class mixture: column y of `means` is the mean of class y, all
/// classes share the isotropic covariance cov_scale * I.
struct ClassSpec {
    int num_classes = 0;
    int dim = 0;
    Mat means;         // dim x num_classes
    double cov_scale = 0.0;

    void validate() const;
};

struct LabeledDataset {
    Mat X;                        // n x dim, one sample per row
    std::vector<std::int32_t> y;  // labels in [0, num_classes)
    ClassSpec spec;
    bool whitened = false;

    Eigen::Index n() const { return X.rows(); }
    Eigen::Index dim() const { return X.cols(); }
};

/// First C left singular vectors of a d x C matrix with iid standard
/// Gaussian entries; columns are orthonormal.
Mat make_class_means(int num_classes, int dim, std::uint64_t seed);

/// Exactly n_per_class samples per class, x = mu_y + N(0, cov_scale * I).
/// Rows are grouped by class; deterministic for a fixed seed.
LabeledDataset sample_dataset(const ClassSpec& spec, int n_per_class, std::uint64_t seed);

struct AugmentationSpec {
    double mask_fraction = 0.0;
    Vec fill;                 // usually the overall dataset mean
    std::uint64_t rng_seed = 0;

    /// round-half-to-even of mask_fraction * dim
    int mask_count(int dim) const;
};

/// Replace a fresh uniformly random subset of mask_count coordinates with the
/// corresponding entries of fill; other coordinates are untouched.
Vec augment(const Vec& x, const AugmentationSpec& aug, std::mt19937_64& rng);

/// Batched variant, one independent mask per row. Row i uses the RNG stream
/// derived from (base_seed, i), so the result does not depend on threading.
Mat augment_batch(const Mat& X, const AugmentationSpec& aug, std::uint64_t base_seed);

/// Mean squared deviation of augmented views from their originals, divided by
/// the dimension: the effective augmentation noise scale sigma_e^2 used by
/// the theory checks.
double estimate_aug_noise(const LabeledDataset& ds, const AugmentationSpec& aug, int draws,
                          std::uint64_t seed);

struct WhiteningTransform {
    Vec mean;       // subtracted first
    Mat transform;  // then right-multiplied: X' = (X - mean) * transform
    Mat apply(const Mat& X) const;
    static WhiteningTransform identity(int dim);
};

/// Empirically center and decorrelate to unit total covariance. Eigenvalues
/// of the sample covariance below `ridge` are clamped to it (with a warning)
/// so rank-deficient data stays usable.
std::pair<LabeledDataset, WhiteningTransform> whiten(const LabeledDataset& ds,
                                                     double ridge = 1e-6);

enum class DownstreamMode { kInterpolate, kExtrapolate };

/// Three-class downstream task derived from 3 pretraining means:
/// interpolation uses normalized pairwise midpoints, extrapolation pushes
/// each mean outward from the global mean; class covariance is sigma^2 * I.
LabeledDataset make_downstream(const ClassSpec& pretrain, DownstreamMode mode, double sigma,
                               int n_per_class, std::uint64_t seed);

// Flat binary persistence: magic "ANCLDS1", u32 n, u32 d, u32 C, u8 whitened,
// then row-major f64 LE X, then n i32 LE labels.
void save_dataset(const std::string& path, const LabeledDataset& ds);
LabeledDataset load_dataset(const std::string& path);

/// CSV with one row per sample, label in the last column.
void export_dataset_csv(const std::string& path, const LabeledDataset& ds);

}  // namespace ancl
