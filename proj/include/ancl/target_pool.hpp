#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "ancl/common.hpp"

namespace ancl {

enum class PoolVariant { kClassAgnostic, kClassWise, kLearnablePrototypes };

constexpr int kSampleAll = -1;

/// Labeled store of detached target features serving averaged same-class
/// supervised targets. Three designs: one FIFO queue over all classes,
/// per-class FIFO queues, or per-class EMA prototypes.
class TargetPool {
  public:
    /// capacity: total |Q| for kClassAgnostic, per-class for kClassWise,
    /// ignored for prototypes. ema_rate only applies to prototypes.
    TargetPool(PoolVariant variant, int num_classes, int feature_dim, int capacity,
               double ema_rate = 0.99);

    PoolVariant variant() const { return variant_; }
    int num_classes() const { return num_classes_; }
    int feature_dim() const { return dim_; }
    std::size_t size() const;
    std::size_t class_count(int label) const;

    /// z must be unit-norm (1e-10); prototypes store the raw EMA instead.
    void push(const Vec& z, int label);

    /// Mean of min(M, available) same-label entries drawn without
    /// replacement (M = kSampleAll averages every one, no RNG draw).
    /// Prototypes return the normalized prototype. Empty class -> nullopt.
    std::optional<Vec> sample_supervised_target(int label, int M, std::mt19937_64* rng) const;

    // Checkpoint support: feature rows + labels in insertion-independent
    // storage order, and prototype state when applicable.
    Mat entries() const;
    std::vector<std::int32_t> labels() const;
    const Mat& prototypes() const { return prototypes_; }
    const std::vector<std::int64_t>& prototype_counts() const { return proto_counts_; }
    void restore(const Mat& entries, const std::vector<std::int32_t>& labels,
                 const Mat& prototypes, const std::vector<std::int64_t>& counts);

  private:
    struct Ring {
        std::vector<Vec> feats;
        std::vector<std::int32_t> labs;
        std::size_t head = 0;  // next slot to overwrite once full
        std::size_t count = 0;
        std::size_t cap = 0;

        void push(const Vec& z, std::int32_t label);
    };

    PoolVariant variant_;
    int num_classes_;
    int dim_;
    int capacity_;
    double ema_rate_;
    Ring queue_;                   // class-agnostic
    std::vector<Ring> per_class_;  // class-wise
    Mat prototypes_;               // C x k, un-renormalized EMA
    std::vector<std::int64_t> proto_counts_;
};

}  // namespace ancl
