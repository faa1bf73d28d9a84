#include "ancl/target_pool.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ancl {

namespace {
constexpr double kUnitTol = 1e-10;
}

void TargetPool::Ring::push(const Vec& z, std::int32_t label) {
    if (count < cap) {
        feats.push_back(z);
        labs.push_back(label);
        ++count;
        return;
    }
    feats[head] = z;
    labs[head] = label;
    head = (head + 1) % cap;
}

TargetPool::TargetPool(PoolVariant variant, int num_classes, int feature_dim, int capacity,
                       double ema_rate)
    : variant_(variant),
      num_classes_(num_classes),
      dim_(feature_dim),
      capacity_(capacity),
      ema_rate_(ema_rate) {
    if (num_classes < 1 || feature_dim < 1) throw ContractError("TargetPool: empty shape");
    if (variant != PoolVariant::kLearnablePrototypes && capacity < 1)
        throw ContractError("TargetPool: capacity < 1");
    if (ema_rate < 0.0 || ema_rate > 1.0) throw ContractError("TargetPool: ema_rate outside [0,1]");
    switch (variant) {
        case PoolVariant::kClassAgnostic:
            queue_.cap = static_cast<std::size_t>(capacity);
            break;
        case PoolVariant::kClassWise:
            per_class_.resize(num_classes);
            for (auto& r : per_class_) r.cap = static_cast<std::size_t>(capacity);
            break;
        case PoolVariant::kLearnablePrototypes:
            prototypes_ = Mat::Zero(num_classes, feature_dim);
            proto_counts_.assign(num_classes, 0);
            break;
    }
}

std::size_t TargetPool::size() const {
    switch (variant_) {
        case PoolVariant::kClassAgnostic:
            return queue_.count;
        case PoolVariant::kClassWise: {
            std::size_t total = 0;
            for (const auto& r : per_class_) total += r.count;
            return total;
        }
        case PoolVariant::kLearnablePrototypes:
            return static_cast<std::size_t>(
                std::count_if(proto_counts_.begin(), proto_counts_.end(),
                              [](std::int64_t c) { return c > 0; }));
    }
    return 0;
}

std::size_t TargetPool::class_count(int label) const {
    std::size_t n = 0;
    switch (variant_) {
        case PoolVariant::kClassAgnostic:
            for (std::size_t i = 0; i < queue_.count; ++i)
                if (queue_.labs[i] == label) ++n;
            return n;
        case PoolVariant::kClassWise:
            return per_class_[label].count;
        case PoolVariant::kLearnablePrototypes:
            return proto_counts_[label] > 0 ? 1 : 0;
    }
    return n;
}

void TargetPool::push(const Vec& z, int label) {
    if (z.size() != dim_) throw DimensionError("TargetPool::push: feature dim mismatch");
    if (label < 0 || label >= num_classes_) throw ContractError("TargetPool::push: bad label");
    if (std::abs(z.squaredNorm() - 1.0) > kUnitTol)
        throw ContractError("TargetPool::push: feature is not unit-norm");
    switch (variant_) {
        case PoolVariant::kClassAgnostic:
            queue_.push(z, static_cast<std::int32_t>(label));
            break;
        case PoolVariant::kClassWise:
            per_class_[label].push(z, static_cast<std::int32_t>(label));
            break;
        case PoolVariant::kLearnablePrototypes:
            if (proto_counts_[label] == 0)
                prototypes_.row(label) = z.transpose();
            else
                prototypes_.row(label) =
                    ema_rate_ * prototypes_.row(label) + (1.0 - ema_rate_) * z.transpose();
            ++proto_counts_[label];
            break;
    }
}

std::optional<Vec> TargetPool::sample_supervised_target(int label, int M,
                                                        std::mt19937_64* rng) const {
    if (M != kSampleAll && M < 1) throw ContractError("sample_supervised_target: M < 1");
    if (label < 0 || label >= num_classes_)
        throw ContractError("sample_supervised_target: bad label");

    if (variant_ == PoolVariant::kLearnablePrototypes) {
        if (proto_counts_[label] == 0) return std::nullopt;
        Vec p = prototypes_.row(label).transpose();
        const double n = p.norm();
        if (n < 1e-12) return std::nullopt;
        return p / n;  // EMA of unit vectors shrinks; renormalize on read
    }

    std::vector<const Vec*> candidates;
    if (variant_ == PoolVariant::kClassAgnostic) {
        for (std::size_t i = 0; i < queue_.count; ++i)
            if (queue_.labs[i] == label) candidates.push_back(&queue_.feats[i]);
    } else {
        const Ring& r = per_class_[label];
        for (std::size_t i = 0; i < r.count; ++i) candidates.push_back(&r.feats[i]);
    }
    if (candidates.empty()) return std::nullopt;

    Vec mean = Vec::Zero(dim_);
    if (M == kSampleAll || static_cast<std::size_t>(M) >= candidates.size()) {
        for (const Vec* v : candidates) mean += *v;
        mean /= static_cast<double>(candidates.size());
        return mean;
    }
    if (!rng) throw ContractError("sample_supervised_target: finite M needs an RNG");
    // Partial Fisher-Yates over candidate indices, M distinct draws.
    std::vector<std::size_t> idx(candidates.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < M; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(*rng)]);
        mean += *candidates[idx[i]];
    }
    return mean / static_cast<double>(M);
}

Mat TargetPool::entries() const {
    std::vector<const Vec*> rows;
    if (variant_ == PoolVariant::kClassAgnostic) {
        for (std::size_t i = 0; i < queue_.count; ++i) rows.push_back(&queue_.feats[i]);
    } else if (variant_ == PoolVariant::kClassWise) {
        for (const auto& r : per_class_)
            for (std::size_t i = 0; i < r.count; ++i) rows.push_back(&r.feats[i]);
    }
    Mat out(static_cast<Eigen::Index>(rows.size()), dim_);
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = *rows[i];
    return out;
}

std::vector<std::int32_t> TargetPool::labels() const {
    std::vector<std::int32_t> out;
    if (variant_ == PoolVariant::kClassAgnostic) {
        out.assign(queue_.labs.begin(), queue_.labs.begin() + queue_.count);
    } else if (variant_ == PoolVariant::kClassWise) {
        for (const auto& r : per_class_)
            out.insert(out.end(), r.labs.begin(), r.labs.begin() + r.count);
    }
    return out;
}

void TargetPool::restore(const Mat& entries, const std::vector<std::int32_t>& labels,
                         const Mat& prototypes, const std::vector<std::int64_t>& counts) {
    if (variant_ == PoolVariant::kLearnablePrototypes) {
        if (prototypes.rows() != num_classes_ || prototypes.cols() != dim_)
            throw DimensionError("TargetPool::restore: prototype shape mismatch");
        prototypes_ = prototypes;
        proto_counts_ = counts;
        return;
    }
    if (entries.rows() != static_cast<Eigen::Index>(labels.size()))
        throw DimensionError("TargetPool::restore: entries/labels mismatch");
    for (Eigen::Index i = 0; i < entries.rows(); ++i)
        push(entries.row(i).transpose(), labels[static_cast<std::size_t>(i)]);
}

}  // namespace ancl
