#pragma once

#include "ancl/config.hpp"
#include "ancl/dataset.hpp"

namespace ancl {

/// Resolved data artifacts for a run: generated train/test splits mapped
/// through the configured preprocessing, plus the transform itself (identity
/// when preprocess=none) so downstream datasets can be mapped consistently.
struct Pipeline {
    ClassSpec spec;  // generating spec, pre-preprocessing
    LabeledDataset train;
    LabeledDataset test;
    WhiteningTransform transform;
    double sigma_e_estimate = 0.0;
};

Pipeline build_pipeline(const RunConfig& cfg);

}  // namespace ancl
