#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ancl/common.hpp"
#include "ancl/model.hpp"
#include "ancl/target_pool.hpp"
#include "ancl/trainer.hpp"

namespace ancl {

/// Named-matrix container behind checkpoints: magic "ANCLCK1", then per
/// record u32 name length + name + u32 rows + u32 cols + row-major f64 LE
/// payload. The single record named "pool.labels" carries i32 data instead.
struct Checkpoint {
    std::vector<std::pair<std::string, Mat>> matrices;
    std::vector<std::int32_t> pool_labels;
    bool has_pool_labels = false;

    const Mat* find(const std::string& name) const;
    const Mat& require(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

/// Model + optimizer buffers + target model + pool state.
Checkpoint pack_train_state(const Model& model, const SgdBuffers* buffers,
                            const TargetModel* target, const TargetPool* pool);
Model unpack_model(const Checkpoint& ck);

/// One MetricsRecord as a single-line JSON object.
std::string metrics_to_json(const MetricsRecord& rec);

}  // namespace ancl
