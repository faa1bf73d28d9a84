#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ancl/trainer.hpp"

namespace ancl {

/// Everything a run needs, resolvable from a flat key=value config file with
/// CLI-flag overrides. The effective config is echoed next to every output
/// so a run can be reproduced from its artifacts alone.
struct RunConfig {
    std::string run_name = "toy";
    std::string out_dir = "runs/toy";
    std::uint64_t seed = 0;

    // data generation (Gaussian classes with orthonormal means)
    int classes = 3;
    int dim = 2048;
    int n_per_class = 1000;
    int test_per_class = 500;
    double cov_scale = 0.35;
    // preprocessing: none | center | whiten
    std::string preprocess = "whiten";

    double mask_fraction = 0.6;

    TrainConfig train;

    int knn_k = 20;
    bool eval_encoder_features = false;  // probe encoder output instead of z
    double collapse_st_tol = 1e-3;
    double collapse_knn_factor = 1.5;

    std::vector<double> sweep_alphas = {0.0, 0.2, 0.5, 0.8, 1.0};

    bool fail_on_collapse = false;

    void validate() const;
};

/// Parse `key=value` lines ('#' comments, blank lines ignored). Unknown keys
/// are an error so typos do not silently fall back to defaults.
RunConfig parse_config_file(const std::string& path);
void apply_config_line(RunConfig& cfg, const std::string& key, const std::string& value);

/// The resolved config, one key=value per line, parseable by the above.
std::string dump_config(const RunConfig& cfg);

}  // namespace ancl
