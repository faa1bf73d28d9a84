#include "ancl/config.hpp"

#include <fstream>
#include <sstream>

namespace ancl {

namespace {

bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "off" || v == "no") return false;
    throw ContractError("config: not a boolean: " + v);
}

std::string pool_variant_name(PoolVariant v) {
    switch (v) {
        case PoolVariant::kClassAgnostic:
            return "agnostic";
        case PoolVariant::kClassWise:
            return "classwise";
        case PoolVariant::kLearnablePrototypes:
            return "proto";
    }
    return "agnostic";
}

PoolVariant parse_pool_variant(const std::string& v) {
    if (v == "agnostic") return PoolVariant::kClassAgnostic;
    if (v == "classwise") return PoolVariant::kClassWise;
    if (v == "proto") return PoolVariant::kLearnablePrototypes;
    throw ContractError("config: unknown pool variant: " + v);
}

std::vector<double> parse_double_list(const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    return out;
}

}  // namespace

void RunConfig::validate() const {
    if (classes < 1 || dim < 1 || n_per_class < 1 || test_per_class < 1)
        throw ContractError("config: non-positive data size");
    if (classes > dim) throw ContractError("config: classes > dim");
    if (cov_scale < 0.0) throw ContractError("config: negative cov_scale");
    if (preprocess != "none" && preprocess != "center" && preprocess != "whiten")
        throw ContractError("config: preprocess must be none|center|whiten");
    if (mask_fraction < 0.0 || mask_fraction > 1.0)
        throw ContractError("config: mask_fraction outside [0,1]");
    if (knn_k < 1) throw ContractError("config: knn_k < 1");
    for (double a : sweep_alphas)
        if (a < 0.0 || a > 1.0) throw ContractError("config: sweep alpha outside [0,1]");
    train.validate();
}

void apply_config_line(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "run_name") cfg.run_name = value;
    else if (key == "out_dir") cfg.out_dir = value;
    else if (key == "seed") { cfg.seed = std::stoull(value); cfg.train.seed = cfg.seed; }
    else if (key == "data.classes") cfg.classes = std::stoi(value);
    else if (key == "data.dim") cfg.dim = std::stoi(value);
    else if (key == "data.n_per_class") cfg.n_per_class = std::stoi(value);
    else if (key == "data.test_per_class") cfg.test_per_class = std::stoi(value);
    else if (key == "data.cov_scale") cfg.cov_scale = std::stod(value);
    else if (key == "data.preprocess") cfg.preprocess = value;
    else if (key == "aug.mask_fraction") { cfg.mask_fraction = std::stod(value); cfg.train.mask_fraction = cfg.mask_fraction; }
    else if (key == "train.epochs") cfg.train.epochs = std::stoi(value);
    else if (key == "train.batch_size") cfg.train.batch_size = std::stoi(value);
    else if (key == "train.lr") cfg.train.lr = std::stod(value);
    else if (key == "train.momentum") cfg.train.momentum = std::stod(value);
    else if (key == "train.weight_decay") cfg.train.weight_decay = std::stod(value);
    else if (key == "train.alpha") cfg.train.alpha = std::stod(value);
    else if (key == "train.predictor_constant_lr") cfg.train.predictor_constant_lr = parse_bool(value);
    else if (key == "model.hidden_dim") cfg.train.hidden_dim = std::stoi(value);
    else if (key == "model.feature_dim") cfg.train.feature_dim = std::stoi(value);
    else if (key == "pool.variant") cfg.train.pool_variant = parse_pool_variant(value);
    else if (key == "pool.size") cfg.train.pool_size = std::stoi(value);
    else if (key == "pool.M") cfg.train.M = value == "all" ? kSampleAll : std::stoi(value);
    else if (key == "pool.proto_ema") cfg.train.proto_ema = std::stod(value);
    else if (key == "pool.enabled") cfg.train.pool_enabled = parse_bool(value);
    else if (key == "ema.enabled") cfg.train.use_ema = parse_bool(value);
    else if (key == "ema.momentum") cfg.train.ema_m = std::stod(value);
    else if (key == "eval.knn_k") cfg.knn_k = std::stoi(value);
    else if (key == "eval.encoder_features") cfg.eval_encoder_features = parse_bool(value);
    else if (key == "collapse.st_tol") cfg.collapse_st_tol = std::stod(value);
    else if (key == "collapse.knn_factor") cfg.collapse_knn_factor = std::stod(value);
    else if (key == "sweep.alphas") cfg.sweep_alphas = parse_double_list(value);
    else if (key == "fail_on_collapse") cfg.fail_on_collapse = parse_bool(value);
    else throw ContractError("config: unknown key: " + key);
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config: " + path);
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ContractError("config: line " + std::to_string(lineno) + " has no '='");
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        auto trim = [](std::string& s) {
            const auto a = s.find_first_not_of(" \t");
            const auto b = s.find_last_not_of(" \t");
            s = a == std::string::npos ? "" : s.substr(a, b - a + 1);
        };
        trim(key);
        trim(value);
        apply_config_line(cfg, key, value);
    }
    return cfg;
}

std::string dump_config(const RunConfig& cfg) {
    std::ostringstream o;
    o.precision(17);
    o << "run_name=" << cfg.run_name << "\n";
    o << "out_dir=" << cfg.out_dir << "\n";
    o << "seed=" << cfg.seed << "\n";
    o << "data.classes=" << cfg.classes << "\n";
    o << "data.dim=" << cfg.dim << "\n";
    o << "data.n_per_class=" << cfg.n_per_class << "\n";
    o << "data.test_per_class=" << cfg.test_per_class << "\n";
    o << "data.cov_scale=" << cfg.cov_scale << "\n";
    o << "data.preprocess=" << cfg.preprocess << "\n";
    o << "aug.mask_fraction=" << cfg.mask_fraction << "\n";
    o << "train.epochs=" << cfg.train.epochs << "\n";
    o << "train.batch_size=" << cfg.train.batch_size << "\n";
    o << "train.lr=" << cfg.train.lr << "\n";
    o << "train.momentum=" << cfg.train.momentum << "\n";
    o << "train.weight_decay=" << cfg.train.weight_decay << "\n";
    o << "train.alpha=" << cfg.train.alpha << "\n";
    o << "train.predictor_constant_lr=" << (cfg.train.predictor_constant_lr ? "true" : "false")
      << "\n";
    o << "model.hidden_dim=" << cfg.train.hidden_dim << "\n";
    o << "model.feature_dim=" << cfg.train.feature_dim << "\n";
    o << "pool.variant=" << pool_variant_name(cfg.train.pool_variant) << "\n";
    o << "pool.size=" << cfg.train.pool_size << "\n";
    o << "pool.M=" << (cfg.train.M == kSampleAll ? std::string("all") : std::to_string(cfg.train.M))
      << "\n";
    o << "pool.proto_ema=" << cfg.train.proto_ema << "\n";
    o << "pool.enabled=" << (cfg.train.pool_enabled ? "true" : "false") << "\n";
    o << "ema.enabled=" << (cfg.train.use_ema ? "true" : "false") << "\n";
    o << "ema.momentum=" << cfg.train.ema_m << "\n";
    o << "eval.knn_k=" << cfg.knn_k << "\n";
    o << "eval.encoder_features=" << (cfg.eval_encoder_features ? "true" : "false") << "\n";
    o << "collapse.st_tol=" << cfg.collapse_st_tol << "\n";
    o << "collapse.knn_factor=" << cfg.collapse_knn_factor << "\n";
    {
        o << "sweep.alphas=";
        for (std::size_t i = 0; i < cfg.sweep_alphas.size(); ++i)
            o << (i ? "," : "") << cfg.sweep_alphas[i];
        o << "\n";
    }
    o << "fail_on_collapse=" << (cfg.fail_on_collapse ? "true" : "false") << "\n";
    return o.str();
}

}  // namespace ancl
