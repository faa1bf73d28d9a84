#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "ancl/config.hpp"
#include "ancl/eval.hpp"
#include "ancl/io.hpp"
#include "ancl/pipeline.hpp"
#include "ancl/rng.hpp"
#include "ancl/theory.hpp"
#include "ancl/trainer.hpp"

namespace fs = std::filesystem;
using namespace ancl;

namespace {

struct CliOptions {
    std::string config_path;
    std::string out_dir;
    std::string data_dir;
    std::string checkpoint;
    bool has_seed = false;
    std::uint64_t seed = 0;
    bool has_alpha = false;
    double alpha = 0.5;
    bool fail_on_collapse = false;
    bool has_k = false;
    int k = 20;
    std::string pool_variant;
    int pool_size = 0;
    std::string m_value;
    std::string ema;
    bool csv = false;
};

RunConfig resolve_config(const CliOptions& opt) {
    RunConfig cfg = opt.config_path.empty() ? RunConfig{} : parse_config_file(opt.config_path);
    if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
    if (opt.has_seed) {
        cfg.seed = opt.seed;
        cfg.train.seed = opt.seed;
    }
    if (opt.has_alpha) cfg.train.alpha = opt.alpha;
    if (opt.fail_on_collapse) cfg.fail_on_collapse = true;
    if (opt.has_k) cfg.knn_k = opt.k;
    if (!opt.pool_variant.empty()) apply_config_line(cfg, "pool.variant", opt.pool_variant);
    if (opt.pool_size > 0) cfg.train.pool_size = opt.pool_size;
    if (!opt.m_value.empty()) apply_config_line(cfg, "pool.M", opt.m_value);
    if (!opt.ema.empty()) apply_config_line(cfg, "ema.enabled", opt.ema);
    cfg.validate();
    return cfg;
}

void echo_config(const RunConfig& cfg, const fs::path& dir) {
    std::ofstream f(dir / "config.effective");
    if (!f) throw IoError("cannot write config echo in " + dir.string());
    f << dump_config(cfg);
}

void save_transform(const fs::path& path, const WhiteningTransform& t) {
    Checkpoint ck;
    ck.matrices.emplace_back("transform.mean", Mat(t.mean.transpose()));
    ck.matrices.emplace_back("transform.matrix", t.transform);
    save_checkpoint(path.string(), ck);
}

WhiteningTransform load_transform(const fs::path& path) {
    Checkpoint ck = load_checkpoint(path.string());
    WhiteningTransform t;
    t.mean = ck.require("transform.mean").row(0).transpose();
    t.transform = ck.require("transform.matrix");
    return t;
}

// gen-data artifacts in cfg.out_dir; train/eval read them back from there.
int cmd_gen_data(const CliOptions& opt) {
    RunConfig cfg = resolve_config(opt);
    Pipeline p = build_pipeline(cfg);
    fs::create_directories(cfg.out_dir);
    const fs::path dir(cfg.out_dir);
    save_dataset((dir / "dataset.bin").string(), p.train);
    save_dataset((dir / "test_dataset.bin").string(), p.test);
    save_transform(dir / "transform.bin", p.transform);
    if (opt.csv) {
        export_dataset_csv((dir / "dataset.csv").string(), p.train);
        export_dataset_csv((dir / "test_dataset.csv").string(), p.test);
    }
    nlohmann::json summary{{"n", p.train.n()},
                           {"d", p.train.dim()},
                           {"C", p.spec.num_classes},
                           {"whitened", p.train.whitened},
                           {"cov_scale", cfg.cov_scale},
                           {"preprocess", cfg.preprocess},
                           {"seed", cfg.seed},
                           {"n_test", p.test.n()},
                           {"sigma_e_estimate", p.sigma_e_estimate}};
    std::ofstream(dir / "summary.json") << summary.dump(2) << "\n";
    echo_config(cfg, dir);
    std::cout << "wrote " << (dir / "dataset.bin").string() << " (" << p.train.n() << "x"
              << p.train.dim() << "), sigma_e^2 ~= " << p.sigma_e_estimate << "\n";
    return kExitOk;
}

struct LoadedData {
    LabeledDataset train;
    LabeledDataset test;
    WhiteningTransform transform;
};

LoadedData load_run_data(const RunConfig& cfg, const std::string& data_dir) {
    const fs::path dir(data_dir.empty() ? cfg.out_dir : data_dir);
    if (!fs::exists(dir / "dataset.bin"))
        throw IoError("no dataset at " + (dir / "dataset.bin").string() + " (run gen-data first)");
    LoadedData d;
    d.train = load_dataset((dir / "dataset.bin").string());
    d.test = load_dataset((dir / "test_dataset.bin").string());
    d.transform = load_transform(dir / "transform.bin");
    // generator metadata is not stored in the binary; rebuild from config
    d.train.spec.cov_scale = cfg.cov_scale;
    d.train.spec.means =
        make_class_means(cfg.classes, cfg.dim, derive_seed(cfg.seed, {kStreamData}));
    d.test.spec = d.train.spec;
    return d;
}

void print_eval_row(std::ostream& os, double alpha, const EvalReport& rep, double Sw,
                    double ratio) {
    os << "alpha=" << alpha << " knn=" << rep.knn_acc * 100.0
       << " linear=" << rep.linear_acc * 100.0 << " Sw=" << Sw << " ratio=" << ratio * 100.0
       << "% collapsed=" << (rep.collapsed ? "yes" : "no") << "\n";
}

int cmd_train(const CliOptions& opt) {
    RunConfig cfg = resolve_config(opt);
    LoadedData d = load_run_data(cfg, opt.data_dir);
    fs::create_directories(cfg.out_dir);
    const fs::path dir(cfg.out_dir);
    std::ofstream metrics(dir / "metrics.jsonl", std::ios::trunc);
    if (!metrics) throw IoError("cannot write metrics in " + cfg.out_dir);
    TrainResult r = train(cfg.train, d.train, [&](const MetricsRecord& rec) {
        metrics << metrics_to_json(rec) << "\n";
    });
    Checkpoint ck = pack_train_state(r.model, &r.buffers,
                                     cfg.train.use_ema ? &r.target : nullptr, &r.pool);
    save_checkpoint((dir / "checkpoint.bin").string(), ck);
    echo_config(cfg, dir);
    EvalReport rep = evaluate(r.model, d.train, d.test, cfg.knn_k,
                              derive_seed(cfg.seed, {kStreamEval}));
    const MetricsRecord last = r.history.empty() ? MetricsRecord{} : r.history.back();
    nlohmann::json final{{"final_eval", true},
                         {"alpha", cfg.train.alpha},
                         {"knn_acc", rep.knn_acc},
                         {"linear_acc", rep.linear_acc},
                         {"Sw_tilde", last.Sw_tilde},
                         {"ratio", last.ratio},
                         {"collapsed", rep.collapsed}};
    metrics << final.dump() << "\n";
    print_eval_row(std::cout, cfg.train.alpha, rep, last.Sw_tilde, last.ratio);
    if (rep.collapsed) {
        std::cerr << "warning: representation collapsed\n";
        if (cfg.fail_on_collapse) return kExitCheckFailure;
    }
    return kExitOk;
}

int cmd_sweep(const CliOptions& opt) {
    RunConfig cfg = resolve_config(opt);
    LoadedData d = load_run_data(cfg, opt.data_dir);
    fs::create_directories(cfg.out_dir);
    const fs::path dir(cfg.out_dir);
    auto rows = run_alpha_sweep(cfg.sweep_alphas, cfg.train, d.train, d.test, cfg.knn_k);
    std::ofstream csv(dir / "sweep.csv", std::ios::trunc);
    csv << "alpha,ell_ssl,ell_sup,Sw_tilde,ratio,knn_acc,linear_acc,collapsed\n";
    nlohmann::json jrows = nlohmann::json::array();
    for (const auto& r : rows) {
        csv << r.alpha << ',' << r.final_metrics.ell_ssl << ',' << r.final_metrics.ell_sup << ','
            << r.final_metrics.Sw_tilde << ',' << r.final_metrics.ratio << ',' << r.knn_acc << ','
            << r.linear_acc << ',' << (r.collapsed ? 1 : 0) << "\n";
        jrows.push_back({{"alpha", r.alpha},
                         {"ell_ssl", r.final_metrics.ell_ssl},
                         {"ell_sup", r.final_metrics.ell_sup},
                         {"Sw_tilde", r.final_metrics.Sw_tilde},
                         {"ratio", r.final_metrics.ratio},
                         {"knn_acc", r.knn_acc},
                         {"linear_acc", r.linear_acc},
                         {"collapsed", r.collapsed}});
        EvalReport rep{r.knn_acc, r.linear_acc, r.collapsed, 0.0};
        print_eval_row(std::cout, r.alpha, rep, r.final_metrics.Sw_tilde, r.final_metrics.ratio);
    }
    std::ofstream(dir / "sweep.json") << jrows.dump(2) << "\n";
    echo_config(cfg, dir);
    bool any_collapsed = false;
    for (const auto& r : rows) any_collapsed |= r.collapsed;
    if (any_collapsed && cfg.fail_on_collapse) return kExitCheckFailure;
    return kExitOk;
}

int cmd_verify_theory(const CliOptions& opt) {
    RunConfig cfg = resolve_config(opt);
    auto checks = run_theory_checks(cfg.seed);
    // Theorem 2 runs against a model: the given checkpoint, else a fresh
    // random model (expected to fail its threshold, as documented).
    Model m;
    if (!opt.checkpoint.empty())
        m = unpack_model(load_checkpoint(opt.checkpoint));
    else
        m = init_model(cfg.dim, cfg.train.hidden_dim, cfg.train.feature_dim,
                       derive_seed(cfg.seed, {kStreamInit}));
    checks.push_back(theorem2_check(m.W_pred, m.composed()));
    nlohmann::json out = nlohmann::json::array();
    bool all_pass = true;
    for (const auto& c : checks) {
        out.push_back({{"check_name", c.name},
                       {"residual", c.residual},
                       {"threshold", c.threshold},
                       {"pass", c.pass}});
        all_pass &= c.pass;
    }
    std::cout << out.dump(2) << "\n";
    if (!cfg.out_dir.empty()) {
        fs::create_directories(cfg.out_dir);
        std::ofstream(fs::path(cfg.out_dir) / "theory_report.json") << out.dump(2) << "\n";
    }
    return all_pass ? kExitOk : kExitCheckFailure;
}

int cmd_eval(const CliOptions& opt) {
    RunConfig cfg = resolve_config(opt);
    if (opt.checkpoint.empty()) throw ContractError("eval: --checkpoint is required");
    LoadedData d = load_run_data(cfg, opt.data_dir);
    Model m = unpack_model(load_checkpoint(opt.checkpoint));
    EvalReport rep = evaluate(m, d.train, d.test, cfg.knn_k, derive_seed(cfg.seed, {kStreamEval}));
    Mat feats = extract_features(m, d.train);
    EmpiricalVariances v = empirical_variances(feats, d.train.y);
    print_eval_row(std::cout, cfg.train.alpha, rep, v.Sw, v.ratio);
    if (rep.collapsed && cfg.fail_on_collapse) return kExitCheckFailure;
    return kExitOk;
}

int cmd_export_embeddings(const CliOptions& opt, const std::string& out_file) {
    RunConfig cfg = resolve_config(opt);
    if (opt.checkpoint.empty()) throw ContractError("export-embeddings: --checkpoint is required");
    LoadedData d = load_run_data(cfg, opt.data_dir);
    Model m = unpack_model(load_checkpoint(opt.checkpoint));
    Mat feats = extract_features(m, d.train);
    std::ofstream f(out_file, std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + out_file);
    f << "label";
    for (Eigen::Index j = 0; j < feats.cols(); ++j) f << ",z" << (j + 1);
    f << "\n";
    for (Eigen::Index i = 0; i < feats.rows(); ++i) {
        f << d.train.y[i];
        for (Eigen::Index j = 0; j < feats.cols(); ++j) f << ',' << feats(i, j);
        f << "\n";
    }
    std::cout << "wrote " << feats.rows() << " embeddings to " << out_file << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Supervised asymmetric non-contrastive learning lab"};
    app.require_subcommand(1);
    CliOptions opt;
    std::string export_out = "embeddings.csv";

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "key=value config file");
        sub->add_option("--seed", opt.seed, "root RNG seed")->each([&](const std::string&) {
            opt.has_seed = true;
        });
        sub->add_option("--out", opt.out_dir, "output directory");
        sub->add_option("--alpha", opt.alpha, "loss mixing coefficient")
            ->each([&](const std::string&) { opt.has_alpha = true; });
        sub->add_flag("--fail-on-collapse", opt.fail_on_collapse,
                      "exit nonzero when collapse is detected");
        sub->add_option("--k", opt.k, "k-NN neighbourhood size")->each([&](const std::string&) {
            opt.has_k = true;
        });
        sub->add_option("--pool", opt.pool_variant, "pool variant: agnostic|classwise|proto");
        sub->add_option("--pool-size", opt.pool_size, "pool capacity");
        sub->add_option("--M", opt.m_value, "positives per supervised target (int or 'all')");
        sub->add_option("--ema", opt.ema, "momentum target network: on|off");
    };

    auto* gen = app.add_subcommand("gen-data", "generate the toy dataset files");
    add_common(gen);
    gen->add_flag("--csv", opt.csv, "also export CSV");
    auto* tr = app.add_subcommand("train", "train one model");
    add_common(tr);
    tr->add_option("--data", opt.data_dir, "directory with gen-data artifacts");
    auto* sw = app.add_subcommand("sweep", "independent runs over sweep.alphas");
    add_common(sw);
    sw->add_option("--data", opt.data_dir, "directory with gen-data artifacts");
    auto* vt = app.add_subcommand("verify-theory", "run the closed-form verification battery");
    add_common(vt);
    vt->add_option("--checkpoint", opt.checkpoint, "trained checkpoint for the alignment check");
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
    add_common(ev);
    ev->add_option("--data", opt.data_dir, "directory with gen-data artifacts");
    ev->add_option("--checkpoint", opt.checkpoint, "checkpoint to evaluate")->required();
    auto* ex = app.add_subcommand("export-embeddings", "dump per-sample features as CSV");
    add_common(ex);
    ex->add_option("--data", opt.data_dir, "directory with gen-data artifacts");
    ex->add_option("--checkpoint", opt.checkpoint, "checkpoint to read")->required();
    ex->add_option("--out-file", export_out, "output CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (gen->parsed()) return cmd_gen_data(opt);
        if (tr->parsed()) return cmd_train(opt);
        if (sw->parsed()) return cmd_sweep(opt);
        if (vt->parsed()) return cmd_verify_theory(opt);
        if (ev->parsed()) return cmd_eval(opt);
        if (ex->parsed()) return cmd_export_embeddings(opt, export_out);
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const CheckFailure& e) {
        std::cerr << "check failure: " << e.what() << "\n";
        return kExitCheckFailure;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
