// avex: synthetic attribute-value extraction pipeline driver.
// Subcommands: gen | train | eval | ablate | case-study | gradcheck.
// Exit codes: 0 success, 1 usage error, 2 runtime failure.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "avex/corpus.hpp"
#include "avex/evaluation.hpp"
#include "avex/gradcheck.hpp"
#include "avex/log.hpp"
#include "avex/train.hpp"

namespace {

using namespace avex;

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << text;
    if (!os) throw std::runtime_error("write failed for " + path);
}

void emit(const std::optional<std::string>& out, const std::string& text) {
    if (out) {
        write_text(*out, text);
    } else {
        std::cout << text;
    }
}

std::vector<uint64_t> parse_seed_list(const std::string& s) {
    std::vector<uint64_t> seeds;
    size_t pos = 0;
    while (pos < s.size()) {
        size_t comma = s.find(',', pos);
        if (comma == std::string::npos) comma = s.size();
        const std::string tok = s.substr(pos, comma - pos);
        if (!tok.empty()) seeds.push_back(std::stoull(tok));
        pos = comma + 1;
    }
    if (seeds.empty()) throw std::runtime_error("--seeds must name at least one seed");
    return seeds;
}

void print_gen_config(const GenConfig& g, uint64_t seed, const std::string& out) {
    std::printf("gen: attributes=%d values_per_attribute=%d train=%d val=%d test=%d avg_labels=%g\n",
                g.n_attributes, g.values_per_attribute, g.n_train, g.n_val, g.n_test, g.avg_labels_per_product);
    std::printf("     noise_tokens=%d confusability=%g noise_vocab=%d max_len=%d seed=%llu out=%s\n",
                g.noise_tokens_per_product, g.confusability, g.noise_vocab, g.max_len,
                static_cast<unsigned long long>(seed), out.c_str());
}

int cmd_gen(const GenConfig& g, uint64_t seed, const std::string& out) {
    print_gen_config(g, seed, out);
    const Dataset ds = generate_corpus(g, seed);
    save_dataset(ds, out);
    std::printf("wrote %zu train / %zu val / %zu test products, %d labels, vocab %d\n", ds.train.size(),
                ds.val.size(), ds.test.size(), ds.schema.num_labels(), ds.vocab.size());
    return 0;
}

struct TrainOverrides {
    std::optional<uint64_t> seed;
    std::optional<std::string> variant, pooling, optimizer;
    std::optional<int> epochs, batch_size, d;
    std::optional<double> lr, f, threshold;
};

TrainConfig resolve_train_config(const std::string& config_path, const TrainOverrides& ov) {
    TrainConfig cfg;
    if (!config_path.empty()) cfg = TrainConfig::from_json_file(config_path);
    if (ov.seed) cfg.seed = *ov.seed;
    if (ov.variant) cfg.variant = parse_variant(*ov.variant);
    if (ov.pooling) cfg.pooling = parse_pool_mode(*ov.pooling);
    if (ov.optimizer) cfg.optimizer = *ov.optimizer;
    if (ov.epochs) cfg.epochs = *ov.epochs;
    if (ov.batch_size) cfg.batch_size = *ov.batch_size;
    if (ov.d) cfg.model.d = *ov.d;
    if (ov.lr) cfg.lr = *ov.lr;
    if (ov.f) cfg.f = *ov.f;
    if (ov.threshold) cfg.threshold = *ov.threshold;
    cfg.validate();
    return cfg;
}

int cmd_train(const std::string& data_dir, const TrainConfig& cfg, const std::string& out,
              const std::optional<std::string>& log_path) {
    std::printf("train: data=%s out=%s seed=%llu\nresolved config:\n%s\n", data_dir.c_str(), out.c_str(),
                static_cast<unsigned long long>(cfg.seed), cfg.to_json_text().c_str());
    const Dataset ds = load_dataset(data_dir);
    const TrainResult res = train(ds, cfg);
    save_checkpoint(out, res.best);
    if (log_path) write_epoch_log_csv(*log_path, res.log);
    if (!res.log.empty()) {
        const EpochRow& last = res.log.back();
        std::printf("trained %zu epochs; best val MiF1 %.2f at epoch %d; final train total %.6f\n", res.log.size(),
                    res.log[static_cast<size_t>(res.best_epoch > 0 ? res.best_epoch - 1 : 0)].val_micro_f1,
                    res.best_epoch, last.train_loss.total);
    }
    std::printf("checkpoint written to %s\n", out.c_str());
    return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_dir, const std::string& split, double threshold,
             const std::string& format, const std::optional<std::string>& out) {
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    const double th = threshold >= 0 ? threshold : ckpt.cfg.threshold;
    std::printf("eval: ckpt=%s data=%s split=%s threshold=%g seed=%llu\n", ckpt_path.c_str(), data_dir.c_str(),
                split.c_str(), th, static_cast<unsigned long long>(ckpt.cfg.seed));
    const Dataset ds = load_dataset(data_dir);
    const MetricsReport m = evaluate(ckpt, ds, split, th);
    emit(out, format == "csv" ? metrics_csv(m) : metrics_table(m));
    return 0;
}

int cmd_ablate(const std::string& data_dir, const TrainConfig& base, const std::vector<uint64_t>& seeds,
               const std::string& format, const std::optional<std::string>& out) {
    std::printf("ablate: data=%s seeds=", data_dir.c_str());
    for (size_t i = 0; i < seeds.size(); ++i) {
        std::printf("%s%llu", i ? "," : "", static_cast<unsigned long long>(seeds[i]));
    }
    std::printf("\nresolved base config:\n%s\n", base.to_json_text().c_str());
    const Dataset ds = load_dataset(data_dir);
    const AblationResult res = run_ablation(ds, base, seeds);
    emit(out, format == "csv" ? ablation_csv(res) : ablation_table(res));
    return 0;
}

int cmd_case_study(const std::string& ckpt_a, const std::string& ckpt_b, const std::string& data_dir,
                   const std::string& split, int attr_id, double threshold,
                   const std::optional<std::string>& out) {
    const Checkpoint a = load_checkpoint(ckpt_a);
    const Checkpoint b = load_checkpoint(ckpt_b);
    const double th = threshold >= 0 ? threshold : a.cfg.threshold;
    std::printf("case-study: a=%s b=%s data=%s split=%s attr=%d threshold=%g seeds=%llu/%llu\n", ckpt_a.c_str(),
                ckpt_b.c_str(), data_dir.c_str(), split.c_str(), attr_id, th,
                static_cast<unsigned long long>(a.cfg.seed), static_cast<unsigned long long>(b.cfg.seed));
    const Dataset ds = load_dataset(data_dir);
    const CaseStudyResult res = case_study(a, b, ds, split, attr_id, th);
    emit(out, case_study_csv(res));
    return 0;
}

int cmd_gradcheck(uint64_t seed) {
    std::printf("gradcheck: seed=%llu step=1e-5\n", static_cast<unsigned long long>(seed));
    bool ok = true;
    for (const GradCheckResult& r : run_gradcheck(seed)) {
        std::printf("%-24s %3d cases  max rel err %.3e  tol %.0e  %s\n", r.op.c_str(), r.cases, r.max_rel_err,
                    r.tolerance, r.pass ? "pass" : "FAIL");
        ok = ok && r.pass;
    }
    if (!ok) throw std::runtime_error("gradient check failed");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"avex: attribute-value extraction via semantic matching and negative label sampling"};
    app.require_subcommand(1);

    // --- gen ---
    auto* gen = app.add_subcommand("gen", "generate a synthetic dataset directory");
    GenConfig gcfg;
    uint64_t gen_seed = 1;
    std::string gen_out;
    gen->add_option("--attributes", gcfg.n_attributes, "number of attributes");
    gen->add_option("--values-per-attribute", gcfg.values_per_attribute, "labels per attribute");
    gen->add_option("--train", gcfg.n_train, "train products");
    gen->add_option("--val", gcfg.n_val, "val products");
    gen->add_option("--test", gcfg.n_test, "test products");
    gen->add_option("--avg-labels", gcfg.avg_labels_per_product, "mean gold labels per product");
    gen->add_option("--noise-tokens", gcfg.noise_tokens_per_product, "noise tokens per product");
    gen->add_option("--confusability", gcfg.confusability, "fraction of values sharing a unit token");
    gen->add_option("--noise-vocab", gcfg.noise_vocab, "distinct noise tokens");
    gen->add_option("--max-len", gcfg.max_len, "token budget per product");
    gen->add_option("--seed", gen_seed, "generation seed");
    gen->add_option("--out", gen_out, "output directory")->required();

    // --- train ---
    auto* tr = app.add_subcommand("train", "train a model on a dataset directory");
    std::string tr_data, tr_config, tr_out = "model.ckpt";
    std::optional<std::string> tr_log;
    TrainOverrides ov;
    tr->add_option("--data", tr_data, "dataset directory")->required();
    tr->add_option("--config", tr_config, "JSON config file (flat TrainConfig fields)");
    tr->add_option("--out", tr_out, "checkpoint output path");
    tr->add_option("--log", tr_log, "per-epoch CSV log path");
    tr->add_option("--seed", ov.seed, "training seed");
    tr->add_option("--variant", ov.variant, "full|no_ns|no_prior|bce_only");
    tr->add_option("--pooling", ov.pooling, "max|mean");
    tr->add_option("--optimizer", ov.optimizer, "adam|sgd");
    tr->add_option("--epochs", ov.epochs, "training epochs");
    tr->add_option("--batch-size", ov.batch_size, "minibatch size");
    tr->add_option("--d", ov.d, "embedding width");
    tr->add_option("--lr", ov.lr, "learning rate");
    tr->add_option("--f", ov.f, "loss weight F");
    tr->add_option("--threshold", ov.threshold, "decision threshold");

    // --- eval ---
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset split");
    std::string ev_ckpt, ev_data, ev_split = "test", ev_format = "table";
    double ev_threshold = -1.0;
    std::optional<std::string> ev_out;
    ev->add_option("--ckpt", ev_ckpt, "checkpoint path")->required();
    ev->add_option("--data", ev_data, "dataset directory")->required();
    ev->add_option("--split", ev_split, "train|val|test");
    ev->add_option("--threshold", ev_threshold, "decision threshold (default: checkpoint's)");
    ev->add_option("--format", ev_format, "csv|table")->check(CLI::IsMember({"csv", "table"}));
    ev->add_option("--out", ev_out, "write report here instead of stdout");

    // --- ablate ---
    auto* ab = app.add_subcommand("ablate", "train and evaluate the 6-cell ablation grid");
    std::string ab_data, ab_config, ab_seeds = "1,2,3,4,5", ab_format = "table";
    std::optional<std::string> ab_out;
    TrainOverrides ab_ov;
    ab->add_option("--data", ab_data, "dataset directory")->required();
    ab->add_option("--config", ab_config, "JSON config file for the base cell");
    ab->add_option("--seeds", ab_seeds, "comma-separated seed list");
    ab->add_option("--epochs", ab_ov.epochs, "training epochs");
    ab->add_option("--format", ab_format, "csv|table")->check(CLI::IsMember({"csv", "table"}));
    ab->add_option("--out", ab_out, "write report here instead of stdout");

    // --- case-study ---
    auto* cs = app.add_subcommand("case-study", "per-label F1 of one attribute under two checkpoints");
    std::string cs_a, cs_b, cs_data, cs_split = "test";
    int cs_attr = 0;
    double cs_threshold = -1.0;
    std::optional<std::string> cs_out;
    cs->add_option("--ckpt-a", cs_a, "first checkpoint")->required();
    cs->add_option("--ckpt-b", cs_b, "second checkpoint")->required();
    cs->add_option("--data", cs_data, "dataset directory")->required();
    cs->add_option("--split", cs_split, "train|val|test");
    cs->add_option("--attr", cs_attr, "attribute id")->required();
    cs->add_option("--threshold", cs_threshold, "decision threshold (default: checkpoint a's)");
    cs->add_option("--out", cs_out, "write CSV here instead of stdout");

    // --- gradcheck ---
    auto* gc = app.add_subcommand("gradcheck", "finite-difference check of every kernel gradient");
    uint64_t gc_seed = 42;
    gc->add_option("--seed", gc_seed, "suite seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) return cmd_gen(gcfg, gen_seed, gen_out);
        if (tr->parsed()) return cmd_train(tr_data, resolve_train_config(tr_config, ov), tr_out, tr_log);
        if (ev->parsed()) return cmd_eval(ev_ckpt, ev_data, ev_split, ev_threshold, ev_format, ev_out);
        if (ab->parsed()) {
            return cmd_ablate(ab_data, resolve_train_config(ab_config, ab_ov), parse_seed_list(ab_seeds), ab_format,
                              ab_out);
        }
        if (cs->parsed()) return cmd_case_study(cs_a, cs_b, cs_data, cs_split, cs_attr, cs_threshold, cs_out);
        if (gc->parsed()) return cmd_gradcheck(gc_seed);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
