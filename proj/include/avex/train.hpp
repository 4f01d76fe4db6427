// Training loop, optimizer, checkpoint format, run configuration.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "avex/encoders.hpp"
#include "avex/matching.hpp"
#include "avex/metrics.hpp"
#include "avex/model.hpp"
#include "avex/schema.hpp"

namespace avex {

struct TrainConfig {
    ModelConfig model;
    int max_len = 256;
    int batch_size = 32;
    int epochs = 10;
    double lr = 1e-3;
    std::string optimizer = "adam";  // adam | sgd
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double f = 0.5;
    double f_final = -1.0;  // >= 0: F moves linearly from f to f_final across epochs
    PoolMode pooling = PoolMode::kMax;
    Variant variant = Variant::kFull;
    uint64_t seed = 1;
    double threshold = 0.5;
    int patience = 0;  // epochs without val MiF1 improvement before stopping; 0 = off
    std::string label_init_file;

    void validate() const;

    // flat field-for-field JSON; unknown keys rejected, absent keys keep defaults
    static TrainConfig from_json_text(const std::string& text);
    static TrainConfig from_json_file(const std::string& path);
    std::string to_json_text() const;

    bool operator==(const TrainConfig&) const = default;

    // F used in epoch `e` (1-based) under the optional linear schedule
    double f_at_epoch(int e) const;
};

struct Checkpoint {
    TrainConfig cfg;
    uint64_t fingerprint = 0;
    int vocab_size = 0;
    int n_labels = 0;
    ParamStore params;  // values; gradients are not persisted
};

ModelParams to_model_params(const Checkpoint& ckpt);

// little-endian binary; load(save(x)) is bit-identical. Distinct errors for
// bad magic, unsupported version, and truncation.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// first-order update of all store values from their gradient accumulators
class Optimizer {
  public:
    Optimizer(const TrainConfig& cfg, ParamStore& store);
    void step();

  private:
    const TrainConfig& cfg_;
    ParamStore& store_;
    bool adam_ = true;
    std::vector<Vec> m_, v_;
};

struct EpochRow {
    int epoch = 0;
    LossBundle train_loss;  // epoch means, weighted by batch size
    double val_precision = 0, val_recall = 0, val_micro_f1 = 0, val_macro_f1 = 0;
};

struct TrainResult {
    Checkpoint best;  // highest val MiF1 (first on ties); equals `last` when there is no val split
    Checkpoint last;
    int best_epoch = 0;
    std::vector<EpochRow> log;
};

// Deterministic for fixed (ds, cfg): epoch shuffles and sampler streams derive
// from cfg.seed only. Throws on non-finite loss, naming epoch and batch.
TrainResult train(const Dataset& ds, const TrainConfig& cfg);

// columns: epoch,l_bce,l_sm,l_ns,l_pr,total,val_p,val_r,val_mif1,val_maf1
void write_epoch_log_csv(const std::string& path, std::span<const EpochRow> log);

}  // namespace avex
