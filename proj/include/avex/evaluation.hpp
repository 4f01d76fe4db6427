// Checkpoint evaluation, the 6-cell ablation grid, and the per-attribute
// case-study comparison.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "avex/metrics.hpp"
#include "avex/train.hpp"

namespace avex {

// Refuses to run when the checkpoint's schema fingerprint differs from the
// dataset's.
MetricsReport evaluate(const Checkpoint& ckpt, const Dataset& ds, std::string_view split, double threshold);

struct AblationCell {
    Variant variant = Variant::kFull;
    PoolMode pooling = PoolMode::kMax;
    std::vector<MetricsReport> per_seed;  // test-split metrics, one per seed
    double mean_precision = 0, mean_recall = 0, mean_micro_f1 = 0, mean_macro_f1 = 0;
    double mean_l_ns = 0;  // epoch-mean of the logged l_ns, averaged over seeds
};

struct AblationResult {
    std::vector<uint64_t> seeds;
    std::vector<AblationCell> cells;  // 6 rows: {mean,max} pooling x {full,no_ns,no_prior}
    // per-seed MiF1(full) - MiF1(no_ns), keyed by pooling mode then seed order
    std::vector<double> delta_mean_pool;
    std::vector<double> delta_max_pool;
};

// Trains every cell on identical data with identical seeds (the only varied
// inputs are variant and pooling mode) and evaluates best-val checkpoints on
// the test split.
AblationResult run_ablation(const Dataset& ds, const TrainConfig& base, std::span<const uint64_t> seeds);

std::string ablation_csv(const AblationResult& r);
std::string ablation_table(const AblationResult& r);

struct CaseStudyRow {
    int label_id = 0;
    std::string label_text;
    double f1_a = 0, f1_b = 0;  // percent
};

struct CaseStudyResult {
    int attr_id = 0;
    std::string attr_text;
    std::vector<CaseStudyRow> rows;
    double attr_micro_f1_a = 0, attr_micro_f1_b = 0;
};

// Per-label F1 of every label of `attr_id` under two checkpoints sharing the
// dataset's schema. Throws on unknown attr_id or fingerprint mismatch.
CaseStudyResult case_study(const Checkpoint& a, const Checkpoint& b, const Dataset& ds, std::string_view split,
                           int attr_id, double threshold);

// columns: label_id,label_text,f1_a,f1_b
std::string case_study_csv(const CaseStudyResult& r);

}  // namespace avex
