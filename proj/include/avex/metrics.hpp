// Multi-label P/R/MiF1/MaF1 from predicted vs gold label sets, plus report
// formatting. All percentages; tables print to 2 decimals.
#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "avex/schema.hpp"

namespace avex {

struct LabelCounts {
    int64_t tp = 0, fp = 0, fn = 0;
};

struct MetricsReport {
    // percent; micro_f1 == 2PR/(P+R) when P+R > 0, else 0
    double precision = 0.0;
    double recall = 0.0;
    double micro_f1 = 0.0;
    // mean of per-label F1 over ALL schema labels; F1 := 0 when tp=fp=fn=0
    double macro_f1 = 0.0;
    std::vector<LabelCounts> per_label;     // indexed by label_id
    std::vector<double> per_label_f1;       // percent, indexed by label_id
    std::map<int, double> per_attribute;    // attr_id -> micro-F1 over its labels
};

// preds[i] and golds[i].gold_labels are sorted distinct label-id sets
MetricsReport compute_metrics(std::span<const std::vector<int>> preds, std::span<const Product> golds,
                              const AttributeSchema& schema);

// fixed 2-decimal percent formatting ("66.67"), the report number format
std::string pct2(double x);

std::string metrics_csv(const MetricsReport& r);
std::string metrics_table(const MetricsReport& r);

}  // namespace avex
