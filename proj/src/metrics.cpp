#include "avex/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace avex {

namespace {

double f1_pct(int64_t tp, int64_t fp, int64_t fn) {
    const int64_t denom = 2 * tp + fp + fn;
    return denom == 0 ? 0.0 : 100.0 * 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

}  // namespace

MetricsReport compute_metrics(std::span<const std::vector<int>> preds, std::span<const Product> golds,
                              const AttributeSchema& schema) {
    if (preds.size() != golds.size()) throw std::invalid_argument("compute_metrics: preds/golds size mismatch");
    const int n = schema.num_labels();

    MetricsReport r;
    r.per_label.assign(static_cast<size_t>(n), {});
    for (size_t i = 0; i < preds.size(); ++i) {
        const auto& pred = preds[i];
        const auto& gold = golds[i].gold_labels;
        for (int id : pred) {
            if (id < 0 || id >= n) throw std::out_of_range("compute_metrics: predicted label_id out of range");
            if (std::binary_search(gold.begin(), gold.end(), id)) {
                r.per_label[static_cast<size_t>(id)].tp++;
            } else {
                r.per_label[static_cast<size_t>(id)].fp++;
            }
        }
        for (int id : gold) {
            if (!std::binary_search(pred.begin(), pred.end(), id)) r.per_label[static_cast<size_t>(id)].fn++;
        }
    }

    int64_t tp = 0, fp = 0, fn = 0;
    r.per_label_f1.assign(static_cast<size_t>(n), 0.0);
    double f1_sum = 0.0;
    for (int j = 0; j < n; ++j) {
        const auto& c = r.per_label[static_cast<size_t>(j)];
        tp += c.tp;
        fp += c.fp;
        fn += c.fn;
        r.per_label_f1[static_cast<size_t>(j)] = f1_pct(c.tp, c.fp, c.fn);
        f1_sum += r.per_label_f1[static_cast<size_t>(j)];
    }
    r.precision = tp + fp == 0 ? 0.0 : 100.0 * static_cast<double>(tp) / static_cast<double>(tp + fp);
    r.recall = tp + fn == 0 ? 0.0 : 100.0 * static_cast<double>(tp) / static_cast<double>(tp + fn);
    r.micro_f1 = f1_pct(tp, fp, fn);  // == 2PR/(P+R) on pooled counts
    r.macro_f1 = n == 0 ? 0.0 : f1_sum / n;

    for (const auto& [attr_id, label_ids] : schema.a2l) {
        int64_t atp = 0, afp = 0, afn = 0;
        for (int id : label_ids) {
            const auto& c = r.per_label[static_cast<size_t>(id)];
            atp += c.tp;
            afp += c.fp;
            afn += c.fn;
        }
        r.per_attribute[attr_id] = f1_pct(atp, afp, afn);
    }
    return r;
}

std::string pct2(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", x);
    return buf;
}

std::string metrics_csv(const MetricsReport& r) {
    std::ostringstream os;
    os << "metric,value\n";
    os << "precision," << pct2(r.precision) << "\n";
    os << "recall," << pct2(r.recall) << "\n";
    os << "micro_f1," << pct2(r.micro_f1) << "\n";
    os << "macro_f1," << pct2(r.macro_f1) << "\n";
    for (const auto& [attr_id, f1] : r.per_attribute) os << "attr_" << attr_id << "_micro_f1," << pct2(f1) << "\n";
    return os.str();
}

std::string metrics_table(const MetricsReport& r) {
    std::ostringstream os;
    os << "  P      R      MiF1   MaF1\n";
    os << "  " << pct2(r.precision) << "  " << pct2(r.recall) << "  " << pct2(r.micro_f1) << "  "
       << pct2(r.macro_f1) << "\n";
    return os.str();
}

}  // namespace avex
