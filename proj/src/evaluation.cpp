#include "avex/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "avex/log.hpp"
#include "avex/model.hpp"

namespace avex {

namespace {

void check_fingerprint(const Checkpoint& ckpt, const Dataset& ds) {
    const uint64_t ds_fp = schema_fingerprint(ds.schema, ds.vocab);
    if (ckpt.fingerprint != ds_fp) {
        throw std::runtime_error("checkpoint schema fingerprint does not match the dataset (checkpoint " +
                                 std::to_string(ckpt.fingerprint) + ", dataset " + std::to_string(ds_fp) + ")");
    }
}

std::string join_tokens(const Vocab& vocab, const std::vector<int>& ids) {
    std::string s;
    for (size_t i = 0; i < ids.size(); ++i) {
        if (i) s += ' ';
        s += vocab.token(ids[i]);
    }
    return s;
}

}  // namespace

MetricsReport evaluate(const Checkpoint& ckpt, const Dataset& ds, std::string_view split, double threshold) {
    check_fingerprint(ckpt, ds);
    const ModelParams p = to_model_params(ckpt);
    const auto& products = ds.split(split);
    std::vector<std::vector<int>> preds;
    predict_split(p, ds.schema, products, threshold, preds);
    return compute_metrics(preds, products, ds.schema);
}

AblationResult run_ablation(const Dataset& ds, const TrainConfig& base, std::span<const uint64_t> seeds) {
    if (seeds.empty()) throw std::invalid_argument("run_ablation: need at least one seed");
    AblationResult res;
    res.seeds.assign(seeds.begin(), seeds.end());

    const PoolMode poolings[] = {PoolMode::kMean, PoolMode::kMax};
    const Variant variants[] = {Variant::kFull, Variant::kNoNs, Variant::kNoPrior};

    // MiF1 per (pooling, variant, seed) for the delta summary
    std::vector<double> mif1[2][3];

    for (int pi = 0; pi < 2; ++pi) {
        for (int vi = 0; vi < 3; ++vi) {
            AblationCell cell;
            cell.pooling = poolings[pi];
            cell.variant = variants[vi];
            for (size_t si = 0; si < seeds.size(); ++si) {
                TrainConfig cfg = base;
                cfg.pooling = cell.pooling;
                cfg.variant = cell.variant;
                cfg.seed = seeds[si];
                AVEX_INFO("ablation cell variant=%s pooling=%s seed=%llu", to_string(cfg.variant).c_str(),
                          to_string(cfg.pooling).c_str(), static_cast<unsigned long long>(cfg.seed));
                const TrainResult tr = train(ds, cfg);
                const MetricsReport m = evaluate(tr.best, ds, "test", cfg.threshold);
                cell.per_seed.push_back(m);
                cell.mean_precision += m.precision;
                cell.mean_recall += m.recall;
                cell.mean_micro_f1 += m.micro_f1;
                cell.mean_macro_f1 += m.macro_f1;
                double lns = 0;
                for (const EpochRow& row : tr.log) lns += row.train_loss.l_ns;
                if (!tr.log.empty()) lns /= static_cast<double>(tr.log.size());
                cell.mean_l_ns += lns;
                mif1[pi][vi].push_back(m.micro_f1);
            }
            const double inv = 1.0 / static_cast<double>(seeds.size());
            cell.mean_precision *= inv;
            cell.mean_recall *= inv;
            cell.mean_micro_f1 *= inv;
            cell.mean_macro_f1 *= inv;
            cell.mean_l_ns *= inv;
            res.cells.push_back(std::move(cell));
        }
    }

    for (size_t si = 0; si < seeds.size(); ++si) {
        res.delta_mean_pool.push_back(mif1[0][0][si] - mif1[0][1][si]);
        res.delta_max_pool.push_back(mif1[1][0][si] - mif1[1][1][si]);
    }
    return res;
}

std::string ablation_csv(const AblationResult& r) {
    std::ostringstream os;
    os << "pooling,variant,precision,recall,micro_f1,macro_f1\n";
    for (const AblationCell& c : r.cells) {
        os << to_string(c.pooling) << ',' << to_string(c.variant) << ',' << pct2(c.mean_precision) << ','
           << pct2(c.mean_recall) << ',' << pct2(c.mean_micro_f1) << ',' << pct2(c.mean_macro_f1) << "\n";
    }
    os << "\npooling,seed,mif1_full_minus_no_ns\n";
    for (size_t i = 0; i < r.delta_mean_pool.size(); ++i) {
        os << "mean," << r.seeds[i] << ',' << pct2(r.delta_mean_pool[i]) << "\n";
    }
    for (size_t i = 0; i < r.delta_max_pool.size(); ++i) {
        os << "max," << r.seeds[i] << ',' << pct2(r.delta_max_pool[i]) << "\n";
    }
    return os.str();
}

std::string ablation_table(const AblationResult& r) {
    std::ostringstream os;
    os << "pooling  variant    P       R       MiF1    MaF1\n";
    for (const AblationCell& c : r.cells) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%-8s %-9s %7s %7s %7s %7s\n", to_string(c.pooling).c_str(),
                      to_string(c.variant).c_str(), pct2(c.mean_precision).c_str(), pct2(c.mean_recall).c_str(),
                      pct2(c.mean_micro_f1).c_str(), pct2(c.mean_macro_f1).c_str());
        os << buf;
    }
    os << "\nfull - no_ns MiF1 per seed:\n";
    for (size_t i = 0; i < r.delta_mean_pool.size(); ++i) {
        os << "  seed " << r.seeds[i] << ": mean pool " << pct2(r.delta_mean_pool[i]) << ", max pool "
           << pct2(r.delta_max_pool[i]) << "\n";
    }
    return os.str();
}

CaseStudyResult case_study(const Checkpoint& a, const Checkpoint& b, const Dataset& ds, std::string_view split,
                           int attr_id, double threshold) {
    if (a.fingerprint != b.fingerprint) {
        throw std::runtime_error("case_study: the two checkpoints were trained against different schemas");
    }
    const auto it = ds.schema.a2l.find(attr_id);
    if (it == ds.schema.a2l.end()) throw std::runtime_error("unknown attr_id " + std::to_string(attr_id));

    const MetricsReport ma = evaluate(a, ds, split, threshold);
    const MetricsReport mb = evaluate(b, ds, split, threshold);

    CaseStudyResult res;
    res.attr_id = attr_id;
    res.attr_text = join_tokens(ds.vocab, ds.schema.attribute(attr_id).name_tokens);
    for (int label_id : it->second) {
        CaseStudyRow row;
        row.label_id = label_id;
        row.label_text = join_tokens(ds.vocab, ds.schema.label(label_id).value_tokens);
        row.f1_a = ma.per_label_f1[static_cast<size_t>(label_id)];
        row.f1_b = mb.per_label_f1[static_cast<size_t>(label_id)];
        res.rows.push_back(std::move(row));
    }
    res.attr_micro_f1_a = ma.per_attribute.at(attr_id);
    res.attr_micro_f1_b = mb.per_attribute.at(attr_id);
    return res;
}

std::string case_study_csv(const CaseStudyResult& r) {
    std::ostringstream os;
    os << "label_id,label_text,f1_a,f1_b\n";
    for (const CaseStudyRow& row : r.rows) {
        os << row.label_id << ',' << row.label_text << ',' << pct2(row.f1_a) << ',' << pct2(row.f1_b) << "\n";
    }
    os << "attr_micro," << r.attr_text << ',' << pct2(r.attr_micro_f1_a) << ',' << pct2(r.attr_micro_f1_b) << "\n";
    return os.str();
}

}  // namespace avex
