#include "avex/model.hpp"

#include <stdexcept>

namespace avex {

namespace {

// negative draw for one product; empty result when no attribute has candidates
std::vector<int> draw_negatives(const AttributeSchema& schema, const Product& prod, uint64_t salt) {
    auto by_attr = group_gold_by_attribute(schema, prod.gold_labels);
    Rng rng(mix(salt, static_cast<uint64_t>(prod.product_id)));
    return sample_negative_labels(schema.a2l, by_attr, rng).neg_label_ids;
}

}  // namespace

LossBundle batch_forward_backward(ModelParams& p, const AttributeSchema& schema,
                                  std::span<const Product> batch, const BatchSettings& s, BatchScratch& sc) {
    if (batch.empty()) throw std::invalid_argument("batch_forward_backward: empty batch");
    const LossCoeffs c = loss_coeffs(s.variant, s.f);
    const int n = p.n_labels;
    const int d = p.cfg.d;
    const double inv_p = 1.0 / static_cast<double>(batch.size());
    const bool need_tp = c.sm != 0.0 || c.use_negative_sampling;

    encode_labels(p, schema, sc.labels);
    const Array2& h_labels = sc.labels.h_labels;
    sc.dh_labels.resize(n, d);

    LossBundle out;
    for (const Product& prod : batch) {
        const int len = static_cast<int>(prod.tokens.size());
        encode_text(p, prod.tokens, len, sc.text);
        const Array2& t_final = sc.text.t_final;
        const int c_valid = sc.text.c_valid;
        sc.dt.resize(t_final.rows, d);

        // --- classification ---
        predict_logits(p, t_final, c_valid, h_labels, sc.attn, sc.logits);
        const auto y = prod.multihot(n);
        out.l_bce += kernels::bce_mean(sc.logits, y) * inv_p;
        sc.dlogits.assign(sc.logits.size(), 0.0);
        kernels::bce_backward(sc.logits, y, c.bce * inv_p, sc.dlogits);
        predict_logits_backward(p, t_final, h_labels, sc.dlogits, sc.attn, sc.dt, sc.dh_labels);

        // --- semantic matching ---
        if (need_tp) {
            kernels::mean_pool_rows(t_final, c_valid, sc.t_p);
            sc.dt_p.assign(sc.t_p.size(), 0.0);

            if (c.sm != 0.0) {
                label_selector(h_labels, prod.gold_labels, sc.l_gt);
                combine_gold_labels(sc.l_gt, s.pooling, sc.l_cr, sc.argmax);
                kernels::CosineCache cc;
                const double sim = kernels::cosine_forward(sc.t_p.data(), sc.l_cr.data(), d, cc);
                out.l_sm += -sim * inv_p;
                sc.dl_cr.assign(sc.l_cr.size(), 0.0);
                kernels::cosine_backward(c.sm * -inv_p, sc.t_p.data(), sc.l_cr.data(), d, cc, sc.dt_p.data(),
                                         sc.dl_cr.data());
                sc.dl_gt.resize(sc.l_gt.rows, d);
                combine_gold_labels_backward(sc.dl_cr, s.pooling, sc.l_gt.rows, sc.argmax, sc.dl_gt);
                for (size_t r = 0; r < prod.gold_labels.size(); ++r) {
                    kernels::detail::axpy(1.0, sc.dl_gt.row(static_cast<int>(r)),
                                          sc.dh_labels.row(prod.gold_labels[r]), d);
                }
            }

            // --- negative label sampling ---
            if (c.use_negative_sampling) {
                const std::vector<int> negs = draw_negatives(schema, prod, s.sampler_salt);
                if (!negs.empty()) {
                    label_selector(h_labels, negs, sc.l_neg);
                    kernels::mean_pool_rows(sc.l_neg, sc.l_neg.rows, sc.l_cr_neg);
                    kernels::CosineCache cc;
                    const double sim = kernels::cosine_forward(sc.t_p.data(), sc.l_cr_neg.data(), d, cc);
                    out.l_ns += sim * inv_p;
                    sc.dl_cr_neg.assign(sc.l_cr_neg.size(), 0.0);
                    kernels::cosine_backward(c.ns * inv_p, sc.t_p.data(), sc.l_cr_neg.data(), d, cc,
                                             sc.dt_p.data(), sc.dl_cr_neg.data());
                    sc.dl_neg.resize(sc.l_neg.rows, d);
                    kernels::mean_pool_backward(sc.dl_cr_neg, sc.l_neg.rows, sc.dl_neg);
                    for (size_t r = 0; r < negs.size(); ++r) {
                        kernels::detail::axpy(1.0, sc.dl_neg.row(static_cast<int>(r)),
                                              sc.dh_labels.row(negs[r]), d);
                    }
                }
            }
            kernels::mean_pool_backward(sc.dt_p, c_valid, sc.dt);
        }

        encode_text_backward(p, prod.tokens, sc.dt, sc.text);
    }

    if (c.use_prior) {
        out.l_pr = label_prior_loss(h_labels);
        label_prior_backward(h_labels, c.pr, sc.dh_labels);
    }
    encode_labels_backward(p, sc.dh_labels, sc.labels);
    p.freeze_pad_row();

    out.f_weight = c.use_prior ? s.f : 0.0;
    out.total = total_loss(out.l_bce, out.l_sm, out.l_ns, out.l_pr, s.variant, s.f);
    return out;
}

LossBundle batch_loss(const ModelParams& p, const AttributeSchema& schema, std::span<const Product> batch,
                      const BatchSettings& s) {
    ModelParams copy = p;  // gradients land in the copy and are dropped
    BatchScratch scratch;
    return batch_forward_backward(copy, schema, batch, s, scratch);
}

void predict_split(const ModelParams& p, const AttributeSchema& schema, std::span<const Product> products,
                   double threshold, std::vector<std::vector<int>>& preds) {
    for (const Product& prod : products) {
        if (static_cast<int>(prod.tokens.size()) < p.cfg.k) {
            throw std::runtime_error("product " + std::to_string(prod.product_id) + " shorter than kernel size " +
                                     std::to_string(p.cfg.k));
        }
    }
    LabelEncodeCache lcache;
    encode_labels(p, schema, lcache);
    const Array2& h_labels = lcache.h_labels;

    preds.assign(products.size(), {});
    const int64_t count = static_cast<int64_t>(products.size());
#pragma omp parallel
    {
        TextEncodeCache text;
        kernels::AttentionCache attn;
        Vec logits;
#pragma omp for schedule(static)
        for (int64_t i = 0; i < count; ++i) {
            const Product& prod = products[static_cast<size_t>(i)];
            encode_text(p, prod.tokens, static_cast<int>(prod.tokens.size()), text);
            predict_logits(p, text.t_final, text.c_valid, h_labels, attn, logits);
            preds[static_cast<size_t>(i)] = decide(logits, threshold);
        }
    }
}

}  // namespace avex
