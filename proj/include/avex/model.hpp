// Composite objective over a minibatch: wires encoders, predictor, and the
// matching losses into L = L_bce + (1-F)(L_sm + L_ns) + F*L_pr, with the exact
// analytic gradient of the whole expression.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "avex/encoders.hpp"
#include "avex/matching.hpp"
#include "avex/predictor.hpp"
#include "avex/schema.hpp"

namespace avex {

struct BatchSettings {
    Variant variant = Variant::kFull;
    PoolMode pooling = PoolMode::kMax;
    double f = 0.5;
    // negative-sampler streams are rng(mix(sampler_salt, product_id)), so the
    // draw for a product depends only on (salt, product) — never on batch
    // composition or iteration order
    uint64_t sampler_salt = 0;
};

// Scratch reused across batches; members sized lazily.
struct BatchScratch {
    LabelEncodeCache labels;
    TextEncodeCache text;
    kernels::AttentionCache attn;
    Array2 dh_labels;  // N x d gradient wrt H_L, accumulated across items
    Array2 dt;         // per-item gradient wrt T_final
    Array2 l_gt, l_neg, dl_gt, dl_neg;
    Vec logits, dlogits, t_p, dt_p, l_cr, dl_cr, l_cr_neg, dl_cr_neg;
    std::vector<int> argmax;
};

// Forward + backward over one minibatch. Gradients ACCUMULATE into p.store
// (caller zeroes them and applies the optimizer). Loss parts a variant turns
// off are neither computed nor differentiated and report as 0.
LossBundle batch_forward_backward(ModelParams& p, const AttributeSchema& schema,
                                  std::span<const Product> batch, const BatchSettings& s, BatchScratch& scratch);

// Losses only; p is untouched. Same rng streams as batch_forward_backward.
LossBundle batch_loss(const ModelParams& p, const AttributeSchema& schema, std::span<const Product> batch,
                      const BatchSettings& s);

// Eval-only forward: predicted label-id sets for every product, parallel over
// products (params immutable). preds[i] sorted ascending.
void predict_split(const ModelParams& p, const AttributeSchema& schema, std::span<const Product> products,
                   double threshold, std::vector<std::vector<int>>& preds);

}  // namespace avex
