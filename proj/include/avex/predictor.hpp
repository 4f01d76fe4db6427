// Label-wise attention readout producing per-label logits, the BCE objective,
// and the threshold decision rule.
#pragma once

#include <span>
#include <vector>

#include "avex/encoders.hpp"
#include "avex/kernels.hpp"

namespace avex {

// logits[j] = w_j . ctx_j + b_j with ctx_j attention-pooled over valid positions
void predict_logits(const ModelParams& p, const Array2& t_final, int c_valid, const Array2& h_labels,
                    kernels::AttentionCache& cache, Vec& logits);
void predict_logits_backward(ModelParams& p, const Array2& t_final, const Array2& h_labels, const Vec& dlogits,
                             kernels::AttentionCache& cache, Array2& dt_final, Array2& dh_labels);

// L_bce for one product
double classification_loss(std::span<const double> logits, std::span<const uint8_t> gold_multihot);
void classification_loss_backward(std::span<const double> logits, std::span<const uint8_t> gold_multihot,
                                  double dloss, std::span<double> dlogits);

// {j : sigma(logit_j) >= threshold}; may be empty
std::vector<int> decide(std::span<const double> logits, double threshold);

}  // namespace avex
