#include "avex/predictor.hpp"

#include <stdexcept>

namespace avex {

void predict_logits(const ModelParams& p, const Array2& t_final, int c_valid, const Array2& h_labels,
                    kernels::AttentionCache& cache, Vec& logits) {
    if (c_valid < 1) throw std::invalid_argument("predict_logits: no valid positions");
    kernels::attention_forward(t_final, c_valid, h_labels, p.store.value(p.pred_w), p.store.value(p.pred_b).v,
                               cache, logits);
}

void predict_logits_backward(ModelParams& p, const Array2& t_final, const Array2& h_labels, const Vec& dlogits,
                             kernels::AttentionCache& cache, Array2& dt_final, Array2& dh_labels) {
    kernels::attention_backward(t_final, h_labels, p.store.value(p.pred_w), dlogits, cache, dt_final, dh_labels,
                                p.store.grad(p.pred_w), p.store.grad(p.pred_b).v);
}

double classification_loss(std::span<const double> logits, std::span<const uint8_t> gold_multihot) {
    return kernels::bce_mean(logits, gold_multihot);
}

void classification_loss_backward(std::span<const double> logits, std::span<const uint8_t> gold_multihot,
                                  double dloss, std::span<double> dlogits) {
    kernels::bce_backward(logits, gold_multihot, dloss, dlogits);
}

std::vector<int> decide(std::span<const double> logits, double threshold) {
    if (threshold <= 0.0 || threshold >= 1.0) {
        throw std::invalid_argument("decide: threshold must be in (0,1)");
    }
    std::vector<int> out;
    for (size_t j = 0; j < logits.size(); ++j) {
        if (kernels::sigmoid(logits[j]) >= threshold) out.push_back(static_cast<int>(j));
    }
    return out;
}

}  // namespace avex
