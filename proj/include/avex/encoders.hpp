// Text encoder (token embedding + valid-mode width-k convolution + ReLU) and
// label encoder (mean of token embeddings + affine + ReLU), both over one
// shared ParamStore. d_l == d_h by construction.
#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "avex/kernels.hpp"
#include "avex/params.hpp"
#include "avex/schema.hpp"

namespace avex {

struct ModelConfig {
    int d = 64;                    // embedding width d_h == d_l
    int k = 4;                     // convolution kernel size
    bool relu_conv = true;
    bool share_embeddings = false; // label encoder reuses the text embedding table
    double init_std = 0.02;

    bool operator==(const ModelConfig&) const = default;

    void validate() const;
};

// Parameter handles into a ParamStore. Creation order is the checkpoint order.
struct ModelParams {
    ModelConfig cfg;
    int vocab_size = 0;
    int n_labels = 0;

    ParamStore store;
    int text_emb = -1;    // V x d, PAD row frozen at zero
    int conv_w = -1;      // d x (k*d)
    int conv_b = -1;      // 1 x d
    int label_emb = -1;   // V x d (== text_emb when share_embeddings)
    int affine_w = -1;    // d x d, identity at init
    int affine_b = -1;    // 1 x d
    int pred_w = -1;      // N x d
    int pred_b = -1;      // 1 x N

    static ModelParams init(const ModelConfig& cfg, int vocab_size, int n_labels, uint64_t seed);

    // rebuild handles after store contents were replaced (checkpoint load)
    void bind_handles();

    // the PAD embedding row does not train; call after accumulating gradients
    void freeze_pad_row();
};

struct TextEncodeCache {
    Array2 x;        // L x d token embeddings
    Array2 t_final;  // c x d
    int c_valid = 0; // rows derived from real (non-PAD) tokens only
    int len = 0;     // unpadded token count fed to the encoder
    kernels::Conv1dCache conv;
};

// tokens may carry trailing PAD ids; `len` counts the real tokens (>= k).
// c = tokens.size() - k + 1 rows; rows t >= len-k+1 are flagged invalid.
void encode_text(const ModelParams& p, std::span<const int> tokens, int len, TextEncodeCache& cache);
void encode_text_backward(ModelParams& p, std::span<const int> tokens, const Array2& dt_final,
                          TextEncodeCache& cache);

struct LabelEncodeCache {
    Array2 means;                  // N x d mean token embeddings
    Array2 h_labels;               // N x d
    std::vector<uint8_t> relu_on;  // N*d
    std::vector<std::vector<int>> tokens;  // per-label input token ids
};

// H_L row j = ReLU(affine(mean of embeddings of attribute-name ++ value tokens))
void encode_labels(const ModelParams& p, const AttributeSchema& schema, LabelEncodeCache& cache);
void encode_labels_backward(ModelParams& p, const Array2& dh_labels, LabelEncodeCache& cache);

// Optional warm start from per-label vectors (N x d). Each token embedding is
// set to the mean of the init rows of the labels whose text contains it;
// untouched tokens keep their random init.
void apply_label_embedding_init(ModelParams& p, const AttributeSchema& schema, const Array2& init_rows);

// binary init file: magic "AVEXLEMB", u32 version, u64 rows, u64 cols, f64 data
Array2 load_label_embedding_init(const std::string& path);
void save_label_embedding_init(const std::string& path, const Array2& rows);

}  // namespace avex
