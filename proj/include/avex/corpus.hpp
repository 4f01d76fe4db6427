// Synthetic corpus generation, dataset directory IO, tokenization.
//
// Generated products embed every gold attribute value verbatim (contiguous
// token run) in the token stream, interleaved with noise tokens at uniformly
// random positions. With confusability > 0, a fraction of each attribute's
// values share a trailing unit token ("1 Liter" / "2 Liter" style confusables).
#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "avex/schema.hpp"

namespace avex {

struct GenConfig {
    int n_attributes = 4;
    int values_per_attribute = 4;
    int n_train = 64;
    int n_val = 16;
    int n_test = 16;
    double avg_labels_per_product = 2.0;
    int noise_tokens_per_product = 16;  // noise tokens interleaved into each product
    double confusability = 0.0;         // fraction of same-attribute values sharing a unit token
    int noise_vocab = 200;              // distinct noise tokens available
    int max_len = 256;

    void validate() const;  // throws on counts < 1, avg > n_attributes, values overflow max_len
};

// Pure function of (cfg, seed). Per-product randomness derives from
// mix(seed, product_id), so generation is independent of parallelism degree.
Dataset generate_corpus(const GenConfig& cfg, uint64_t seed);

// Directory layout: schema.json (attributes, labels, vocab) plus
// {train,val,test}.jsonl, one product object per line with fields
// id, tokens (as strings), labels (ids). load(save(ds)) == ds.
void save_dataset(const Dataset& ds, const std::string& dir);
Dataset load_dataset(const std::string& dir);

struct Tokenized {
    std::vector<int> ids;  // padded with PAD to max_len
    int length = 0;        // tokens before padding
};

// Whitespace split, vocab lookup (OOV -> UNK), truncate to max_len, PAD-pad.
Tokenized tokenize(std::string_view text, const Vocab& vocab, int max_len);

}  // namespace avex
