// Dataset model: attribute/label schema, vocabulary, products, splits.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace avex {

struct Attribute {
    int attr_id = 0;
    std::vector<int> name_tokens;

    bool operator==(const Attribute&) const = default;
};

struct LabelDef {
    int label_id = 0;
    int attr_id = 0;
    std::vector<int> value_tokens;

    bool operator==(const LabelDef&) const = default;
};

// Attributes, labels (attribute values), and the attribute -> labels map A2L.
// label_ids are dense 0..N-1; every label belongs to exactly one attribute.
struct AttributeSchema {
    std::vector<Attribute> attributes;
    std::vector<LabelDef> labels;            // indexed by label_id
    std::map<int, std::vector<int>> a2l;     // attr_id -> sorted label_ids

    int num_labels() const { return static_cast<int>(labels.size()); }
    int num_attributes() const { return static_cast<int>(attributes.size()); }

    const LabelDef& label(int label_id) const { return labels[static_cast<size_t>(label_id)]; }
    const Attribute& attribute(int attr_id) const;

    // attribute name tokens ++ value tokens, the label encoder's input text
    std::vector<int> label_tokens(int label_id) const;

    void rebuild_a2l();
    void validate() const;  // throws std::runtime_error on any invariant violation

    bool operator==(const AttributeSchema&) const = default;
};

struct Vocab {
    static constexpr int kUnkId = 0;
    static constexpr int kPadId = 1;

    std::vector<std::string> id_to_token;
    std::unordered_map<std::string, int> token_to_id;

    static Vocab with_reserved();

    int size() const { return static_cast<int>(id_to_token.size()); }
    int add(const std::string& tok);                 // idempotent, returns id
    int id_or_unk(std::string_view tok) const;
    const std::string& token(int id) const { return id_to_token[static_cast<size_t>(id)]; }

    bool operator==(const Vocab& o) const { return id_to_token == o.id_to_token; }
};

struct Product {
    int64_t product_id = 0;
    std::vector<int> tokens;        // unpadded token ids, title then description
    std::vector<int> gold_labels;   // sorted distinct label_ids, size >= 1

    std::vector<uint8_t> multihot(int n_labels) const;

    bool operator==(const Product&) const = default;
};

struct Dataset {
    AttributeSchema schema;
    Vocab vocab;
    std::vector<Product> train, val, test;

    const std::vector<Product>& split(std::string_view name) const;
    void validate() const;  // schema + token/label bounds + split disjointness

    bool operator==(const Dataset&) const = default;
};

// Stable content hash of (schema, vocab); checkpoints refuse to evaluate
// against a dataset with a different fingerprint.
uint64_t schema_fingerprint(const AttributeSchema& schema, const Vocab& vocab);

// True iff `needle` occurs as a contiguous subsequence of `hay`.
bool contains_contiguous(const std::vector<int>& hay, const std::vector<int>& needle);

}  // namespace avex
