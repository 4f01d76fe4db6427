#include "avex/schema.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace avex {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error("schema: " + msg); }

uint64_t fnv1a_init() { return 0xcbf29ce484222325ULL; }

void fnv1a_u64(uint64_t& h, uint64_t x) {
    for (int i = 0; i < 8; ++i) {
        h ^= (x >> (8 * i)) & 0xffULL;
        h *= 0x100000001b3ULL;
    }
}

void fnv1a_str(uint64_t& h, const std::string& s) {
    fnv1a_u64(h, s.size());
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
}

}  // namespace

const Attribute& AttributeSchema::attribute(int attr_id) const {
    for (const auto& a : attributes) {
        if (a.attr_id == attr_id) return a;
    }
    fail("unknown attr_id " + std::to_string(attr_id));
}

std::vector<int> AttributeSchema::label_tokens(int label_id) const {
    const LabelDef& l = label(label_id);
    std::vector<int> toks = attribute(l.attr_id).name_tokens;
    toks.insert(toks.end(), l.value_tokens.begin(), l.value_tokens.end());
    return toks;
}

void AttributeSchema::rebuild_a2l() {
    a2l.clear();
    for (const auto& a : attributes) a2l[a.attr_id] = {};
    for (const auto& l : labels) a2l[l.attr_id].push_back(l.label_id);
    for (auto& [attr, ids] : a2l) std::sort(ids.begin(), ids.end());
}

void AttributeSchema::validate() const {
    std::set<int> attr_ids;
    for (const auto& a : attributes) {
        if (!attr_ids.insert(a.attr_id).second) fail("duplicate attr_id " + std::to_string(a.attr_id));
    }
    const int n = num_labels();
    for (int i = 0; i < n; ++i) {
        const LabelDef& l = labels[static_cast<size_t>(i)];
        if (l.label_id != i) fail("label_ids must be dense 0..N-1, got " + std::to_string(l.label_id) + " at index " + std::to_string(i));
        if (!attr_ids.count(l.attr_id)) fail("label " + std::to_string(i) + " references unknown attr_id " + std::to_string(l.attr_id));
        if (l.value_tokens.empty()) fail("label " + std::to_string(i) + " has no value tokens");
    }
    // a2l must partition the label set
    std::set<int> covered;
    for (const auto& [attr, ids] : a2l) {
        if (!attr_ids.count(attr)) fail("a2l references unknown attr_id " + std::to_string(attr));
        for (int id : ids) {
            if (id < 0 || id >= n) fail("a2l entry out of range: " + std::to_string(id));
            if (labels[static_cast<size_t>(id)].attr_id != attr) fail("a2l assigns label " + std::to_string(id) + " to wrong attribute");
            if (!covered.insert(id).second) fail("label " + std::to_string(id) + " appears twice in a2l");
        }
    }
    if (static_cast<int>(covered.size()) != n) fail("a2l does not cover all labels");
    for (const auto& a : attributes) {
        auto it = a2l.find(a.attr_id);
        if (it == a2l.end() || it->second.empty()) fail("attribute " + std::to_string(a.attr_id) + " has no labels");
    }
}

Vocab Vocab::with_reserved() {
    Vocab v;
    v.add("<unk>");
    v.add("<pad>");
    return v;
}

int Vocab::add(const std::string& tok) {
    auto it = token_to_id.find(tok);
    if (it != token_to_id.end()) return it->second;
    int id = size();
    id_to_token.push_back(tok);
    token_to_id.emplace(tok, id);
    return id;
}

int Vocab::id_or_unk(std::string_view tok) const {
    auto it = token_to_id.find(std::string(tok));
    return it == token_to_id.end() ? kUnkId : it->second;
}

std::vector<uint8_t> Product::multihot(int n_labels) const {
    std::vector<uint8_t> y(static_cast<size_t>(n_labels), 0);
    for (int id : gold_labels) y[static_cast<size_t>(id)] = 1;
    return y;
}

const std::vector<Product>& Dataset::split(std::string_view name) const {
    if (name == "train") return train;
    if (name == "val") return val;
    if (name == "test") return test;
    throw std::runtime_error("unknown split '" + std::string(name) + "' (expected train|val|test)");
}

void Dataset::validate() const {
    schema.validate();
    const int n = schema.num_labels();
    const int v = vocab.size();
    for (const auto& a : schema.attributes) {
        for (int t : a.name_tokens) {
            if (t < 0 || t >= v) throw std::runtime_error("attribute token id out of vocab range");
        }
    }
    for (const auto& l : schema.labels) {
        for (int t : l.value_tokens) {
            if (t < 0 || t >= v) throw std::runtime_error("label token id out of vocab range");
        }
    }
    std::set<int64_t> seen;
    for (const auto* split : {&train, &val, &test}) {
        for (const auto& p : *split) {
            if (!seen.insert(p.product_id).second) {
                throw std::runtime_error("duplicate product_id across splits: " + std::to_string(p.product_id));
            }
            if (p.gold_labels.empty()) throw std::runtime_error("product " + std::to_string(p.product_id) + " has no gold labels");
            int prev = -1;
            for (int id : p.gold_labels) {
                if (id < 0 || id >= n) throw std::runtime_error("product " + std::to_string(p.product_id) + " references label_id " + std::to_string(id) + " out of range");
                if (id <= prev) throw std::runtime_error("product " + std::to_string(p.product_id) + " gold_labels not sorted/distinct");
                prev = id;
            }
            for (int t : p.tokens) {
                if (t < 0 || t >= v) throw std::runtime_error("product " + std::to_string(p.product_id) + " token id out of vocab range");
            }
        }
    }
}

uint64_t schema_fingerprint(const AttributeSchema& schema, const Vocab& vocab) {
    uint64_t h = fnv1a_init();
    fnv1a_u64(h, static_cast<uint64_t>(schema.attributes.size()));
    for (const auto& a : schema.attributes) {
        fnv1a_u64(h, static_cast<uint64_t>(a.attr_id));
        fnv1a_u64(h, a.name_tokens.size());
        for (int t : a.name_tokens) fnv1a_u64(h, static_cast<uint64_t>(t));
    }
    fnv1a_u64(h, static_cast<uint64_t>(schema.labels.size()));
    for (const auto& l : schema.labels) {
        fnv1a_u64(h, static_cast<uint64_t>(l.label_id));
        fnv1a_u64(h, static_cast<uint64_t>(l.attr_id));
        fnv1a_u64(h, l.value_tokens.size());
        for (int t : l.value_tokens) fnv1a_u64(h, static_cast<uint64_t>(t));
    }
    fnv1a_u64(h, static_cast<uint64_t>(vocab.size()));
    for (const auto& tok : vocab.id_to_token) fnv1a_str(h, tok);
    return h;
}

bool contains_contiguous(const std::vector<int>& hay, const std::vector<int>& needle) {
    if (needle.empty() || needle.size() > hay.size()) return false;
    const size_t last = hay.size() - needle.size();
    for (size_t s = 0; s <= last; ++s) {
        bool ok = true;
        for (size_t i = 0; i < needle.size(); ++i) {
            if (hay[s + i] != needle[i]) {
                ok = false;
                break;
            }
        }
        if (ok) return true;
    }
    return false;
}

}  // namespace avex
