#include "avex/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "avex/rng.hpp"

namespace avex {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

void GenConfig::validate() const {
    if (n_attributes < 1 || values_per_attribute < 1) throw std::runtime_error("gen: attribute/value counts must be >= 1");
    if (n_train < 1 || n_val < 1 || n_test < 1) throw std::runtime_error("gen: split sizes must be >= 1");
    if (avg_labels_per_product < 1.0) throw std::runtime_error("gen: avg_labels_per_product must be >= 1");
    if (avg_labels_per_product > static_cast<double>(n_attributes)) {
        throw std::runtime_error("gen: avg_labels_per_product exceeds n_attributes");
    }
    if (noise_tokens_per_product < 0 || noise_vocab < 1) throw std::runtime_error("gen: noise settings invalid");
    if (confusability < 0.0 || confusability > 1.0) throw std::runtime_error("gen: confusability must be in [0,1]");
    if (max_len < 1) throw std::runtime_error("gen: max_len must be >= 1");
    // worst case: floor(avg)+1 gold values, two tokens each, all required in-text
    int worst_labels = std::min(n_attributes, static_cast<int>(avg_labels_per_product) + 1);
    if (2 * worst_labels > max_len) {
        throw std::runtime_error("gen: required value tokens (" + std::to_string(2 * worst_labels) +
                                 ") exceed max_len " + std::to_string(max_len));
    }
}

namespace {

struct CorpusLayout {
    // token ids
    std::vector<int> attr_name;                 // per attribute
    std::vector<std::vector<std::vector<int>>> value_tokens;  // [attr][value] -> ids
    std::vector<int> noise;                     // noise token ids
};

CorpusLayout build_vocab(const GenConfig& cfg, Vocab& vocab) {
    CorpusLayout lay;
    lay.attr_name.resize(static_cast<size_t>(cfg.n_attributes));
    lay.value_tokens.resize(static_cast<size_t>(cfg.n_attributes));
    const int n_conf = static_cast<int>(std::lround(cfg.confusability * cfg.values_per_attribute));
    for (int a = 0; a < cfg.n_attributes; ++a) {
        lay.attr_name[static_cast<size_t>(a)] = vocab.add("attr" + std::to_string(a));
        auto& vals = lay.value_tokens[static_cast<size_t>(a)];
        vals.resize(static_cast<size_t>(cfg.values_per_attribute));
        int unit = -1;
        if (n_conf > 0) unit = vocab.add("unit" + std::to_string(a));
        for (int i = 0; i < cfg.values_per_attribute; ++i) {
            int head = vocab.add("v" + std::to_string(a) + "_" + std::to_string(i));
            if (i < n_conf) {
                vals[static_cast<size_t>(i)] = {head, unit};
            } else {
                vals[static_cast<size_t>(i)] = {head};
            }
        }
    }
    lay.noise.resize(static_cast<size_t>(cfg.noise_vocab));
    for (int j = 0; j < cfg.noise_vocab; ++j) lay.noise[static_cast<size_t>(j)] = vocab.add("n" + std::to_string(j));
    return lay;
}

Product make_product(const GenConfig& cfg, const CorpusLayout& lay, uint64_t seed, int64_t pid) {
    Rng rng(mix(seed, static_cast<uint64_t>(pid)));

    // number of gold labels: floor(avg) + Bernoulli(frac) keeps the mean exact
    const double avg = cfg.avg_labels_per_product;
    int m = static_cast<int>(avg);
    if (rng.uniform01() < avg - m) ++m;
    m = std::max(1, std::min(m, cfg.n_attributes));

    // m distinct attributes, one value each
    std::vector<int> attrs(static_cast<size_t>(cfg.n_attributes));
    for (int a = 0; a < cfg.n_attributes; ++a) attrs[static_cast<size_t>(a)] = a;
    rng.partial_shuffle(attrs, m);
    attrs.resize(static_cast<size_t>(m));

    Product p;
    p.product_id = pid;
    std::vector<const std::vector<int>*> runs;
    size_t run_tokens = 0;
    for (int a : attrs) {
        int vi = rng.uniform_int(cfg.values_per_attribute);
        p.gold_labels.push_back(a * cfg.values_per_attribute + vi);
        const auto& toks = lay.value_tokens[static_cast<size_t>(a)][static_cast<size_t>(vi)];
        runs.push_back(&toks);
        run_tokens += toks.size();
    }
    std::sort(p.gold_labels.begin(), p.gold_labels.end());

    int n_noise = cfg.noise_tokens_per_product;
    if (run_tokens + static_cast<size_t>(n_noise) > static_cast<size_t>(cfg.max_len)) {
        n_noise = cfg.max_len - static_cast<int>(run_tokens);
    }

    // items = value runs (atomic) + single noise tokens, in uniform random order
    struct Item {
        const std::vector<int>* run;  // null -> noise token
        int noise_tok;
    };
    std::vector<Item> items;
    items.reserve(runs.size() + static_cast<size_t>(n_noise));
    for (const auto* r : runs) items.push_back({r, 0});
    for (int i = 0; i < n_noise; ++i) {
        items.push_back({nullptr, lay.noise[static_cast<size_t>(rng.uniform_int(cfg.noise_vocab))]});
    }
    rng.shuffle(items);

    p.tokens.reserve(run_tokens + static_cast<size_t>(n_noise));
    for (const auto& it : items) {
        if (it.run) {
            p.tokens.insert(p.tokens.end(), it.run->begin(), it.run->end());
        } else {
            p.tokens.push_back(it.noise_tok);
        }
    }
    return p;
}

}  // namespace

Dataset generate_corpus(const GenConfig& cfg, uint64_t seed) {
    cfg.validate();

    Dataset ds;
    ds.vocab = Vocab::with_reserved();
    CorpusLayout lay = build_vocab(cfg, ds.vocab);

    for (int a = 0; a < cfg.n_attributes; ++a) {
        ds.schema.attributes.push_back({a, {lay.attr_name[static_cast<size_t>(a)]}});
        for (int i = 0; i < cfg.values_per_attribute; ++i) {
            int label_id = a * cfg.values_per_attribute + i;
            ds.schema.labels.push_back({label_id, a, lay.value_tokens[static_cast<size_t>(a)][static_cast<size_t>(i)]});
        }
    }
    ds.schema.rebuild_a2l();

    int64_t next_pid = 0;
    const std::pair<std::vector<Product>*, int> split_plan[] = {
        {&ds.train, cfg.n_train}, {&ds.val, cfg.n_val}, {&ds.test, cfg.n_test}};
    for (auto [split, count] : split_plan) {
        const int64_t base = next_pid;
        split->resize(static_cast<size_t>(count));
        auto* out = split->data();
#pragma omp parallel for schedule(static)
        for (int i = 0; i < count; ++i) {
            out[i] = make_product(cfg, lay, seed, base + i);
        }
        next_pid += count;
    }
    ds.validate();
    return ds;
}

// ---------------------------------------------------------------------------
// dataset directory IO
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void load_fail(const std::string& file, int line, const std::string& msg) {
    throw std::runtime_error(file + ":" + std::to_string(line) + ": " + msg);
}

std::vector<std::string> token_strings(const Vocab& vocab, const std::vector<int>& ids) {
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (int id : ids) out.push_back(vocab.token(id));
    return out;
}

std::vector<int> token_ids(const Vocab& vocab, const ordered_json& arr, const std::string& file, int line,
                           const char* field, bool* warned_oov) {
    std::vector<int> ids;
    ids.reserve(arr.size());
    for (const auto& t : arr) {
        if (!t.is_string()) load_fail(file, line, std::string("field '") + field + "' must contain strings");
        int id = vocab.id_or_unk(t.get<std::string>());
        if (id == Vocab::kUnkId && t.get<std::string>() != vocab.token(Vocab::kUnkId) && warned_oov && !*warned_oov) {
            std::fprintf(stderr, "warning: %s:%d: token '%s' not in vocab, mapped to <unk>\n", file.c_str(), line,
                         t.get<std::string>().c_str());
            *warned_oov = true;
        }
        ids.push_back(id);
    }
    return ids;
}

void save_split(const fs::path& path, const Dataset& ds, const std::vector<Product>& split) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& p : split) {
        ordered_json row;
        row["id"] = p.product_id;
        row["tokens"] = token_strings(ds.vocab, p.tokens);
        row["labels"] = p.gold_labels;
        out << row.dump() << "\n";
    }
}

std::vector<Product> load_split(const fs::path& path, const Dataset& ds) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    const std::string file = path.filename().string();
    std::vector<Product> split;
    std::string line;
    int lineno = 0;
    bool warned_oov = false;
    bool warned_substr = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        ordered_json row;
        try {
            row = ordered_json::parse(line);
        } catch (const std::exception& e) {
            load_fail(file, lineno, std::string("invalid JSON: ") + e.what());
        }
        for (const char* field : {"id", "tokens", "labels"}) {
            if (!row.contains(field)) load_fail(file, lineno, std::string("missing field '") + field + "'");
        }
        if (!row["id"].is_number_integer()) load_fail(file, lineno, "field 'id' must be an integer");
        if (!row["tokens"].is_array()) load_fail(file, lineno, "field 'tokens' must be an array");
        if (!row["labels"].is_array()) load_fail(file, lineno, "field 'labels' must be an array");

        Product p;
        p.product_id = row["id"].get<int64_t>();
        p.tokens = token_ids(ds.vocab, row["tokens"], file, lineno, "tokens", &warned_oov);
        const int n = ds.schema.num_labels();
        for (const auto& l : row["labels"]) {
            if (!l.is_number_integer()) load_fail(file, lineno, "field 'labels' must contain integers");
            int id = l.get<int>();
            if (id < 0 || id >= n) {
                load_fail(file, lineno, "unknown label_id " + std::to_string(id) + " (N=" + std::to_string(n) + ")");
            }
            p.gold_labels.push_back(id);
        }
        if (p.gold_labels.empty()) load_fail(file, lineno, "field 'labels' must be nonempty");
        std::sort(p.gold_labels.begin(), p.gold_labels.end());
        p.gold_labels.erase(std::unique(p.gold_labels.begin(), p.gold_labels.end()), p.gold_labels.end());

        // real data may be noisy; the substring property is a generator guarantee only
        if (!warned_substr) {
            for (int id : p.gold_labels) {
                if (!contains_contiguous(p.tokens, ds.schema.label(id).value_tokens)) {
                    std::fprintf(stderr, "warning: %s:%d: value tokens of label %d not contiguous in product text\n",
                                 file.c_str(), lineno, id);
                    warned_substr = true;
                    break;
                }
            }
        }
        split.push_back(std::move(p));
    }
    return split;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& dir) {
    fs::create_directories(dir);
    ordered_json schema;
    schema["attributes"] = ordered_json::array();
    for (const auto& a : ds.schema.attributes) {
        ordered_json ja;
        ja["attr_id"] = a.attr_id;
        ja["name_tokens"] = token_strings(ds.vocab, a.name_tokens);
        schema["attributes"].push_back(ja);
    }
    schema["labels"] = ordered_json::array();
    for (const auto& l : ds.schema.labels) {
        ordered_json jl;
        jl["label_id"] = l.label_id;
        jl["attr_id"] = l.attr_id;
        jl["value_tokens"] = token_strings(ds.vocab, l.value_tokens);
        schema["labels"].push_back(jl);
    }
    schema["vocab"] = ds.vocab.id_to_token;

    std::ofstream out(fs::path(dir) / "schema.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write schema.json in " + dir);
    out << schema.dump(2) << "\n";
    out.close();

    save_split(fs::path(dir) / "train.jsonl", ds, ds.train);
    save_split(fs::path(dir) / "val.jsonl", ds, ds.val);
    save_split(fs::path(dir) / "test.jsonl", ds, ds.test);
}

Dataset load_dataset(const std::string& dir) {
    const fs::path schema_path = fs::path(dir) / "schema.json";
    std::ifstream in(schema_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + schema_path.string());
    ordered_json schema;
    try {
        schema = ordered_json::parse(in);
    } catch (const std::exception& e) {
        throw std::runtime_error("schema.json: invalid JSON: " + std::string(e.what()));
    }
    for (const char* field : {"attributes", "labels", "vocab"}) {
        if (!schema.contains(field)) throw std::runtime_error("schema.json: missing field '" + std::string(field) + "'");
    }

    Dataset ds;
    for (const auto& tok : schema["vocab"]) ds.vocab.add(tok.get<std::string>());
    if (ds.vocab.size() < 2 || ds.vocab.token(0) != "<unk>" || ds.vocab.token(1) != "<pad>") {
        throw std::runtime_error("schema.json: vocab must start with <unk>, <pad>");
    }

    auto ids_of = [&](const ordered_json& arr) {
        std::vector<int> ids;
        for (const auto& t : arr) {
            int id = ds.vocab.id_or_unk(t.get<std::string>());
            if (id == Vocab::kUnkId && t.get<std::string>() != "<unk>") {
                throw std::runtime_error("schema.json: token '" + t.get<std::string>() + "' not in vocab");
            }
            ids.push_back(id);
        }
        return ids;
    };
    for (const auto& ja : schema["attributes"]) {
        ds.schema.attributes.push_back({ja.at("attr_id").get<int>(), ids_of(ja.at("name_tokens"))});
    }
    for (const auto& jl : schema["labels"]) {
        ds.schema.labels.push_back({jl.at("label_id").get<int>(), jl.at("attr_id").get<int>(), ids_of(jl.at("value_tokens"))});
    }
    ds.schema.rebuild_a2l();
    ds.schema.validate();

    ds.train = load_split(fs::path(dir) / "train.jsonl", ds);
    ds.val = load_split(fs::path(dir) / "val.jsonl", ds);
    ds.test = load_split(fs::path(dir) / "test.jsonl", ds);
    ds.validate();
    return ds;
}

Tokenized tokenize(std::string_view text, const Vocab& vocab, int max_len) {
    Tokenized out;
    out.ids.reserve(static_cast<size_t>(max_len));
    size_t pos = 0;
    while (pos < text.size() && static_cast<int>(out.ids.size()) < max_len) {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
        size_t start = pos;
        while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
        if (pos > start) out.ids.push_back(vocab.id_or_unk(text.substr(start, pos - start)));
    }
    out.length = static_cast<int>(out.ids.size());
    out.ids.resize(static_cast<size_t>(max_len), Vocab::kPadId);
    return out;
}

}  // namespace avex
