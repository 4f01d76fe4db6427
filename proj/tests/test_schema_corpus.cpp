#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "avex/corpus.hpp"
#include "avex/schema.hpp"

using namespace avex;
namespace fs = std::filesystem;

namespace {

std::string temp_dir(const std::string& tag) {
    auto p = fs::temp_directory_path() / ("avex_test_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("generated products embed every gold value contiguously") {
    GenConfig cfg;
    cfg.n_attributes = 2;
    cfg.values_per_attribute = 2;
    cfg.n_train = 1;
    cfg.n_val = 1;
    cfg.n_test = 1;
    cfg.avg_labels_per_product = 2.0;
    Dataset ds = generate_corpus(cfg, 7);
    ds.validate();

    REQUIRE(ds.train.size() == 1);
    const Product& p = ds.train[0];
    REQUIRE(p.gold_labels.size() >= 1);
    for (int lid : p.gold_labels) {
        CHECK(contains_contiguous(p.tokens, ds.schema.label(lid).value_tokens));
    }
}

TEST_CASE("substring property holds across all splits of a larger corpus") {
    GenConfig cfg;
    cfg.n_attributes = 5;
    cfg.values_per_attribute = 4;
    cfg.n_train = 80;
    cfg.n_val = 20;
    cfg.n_test = 20;
    cfg.avg_labels_per_product = 2.5;
    cfg.confusability = 0.5;
    Dataset ds = generate_corpus(cfg, 13);
    ds.validate();
    for (const auto* split : {&ds.train, &ds.val, &ds.test}) {
        for (const Product& p : *split) {
            REQUIRE(!p.gold_labels.empty());
            for (int lid : p.gold_labels) {
                CHECK(contains_contiguous(p.tokens, ds.schema.label(lid).value_tokens));
            }
        }
    }
}

TEST_CASE("generation is a pure function of (cfg, seed)") {
    GenConfig cfg;
    cfg.n_train = 32;
    Dataset a = generate_corpus(cfg, 99);
    Dataset b = generate_corpus(cfg, 99);
    CHECK(a == b);
    Dataset c = generate_corpus(cfg, 100);
    CHECK(!(a == c));
}

TEST_CASE("save twice produces byte-identical files") {
    GenConfig cfg;
    cfg.n_train = 8;
    cfg.n_val = 2;
    cfg.n_test = 2;
    Dataset ds = generate_corpus(cfg, 7);
    auto d1 = temp_dir("gen_a");
    auto d2 = temp_dir("gen_b");
    save_dataset(ds, d1);
    save_dataset(ds, d2);
    for (const char* f : {"schema.json", "train.jsonl", "val.jsonl", "test.jsonl"}) {
        CHECK(slurp(fs::path(d1) / f) == slurp(fs::path(d2) / f));
    }
}

TEST_CASE("mean gold-label count tracks avg_labels_per_product") {
    GenConfig cfg;
    cfg.n_attributes = 8;
    cfg.values_per_attribute = 4;
    cfg.n_train = 1200;
    cfg.n_val = 1;
    cfg.n_test = 1;
    cfg.avg_labels_per_product = 3.0;
    Dataset ds = generate_corpus(cfg, 21);
    double total = 0;
    for (const Product& p : ds.train) total += static_cast<double>(p.gold_labels.size());
    double mean = total / static_cast<double>(ds.train.size());
    CHECK(mean > 2.7);
    CHECK(mean < 3.3);
}

TEST_CASE("a Gardening-scale config is accepted") {
    GenConfig cfg;
    cfg.n_attributes = 12;
    cfg.values_per_attribute = 13;  // 156 labels
    cfg.n_train = 50;
    cfg.n_val = 10;
    cfg.n_test = 10;
    cfg.avg_labels_per_product = 5.83;
    Dataset ds = generate_corpus(cfg, 3);
    ds.validate();
    CHECK(ds.schema.num_labels() == 156);
    CHECK(ds.schema.num_attributes() == 12);
}

TEST_CASE("confusability 1.0 makes same-attribute values share a unit token") {
    GenConfig cfg;
    cfg.n_attributes = 4;
    cfg.values_per_attribute = 5;
    cfg.n_train = 4;
    cfg.n_val = 1;
    cfg.n_test = 1;
    cfg.confusability = 1.0;
    Dataset ds = generate_corpus(cfg, 17);
    for (const auto& [attr_id, lids] : ds.schema.a2l) {
        REQUIRE(lids.size() == 5);
        int unit = ds.schema.label(lids[0]).value_tokens.back();
        for (int lid : lids) {
            const auto& vt = ds.schema.label(lid).value_tokens;
            CHECK(vt.back() == unit);
            REQUIRE(vt.size() >= 2);
        }
        // values still distinguishable by their leading token
        std::set<int> heads;
        for (int lid : lids) heads.insert(ds.schema.label(lid).value_tokens.front());
        CHECK(heads.size() == 5);
    }
}

TEST_CASE("confusability 0 keeps values token-disjoint across an attribute") {
    GenConfig cfg;
    cfg.n_attributes = 3;
    cfg.values_per_attribute = 4;
    cfg.n_train = 2;
    cfg.n_val = 1;
    cfg.n_test = 1;
    cfg.confusability = 0.0;
    Dataset ds = generate_corpus(cfg, 5);
    for (const auto& [attr_id, lids] : ds.schema.a2l) {
        std::set<int> seen;
        size_t total = 0;
        for (int lid : lids) {
            for (int t : ds.schema.label(lid).value_tokens) seen.insert(t);
            total += ds.schema.label(lid).value_tokens.size();
        }
        CHECK(seen.size() == total);
    }
}

TEST_CASE("splits are disjoint by product_id") {
    GenConfig cfg;
    cfg.n_train = 30;
    cfg.n_val = 10;
    cfg.n_test = 10;
    Dataset ds = generate_corpus(cfg, 8);
    std::set<int64_t> ids;
    for (const auto* split : {&ds.train, &ds.val, &ds.test}) {
        for (const Product& p : *split) CHECK(ids.insert(p.product_id).second);
    }
}

TEST_CASE("gen rejects impossible configs") {
    GenConfig cfg;
    cfg.avg_labels_per_product = 10.0;
    cfg.n_attributes = 4;
    CHECK_THROWS(cfg.validate());

    GenConfig tiny;
    tiny.max_len = 3;  // values alone cannot fit
    tiny.n_attributes = 4;
    tiny.avg_labels_per_product = 4.0;
    CHECK_THROWS(tiny.validate());

    GenConfig zero;
    zero.n_train = 0;
    CHECK_THROWS(zero.validate());
}

TEST_CASE("dataset round-trips through the directory format") {
    GenConfig cfg;
    cfg.n_attributes = 3;
    cfg.values_per_attribute = 3;
    cfg.n_train = 12;
    cfg.n_val = 4;
    cfg.n_test = 4;
    cfg.confusability = 0.6;
    Dataset ds = generate_corpus(cfg, 7);
    auto dir = temp_dir("roundtrip");
    save_dataset(ds, dir);
    Dataset back = load_dataset(dir);
    CHECK(back == ds);
}

TEST_CASE("loader rejects out-of-range label ids, naming the line") {
    GenConfig cfg;
    cfg.n_train = 2;
    cfg.n_val = 1;
    cfg.n_test = 1;
    Dataset ds = generate_corpus(cfg, 7);
    auto dir = temp_dir("badlabel");
    save_dataset(ds, dir);

    int n = ds.schema.num_labels();
    std::ofstream out(fs::path(dir) / "val.jsonl", std::ios::trunc);
    out << "{\"id\": 900, \"tokens\": [\"a\", \"b\", \"c\", \"d\"], \"labels\": [" << n << "]}\n";
    out.close();
    CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("label"), std::runtime_error);
}

TEST_CASE("loader reports the line number of a malformed record") {
    GenConfig cfg;
    cfg.n_train = 2;
    cfg.n_val = 1;
    cfg.n_test = 1;
    Dataset ds = generate_corpus(cfg, 7);
    auto dir = temp_dir("badline");
    save_dataset(ds, dir);

    {
        std::ofstream out(fs::path(dir) / "test.jsonl", std::ios::trunc);
        out << "{\"id\": 1, \"tokens\": [\"a\", \"b\", \"c\", \"d\"], \"labels\": [0]}\n";
        out << "{\"id\": 2, \"tokens\": [\"a\", \"b\", \"c\", \"d\"]}\n";  // missing labels
    }
    CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("test.jsonl:2"), std::runtime_error);

    {
        std::ofstream out(fs::path(dir) / "test.jsonl", std::ios::trunc);
        out << "not json at all\n";
    }
    CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("test.jsonl:1"), std::runtime_error);
}

TEST_CASE("tokenize: mapping, truncation, padding, OOV") {
    Vocab v = Vocab::with_reserved();
    int red = v.add("red");
    int bottle = v.add("bottle");

    Tokenized t = tokenize("red bottle", v, 4);
    CHECK(t.length == 2);
    CHECK(t.ids == std::vector<int>{red, bottle, Vocab::kPadId, Vocab::kPadId});

    std::string longtext;
    for (int i = 0; i < 300; ++i) longtext += "red ";
    Tokenized big = tokenize(longtext, v, 256);
    CHECK(big.length == 256);
    CHECK(big.ids.size() == 256);

    Tokenized oov = tokenize("red shiny", v, 4);
    CHECK(oov.ids[0] == red);
    CHECK(oov.ids[1] == Vocab::kUnkId);
}

TEST_CASE("vocab add is idempotent and lookups fall back to UNK") {
    Vocab v = Vocab::with_reserved();
    CHECK(v.size() == 2);
    int a = v.add("tok");
    CHECK(v.add("tok") == a);
    CHECK(v.id_or_unk("tok") == a);
    CHECK(v.id_or_unk("nope") == Vocab::kUnkId);
    CHECK(v.token(a) == "tok");
}

TEST_CASE("schema validate catches broken invariants") {
    GenConfig cfg;
    cfg.n_train = 2;
    cfg.n_val = 1;
    cfg.n_test = 1;
    Dataset ds = generate_corpus(cfg, 7);

    AttributeSchema dup = ds.schema;
    dup.labels[1].label_id = 0;  // duplicate id
    CHECK_THROWS(dup.validate());

    AttributeSchema orphan = ds.schema;
    orphan.labels[0].attr_id = 999;
    orphan.rebuild_a2l();
    CHECK_THROWS(orphan.validate());

    AttributeSchema empty_val = ds.schema;
    empty_val.labels[0].value_tokens.clear();
    CHECK_THROWS(empty_val.validate());
}

TEST_CASE("label_tokens concatenates attribute name and value tokens") {
    GenConfig cfg;
    cfg.n_train = 2;
    cfg.n_val = 1;
    cfg.n_test = 1;
    Dataset ds = generate_corpus(cfg, 7);
    const LabelDef& l = ds.schema.label(0);
    auto toks = ds.schema.label_tokens(0);
    const auto& name = ds.schema.attribute(l.attr_id).name_tokens;
    REQUIRE(toks.size() == name.size() + l.value_tokens.size());
    for (size_t i = 0; i < name.size(); ++i) CHECK(toks[i] == name[i]);
    for (size_t i = 0; i < l.value_tokens.size(); ++i) CHECK(toks[name.size() + i] == l.value_tokens[i]);
}

TEST_CASE("multihot is consistent with gold_labels") {
    Product p;
    p.gold_labels = {1, 3};
    auto mh = p.multihot(5);
    CHECK(mh == std::vector<uint8_t>{0, 1, 0, 1, 0});
}

TEST_CASE("contains_contiguous edge cases") {
    std::vector<int> hay{3, 1, 4, 1, 5};
    CHECK(contains_contiguous(hay, {1, 4}));
    CHECK(contains_contiguous(hay, {5}));
    CHECK(!contains_contiguous(hay, {}));  // empty needle is rejected, not vacuously found
    CHECK(!contains_contiguous(hay, {4, 3}));
    CHECK(!contains_contiguous(hay, {3, 1, 4, 1, 5, 9}));
}

TEST_CASE("schema fingerprint separates schemas and tracks content") {
    GenConfig cfg;
    cfg.n_train = 2;
    cfg.n_val = 1;
    cfg.n_test = 1;
    Dataset a = generate_corpus(cfg, 7);
    Dataset b = generate_corpus(cfg, 7);
    CHECK(schema_fingerprint(a.schema, a.vocab) == schema_fingerprint(b.schema, b.vocab));

    cfg.values_per_attribute = 5;
    Dataset c = generate_corpus(cfg, 7);
    CHECK(schema_fingerprint(a.schema, a.vocab) != schema_fingerprint(c.schema, c.vocab));
}

TEST_CASE("Dataset::split resolves names and rejects unknown ones") {
    GenConfig cfg;
    cfg.n_train = 4;
    cfg.n_val = 2;
    cfg.n_test = 3;
    Dataset ds = generate_corpus(cfg, 7);
    CHECK(ds.split("train").size() == 4);
    CHECK(ds.split("val").size() == 2);
    CHECK(ds.split("test").size() == 3);
    CHECK_THROWS(ds.split("dev"));
}
