#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "avex/corpus.hpp"
#include "avex/encoders.hpp"
#include "avex/kernels.hpp"

using namespace avex;
namespace fs = std::filesystem;

namespace {

AttributeSchema tiny_schema() {
    // attr 0 "capacity": "1 liter", "2 liter" (shared unit token)
    // attr 1 "color": "red" (disjoint tokens)
    AttributeSchema s;
    s.attributes = {{0, {10}}, {1, {11}}};
    s.labels = {
        {0, 0, {20, 30}},  // "1 liter"
        {1, 0, {21, 30}},  // "2 liter"
        {2, 1, {40}},      // "red"
    };
    s.rebuild_a2l();
    s.validate();
    return s;
}

}  // namespace

TEST_CASE("encode_text shape: c = len - k + 1, boundary L = k") {
    ModelConfig cfg;
    cfg.d = 8;
    cfg.k = 4;
    ModelParams p = ModelParams::init(cfg, 60, 3, 7);

    std::vector<int> toks{2, 3, 4, 5};
    TextEncodeCache cache;
    encode_text(p, toks, 4, cache);
    CHECK(cache.t_final.rows == 1);
    CHECK(cache.c_valid == 1);
    CHECK(cache.t_final.cols == 8);

    std::vector<int> longer{2, 3, 4, 5, 6, 7, 8};
    encode_text(p, longer, 7, cache);
    CHECK(cache.t_final.rows == 4);
    CHECK(cache.c_valid == 4);
}

TEST_CASE("encode_text is pure: identical tokens give identical T_final") {
    ModelConfig cfg;
    cfg.d = 8;
    ModelParams p = ModelParams::init(cfg, 60, 3, 7);
    std::vector<int> toks{5, 6, 7, 8, 9, 10};
    TextEncodeCache a, b;
    encode_text(p, toks, 6, a);
    encode_text(p, toks, 6, b);
    CHECK(a.t_final == b.t_final);
}

TEST_CASE("trailing PAD tokens do not disturb the valid rows") {
    ModelConfig cfg;
    cfg.d = 8;
    cfg.k = 3;
    ModelParams p = ModelParams::init(cfg, 60, 3, 7);

    std::vector<int> bare{5, 6, 7, 8, 9};
    std::vector<int> padded{5, 6, 7, 8, 9, Vocab::kPadId, Vocab::kPadId, Vocab::kPadId};
    TextEncodeCache a, b;
    encode_text(p, bare, 5, a);
    encode_text(p, padded, 5, b);
    REQUIRE(a.c_valid == 3);
    REQUIRE(b.c_valid == 3);
    for (int t = 0; t < a.c_valid; ++t)
        for (int i = 0; i < 8; ++i) CHECK(a.t_final.at(t, i) == b.t_final.at(t, i));
}

TEST_CASE("encode_text rejects sequences shorter than the kernel") {
    ModelConfig cfg;
    cfg.d = 8;
    cfg.k = 4;
    ModelParams p = ModelParams::init(cfg, 60, 3, 7);
    std::vector<int> toks{2, 3, 4};
    TextEncodeCache cache;
    CHECK_THROWS(encode_text(p, toks, 3, cache));
}

TEST_CASE("PAD embedding row is zero at init and its gradient is frozen") {
    ModelConfig cfg;
    cfg.d = 8;
    ModelParams p = ModelParams::init(cfg, 60, 3, 7);
    // label token lists never contain PAD, so only the text table pins its row
    for (int i = 0; i < cfg.d; ++i) CHECK(p.store.value(p.text_emb).at(Vocab::kPadId, i) == 0.0);
    p.store.grad(p.text_emb).fill(1.0);
    p.freeze_pad_row();
    for (int i = 0; i < cfg.d; ++i) CHECK(p.store.grad(p.text_emb).at(Vocab::kPadId, i) == 0.0);
    CHECK(p.store.grad(p.text_emb).at(2, 0) == 1.0);
}

TEST_CASE("encode_labels: single-token label is ReLU(affine(embedding))") {
    AttributeSchema s;
    s.attributes = {{0, {}}};  // nameless attribute: label text is the value token alone
    s.labels = {{0, 0, {20}}};
    s.rebuild_a2l();
    s.validate();

    ModelConfig cfg;
    cfg.d = 4;
    ModelParams p = ModelParams::init(cfg, 30, 1, 3);

    LabelEncodeCache cache;
    encode_labels(p, s, cache);

    const Array2& emb = p.store.value(p.label_emb);
    Vec want(4);
    kernels::affine_forward(p.store.value(p.affine_w), p.store.value(p.affine_b).v, emb.row(20), want.data());
    for (int i = 0; i < 4; ++i) {
        double w = want[static_cast<size_t>(i)] > 0 ? want[static_cast<size_t>(i)] : 0.0;
        CHECK(cache.h_labels.at(0, i) == doctest::Approx(w).epsilon(1e-12));
    }
}

TEST_CASE("encode_labels: two-token label averages its token embeddings") {
    AttributeSchema s;
    s.attributes = {{0, {10}}};
    s.labels = {{0, 0, {20}}};  // label text = [10, 20]
    s.rebuild_a2l();

    ModelConfig cfg;
    cfg.d = 4;
    ModelParams p = ModelParams::init(cfg, 30, 1, 3);

    LabelEncodeCache cache;
    encode_labels(p, s, cache);

    const Array2& emb = p.store.value(p.label_emb);
    Vec mean(4);
    for (int i = 0; i < 4; ++i) mean[static_cast<size_t>(i)] = 0.5 * (emb.at(10, i) + emb.at(20, i));
    Vec want(4);
    kernels::affine_forward(p.store.value(p.affine_w), p.store.value(p.affine_b).v, mean.data(), want.data());
    for (int i = 0; i < 4; ++i) {
        double w = want[static_cast<size_t>(i)] > 0 ? want[static_cast<size_t>(i)] : 0.0;
        CHECK(cache.h_labels.at(0, i) == doctest::Approx(w).epsilon(1e-12));
    }
}

TEST_CASE("labels with identical text share a row; H_L is N x d") {
    AttributeSchema s;
    s.attributes = {{0, {10}}, {1, {10}}};  // same name tokens
    s.labels = {{0, 0, {20, 30}}, {1, 1, {20, 30}}, {2, 0, {21, 30}}};
    s.rebuild_a2l();

    ModelConfig cfg;
    cfg.d = 6;
    ModelParams p = ModelParams::init(cfg, 40, 3, 5);
    LabelEncodeCache cache;
    encode_labels(p, s, cache);
    CHECK(cache.h_labels.rows == 3);
    CHECK(cache.h_labels.cols == 6);
    for (int i = 0; i < 6; ++i) CHECK(cache.h_labels.at(0, i) == cache.h_labels.at(1, i));
}

TEST_CASE("confusable values sit closer than disjoint-token labels at init") {
    AttributeSchema s = tiny_schema();
    ModelConfig cfg;
    cfg.d = 32;
    ModelParams p = ModelParams::init(cfg, 60, 3, 11);
    LabelEncodeCache cache;
    encode_labels(p, s, cache);

    const double* one_liter = cache.h_labels.row(0);
    const double* two_liter = cache.h_labels.row(1);
    const double* red = cache.h_labels.row(2);
    double near = kernels::cosine(one_liter, two_liter, 32);
    double far = kernels::cosine(one_liter, red, 32);
    CHECK(near > far);
}

TEST_CASE("relabeling permutes H_L rows identically") {
    AttributeSchema s = tiny_schema();

    // swap label ids 0 and 2, keeping everything else fixed
    AttributeSchema perm = s;
    perm.labels[0].label_id = 2;
    perm.labels[2].label_id = 0;
    std::swap(perm.labels[0], perm.labels[2]);
    perm.rebuild_a2l();
    perm.validate();

    ModelConfig cfg;
    cfg.d = 8;
    ModelParams p = ModelParams::init(cfg, 60, 3, 7);
    LabelEncodeCache a, b;
    encode_labels(p, s, a);
    encode_labels(p, perm, b);
    for (int i = 0; i < 8; ++i) {
        CHECK(a.h_labels.at(0, i) == b.h_labels.at(2, i));
        CHECK(a.h_labels.at(2, i) == b.h_labels.at(0, i));
        CHECK(a.h_labels.at(1, i) == b.h_labels.at(1, i));
    }
}

TEST_CASE("share_embeddings aliases the label table to the text table") {
    ModelConfig cfg;
    cfg.d = 8;
    cfg.share_embeddings = true;
    ModelParams p = ModelParams::init(cfg, 60, 3, 7);
    CHECK(p.label_emb == p.text_emb);

    ModelConfig sep;
    sep.d = 8;
    ModelParams q = ModelParams::init(sep, 60, 3, 7);
    CHECK(q.label_emb != q.text_emb);
}

TEST_CASE("label embedding init file round-trips and rejects junk") {
    auto dir = fs::temp_directory_path() / "avex_test_lemb";
    fs::create_directories(dir);
    auto path = (dir / "init.bin").string();

    Array2 rows(3, 4);
    Rng rng(5);
    fill_normal(rows, rng, 1.0);
    save_label_embedding_init(path, rows);
    Array2 back = load_label_embedding_init(path);
    CHECK(back == rows);

    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << "BADMAGIC";
    }
    CHECK_THROWS(load_label_embedding_init(path));
    CHECK_THROWS(load_label_embedding_init((dir / "missing.bin").string()));
}

TEST_CASE("apply_label_embedding_init averages label rows into token embeddings") {
    AttributeSchema s = tiny_schema();
    ModelConfig cfg;
    cfg.d = 4;
    ModelParams p = ModelParams::init(cfg, 60, 3, 9);

    Array2 init(3, 4);
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 4; ++i) init.at(j, i) = 10.0 * (j + 1) + i;

    double untouched = p.store.value(p.label_emb).at(50, 0);
    apply_label_embedding_init(p, s, init);
    const Array2& emb = p.store.value(p.label_emb);

    // token 30 ("liter") appears in labels 0 and 1 -> mean of their rows
    for (int i = 0; i < 4; ++i) CHECK(emb.at(30, i) == doctest::Approx(0.5 * (init.at(0, i) + init.at(1, i))));
    // token 40 ("red") appears only in label 2
    for (int i = 0; i < 4; ++i) CHECK(emb.at(40, i) == doctest::Approx(init.at(2, i)));
    // token 10 (attr-0 name) appears in labels 0 and 1
    for (int i = 0; i < 4; ++i) CHECK(emb.at(10, i) == doctest::Approx(0.5 * (init.at(0, i) + init.at(1, i))));
    // tokens outside every label text keep their random init
    CHECK(emb.at(50, 0) == untouched);

    Array2 bad(2, 4);
    CHECK_THROWS(apply_label_embedding_init(p, s, bad));
}

TEST_CASE("ModelConfig validation") {
    ModelConfig bad;
    bad.d = 0;
    CHECK_THROWS(bad.validate());
    bad.d = 8;
    bad.k = 0;
    CHECK_THROWS(bad.validate());
    bad.k = 4;
    bad.init_std = -1.0;
    CHECK_THROWS(bad.validate());
}
