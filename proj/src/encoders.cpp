#include "avex/encoders.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "avex/rng.hpp"

namespace avex {

using kernels::detail::axpy;

void ModelConfig::validate() const {
    if (d < 1) throw std::runtime_error("config: d must be >= 1");
    if (k < 1) throw std::runtime_error("config: kernel size must be >= 1");
    if (init_std <= 0.0) throw std::runtime_error("config: init_std must be > 0");
}

ModelParams ModelParams::init(const ModelConfig& cfg, int vocab_size, int n_labels, uint64_t seed) {
    cfg.validate();
    if (vocab_size < 2) throw std::runtime_error("config: vocab must include <unk> and <pad>");
    if (n_labels < 1) throw std::runtime_error("config: need at least one label");

    ModelParams p;
    p.cfg = cfg;
    p.vocab_size = vocab_size;
    p.n_labels = n_labels;

    const int d = cfg.d;
    p.text_emb = p.store.add("text_embedding", vocab_size, d);
    p.conv_w = p.store.add("conv_weight", d, cfg.k * d);
    p.conv_b = p.store.add("conv_bias", 1, d);
    if (cfg.share_embeddings) {
        p.label_emb = p.text_emb;
    } else {
        p.label_emb = p.store.add("label_embedding", vocab_size, d);
    }
    p.affine_w = p.store.add("label_affine_weight", d, d);
    p.affine_b = p.store.add("label_affine_bias", 1, d);
    p.pred_w = p.store.add("pred_weight", n_labels, d);
    p.pred_b = p.store.add("pred_bias", 1, n_labels);

    Rng rng(mix(seed, 0x70a7a35u));
    fill_normal(p.store.value(p.text_emb), rng, cfg.init_std);
    fill_normal(p.store.value(p.conv_w), rng, cfg.init_std);
    if (!cfg.share_embeddings) fill_normal(p.store.value(p.label_emb), rng, cfg.init_std);
    fill_identity(p.store.value(p.affine_w));
    fill_normal(p.store.value(p.pred_w), rng, cfg.init_std);
    // biases start at zero

    double* pad = p.store.value(p.text_emb).row(Vocab::kPadId);
    for (int i = 0; i < d; ++i) pad[i] = 0.0;
    return p;
}

void ModelParams::bind_handles() {
    auto need = [&](const char* name) {
        int idx = store.find(name);
        if (idx < 0) throw std::runtime_error(std::string("checkpoint missing array ") + name);
        return idx;
    };
    text_emb = need("text_embedding");
    conv_w = need("conv_weight");
    conv_b = need("conv_bias");
    label_emb = cfg.share_embeddings ? text_emb : need("label_embedding");
    affine_w = need("label_affine_weight");
    affine_b = need("label_affine_bias");
    pred_w = need("pred_weight");
    pred_b = need("pred_bias");
    vocab_size = store.value(text_emb).rows;
    n_labels = store.value(pred_w).rows;
}

void ModelParams::freeze_pad_row() {
    double* g = store.grad(text_emb).row(Vocab::kPadId);
    for (int i = 0; i < cfg.d; ++i) g[i] = 0.0;
}

void encode_text(const ModelParams& p, std::span<const int> tokens, int len, TextEncodeCache& cache) {
    const int k = p.cfg.k;
    if (len < k) {
        throw std::runtime_error("encode_text: product has " + std::to_string(len) + " tokens, need >= " +
                                 std::to_string(k));
    }
    if (len > static_cast<int>(tokens.size())) throw std::runtime_error("encode_text: len exceeds token list");
    cache.len = len;
    kernels::embed_lookup(p.store.value(p.text_emb), tokens, cache.x);
    kernels::conv1d_forward(cache.x, p.store.value(p.conv_w), p.store.value(p.conv_b).v, k, p.cfg.relu_conv,
                            cache.t_final, cache.conv);
    cache.c_valid = len - k + 1;
}

void encode_text_backward(ModelParams& p, std::span<const int> tokens, const Array2& dt_final,
                          TextEncodeCache& cache) {
    static thread_local Array2 dx;
    dx.resize(cache.x.rows, cache.x.cols);  // resize zero-fills
    kernels::conv1d_backward(dt_final, p.store.value(p.conv_w), p.cfg.k, cache.x.rows, cache.conv, dx,
                             p.store.grad(p.conv_w), p.store.grad(p.conv_b).v);
    kernels::embed_backward(dx, tokens, p.store.grad(p.text_emb));
}

void encode_labels(const ModelParams& p, const AttributeSchema& schema, LabelEncodeCache& cache) {
    const int n = schema.num_labels();
    const int d = p.cfg.d;
    const Array2& emb = p.store.value(p.label_emb);
    const Array2& w = p.store.value(p.affine_w);
    const Vec& b = p.store.value(p.affine_b).v;

    if (cache.tokens.empty()) {
        cache.tokens.resize(static_cast<size_t>(n));
        for (int j = 0; j < n; ++j) cache.tokens[static_cast<size_t>(j)] = schema.label_tokens(j);
    }
    cache.means.resize(n, d);
    cache.h_labels.resize(n, d);
    cache.relu_on.assign(static_cast<size_t>(n) * d, 1);

#pragma omp parallel for schedule(static)
    for (int j = 0; j < n; ++j) {
        const auto& toks = cache.tokens[static_cast<size_t>(j)];
        double* m = cache.means.row(j);
        for (int i = 0; i < d; ++i) m[i] = 0.0;
        for (int t : toks) axpy(1.0, emb.row(t), m, d);
        const double inv = 1.0 / static_cast<double>(toks.size());
        for (int i = 0; i < d; ++i) m[i] *= inv;

        double* h = cache.h_labels.row(j);
        kernels::affine_forward(w, b, m, h);
        uint8_t* on = cache.relu_on.data() + static_cast<size_t>(j) * d;
        for (int i = 0; i < d; ++i) {
            if (h[i] <= 0.0) {
                h[i] = 0.0;
                on[i] = 0;
            }
        }
    }
}

void encode_labels_backward(ModelParams& p, const Array2& dh_labels, LabelEncodeCache& cache) {
    const int n = cache.h_labels.rows;
    const int d = cache.h_labels.cols;
    const Array2& w = p.store.value(p.affine_w);
    Array2& demb = p.store.grad(p.label_emb);
    Array2& dw = p.store.grad(p.affine_w);
    Vec& db = p.store.grad(p.affine_b).v;

    Vec du(static_cast<size_t>(d));
    Vec dm(static_cast<size_t>(d));
    for (int j = 0; j < n; ++j) {
        const uint8_t* on = cache.relu_on.data() + static_cast<size_t>(j) * d;
        for (int i = 0; i < d; ++i) du[static_cast<size_t>(i)] = on[i] ? dh_labels.at(j, i) : 0.0;
        std::fill(dm.begin(), dm.end(), 0.0);
        kernels::affine_backward(w, cache.means.row(j), du.data(), dw, db, dm.data());
        const auto& toks = cache.tokens[static_cast<size_t>(j)];
        const double inv = 1.0 / static_cast<double>(toks.size());
        for (int t : toks) axpy(inv, dm.data(), demb.row(t), d);
    }
}

void apply_label_embedding_init(ModelParams& p, const AttributeSchema& schema, const Array2& init_rows) {
    const int n = schema.num_labels();
    const int d = p.cfg.d;
    if (init_rows.rows != n || init_rows.cols != d) {
        throw std::runtime_error("label init: expected " + std::to_string(n) + "x" + std::to_string(d) +
                                 ", file has " + std::to_string(init_rows.rows) + "x" +
                                 std::to_string(init_rows.cols));
    }
    Array2& emb = p.store.value(p.label_emb);
    std::vector<int> touch_count(static_cast<size_t>(emb.rows), 0);
    Array2 sums(emb.rows, d);
    for (int j = 0; j < n; ++j) {
        for (int t : schema.label_tokens(j)) {
            axpy(1.0, init_rows.row(j), sums.row(t), d);
            ++touch_count[static_cast<size_t>(t)];
        }
    }
    for (int t = 0; t < emb.rows; ++t) {
        if (touch_count[static_cast<size_t>(t)] == 0) continue;
        const double inv = 1.0 / touch_count[static_cast<size_t>(t)];
        double* dst = emb.row(t);
        const double* src = sums.row(t);
        for (int i = 0; i < d; ++i) dst[i] = src[i] * inv;
    }
}

namespace {
constexpr char kLembMagic[8] = {'A', 'V', 'E', 'X', 'L', 'E', 'M', 'B'};
}

Array2 load_label_embedding_init(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read label init file " + path);
    char magic[8];
    uint32_t version = 0;
    uint64_t rows = 0, cols = 0;
    in.read(magic, 8);
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&rows), 8);
    in.read(reinterpret_cast<char*>(&cols), 8);
    if (!in || std::memcmp(magic, kLembMagic, 8) != 0) throw std::runtime_error(path + ": not a label init file");
    if (version != 1) throw std::runtime_error(path + ": unsupported label init version " + std::to_string(version));
    if (rows == 0 || cols == 0 || rows > (1u << 24) || cols > (1u << 16)) {
        throw std::runtime_error(path + ": implausible label init shape");
    }
    Array2 out(static_cast<int>(rows), static_cast<int>(cols));
    in.read(reinterpret_cast<char*>(out.v.data()), static_cast<std::streamsize>(out.size() * sizeof(double)));
    if (!in) throw std::runtime_error(path + ": truncated label init file");
    return out;
}

void save_label_embedding_init(const std::string& path, const Array2& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write label init file " + path);
    uint32_t version = 1;
    uint64_t r = static_cast<uint64_t>(rows.rows), c = static_cast<uint64_t>(rows.cols);
    out.write(kLembMagic, 8);
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&r), 8);
    out.write(reinterpret_cast<const char*>(&c), 8);
    out.write(reinterpret_cast<const char*>(rows.v.data()), static_cast<std::streamsize>(rows.size() * sizeof(double)));
}

}  // namespace avex
