#include "avex/train.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "avex/log.hpp"

namespace avex {

namespace {

// salts for the independent rng streams hanging off cfg.seed
constexpr uint64_t kShuffleTag = 0x73687566666c6531ull;
constexpr uint64_t kSamplerTag = 0x6e656773616d706cull;

}  // namespace

void TrainConfig::validate() const {
    model.validate();
    if (max_len < model.k) throw std::runtime_error("max_len must be >= kernel size");
    if (batch_size < 1) throw std::runtime_error("batch_size must be >= 1");
    if (epochs < 1) throw std::runtime_error("epochs must be >= 1");
    if (!(lr > 0.0)) throw std::runtime_error("lr must be > 0");
    if (optimizer != "adam" && optimizer != "sgd") throw std::runtime_error("optimizer must be adam or sgd");
    if (f < 0.0 || f > 1.0) throw std::runtime_error("loss weight F must be in [0,1]");
    if (f_final >= 0.0 && f_final > 1.0) throw std::runtime_error("f_final must be in [0,1] (or negative to disable)");
    if (!(threshold > 0.0 && threshold < 1.0)) throw std::runtime_error("threshold must be in (0,1)");
    if (patience < 0) throw std::runtime_error("patience must be >= 0");
}

double TrainConfig::f_at_epoch(int e) const {
    if (f_final < 0.0 || epochs <= 1) return f;
    const double t = static_cast<double>(e - 1) / static_cast<double>(epochs - 1);
    return f + (f_final - f) * t;
}

TrainConfig TrainConfig::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw std::runtime_error("config must be a JSON object");

    TrainConfig c;
    for (const auto& [key, val] : j.items()) {
        try {
            if (key == "d") c.model.d = val.get<int>();
            else if (key == "k") c.model.k = val.get<int>();
            else if (key == "relu_conv") c.model.relu_conv = val.get<bool>();
            else if (key == "share_embeddings") c.model.share_embeddings = val.get<bool>();
            else if (key == "init_std") c.model.init_std = val.get<double>();
            else if (key == "max_len") c.max_len = val.get<int>();
            else if (key == "batch_size") c.batch_size = val.get<int>();
            else if (key == "epochs") c.epochs = val.get<int>();
            else if (key == "lr") c.lr = val.get<double>();
            else if (key == "optimizer") c.optimizer = val.get<std::string>();
            else if (key == "adam_beta1") c.adam_beta1 = val.get<double>();
            else if (key == "adam_beta2") c.adam_beta2 = val.get<double>();
            else if (key == "adam_eps") c.adam_eps = val.get<double>();
            else if (key == "f") c.f = val.get<double>();
            else if (key == "f_final") c.f_final = val.get<double>();
            else if (key == "pooling") c.pooling = parse_pool_mode(val.get<std::string>());
            else if (key == "variant") c.variant = parse_variant(val.get<std::string>());
            else if (key == "seed") c.seed = val.get<uint64_t>();
            else if (key == "threshold") c.threshold = val.get<double>();
            else if (key == "patience") c.patience = val.get<int>();
            else if (key == "label_init_file") c.label_init_file = val.get<std::string>();
            else throw std::runtime_error("unknown config key '" + key + "'");
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("config key '" + key + "': " + e.what());
        }
    }
    return c;
}

TrainConfig TrainConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string TrainConfig::to_json_text() const {
    nlohmann::ordered_json j;
    j["d"] = model.d;
    j["k"] = model.k;
    j["relu_conv"] = model.relu_conv;
    j["share_embeddings"] = model.share_embeddings;
    j["init_std"] = model.init_std;
    j["max_len"] = max_len;
    j["batch_size"] = batch_size;
    j["epochs"] = epochs;
    j["lr"] = lr;
    j["optimizer"] = optimizer;
    j["adam_beta1"] = adam_beta1;
    j["adam_beta2"] = adam_beta2;
    j["adam_eps"] = adam_eps;
    j["f"] = f;
    j["f_final"] = f_final;
    j["pooling"] = to_string(pooling);
    j["variant"] = to_string(variant);
    j["seed"] = seed;
    j["threshold"] = threshold;
    j["patience"] = patience;
    j["label_init_file"] = label_init_file;
    return j.dump(2);
}

// --- checkpoint io -----------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'A', 'V', 'E', 'X', 'C', 'K', 'P', 'T'};
constexpr uint32_t kCkptVersion = 1;

void put_u32(std::ostream& os, uint32_t x) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((x >> (8 * i)) & 0xff);
    os.write(b, 4);
}

void put_u64(std::ostream& os, uint64_t x) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((x >> (8 * i)) & 0xff);
    os.write(b, 8);
}

void put_f64(std::ostream& os, double x) { put_u64(os, std::bit_cast<uint64_t>(x)); }

[[noreturn]] void truncated(const std::string& path) {
    throw std::runtime_error("truncated checkpoint file " + path);
}

uint32_t get_u32(std::istream& is, const std::string& path) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) truncated(path);
    uint32_t x = 0;
    for (int i = 0; i < 4; ++i) x |= static_cast<uint32_t>(b[i]) << (8 * i);
    return x;
}

uint64_t get_u64(std::istream& is, const std::string& path) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) truncated(path);
    uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= static_cast<uint64_t>(b[i]) << (8 * i);
    return x;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os.write(kMagic, 8);
    put_u32(os, kCkptVersion);
    put_u64(os, ckpt.fingerprint);
    put_u32(os, static_cast<uint32_t>(ckpt.vocab_size));
    put_u32(os, static_cast<uint32_t>(ckpt.n_labels));
    const std::string cfg_json = ckpt.cfg.to_json_text();
    put_u32(os, static_cast<uint32_t>(cfg_json.size()));
    os.write(cfg_json.data(), static_cast<std::streamsize>(cfg_json.size()));
    put_u32(os, static_cast<uint32_t>(ckpt.params.size()));
    for (int i = 0; i < ckpt.params.size(); ++i) {
        const auto& e = ckpt.params[i];
        put_u32(os, static_cast<uint32_t>(e.name.size()));
        os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        put_u64(os, static_cast<uint64_t>(e.value.rows));
        put_u64(os, static_cast<uint64_t>(e.value.cols));
        for (double x : e.value.v) put_f64(os, x);
    }
    if (!os) throw std::runtime_error("write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open checkpoint file " + path);
    char magic[8];
    if (!is.read(magic, 8)) truncated(path);
    if (std::memcmp(magic, kMagic, 8) != 0) throw std::runtime_error(path + " is not a checkpoint file (bad magic)");
    const uint32_t version = get_u32(is, path);
    if (version != kCkptVersion) {
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                                 std::to_string(kCkptVersion) + ")");
    }
    Checkpoint ckpt;
    ckpt.fingerprint = get_u64(is, path);
    ckpt.vocab_size = static_cast<int>(get_u32(is, path));
    ckpt.n_labels = static_cast<int>(get_u32(is, path));
    const uint32_t cfg_len = get_u32(is, path);
    std::string cfg_json(cfg_len, '\0');
    if (!is.read(cfg_json.data(), cfg_len)) truncated(path);
    ckpt.cfg = TrainConfig::from_json_text(cfg_json);
    const uint32_t n_arrays = get_u32(is, path);
    for (uint32_t a = 0; a < n_arrays; ++a) {
        const uint32_t name_len = get_u32(is, path);
        if (name_len > 4096) truncated(path);  // implausible length == corruption
        std::string name(name_len, '\0');
        if (!is.read(name.data(), name_len)) truncated(path);
        const uint64_t rows = get_u64(is, path);
        const uint64_t cols = get_u64(is, path);
        if (rows > (1u << 30) || cols > (1u << 30)) truncated(path);
        const int h = ckpt.params.add(name, static_cast<int>(rows), static_cast<int>(cols));
        for (double& x : ckpt.params.value(h).v) x = std::bit_cast<double>(get_u64(is, path));
    }
    return ckpt;
}

ModelParams to_model_params(const Checkpoint& ckpt) {
    ModelParams p;
    p.cfg = ckpt.cfg.model;
    p.vocab_size = ckpt.vocab_size;
    p.n_labels = ckpt.n_labels;
    p.store = ckpt.params;
    p.store.zero_grads();
    p.bind_handles();
    return p;
}

// --- optimizer -----------------------------------------------------------------

Optimizer::Optimizer(const TrainConfig& cfg, ParamStore& store) : cfg_(cfg), store_(store) {
    adam_ = cfg.optimizer == "adam";
    if (adam_) {
        for (int i = 0; i < store.size(); ++i) {
            m_.emplace_back(store[i].value.size(), 0.0);
            v_.emplace_back(store[i].value.size(), 0.0);
        }
    }
}

void Optimizer::step() {
    ++store_.step;
    if (!adam_) {
        for (int i = 0; i < store_.size(); ++i) {
            auto& e = store_[i];
            for (size_t s = 0; s < e.value.v.size(); ++s) e.value.v[s] -= cfg_.lr * e.grad.v[s];
        }
        return;
    }
    const double b1 = cfg_.adam_beta1, b2 = cfg_.adam_beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(store_.step));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(store_.step));
    for (int i = 0; i < store_.size(); ++i) {
        auto& e = store_[i];
        Vec& m = m_[static_cast<size_t>(i)];
        Vec& v = v_[static_cast<size_t>(i)];
        for (size_t s = 0; s < e.value.v.size(); ++s) {
            const double g = e.grad.v[s];
            m[s] = b1 * m[s] + (1.0 - b1) * g;
            v[s] = b2 * v[s] + (1.0 - b2) * g * g;
            e.value.v[s] -= cfg_.lr * (m[s] / bc1) / (std::sqrt(v[s] / bc2) + cfg_.adam_eps);
        }
    }
}

// --- training loop ---------------------------------------------------------------

namespace {

Checkpoint snapshot(const ModelParams& p, const TrainConfig& cfg, uint64_t fingerprint) {
    Checkpoint c;
    c.cfg = cfg;
    c.fingerprint = fingerprint;
    c.vocab_size = p.vocab_size;
    c.n_labels = p.n_labels;
    c.params = p.store;
    return c;
}

void check_min_length(const std::vector<Product>& split, const char* name, int k) {
    for (const Product& pr : split) {
        if (static_cast<int>(pr.tokens.size()) < k) {
            throw std::runtime_error(std::string(name) + " product " + std::to_string(pr.product_id) +
                                     " has fewer tokens than kernel size " + std::to_string(k));
        }
    }
}

}  // namespace

TrainResult train(const Dataset& ds, const TrainConfig& cfg) {
    cfg.validate();
    ds.validate();
    if (ds.train.empty()) throw std::runtime_error("train split is empty");
    check_min_length(ds.train, "train", cfg.model.k);
    check_min_length(ds.val, "val", cfg.model.k);
    check_min_length(ds.test, "test", cfg.model.k);

    const uint64_t fingerprint = schema_fingerprint(ds.schema, ds.vocab);
    ModelParams p = ModelParams::init(cfg.model, ds.vocab.size(), ds.schema.num_labels(), cfg.seed);
    if (!cfg.label_init_file.empty()) {
        apply_label_embedding_init(p, ds.schema, load_label_embedding_init(cfg.label_init_file));
    }

    Optimizer opt(cfg, p.store);
    BatchScratch scratch;
    std::vector<size_t> order(ds.train.size());
    std::vector<Product> batch;
    std::vector<std::vector<int>> preds;

    TrainResult res;
    double best_mif1 = -1.0;
    int since_improve = 0;

    for (int e = 1; e <= cfg.epochs; ++e) {
        std::iota(order.begin(), order.end(), size_t{0});
        Rng shuffle_rng(mix(cfg.seed, kShuffleTag, static_cast<uint64_t>(e)));
        shuffle_rng.shuffle(order);

        BatchSettings bs;
        bs.variant = cfg.variant;
        bs.pooling = cfg.pooling;
        bs.f = cfg.f_at_epoch(e);
        bs.sampler_salt = mix(cfg.seed, kSamplerTag, static_cast<uint64_t>(e));

        LossBundle sum;
        double weight = 0.0;
        int batch_idx = 0;
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size), ++batch_idx) {
            const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
            batch.clear();
            for (size_t i = start; i < end; ++i) batch.push_back(ds.train[order[i]]);

            p.store.zero_grads();
            const LossBundle b = batch_forward_backward(p, ds.schema, batch, bs, scratch);
            if (!std::isfinite(b.total)) {
                throw std::runtime_error("non-finite loss at epoch " + std::to_string(e) + " batch " +
                                         std::to_string(batch_idx));
            }
            opt.step();

            const double w = static_cast<double>(end - start);
            sum.l_bce += b.l_bce * w;
            sum.l_sm += b.l_sm * w;
            sum.l_ns += b.l_ns * w;
            sum.l_pr += b.l_pr * w;
            sum.total += b.total * w;
            weight += w;
            AVEX_DEBUG("epoch %d batch %d total %.6f", e, batch_idx, b.total);
        }

        EpochRow row;
        row.epoch = e;
        row.train_loss.l_bce = sum.l_bce / weight;
        row.train_loss.l_sm = sum.l_sm / weight;
        row.train_loss.l_ns = sum.l_ns / weight;
        row.train_loss.l_pr = sum.l_pr / weight;
        row.train_loss.total = sum.total / weight;
        row.train_loss.f_weight = loss_coeffs(cfg.variant, bs.f).use_prior ? bs.f : 0.0;

        bool improved = false;
        if (!ds.val.empty()) {
            predict_split(p, ds.schema, ds.val, cfg.threshold, preds);
            const MetricsReport m = compute_metrics(preds, ds.val, ds.schema);
            row.val_precision = m.precision;
            row.val_recall = m.recall;
            row.val_micro_f1 = m.micro_f1;
            row.val_macro_f1 = m.macro_f1;
            if (m.micro_f1 > best_mif1) {
                best_mif1 = m.micro_f1;
                res.best = snapshot(p, cfg, fingerprint);
                res.best_epoch = e;
                improved = true;
            }
        }
        res.log.push_back(row);
        AVEX_INFO("epoch %d  total %.6f  bce %.6f  sm %.6f  ns %.6f  pr %.6f  val MiF1 %.2f", e,
                  row.train_loss.total, row.train_loss.l_bce, row.train_loss.l_sm, row.train_loss.l_ns,
                  row.train_loss.l_pr, row.val_micro_f1);

        if (!ds.val.empty() && cfg.patience > 0) {
            since_improve = improved ? 0 : since_improve + 1;
            if (since_improve >= cfg.patience) {
                AVEX_INFO("early stop after epoch %d (no val MiF1 gain in %d epochs)", e, cfg.patience);
                break;
            }
        }
    }

    res.last = snapshot(p, cfg, fingerprint);
    if (best_mif1 < 0.0) {  // no val split: best == last
        res.best = res.last;
        res.best_epoch = res.log.empty() ? 0 : res.log.back().epoch;
    }
    return res;
}

void write_epoch_log_csv(const std::string& path, std::span<const EpochRow> log) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << "epoch,l_bce,l_sm,l_ns,l_pr,total,val_p,val_r,val_mif1,val_maf1\n";
    char buf[256];
    for (const EpochRow& r : log) {
        std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.10g,%.10g,%.10g,%.2f,%.2f,%.2f,%.2f\n", r.epoch,
                      r.train_loss.l_bce, r.train_loss.l_sm, r.train_loss.l_ns, r.train_loss.l_pr,
                      r.train_loss.total, r.val_precision, r.val_recall, r.val_micro_f1, r.val_macro_f1);
        os << buf;
    }
    if (!os) throw std::runtime_error("write failed for " + path);
}

}  // namespace avex
