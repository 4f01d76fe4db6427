#include "avex/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "avex/corpus.hpp"
#include "avex/encoders.hpp"
#include "avex/kernels.hpp"
#include "avex/matching.hpp"
#include "avex/model.hpp"

namespace avex {

namespace {

constexpr double kStep = 1e-5;

double rel_err(double analytic, double fd) {
    return std::abs(analytic - fd) / std::max({1.0, std::abs(analytic), std::abs(fd)});
}

// central finite differences over every coordinate of x against grad g
double fd_sweep(double* x, const double* g, size_t n, const std::function<double()>& forward) {
    double worst = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double keep = x[i];
        x[i] = keep + kStep;
        const double fp = forward();
        x[i] = keep - kStep;
        const double fm = forward();
        x[i] = keep;
        worst = std::max(worst, rel_err(g[i], (fp - fm) / (2.0 * kStep)));
    }
    return worst;
}

void fill(Array2& a, Rng& rng, double scale = 1.0) {
    for (double& x : a.v) x = rng.normal(0.0, scale);
}

void fill(Vec& v, size_t n, Rng& rng, double scale = 1.0) {
    v.resize(n);
    for (double& x : v) x = rng.normal(0.0, scale);
}

// sum(w .* out), the scalarization used to test matrix-valued ops
double weighted_sum(const Array2& w, const Array2& out) {
    double s = 0.0;
    for (size_t i = 0; i < w.v.size(); ++i) s += w.v[i] * out.v[i];
    return s;
}

double weighted_sum(const Vec& w, const Vec& out) {
    double s = 0.0;
    for (size_t i = 0; i < w.size(); ++i) s += w[i] * out[i];
    return s;
}

struct Suite {
    uint64_t seed;
    std::vector<GradCheckResult> results;

    void record(const std::string& op, int cases, double err, double tol) {
        results.push_back({op, cases, err, tol, err <= tol});
    }
};

void check_embed(Suite& s) {
    Rng rng(mix(s.seed, 1));
    double worst = 0.0;
    const int cases = 10;
    for (int c = 0; c < cases; ++c) {
        const int v = 3 + rng.uniform_int(6), d = 2 + rng.uniform_int(4), len = 1 + rng.uniform_int(6);
        Array2 table(v, d);
        fill(table, rng);
        std::vector<int> ids(static_cast<size_t>(len));
        for (int& id : ids) id = rng.uniform_int(v);
        Array2 w(len, d);
        fill(w, rng);
        Array2 out, dtable(v, d);
        auto fwd = [&] {
            kernels::embed_lookup(table, ids, out);
            return weighted_sum(w, out);
        };
        fwd();
        kernels::embed_backward(w, ids, dtable);
        worst = std::max(worst, fd_sweep(table.v.data(), dtable.v.data(), table.v.size(), fwd));
    }
    s.record("embed_lookup", cases, worst, 1e-6);
}

void check_conv(Suite& s, bool serial) {
    Rng rng(mix(s.seed, serial ? 2 : 3));
    double worst = 0.0;
    const int cases = serial ? 5 : 15;
    for (int c = 0; c < cases; ++c) {
        const int k = 1 + rng.uniform_int(3), d = 2 + rng.uniform_int(3);
        const int l = k + rng.uniform_int(5);
        const bool relu = serial ? true : (c % 3 != 2);
        Array2 x(l, d), w(d, k * d), wt(l - k + 1, d);
        Vec b;
        fill(x, rng);
        fill(w, rng, 0.5);
        fill(b, static_cast<size_t>(d), rng, 0.2);
        fill(wt, rng);
        Array2 out;
        kernels::Conv1dCache cache;
        auto fwd = [&] {
            if (serial) {
                kernels::serial::conv1d_forward(x, w, b, k, relu, out, cache);
            } else {
                kernels::conv1d_forward(x, w, b, k, relu, out, cache);
            }
            return weighted_sum(wt, out);
        };
        fwd();
        Array2 dx(l, d), dw(d, k * d);
        Vec db(static_cast<size_t>(d), 0.0);
        if (serial) {
            kernels::serial::conv1d_backward(wt, w, k, l, cache, dx, dw, db);
        } else {
            kernels::conv1d_backward(wt, w, k, l, cache, dx, dw, db);
        }
        worst = std::max(worst, fd_sweep(x.v.data(), dx.v.data(), x.v.size(), fwd));
        worst = std::max(worst, fd_sweep(w.v.data(), dw.v.data(), w.v.size(), fwd));
        worst = std::max(worst, fd_sweep(b.data(), db.data(), b.size(), fwd));
    }
    s.record(serial ? "conv1d(serial)" : "conv1d", cases, worst, 1e-4);
}

void check_pools(Suite& s) {
    Rng rng(mix(s.seed, 4));
    double worst_mean = 0.0, worst_max = 0.0;
    const int cases = 5;
    for (int c = 0; c < cases; ++c) {
        const int r = 1 + rng.uniform_int(5), d = 2 + rng.uniform_int(4);
        Array2 x(r, d);
        fill(x, rng);
        Vec w;
        fill(w, static_cast<size_t>(d), rng);
        const int n_valid = 1 + rng.uniform_int(r);
        Vec out;
        auto fwd_mean = [&] {
            kernels::mean_pool_rows(x, n_valid, out);
            return weighted_sum(w, out);
        };
        fwd_mean();
        Array2 dx(r, d);
        kernels::mean_pool_backward(w, n_valid, dx);
        worst_mean = std::max(worst_mean, fd_sweep(x.v.data(), dx.v.data(), x.v.size(), fwd_mean));

        std::vector<int> argmax;
        auto fwd_max = [&] {
            kernels::max_pool_rows(x, out, argmax);
            return weighted_sum(w, out);
        };
        fwd_max();
        Array2 dxm(r, d);
        kernels::max_pool_backward(w, argmax, dxm);
        worst_max = std::max(worst_max, fd_sweep(x.v.data(), dxm.v.data(), x.v.size(), fwd_max));
    }
    s.record("mean_pool_rows", cases, worst_mean, 1e-6);
    s.record("max_pool_rows", cases, worst_max, 1e-4);  // FD can straddle an argmax switch
}

void check_cosine(Suite& s) {
    Rng rng(mix(s.seed, 5));
    double worst = 0.0;
    const int cases = 10;
    for (int c = 0; c < cases; ++c) {
        const int d = 2 + rng.uniform_int(6);
        Vec u, v;
        fill(u, static_cast<size_t>(d), rng);
        fill(v, static_cast<size_t>(d), rng);
        kernels::CosineCache cache;
        auto fwd = [&] { return kernels::cosine_forward(u.data(), v.data(), d, cache); };
        fwd();
        Vec du(static_cast<size_t>(d), 0.0), dv(static_cast<size_t>(d), 0.0);
        kernels::cosine_backward(1.0, u.data(), v.data(), d, cache, du.data(), dv.data());
        worst = std::max(worst, fd_sweep(u.data(), du.data(), u.size(), fwd));
        worst = std::max(worst, fd_sweep(v.data(), dv.data(), v.size(), fwd));
    }
    s.record("cosine", cases, worst, 1e-6);
}

void check_affine(Suite& s) {
    Rng rng(mix(s.seed, 6));
    double worst = 0.0;
    const int cases = 10;
    for (int c = 0; c < cases; ++c) {
        const int d = 2 + rng.uniform_int(5);
        Array2 w(d, d);
        Vec b, x, wt, y(static_cast<size_t>(d));
        fill(w, rng);
        fill(b, static_cast<size_t>(d), rng);
        fill(x, static_cast<size_t>(d), rng);
        fill(wt, static_cast<size_t>(d), rng);
        auto fwd = [&] {
            kernels::affine_forward(w, b, x.data(), y.data());
            return weighted_sum(wt, y);
        };
        fwd();
        Array2 dw(d, d);
        Vec db(static_cast<size_t>(d), 0.0), dx(static_cast<size_t>(d), 0.0);
        kernels::affine_backward(w, x.data(), wt.data(), dw, db, dx.data());
        worst = std::max(worst, fd_sweep(w.v.data(), dw.v.data(), w.v.size(), fwd));
        worst = std::max(worst, fd_sweep(b.data(), db.data(), b.size(), fwd));
        worst = std::max(worst, fd_sweep(x.data(), dx.data(), x.size(), fwd));
    }
    s.record("affine", cases, worst, 1e-6);
}

void check_softmax(Suite& s) {
    Rng rng(mix(s.seed, 7));
    double worst = 0.0;
    const int cases = 5;
    for (int c = 0; c < cases; ++c) {
        const int n = 2 + rng.uniform_int(6);
        Vec z, wt, y(static_cast<size_t>(n));
        fill(z, static_cast<size_t>(n), rng);
        fill(wt, static_cast<size_t>(n), rng);
        auto fwd = [&] {
            kernels::softmax(z.data(), y.data(), n);
            return weighted_sum(wt, y);
        };
        fwd();
        Vec dz(static_cast<size_t>(n), 0.0);
        kernels::softmax_backward(y.data(), wt.data(), n, dz.data());
        worst = std::max(worst, fd_sweep(z.data(), dz.data(), z.size(), fwd));
    }
    s.record("softmax", cases, worst, 1e-6);
}

void check_bce(Suite& s) {
    Rng rng(mix(s.seed, 8));
    double worst = 0.0;
    const int cases = 10;
    for (int c = 0; c < cases; ++c) {
        const int n = 1 + rng.uniform_int(8);
        Vec z;
        fill(z, static_cast<size_t>(n), rng, 2.0);
        std::vector<uint8_t> y(static_cast<size_t>(n));
        for (auto& t : y) t = static_cast<uint8_t>(rng.uniform_int(2));
        auto fwd = [&] { return kernels::bce_mean(z, y); };
        Vec dz(static_cast<size_t>(n), 0.0);
        kernels::bce_backward(z, y, 1.0, dz);
        worst = std::max(worst, fd_sweep(z.data(), dz.data(), z.size(), fwd));
    }
    s.record("bce", cases, worst, 1e-6);
}

void check_attention(Suite& s, bool serial) {
    Rng rng(mix(s.seed, serial ? 9 : 10));
    double worst = 0.0;
    const int cases = serial ? 5 : 10;
    for (int c = 0; c < cases; ++c) {
        const int rows = 1 + rng.uniform_int(5), d = 2 + rng.uniform_int(3), n = 1 + rng.uniform_int(4);
        const int c_valid = 1 + rng.uniform_int(rows);
        Array2 t(rows, d), h(n, d), w(n, d);
        Vec b, wt;
        fill(t, rng);
        fill(h, rng);
        fill(w, rng);
        fill(b, static_cast<size_t>(n), rng);
        fill(wt, static_cast<size_t>(n), rng);
        kernels::AttentionCache cache;
        Vec logits;
        auto fwd = [&] {
            if (serial) {
                kernels::serial::attention_forward(t, c_valid, h, w, b, cache, logits);
            } else {
                kernels::attention_forward(t, c_valid, h, w, b, cache, logits);
            }
            return weighted_sum(wt, logits);
        };
        fwd();
        Array2 dt(rows, d), dh(n, d), dw(n, d);
        Vec db(static_cast<size_t>(n), 0.0);
        if (serial) {
            kernels::serial::attention_backward(t, h, w, wt, cache, dt, dh, dw, db);
        } else {
            kernels::attention_backward(t, h, w, wt, cache, dt, dh, dw, db);
        }
        worst = std::max(worst, fd_sweep(t.v.data(), dt.v.data(), t.v.size(), fwd));
        worst = std::max(worst, fd_sweep(h.v.data(), dh.v.data(), h.v.size(), fwd));
        worst = std::max(worst, fd_sweep(w.v.data(), dw.v.data(), w.v.size(), fwd));
        worst = std::max(worst, fd_sweep(b.data(), db.data(), b.size(), fwd));
    }
    s.record(serial ? "attention(serial)" : "attention", cases, worst, 1e-4);
}

// label_selector -> combine_gold_labels -> cosine against a fixed query
void check_combine(Suite& s) {
    Rng rng(mix(s.seed, 11));
    double worst = 0.0;
    const int cases = 10;
    for (int c = 0; c < cases; ++c) {
        const PoolMode mode = c % 2 == 0 ? PoolMode::kMax : PoolMode::kMean;
        const int n = 3 + rng.uniform_int(4), d = 2 + rng.uniform_int(4);
        Array2 h(n, d);
        fill(h, rng);
        Vec q;
        fill(q, static_cast<size_t>(d), rng);
        std::vector<int> gold;
        for (int j = 0; j < n; ++j) {
            if (rng.uniform_int(2) == 1) gold.push_back(j);
        }
        if (gold.empty()) gold.push_back(rng.uniform_int(n));
        Array2 l_gt;
        Vec l_cr;
        std::vector<int> argmax;
        kernels::CosineCache cc;
        auto fwd = [&] {
            label_selector(h, gold, l_gt);
            combine_gold_labels(l_gt, mode, l_cr, argmax);
            return kernels::cosine_forward(q.data(), l_cr.data(), d, cc);
        };
        fwd();
        Vec dq(static_cast<size_t>(d), 0.0), dl_cr(static_cast<size_t>(d), 0.0);
        kernels::cosine_backward(1.0, q.data(), l_cr.data(), d, cc, dq.data(), dl_cr.data());
        Array2 dl_gt(l_gt.rows, d), dh(n, d);
        combine_gold_labels_backward(dl_cr, mode, l_gt.rows, argmax, dl_gt);
        for (size_t r = 0; r < gold.size(); ++r) {
            kernels::detail::axpy(1.0, dl_gt.row(static_cast<int>(r)), dh.row(gold[r]), d);
        }
        worst = std::max(worst, fd_sweep(h.v.data(), dh.v.data(), h.v.size(), fwd));
    }
    s.record("label_select+combine", cases, worst, 1e-4);
}

void check_prior(Suite& s) {
    Rng rng(mix(s.seed, 12));
    double worst = 0.0;
    const int cases = 5;
    for (int c = 0; c < cases; ++c) {
        const int n = 2 + rng.uniform_int(5), d = 2 + rng.uniform_int(4);
        Array2 h(n, d);
        fill(h, rng);
        auto fwd = [&] { return label_prior_loss(h); };
        fwd();
        Array2 dh(n, d);
        label_prior_backward(h, 1.0, dh);
        worst = std::max(worst, fd_sweep(h.v.data(), dh.v.data(), h.v.size(), fwd));
    }
    s.record("label_prior", cases, worst, 1e-6);
}

void check_end_to_end(Suite& s) {
    GenConfig gc;
    gc.n_attributes = 3;
    gc.values_per_attribute = 2;
    gc.n_train = 6;
    gc.n_val = 2;
    gc.n_test = 2;
    gc.avg_labels_per_product = 1.5;
    gc.noise_tokens_per_product = 5;
    gc.confusability = 0.5;
    gc.noise_vocab = 12;
    gc.max_len = 32;
    const Dataset ds = generate_corpus(gc, mix(s.seed, 13));

    ModelConfig mc;
    mc.d = 8;
    mc.k = 3;
    const Variant variants[] = {Variant::kFull, Variant::kNoNs, Variant::kNoPrior, Variant::kBceOnly};

    Rng rng(mix(s.seed, 14));
    double worst = 0.0;
    int cases = 0;
    for (const Variant variant : variants) {
        ModelParams p = ModelParams::init(mc, ds.vocab.size(), ds.schema.num_labels(), mix(s.seed, 15));
        BatchSettings bs;
        bs.variant = variant;
        bs.pooling = variant == Variant::kNoNs ? PoolMode::kMean : PoolMode::kMax;
        bs.f = 0.5;
        bs.sampler_salt = mix(s.seed, 16);
        const std::span<const Product> batch(ds.train.data(), 3);

        p.store.zero_grads();
        BatchScratch scratch;
        batch_forward_backward(p, ds.schema, batch, bs, scratch);
        auto fwd = [&] { return batch_loss(p, ds.schema, batch, bs).total; };

        for (int pick = 0; pick < 10; ++pick, ++cases) {
            int entry, coord, row;
            do {
                entry = rng.uniform_int(p.store.size());
                coord = rng.uniform_int(static_cast<int>(p.store.value(entry).v.size()));
                row = coord / p.store.value(entry).cols;
            } while ((entry == p.text_emb || entry == p.label_emb) && row == Vocab::kPadId);

            double* x = &p.store.value(entry).v[static_cast<size_t>(coord)];
            const double g = p.store.grad(entry).v[static_cast<size_t>(coord)];
            const double keep = *x;
            *x = keep + kStep;
            const double fp = fwd();
            *x = keep - kStep;
            const double fm = fwd();
            *x = keep;
            worst = std::max(worst, rel_err(g, (fp - fm) / (2.0 * kStep)));
        }
    }
    s.record("total_loss(end-to-end)", cases, worst, 1e-4);
}

}  // namespace

std::vector<GradCheckResult> run_gradcheck(uint64_t seed) {
    Suite s{seed, {}};
    check_embed(s);
    check_conv(s, false);
    check_conv(s, true);
    check_pools(s);
    check_cosine(s);
    check_affine(s);
    check_softmax(s);
    check_bce(s);
    check_attention(s, false);
    check_attention(s, true);
    check_combine(s);
    check_prior(s);
    check_end_to_end(s);
    return s.results;
}

}  // namespace avex
