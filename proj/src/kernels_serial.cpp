// Serial reference implementations of the parallel kernels. These define the
// accumulation order the OpenMP versions must reproduce bit-for-bit.
#include "kernels_detail.hpp"

namespace avex::kernels::serial {

using detail::axpy;
using detail::dot;

void conv1d_forward(const Array2& x, const Array2& w, const Vec& bias, int k, bool relu, Array2& out,
                    Conv1dCache& cache) {
    detail::check_conv_shapes(x, w, bias, k);
    const int c = x.rows - k + 1;
    const int d = x.cols;
    detail::im2row(x, k, cache.xw);
    out.resize(c, d);
    cache.on.assign(static_cast<size_t>(c) * d, 1);
    for (int t = 0; t < c; ++t) detail::conv_row(cache.xw, w, bias, relu, t, out, cache.on);
}

void conv1d_backward(const Array2& dout, const Array2& w, int k, int rows_in, Conv1dCache& cache, Array2& dx,
                     Array2& dw, Vec& dbias) {
    const int c = dout.rows;
    const int d = dout.cols;
    const int kd = k * d;

    // filter/bias gradients: per output channel, t ascending
    for (int j = 0; j < d; ++j) {
        double* dwj = dw.row(j);
        double db = 0.0;
        for (int t = 0; t < c; ++t) {
            const double g = cache.on[static_cast<size_t>(t) * d + j] ? dout.at(t, j) : 0.0;
            db += g;
            axpy(g, cache.xw.row(t), dwj, kd);
        }
        dbias[static_cast<size_t>(j)] += db;
    }

    // patch gradients, then fold overlapping patches back onto input rows
    cache.dxw.resize(c, kd);
    for (int t = 0; t < c; ++t) {
        double* row = cache.dxw.row(t);
        for (int i = 0; i < kd; ++i) row[i] = 0.0;
        for (int j = 0; j < d; ++j) {
            const double g = cache.on[static_cast<size_t>(t) * d + j] ? dout.at(t, j) : 0.0;
            axpy(g, w.row(j), row, kd);
        }
    }
    for (int p = 0; p < rows_in; ++p) {
        double* dst = dx.row(p);
        const int t_lo = p - k + 1 > 0 ? p - k + 1 : 0;
        const int t_hi = p < c - 1 ? p : c - 1;
        for (int i = 0; i < d; ++i) {
            double acc = dst[i];
            for (int t = t_lo; t <= t_hi; ++t) acc += cache.dxw.at(t, (p - t) * d + i);
            dst[i] = acc;
        }
    }
}

void attention_forward(const Array2& t_final, int c_valid, const Array2& h_labels, const Array2& w_out,
                       const Vec& b_out, AttentionCache& cache, Vec& logits) {
    const int n = h_labels.rows;
    const int d = h_labels.cols;
    cache.c_valid = c_valid;
    cache.alpha.resize(n, c_valid);
    cache.ctx.resize(n, d);
    logits.assign(static_cast<size_t>(n), 0.0);
    for (int j = 0; j < n; ++j) {
        double* a = cache.alpha.row(j);
        for (int t = 0; t < c_valid; ++t) a[t] = dot(h_labels.row(j), t_final.row(t), d);
        softmax(a, a, c_valid);
        double* ctx = cache.ctx.row(j);
        for (int i = 0; i < d; ++i) ctx[i] = 0.0;
        for (int t = 0; t < c_valid; ++t) axpy(a[t], t_final.row(t), ctx, d);
        logits[static_cast<size_t>(j)] = b_out[static_cast<size_t>(j)] + dot(w_out.row(j), ctx, d);
    }
}

void attention_backward(const Array2& t_final, const Array2& h_labels, const Array2& w_out, const Vec& dlogits,
                        AttentionCache& cache, Array2& dt_final, Array2& dh_labels, Array2& dw_out, Vec& db_out) {
    const int n = h_labels.rows;
    const int d = h_labels.cols;
    const int cv = cache.c_valid;
    cache.ds.resize(n, cv);
    cache.dctx.resize(n, d);

    for (int j = 0; j < n; ++j) {
        const double dl = dlogits[static_cast<size_t>(j)];
        db_out[static_cast<size_t>(j)] += dl;
        axpy(dl, cache.ctx.row(j), dw_out.row(j), d);

        double* dctx = cache.dctx.row(j);
        for (int i = 0; i < d; ++i) dctx[i] = dl * w_out.at(j, i);

        double* ds = cache.ds.row(j);
        const double* a = cache.alpha.row(j);
        for (int t = 0; t < cv; ++t) ds[t] = dot(dctx, t_final.row(t), d);  // dalpha
        double s = 0.0;
        for (int t = 0; t < cv; ++t) s += a[t] * ds[t];
        for (int t = 0; t < cv; ++t) ds[t] = a[t] * (ds[t] - s);

        double* dh = dh_labels.row(j);
        for (int t = 0; t < cv; ++t) axpy(ds[t], t_final.row(t), dh, d);

        for (int t = 0; t < cv; ++t) {
            double* dt = dt_final.row(t);
            const double* h = h_labels.row(j);
            for (int i = 0; i < d; ++i) dt[i] += detail::attn_dt_term(a[t], dctx[i], ds[t], h[i]);
        }
    }
}

}  // namespace avex::kernels::serial
