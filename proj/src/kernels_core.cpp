// Single-implementation kernels: lookup, pooling, cosine, affine, softmax, bce.
#include <cmath>
#include <stdexcept>

#include "avex/kernels.hpp"

namespace avex::kernels {

using detail::axpy;
using detail::dot;

void embed_lookup(const Array2& table, std::span<const int> ids, Array2& out) {
    const int d = table.cols;
    out.resize(static_cast<int>(ids.size()), d);
    for (size_t i = 0; i < ids.size(); ++i) {
        const int id = ids[i];
        if (id < 0 || id >= table.rows) {
            throw std::out_of_range("embed_lookup: id " + std::to_string(id) + " out of range [0," +
                                    std::to_string(table.rows) + ")");
        }
        const double* src = table.row(id);
        double* dst = out.row(static_cast<int>(i));
        for (int c = 0; c < d; ++c) dst[c] = src[c];
    }
}

void embed_backward(const Array2& dout, std::span<const int> ids, Array2& dtable) {
    const int d = dtable.cols;
    for (size_t i = 0; i < ids.size(); ++i) {
        axpy(1.0, dout.row(static_cast<int>(i)), dtable.row(ids[i]), d);
    }
}

void mean_pool_rows(const Array2& x, int n_valid, Vec& out) {
    if (n_valid < 1 || n_valid > x.rows) {
        throw std::invalid_argument("mean_pool_rows: need >= 1 valid row, got " + std::to_string(n_valid));
    }
    out.assign(static_cast<size_t>(x.cols), 0.0);
    for (int t = 0; t < n_valid; ++t) {
        const double* r = x.row(t);
        for (int c = 0; c < x.cols; ++c) out[static_cast<size_t>(c)] += r[c];
    }
    const double inv = 1.0 / n_valid;
    for (double& v : out) v *= inv;
}

void mean_pool_backward(const Vec& dout, int n_valid, Array2& dx) {
    const double inv = 1.0 / n_valid;
    for (int t = 0; t < n_valid; ++t) {
        double* r = dx.row(t);
        for (int c = 0; c < dx.cols; ++c) r[c] += dout[static_cast<size_t>(c)] * inv;
    }
}

void max_pool_rows(const Array2& x, Vec& out, std::vector<int>& argmax) {
    if (x.rows < 1) throw std::invalid_argument("max_pool_rows: empty input");
    out.assign(static_cast<size_t>(x.cols), 0.0);
    argmax.assign(static_cast<size_t>(x.cols), 0);
    for (int c = 0; c < x.cols; ++c) out[static_cast<size_t>(c)] = x.at(0, c);
    for (int t = 1; t < x.rows; ++t) {
        const double* r = x.row(t);
        for (int c = 0; c < x.cols; ++c) {
            if (r[c] > out[static_cast<size_t>(c)]) {  // strict: ties keep the first row
                out[static_cast<size_t>(c)] = r[c];
                argmax[static_cast<size_t>(c)] = t;
            }
        }
    }
}

void max_pool_backward(const Vec& dout, const std::vector<int>& argmax, Array2& dx) {
    for (int c = 0; c < dx.cols; ++c) dx.at(argmax[static_cast<size_t>(c)], c) += dout[static_cast<size_t>(c)];
}

double cosine_forward(const double* u, const double* v, int d, CosineCache& cache) {
    cache.dot = dot(u, v, d);
    cache.nu = std::sqrt(dot(u, u, d));
    cache.nv = std::sqrt(dot(v, v, d));
    cache.degenerate = cache.nu < kCosineNormEps || cache.nv < kCosineNormEps;
    cache.value = cache.degenerate ? 0.0 : cache.dot / (cache.nu * cache.nv);
    return cache.value;
}

void cosine_backward(double dvalue, const double* u, const double* v, int d, const CosineCache& cache, double* du,
                     double* dv) {
    if (cache.degenerate) return;
    const double inv_uv = 1.0 / (cache.nu * cache.nv);
    const double cu = cache.value / (cache.nu * cache.nu);
    const double cv = cache.value / (cache.nv * cache.nv);
    for (int i = 0; i < d; ++i) {
        du[i] += dvalue * (v[i] * inv_uv - cu * u[i]);
        dv[i] += dvalue * (u[i] * inv_uv - cv * v[i]);
    }
}

void affine_forward(const Array2& w, const Vec& b, const double* x, double* y) {
    for (int r = 0; r < w.rows; ++r) y[r] = b[static_cast<size_t>(r)] + dot(w.row(r), x, w.cols);
}

void affine_backward(const Array2& w, const double* x, const double* dy, Array2& dw, Vec& db, double* dx) {
    for (int r = 0; r < w.rows; ++r) {
        db[static_cast<size_t>(r)] += dy[r];
        axpy(dy[r], x, dw.row(r), w.cols);
        axpy(dy[r], w.row(r), dx, w.cols);
    }
}

void softmax(const double* z, double* y, int n) {
    double m = z[0];
    for (int i = 1; i < n; ++i) m = z[i] > m ? z[i] : m;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        y[i] = std::exp(z[i] - m);
        sum += y[i];
    }
    const double inv = 1.0 / sum;
    for (int i = 0; i < n; ++i) y[i] *= inv;
}

void softmax_backward(const double* y, const double* dy, int n, double* dz) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += y[i] * dy[i];
    for (int i = 0; i < n; ++i) dz[i] += y[i] * (dy[i] - s);
}

double sigmoid(double z) { return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

double bce_mean(std::span<const double> logits, std::span<const uint8_t> targets) {
    const size_t n = logits.size();
    double sum = 0.0;
    for (size_t j = 0; j < n; ++j) {
        const double z = logits[j];
        const double y = targets[j] ? 1.0 : 0.0;
        // max(z,0) - z*y + log(1 + exp(-|z|))
        sum += (z > 0.0 ? z : 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    }
    return sum / static_cast<double>(n);
}

void bce_backward(std::span<const double> logits, std::span<const uint8_t> targets, double dloss,
                  std::span<double> dlogits) {
    const double scale = dloss / static_cast<double>(logits.size());
    for (size_t j = 0; j < logits.size(); ++j) {
        dlogits[j] += scale * (sigmoid(logits[j]) - (targets[j] ? 1.0 : 0.0));
    }
}

}  // namespace avex::kernels
