// Differentiable compute kernels: exactly the forward ops the model needs,
// each with an analytic backward. Gradient-accumulating convention: backward
// functions ADD into their d* outputs.
//
// The two hot kernels (valid-mode 1-D convolution and label-wise attention)
// have an OpenMP-parallel implementation (namespace kernels) and a serial
// reference (namespace kernels::serial). The parallel versions are written so
// every output element sees the same floating-point accumulation order as the
// reference; tests pin bitwise equality between the two.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "avex/array.hpp"

namespace avex::kernels {

inline constexpr double kCosineNormEps = 1e-12;

namespace detail {
inline double dot(const double* a, const double* b, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}
inline void axpy(double a, const double* x, double* y, int n) {
    for (int i = 0; i < n; ++i) y[i] += a * x[i];
}
}  // namespace detail

// --- embedding lookup -------------------------------------------------------

// out[i] = table.row(ids[i]); throws on id out of range
void embed_lookup(const Array2& table, std::span<const int> ids, Array2& out);
// scatter: dtable.row(ids[i]) += dout.row(i); repeated ids sum
void embed_backward(const Array2& dout, std::span<const int> ids, Array2& dtable);

// --- valid-mode 1-D convolution over the sequence axis ----------------------

// Filters are stored row-major per output channel: w is d_out x (k*d_in),
// w(j, u*d_in + i) = filter_j[u, i]. Here d_out == d_in == x.cols.
struct Conv1dCache {
    Array2 xw;                     // im2row patches, c x (k*d)
    std::vector<uint8_t> on;       // ReLU pass-through mask (all 1 when relu off)
    Array2 dxw;                    // backward scratch
};

// out(t, j) = bias_j + sum_{u,i} w(j, u*d+i) * x(t+u, i), then optional ReLU.
// c = L-k+1 rows; throws if L < k or shapes disagree.
void conv1d_forward(const Array2& x, const Array2& w, const Vec& bias, int k, bool relu, Array2& out,
                    Conv1dCache& cache);
// dout is the gradient at the (post-ReLU) output; accumulates dx, dw, dbias
void conv1d_backward(const Array2& dout, const Array2& w, int k, int rows_in, Conv1dCache& cache, Array2& dx,
                     Array2& dw, Vec& dbias);

namespace serial {
void conv1d_forward(const Array2& x, const Array2& w, const Vec& bias, int k, bool relu, Array2& out,
                    Conv1dCache& cache);
void conv1d_backward(const Array2& dout, const Array2& w, int k, int rows_in, Conv1dCache& cache, Array2& dx,
                     Array2& dw, Vec& dbias);
}  // namespace serial

// --- row pooling -------------------------------------------------------------

// per-column mean over rows t < n_valid; throws if n_valid < 1
void mean_pool_rows(const Array2& x, int n_valid, Vec& out);
void mean_pool_backward(const Vec& dout, int n_valid, Array2& dx);

// per-column max over all rows; ties go to the first max row
void max_pool_rows(const Array2& x, Vec& out, std::vector<int>& argmax);
void max_pool_backward(const Vec& dout, const std::vector<int>& argmax, Array2& dx);

// --- cosine similarity --------------------------------------------------------

struct CosineCache {
    double dot = 0.0, nu = 0.0, nv = 0.0, value = 0.0;
    bool degenerate = false;  // a side had norm < kCosineNormEps: value 0, zero gradient
};

double cosine_forward(const double* u, const double* v, int d, CosineCache& cache);
void cosine_backward(double dvalue, const double* u, const double* v, int d, const CosineCache& cache, double* du,
                     double* dv);
inline double cosine(const double* u, const double* v, int d) {
    CosineCache c;
    return cosine_forward(u, v, d, c);
}

// --- affine y = W x + b -------------------------------------------------------

void affine_forward(const Array2& w, const Vec& b, const double* x, double* y);
void affine_backward(const Array2& w, const double* x, const double* dy, Array2& dw, Vec& db, double* dx);

// --- softmax / sigmoid / binary cross entropy ----------------------------------

// shift-invariant, outputs sum to 1; in == out allowed
void softmax(const double* z, double* y, int n);
// dz_t += y_t * (dy_t - sum_u y_u dy_u)
void softmax_backward(const double* y, const double* dy, int n, double* dz);

double sigmoid(double z);

// -(1/N) sum_j [y_j log sigma(z_j) + (1-y_j) log(1-sigma(z_j))], stable log-sum form
double bce_mean(std::span<const double> logits, std::span<const uint8_t> targets);
void bce_backward(std::span<const double> logits, std::span<const uint8_t> targets, double dloss,
                  std::span<double> dlogits);

// --- label-wise attention readout ----------------------------------------------

// For each label j over valid positions t < c_valid:
//   s_t = H.row(j) . T.row(t);  alpha = softmax(s);  ctx_j = sum_t alpha_t T.row(t)
//   logits[j] = w_out.row(j) . ctx_j + b_out[j]
struct AttentionCache {
    Array2 alpha;  // N x c_valid
    Array2 ctx;    // N x d
    int c_valid = 0;
    Array2 ds;     // backward scratch, N x c_valid
    Array2 dctx;   // backward scratch, N x d
};

void attention_forward(const Array2& t_final, int c_valid, const Array2& h_labels, const Array2& w_out,
                       const Vec& b_out, AttentionCache& cache, Vec& logits);
void attention_backward(const Array2& t_final, const Array2& h_labels, const Array2& w_out, const Vec& dlogits,
                        AttentionCache& cache, Array2& dt_final, Array2& dh_labels, Array2& dw_out, Vec& db_out);

namespace serial {
void attention_forward(const Array2& t_final, int c_valid, const Array2& h_labels, const Array2& w_out,
                       const Vec& b_out, AttentionCache& cache, Vec& logits);
void attention_backward(const Array2& t_final, const Array2& h_labels, const Array2& w_out, const Vec& dlogits,
                        AttentionCache& cache, Array2& dt_final, Array2& dh_labels, Array2& dw_out, Vec& db_out);
}  // namespace serial

}  // namespace avex::kernels
