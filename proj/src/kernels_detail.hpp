// Shared helpers for the serial and OpenMP conv/attention implementations.
#pragma once

#include <stdexcept>
#include <string>

#include "avex/kernels.hpp"

namespace avex::kernels::detail {

inline void check_conv_shapes(const Array2& x, const Array2& w, const Vec& bias, int k) {
    if (k < 1) throw std::invalid_argument("conv1d: kernel size must be >= 1");
    if (x.rows < k) {
        throw std::invalid_argument("conv1d: sequence length " + std::to_string(x.rows) +
                                    " shorter than kernel " + std::to_string(k));
    }
    if (w.rows != x.cols || w.cols != k * x.cols || static_cast<int>(bias.size()) != x.cols) {
        throw std::invalid_argument("conv1d: filter/bias shapes do not match input width");
    }
}

inline void im2row(const Array2& x, int k, Array2& xw) {
    const int c = x.rows - k + 1;
    const int d = x.cols;
    xw.resize(c, k * d);
    for (int t = 0; t < c; ++t) {
        double* dst = xw.row(t);
        for (int u = 0; u < k; ++u) {
            const double* src = x.row(t + u);
            for (int i = 0; i < d; ++i) dst[u * d + i] = src[i];
        }
    }
}

// conv output rows and ReLU mask; shared by serial and omp forward
inline void conv_row(const Array2& xw, const Array2& w, const Vec& bias, bool relu, int t, Array2& out,
                     std::vector<uint8_t>& on) {
    const int d = w.rows;
    const int kd = w.cols;
    double* o = out.row(t);
    uint8_t* m = on.data() + static_cast<size_t>(t) * d;
    const double* patch = xw.row(t);
    for (int j = 0; j < d; ++j) {
        double v = bias[static_cast<size_t>(j)] + dot(w.row(j), patch, kd);
        if (relu && v <= 0.0) {
            o[j] = 0.0;
            m[j] = 0;
        } else {
            o[j] = v;
            m[j] = 1;
        }
    }
}

// one output column's combined attention contribution to dT(t, i); keeping the
// expression in one place keeps serial and omp bitwise identical
inline double attn_dt_term(double alpha, double dctx_i, double ds, double h_i) {
    return alpha * dctx_i + ds * h_i;
}

}  // namespace avex::kernels::detail
