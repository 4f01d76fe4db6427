// Dense row-major double matrix plus the handful of helpers the kernels need.
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "avex/rng.hpp"

namespace avex {

using Vec = std::vector<double>;

struct Array2 {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Array2() = default;
    Array2(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * static_cast<size_t>(c), 0.0) {}

    static Array2 zeros(int r, int c) { return Array2(r, c); }

    double& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }

    double* row(int r) { return v.data() + static_cast<size_t>(r) * cols; }
    const double* row(int r) const { return v.data() + static_cast<size_t>(r) * cols; }

    size_t size() const { return v.size(); }

    void resize(int r, int c) {
        rows = r;
        cols = c;
        v.assign(static_cast<size_t>(r) * static_cast<size_t>(c), 0.0);
    }

    void fill(double x) { std::fill(v.begin(), v.end(), x); }

    bool same_shape(const Array2& o) const { return rows == o.rows && cols == o.cols; }

    bool operator==(const Array2& o) const { return rows == o.rows && cols == o.cols && v == o.v; }
};

inline bool all_finite(const Array2& a) {
    for (double x : a.v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

inline bool all_finite(const Vec& a) {
    for (double x : a) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

inline void require_finite(const Array2& a, const std::string& what) {
    if (!all_finite(a)) throw std::runtime_error("non-finite values in " + what);
}

inline void fill_normal(Array2& a, Rng& rng, double stddev) {
    for (double& x : a.v) x = rng.normal(0.0, stddev);
}

inline void fill_identity(Array2& a) {
    a.fill(0.0);
    int n = a.rows < a.cols ? a.rows : a.cols;
    for (int i = 0; i < n; ++i) a.at(i, i) = 1.0;
}

}  // namespace avex
