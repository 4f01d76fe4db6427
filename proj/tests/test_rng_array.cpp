#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "avex/array.hpp"
#include "avex/params.hpp"
#include "avex/rng.hpp"

using namespace avex;

TEST_CASE("rng determinism: same seed, same stream") {
    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("rng streams differ across seeds and after mix") {
    Rng a(1), b(2);
    int diff = 0;
    for (int i = 0; i < 16; ++i) diff += a.next_u64() != b.next_u64();
    CHECK(diff == 16);

    CHECK(mix(1, 2) != mix(2, 1));
    CHECK(mix(0, 0) != mix(0, 1));
    CHECK(mix(1, 2, 3) != mix(1, 2, 4));
}

TEST_CASE("uniform01 stays in [0,1)") {
    Rng rng(7);
    for (int i = 0; i < 10000; ++i) {
        double u = rng.uniform01();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("uniform_int covers [0,n) and nothing else") {
    Rng rng(42);
    const int n = 7;
    std::vector<int> counts(n, 0);
    for (int i = 0; i < 70000; ++i) {
        int x = rng.uniform_int(n);
        REQUIRE(x >= 0);
        REQUIRE(x < n);
        ++counts[static_cast<size_t>(x)];
    }
    // each bucket within 5 sigma of 10000 (sigma ~ 92.6)
    for (int c : counts) CHECK(std::abs(c - 10000) < 5 * 93);
}

TEST_CASE("normal moments are roughly standard") {
    Rng rng(9);
    double s = 0, s2 = 0;
    const int n = 50000;
    for (int i = 0; i < n; ++i) {
        double x = rng.normal();
        s += x;
        s2 += x * x;
    }
    double mean = s / n, var = s2 / n - mean * mean;
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("shuffle produces a permutation, deterministically") {
    std::vector<int> v(20);
    for (int i = 0; i < 20; ++i) v[static_cast<size_t>(i)] = i;
    auto w = v;
    Rng r1(5), r2(5);
    r1.shuffle(v);
    r2.shuffle(w);
    CHECK(v == w);
    std::sort(v.begin(), v.end());
    for (int i = 0; i < 20; ++i) CHECK(v[static_cast<size_t>(i)] == i);
}

TEST_CASE("partial_shuffle prefix is drawn without replacement") {
    std::vector<int> v(10);
    for (int i = 0; i < 10; ++i) v[static_cast<size_t>(i)] = i;
    Rng rng(3);
    rng.partial_shuffle(v, 4);
    std::set<int> prefix(v.begin(), v.begin() + 4);
    CHECK(prefix.size() == 4);
    std::sort(v.begin(), v.end());
    for (int i = 0; i < 10; ++i) CHECK(v[static_cast<size_t>(i)] == i);
}

TEST_CASE("Array2 basics: zero init, resize zero-fills, indexing") {
    Array2 a(2, 3);
    for (double x : a.v) CHECK(x == 0.0);
    a.at(1, 2) = 5.0;
    CHECK(a.row(1)[2] == 5.0);
    CHECK(a.size() == 6);

    a.resize(3, 2);
    CHECK(a.rows == 3);
    CHECK(a.cols == 2);
    for (double x : a.v) CHECK(x == 0.0);

    Array2 b(3, 2);
    CHECK(a == b);
    b.at(0, 0) = 1.0;
    CHECK(!(a == b));
    CHECK(a.same_shape(b));
}

TEST_CASE("all_finite flags NaN and Inf") {
    Array2 a(1, 2);
    CHECK(all_finite(a));
    a.at(0, 1) = std::nan("");
    CHECK(!all_finite(a));
    a.at(0, 1) = 1.0 / 0.0;
    CHECK(!all_finite(a));
    CHECK_THROWS(require_finite(a, "a"));
}

TEST_CASE("fill_identity and fill_normal") {
    Array2 a(3, 3);
    a.fill(7.0);
    fill_identity(a);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) CHECK(a.at(r, c) == (r == c ? 1.0 : 0.0));

    Array2 g(50, 50);
    Rng rng(11);
    fill_normal(g, rng, 0.02);
    CHECK(all_finite(g));
    double s2 = 0;
    for (double x : g.v) s2 += x * x;
    double sd = std::sqrt(s2 / static_cast<double>(g.size()));
    CHECK(sd > 0.015);
    CHECK(sd < 0.025);
}

TEST_CASE("ParamStore: add/find, duplicate rejection, zero_grads") {
    ParamStore s;
    int a = s.add("emb", 4, 3);
    int b = s.add("bias", 1, 3);
    CHECK(s.find("emb") == a);
    CHECK(s.find("missing") == -1);
    CHECK_THROWS(s.add("emb", 2, 2));

    s.grad(a).fill(2.0);
    s.grad(b).fill(-1.0);
    s.zero_grads();
    for (double x : s.grad(a).v) CHECK(x == 0.0);
    for (double x : s.grad(b).v) CHECK(x == 0.0);

    CHECK(s.num_scalars() == 4 * 3 + 3);
    CHECK(s[a].value.same_shape(s[a].grad));
}
