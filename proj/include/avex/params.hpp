// Named parameter arrays with same-shaped gradient accumulators.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "avex/array.hpp"

namespace avex {

class ParamStore {
  public:
    struct Entry {
        std::string name;
        Array2 value;
        Array2 grad;
    };

    int add(const std::string& name, int rows, int cols) {
        if (find(name) >= 0) throw std::runtime_error("ParamStore: duplicate name " + name);
        entries_.push_back({name, Array2(rows, cols), Array2(rows, cols)});
        return static_cast<int>(entries_.size()) - 1;
    }

    int find(const std::string& name) const {
        for (size_t i = 0; i < entries_.size(); ++i) {
            if (entries_[i].name == name) return static_cast<int>(i);
        }
        return -1;
    }

    Entry& operator[](int idx) { return entries_[static_cast<size_t>(idx)]; }
    const Entry& operator[](int idx) const { return entries_[static_cast<size_t>(idx)]; }

    Array2& value(int idx) { return entries_[static_cast<size_t>(idx)].value; }
    const Array2& value(int idx) const { return entries_[static_cast<size_t>(idx)].value; }
    Array2& grad(int idx) { return entries_[static_cast<size_t>(idx)].grad; }

    int size() const { return static_cast<int>(entries_.size()); }

    void zero_grads() {
        for (auto& e : entries_) e.grad.fill(0.0);
    }

    size_t num_scalars() const {
        size_t n = 0;
        for (const auto& e : entries_) n += e.value.size();
        return n;
    }

    int64_t step = 0;

  private:
    std::vector<Entry> entries_;
};

}  // namespace avex
