// Central finite-difference verification of every kernel backward and of the
// end-to-end composite loss gradient. Used by both the test suite and the
// `gradcheck` CLI subcommand.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace avex {

struct GradCheckResult {
    std::string op;
    int cases = 0;
    double max_rel_err = 0.0;
    double tolerance = 1e-4;
    bool pass = false;
};

// Runs the whole seeded suite (>= 100 randomized cases across all ops).
std::vector<GradCheckResult> run_gradcheck(uint64_t seed);

}  // namespace avex
