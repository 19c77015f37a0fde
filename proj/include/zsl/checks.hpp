#pragma once

#include <string>
#include <vector>

namespace zsl {

struct GradCheckEntry {
    std::string name;
    double max_rel_err = 0.0;
    bool pass = false;
};

/// Finite-difference verification of every analytic gradient: each layer
/// type, each loss term, and the composed objective on a tiny model
/// (12-dim features, 4-dim attributes). corrupt_one deliberately breaks one
/// analytic gradient so harness sensitivity is itself testable.
std::vector<GradCheckEntry> run_gradcheck_suite(double eps = 1e-5, double tol = 1e-4,
                                                bool corrupt_one = false);

}  // namespace zsl
