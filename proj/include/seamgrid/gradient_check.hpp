#pragma once

#include <cstdint>

#include "seamgrid/objective.hpp"

namespace seamgrid {

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t coefficients_checked = 0;
    std::size_t nonzero_gradients = 0;
};

// Verifies the analytic loss gradient against central finite differences
// (step 1e-3) on a randomized two-box scene with res^3 grids, evaluated
// at a random nonzero delta. The seed picks colors, box placement, the
// sampled coefficients, and the SH degree.
GradCheckResult gradient_check(uint64_t seed, int res, int n_coefficients, double lambda = 0.1,
                               int threads = 0);

}  // namespace seamgrid
