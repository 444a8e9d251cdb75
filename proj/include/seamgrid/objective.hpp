#pragma once

#include <vector>

#include "seamgrid/sampling.hpp"
#include "seamgrid/transform.hpp"

namespace seamgrid {

struct LossReport {
    double color_loss = 0.0;
    double grad_loss = 0.0;
    double lambda = 0.0;
    double color_weight = 1.0;  // 1 except in ablation runs
    double total = 0.0;
    std::size_t boundary_count = 0;
    std::size_t interior_count = 0;
};

// total = color_weight * color + lambda * grad; rejects negative lambda
LossReport total_loss(double color, double grad, double lambda, double color_weight = 1.0);

// Everything the losses need for one jointly-optimized blend: the merged
// field plus per-target frozen sample sets. Gradients and deltas are
// indexed by position in `targets`.
struct TargetSamples {
    std::size_t entry = 0;
    SampleSet boundary;
    SampleSet interior;
};

struct BlendProblem {
    const MergedField* merged = nullptr;
    std::vector<TargetSamples> targets;
    double lambda = 0.1;
    double color_weight = 1.0;
    int threads = 0;
};

// mean squared boundary pinning error of the target's color (frozen +
// delta) against the frozen source color
double color_loss(const MergedField& m, const SampleSet& boundary, const DeltaOverrides& deltas,
                  int threads = 0);

// mean squared deviation of merged-field forward differences from the
// frozen original target differences; neighbors are evaluated through
// the full merged field so they may land in other fields
double grad_loss(const MergedField& m, const SampleSet& interior, const DeltaOverrides& deltas,
                 int threads = 0);

LossReport eval_loss(const BlendProblem& p, const DeltaOverrides& deltas);

// analytic derivative of the total loss w.r.t. every delta coefficient,
// accumulated through the interpolation weights and SH basis values;
// grads[t] is resized to match target t's coefficient array. Bit-stable
// for a fixed thread count.
LossReport eval_loss_and_gradients(const BlendProblem& p, const DeltaOverrides& deltas,
                                   std::vector<std::vector<double>>& grads);

// single-target convenience form
std::vector<double> loss_gradients(const MergedField& m, const SampleSet& boundary,
                                   const SampleSet& interior, std::span<const double> delta,
                                   double lambda, int threads = 0);

// diagnostics used by the ablation checks: mean Euclidean boundary error
// and RMS of the interior gradient deviation
double boundary_color_error(const MergedField& m, const SampleSet& boundary,
                            const DeltaOverrides& deltas, int threads = 0);
double interior_gradient_rms(const MergedField& m, const SampleSet& interior,
                             const DeltaOverrides& deltas, int threads = 0);

// Iteration engine for the optimizer: field selection, interpolation
// stencils, basis values, and frozen colors are independent of the
// deltas, so they are resolved once up front and every evaluation only
// recomputes the delta contributions. Semantics match eval_loss /
// eval_loss_and_gradients up to summation order.
class CompiledObjective {
  public:
    explicit CompiledObjective(const BlendProblem& problem);

    LossReport evaluate(const DeltaOverrides& deltas,
                        std::vector<std::vector<double>>* grads = nullptr) const;
    const BlendProblem& problem() const { return *problem_; }

  private:
    // one frozen color evaluation site; only the delta term varies
    struct Site {
        Rgb frozen;
        TrilinearStencil stencil{};
        std::array<double, kMaxShBasis> basis{};
        int nb = 1;
        int slot = -1;  // trainable target slot, -1 when none applies
    };
    // per target: boundary sites, interior sites (point + 3 neighbors)
    struct TargetTerms {
        std::vector<Site> boundary;
        std::vector<Site> interior;  // 4 per point: at, ahead x/y/z
    };

    const BlendProblem* problem_;
    std::vector<TargetTerms> terms_;
    int threads_ = 1;
};

}  // namespace seamgrid
