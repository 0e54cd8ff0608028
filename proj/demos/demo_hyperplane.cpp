// Minimal library walkthrough: estimate a failure probability from one Monte
// Carlo design, then reuse the same design to trace how the probability reacts
// to mean shifts of a single input.

#include <cstdio>

#include "relsa/relsa.hpp"

int main() {
    using namespace relsa;

    FailureModel model = make_hyperplane();
    const MonteCarloDesign design = run_design(model, 100000, /*seed=*/42);
    const ProbabilityEstimate p = estimate_failure_probability(design);
    std::printf("p_hat = %.5g  [%.5g, %.5g]\n", p.p_hat, p.ci_lo, p.ci_hi);

    PerturbationGrid grid{PerturbationGrid::Kind::MeanShift,
                          {-1.0, -0.5, -0.25, 0.25, 0.5, 1.0}};
    const SensitivityCurve curve = compute_sensitivity_curve(design, model, 2, grid);
    std::printf("mean-shift indices for input 2 (no extra model calls):\n");
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
        const IndexEstimate& e = curve.points[i];
        std::printf("  delta = %+5.2f  s = %+8.4f  [%+8.4f, %+8.4f]\n", curve.grid[i],
                    e.s_hat, e.ci_lo, e.ci_hi);
    }
    std::printf("model calls in total: %lld (design only)\n", model.call_count());
    return 0;
}
