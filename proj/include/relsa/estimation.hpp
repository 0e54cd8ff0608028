#ifndef RELSA_ESTIMATION_HPP
#define RELSA_ESTIMATION_HPP

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "relsa/common.hpp"
#include "relsa/models.hpp"
#include "relsa/perturbation.hpp"
#include "relsa/rng.hpp"
#include "relsa/special_functions.hpp"

namespace relsa {

/// Run `fn(i)` for i in [0, count) on `threads` workers. Results must be
/// written to preallocated slots so the outcome is independent of scheduling.
template <class Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    const int workers = std::min<std::size_t>(threads, count);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::atomic<std::size_t> next{0};
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1))
                fn(i);
        });
    for (auto& t : pool) t.join();
}

/// A fixed Monte Carlo experiment: the N×d input sample, the model values and
/// the failure indicators. This is the single evaluation budget every
/// sensitivity estimate below reuses; nothing re-calls the model.
struct MonteCarloDesign {
    std::size_t n = 0;
    std::size_t d = 0;
    std::vector<double> inputs;     // row-major n×d
    std::vector<double> g_values;   // model output per row
    std::vector<std::uint8_t> indicators; // g < 0
    std::uint64_t seed = 0;
    std::uint64_t replication = 0;
    std::string model_id;

    double input(std::size_t row, std::size_t col) const {
        return inputs[row * d + col];
    }
};

/// Draw the design and evaluate the model once per row. Input j is sampled
/// from stream (seed, replication, j), so designs are reproducible and
/// independent across replications.
inline MonteCarloDesign run_design(const FailureModel& model, std::size_t n,
                                   std::uint64_t seed, std::uint64_t replication = 0) {
    if (n < 1) throw std::invalid_argument("run_design: n must be >= 1");
    MonteCarloDesign design;
    design.n = n;
    design.d = model.dim();
    design.seed = seed;
    design.replication = replication;
    design.model_id = model.name();
    design.inputs.resize(n * design.d);
    for (std::size_t j = 0; j < design.d; ++j) {
        const std::vector<double> col =
            model.marginals()[j].sample(Rng::stream(seed, replication, j), n);
        for (std::size_t i = 0; i < n; ++i) design.inputs[i * design.d + j] = col[i];
    }
    design.g_values.resize(n);
    design.indicators.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double g = model.evaluate(
            {design.inputs.data() + i * design.d, design.d});
        design.g_values[i] = g;
        design.indicators[i] = g < 0.0 ? 1 : 0;
    }
    return design;
}

/// Probability estimate with the asymptotic-normal confidence interval.
/// `variance_hat` is the variance of the *estimator* (already divided by n).
struct ProbabilityEstimate {
    double p_hat = 0.0;
    double variance_hat = 0.0;
    std::size_t n = 0;
    double level = 0.95;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    bool degenerate = false; // no failure mass: the CI is meaningless
};

inline ProbabilityEstimate estimate_failure_probability(const MonteCarloDesign& design,
                                                        double level = 0.95) {
    if (design.n == 0)
        throw std::invalid_argument("estimate_failure_probability: empty design");
    std::size_t failures = 0;
    for (auto v : design.indicators) failures += v;
    ProbabilityEstimate est;
    est.n = design.n;
    est.level = level;
    est.p_hat = static_cast<double>(failures) / static_cast<double>(design.n);
    est.variance_hat = est.p_hat * (1.0 - est.p_hat) / static_cast<double>(design.n);
    est.degenerate = failures == 0;
    const double z = std_normal_quantile(0.5 + 0.5 * level);
    const double half = z * std::sqrt(est.variance_hat);
    est.ci_lo = est.p_hat - half;
    est.ci_hi = est.p_hat + half;
    return est;
}

/// Re-weight the existing design to estimate the failure probability under a
/// perturbed marginal for input `input` (1-based): each failing row is scored
/// by the likelihood ratio of its i-th coordinate. No model calls are made.
inline ProbabilityEstimate reverse_is_estimate(const MonteCarloDesign& design,
                                               const PerturbedDensity& pd,
                                               std::size_t input, double level = 0.95) {
    if (input < 1 || input > design.d)
        throw std::invalid_argument("reverse_is_estimate: input index out of range");
    const std::size_t col = input - 1;
    double sum_w = 0.0, sum_w2 = 0.0;
    for (std::size_t i = 0; i < design.n; ++i) {
        if (!design.indicators[i]) continue;
        const double w = pd.likelihood_ratio(design.input(i, col));
        sum_w += w;
        sum_w2 += w * w;
    }
    const double n = static_cast<double>(design.n);
    ProbabilityEstimate est;
    est.n = design.n;
    est.level = level;
    est.p_hat = sum_w / n;
    const double sigma2 = sum_w2 / n - est.p_hat * est.p_hat; // per-sample variance
    est.variance_hat = std::max(sigma2, 0.0) / n;
    est.degenerate = est.p_hat == 0.0;
    const double z = std_normal_quantile(0.5 + 0.5 * level);
    const double half = z * std::sqrt(est.variance_hat);
    est.ci_lo = est.p_hat - half;
    est.ci_hi = est.p_hat + half;
    return est;
}

/// Per-sample asymptotic covariance of (plain estimator, re-weighted estimator):
///   [[ p(1−p),        p_delta(1−p) ],
///    [ p_delta(1−p),  sigma²_delta ]].
inline std::array<double, 4> estimate_joint_covariance(const MonteCarloDesign& design,
                                                       const PerturbedDensity& pd,
                                                       std::size_t input) {
    if (input < 1 || input > design.d)
        throw std::invalid_argument("estimate_joint_covariance: input index out of range");
    const std::size_t col = input - 1;
    double sum_w = 0.0, sum_w2 = 0.0;
    std::size_t failures = 0;
    for (std::size_t i = 0; i < design.n; ++i) {
        if (!design.indicators[i]) continue;
        ++failures;
        const double w = pd.likelihood_ratio(design.input(i, col));
        sum_w += w;
        sum_w2 += w * w;
    }
    const double n = static_cast<double>(design.n);
    const double p = static_cast<double>(failures) / n;
    const double p_delta = sum_w / n;
    const double sigma2 = std::max(sum_w2 / n - p_delta * p_delta, 0.0);
    const double cross = p_delta * (1.0 - p);
    return {p * (1.0 - p), cross, cross, sigma2};
}

/// The sensitivity index comparing a perturbed failure probability to the
/// reference one: s = p_delta/p − 1 when the perturbation raises the
/// probability, 1 − p/p_delta when it lowers it. Antisymmetric in its
/// arguments and zero iff they coincide.
inline double compute_index(double p, double p_delta) {
    if (!(p > 0.0) || !(p_delta > 0.0))
        throw DomainError("compute_index: probabilities must be strictly positive");
    if (p_delta >= p) return p_delta / p - 1.0;
    return 1.0 - p / p_delta;
}

/// Gradient of s(x, y) used by the delta method; at x == y both one-sided
/// limits agree and equal (−1/x, 1/x).
inline std::pair<double, double> index_gradient(double x, double y) {
    if (!(x > 0.0) || !(y > 0.0))
        throw DomainError("index_gradient: probabilities must be strictly positive");
    if (y >= x) return {-y / (x * x), 1.0 / x};
    return {-1.0 / y, x / (y * y)};
}

/// Index estimate for one input and one constraint, with the delta-method CI.
struct IndexEstimate {
    std::size_t input = 0; // 1-based
    MomentConstraint constraint{MomentConstraint::Kind::MeanShift, 0.0};
    double s_hat = 0.0;
    double variance_hat = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double p_hat = 0.0;
    double p_delta_hat = 0.0;
    std::size_t n = 0;
    bool degenerate = false;
};

/// Delta-method variance and CI for the plug-in index:
/// var = dᵀ Σ d / n with Σ the per-sample joint covariance.
inline IndexEstimate index_confidence_interval(double p_hat, double p_delta_hat,
                                               const std::array<double, 4>& sigma,
                                               std::size_t n, double level = 0.95) {
    IndexEstimate est;
    est.p_hat = p_hat;
    est.p_delta_hat = p_delta_hat;
    est.n = n;
    est.s_hat = compute_index(p_hat, p_delta_hat);
    const auto [dx, dy] = index_gradient(p_hat, p_delta_hat);
    const double quad = dx * dx * sigma[0] + 2.0 * dx * dy * sigma[1] +
                        dy * dy * sigma[3];
    est.variance_hat = std::max(quad, 0.0) / static_cast<double>(n);
    const double z = std_normal_quantile(0.5 + 0.5 * level);
    const double half = z * std::sqrt(est.variance_hat);
    est.ci_lo = est.s_hat - half;
    est.ci_hi = est.s_hat + half;
    return est;
}

/// One curve: the index as a function of the perturbation magnitude for a
/// single input. Grid points whose tilt solve failed are recorded and skipped.
struct SensitivityCurve {
    std::size_t input = 0; // 1-based
    MomentConstraint::Kind kind = MomentConstraint::Kind::MeanShift;
    int grid_kind = 0;                 // PerturbationGrid::Kind, for labeling
    std::vector<double> grid;          // as configured (delta, v_per, or sigma units)
    std::vector<IndexEstimate> points; // aligned with grid
    std::vector<std::uint8_t> valid;   // aligned with grid
    std::vector<std::string> failure_reasons; // empty string when valid
};

/// Grid of perturbation targets for one input. MeanShiftSigma expresses mean
/// targets in standard-deviation units: delta = mean + t * stddev.
struct PerturbationGrid {
    enum class Kind { MeanShift, MeanShiftSigma, VarianceShift };
    Kind kind = Kind::MeanShift;
    std::vector<double> values;

    MomentConstraint resolve(double value, const DistributionSpec& dist) const {
        switch (kind) {
        case Kind::MeanShift: return MomentConstraint::mean_shift(value);
        case Kind::MeanShiftSigma:
            return MomentConstraint::mean_shift(dist.mean() + value * dist.stddev());
        case Kind::VarianceShift: return MomentConstraint::variance_shift(value);
        }
        throw std::invalid_argument("unreachable");
    }

    MomentConstraint::Kind constraint_kind() const {
        return kind == Kind::VarianceShift ? MomentConstraint::Kind::VarianceShift
                                           : MomentConstraint::Kind::MeanShift;
    }
};

inline const char* grid_kind_name(PerturbationGrid::Kind k) {
    switch (k) {
    case PerturbationGrid::Kind::MeanShift: return "mean_shift";
    case PerturbationGrid::Kind::MeanShiftSigma: return "mean_shift_sigma";
    case PerturbationGrid::Kind::VarianceShift: return "variance_shift";
    }
    return "?";
}

namespace detail {

inline void validate_grid(const PerturbationGrid& grid, const DistributionSpec& dist) {
    if (grid.values.size() < 1)
        throw std::invalid_argument("perturbation grid is empty");
    for (std::size_t i = 1; i < grid.values.size(); ++i)
        if (!(grid.values[i] > grid.values[i - 1]))
            throw std::invalid_argument("perturbation grid must be strictly increasing");
    const double m = dist.mean();
    const double sd = dist.stddev();
    const double var = dist.variance();
    for (double v : grid.values) {
        bool null_point = false;
        switch (grid.kind) {
        case PerturbationGrid::Kind::MeanShift:
            null_point = std::abs(v - m) <= 1e-9 * std::max(sd, 1e-300);
            break;
        case PerturbationGrid::Kind::MeanShiftSigma:
            null_point = std::abs(v) <= 1e-9;
            break;
        case PerturbationGrid::Kind::VarianceShift:
            null_point = std::abs(v - var) <= 1e-9 * var;
            break;
        }
        if (null_point)
            throw std::invalid_argument(
                "perturbation grid contains the null perturbation (original moments); "
                "it carries no information and must be excluded");
    }
}

} // namespace detail

/// Evaluate the full index curve for one input from the existing design.
/// A pure parallel map over grid points: zero model calls, order-independent
/// results. Per-point solver failures are recorded, not fatal.
inline SensitivityCurve compute_sensitivity_curve(const MonteCarloDesign& design,
                                                  const FailureModel& model,
                                                  std::size_t input,
                                                  const PerturbationGrid& grid,
                                                  double level = 0.95, int threads = 1) {
    if (input < 1 || input > design.d)
        throw std::invalid_argument("compute_sensitivity_curve: input index out of range");
    const DistributionSpec& dist = model.marginal(input);
    detail::validate_grid(grid, dist);

    SensitivityCurve curve;
    curve.input = input;
    curve.kind = grid.constraint_kind();
    curve.grid_kind = static_cast<int>(grid.kind);
    curve.grid = grid.values;
    curve.points.assign(grid.values.size(), {});
    curve.valid.assign(grid.values.size(), 0);
    curve.failure_reasons.assign(grid.values.size(), {});

    const ProbabilityEstimate base = estimate_failure_probability(design, level);

    parallel_for(grid.values.size(), threads, [&](std::size_t idx) {
        try {
            const MomentConstraint constraint = grid.resolve(grid.values[idx], dist);
            const PerturbedDensity pd = build_perturbed_density(dist, constraint);
            const ProbabilityEstimate shifted = reverse_is_estimate(design, pd, input, level);

            IndexEstimate est;
            if (base.degenerate || shifted.degenerate) {
                // Distant shifts can empty the failure region entirely; report a
                // sentinel instead of failing the whole curve.
                est.input = input;
                est.constraint = constraint;
                est.n = design.n;
                est.p_hat = base.p_hat;
                est.p_delta_hat = shifted.p_hat;
                est.s_hat = -kInf;
                est.variance_hat = kNaN;
                est.ci_lo = -kInf;
                est.ci_hi = -kInf;
                est.degenerate = true;
            } else {
                const auto sigma = estimate_joint_covariance(design, pd, input);
                est = index_confidence_interval(base.p_hat, shifted.p_hat, sigma,
                                                design.n, level);
                est.input = input;
                est.constraint = constraint;
            }
            curve.points[idx] = est;
            curve.valid[idx] = 1;
        } catch (const Error& e) {
            curve.failure_reasons[idx] = e.what();
        } catch (const std::invalid_argument& e) {
            curve.failure_reasons[idx] = e.what();
        }
    });
    return curve;
}

} // namespace relsa

#endif
