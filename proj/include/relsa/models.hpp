#ifndef RELSA_MODELS_HPP
#define RELSA_MODELS_HPP

#include <atomic>
#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "relsa/common.hpp"
#include "relsa/distributions.hpp"
#include "relsa/perturbation.hpp"
#include "relsa/special_functions.hpp"

namespace relsa {

/// A black-box limit state with independent marginal input laws.
/// Failure is the event G(x) < 0. Every evaluation bumps an atomic call
/// counter, so tests can assert how many model runs an analysis consumed.
class FailureModel {
public:
    FailureModel(std::string name, std::vector<DistributionSpec> marginals,
                 std::function<double(std::span<const double>)> g)
        : name_(std::move(name)), marginals_(std::move(marginals)), g_(std::move(g)),
          calls_(std::make_unique<std::atomic<long long>>(0)) {}

    const std::string& name() const { return name_; }
    std::size_t dim() const { return marginals_.size(); }
    const std::vector<DistributionSpec>& marginals() const { return marginals_; }
    const DistributionSpec& marginal(std::size_t input) const {
        if (input < 1 || input > marginals_.size())
            throw std::invalid_argument("marginal: input index out of range (1-based)");
        return marginals_[input - 1];
    }

    double evaluate(std::span<const double> x) const {
        if (x.size() != marginals_.size())
            throw std::invalid_argument("evaluate: dimension mismatch");
        calls_->fetch_add(1, std::memory_order_relaxed);
        return g_(x);
    }

    long long call_count() const { return calls_->load(std::memory_order_relaxed); }

    /// A fresh model (zeroed counter) with one marginal replaced; `input` is 1-based.
    FailureModel with_marginal(std::size_t input, DistributionSpec dist) const {
        if (input < 1 || input > marginals_.size())
            throw std::invalid_argument("with_marginal: input index out of range");
        std::vector<DistributionSpec> m = marginals_;
        m[input - 1] = std::move(dist);
        return FailureModel(name_, std::move(m), g_);
    }

private:
    std::string name_;
    std::vector<DistributionSpec> marginals_;
    std::function<double(std::span<const double>)> g_;
    std::unique_ptr<std::atomic<long long>> calls_;
};

/// Linear limit state G(x) = k − a·x.
inline double hyperplane_g(std::span<const double> x, double k = 16.0,
                           std::span<const double> a = {}) {
    static constexpr double default_a[4] = {1.0, -6.0, 4.0, 0.0};
    std::span<const double> coef = a.empty() ? std::span<const double>(default_a) : a;
    if (x.size() != coef.size())
        throw std::invalid_argument("hyperplane_g: dimension mismatch");
    double dot = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) dot += coef[i] * x[i];
    return k - dot;
}

/// Closed-form perturbed failure probability for the standard-normal
/// hyperplane case; the analytic reference the estimators are checked against.
/// Mean shift on input i: Phi((a_i δ − k)/‖a‖);
/// variance shift: Phi(−k / sqrt(Σ_{j≠i} a_j² + a_i² V)).
inline double hyperplane_oracle_p_delta(std::size_t input, const MomentConstraint& c,
                                        double k = 16.0, std::span<const double> a = {}) {
    static constexpr double default_a[4] = {1.0, -6.0, 4.0, 0.0};
    std::span<const double> coef = a.empty() ? std::span<const double>(default_a) : a;
    if (input < 1 || input > coef.size())
        throw std::invalid_argument("hyperplane_oracle_p_delta: bad input index");
    const double ai = coef[input - 1];
    double norm2 = 0.0;
    for (double v : coef) norm2 += v * v;
    if (c.kind == MomentConstraint::Kind::MeanShift)
        return std_normal_cdf((ai * c.target - k) / std::sqrt(norm2));
    const double adj = norm2 - ai * ai + ai * ai * c.target;
    return std_normal_cdf(-k / std::sqrt(adj));
}

/// Smooth oscillatory limit state, thresholded so failure is rare:
/// G = sin(x1) + 7 sin²(x2) + 0.1 x3⁴ sin(x1) + 7.
inline double ishigami_threshold_g(std::span<const double> x) {
    if (x.size() != 3)
        throw std::invalid_argument("ishigami_threshold_g: expects 3 inputs");
    const double s1 = std::sin(x[0]);
    const double s2 = std::sin(x[1]);
    return s1 + 7.0 * s2 * s2 + 0.1 * x[2] * x[2] * x[2] * x[2] * s1 + 7.0;
}

/// River flood margin: dyke height minus downstream level plus water depth,
/// with the depth from a Manning-Strickler type relation.
/// q: flow rate, ks: bed friction coefficient, zv/zm: downstream/upstream bed
/// levels, fixed section length L, width B, dyke height Hd.
inline double flood_g(double q, double ks, double zv, double zm, double length = 5000.0,
                      double width = 300.0, double dyke_height = 58.0) {
    if (!(ks > 0.0))
        throw DomainError("flood_g: friction coefficient must be > 0");
    if (!(zm > zv))
        throw DomainError("flood_g: upstream level must exceed downstream level");
    if (!(q >= 0.0))
        throw DomainError("flood_g: flow rate must be nonnegative");
    const double slope = std::sqrt((zm - zv) / length);
    const double depth = std::pow(q / (ks * width * slope), 0.6);
    return dyke_height - (zv + depth);
}

inline FailureModel make_hyperplane() {
    std::vector<DistributionSpec> marg(4, DistributionSpec::normal(0.0, 1.0));
    return FailureModel("hyperplane", std::move(marg),
                        [](std::span<const double> x) { return hyperplane_g(x); });
}

inline FailureModel make_ishigami_threshold() {
    const double pi = std::numbers::pi;
    std::vector<DistributionSpec> marg(3, DistributionSpec::uniform(-pi, pi));
    return FailureModel("ishigami_threshold", std::move(marg),
                        [](std::span<const double> x) { return ishigami_threshold_g(x); });
}

inline FailureModel make_flood() {
    std::vector<DistributionSpec> marg{
        DistributionSpec::truncated_gumbel(1013.0, 558.0, 0.0),
        DistributionSpec::truncated_normal(30.0, 7.5, 1.0),
        DistributionSpec::triangular(49.0, 50.0, 51.0),
        DistributionSpec::triangular(54.0, 55.0, 56.0),
    };
    return FailureModel("flood", std::move(marg), [](std::span<const double> x) {
        return flood_g(x[0], x[1], x[2], x[3]);
    });
}

inline std::vector<std::string> model_names() {
    return {"hyperplane", "ishigami_threshold", "flood"};
}

inline FailureModel make_model(std::string_view name) {
    if (name == "hyperplane") return make_hyperplane();
    if (name == "ishigami_threshold") return make_ishigami_threshold();
    if (name == "flood") return make_flood();
    throw ConfigError("unknown model '" + std::string(name) +
                      "' (known: hyperplane, ishigami_threshold, flood)");
}

} // namespace relsa

#endif
