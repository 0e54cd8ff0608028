#ifndef RELSA_BASELINES_HPP
#define RELSA_BASELINES_HPP

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "relsa/common.hpp"
#include "relsa/estimation.hpp"
#include "relsa/models.hpp"
#include "relsa/rng.hpp"
#include "relsa/special_functions.hpp"

namespace relsa {

/// The model seen through the iso-probabilistic map to standard Gaussian
/// space: u -> x with x_j = F_j^{-1}(Phi(u_j)). Evaluations pass through the
/// underlying model and therefore count against its call counter.
class StandardSpaceModel {
public:
    explicit StandardSpaceModel(const FailureModel& model) : model_(&model) {}

    std::size_t dim() const { return model_->dim(); }

    std::vector<double> to_physical(std::span<const double> u) const {
        std::vector<double> x(u.size());
        for (std::size_t j = 0; j < u.size(); ++j)
            x[j] = model_->marginals()[j].quantile(clamp_prob(std_normal_cdf(u[j])));
        return x;
    }

    std::vector<double> to_standard(std::span<const double> x) const {
        std::vector<double> u(x.size());
        for (std::size_t j = 0; j < x.size(); ++j)
            u[j] = std_normal_quantile(clamp_prob(model_->marginals()[j].cdf(x[j])));
        return u;
    }

    double evaluate(std::span<const double> u) const {
        const std::vector<double> x = to_physical(u);
        return model_->evaluate(x);
    }

private:
    // An optimizer may probe arbitrarily deep tails where Phi(u) rounds to 0
    // or 1; the transform saturates there instead of leaving (0,1).
    static double clamp_prob(double p) {
        return std::clamp(p, 1e-16, 1.0 - 1e-16);
    }

    const FailureModel* model_;
};

inline StandardSpaceModel iso_transform(const FailureModel& model) {
    return StandardSpaceModel(model);
}

/// Most probable failure point in standard space with its reliability
/// geometry: u* = beta * alpha, ‖alpha‖ = 1.
struct DesignPoint {
    std::vector<double> u_star;
    double beta_hl = 0.0;
    std::vector<double> alpha;
    int iterations = 0;
    long long model_calls = 0;
    bool converged = false;
};

/// Locate the design point with the classic HL-RF fixed-point iteration,
/// gradients by central differences (the model is a black box).
inline DesignPoint hlrf_design_point(const FailureModel& model,
                                     std::span<const double> start, double tol = 1e-6,
                                     int max_iter = 100, double fd_step = 1e-6) {
    const StandardSpaceModel std_model = iso_transform(model);
    const std::size_t d = model.dim();
    if (start.size() != d)
        throw std::invalid_argument("hlrf_design_point: start dimension mismatch");

    const long long calls_before = model.call_count();
    std::vector<double> u(start.begin(), start.end());
    std::vector<double> grad(d);
    DesignPoint dp;

    for (int it = 0; it < max_iter; ++it) {
        const double g = std_model.evaluate(u);
        double grad_norm2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            std::vector<double> up(u), um(u);
            up[j] += fd_step;
            um[j] -= fd_step;
            grad[j] = (std_model.evaluate(up) - std_model.evaluate(um)) / (2.0 * fd_step);
            grad_norm2 += grad[j] * grad[j];
        }
        if (!(grad_norm2 > 0.0)) break; // flat spot: cannot make progress

        double dot = 0.0;
        for (std::size_t j = 0; j < d; ++j) dot += grad[j] * u[j];
        const double factor = (dot - g) / grad_norm2;

        std::vector<double> u_next(d);
        double step2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            u_next[j] = factor * grad[j];
            const double diff = u_next[j] - u[j];
            step2 += diff * diff;
        }
        u = std::move(u_next);
        dp.iterations = it + 1;
        if (std::sqrt(step2) <= tol) {
            dp.converged = true;
            break;
        }
    }

    dp.u_star = u;
    double beta2 = 0.0;
    for (double v : u) beta2 += v * v;
    dp.beta_hl = std::sqrt(beta2);
    dp.alpha.assign(d, 0.0);
    if (dp.beta_hl > 0.0)
        for (std::size_t j = 0; j < d; ++j) dp.alpha[j] = u[j] / dp.beta_hl;
    dp.model_calls = model.call_count() - calls_before;
    return dp;
}

/// Convenience overload starting from the standard-space origin.
inline DesignPoint hlrf_design_point(const FailureModel& model, double tol = 1e-6,
                                     int max_iter = 100) {
    std::vector<double> origin(model.dim(), 0.0);
    return hlrf_design_point(model, origin, tol, max_iter);
}

/// Squared components of the design-point direction; they sum to one and rank
/// the inputs. Requires a converged design point.
inline std::vector<double> importance_factors(const DesignPoint& dp) {
    if (!dp.converged)
        throw SolverError("importance_factors: design point search did not converge");
    std::vector<double> out(dp.alpha.size());
    for (std::size_t j = 0; j < dp.alpha.size(); ++j) out[j] = dp.alpha[j] * dp.alpha[j];
    return out;
}

/// First-order and total variance shares of the failure indicator.
struct SobolEstimate {
    std::vector<double> first_order;
    std::vector<double> total;
    std::size_t n_base = 0;
    long long total_calls = 0;
};

/// Pick-freeze estimation on the failure indicator with two base matrices and
/// the column-swap scheme, n_base*(d+2) model calls in total. First-order
/// terms use the correlation form V_i = mean(f_B (f_ABi − f_A)); totals use
/// the squared-difference form E_Ti = mean((f_A − f_ABi)²)/2. Estimates near
/// zero may come out slightly negative; they are reported as computed.
inline SobolEstimate sobol_pick_freeze(const FailureModel& model, std::size_t n_base,
                                       std::uint64_t seed, std::uint64_t replication = 0) {
    if (n_base < 100)
        throw std::invalid_argument("sobol_pick_freeze: n_base must be >= 100");
    const std::size_t d = model.dim();
    const long long calls_before = model.call_count();

    // Substreams are offset so the pick-freeze matrices never collide with the
    // plain design streams of the same seed: matrix A uses kBase..kBase+d-1,
    // matrix B the next d.
    constexpr std::uint64_t kBase = 1u << 20;
    std::vector<std::vector<double>> a_cols(d), b_cols(d);
    for (std::size_t j = 0; j < d; ++j) {
        a_cols[j] =
            model.marginals()[j].sample(Rng::stream(seed, replication, kBase + j), n_base);
        b_cols[j] = model.marginals()[j].sample(
            Rng::stream(seed, replication, kBase + d + j), n_base);
    }

    auto indicator_row = [&](const std::vector<std::vector<double>>& cols,
                             std::size_t row, std::size_t swap_col,
                             const std::vector<std::vector<double>>& swap_from) {
        std::vector<double> x(d);
        for (std::size_t j = 0; j < d; ++j)
            x[j] = (j == swap_col) ? swap_from[j][row] : cols[j][row];
        return model.evaluate(x) < 0.0 ? 1.0 : 0.0;
    };

    std::vector<double> f_a(n_base), f_b(n_base);
    for (std::size_t i = 0; i < n_base; ++i) {
        f_a[i] = indicator_row(a_cols, i, d, b_cols); // swap_col = d: no swap
        f_b[i] = indicator_row(b_cols, i, d, a_cols);
    }

    double mean_all = 0.0;
    for (std::size_t i = 0; i < n_base; ++i) mean_all += f_a[i] + f_b[i];
    mean_all /= static_cast<double>(2 * n_base);
    double var_all = 0.0;
    for (std::size_t i = 0; i < n_base; ++i) {
        var_all += (f_a[i] - mean_all) * (f_a[i] - mean_all);
        var_all += (f_b[i] - mean_all) * (f_b[i] - mean_all);
    }
    var_all /= static_cast<double>(2 * n_base - 1);

    SobolEstimate est;
    est.n_base = n_base;
    est.first_order.assign(d, 0.0);
    est.total.assign(d, 0.0);
    if (!(var_all > 0.0)) {
        est.total_calls = model.call_count() - calls_before;
        return est; // constant indicator: all shares are zero
    }

    for (std::size_t j = 0; j < d; ++j) {
        double v_first = 0.0, e_total = 0.0;
        for (std::size_t i = 0; i < n_base; ++i) {
            const double f_ab = indicator_row(a_cols, i, j, b_cols);
            v_first += f_b[i] * (f_ab - f_a[i]);
            const double diff = f_a[i] - f_ab;
            e_total += diff * diff;
        }
        v_first /= static_cast<double>(n_base);
        e_total /= static_cast<double>(2 * n_base);
        est.first_order[j] = v_first / var_all;
        est.total[j] = e_total / var_all;
    }
    est.total_calls = model.call_count() - calls_before;
    return est;
}

} // namespace relsa

#endif
