#ifndef RELSA_PERTURBATION_HPP
#define RELSA_PERTURBATION_HPP

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "relsa/common.hpp"
#include "relsa/distributions.hpp"

namespace relsa {

/// Moment constraint defining a perturbation: either a new mean (MeanShift)
/// or a new variance with the mean pinned at the original one (VarianceShift).
struct MomentConstraint {
    enum class Kind { MeanShift, VarianceShift };

    Kind kind;
    double target; // new mean, or new variance

    static MomentConstraint mean_shift(double delta) {
        return {Kind::MeanShift, delta};
    }
    static MomentConstraint variance_shift(double v_per) {
        if (!(v_per > 0.0))
            throw std::invalid_argument("variance_shift: target variance must be > 0");
        return {Kind::VarianceShift, v_per};
    }

    friend bool operator==(const MomentConstraint&, const MomentConstraint&) = default;
};

inline const char* constraint_kind_name(MomentConstraint::Kind k) {
    return k == MomentConstraint::Kind::MeanShift ? "mean_shift" : "variance_shift";
}

/// Exponential-tilt coefficients: the tilted density is
/// f(x) exp(Σ_k λ_k x^k − ψ), with k = 1 for a mean shift and k = 1,2 for a
/// variance shift.
struct TiltingCoefficients {
    std::vector<double> lambdas;
    double psi = 0.0;

    std::size_t order() const { return lambdas.size(); }

    double exponent(double x) const {
        double e = -psi, xp = 1.0;
        for (double l : lambdas) {
            xp *= x;
            e += l * xp;
        }
        return e;
    }
};

/// Log-normalizer log ∫ f(x) exp(Σ λ_k g_k(x)) dx for arbitrary basis functions.
/// Throws DomainError when the integral diverges.
inline double psi_normalizer(const DistributionSpec& dist,
                             std::span<const double> lambdas,
                             std::span<const std::function<double(double)>> basis) {
    return dist.tilted_basis_moments(lambdas, basis).psi;
}

/// Polynomial-basis overload (g_k(x) = x^k, k = 1..K).
inline double psi_normalizer(const DistributionSpec& dist,
                             std::span<const double> lambdas) {
    return dist.tilted_polynomial_moments(lambdas).psi;
}

/// Truncated-distribution mgf at `lambda` via the parent's closed form minus
/// the small below-bound tail integral:
///   M_T = (M(λ) − ∫_{-∞}^{lower} f e^{λy} dy) / (1 − F(lower)),
/// and the analogous expression for the derivative. Far more stable than
/// integrating e^{λy} against the heavy upper tail directly.
inline MgfValue truncated_mgf_correction(const DistributionSpec& parent, double lower,
                                         double lambda) {
    const DistributionSpec trunc = parent.truncate_below(lower);
    const double lm = trunc.log_mgf(lambda);
    const double m = std::exp(lm);
    return {m, m * trunc.tilted_mean(lambda)};
}

namespace detail {

inline void require_interior_target(const DistributionSpec& dist, double delta) {
    const Support s = dist.support();
    if (s.bounded()) {
        const double margin = 1e-9 * s.width();
        if (!(delta > s.lo + margin && delta < s.hi - margin))
            throw ConstraintError("mean shift target " + std::to_string(delta) +
                                  " is at or outside the support of the input");
    } else if (std::isfinite(s.lo)) {
        const double margin = 1e-9 * std::max(1.0, dist.stddev());
        if (!(delta > s.lo + margin))
            throw ConstraintError("mean shift target " + std::to_string(delta) +
                                  " is at or below the lower support bound");
    } else if (std::isfinite(s.hi)) {
        const double margin = 1e-9 * std::max(1.0, dist.stddev());
        if (!(delta < s.hi - margin))
            throw ConstraintError("mean shift target " + std::to_string(delta) +
                                  " is at or above the upper support bound");
    }
}

/// Largest variance attainable with the mean pinned at m on a bounded support
/// (all mass at the endpoints).
inline double max_variance_bounded(const Support& s, double m) {
    return (s.hi - m) * (m - s.lo);
}

} // namespace detail

/// Solve the single-constraint tilt: find λ with M'(λ)/M(λ) = delta.
/// Uses the Gaussian closed form when available; otherwise brackets the
/// (monotone) tilted mean in standardized tilt units and refines by a
/// safeguarded secant/bisection iteration. Truncated families evaluate their
/// mgf through the parent-minus-tail identity.
inline TiltingCoefficients solve_mean_shift(const DistributionSpec& dist, double delta) {
    detail::require_interior_target(dist, delta);

    const double m0 = dist.mean();
    if (delta == m0) return {{0.0}, 0.0};

    if (dist.family() == Family::Normal) {
        const double lambda = (delta - m0) / dist.variance();
        return {{lambda}, dist.log_mgf(lambda)};
    }

    const double sd = dist.stddev();
    const double scale = std::max(std::abs(delta), sd);

    // work in standardized tilt units t = lambda * sd
    auto residual = [&](double t) { return dist.tilted_mean(t / sd) - delta; };
    const auto [dom_lo, dom_hi] = dist.mgf_domain();
    const double cap_lo = std::isfinite(dom_lo) ? dom_lo * sd : -kInf;
    const double cap_hi = std::isfinite(dom_hi) ? dom_hi * sd : kInf;

    double t_lo = std::isfinite(cap_lo) ? cap_lo + 0.5 * std::min(1.0, -cap_lo) : -1.0;
    double t_hi = std::isfinite(cap_hi) ? std::min(1.0, 0.5 * cap_hi) : 1.0;
    double r_lo = residual(t_lo);
    double r_hi = residual(t_hi);

    const double t_cap = 1e6;
    int guard = 0;
    while (r_lo > 0.0 || r_hi < 0.0) {
        if (++guard > 400)
            throw SolverError("mean shift: failed to bracket the tilt coefficient "
                              "(target too close to a support edge?)");
        if (r_lo > 0.0) {
            t_lo = std::isfinite(cap_lo) ? cap_lo + 0.5 * (t_lo - cap_lo)
                                         : (t_lo < -1.0 ? 2.0 * t_lo : t_lo - 1.0);
            if (std::abs(t_lo) > t_cap)
                throw SolverError("mean shift: tilt coefficient exceeds the solver cap");
            r_lo = residual(t_lo);
        }
        if (r_hi < 0.0) {
            t_hi = std::isfinite(cap_hi) ? cap_hi - 0.5 * (cap_hi - t_hi)
                                         : (t_hi > 1.0 ? 2.0 * t_hi : t_hi + 1.0);
            if (std::abs(t_hi) > t_cap)
                throw SolverError("mean shift: tilt coefficient exceeds the solver cap");
            if (std::isfinite(cap_hi) && (cap_hi - t_hi) < 1e-12 * std::abs(cap_hi))
                throw SolverError("mean shift: tilt coefficient pinned at the mgf "
                                  "domain edge without reaching the target");
            r_hi = residual(t_hi);
        }
    }

    for (int it = 0; it < 300; ++it) {
        double t_try = 0.5 * (t_lo + t_hi);
        if (it % 3 != 2 && r_hi != r_lo) {
            const double t_sec = t_hi - r_hi * (t_hi - t_lo) / (r_hi - r_lo);
            if (t_sec > t_lo && t_sec < t_hi) t_try = t_sec;
        }
        const double r_try = residual(t_try);
        if (std::abs(r_try) <= 1e-10 * scale ||
            (t_hi - t_lo) <= 1e-15 * std::max(1.0, std::abs(t_try))) {
            const double lambda = t_try / sd;
            return {{lambda}, dist.log_mgf(lambda)};
        }
        if (r_try > 0.0) {
            t_hi = t_try;
            r_hi = r_try;
        } else {
            t_lo = t_try;
            r_lo = r_try;
        }
    }
    throw SolverError("mean shift: root refinement did not converge");
}

struct NewtonReport {
    int iterations = 0;
    double grad_norm = 0.0;
};

/// Minimize the Lagrange dual H(λ) = ψ(λ) − Σ λ_k δ_k over generic basis
/// functions by a safeguarded Newton iteration. H is convex on the domain of
/// ψ, so the stationary point is the minimizer. The gradient is the vector of
/// tilted basis means minus the targets and the Hessian their tilted
/// covariance; both come from one Simpson pass. Steps are halved whenever H
/// increases or λ leaves the domain.
inline std::vector<double> newton_minimize_lagrange(
    const DistributionSpec& dist,
    std::span<const std::function<double(double)>> basis,
    std::span<const double> targets, std::span<const double> init,
    double tol = 1e-10, int max_iter = 200, NewtonReport* report = nullptr) {
    const std::size_t K = basis.size();
    if (targets.size() != K || init.size() != K)
        throw std::invalid_argument("newton_minimize_lagrange: size mismatch");

    std::vector<double> lam(init.begin(), init.end());

    struct Eval {
        double h = kInf;
        std::vector<double> grad;
        std::vector<double> hess;
        bool ok = false;
    };
    auto evaluate = [&](const std::vector<double>& l) {
        Eval e;
        try {
            const auto mom = dist.tilted_basis_moments(l, basis);
            e.h = mom.psi;
            for (std::size_t k = 0; k < K; ++k) e.h -= l[k] * targets[k];
            e.grad.assign(K, 0.0);
            for (std::size_t k = 0; k < K; ++k) e.grad[k] = mom.g_mean[k] - targets[k];
            e.hess = mom.g_cov;
            e.ok = true;
        } catch (const DomainError&) {
            e.ok = false;
        }
        return e;
    };
    auto grad_converged = [&](const std::vector<double>& grad) {
        for (std::size_t k = 0; k < K; ++k)
            if (std::abs(grad[k]) > tol * std::max(1.0, std::abs(targets[k])))
                return false;
        return true;
    };
    auto grad_norm = [](const std::vector<double>& g) {
        double s = 0.0;
        for (double v : g) s += v * v;
        return std::sqrt(s);
    };

    Eval cur = evaluate(lam);
    if (!cur.ok)
        throw SolverError("newton_minimize_lagrange: H is not finite at the start point");

    int iterations = 0;
    for (; iterations < max_iter && !grad_converged(cur.grad); ++iterations) {
        // solve hess * step = grad (K is tiny; Gaussian elimination with pivoting)
        std::vector<double> a = cur.hess;
        std::vector<double> step = cur.grad;
        for (std::size_t col = 0; col < K; ++col) {
            std::size_t piv = col;
            for (std::size_t r = col + 1; r < K; ++r)
                if (std::abs(a[r * K + col]) > std::abs(a[piv * K + col])) piv = r;
            if (std::abs(a[piv * K + col]) < 1e-300)
                throw SolverError("newton_minimize_lagrange: singular curvature matrix");
            if (piv != col) {
                for (std::size_t cc = 0; cc < K; ++cc)
                    std::swap(a[piv * K + cc], a[col * K + cc]);
                std::swap(step[piv], step[col]);
            }
            for (std::size_t r = col + 1; r < K; ++r) {
                const double f = a[r * K + col] / a[col * K + col];
                for (std::size_t cc = col; cc < K; ++cc)
                    a[r * K + cc] -= f * a[col * K + cc];
                step[r] -= f * step[col];
            }
        }
        for (std::size_t col = K; col-- > 0;) {
            for (std::size_t cc = col + 1; cc < K; ++cc)
                step[col] -= a[col * K + cc] * step[cc];
            step[col] /= a[col * K + col];
        }

        bool accepted = false;
        double alpha = 1.0;
        for (int half = 0; half < 60; ++half, alpha *= 0.5) {
            std::vector<double> trial(K);
            for (std::size_t k = 0; k < K; ++k) trial[k] = lam[k] - alpha * step[k];
            Eval ev = evaluate(trial);
            if (ev.ok && ev.h <= cur.h + 1e-14 * (std::abs(cur.h) + 1.0)) {
                lam = std::move(trial);
                cur = std::move(ev);
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            std::ostringstream os;
            os << "newton_minimize_lagrange: backtracking exhausted at iteration "
               << iterations << ", |grad| = " << grad_norm(cur.grad);
            throw SolverError(os.str());
        }
    }

    if (!grad_converged(cur.grad)) {
        std::ostringstream os;
        os << "newton_minimize_lagrange: no convergence after " << max_iter
           << " iterations, |grad| = " << grad_norm(cur.grad);
        throw SolverError(os.str());
    }
    if (report) {
        report->iterations = iterations;
        report->grad_norm = grad_norm(cur.grad);
    }
    return lam;
}

/// Solve the two-constraint tilt pinning the mean at its original value and
/// setting the variance to v_per. Uses the Gaussian closed form when the base
/// is normal; otherwise the Newton dual solve in standardized coordinates,
/// which keeps the curvature matrix well conditioned for physical-scale inputs.
inline TiltingCoefficients solve_variance_shift(const DistributionSpec& dist,
                                                double v_per) {
    if (!(v_per > 0.0))
        throw ConstraintError("variance shift: target variance must be > 0");
    const double m0 = dist.mean();
    const Support s = dist.support();
    if (s.bounded()) {
        const double vmax = detail::max_variance_bounded(s, m0);
        if (!(v_per < vmax))
            throw ConstraintError(
                "variance shift: target exceeds the largest variance attainable "
                "with the mean pinned on this bounded support");
    }

    if (dist.family() == Family::Normal) {
        const double sigma2 = dist.variance();
        const double l2 = (v_per - sigma2) / (2.0 * sigma2 * v_per);
        const double l1 = -2.0 * m0 * l2;
        // complete the square: the tilted law is N(m0, v_per)
        const double psi = 0.5 * std::log(v_per / sigma2) +
                           0.5 * m0 * m0 * (1.0 / v_per - 1.0 / sigma2) + l1 * m0 +
                           l2 * m0 * m0;
        return {{l1, l2}, psi};
    }

    const double sd = dist.stddev();
    std::vector<std::function<double(double)>> basis{
        [m0, sd](double x) { return (x - m0) / sd; },
        [m0, sd](double x) {
            const double z = (x - m0) / sd;
            return z * z;
        }};
    const double targets[2] = {0.0, v_per / (sd * sd)};
    const double init[2] = {0.0, 0.0};

    std::vector<double> lam_z;
    try {
        lam_z = newton_minimize_lagrange(dist, basis, targets, init, 1e-10, 200);
    } catch (const SolverError& e) {
        throw SolverError(std::string("variance shift: ") + e.what());
    }

    // map standardized coefficients back to the monomial basis {x, x^2}
    const double l2 = lam_z[1] / (sd * sd);
    const double l1 = lam_z[0] / sd - 2.0 * m0 * lam_z[1] / (sd * sd);
    const double lam_xy[2] = {l1, l2};
    const double psi = dist.tilted_polynomial_moments(lam_xy).psi;
    return {{l1, l2}, psi};
}

/// A perturbed input density: the base distribution with its KL-minimal
/// exponential tilt attached. Immutable after construction and safe to share
/// across threads.
class PerturbedDensity {
public:
    PerturbedDensity(DistributionSpec base, TiltingCoefficients coeffs,
                     MomentConstraint constraint,
                     std::optional<DistributionSpec> closed_form = std::nullopt)
        : base_(std::move(base)), coeffs_(std::move(coeffs)), constraint_(constraint),
          closed_form_(std::move(closed_form)) {}

    const DistributionSpec& base() const { return base_; }
    const TiltingCoefficients& coefficients() const { return coeffs_; }
    const MomentConstraint& constraint() const { return constraint_; }
    const std::optional<DistributionSpec>& closed_form() const { return closed_form_; }

    /// f(x) exp(Σ λ_k x^k − ψ); zero outside the (unchanged) base support.
    double pdf(double x) const {
        const double f = base_.pdf(x);
        if (f == 0.0) return 0.0;
        return f * std::exp(coeffs_.exponent(x));
    }

    /// Importance weight f_perturbed(x) / f_base(x) = exp(Σ λ_k x^k − ψ);
    /// the base pdf cancels analytically, so no pdf division is performed.
    double likelihood_ratio(double x) const {
        if (!base_.support().contains(x))
            throw DomainError("likelihood_ratio: point outside the base support");
        return std::exp(coeffs_.exponent(x));
    }

private:
    DistributionSpec base_;
    TiltingCoefficients coeffs_;
    MomentConstraint constraint_;
    std::optional<DistributionSpec> closed_form_;
};

/// Construct the perturbed density for a constraint, attaching the closed-form
/// spec when the tilt stays inside the same parametric family (normal base).
inline PerturbedDensity build_perturbed_density(const DistributionSpec& dist,
                                                const MomentConstraint& constraint) {
    TiltingCoefficients coeffs = constraint.kind == MomentConstraint::Kind::MeanShift
                                     ? solve_mean_shift(dist, constraint.target)
                                     : solve_variance_shift(dist, constraint.target);
    std::optional<DistributionSpec> closed;
    if (dist.family() == Family::Normal) {
        if (constraint.kind == MomentConstraint::Kind::MeanShift)
            closed = DistributionSpec::normal(constraint.target, dist.stddev());
        else
            closed = DistributionSpec::normal(dist.mean(), std::sqrt(constraint.target));
    }
    return PerturbedDensity(dist, std::move(coeffs), constraint, std::move(closed));
}

} // namespace relsa

#endif
