#ifndef RELSA_DISTRIBUTIONS_HPP
#define RELSA_DISTRIBUTIONS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "relsa/common.hpp"
#include "relsa/quadrature.hpp"
#include "relsa/rng.hpp"
#include "relsa/special_functions.hpp"

namespace relsa {

enum class Family {
    Normal,
    Uniform,
    Triangular,
    Gumbel,
    TruncatedNormal,
    TruncatedGumbel,
};

inline const char* family_name(Family f) {
    switch (f) {
    case Family::Normal: return "normal";
    case Family::Uniform: return "uniform";
    case Family::Triangular: return "triangular";
    case Family::Gumbel: return "gumbel";
    case Family::TruncatedNormal: return "truncnormal";
    case Family::TruncatedGumbel: return "truncgumbel";
    }
    return "?";
}

/// Support interval; endpoints may be infinite.
struct Support {
    double lo = -kInf;
    double hi = kInf;

    bool contains(double x) const { return x >= lo && x <= hi; }
    bool bounded() const { return std::isfinite(lo) && std::isfinite(hi); }
    double width() const { return hi - lo; }
};

/// Moment generating function value and its derivative at a point.
struct MgfValue {
    double value;
    double derivative;
};

/// Parametric one-dimensional input distribution.
///
/// Truncated variants keep the untruncated parent's parameters plus the lower
/// bound and renormalize by the surviving parent mass, so parent closed forms
/// stay usable.
class DistributionSpec {
public:
    static DistributionSpec normal(double mu, double sigma) {
        if (!(sigma > 0.0))
            throw std::invalid_argument("normal: sigma must be > 0");
        return DistributionSpec(Family::Normal, mu, sigma, 0.0);
    }

    static DistributionSpec uniform(double a, double b) {
        if (!(a < b))
            throw std::invalid_argument("uniform: requires a < b");
        return DistributionSpec(Family::Uniform, a, b, 0.0);
    }

    /// Triangular with minimum `a`, mode `c`, maximum `b`.
    static DistributionSpec triangular(double a, double c, double b) {
        if (!(a < b) || !(a <= c && c <= b))
            throw std::invalid_argument("triangular: requires a <= c <= b, a < b");
        return DistributionSpec(Family::Triangular, a, b, c);
    }

    static DistributionSpec gumbel(double mu, double beta) {
        if (!(beta > 0.0))
            throw std::invalid_argument("gumbel: beta must be > 0");
        return DistributionSpec(Family::Gumbel, mu, beta, 0.0);
    }

    static DistributionSpec truncated_normal(double mu, double sigma, double lower) {
        if (!(sigma > 0.0))
            throw std::invalid_argument("truncnormal: sigma must be > 0");
        if (!std::isfinite(lower))
            throw std::invalid_argument("truncnormal: lower bound must be finite");
        DistributionSpec d(Family::TruncatedNormal, mu, sigma, lower);
        d.trunc_mass_ = 1.0 - d.parent_cdf(lower);
        if (!(d.trunc_mass_ > 0.0))
            throw std::invalid_argument("truncnormal: no mass above the lower bound");
        return d;
    }

    static DistributionSpec truncated_gumbel(double mu, double beta, double lower) {
        if (!(beta > 0.0))
            throw std::invalid_argument("truncgumbel: beta must be > 0");
        if (!std::isfinite(lower))
            throw std::invalid_argument("truncgumbel: lower bound must be finite");
        DistributionSpec d(Family::TruncatedGumbel, mu, beta, lower);
        d.trunc_mass_ = 1.0 - d.parent_cdf(lower);
        if (!(d.trunc_mass_ > 0.0))
            throw std::invalid_argument("truncgumbel: no mass above the lower bound");
        return d;
    }

    Family family() const { return family_; }

    Support support() const {
        switch (family_) {
        case Family::Normal:
        case Family::Gumbel: return {-kInf, kInf};
        case Family::Uniform: return {p1_, p2_};
        case Family::Triangular: return {p1_, p2_};
        case Family::TruncatedNormal:
        case Family::TruncatedGumbel: return {p3_, kInf};
        }
        return {};
    }

    double pdf(double x) const {
        if (!support().contains(x)) return 0.0;
        switch (family_) {
        case Family::Normal:
            return std_normal_pdf((x - p1_) / p2_) / p2_;
        case Family::Uniform:
            return 1.0 / (p2_ - p1_);
        case Family::Triangular: {
            const double a = p1_, b = p2_, c = p3_;
            if (x < c) return c == a ? 2.0 / (b - a) : 2.0 * (x - a) / ((b - a) * (c - a));
            if (x > c) return c == b ? 2.0 / (b - a) : 2.0 * (b - x) / ((b - a) * (b - c));
            return 2.0 / (b - a);
        }
        case Family::Gumbel: {
            const double z = (x - p1_) / p2_;
            return std::exp(-z - std::exp(-z)) / p2_;
        }
        case Family::TruncatedNormal:
            return std_normal_pdf((x - p1_) / p2_) / p2_ / trunc_mass_;
        case Family::TruncatedGumbel: {
            const double z = (x - p1_) / p2_;
            return std::exp(-z - std::exp(-z)) / p2_ / trunc_mass_;
        }
        }
        return 0.0;
    }

    double log_pdf(double x) const {
        if (!support().contains(x)) return -kInf;
        switch (family_) {
        case Family::Normal: {
            const double z = (x - p1_) / p2_;
            return -0.5 * z * z - std::log(p2_ * std::sqrt(2.0 * std::numbers::pi));
        }
        case Family::Uniform:
            return -std::log(p2_ - p1_);
        case Family::Triangular: {
            const double v = pdf(x);
            return v > 0.0 ? std::log(v) : -kInf;
        }
        case Family::Gumbel: {
            const double z = (x - p1_) / p2_;
            return -z - std::exp(-z) - std::log(p2_);
        }
        case Family::TruncatedNormal: {
            const double z = (x - p1_) / p2_;
            return -0.5 * z * z - std::log(p2_ * std::sqrt(2.0 * std::numbers::pi)) -
                   std::log(trunc_mass_);
        }
        case Family::TruncatedGumbel: {
            const double z = (x - p1_) / p2_;
            return -z - std::exp(-z) - std::log(p2_) - std::log(trunc_mass_);
        }
        }
        return -kInf;
    }

    double cdf(double x) const {
        const Support s = support();
        if (x <= s.lo) return 0.0;
        if (x >= s.hi) return 1.0;
        switch (family_) {
        case Family::Normal:
        case Family::Gumbel:
            return parent_cdf(x);
        case Family::Uniform:
            return (x - p1_) / (p2_ - p1_);
        case Family::Triangular: {
            const double a = p1_, b = p2_, c = p3_;
            if (x <= c)
                return (x - a) * (x - a) / ((b - a) * (c - a));
            return 1.0 - (b - x) * (b - x) / ((b - a) * (b - c));
        }
        case Family::TruncatedNormal:
        case Family::TruncatedGumbel:
            return std::clamp((parent_cdf(x) - parent_cdf(p3_)) / trunc_mass_, 0.0, 1.0);
        }
        return 0.0;
    }

    double quantile(double p) const {
        if (!(p > 0.0 && p < 1.0))
            throw std::invalid_argument("quantile: p must lie in (0,1)");
        switch (family_) {
        case Family::Normal:
            return p1_ + p2_ * std_normal_quantile(p);
        case Family::Uniform:
            return p1_ + p * (p2_ - p1_);
        case Family::Triangular: {
            const double a = p1_, b = p2_, c = p3_;
            const double pc = (c - a) / (b - a);
            if (p <= pc)
                return a + std::sqrt(p * (b - a) * (c - a));
            return b - std::sqrt((1.0 - p) * (b - a) * (b - c));
        }
        case Family::Gumbel:
            return p1_ - p2_ * std::log(-std::log(p));
        case Family::TruncatedNormal:
        case Family::TruncatedGumbel: {
            const double pp = parent_cdf(p3_) + p * trunc_mass_;
            return parent_quantile(std::min(pp, 1.0 - 1e-17));
        }
        }
        return kNaN;
    }

    double mean() const {
        switch (family_) {
        case Family::Normal: return p1_;
        case Family::Uniform: return 0.5 * (p1_ + p2_);
        case Family::Triangular: return (p1_ + p2_ + p3_) / 3.0;
        case Family::Gumbel: return p1_ + p2_ * kEulerGamma;
        case Family::TruncatedNormal: {
            const double alpha = (p3_ - p1_) / p2_;
            return p1_ + p2_ * hazard(alpha);
        }
        case Family::TruncatedGumbel:
            return numeric_moments().first;
        }
        return kNaN;
    }

    double variance() const {
        switch (family_) {
        case Family::Normal: return p2_ * p2_;
        case Family::Uniform: {
            const double w = p2_ - p1_;
            return w * w / 12.0;
        }
        case Family::Triangular: {
            const double a = p1_, b = p2_, c = p3_;
            return (a * a + b * b + c * c - a * b - a * c - b * c) / 18.0;
        }
        case Family::Gumbel:
            return p2_ * p2_ * std::numbers::pi * std::numbers::pi / 6.0;
        case Family::TruncatedNormal: {
            const double alpha = (p3_ - p1_) / p2_;
            const double h = hazard(alpha);
            return p2_ * p2_ * (1.0 + alpha * h - h * h);
        }
        case Family::TruncatedGumbel:
            return numeric_moments().second;
        }
        return kNaN;
    }

    double stddev() const { return std::sqrt(variance()); }

    /// Open interval of tilting coefficients t for which E[exp(tX)] is finite.
    std::pair<double, double> mgf_domain() const {
        switch (family_) {
        case Family::Gumbel:
        case Family::TruncatedGumbel:
            return {-kInf, 1.0 / p2_};
        default:
            return {-kInf, kInf};
        }
    }

    /// log E[exp(tX)]; throws DomainError outside mgf_domain().
    double log_mgf(double t) const {
        check_mgf_domain(t);
        switch (family_) {
        case Family::Normal:
            return p1_ * t + 0.5 * p2_ * p2_ * t * t;
        case Family::Uniform:
            return uniform_log_mgf(t);
        case Family::Triangular: {
            const double lam[1] = {t};
            return tilted_polynomial_moments({lam, 1}).psi;
        }
        case Family::Gumbel:
            return std::lgamma(1.0 - p2_ * t) + p1_ * t;
        case Family::TruncatedNormal:
        case Family::TruncatedGumbel:
            return truncated_log_mgf_and_mean(t).first;
        }
        return kNaN;
    }

    /// E[X] under the exponentially tilted density, i.e. M'(t)/M(t).
    double tilted_mean(double t) const {
        check_mgf_domain(t);
        switch (family_) {
        case Family::Normal:
            return p1_ + p2_ * p2_ * t;
        case Family::Uniform:
            return uniform_tilted_mean(t);
        case Family::Triangular: {
            const double lam[1] = {t};
            return tilted_polynomial_moments({lam, 1}).mean;
        }
        case Family::Gumbel:
            return p1_ - p2_ * digamma(1.0 - p2_ * t);
        case Family::TruncatedNormal:
        case Family::TruncatedGumbel:
            return truncated_log_mgf_and_mean(t).second;
        }
        return kNaN;
    }

    /// Moment generating function with derivative: (M(t), M'(t)).
    MgfValue mgf(double t) const {
        const double lm = log_mgf(t);
        const double m = std::exp(lm);
        return {m, m * tilted_mean(t)};
    }

    /// Independent draws via inverse-cdf sampling; deterministic for a fixed stream.
    std::vector<double> sample(Rng rng, std::size_t n) const {
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i)
            out[i] = quantile(rng.next_uniform01());
        return out;
    }

    /// Interior points where the pdf is not smooth (quadrature split points).
    std::vector<double> interior_kinks() const {
        if (family_ == Family::Triangular && p3_ > p1_ && p3_ < p2_)
            return {p3_};
        return {};
    }

    /// Truncated counterpart of a normal/gumbel distribution.
    DistributionSpec truncate_below(double lower) const {
        switch (family_) {
        case Family::Normal: return truncated_normal(p1_, p2_, lower);
        case Family::Gumbel: return truncated_gumbel(p1_, p2_, lower);
        default:
            throw std::invalid_argument("truncate_below: parent must be normal or gumbel");
        }
    }

    /// For truncated variants: the untruncated parent; identity otherwise.
    DistributionSpec parent() const {
        switch (family_) {
        case Family::TruncatedNormal: return normal(p1_, p2_);
        case Family::TruncatedGumbel: return gumbel(p1_, p2_);
        default: return *this;
        }
    }

    double truncation_lower() const {
        if (family_ == Family::TruncatedNormal || family_ == Family::TruncatedGumbel)
            return p3_;
        return -kInf;
    }

    /// Surviving parent mass 1 - F(lower); 1 for untruncated families.
    double truncation_mass() const { return trunc_mass_; }

    // --- tilted-moment engine -------------------------------------------------

    struct TiltedMoments {
        double psi;   // log of the normalizing integral of f(x) exp(tilt(x))
        double mean;  // first tilted raw moment
        double m2;
        double m3;
        double m4;
    };

    struct BasisMoments {
        double psi;
        std::vector<double> g_mean; // tilted E[g_k]
        std::vector<double> g_cov;  // row-major K x K tilted covariance of (g_1..g_K)
    };

    /// Log-safe Simpson evaluation of the raw moments of f(x)·exp(Σ λ_k x^k),
    /// k = 1..K (K ≤ 2). Throws DomainError when the integral diverges.
    TiltedMoments tilted_polynomial_moments(std::span<const double> lambdas) const {
        check_polynomial_tail(lambdas);
        auto tilt = [lambdas](double x) {
            double e = 0.0, xp = 1.0;
            for (double l : lambdas) {
                xp *= x;
                e += l * xp;
            }
            return e;
        };
        TiltedMoments out{};
        integrate_tilted(tilt, [&](auto&& run) {
            double s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0;
            run([&](double x, double g) {
                const double x2 = x * x;
                s0 += g;
                s1 += g * x;
                s2 += g * x2;
                s3 += g * x2 * x;
                s4 += g * x2 * x2;
            });
            return std::vector<double>{s0, s1, s2, s3, s4};
        }, [&](double psi, const std::vector<double>& s) {
            out = {psi, s[1] / s[0], s[2] / s[0], s[3] / s[0], s[4] / s[0]};
        });
        return out;
    }

    /// Normalizer, tilted means and covariance of arbitrary basis functions
    /// under f(x)·exp(Σ λ_k g_k(x)).
    BasisMoments tilted_basis_moments(
        std::span<const double> lambdas,
        std::span<const std::function<double(double)>> basis) const {
        if (lambdas.size() != basis.size())
            throw std::invalid_argument("tilted_basis_moments: size mismatch");
        const std::size_t K = basis.size();
        auto tilt = [lambdas, &basis, K](double x) {
            double e = 0.0;
            for (std::size_t k = 0; k < K; ++k)
                e += lambdas[k] * basis[k](x);
            return e;
        };
        BasisMoments out;
        integrate_tilted(tilt, [&](auto&& run) {
            std::vector<double> sums(1 + K + K * K, 0.0);
            std::vector<double> gx(K);
            run([&](double x, double g) {
                sums[0] += g;
                for (std::size_t k = 0; k < K; ++k) gx[k] = basis[k](x);
                for (std::size_t k = 0; k < K; ++k) {
                    sums[1 + k] += g * gx[k];
                    for (std::size_t j = 0; j <= k; ++j)
                        sums[1 + K + k * K + j] += g * gx[k] * gx[j];
                }
            });
            return sums;
        }, [&](double psi, const std::vector<double>& s) {
            out.psi = psi;
            out.g_mean.assign(K, 0.0);
            out.g_cov.assign(K * K, 0.0);
            for (std::size_t k = 0; k < K; ++k) out.g_mean[k] = s[1 + k] / s[0];
            for (std::size_t k = 0; k < K; ++k)
                for (std::size_t j = 0; j <= k; ++j) {
                    const double cov =
                        s[1 + K + k * K + j] / s[0] - out.g_mean[k] * out.g_mean[j];
                    out.g_cov[k * K + j] = cov;
                    out.g_cov[j * K + k] = cov;
                }
        });
        return out;
    }

    friend bool operator==(const DistributionSpec& a, const DistributionSpec& b) {
        return a.family_ == b.family_ && a.p1_ == b.p1_ && a.p2_ == b.p2_ &&
               a.p3_ == b.p3_;
    }

    /// Config-literal form, e.g. "normal(0, 1)".
    std::string to_string() const {
        std::ostringstream os;
        os.precision(17);
        os << family_name(family_) << '(';
        switch (family_) {
        case Family::Normal:
        case Family::Uniform:
        case Family::Gumbel:
            os << p1_ << ", " << p2_;
            break;
        case Family::Triangular:
            os << p1_ << ", " << p3_ << ", " << p2_;
            break;
        case Family::TruncatedNormal:
        case Family::TruncatedGumbel:
            os << p1_ << ", " << p2_ << ", " << p3_;
            break;
        }
        os << ')';
        return os.str();
    }

    double parent_cdf(double x) const {
        switch (family_) {
        case Family::Normal:
        case Family::TruncatedNormal:
            return std_normal_cdf((x - p1_) / p2_);
        case Family::Gumbel:
        case Family::TruncatedGumbel:
            return std::exp(-std::exp(-(x - p1_) / p2_));
        default:
            return cdf(x);
        }
    }

    double parent_quantile(double p) const {
        switch (family_) {
        case Family::Normal:
        case Family::TruncatedNormal:
            return p1_ + p2_ * std_normal_quantile(p);
        case Family::Gumbel:
        case Family::TruncatedGumbel:
            return p1_ - p2_ * std::log(-std::log(p));
        default:
            return quantile(p);
        }
    }

private:
    DistributionSpec(Family f, double p1, double p2, double p3)
        : family_(f), p1_(p1), p2_(p2), p3_(p3) {}

    static double hazard(double alpha) {
        // phi(a) / (1 - Phi(a)), stable for very negative alpha
        const double denom = 0.5 * std::erfc(alpha * std::numbers::sqrt2 / 2.0);
        return std_normal_pdf(alpha) / denom;
    }

    void check_mgf_domain(double t) const {
        const auto [lo, hi] = mgf_domain();
        if (!(t > lo && t < hi))
            throw DomainError("mgf: t outside the finite-mgf domain of " +
                              std::string(family_name(family_)));
    }

    double uniform_log_mgf(double t) const {
        const double a = p1_, b = p2_;
        const double u = t * (b - a);
        if (std::abs(u) < 1e-4) {
            // log M = t (a+b)/2 + log(2 sinh(u/2) / u), expanded in u
            const double u2 = u * u;
            return t * 0.5 * (a + b) + u2 / 24.0 - u2 * u2 / 2880.0;
        }
        if (t > 0.0)
            return t * b + std::log1p(-std::exp(-u)) - std::log(u);
        return t * a + std::log(-std::expm1(u)) - std::log(-u);
    }

    double uniform_tilted_mean(double t) const {
        const double a = p1_, b = p2_;
        const double u = t * (b - a);
        const double mid = 0.5 * (a + b);
        if (std::abs(u) < 1e-4)
            return mid + (b - a) * (u / 12.0 - u * u * u / 720.0);
        const double coth = 1.0 / std::tanh(0.5 * u);
        return mid + (b - a) * (0.5 * coth - 1.0 / u);
    }

    /// Identity for left-truncated families: the truncated mgf is the parent mgf
    /// minus the below-bound tail integral, renormalized. Avoids integrating
    /// exp(ty) against the heavy upper tail directly. When nearly all of the
    /// tilted parent mass sits below the bound the subtraction cancels; that
    /// regime is benign for direct quadrature (the integrand decays away from
    /// the bound), so it falls back to the log-safe engine instead.
    std::pair<double, double> truncated_log_mgf_and_mean(double t) const {
        const DistributionSpec par = parent();
        const double lower = p3_;
        const double log_m_parent = par.log_mgf(t);
        const double mean_parent = par.tilted_mean(t);

        // clip where the *tilted* integrand has decayed, not just the base pdf
        auto exponent = [&](double y) { return t * y + par.log_pdf(y); };
        double clip_lo = std::min(par.quantile(1e-14), lower - 1.0);
        if (lower > clip_lo) {
            double peak = exponent(lower);
            const int scan = 256;
            for (int i = 0; i <= scan; ++i)
                peak = std::max(peak,
                                exponent(clip_lo + (lower - clip_lo) * i / scan));
            for (int pass = 0; pass < 64 && exponent(clip_lo) > peak - 70.0; ++pass)
                clip_lo -= 0.5 * (lower - clip_lo);
        }

        double tail0 = 0.0, tail1 = 0.0;
        if (lower > clip_lo) {
            auto e0 = [&](double y) { return std::exp(t * y + par.log_pdf(y)); };
            auto e1 = [&](double y) { return y * std::exp(t * y + par.log_pdf(y)); };
            tail0 = simpson_adaptive(e0, clip_lo, lower, 1e-13, 2048);
            tail1 = simpson_adaptive(e1, clip_lo, lower, 1e-13, 2048);
        }
        const double m_parent = std::exp(log_m_parent);
        const double num0 = m_parent - tail0;
        const double num1 = m_parent * mean_parent - tail1;
        if (!(num0 > 1e-3 * m_parent)) {
            const double lam[1] = {t};
            const TiltedMoments direct = tilted_polynomial_moments({lam, 1});
            return {direct.psi, direct.mean};
        }
        return {std::log(num0) - std::log(trunc_mass_), num1 / num0};
    }

    std::pair<double, double> numeric_moments() const {
        const Support s = support();
        const double lo = std::isfinite(s.lo) ? s.lo : quantile(1e-14);
        const double hi = std::isfinite(s.hi) ? s.hi : quantile(1.0 - 1e-14);
        auto f0 = [this](double x) { return pdf(x); };
        auto f1 = [this](double x) { return x * pdf(x); };
        auto f2 = [this](double x) { return x * x * pdf(x); };
        const double z = simpson_adaptive(f0, lo, hi, 1e-13, 2048);
        const double m1 = simpson_adaptive(f1, lo, hi, 1e-13, 2048) / z;
        const double m2 = simpson_adaptive(f2, lo, hi, 1e-13, 2048) / z;
        return {m1, m2 - m1 * m1};
    }

    /// Analytic decay conditions for polynomial tilts on unbounded sides.
    void check_polynomial_tail(std::span<const double> lambdas) const {
        const double l1 = lambdas.size() > 0 ? lambdas[0] : 0.0;
        const double l2 = lambdas.size() > 1 ? lambdas[1] : 0.0;
        for (std::size_t k = 2; k < lambdas.size(); ++k)
            if (lambdas[k] != 0.0)
                throw std::invalid_argument(
                    "tilted_polynomial_moments: only degree <= 2 tilts supported");
        switch (family_) {
        case Family::Normal:
        case Family::TruncatedNormal: {
            if (l2 >= 0.5 / (p2_ * p2_))
                throw DomainError("tilt diverges: quadratic coefficient >= 1/(2 sigma^2)");
            break;
        }
        case Family::Gumbel:
        case Family::TruncatedGumbel: {
            if (l2 > 0.0 || (l2 == 0.0 && l1 >= 1.0 / p2_))
                throw DomainError("tilt diverges on the upper tail");
            break;
        }
        default:
            break; // bounded supports integrate every polynomial tilt
        }
    }

    /// Shared integration driver. `tilt` is the exponent added to log f.
    /// `make_pass` receives a runner that walks Simpson nodes handing
    /// (x, weight·exp(exponent−shift)) to an accumulator and returns the sums;
    /// `finish` receives (psi, sums) once the panel count has stabilized.
    template <class Tilt, class MakePass, class Finish>
    void integrate_tilted(Tilt&& tilt, MakePass&& make_pass, Finish&& finish) const {
        const Support s = support();
        auto exponent = [&](double x) { return tilt(x) + log_pdf(x); };

        double lo = std::isfinite(s.lo) ? s.lo : quantile(1e-10);
        double hi = std::isfinite(s.hi) ? s.hi : quantile(1.0 - 1e-10);

        // Extend clipped ends while the integrand is still significant there,
        // so strong tilts that push mass outward stay fully covered.
        double ref = std::max({exponent(0.5 * (lo + hi)), exponent(lo), exponent(hi)});
        bool diverged = false;
        for (int pass = 0;; ++pass) {
            bool grew = false;
            const double span = hi - lo;
            if (!std::isfinite(s.hi) && exponent(hi) > ref - 45.0) {
                hi += 0.5 * span;
                grew = true;
            }
            if (!std::isfinite(s.lo) && exponent(lo) > ref - 45.0) {
                lo -= 0.5 * span;
                grew = true;
            }
            if (!grew) break;
            ref = std::max({ref, exponent(lo), exponent(hi)});
            if (pass >= 64) {
                diverged = true;
                break;
            }
        }
        if (diverged)
            throw DomainError("tilted integrand does not decay; tilt outside the "
                              "normalizer domain");

        std::vector<double> edges{lo};
        for (double k : interior_kinks())
            if (k > lo && k < hi) edges.push_back(k);
        edges.push_back(hi);

        // shift by the max exponent over a scan grid to keep exp() in range
        double shift = -kInf;
        for (std::size_t seg = 0; seg + 1 < edges.size(); ++seg)
            for (int i = 0; i <= 512; ++i)
                shift = std::max(shift, exponent(edges[seg] +
                                                 (edges[seg + 1] - edges[seg]) * i / 512.0));
        if (!std::isfinite(shift))
            throw DomainError("tilted integrand is nowhere finite");

        auto run_with = [&](int intervals_per_segment, auto&& take) {
            for (std::size_t seg = 0; seg + 1 < edges.size(); ++seg) {
                const double a = edges[seg], b = edges[seg + 1];
                const int n = intervals_per_segment;
                const double h = (b - a) / n;
                for (int i = 0; i <= n; ++i) {
                    const double x = a + i * h;
                    double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
                    w *= h / 3.0;
                    const double e = exponent(x);
                    if (!std::isfinite(e)) continue;
                    take(x, w * std::exp(e - shift));
                }
            }
        };

        int n = 2048;
        std::vector<double> prev =
            make_pass([&](auto&& take) { run_with(n, take); });
        for (;;) {
            n *= 2;
            std::vector<double> cur =
                make_pass([&](auto&& take) { run_with(n, take); });
            bool stable = true;
            for (std::size_t i = 0; i < cur.size(); ++i)
                if (std::abs(cur[i] - prev[i]) >
                    1e-11 * (std::abs(cur[i]) + 1e-300) + 1e-14 * std::abs(cur[0]))
                    stable = false;
            prev = std::move(cur);
            if (stable || n >= (1 << 16)) break;
        }
        if (!(prev[0] > 0.0))
            throw DomainError("tilted normalizing integral vanished");
        finish(shift + std::log(prev[0]), prev);
    }

    Family family_;
    double p1_; // normal/gumbel: location; uniform/triangular: min
    double p2_; // normal/gumbel: scale; uniform/triangular: max
    double p3_; // triangular: mode; truncated: lower bound
    double trunc_mass_ = 1.0;
};

} // namespace relsa

#endif
