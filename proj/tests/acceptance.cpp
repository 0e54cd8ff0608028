// Acceptance suite: ten integration criteria, one pass/fail line each.
// Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "relsa/relsa.hpp"

using namespace relsa;

namespace {

struct Harness {
    int failures = 0;

    void report(int id, const char* name, bool pass, const std::string& detail,
                double seconds) {
        std::printf("[%s] criterion %2d: %-34s | %s | %.2f s\n", pass ? "PASS" : "FAIL",
                    id, name, detail.c_str(), seconds);
        if (!pass) ++failures;
    }
};

double now_seconds(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

constexpr std::uint64_t kSeed = 42;
const double kExactP = oracle::normal_cdf(-16.0 / std::sqrt(53.0));

// --- criterion 1: hyperplane exact probability ------------------------------
void criterion_1(Harness& h) {
    const auto t0 = std::chrono::steady_clock::now();
    const FailureModel model = make_hyperplane();
    const MonteCarloDesign d = run_design(model, 100000, kSeed);
    const ProbabilityEstimate p = estimate_failure_probability(d);
    const double sigma = std::sqrt(kExactP * (1.0 - kExactP) / 1e5);
    const double secs = now_seconds(t0);
    const bool pass = std::abs(p.p_hat - kExactP) <= 3.0 * sigma && secs < 1.0;
    h.report(1, "hyperplane exact probability", pass,
             fmt("p_hat=%.6f target=%.6f band=%.6f", p.p_hat, kExactP, 3.0 * sigma),
             secs);
}

// --- criteria 2 and 3: curve coverage against the closed form ---------------
void criterion_curves(Harness& h) {
    const FailureModel model = make_hyperplane();
    const auto t0 = std::chrono::steady_clock::now();
    const MonteCarloDesign d = run_design(model, 100000, kSeed);
    const double design_secs = now_seconds(t0);

    { // mean shifts: 40 points on [-1, 1], need >= 36/40 per input
        const auto t1 = std::chrono::steady_clock::now();
        int worst = 40;
        std::string per_input;
        for (std::size_t i = 1; i <= 4; ++i) {
            int covered = 0;
            for (int k = 0; k < 40; ++k) {
                const double delta = -1.0 + 2.0 * k / 39.0;
                const MomentConstraint c = MomentConstraint::mean_shift(delta);
                const PerturbedDensity pd = build_perturbed_density(model.marginal(i), c);
                const ProbabilityEstimate est = reverse_is_estimate(d, pd, i);
                const double truth = hyperplane_oracle_p_delta(i, c);
                if (truth >= est.ci_lo && truth <= est.ci_hi) ++covered;
            }
            worst = std::min(worst, covered);
            per_input += fmt("%d/40 ", covered);
        }
        const double secs = design_secs + now_seconds(t1);
        h.report(2, "hyperplane mean-shift coverage", worst >= 36 && secs < 5.0,
                 "covered " + per_input + "(need 36)", secs);
    }
    { // variance shifts: 28 points on [1/20, 3], same 90%-of-points rule -> 26/28
        const auto t1 = std::chrono::steady_clock::now();
        int worst = 28;
        std::string per_input;
        for (std::size_t i = 1; i <= 4; ++i) {
            int covered = 0;
            for (int k = 0; k < 28; ++k) {
                const double v = 0.05 + (3.0 - 0.05) * k / 27.0;
                const MomentConstraint c = MomentConstraint::variance_shift(v);
                const PerturbedDensity pd = build_perturbed_density(model.marginal(i), c);
                const ProbabilityEstimate est = reverse_is_estimate(d, pd, i);
                const double truth = hyperplane_oracle_p_delta(i, c);
                if (truth >= est.ci_lo && truth <= est.ci_hi) ++covered;
            }
            worst = std::min(worst, covered);
            per_input += fmt("%d/28 ", covered);
        }
        const double secs = design_secs + now_seconds(t1);
        h.report(3, "hyperplane variance-shift coverage", worst >= 26 && secs < 5.0,
                 "covered " + per_input + "(need 26)", secs);
    }
}

// --- criterion 4: first-order reliability method on the hyperplane ----------
void criterion_4(Harness& h) {
    const auto t0 = std::chrono::steady_clock::now();
    const FailureModel model = make_hyperplane();
    const DesignPoint dp = hlrf_design_point(model);
    const double beta_ref = 16.0 / std::sqrt(53.0);
    bool pass = dp.converged && std::abs(dp.beta_hl - beta_ref) <= 1e-6 &&
                dp.model_calls <= 100;
    std::string detail = fmt("beta=%.8f calls=%lld", dp.beta_hl, dp.model_calls);
    if (dp.converged) {
        const auto factors = importance_factors(dp);
        const double table[4] = {0.018, 0.679, 0.302, 0.0};
        for (int j = 0; j < 4; ++j) {
            if (std::abs(factors[j] - table[j]) > 2e-3) pass = false;
            detail += fmt(" f%d=%.4f", j + 1, factors[j]);
        }
    } else {
        pass = false;
    }
    h.report(4, "form on hyperplane", pass, detail, now_seconds(t0));
}

// --- criterion 5: pick-freeze shares on the hyperplane ----------------------
void criterion_5(Harness& h) {
    const auto t0 = std::chrono::steady_clock::now();
    const FailureModel model = make_hyperplane();
    const int reps = 10;
    std::vector<double> s2(reps), st2(reps);
    bool st4_zero = true;
    for (int r = 0; r < reps; ++r) {
        const SobolEstimate est = sobol_pick_freeze(model, 10000, kSeed, r);
        s2[r] = est.first_order[1];
        st2[r] = est.total[1];
        if (est.total[3] != 0.0) st4_zero = false;
    }
    auto mean_se = [&](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m += x;
        m /= v.size();
        double s = 0.0;
        for (double x : v) s += (x - m) * (x - m);
        return std::pair{m, std::sqrt(s / (v.size() - 1) / v.size())};
    };
    const auto [m2, se2] = mean_se(s2);
    const auto [mt2, set2] = mean_se(st2);
    const double secs = now_seconds(t0);
    const bool pass = st4_zero && std::abs(m2 - 0.2575) <= 3.0 * se2 &&
                      std::abs(mt2 - 0.9397) <= 3.0 * set2 && secs < 30.0;
    h.report(5, "pick-freeze shares on hyperplane", pass,
             fmt("S2=%.4f(se %.4f) ST2=%.4f(se %.4f) ST4=%s", m2, se2, mt2, set2,
                 st4_zero ? "0" : "nonzero"),
             secs);
}

// --- criterion 6: thresholded oscillatory model -----------------------------
void criterion_6(Harness& h) {
    const auto t0 = std::chrono::steady_clock::now();
    const FailureModel model = make_ishigami_threshold();
    const MonteCarloDesign d = run_design(model, 100000, kSeed);
    const ProbabilityEstimate p = estimate_failure_probability(d);
    const double band = 3.0 * std::sqrt(614.0) / 1e5;
    const bool p_ok = std::abs(p.p_hat - 6.14e-3) <= band;

    const DesignPoint dp = hlrf_design_point(model);
    bool form_misbehaves = !dp.converged;
    double p_form = 0.0;
    if (dp.converged) {
        p_form = std_normal_cdf(-dp.beta_hl);
        const double ratio = p_form > 0.0 ? p_form / p.p_hat : 0.0;
        form_misbehaves = ratio >= 10.0 || ratio <= 0.1;
    }
    h.report(6, "oscillatory model behaviour", p_ok && form_misbehaves,
             fmt("p_hat=%.5g (band %.5g) form %s", p.p_hat, band,
                 dp.converged ? fmt("converged p=%.3g", p_form).c_str()
                              : "did not converge"),
             now_seconds(t0));
}

// --- criterion 7: flood case -------------------------------------------------
void criterion_7(Harness& h) {
    const auto t0 = std::chrono::steady_clock::now();
    const FailureModel model = make_flood();
    const MonteCarloDesign d = run_design(model, 100000, kSeed);
    const ProbabilityEstimate p = estimate_failure_probability(d);
    const double sigma = std::sqrt(8.6e-4 * (1.0 - 8.6e-4) / 1e5);
    bool pass = std::abs(p.p_hat - 8.6e-4) <= 3.0 * sigma;
    std::string detail = fmt("p_hat=%.5g", p.p_hat);

    const DesignPoint dp = hlrf_design_point(model);
    if (dp.converged) {
        const auto factors = importance_factors(dp);
        const double table[4] = {0.246, 0.725, 0.026, 0.003};
        for (int j = 0; j < 4; ++j) {
            if (std::abs(factors[j] - table[j]) > 0.05) pass = false;
            detail += fmt(" f%d=%.3f", j + 1, factors[j]);
        }
    } else {
        pass = false;
        detail += " form did not converge";
    }
    const double secs = now_seconds(t0);
    h.report(7, "flood case", pass && secs < 10.0, detail, secs);
}

// --- criterion 8: perturbation property suite --------------------------------
void criterion_8(Harness& h) {
    const auto t0 = std::chrono::steady_clock::now();
    struct Entry {
        DistributionSpec dist;
        std::vector<double> mean_targets;
        std::vector<double> variance_targets;
    };
    const double pi = std::numbers::pi;
    const std::vector<Entry> matrix = {
        {DistributionSpec::normal(0.0, 1.0), {-0.5, 0.5, 1.0}, {0.5, 2.0}},
        {DistributionSpec::uniform(-pi, pi), {-1.0, 1.0, 2.5}, {1.0, 5.0}},
        {DistributionSpec::triangular(49.0, 50.0, 51.0), {49.7, 50.3}, {0.08, 0.3}},
        {DistributionSpec::gumbel(0.0, 1.0), {0.0, 1.2}, {1.0}},
        {DistributionSpec::truncated_normal(30.0, 7.5, 1.0), {27.0, 33.0}, {40.0, 70.0}},
        {DistributionSpec::truncated_gumbel(1013.0, 558.0, 0.0),
         {1000.0, 1695.0},
         {300000.0}},
    };

    int checked = 0;
    std::string first_fail;

    auto integrate = [](const PerturbedDensity& pd,
                        const std::function<double(double)>& g) {
        const DistributionSpec& base = pd.base();
        const Support s = base.support();
        double lo = std::isfinite(s.lo) ? s.lo : base.quantile(1e-13);
        double hi = std::isfinite(s.hi) ? s.hi : base.quantile(1.0 - 1e-13);
        for (int grow = 0; grow < 40; ++grow) {
            bool again = false;
            if (!std::isfinite(s.hi) && pd.pdf(hi) > 1e-18) {
                hi += 0.3 * (hi - lo);
                again = true;
            }
            if (!std::isfinite(s.lo) && pd.pdf(lo) > 1e-18) {
                lo -= 0.3 * (hi - lo);
                again = true;
            }
            if (!again) break;
        }
        std::vector<double> cuts{lo};
        for (double k : base.interior_kinks())
            if (k > lo && k < hi) cuts.push_back(k);
        cuts.push_back(hi);
        double total = 0.0;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
            total += oracle::simpson([&](double x) { return g(x) * pd.pdf(x); }, cuts[i],
                                     cuts[i + 1], 60000);
        return total;
    };
    auto fail = [&](const std::string& what) {
        if (first_fail.empty()) first_fail = what;
    };

    for (const Entry& e : matrix) {
        const double scale = std::max(1.0, std::abs(e.dist.mean()));
        for (double delta : e.mean_targets) {
            const PerturbedDensity pd =
                build_perturbed_density(e.dist, MomentConstraint::mean_shift(delta));
            ++checked;
            const double z = integrate(pd, [](double) { return 1.0; });
            const double m1 = integrate(pd, [](double x) { return x; });
            if (std::abs(z - 1.0) > 1e-6) fail(e.dist.to_string() + " normalization");
            if (std::abs(m1 - delta) > 1e-6 * std::max(std::abs(delta), scale))
                fail(e.dist.to_string() + " mean residual");
        }
        for (double v : e.variance_targets) {
            const PerturbedDensity pd =
                build_perturbed_density(e.dist, MomentConstraint::variance_shift(v));
            ++checked;
            const double z = integrate(pd, [](double) { return 1.0; });
            const double m1 = integrate(pd, [](double x) { return x; });
            const double m2 = integrate(pd, [](double x) { return x * x; });
            if (std::abs(z - 1.0) > 1e-6) fail(e.dist.to_string() + " normalization");
            if (std::abs(m1 - e.dist.mean()) > 1e-6 * scale)
                fail(e.dist.to_string() + " pinned-mean residual");
            if (std::abs(m2 - m1 * m1 - v) > 1e-6 * std::max(v, 1.0))
                fail(e.dist.to_string() + " variance residual");
        }
    }

    { // closed-form agreement for the normal base
        const auto n01 = DistributionSpec::normal(0.0, 1.0);
        const PerturbedDensity ms =
            build_perturbed_density(n01, MomentConstraint::mean_shift(0.5));
        const PerturbedDensity vs =
            build_perturbed_density(n01, MomentConstraint::variance_shift(2.0));
        const auto ms_ref = DistributionSpec::normal(0.5, 1.0);
        const auto vs_ref = DistributionSpec::normal(0.0, std::sqrt(2.0));
        for (int i = 0; i < 1000; ++i) {
            const double x = -7.0 + 14.0 * i / 999.0;
            if (std::abs(ms.pdf(x) - ms_ref.pdf(x)) > 1e-10)
                fail("gaussian mean-shift closed form");
            if (std::abs(vs.pdf(x) - vs_ref.pdf(x)) > 1e-10)
                fail("gaussian variance-shift closed form");
        }
    }
    { // truncated-mgf identity against direct quadrature
        struct Case {
            DistributionSpec parent;
            double lower, lambda, tol;
        };
        for (const Case& c : {Case{DistributionSpec::normal(30.0, 7.5), 1.0, 0.01, 1e-7},
                              Case{DistributionSpec::gumbel(1013.0, 558.0), 0.0, 1e-4,
                                   1e-6}}) {
            const MgfValue got = truncated_mgf_correction(c.parent, c.lower, c.lambda);
            const double hi = c.parent.quantile(1.0 - 1e-15);
            const double mass = 1.0 - c.parent.cdf(c.lower);
            const double ref_m =
                oracle::simpson(
                    [&](double y) { return c.parent.pdf(y) * std::exp(c.lambda * y); },
                    c.lower, hi, 400000) /
                mass;
            const double ref_dm =
                oracle::simpson(
                    [&](double y) { return y * c.parent.pdf(y) * std::exp(c.lambda * y); },
                    c.lower, hi, 400000) /
                mass;
            if (std::abs(got.value - ref_m) > c.tol * ref_m ||
                std::abs(got.derivative - ref_dm) > c.tol * std::abs(ref_dm))
                fail(c.parent.to_string() + " truncated mgf identity");
        }
    }

    h.report(8, "perturbation property suite", first_fail.empty(),
             first_fail.empty() ? fmt("%d perturbations within tolerance", checked)
                                : "failed: " + first_fail,
             now_seconds(t0));
}

// --- criterion 9: asymptotics -------------------------------------------------
void criterion_9(Harness& h) {
    const auto t0 = std::chrono::steady_clock::now();
    bool pass = true;
    std::string detail;

    { // delta-method gradient vs central finite differences
        const double x = 0.0144, y = 0.0045, step = 1e-9;
        for (auto [px, py] : {std::pair{x, y}, std::pair{y, x}}) {
            const auto [dx, dy] = index_gradient(px, py);
            const double fdx =
                (compute_index(px + step, py) - compute_index(px - step, py)) /
                (2.0 * step);
            const double fdy =
                (compute_index(px, py + step) - compute_index(px, py - step)) /
                (2.0 * step);
            if (std::abs(dx - fdx) > 1e-6 * std::abs(dx) ||
                std::abs(dy - fdy) > 1e-6 * std::abs(dy))
                pass = false;
        }
        detail += "gradient ok";
    }

    const FailureModel model = make_hyperplane();
    const MomentConstraint c = MomentConstraint::mean_shift(0.5);
    const PerturbedDensity pd = build_perturbed_density(model.marginal(2), c);
    const double truth_pd = hyperplane_oracle_p_delta(2, c);
    const double truth_s = compute_index(kExactP, truth_pd);

    { // 95% CI coverage over 200 replications at n = 1e4
        int contain = 0;
        std::vector<double> p_hats(200), pd_hats(200);
        for (int r = 0; r < 200; ++r) {
            const MonteCarloDesign d = run_design(model, 10000, kSeed, r);
            const ProbabilityEstimate base = estimate_failure_probability(d);
            const ProbabilityEstimate shifted = reverse_is_estimate(d, pd, 2);
            p_hats[r] = base.p_hat;
            pd_hats[r] = shifted.p_hat;
            const auto sigma = estimate_joint_covariance(d, pd, 2);
            const IndexEstimate est =
                index_confidence_interval(base.p_hat, shifted.p_hat, sigma, d.n);
            if (truth_s >= est.ci_lo && truth_s <= est.ci_hi) ++contain;
        }
        const double coverage = contain / 200.0;
        if (!(coverage >= 0.92 && coverage <= 0.98)) pass = false;
        detail += fmt(", coverage %d/200", contain);

        // empirical covariance against (P_delta - P * P_delta) / N
        double mp = 0.0, mpd = 0.0;
        for (int r = 0; r < 200; ++r) {
            mp += p_hats[r];
            mpd += pd_hats[r];
        }
        mp /= 200.0;
        mpd /= 200.0;
        double cov = 0.0;
        for (int r = 0; r < 200; ++r) cov += (p_hats[r] - mp) * (pd_hats[r] - mpd);
        cov /= 199.0;
        const double expected = (truth_pd - kExactP * truth_pd) / 10000.0;
        if (std::abs(cov - expected) > 0.25 * expected) pass = false;
        detail += fmt(", cov dev %+.0f%%", 100.0 * (cov - expected) / expected);
    }

    const double secs = now_seconds(t0);
    h.report(9, "asymptotics", pass && secs < 120.0, detail, secs);
}

// --- criterion 10: zero extra model calls ------------------------------------
void criterion_10(Harness& h) {
    const auto t0 = std::chrono::steady_clock::now();
    const FailureModel model = make_hyperplane();
    const MonteCarloDesign d = run_design(model, 50000, kSeed);
    const long long before = model.call_count();
    PerturbationGrid mean_grid{PerturbationGrid::Kind::MeanShift, {}};
    for (int i = 0; i < 40; ++i) mean_grid.values.push_back(-1.0 + 2.0 * i / 39.0);
    PerturbationGrid var_grid{PerturbationGrid::Kind::VarianceShift, {}};
    for (int i = 0; i < 28; ++i) var_grid.values.push_back(0.05 + 2.95 * i / 27.0);
    for (std::size_t input = 1; input <= 4; ++input) {
        compute_sensitivity_curve(d, model, input, mean_grid);
        compute_sensitivity_curve(d, model, input, var_grid);
    }
    const long long after = model.call_count();
    h.report(10, "zero extra model calls", after == before,
             fmt("calls before=%lld after=%lld", before, after), now_seconds(t0));
}

} // namespace

int main() {
    Harness h;
    criterion_1(h);
    criterion_curves(h);
    criterion_4(h);
    criterion_5(h);
    criterion_6(h);
    criterion_7(h);
    criterion_8(h);
    criterion_9(h);
    criterion_10(h);
    std::printf("%d/10 criteria passed\n", 10 - h.failures);
    return h.failures;
}
