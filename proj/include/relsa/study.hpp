#ifndef RELSA_STUDY_HPP
#define RELSA_STUDY_HPP

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "relsa/baselines.hpp"
#include "relsa/common.hpp"
#include "relsa/estimation.hpp"
#include "relsa/models.hpp"

namespace relsa {

/// Evenly spaced grid specification.
struct GridSpec {
    double lo = 0.0;
    double hi = 0.0;
    int points = 0;

    std::vector<double> values() const {
        std::vector<double> out(points);
        for (int i = 0; i < points; ++i)
            out[i] = lo + (hi - lo) * static_cast<double>(i) /
                              static_cast<double>(points - 1);
        return out;
    }
};

/// One perturbation block: which input, which constraint kind, which grid.
struct PerturbBlock {
    std::size_t input = 0; // 1-based
    PerturbationGrid::Kind kind = PerturbationGrid::Kind::MeanShift;
    GridSpec grid;
};

/// Declarative description of a complete study.
struct StudyConfig {
    std::string model;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    double ci_level = 0.95;
    int replications = 1;
    std::string out_dir = "out";
    std::vector<std::pair<std::size_t, DistributionSpec>> input_overrides; // 1-based
    std::vector<PerturbBlock> perturbations;
    bool form_enabled = false;
    bool sobol_enabled = false;
    std::size_t sobol_n_base = 10000;
};

namespace detail {

inline std::string trim(std::string_view sv) {
    std::size_t b = 0, e = sv.size();
    while (b < e && std::isspace(static_cast<unsigned char>(sv[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(sv[e - 1]))) --e;
    return std::string(sv.substr(b, e - b));
}

inline double parse_number(const std::string& text, int line, const std::string& key) {
    const std::string t = trim(text);
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end == t.c_str() || *end != '\0')
        throw ConfigError("line " + std::to_string(line) + ": key '" + key +
                          "': expected a number, got '" + t + "'");
    return v;
}

inline long long parse_integer(const std::string& text, int line,
                               const std::string& key) {
    const double v = parse_number(text, line, key);
    const long long i = static_cast<long long>(v);
    if (static_cast<double>(i) != v)
        throw ConfigError("line " + std::to_string(line) + ": key '" + key +
                          "': expected an integer");
    return i;
}

inline bool parse_bool(const std::string& text, int line, const std::string& key) {
    const std::string t = trim(text);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw ConfigError("line " + std::to_string(line) + ": key '" + key +
                      "': expected true/false");
}

/// Parse a distribution literal such as "normal(0, 1)".
inline DistributionSpec parse_distribution(const std::string& text, int line,
                                           const std::string& key) {
    const std::string t = trim(text);
    const auto open = t.find('(');
    if (open == std::string::npos || t.back() != ')')
        throw ConfigError("line " + std::to_string(line) + ": key '" + key +
                          "': expected a distribution literal like normal(0, 1)");
    const std::string name = trim(t.substr(0, open));
    std::vector<double> args;
    std::string inner = t.substr(open + 1, t.size() - open - 2);
    std::stringstream ss(inner);
    std::string piece;
    while (std::getline(ss, piece, ','))
        args.push_back(parse_number(piece, line, key));

    auto arity = [&](std::size_t want) {
        if (args.size() != want)
            throw ConfigError("line " + std::to_string(line) + ": key '" + key + "': " +
                              name + " takes " + std::to_string(want) + " parameters");
    };
    try {
        if (name == "normal") { arity(2); return DistributionSpec::normal(args[0], args[1]); }
        if (name == "uniform") { arity(2); return DistributionSpec::uniform(args[0], args[1]); }
        if (name == "triangular") {
            arity(3);
            return DistributionSpec::triangular(args[0], args[1], args[2]);
        }
        if (name == "gumbel") { arity(2); return DistributionSpec::gumbel(args[0], args[1]); }
        if (name == "truncnormal") {
            arity(3);
            return DistributionSpec::truncated_normal(args[0], args[1], args[2]);
        }
        if (name == "truncgumbel") {
            arity(3);
            return DistributionSpec::truncated_gumbel(args[0], args[1], args[2]);
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError("line " + std::to_string(line) + ": key '" + key +
                          "': " + e.what());
    }
    throw ConfigError("line " + std::to_string(line) + ": key '" + key +
                      "': unknown distribution family '" + name + "'");
}

inline PerturbationGrid::Kind parse_constraint_kind(const std::string& text, int line) {
    const std::string t = trim(text);
    if (t == "mean_shift") return PerturbationGrid::Kind::MeanShift;
    if (t == "mean_shift_sigma") return PerturbationGrid::Kind::MeanShiftSigma;
    if (t == "variance_shift") return PerturbationGrid::Kind::VarianceShift;
    throw ConfigError("line " + std::to_string(line) +
                      ": key 'constraint': unknown constraint '" + t +
                      "' (known: mean_shift, mean_shift_sigma, variance_shift)");
}

inline std::string format_double(double v) {
    if (std::isnan(v)) return "";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

/// Parse and validate a study configuration (flat key/value lines with
/// [sections], '#' comments). Errors name the offending key and line.
inline StudyConfig parse_config(std::string_view text) {
    StudyConfig cfg;
    bool saw_model = false, saw_n = false, saw_seed = false;

    enum class Section { Top, Inputs, Perturb, Form, Sobol };
    Section section = Section::Top;
    PerturbBlock* block = nullptr;

    std::istringstream stream{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(stream, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string line = detail::trim(raw);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(line_no) +
                                  ": malformed section header");
            const std::string name = detail::trim(line.substr(1, line.size() - 2));
            if (name == "inputs") {
                section = Section::Inputs;
            } else if (name.rfind("perturb", 0) == 0) {
                const std::string arg = detail::trim(name.substr(7));
                if (arg.empty())
                    throw ConfigError("line " + std::to_string(line_no) +
                                      ": [perturb <input>] needs an input index");
                const long long idx = detail::parse_integer(arg, line_no, "perturb");
                if (idx < 1)
                    throw ConfigError("line " + std::to_string(line_no) +
                                      ": input indices are 1-based");
                cfg.perturbations.push_back({});
                block = &cfg.perturbations.back();
                block->input = static_cast<std::size_t>(idx);
                section = Section::Perturb;
            } else if (name == "form") {
                section = Section::Form;
            } else if (name == "sobol") {
                section = Section::Sobol;
            } else {
                throw ConfigError("line " + std::to_string(line_no) +
                                  ": unknown section [" + name + "]");
            }
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) +
                              ": expected 'key = value'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));

        switch (section) {
        case Section::Top:
            if (key == "model") {
                cfg.model = value;
                saw_model = true;
            } else if (key == "n") {
                cfg.n = static_cast<std::size_t>(detail::parse_integer(value, line_no, key));
                saw_n = true;
            } else if (key == "seed") {
                cfg.seed = static_cast<std::uint64_t>(
                    detail::parse_integer(value, line_no, key));
                saw_seed = true;
            } else if (key == "ci_level") {
                cfg.ci_level = detail::parse_number(value, line_no, key);
            } else if (key == "replications") {
                cfg.replications =
                    static_cast<int>(detail::parse_integer(value, line_no, key));
            } else if (key == "out_dir") {
                cfg.out_dir = value;
            } else {
                throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" +
                                  key + "'");
            }
            break;
        case Section::Inputs: {
            if (key.size() < 2 || key.front() != 'x')
                throw ConfigError("line " + std::to_string(line_no) +
                                  ": input keys look like x1, x2, ... , got '" + key + "'");
            const long long idx = detail::parse_integer(key.substr(1), line_no, key);
            if (idx < 1)
                throw ConfigError("line " + std::to_string(line_no) +
                                  ": input indices are 1-based");
            cfg.input_overrides.emplace_back(
                static_cast<std::size_t>(idx),
                detail::parse_distribution(value, line_no, key));
            break;
        }
        case Section::Perturb:
            if (key == "constraint") {
                block->kind = detail::parse_constraint_kind(value, line_no);
            } else if (key == "grid") {
                std::istringstream gs(value);
                double lo, hi;
                int points;
                if (!(gs >> lo >> hi >> points))
                    throw ConfigError("line " + std::to_string(line_no) +
                                      ": key 'grid': expected '<lo> <hi> <points>'");
                std::string rest;
                if (gs >> rest)
                    throw ConfigError("line " + std::to_string(line_no) +
                                      ": key 'grid': trailing content '" + rest + "'");
                block->grid = {lo, hi, points};
            } else {
                throw ConfigError("line " + std::to_string(line_no) +
                                  ": unknown perturb key '" + key + "'");
            }
            break;
        case Section::Form:
            if (key == "enabled") {
                cfg.form_enabled = detail::parse_bool(value, line_no, key);
            } else {
                throw ConfigError("line " + std::to_string(line_no) +
                                  ": unknown form key '" + key + "'");
            }
            break;
        case Section::Sobol:
            if (key == "enabled") {
                cfg.sobol_enabled = detail::parse_bool(value, line_no, key);
            } else if (key == "n_base") {
                cfg.sobol_n_base =
                    static_cast<std::size_t>(detail::parse_integer(value, line_no, key));
            } else {
                throw ConfigError("line " + std::to_string(line_no) +
                                  ": unknown sobol key '" + key + "'");
            }
            break;
        }
    }

    if (!saw_model) throw ConfigError("missing required key 'model'");
    if (!saw_n) throw ConfigError("missing required key 'n'");
    if (!saw_seed) throw ConfigError("missing required key 'seed'");
    if (cfg.n < 100) throw ConfigError("key 'n': design size must be >= 100");
    if (!(cfg.ci_level > 0.0 && cfg.ci_level < 1.0))
        throw ConfigError("key 'ci_level': must lie in (0,1)");
    if (cfg.replications < 1)
        throw ConfigError("key 'replications': must be >= 1");
    if (cfg.sobol_enabled && cfg.sobol_n_base < 100)
        throw ConfigError("key 'n_base': must be >= 100");

    // Resolve the model to validate inputs and grids.
    FailureModel model = make_model(cfg.model);
    std::vector<DistributionSpec> marginals = model.marginals();
    for (const auto& [idx, dist] : cfg.input_overrides) {
        if (idx > marginals.size())
            throw ConfigError("key 'x" + std::to_string(idx) + "': model '" + cfg.model +
                              "' has only " + std::to_string(marginals.size()) + " inputs");
        marginals[idx - 1] = dist;
    }

    for (const PerturbBlock& b : cfg.perturbations) {
        const std::string where =
            "[perturb " + std::to_string(b.input) + "]";
        if (b.input > marginals.size())
            throw ConfigError(where + ": model '" + cfg.model + "' has only " +
                              std::to_string(marginals.size()) + " inputs");
        if (b.grid.points < 2)
            throw ConfigError(where + ": key 'grid': needs at least 2 points");
        if (!(b.grid.lo < b.grid.hi))
            throw ConfigError(where + ": key 'grid': requires lo < hi");
        const DistributionSpec& dist = marginals[b.input - 1];
        PerturbationGrid grid{b.kind, b.grid.values()};
        try {
            detail::validate_grid(grid, dist);
            // constraint feasibility at the grid extremes
            grid.resolve(grid.values.front(), dist);
            grid.resolve(grid.values.back(), dist);
            if (grid.constraint_kind() == MomentConstraint::Kind::MeanShift) {
                detail::require_interior_target(
                    dist, grid.resolve(grid.values.front(), dist).target);
                detail::require_interior_target(
                    dist, grid.resolve(grid.values.back(), dist).target);
            } else {
                const Support s = dist.support();
                if (s.bounded()) {
                    const double vmax = detail::max_variance_bounded(s, dist.mean());
                    if (!(grid.values.back() < vmax))
                        throw ConstraintError("target variance exceeds the attainable "
                                              "maximum on this bounded support");
                }
            }
        } catch (const std::invalid_argument& e) {
            throw ConfigError(where + ": " + e.what());
        } catch (const Error& e) {
            throw ConfigError(where + ": " + e.what());
        }
    }
    return cfg;
}

inline StudyConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

/// Canonical serialization; parsing it back yields an equivalent config.
inline std::string serialize_config(const StudyConfig& cfg) {
    std::ostringstream os;
    os << "model = " << cfg.model << '\n';
    os << "n = " << cfg.n << '\n';
    os << "seed = " << cfg.seed << '\n';
    os << "ci_level = " << detail::format_double(cfg.ci_level) << '\n';
    os << "replications = " << cfg.replications << '\n';
    os << "out_dir = " << cfg.out_dir << '\n';
    if (!cfg.input_overrides.empty()) {
        os << "\n[inputs]\n";
        for (const auto& [idx, dist] : cfg.input_overrides)
            os << 'x' << idx << " = " << dist.to_string() << '\n';
    }
    for (const PerturbBlock& b : cfg.perturbations) {
        os << "\n[perturb " << b.input << "]\n";
        os << "constraint = " << grid_kind_name(b.kind) << '\n';
        os << "grid = " << detail::format_double(b.grid.lo) << ' '
           << detail::format_double(b.grid.hi) << ' ' << b.grid.points << '\n';
    }
    if (cfg.form_enabled) os << "\n[form]\nenabled = true\n";
    if (cfg.sobol_enabled)
        os << "\n[sobol]\nenabled = true\nn_base = " << cfg.sobol_n_base << '\n';
    return os.str();
}

struct FormResult {
    DesignPoint design_point;
    std::vector<double> factors; // empty when not converged
    double p_form = 0.0;
};

struct SobolSummary {
    SobolEstimate primary;            // replication 0
    std::vector<double> first_mean;   // across replications
    std::vector<double> first_cov;    // coefficient of variation
    std::vector<double> total_mean;
    std::vector<double> total_cov;
    int replications = 1;
};

struct StudyResult {
    StudyConfig config;
    std::vector<DistributionSpec> marginals; // after overrides
    ProbabilityEstimate probability;
    std::vector<SensitivityCurve> curves;
    std::optional<FormResult> form;
    std::optional<SobolSummary> sobol;
    long long design_calls = 0;
    long long curve_calls = 0; // stays zero: curves reuse the design
    long long form_calls = 0;
    long long sobol_calls = 0;
    double wall_seconds = 0.0;
};

/// Run the configured study: one seeded design, every perturbation curve from
/// that same design, then the enabled baselines. Deterministic for a fixed
/// seed, independent of `threads`.
inline StudyResult run_study(const StudyConfig& cfg, int threads = 1) {
    const auto t0 = std::chrono::steady_clock::now();

    FailureModel model = make_model(cfg.model);
    for (const auto& [idx, dist] : cfg.input_overrides)
        model = model.with_marginal(idx, dist);

    StudyResult result;
    result.config = cfg;
    result.marginals = model.marginals();

    const MonteCarloDesign design = run_design(model, cfg.n, cfg.seed);
    result.design_calls = model.call_count();
    result.probability = estimate_failure_probability(design, cfg.ci_level);

    const long long before_curves = model.call_count();
    for (const PerturbBlock& b : cfg.perturbations) {
        PerturbationGrid grid{b.kind, b.grid.values()};
        result.curves.push_back(compute_sensitivity_curve(design, model, b.input, grid,
                                                          cfg.ci_level, threads));
    }
    result.curve_calls = model.call_count() - before_curves;

    if (cfg.form_enabled) {
        const long long before = model.call_count();
        FormResult fr;
        fr.design_point = hlrf_design_point(model);
        if (fr.design_point.converged) {
            fr.factors = importance_factors(fr.design_point);
            fr.p_form = std_normal_cdf(-fr.design_point.beta_hl);
        }
        result.form_calls = model.call_count() - before;
        result.form = std::move(fr);
    }

    if (cfg.sobol_enabled) {
        const long long before = model.call_count();
        const int reps = std::max(cfg.replications, 1);
        std::vector<SobolEstimate> estimates;
        estimates.reserve(reps);
        for (int r = 0; r < reps; ++r)
            estimates.push_back(sobol_pick_freeze(model, cfg.sobol_n_base, cfg.seed,
                                                  static_cast<std::uint64_t>(r)));
        SobolSummary summary;
        summary.primary = estimates.front();
        summary.replications = reps;
        const std::size_t d = model.dim();
        summary.first_mean.assign(d, 0.0);
        summary.first_cov.assign(d, 0.0);
        summary.total_mean.assign(d, 0.0);
        summary.total_cov.assign(d, 0.0);
        for (std::size_t j = 0; j < d; ++j) {
            double mf = 0.0, mt = 0.0;
            for (const auto& e : estimates) {
                mf += e.first_order[j];
                mt += e.total[j];
            }
            mf /= reps;
            mt /= reps;
            double vf = 0.0, vt = 0.0;
            for (const auto& e : estimates) {
                vf += (e.first_order[j] - mf) * (e.first_order[j] - mf);
                vt += (e.total[j] - mt) * (e.total[j] - mt);
            }
            if (reps > 1) {
                vf /= reps - 1;
                vt /= reps - 1;
            }
            summary.first_mean[j] = mf;
            summary.total_mean[j] = mt;
            summary.first_cov[j] = mf != 0.0 ? std::sqrt(vf) / std::abs(mf) : 0.0;
            summary.total_cov[j] = mt != 0.0 ? std::sqrt(vt) / std::abs(mt) : 0.0;
        }
        result.sobol_calls = model.call_count() - before;
        result.sobol = std::move(summary);
    }

    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

/// Curve table, one row per grid point plus a leading probability row.
/// Columns: input,constraint,grid_value,s_hat,s_var,ci_lo,ci_hi,p_hat,
/// p_delta_hat,n,degenerate. Numbers carry 17 significant digits so a reload
/// reproduces every value exactly.
inline void emit_csv(const StudyResult& result, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("emit_csv: cannot write '" + path.string() + "'");
    using detail::format_double;
    out << "input,constraint,grid_value,s_hat,s_var,ci_lo,ci_hi,p_hat,p_delta_hat,n,"
           "degenerate\n";
    const ProbabilityEstimate& p = result.probability;
    out << "0,probability,,,," << format_double(p.ci_lo) << ',' << format_double(p.ci_hi)
        << ',' << format_double(p.p_hat) << ",," << p.n << ','
        << (p.degenerate ? "true" : "false") << '\n';
    for (const SensitivityCurve& curve : result.curves) {
        const char* kind =
            grid_kind_name(static_cast<PerturbationGrid::Kind>(curve.grid_kind));
        for (std::size_t i = 0; i < curve.grid.size(); ++i) {
            out << curve.input << ',' << kind << ',' << format_double(curve.grid[i]) << ',';
            if (!curve.valid[i]) {
                out << ",,,,,," << result.probability.n << ",\n";
                continue;
            }
            const IndexEstimate& e = curve.points[i];
            if (e.degenerate) {
                out << "-inf,,,," << format_double(e.p_hat) << ','
                    << format_double(e.p_delta_hat) << ',' << e.n << ",true\n";
            } else {
                out << format_double(e.s_hat) << ',' << format_double(e.variance_hat)
                    << ',' << format_double(e.ci_lo) << ',' << format_double(e.ci_hi)
                    << ',' << format_double(e.p_hat) << ','
                    << format_double(e.p_delta_hat) << ',' << e.n << ",false\n";
            }
        }
    }
}

namespace detail {

inline std::string svg_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

} // namespace detail

/// One panel per constraint kind; per input a polyline of the index with a
/// translucent confidence band. Degenerate or failed points break the line.
inline void emit_svg(const StudyResult& result, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("emit_svg: cannot write '" + path.string() + "'");

    static constexpr std::array<const char*, 6> palette = {
        "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

    std::vector<int> kinds;
    for (const auto& c : result.curves)
        if (std::find(kinds.begin(), kinds.end(), c.grid_kind) == kinds.end())
            kinds.push_back(c.grid_kind);

    const double pw = 640, ph = 460;
    const double ml = 72, mr = 16, mt = 36, mb = 52;
    const double width = std::max<std::size_t>(kinds.size(), 1) * pw;

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << ph << "\" viewBox=\"0 0 " << width << ' ' << ph << "\">\n";
    out << "<style>text{font-family:sans-serif;font-size:12px;}"
           ".title{font-size:14px;}</style>\n";
    out << "<rect width=\"" << width << "\" height=\"" << ph << "\" fill=\"white\"/>\n";

    for (std::size_t panel = 0; panel < kinds.size(); ++panel) {
        const int kind = kinds[panel];
        const double x0 = panel * pw + ml, x1 = panel * pw + pw - mr;
        const double y0 = mt, y1 = ph - mb;

        double gx_lo = kInf, gx_hi = -kInf, gy_lo = kInf, gy_hi = -kInf;
        for (const auto& c : result.curves) {
            if (c.grid_kind != kind) continue;
            for (std::size_t i = 0; i < c.grid.size(); ++i) {
                gx_lo = std::min(gx_lo, c.grid[i]);
                gx_hi = std::max(gx_hi, c.grid[i]);
                if (!c.valid[i] || c.points[i].degenerate) continue;
                gy_lo = std::min(gy_lo, c.points[i].ci_lo);
                gy_hi = std::max(gy_hi, c.points[i].ci_hi);
            }
        }
        if (!std::isfinite(gx_lo)) { gx_lo = 0; gx_hi = 1; }
        if (!std::isfinite(gy_lo)) { gy_lo = -1; gy_hi = 1; }
        if (gy_hi == gy_lo) { gy_lo -= 1; gy_hi += 1; }
        const double pad = 0.04 * (gy_hi - gy_lo);
        gy_lo -= pad;
        gy_hi += pad;

        auto px = [&](double gx) {
            return x0 + (gx - gx_lo) / (gx_hi - gx_lo) * (x1 - x0);
        };
        auto py = [&](double gy) {
            return y1 - (gy - gy_lo) / (gy_hi - gy_lo) * (y1 - y0);
        };

        out << "<g>\n";
        out << "<rect x=\"" << detail::svg_num(x0) << "\" y=\"" << detail::svg_num(y0)
            << "\" width=\"" << detail::svg_num(x1 - x0) << "\" height=\""
            << detail::svg_num(y1 - y0)
            << "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";
        out << "<text class=\"title\" x=\"" << detail::svg_num(0.5 * (x0 + x1))
            << "\" y=\"" << detail::svg_num(y0 - 12) << "\" text-anchor=\"middle\">"
            << result.config.model << " / "
            << grid_kind_name(static_cast<PerturbationGrid::Kind>(kind)) << "</text>\n";

        for (int tick = 0; tick <= 4; ++tick) {
            const double gx = gx_lo + (gx_hi - gx_lo) * tick / 4.0;
            const double gy = gy_lo + (gy_hi - gy_lo) * tick / 4.0;
            out << "<line x1=\"" << detail::svg_num(px(gx)) << "\" y1=\""
                << detail::svg_num(y1) << "\" x2=\"" << detail::svg_num(px(gx))
                << "\" y2=\"" << detail::svg_num(y1 + 5)
                << "\" stroke=\"#444\"/>\n";
            out << "<text x=\"" << detail::svg_num(px(gx)) << "\" y=\""
                << detail::svg_num(y1 + 18) << "\" text-anchor=\"middle\">"
                << detail::svg_num(gx) << "</text>\n";
            out << "<line x1=\"" << detail::svg_num(x0 - 5) << "\" y1=\""
                << detail::svg_num(py(gy)) << "\" x2=\"" << detail::svg_num(x0)
                << "\" y2=\"" << detail::svg_num(py(gy)) << "\" stroke=\"#444\"/>\n";
            out << "<text x=\"" << detail::svg_num(x0 - 8) << "\" y=\""
                << detail::svg_num(py(gy) + 4) << "\" text-anchor=\"end\">"
                << detail::svg_num(gy) << "</text>\n";
        }
        if (gy_lo < 0.0 && gy_hi > 0.0)
            out << "<line x1=\"" << detail::svg_num(x0) << "\" y1=\""
                << detail::svg_num(py(0)) << "\" x2=\"" << detail::svg_num(x1)
                << "\" y2=\"" << detail::svg_num(py(0))
                << "\" stroke=\"#bbb\" stroke-dasharray=\"4 3\"/>\n";
        out << "<text x=\"" << detail::svg_num(0.5 * (x0 + x1)) << "\" y=\""
            << detail::svg_num(ph - 16) << "\" text-anchor=\"middle\">"
            << "perturbation</text>\n";
        out << "<text x=\"" << detail::svg_num(panel * pw + 18) << "\" y=\""
            << detail::svg_num(0.5 * (y0 + y1)) << "\" text-anchor=\"middle\""
            << " transform=\"rotate(-90 " << detail::svg_num(panel * pw + 18) << ' '
            << detail::svg_num(0.5 * (y0 + y1)) << ")\">sensitivity index</text>\n";

        double legend_y = y0 + 16;
        for (const auto& c : result.curves) {
            if (c.grid_kind != kind) continue;
            const char* color = palette[(c.input - 1) % palette.size()];

            // confidence band, split at gaps
            std::size_t i = 0;
            while (i < c.grid.size()) {
                while (i < c.grid.size() && (!c.valid[i] || c.points[i].degenerate)) ++i;
                std::size_t j = i;
                while (j < c.grid.size() && c.valid[j] && !c.points[j].degenerate) ++j;
                if (j > i + 1) {
                    out << "<path fill=\"" << color << "\" fill-opacity=\"0.18\" "
                        << "stroke=\"none\" d=\"M";
                    for (std::size_t k = i; k < j; ++k)
                        out << detail::svg_num(px(c.grid[k])) << ' '
                            << detail::svg_num(py(std::clamp(c.points[k].ci_hi, gy_lo,
                                                             gy_hi)))
                            << (k + 1 < j ? " L" : " ");
                    for (std::size_t k = j; k-- > i;)
                        out << "L" << detail::svg_num(px(c.grid[k])) << ' '
                            << detail::svg_num(py(std::clamp(c.points[k].ci_lo, gy_lo,
                                                             gy_hi)))
                            << ' ';
                    out << "Z\"/>\n";
                }
                i = j;
            }
            // index polyline, split at gaps
            i = 0;
            while (i < c.grid.size()) {
                while (i < c.grid.size() && (!c.valid[i] || c.points[i].degenerate)) ++i;
                std::size_t j = i;
                while (j < c.grid.size() && c.valid[j] && !c.points[j].degenerate) ++j;
                if (j > i) {
                    out << "<polyline fill=\"none\" stroke=\"" << color
                        << "\" stroke-width=\"1.6\" points=\"";
                    for (std::size_t k = i; k < j; ++k)
                        out << detail::svg_num(px(c.grid[k])) << ','
                            << detail::svg_num(
                                   py(std::clamp(c.points[k].s_hat, gy_lo, gy_hi)))
                            << ' ';
                    out << "\"/>\n";
                }
                i = j;
            }

            out << "<line x1=\"" << detail::svg_num(x1 - 86) << "\" y1=\""
                << detail::svg_num(legend_y - 4) << "\" x2=\"" << detail::svg_num(x1 - 62)
                << "\" y2=\"" << detail::svg_num(legend_y - 4) << "\" stroke=\"" << color
                << "\" stroke-width=\"2\"/>\n";
            out << "<text x=\"" << detail::svg_num(x1 - 56) << "\" y=\""
                << detail::svg_num(legend_y) << "\">x" << c.input << "</text>\n";
            legend_y += 16;
        }
        out << "</g>\n";
    }
    out << "</svg>\n";
}

/// FORM summary table.
inline void emit_form_csv(const StudyResult& result, const std::filesystem::path& path) {
    if (!result.form) return;
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("emit_form_csv: cannot write '" + path.string() + "'");
    const FormResult& fr = *result.form;
    out << "input,u_star,alpha,importance_factor,beta_hl,p_form,converged,iterations,"
           "model_calls\n";
    for (std::size_t j = 0; j < fr.design_point.u_star.size(); ++j) {
        out << (j + 1) << ',' << detail::format_double(fr.design_point.u_star[j]) << ','
            << detail::format_double(fr.design_point.alpha[j]) << ','
            << (fr.factors.empty() ? std::string()
                                   : detail::format_double(fr.factors[j]))
            << ',' << detail::format_double(fr.design_point.beta_hl) << ','
            << detail::format_double(fr.p_form) << ','
            << (fr.design_point.converged ? "true" : "false") << ','
            << fr.design_point.iterations << ',' << fr.design_point.model_calls << '\n';
    }
}

/// Pick-freeze summary with replication means and coefficients of variation.
inline void emit_sobol_csv(const StudyResult& result, const std::filesystem::path& path) {
    if (!result.sobol) return;
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("emit_sobol_csv: cannot write '" + path.string() + "'");
    const SobolSummary& s = *result.sobol;
    out << "input,s_first,s_total,s_first_mean,s_first_cov,s_total_mean,s_total_cov,"
           "n_base,replications\n";
    for (std::size_t j = 0; j < s.primary.first_order.size(); ++j) {
        out << (j + 1) << ',' << detail::format_double(s.primary.first_order[j]) << ','
            << detail::format_double(s.primary.total[j]) << ','
            << detail::format_double(s.first_mean[j]) << ','
            << detail::format_double(s.first_cov[j]) << ','
            << detail::format_double(s.total_mean[j]) << ','
            << detail::format_double(s.total_cov[j]) << ',' << s.primary.n_base << ','
            << s.replications << '\n';
    }
}

} // namespace relsa

#endif
