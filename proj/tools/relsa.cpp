// Command-line front end: run declarative reliability sensitivity studies and
// list the registered benchmark models.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include "relsa/relsa.hpp"

namespace {

void print_summary(const relsa::StudyResult& result) {
    const auto& p = result.probability;
    std::printf("model: %s  (n = %zu, seed = %llu)\n", result.config.model.c_str(),
                result.config.n,
                static_cast<unsigned long long>(result.config.seed));
    std::printf("failure probability: %.6g  [%.6g, %.6g] at %.0f%%%s\n", p.p_hat, p.ci_lo,
                p.ci_hi, 100.0 * p.level, p.degenerate ? "  (degenerate: no failures)" : "");
    for (const auto& curve : result.curves) {
        std::size_t failed = 0;
        for (auto v : curve.valid)
            if (!v) ++failed;
        std::printf("curve: input %zu, %s, %zu points", curve.input,
                    relsa::grid_kind_name(
                        static_cast<relsa::PerturbationGrid::Kind>(curve.grid_kind)),
                    curve.grid.size());
        if (failed > 0) std::printf(" (%zu skipped)", failed);
        std::printf("\n");
        for (std::size_t i = 0; i < curve.grid.size(); ++i)
            if (!curve.valid[i])
                std::printf("  skipped %.6g: %s\n", curve.grid[i],
                            curve.failure_reasons[i].c_str());
    }
    if (result.form) {
        const auto& fr = *result.form;
        if (fr.design_point.converged) {
            std::printf("form: beta = %.6g, p_form = %.6g, %d iterations, %lld calls\n",
                        fr.design_point.beta_hl, fr.p_form, fr.design_point.iterations,
                        fr.design_point.model_calls);
            std::printf("form importance factors:");
            for (double f : fr.factors) std::printf(" %.4g", f);
            std::printf("\n");
        } else {
            std::printf("form: did not converge after %d iterations (%lld calls)\n",
                        fr.design_point.iterations, fr.design_point.model_calls);
        }
    }
    if (result.sobol) {
        const auto& s = *result.sobol;
        std::printf("sobol (n_base = %zu, %d replications):\n", s.primary.n_base,
                    s.replications);
        for (std::size_t j = 0; j < s.primary.first_order.size(); ++j)
            std::printf("  x%zu: S = %.4g (cov %.3g), ST = %.4g (cov %.3g)\n", j + 1,
                        s.first_mean[j], s.first_cov[j], s.total_mean[j], s.total_cov[j]);
    }
    std::printf("model calls: design %lld, curves %lld, form %lld, sobol %lld\n",
                result.design_calls, result.curve_calls, result.form_calls,
                result.sobol_calls);
    std::printf("wall time: %.2f s\n", result.wall_seconds);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reliability sensitivity analysis studies"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    long long seed = -1;
    int replications = 0;
    int threads = 1;
    bool quiet = false;

    CLI::App* run = app.add_subcommand("run", "run a study described by a config file");
    run->add_option("--config", config_path, "study config file")->required();
    run->add_option("--seed", seed, "override the config seed");
    run->add_option("--out-dir", out_dir, "override the output directory");
    run->add_option("--replications", replications, "override the replication count");
    run->add_option("--threads", threads, "worker threads for curve evaluation");
    run->add_flag("--quiet", quiet, "suppress the summary printout");

    CLI::App* models = app.add_subcommand("models", "list registered models");

    CLI11_PARSE(app, argc, argv);

    if (models->parsed()) {
        for (const std::string& name : relsa::model_names()) {
            const relsa::FailureModel m = relsa::make_model(name);
            std::printf("%-20s d=%zu ", name.c_str(), m.dim());
            for (std::size_t j = 0; j < m.dim(); ++j)
                std::printf("%s%s", m.marginals()[j].to_string().c_str(),
                            j + 1 < m.dim() ? ", " : "\n");
        }
        return 0;
    }

    try {
        relsa::StudyConfig cfg = relsa::parse_config_file(config_path);
        if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (replications > 0) cfg.replications = replications;

        const relsa::StudyResult result = relsa::run_study(cfg, std::max(threads, 1));

        namespace fs = std::filesystem;
        fs::create_directories(cfg.out_dir);
        relsa::emit_csv(result, fs::path(cfg.out_dir) / "curves.csv");
        relsa::emit_svg(result, fs::path(cfg.out_dir) / "curves.svg");
        if (result.form)
            relsa::emit_form_csv(result, fs::path(cfg.out_dir) / "form.csv");
        if (result.sobol)
            relsa::emit_sobol_csv(result, fs::path(cfg.out_dir) / "sobol.csv");

        if (!quiet) print_summary(result);
        return 0;
    } catch (const relsa::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
