// Command-line front end for the audit toolkit. Every subcommand reads one
// JSON config; stages communicate through files under the configured output
// directory, so they can run separately or chained via `run`.

#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "serpaudit/pipeline.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "experiment config (JSON)")->required();
    cmd->add_option("--seed", args.seed, "override the config seed");
    cmd->add_option("--out", args.out, "override the config output directory");
}

serpaudit::ExperimentConfig load(const CommonArgs& args) {
    auto cfg = serpaudit::load_experiment_config(args.config_path);
    if (args.seed) cfg.seed = *args.seed;
    if (args.out) cfg.output_dir = *args.out;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"search personalization audit toolkit"};
    app.require_subcommand(1);

    CommonArgs genpop_args, lexicon_args, simulate_args, panel_args, fit_args, report_args, run_args;
    auto* genpop = app.add_subcommand("genpop", "generate the synthetic user population");
    add_common(genpop, genpop_args);
    auto* lexicon = app.add_subcommand("lexicon", "build partisan domain lists and search terms from corpora");
    add_common(lexicon, lexicon_args);
    auto* simulate = app.add_subcommand("simulate", "run the daily browsing and election-query experiments");
    add_common(simulate, simulate_args);
    auto* panel = app.add_subcommand("panel", "build the analysis panel from recorded pages");
    add_common(panel, panel_args);
    auto* fit = app.add_subcommand("fit", "estimate the regression suite");
    add_common(fit, fit_args);
    auto* report = app.add_subcommand("report", "emit similarity tables, effect tables, and SVG charts");
    add_common(report, report_args);
    auto* run = app.add_subcommand("run", "full pipeline: genpop, simulate, panel, fit, report");
    add_common(run, run_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (genpop->parsed()) {
            serpaudit::stage_genpop(load(genpop_args));
        } else if (lexicon->parsed()) {
            serpaudit::stage_lexicon(load(lexicon_args));
        } else if (simulate->parsed()) {
            serpaudit::stage_simulate(load(simulate_args));
        } else if (panel->parsed()) {
            serpaudit::stage_panel(load(panel_args));
        } else if (fit->parsed()) {
            serpaudit::stage_fit(load(fit_args));
        } else if (report->parsed()) {
            serpaudit::stage_report(load(report_args));
        } else if (run->parsed()) {
            serpaudit::run_experiment(load(run_args));
        }
    } catch (const std::exception& e) {
        std::string msg = e.what();
        for (auto& c : msg) {
            if (c == '\n' || c == '\r') c = ' ';
        }
        std::fprintf(stderr, "error: %s\n", msg.c_str());
        return 1;
    }
    return 0;
}
