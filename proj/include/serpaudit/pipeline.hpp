#pragma once

// File-based pipeline stages behind the CLI subcommands: genpop, simulate,
// panel, fit, report, and the lexicon construction pipeline. Stages talk to
// each other only through files under the configured output directory, so
// records produced elsewhere can be dropped in with the same schema.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "serpaudit/experiment.hpp"
#include "serpaudit/lexicon.hpp"
#include "serpaudit/panel.hpp"
#include "serpaudit/regression.hpp"
#include "serpaudit/report.hpp"

namespace serpaudit {

namespace paths {
inline std::filesystem::path population(const ExperimentConfig& c) { return std::filesystem::path(c.output_dir) / "population.jsonl"; }
inline std::filesystem::path serps(const ExperimentConfig& c) { return std::filesystem::path(c.output_dir) / "serps.jsonl"; }
inline std::filesystem::path events(const ExperimentConfig& c) { return std::filesystem::path(c.output_dir) / "events.jsonl"; }
inline std::filesystem::path panel(const ExperimentConfig& c) { return std::filesystem::path(c.output_dir) / "panel.csv"; }
inline std::filesystem::path panel_topstories(const ExperimentConfig& c) { return std::filesystem::path(c.output_dir) / "panel_topstories.csv"; }
inline std::filesystem::path fixtures(const ExperimentConfig& c) { return std::filesystem::path(c.output_dir) / "fixtures"; }
inline std::filesystem::path fit_dir(const ExperimentConfig& c) { return std::filesystem::path(c.output_dir) / "fit"; }
inline std::filesystem::path report_dir(const ExperimentConfig& c) { return std::filesystem::path(c.output_dir) / "report"; }
inline std::filesystem::path lexicon_dir(const ExperimentConfig& c) { return std::filesystem::path(c.output_dir) / "lexicon"; }
inline std::filesystem::path manifest(const ExperimentConfig& c) { return std::filesystem::path(c.output_dir) / "manifest.json"; }
}  // namespace paths

namespace detail {

inline void require_file(const std::filesystem::path& p, const std::string& what) {
    if (!std::filesystem::exists(p)) {
        throw std::runtime_error(what + " missing: " + p.string());
    }
}

inline std::ofstream open_out(const std::filesystem::path& p) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    return f;
}

inline std::ifstream open_in(const std::filesystem::path& p, const std::string& what) {
    require_file(p, what);
    std::ifstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + p.string());
    return f;
}

}  // namespace detail

// --- genpop -------------------------------------------------------------------

inline Population stage_genpop(const ExperimentConfig& cfg) {
    const auto pop = generate_population(cfg.population, cfg.seed);
    auto f = detail::open_out(paths::population(cfg));
    for (const auto& u : pop.users) f << to_json(u).dump() << '\n';
    return pop;
}

inline Population load_population(const ExperimentConfig& cfg) {
    auto f = detail::open_in(paths::population(cfg), "population file (run genpop)");
    Population pop;
    for (const auto& c : cfg.population.cities) {
        pop.cities.push_back({c.name, c.rep_vote_share,
                              classify_city(c.rep_vote_share, cfg.population.dem_threshold, cfg.population.rep_threshold),
                              c.utc_offset_hours});
    }
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        pop.users.push_back(user_from_json(nlohmann::json::parse(line)));
    }
    if (pop.users.empty()) throw std::runtime_error("population file is empty: " + paths::population(cfg).string());
    return pop;
}

// --- fixture resolution ---------------------------------------------------------

inline std::filesystem::path effective_index_csv(const ExperimentConfig& cfg) {
    if (cfg.index_csv) return *cfg.index_csv;
    return paths::fixtures(cfg) / "index.csv";
}
inline std::filesystem::path effective_ideology_csv(const ExperimentConfig& cfg) {
    if (cfg.ideology_csv) return *cfg.ideology_csv;
    if (cfg.index_synth) return paths::fixtures(cfg) / "ideology.csv";
    throw std::runtime_error("config: ideology_csv required when the index is not synthesized");
}
inline std::filesystem::path effective_labels_csv(const ExperimentConfig& cfg) {
    if (cfg.localness_labels_csv) return *cfg.localness_labels_csv;
    if (cfg.localness_metadata_csv) return std::filesystem::path(cfg.output_dir) / "localness_labels.csv";
    if (cfg.index_synth) return paths::fixtures(cfg) / "localness_labels.csv";
    throw std::runtime_error("config: localness labels or metadata required when the index is not synthesized");
}

// Writes index/ideology/localness fixture files derived from the config.
inline void materialize_fixtures(const ExperimentConfig& cfg, const Population& pop) {
    if (!cfg.index_synth) return;
    const auto fx = build_synthetic_fixtures(cfg, pop);
    const auto dir = paths::fixtures(cfg);
    {
        auto f = detail::open_out(dir / "index.csv");
        fx.index.write_csv(f);
    }
    {
        auto f = detail::open_out(dir / "ideology.csv");
        csv::write_row(f, {"domain", "alignment", "partisanship", "mturk", "pew", "audience_bias"});
        // raw values on [-1,1]; metadata order is already sorted by domain
        for (const auto& m : fx.metadata) {
            std::vector<std::string> row{m.domain};
            const auto* scores = fx.ideology.raw(m.domain);
            for (std::size_t slot = 0; slot < kIdeologyIndexCount; ++slot) {
                const auto& v = (*scores)[slot];
                row.push_back(v ? csv::format_double(*v / 100.0) : "");
            }
            csv::write_row(f, row);
        }
    }
    {
        auto f = detail::open_out(dir / "localness_metadata.csv");
        csv::write_row(f, {"domain", "tld", "description_text", "collections"});
        for (const auto& m : fx.metadata) {
            std::string coll;
            for (const auto& tag : m.collection_memberships) {
                if (!coll.empty()) coll += ';';
                coll += tag;
            }
            csv::write_row(f, {m.domain, m.tld, m.description_text, coll});
        }
    }
    {
        auto out = detail::open_out(dir / "localness_labels.csv");
        auto review = detail::open_out(dir / "localness_review.txt");
        classify_batch(fx.metadata, fx.lexicon, out, review);
    }
    for (const auto& [name, terms] :
         std::map<std::string, const std::set<std::string>*>{{"places.txt", &fx.lexicon.us_place_names},
                                                             {"local_indicators.txt", &fx.lexicon.local_indicators},
                                                             {"nonlocal_indicators.txt", &fx.lexicon.nonlocal_indicators}}) {
        auto f = detail::open_out(dir / name);
        for (const auto& t : *terms) f << t << '\n';
    }
}

// --- simulate -------------------------------------------------------------------

inline SimulationResult stage_simulate(const ExperimentConfig& cfg) {
    const auto pop = load_population(cfg);
    if (cfg.index_csv) detail::require_file(*cfg.index_csv, "web index fixture");
    materialize_fixtures(cfg, pop);

    WebIndex index;
    {
        auto f = detail::open_in(effective_index_csv(cfg), "web index fixture");
        index = WebIndex::read_csv(f);
    }
    auto result = simulate_run(cfg, pop, index);
    {
        auto f = detail::open_out(paths::serps(cfg));
        write_serp_jsonl(f, result.serps);
    }
    {
        auto f = detail::open_out(paths::events(cfg));
        write_events_jsonl(f, result.events);
    }
    return result;
}

// --- panel ----------------------------------------------------------------------

inline IdeologyTable load_ideology(const ExperimentConfig& cfg) {
    auto f = detail::open_in(effective_ideology_csv(cfg), "ideology fixture");
    return IdeologyTable::load_csv(f, cfg.merge_policy);
}

inline std::map<std::string, LocalLabel> load_localness(const ExperimentConfig& cfg) {
    if (!cfg.localness_labels_csv && cfg.localness_metadata_csv) {
        // classify from metadata + word lists; Unresolved rows go to review
        if (!cfg.places_file || !cfg.local_indicators_file || !cfg.nonlocal_indicators_file) {
            throw std::runtime_error("config: localness metadata mode needs places/local_indicators/nonlocal_indicators");
        }
        const auto lexicon = PlaceLexicon::load(*cfg.places_file, *cfg.local_indicators_file, *cfg.nonlocal_indicators_file);
        auto metas_f = detail::open_in(*cfg.localness_metadata_csv, "localness metadata fixture");
        const auto metas = read_metadata_csv(metas_f);
        auto out = detail::open_out(std::filesystem::path(cfg.output_dir) / "localness_labels.csv");
        auto review = detail::open_out(std::filesystem::path(cfg.output_dir) / "localness_review.txt");
        return classify_batch(metas, lexicon, out, review);
    }
    auto f = detail::open_in(effective_labels_csv(cfg), "localness labels fixture");
    return read_labels_csv(f);
}

struct PanelOutputs {
    std::vector<PanelRow> organic;
    std::vector<PanelRow> top_stories;
};

inline PanelOutputs stage_panel(const ExperimentConfig& cfg) {
    const auto pop = load_population(cfg);
    const auto ideology = load_ideology(cfg);
    const auto localness = load_localness(cfg);
    std::vector<SerpRecord> serps;
    {
        auto f = detail::open_in(paths::serps(cfg), "serp records (run simulate)");
        serps = read_serp_jsonl(f);
    }
    std::vector<VisitEvent> events;
    {
        auto f = detail::open_in(paths::events(cfg), "visit log (run simulate)");
        events = read_events_jsonl(f);
    }
    PanelOutputs out;
    out.organic = build_panel(serps, pop, ideology, localness, events, cfg.persistence(), ListKind::organic);
    out.top_stories = build_panel(serps, pop, ideology, localness, events, cfg.persistence(), ListKind::top_stories);
    {
        auto f = detail::open_out(paths::panel(cfg));
        write_panel_csv(f, out.organic);
    }
    {
        auto f = detail::open_out(paths::panel_topstories(cfg));
        write_panel_csv(f, out.top_stories);
    }
    return out;
}

// --- fit ------------------------------------------------------------------------

inline const std::vector<std::string> kFitFixedEffects = {"date", "query", "lang"};
inline const std::vector<std::string> kFitClusterDims = {"user", "query", "date"};

inline void write_fit_csv(std::ostream& os, const econ::FitResult& fit) {
    csv::write_row(os, {"term", "estimate", "clustered_se", "t", "p"});
    for (std::size_t i = 0; i < fit.names.size(); ++i) {
        if (fit.names[i].find('=') != std::string::npos) continue;  // absorbed fixed-effect dummies
        csv::write_row(os, {fit.names[i], csv::format_double(fit.beta(static_cast<Eigen::Index>(i))),
                            csv::format_double(fit.se(i)), csv::format_double(fit.tstat(i)),
                            csv::format_double(fit.pvalue(i))});
    }
}

inline void write_effects_csv(std::ostream& os, const econ::MarginalEffectsResult& res) {
    csv::write_row(os, {"level", "estimate", "clustered_se", "ci_lo", "ci_hi", "n_at_level"});
    for (const auto& e : res.effects) {
        csv::write_row(os, {std::to_string(e.level), csv::format_double(e.estimate), csv::format_double(e.se),
                            csv::format_double(e.ci_lo), csv::format_double(e.ci_hi), std::to_string(e.n_at_level)});
    }
}

inline long long min_driver_level(const econ::Dataset& d, const std::string& driver, const std::string& outcome) {
    const auto& drv = d.numeric(driver);
    const auto& out = d.numeric(outcome);
    std::optional<long long> lo;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (econ::is_missing(drv[i]) || econ::is_missing(out[i])) continue;
        const long long v = std::llround(drv[i]);
        if (!lo || v < *lo) lo = v;
    }
    if (!lo) throw std::invalid_argument("no usable observations for driver " + driver);
    return *lo;
}

struct FitStageResult {
    std::map<std::string, econ::FitResult> fits;                       // named linear models
    std::map<std::string, econ::MarginalEffectsResult> effects;        // dummy marginal-effect models
    nlohmann::json summary;
};

// The regression suite: familiarity marginal effects and linear variants,
// SRIS models for the four domain subsets, the Democrat-vs-Republican
// hypothesis tests, and the continuous-regressor variants. Estimator
// choices (HC1-style per-component scaling, normal reference for p-values)
// are recorded in the summary metadata.
inline FitStageResult run_fit_models(const ExperimentConfig& cfg, const std::vector<PanelRow>& organic,
                                     const std::vector<PanelRow>& top_stories) {
    FitStageResult out;
    out.summary["estimator"] = {{"clustering", "inclusion-exclusion multiway, HC1-style factor per component"},
                                {"p_values", "standard normal reference"},
                                {"fixed_effects", kFitFixedEffects},
                                {"cluster_dims", kFitClusterDims},
                                {"outlier_trim_top_pct", 0.5},
                                {"dummy_reference", "lowest observed level"}};

    const auto trimmed = trim_outliers(organic, 0.5);
    const auto data = panel_dataset(trimmed);
    out.summary["n_panel_rows"] = organic.size();
    out.summary["n_after_trim"] = trimmed.size();

    auto note_model = [&out](const std::string& name, const econ::FitResult& fit) {
        nlohmann::json j;
        j["n_obs"] = fit.n_obs;
        j["n_clusters"] = fit.n_clusters;
        j["dropped_columns"] = fit.dropped_columns;
        out.summary["models"][name] = j;
    };
    auto skip_model = [&out](const std::string& name, const std::string& why) {
        out.summary["models"][name] = {{"skipped", why}};
    };

    // familiarity: dummy marginal effects (organic, then top stories)
    struct EffectSpec {
        std::string name;
        const econ::Dataset* data;
        std::string outcome;
    };
    const auto ts_trimmed = trim_outliers(top_stories, 0.5);
    const auto ts_data = panel_dataset(ts_trimmed);
    const std::vector<EffectSpec> effect_specs = {
        {"familiarity_dummies", &data, "n_familiar"},
        {"familiar_rank_dummies", &data, "top_familiar_rank"},
        {"familiarity_dummies_topstories", &ts_data, "n_familiar"},
    };
    for (const auto& spec : effect_specs) {
        try {
            const auto reference = min_driver_level(*spec.data, "prior_visits", spec.outcome);
            auto res = econ::dummy_marginal_effects(*spec.data, spec.outcome, "prior_visits", reference,
                                                    kFitFixedEffects, kFitClusterDims);
            note_model(spec.name, res.fit);
            out.effects.emplace(spec.name, std::move(res));
        } catch (const std::exception& e) {
            skip_model(spec.name, e.what());
        }
    }

    // linear variants
    struct LinearSpec {
        std::string name;
        const econ::Dataset* data;
        std::string outcome;
        std::vector<std::string> regressors;
    };
    const std::vector<LinearSpec> linear_specs = {
        {"familiarity_linear", &data, "n_familiar", {"prior_visits", "prior_searches"}},
        {"familiar_rank_linear", &data, "top_familiar_rank", {"prior_visits"}},
        {"any_familiar_linear", &data, "any_familiar", {"prior_visits"}},
        {"familiarity_linear_topstories", &ts_data, "n_familiar", {"prior_visits", "prior_searches"}},
        {"sris_new", &data, "sris_new", {"user_dem", "user_rep", "city_dem", "city_rep"}},
        {"sris_all", &data, "sris_all", {"user_dem", "user_rep", "city_dem", "city_rep"}},
        {"sris_new_local", &data, "sris_new_local", {"user_dem", "user_rep", "city_dem", "city_rep"}},
        {"sris_new_nonlocal", &data, "sris_new_nonlocal", {"user_dem", "user_rep", "city_dem", "city_rep"}},
        {"sris_new_continuous", &data, "sris_new", {"visited_sites_ideology", "city_rep_share"}},
        {"sris_all_continuous", &data, "sris_all", {"visited_sites_ideology", "city_rep_share"}},
        {"sris_new_local_continuous", &data, "sris_new_local", {"visited_sites_ideology", "city_rep_share"}},
        {"sris_new_nonlocal_continuous", &data, "sris_new_nonlocal", {"visited_sites_ideology", "city_rep_share"}},
    };
    for (const auto& spec : linear_specs) {
        try {
            auto fit = econ::ols_fe(*spec.data, spec.outcome, spec.regressors, kFitFixedEffects);
            econ::cluster_vcov(fit, *spec.data, kFitClusterDims);
            note_model(spec.name, fit);
            out.fits.emplace(spec.name, std::move(fit));
        } catch (const std::exception& e) {
            skip_model(spec.name, e.what());
        }
    }
    return out;
}

inline FitStageResult stage_fit(const ExperimentConfig& cfg) {
    std::vector<PanelRow> organic, top_stories;
    {
        auto f = detail::open_in(paths::panel(cfg), "panel (run panel)");
        organic = read_panel_csv(f);
    }
    if (std::filesystem::exists(paths::panel_topstories(cfg))) {
        auto f = detail::open_in(paths::panel_topstories(cfg), "top-stories panel");
        top_stories = read_panel_csv(f);
    }
    auto res = run_fit_models(cfg, organic, top_stories);

    const auto dir = paths::fit_dir(cfg);
    for (const auto& [name, fit] : res.fits) {
        auto f = detail::open_out(dir / (name + ".csv"));
        write_fit_csv(f, fit);
    }
    for (const auto& [name, eff] : res.effects) {
        auto f = detail::open_out(dir / (name + ".csv"));
        write_effects_csv(f, eff);
    }
    // Democrat vs Republican hypothesis tests on the subset models
    {
        auto f = detail::open_out(dir / "linear_hypotheses.csv");
        csv::write_row(f, {"model", "hypothesis", "wald", "p"});
        for (const auto* model : {"sris_new", "sris_all", "sris_new_local", "sris_new_nonlocal"}) {
            const auto it = res.fits.find(model);
            if (it == res.fits.end()) continue;
            for (const auto& [label, a, b] :
                 std::vector<std::tuple<std::string, std::string, std::string>>{
                     {"user_dem=user_rep", "user_dem", "user_rep"}, {"city_dem=city_rep", "city_dem", "city_rep"}}) {
                const auto test = econ::linear_hypothesis(it->second, a, b);
                csv::write_row(f, {model, label, csv::format_double(test.statistic), csv::format_double(test.p_value)});
            }
        }
    }
    {
        auto f = detail::open_out(dir / "fit_summary.json");
        f << res.summary.dump(2) << '\n';
    }
    return res;
}

// --- report ---------------------------------------------------------------------

inline void stage_report(const ExperimentConfig& cfg) {
    const auto dir = paths::report_dir(cfg);
    const auto fit = paths::fit_dir(cfg);
    detail::require_file(paths::serps(cfg), "report artifact serps.jsonl");
    detail::require_file(paths::panel(cfg), "report artifact panel.csv");
    detail::require_file(fit / "familiarity_dummies.csv", "report artifact fit/familiarity_dummies.csv");
    detail::require_file(fit / "linear_hypotheses.csv", "report artifact fit/linear_hypotheses.csv");

    std::vector<SerpRecord> serps;
    {
        auto f = detail::open_in(paths::serps(cfg), "report artifact serps.jsonl");
        serps = read_serp_jsonl(f);
    }
    const auto rows = pairwise_similarity(serps, cfg.similarity.max_gap_hours, cfg.persistence());
    {
        auto f = detail::open_out(dir / "similarity.csv");
        write_similarity_csv(f, rows);
    }

    nlohmann::json summary;
    for (const std::string kind : {"organic", "top_stories"}) {
        std::vector<double> jac, rbo;
        for (const auto& r : rows) {
            if (r.list_kind != kind) continue;
            jac.push_back(r.jaccard);
            rbo.push_back(r.rbo_ext);
        }
        if (jac.empty()) continue;
        for (const auto& [metric, values] : std::map<std::string, const std::vector<double>*>{
                 {"jaccard", &jac}, {"rbo_ext", &rbo}}) {
            const auto hist = report::make_histogram(*values, cfg.similarity.histogram_bins, 0.0, 1.0);
            {
                auto f = detail::open_out(dir / ("similarity_hist_" + metric + "_" + kind + ".csv"));
                report::write_histogram_csv(f, hist);
            }
            {
                auto f = detail::open_out(dir / ("similarity_hist_" + metric + "_" + kind + ".svg"));
                f << report::svg_histogram(hist, metric + " similarity (" + kind + ")", metric);
            }
            summary["similarity"][kind][metric] = {{"mean", hist.mean}, {"median", hist.median}, {"n", hist.n}};
        }
    }

    // similarity vs time-gap sweep
    {
        auto f = detail::open_out(dir / "timegap_curve.csv");
        csv::write_row(f, {"threshold_hours", "list_kind", "mean_jaccard", "mean_rbo_ext", "n_pairs"});
        std::map<std::string, std::map<std::string, std::vector<double>>> series;  // kind -> metric -> per threshold
        for (const std::string kind : {"organic", "top_stories"}) {
            for (double thr : cfg.similarity.gap_thresholds) {
                double sj = 0, sr = 0;
                std::size_t n = 0;
                for (const auto& r : rows) {
                    if (r.list_kind != kind || r.gap_hours > thr) continue;
                    sj += r.jaccard;
                    sr += r.rbo_ext;
                    ++n;
                }
                const double mj = n ? sj / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
                const double mr = n ? sr / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
                csv::write_row(f, {csv::format_double(thr), kind,
                                   n ? csv::format_double(mj) : "", n ? csv::format_double(mr) : "",
                                   std::to_string(n)});
                series[kind]["jaccard"].push_back(mj);
                series[kind]["rbo_ext"].push_back(mr);
            }
        }
        for (const auto& [kind, metrics] : series) {
            bool any = false;
            for (const auto& [_, vals] : metrics)
                for (double v : vals) any |= !std::isnan(v);
            if (!any) continue;
            auto svg = detail::open_out(dir / ("timegap_curve_" + kind + ".svg"));
            svg << report::svg_lines(cfg.similarity.gap_thresholds, {{"jaccard", metrics.at("jaccard")},
                                                                     {"rbo_ext", metrics.at("rbo_ext")}},
                                     "similarity vs max time gap (" + kind + ")", "max gap (hours)", "mean similarity");
        }
    }

    // marginal-effect charts from the fit tables
    auto effects_chart = [&](const std::string& model, const std::string& title, const std::string& ylabel) {
        const auto path = fit / (model + ".csv");
        if (!std::filesystem::exists(path)) return;
        auto f = detail::open_in(path, "report artifact " + path.string());
        const auto table = csv::Table::read(f);
        std::vector<report::DotCi> points;
        for (const auto& row : table.rows) {
            report::DotCi p;
            p.x = csv::to_double(row[table.col("level")], "level");
            p.estimate = csv::to_double(row[table.col("estimate")], "estimate");
            p.ci_lo = csv::to_double(row[table.col("ci_lo")], "ci_lo");
            p.ci_hi = csv::to_double(row[table.col("ci_hi")], "ci_hi");
            points.push_back(p);
        }
        auto svg = detail::open_out(dir / (model + ".svg"));
        svg << report::svg_dot_ci(points, title, "previous visits to familiar websites", ylabel);
    };
    effects_chart("familiarity_dummies", "familiar domains on page vs previous visits", "marginal effect");
    effects_chart("familiar_rank_dummies", "top familiar rank vs previous visits", "marginal effect");
    effects_chart("familiarity_dummies_topstories", "familiar domains in top stories vs previous visits",
                  "marginal effect");

    // SRIS coefficient tables and charts
    {
        auto collated = detail::open_out(dir / "sris_effects.csv");
        csv::write_row(collated, {"model", "term", "estimate", "clustered_se", "t", "p"});
        for (const std::string model : {"sris_new", "sris_all", "sris_new_local", "sris_new_nonlocal"}) {
            const auto path = fit / (model + ".csv");
            if (!std::filesystem::exists(path)) continue;
            auto f = detail::open_in(path, "report artifact " + path.string());
            const auto table = csv::Table::read(f);
            std::vector<report::DotCi> points;
            double x = 1.0;
            for (const auto& row : table.rows) {
                const auto& term = row[table.col("term")];
                if (term == "(intercept)") continue;
                const double est = csv::to_double(row[table.col("estimate")], "estimate");
                const double se = csv::to_double(row[table.col("clustered_se")], "clustered_se");
                csv::write_row(collated, {model, term, row[table.col("estimate")], row[table.col("clustered_se")],
                                          row[table.col("t")], row[table.col("p")]});
                points.push_back({term, x, est, est - 1.959963984540054 * se, est + 1.959963984540054 * se});
                x += 1.0;
            }
            auto svg = detail::open_out(dir / (model + ".svg"));
            svg << report::svg_dot_ci(points, "ideology score effects (" + model + ")",
                                      "1=user Dem  2=user Rep  3=city Dem  4=city Rep", "effect on score");
        }
    }
    // continuous variants, collated
    {
        auto collated = detail::open_out(dir / "sris_continuous.csv");
        csv::write_row(collated, {"model", "term", "estimate", "clustered_se", "t", "p"});
        for (const std::string model :
             {"sris_new_continuous", "sris_all_continuous", "sris_new_local_continuous", "sris_new_nonlocal_continuous"}) {
            const auto path = fit / (model + ".csv");
            if (!std::filesystem::exists(path)) continue;
            auto f = detail::open_in(path, "report artifact " + path.string());
            const auto table = csv::Table::read(f);
            for (const auto& row : table.rows) {
                if (row[table.col("term")] == "(intercept)") continue;
                csv::write_row(collated, {model, row[table.col("term")], row[table.col("estimate")],
                                          row[table.col("clustered_se")], row[table.col("t")], row[table.col("p")]});
            }
        }
    }
    {
        auto f = detail::open_out(dir / "report_summary.json");
        summary["n_similarity_rows"] = rows.size();
        f << summary.dump(2) << '\n';
    }
}

// --- lexicon stage ----------------------------------------------------------------

inline void stage_lexicon(const ExperimentConfig& cfg) {
    const auto dir = paths::lexicon_dir(cfg);
    const auto& lx = cfg.lexicon;
    nlohmann::json summary;

    if (lx.corpus_csv) {
        auto f = detail::open_in(*lx.corpus_csv, "lexicon corpus fixture");
        const auto corpus = lexicon::read_corpus_csv(f);
        for (const auto side : {lexicon::Side::democrat, lexicon::Side::republican}) {
            const auto top = lexicon::top_partisan_items(corpus, lx.top_domains, side);
            const std::string name = side == lexicon::Side::democrat ? "top_domains_democrat" : "top_domains_republican";
            auto out = detail::open_out(dir / (name + ".csv"));
            csv::write_row(out, {"item", "chi_square"});
            for (const auto& [item, chi2] : top.items) csv::write_row(out, {item, csv::format_double(chi2)});
            summary[name] = {{"selected", top.items.size()}, {"requested", top.requested}, {"shortfall", top.shortfall}};
        }
    }

    std::vector<lexicon::PartisanTerm> selected;
    if (lx.speakers_csv) {
        auto f = detail::open_in(*lx.speakers_csv, "lexicon speakers fixture");
        const auto panel = lexicon::read_speaker_csv(f);
        std::vector<std::string> phrases;
        std::vector<double> t_values;
        for (const auto& [phrase, freqs] : panel.rel_freq) {
            const auto fit = lexicon::partisan_loading(panel.ideology, freqs);
            phrases.push_back(phrase);
            t_values.push_back(std::isfinite(fit.t) ? fit.t : (fit.beta < 0 ? -1e9 : 1e9));
        }
        const auto scores = lexicon::rescale_t_values(t_values);

        std::map<std::string, double> score_of;
        for (std::size_t i = 0; i < phrases.size(); ++i) score_of[phrases[i]] = scores[i];

        std::vector<std::string> candidates = phrases;
        if (lx.trends_csv) {
            auto tf = detail::open_in(*lx.trends_csv, "lexicon trends fixture");
            const auto series = lexicon::TrendSeries::read_csv(tf);
            candidates = lexicon::trend_filter(candidates, series, lx.min_days, lx.min_states);
        }
        summary["phrases_after_trend_filter"] = candidates.size();

        std::vector<std::pair<std::string, double>> scored;
        std::set<std::string> seen;
        for (const auto& phrase : candidates) {
            if (seen.insert(phrase).second) scored.emplace_back(phrase, score_of.at(phrase));
        }
        if (lx.related_csv) {
            auto rf = detail::open_in(*lx.related_csv, "lexicon related-queries fixture");
            const auto related = lexicon::read_related_csv(rf);
            for (const auto& phrase : candidates) {
                for (const auto& alt : lexicon::expand_related(phrase, related, lx.related_threshold)) {
                    if (seen.insert(alt).second) scored.emplace_back(alt, score_of.at(phrase));
                }
            }
        }
        const auto sel = lexicon::select_search_terms(scored, lx.score_cutoff, lx.top_terms);
        selected = sel.terms;
        auto out = detail::open_out(dir / "search_terms.csv");
        csv::write_row(out, {"term", "score", "label"});
        for (const auto& t : selected) csv::write_row(out, {t.term, csv::format_double(t.score), to_string(t.label)});
        summary["search_terms"] = {{"selected", selected.size()}, {"shortfall", sel.shortfall}};
    }

    if (lx.trends_csv && !selected.empty()) {
        auto tf = detail::open_in(*lx.trends_csv, "lexicon trends fixture");
        const auto series = lexicon::TrendSeries::read_csv(tf);
        std::vector<std::string> rep_terms, dem_terms;
        for (const auto& t : selected) {
            (t.label == lexicon::Side::republican ? rep_terms : dem_terms).push_back(t.term);
        }
        if (!rep_terms.empty() && !dem_terms.empty()) {
            const auto volumes = lexicon::net_search_volume(series, rep_terms, dem_terms);
            auto out = detail::open_out(dir / "net_search_volume.csv");
            csv::write_row(out, {"state", "rep_searches", "dem_searches", "net"});
            for (const auto& [state, v] : volumes) {
                csv::write_row(out, {state, csv::format_double(v.rep), csv::format_double(v.dem),
                                     csv::format_double(v.net)});
            }
            if (lx.vote_margins_csv) {
                auto mf = detail::open_in(*lx.vote_margins_csv, "vote margins fixture");
                const auto table = csv::Table::read(mf);
                const auto c_state = table.col("state"), c_margin = table.col("net_rep_margin");
                std::vector<double> net, margin;
                for (const auto& row : table.rows) {
                    const auto it = volumes.find(row[c_state]);
                    if (it == volumes.end()) continue;
                    net.push_back(it->second.net);
                    margin.push_back(csv::to_double(row[c_margin], "net_rep_margin"));
                }
                summary["validation"]["n_states"] = net.size();
                if (net.size() >= 3) {
                    summary["validation"]["pearson_r"] = lexicon::pearson_correlation(net, margin);
                }
            }
        }
    }
    auto f = detail::open_out(dir / "lexicon_summary.json");
    f << summary.dump(2) << '\n';
}

// --- manifest and full run ---------------------------------------------------------

inline std::string fnv64_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 15];
    while (f) {
        f.read(buf, sizeof buf);
        const auto got = f.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    char out[20];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return out;
}

inline void write_manifest(const ExperimentConfig& cfg) {
    nlohmann::json files;
    std::vector<std::filesystem::path> all;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(cfg.output_dir)) {
        if (!entry.is_regular_file()) continue;
        if (entry.path().filename() == "manifest.json") continue;
        all.push_back(entry.path());
    }
    std::sort(all.begin(), all.end());
    for (const auto& p : all) {
        const auto rel = std::filesystem::relative(p, cfg.output_dir).generic_string();
        files[rel] = {{"bytes", std::filesystem::file_size(p)}, {"fnv64", fnv64_file(p)}};
    }
    nlohmann::json manifest;
    manifest["seed"] = cfg.seed;
    manifest["n_days"] = cfg.n_days;
    manifest["files"] = files;
    auto f = detail::open_out(paths::manifest(cfg));
    f << manifest.dump(2) << '\n';
}

// Validates the configured input fixtures before anything is written.
inline void validate_inputs(const ExperimentConfig& cfg) {
    if (cfg.index_csv) detail::require_file(*cfg.index_csv, "web index fixture");
    if (cfg.ideology_csv) detail::require_file(*cfg.ideology_csv, "ideology fixture");
    if (cfg.localness_labels_csv) detail::require_file(*cfg.localness_labels_csv, "localness labels fixture");
    if (cfg.localness_metadata_csv) detail::require_file(*cfg.localness_metadata_csv, "localness metadata fixture");
    for (const auto& p : {cfg.places_file, cfg.local_indicators_file, cfg.nonlocal_indicators_file}) {
        if (p) detail::require_file(*p, "localness word list");
    }
}

// genpop -> simulate -> panel -> fit -> report -> manifest.
inline void run_experiment(const ExperimentConfig& cfg) {
    validate_inputs(cfg);
    stage_genpop(cfg);
    stage_simulate(cfg);
    stage_panel(cfg);
    stage_fit(cfg);
    stage_report(cfg);
    write_manifest(cfg);
}

}  // namespace serpaudit
