#pragma once

// Shared builders for the simulation-facing tests.

#include <string>
#include <vector>

#include "serpaudit/experiment.hpp"
#include "serpaudit/population.hpp"

namespace serpaudit::testing {

inline PopulationConfig make_population_config() {
    PopulationConfig cfg;
    for (int i = 0; i < 25; ++i) {
        // shares spread over [30, 70]: a mix of Democrat, purple, Republican
        const double share = 30.0 + static_cast<double>(i) * 40.0 / 24.0;
        cfg.cities.push_back({"city" + std::to_string(i), share, -5 - i % 4});
    }
    for (int i = 0; i < 100; ++i) cfg.popular_domains.push_back("popular" + std::to_string(i) + ".com");
    for (int i = 0; i < 100; ++i) cfg.partisan_domains_democrat.push_back("dem" + std::to_string(i) + ".org");
    for (int i = 0; i < 100; ++i) cfg.partisan_domains_republican.push_back("rep" + std::to_string(i) + ".com");
    for (int i = 0; i < 60; ++i) cfg.partisan_terms_democrat.push_back("dem term " + std::to_string(i));
    for (int i = 0; i < 60; ++i) cfg.partisan_terms_republican.push_back("rep term " + std::to_string(i));
    for (int i = 0; i < 12; ++i) cfg.hashtags_democrat.push_back("#demtag" + std::to_string(i));
    for (int i = 0; i < 12; ++i) cfg.hashtags_republican.push_back("#reptag" + std::to_string(i));
    return cfg;
}

inline ExperimentConfig make_experiment_config(const std::string& output_dir, std::uint64_t seed = 1,
                                               int n_days = 2) {
    ExperimentConfig cfg;
    cfg.seed = seed;
    cfg.output_dir = output_dir;
    cfg.n_days = n_days;
    cfg.start_date = {2020, 10, 22};
    cfg.elections.pool = {"election results", "polling station", "electoral vote",
                          "ballot count",     "voter turnout",   "swing states"};
    cfg.elections.per_day = 2;
    cfg.engine.top_story_prob = 0.6;
    cfg.index_synth = SynthIndexConfig{};
    cfg.population = make_population_config();
    return cfg;
}

}  // namespace serpaudit::testing
