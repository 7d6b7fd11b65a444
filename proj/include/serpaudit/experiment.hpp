#pragma once

// Experiment configuration and the simulation core: a seeded population
// browsing for n_days against the simulated engine, with identical daily
// election queries for every user. Also builds the synthetic web-index /
// ideology / localness fixtures when the config asks for them instead of
// supplying CSV files.

#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "serpaudit/civil.hpp"
#include "serpaudit/ideology.hpp"
#include "serpaudit/localness.hpp"
#include "serpaudit/panel.hpp"
#include "serpaudit/population.hpp"
#include "serpaudit/prng.hpp"
#include "serpaudit/sim_engine.hpp"

namespace serpaudit {

struct ElectionPlan {
    std::vector<std::string> pool;
    int per_day = 3;

    // Day d uses per_day consecutive pool entries, rotating so queries
    // repeat across days (which keeps search-term fixed effects estimable).
    std::vector<std::string> queries_for_day(int day) const {
        if (pool.empty()) throw std::invalid_argument("election plan: empty query pool");
        std::vector<std::string> out;
        const std::size_t start = static_cast<std::size_t>(day) * static_cast<std::size_t>(per_day);
        for (int j = 0; j < per_day; ++j) out.push_back(pool[(start + static_cast<std::size_t>(j)) % pool.size()]);
        return out;
    }
};

struct SynthIndexConfig {
    int generic_domains = 60;
    int candidates_generic = 14;
    int candidates_popular = 6;
    int candidates_partisan_per_side = 2;
    int locals_per_city = 1;             // local candidates added to election queries
    double local_pi_dem_city = -60.0;
    double local_pi_rep_city = 60.0;
    double local_pi_purple = 0.0;
    double partisan_pi = 80.0;
    double pi_jitter = 10.0;
    double base_lo = 0.0;
    double base_hi = 1.0;
    double domain_query_bonus = 3.0;     // the site itself tops its own domain-name query
    double index_presence_prob = 0.8;    // chance each ideology index covers a domain
    double anchor_base = 0.0;            // >0 adds a fixed always-first candidate to every query
};

struct SimilarityConfig {
    std::optional<double> max_gap_hours;                              // unlimited when absent
    std::vector<double> gap_thresholds = {0.01, 0.5, 1, 2, 4, 8, 24};
    std::size_t histogram_bins = 20;
};

struct LexiconConfig {
    std::optional<std::string> corpus_csv;
    std::optional<std::string> speakers_csv;
    std::optional<std::string> trends_csv;
    std::optional<std::string> related_csv;
    std::optional<std::string> vote_margins_csv;
    std::size_t top_domains = 100;
    std::size_t top_terms = 400;
    double score_cutoff = 0.5;
    std::size_t min_days = 50;
    std::size_t min_states = 10;
    double related_threshold = 0.9;
};

struct ExperimentConfig {
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    int n_days = 30;
    CivilDate start_date{2020, 10, 22};
    double persistence_p = 0.9;
    ElectionPlan elections;
    PersonalizationConfig engine;
    std::optional<std::string> index_csv;
    std::optional<SynthIndexConfig> index_synth;
    PopulationConfig population;
    ScheduleConfig schedule;
    std::optional<std::string> ideology_csv;
    MergePolicy merge_policy = MergePolicy::zero_fill;
    std::optional<std::string> localness_labels_csv;
    std::optional<std::string> localness_metadata_csv;
    std::optional<std::string> places_file;
    std::optional<std::string> local_indicators_file;
    std::optional<std::string> nonlocal_indicators_file;
    SimilarityConfig similarity;
    LexiconConfig lexicon;

    Persistence persistence() const { return Persistence(persistence_p); }
};

// --- config parsing ----------------------------------------------------------

namespace detail {

inline std::string resolve_path(const std::string& path, const std::filesystem::path& base) {
    std::filesystem::path p(path);
    if (p.is_absolute()) return p.lexically_normal().string();
    return (base / p).lexically_normal().string();
}

inline std::optional<std::string> opt_path(const nlohmann::json& j, const char* key,
                                           const std::filesystem::path& base) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return resolve_path(j.at(key).get<std::string>(), base);
}

}  // namespace detail

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j,
                                                    const std::filesystem::path& base_dir) {
    ExperimentConfig cfg;
    cfg.seed = j.value("seed", std::uint64_t{1});
    cfg.output_dir = detail::resolve_path(j.value("output_dir", std::string("out")), base_dir);
    cfg.n_days = j.value("n_days", 30);
    if (cfg.n_days < 1) throw std::invalid_argument("config: n_days must be >= 1");
    cfg.start_date = parse_date(j.value("start_date", std::string("2020-10-22")));
    cfg.persistence_p = j.value("persistence_p", 0.9);

    const auto& eq = j.at("election_queries");
    cfg.elections.pool = eq.at("pool").get<std::vector<std::string>>();
    cfg.elections.per_day = eq.value("per_day", 3);
    if (cfg.elections.pool.empty() || cfg.elections.per_day < 1) {
        throw std::invalid_argument("config: election query plan needs a nonempty pool and per_day >= 1");
    }

    if (j.contains("engine")) {
        const auto& e = j.at("engine");
        cfg.engine.lambda_fam = e.value("lambda_fam", 0.0);
        cfg.engine.lambda_local = e.value("lambda_local", 0.0);
        cfg.engine.lambda_ideo = e.value("lambda_ideo", 0.0);
        cfg.engine.noise_sd = e.value("noise_sd", 0.0);
        cfg.engine.page_size = e.value("page_size", 8);
        cfg.engine.familiarity_log = e.value("familiarity_log", true);
        cfg.engine.top_story_prob = e.value("top_story_prob", 0.0);
        cfg.engine.top_story_size = e.value("top_story_size", 3);
        cfg.engine.validate();
        if (e.contains("index")) {
            const auto& idx = e.at("index");
            if (idx.contains("csv")) cfg.index_csv = detail::resolve_path(idx.at("csv").get<std::string>(), base_dir);
            if (idx.contains("synth")) {
                const auto& s = idx.at("synth");
                SynthIndexConfig sc;
                sc.generic_domains = s.value("generic_domains", sc.generic_domains);
                sc.candidates_generic = s.value("candidates_generic", sc.candidates_generic);
                sc.candidates_popular = s.value("candidates_popular", sc.candidates_popular);
                sc.candidates_partisan_per_side = s.value("candidates_partisan_per_side", sc.candidates_partisan_per_side);
                sc.locals_per_city = s.value("locals_per_city", sc.locals_per_city);
                sc.local_pi_dem_city = s.value("local_pi_dem_city", sc.local_pi_dem_city);
                sc.local_pi_rep_city = s.value("local_pi_rep_city", sc.local_pi_rep_city);
                sc.local_pi_purple = s.value("local_pi_purple", sc.local_pi_purple);
                sc.partisan_pi = s.value("partisan_pi", sc.partisan_pi);
                sc.pi_jitter = s.value("pi_jitter", sc.pi_jitter);
                sc.base_lo = s.value("base_lo", sc.base_lo);
                sc.base_hi = s.value("base_hi", sc.base_hi);
                sc.domain_query_bonus = s.value("domain_query_bonus", sc.domain_query_bonus);
                sc.index_presence_prob = s.value("index_presence_prob", sc.index_presence_prob);
                sc.anchor_base = s.value("anchor_base", sc.anchor_base);
                cfg.index_synth = sc;
            }
        }
    }
    if (!cfg.index_csv && !cfg.index_synth) {
        throw std::invalid_argument("config: engine.index needs either {\"csv\": path} or {\"synth\": {...}}");
    }

    cfg.population = population_config_from_json(j.at("population"));

    if (j.contains("schedule")) {
        const auto& s = j.at("schedule");
        if (s.contains("popular_visits")) {
            cfg.schedule.popular_visits_min = s.at("popular_visits").at(0).get<int>();
            cfg.schedule.popular_visits_max = s.at("popular_visits").at(1).get<int>();
        }
        cfg.schedule.domain_search_prob = s.value("domain_search_prob", 0.25);
        if (s.contains("nonpartisan_queries")) {
            cfg.schedule.nonpartisan_query_pool = s.at("nonpartisan_queries").get<std::vector<std::string>>();
        }
    }

    cfg.ideology_csv = detail::opt_path(j, "ideology_csv", base_dir);
    if (j.contains("merge_policy")) {
        const auto mp = j.at("merge_policy").get<std::string>();
        if (mp == "zero-fill") cfg.merge_policy = MergePolicy::zero_fill;
        else if (mp == "available-only") cfg.merge_policy = MergePolicy::available_only;
        else throw std::invalid_argument("config: unknown merge_policy '" + mp + "'");
    }

    if (j.contains("localness")) {
        const auto& l = j.at("localness");
        cfg.localness_labels_csv = detail::opt_path(l, "labels_csv", base_dir);
        cfg.localness_metadata_csv = detail::opt_path(l, "metadata_csv", base_dir);
        cfg.places_file = detail::opt_path(l, "places", base_dir);
        cfg.local_indicators_file = detail::opt_path(l, "local_indicators", base_dir);
        cfg.nonlocal_indicators_file = detail::opt_path(l, "nonlocal_indicators", base_dir);
    }

    if (j.contains("similarity")) {
        const auto& s = j.at("similarity");
        if (s.contains("max_gap_hours") && !s.at("max_gap_hours").is_null()) {
            cfg.similarity.max_gap_hours = s.at("max_gap_hours").get<double>();
        }
        if (s.contains("gap_thresholds")) cfg.similarity.gap_thresholds = s.at("gap_thresholds").get<std::vector<double>>();
        cfg.similarity.histogram_bins = s.value("histogram_bins", cfg.similarity.histogram_bins);
    }

    if (j.contains("lexicon")) {
        const auto& l = j.at("lexicon");
        cfg.lexicon.corpus_csv = detail::opt_path(l, "corpus_csv", base_dir);
        cfg.lexicon.speakers_csv = detail::opt_path(l, "speakers_csv", base_dir);
        cfg.lexicon.trends_csv = detail::opt_path(l, "trends_csv", base_dir);
        cfg.lexicon.related_csv = detail::opt_path(l, "related_csv", base_dir);
        cfg.lexicon.vote_margins_csv = detail::opt_path(l, "vote_margins_csv", base_dir);
        cfg.lexicon.top_domains = l.value("top_domains", cfg.lexicon.top_domains);
        cfg.lexicon.top_terms = l.value("top_terms", cfg.lexicon.top_terms);
        cfg.lexicon.score_cutoff = l.value("score_cutoff", cfg.lexicon.score_cutoff);
        cfg.lexicon.min_days = l.value("min_days", cfg.lexicon.min_days);
        cfg.lexicon.min_states = l.value("min_states", cfg.lexicon.min_states);
        cfg.lexicon.related_threshold = l.value("related_threshold", cfg.lexicon.related_threshold);
    }
    return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config " + path);
    nlohmann::json j;
    f >> j;
    return experiment_config_from_json(j, std::filesystem::path(path).parent_path());
}

// --- synthetic fixtures -------------------------------------------------------

struct SyntheticFixtures {
    WebIndex index;
    IdeologyTable ideology;
    std::vector<DomainMetadata> metadata;
    PlaceLexicon lexicon;
    std::map<std::string, LocalLabel> labels;
};

namespace detail {

inline std::string city_slug(const std::string& name) {
    std::string out;
    for (char c : name) {
        if (std::isalnum(static_cast<unsigned char>(c))) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out.empty() ? "city" : out;
}

inline std::vector<std::string> generic_domain_names(int count) {
    static const std::array<const char*, 12> first = {"daily", "metro", "global", "prime", "vista", "nova",
                                                      "summit", "harbor", "crest", "beacon", "union", "liberty"};
    static const std::array<const char*, 10> second = {"report", "press", "wire", "post", "journal",
                                                       "chronicle", "digest", "monitor", "ledger", "observer"};
    std::vector<std::string> out;
    for (int i = 0; i < count; ++i) {
        std::string name = std::string(first[static_cast<std::size_t>(i) % first.size()]) +
                           second[(static_cast<std::size_t>(i) / first.size()) % second.size()];
        if (i >= static_cast<int>(first.size() * second.size())) name += std::to_string(i);
        out.push_back(name + ".com");
    }
    return out;
}

}  // namespace detail

// Deterministically builds index, ideology table, and localness fixtures
// covering every query the simulation can issue: election queries,
// non-partisan queries, both sides' terms and hashtags, and the partisan
// domains typed into the search box.
inline SyntheticFixtures build_synthetic_fixtures(const ExperimentConfig& cfg, const Population& pop) {
    if (!cfg.index_synth) throw std::invalid_argument("build_synthetic_fixtures: config has no synth block");
    const SynthIndexConfig& sc = *cfg.index_synth;
    const std::uint64_t seed = cfg.seed;
    SyntheticFixtures fx;
    fx.ideology = IdeologyTable(cfg.merge_policy);

    const auto generic = detail::generic_domain_names(sc.generic_domains);
    const auto& popular = cfg.population.popular_domains;
    const auto& dems = cfg.population.partisan_domains_democrat;
    const auto& reps = cfg.population.partisan_domains_republican;

    // per-domain ideology targets
    std::map<std::string, double> pi_target;
    std::map<std::string, bool> is_news;
    {
        std::size_t i = 0;
        for (const auto& d : generic) {
            rng::Stream s(rng::derive(seed, "pi", d));
            pi_target[d] = s.uniform() * 30.0 - 15.0;
            is_news[d] = i % 3 == 0;
            ++i;
        }
        i = 0;
        for (const auto& d : popular) {
            rng::Stream s(rng::derive(seed, "pi", d));
            pi_target[d] = s.uniform() * 20.0 - 10.0;
            is_news[d] = i % 5 == 0;
            ++i;
        }
        for (const auto& d : dems) {
            rng::Stream s(rng::derive(seed, "pi", d));
            pi_target[d] = std::max(-100.0, -sc.partisan_pi + (s.uniform() * 2.0 - 1.0) * sc.pi_jitter);
            is_news[d] = true;
        }
        for (const auto& d : reps) {
            rng::Stream s(rng::derive(seed, "pi", d));
            pi_target[d] = std::min(100.0, sc.partisan_pi + (s.uniform() * 2.0 - 1.0) * sc.pi_jitter);
            is_news[d] = true;
        }
    }

    const std::string anchor_domain = "frontpagewire.com";
    if (sc.anchor_base > 0.0) {
        pi_target[anchor_domain] = 0.0;
        is_news[anchor_domain] = false;
    }

    // local outlets, aligned with the city's partisan lean
    static const std::array<const char*, 4> mastheads = {"gazette", "tribune", "herald", "courier"};
    std::map<std::string, std::vector<std::string>> locals_by_city;
    for (const auto& city : pop.cities) {
        for (int k = 0; k < sc.locals_per_city; ++k) {
            const std::string domain =
                detail::city_slug(city.name) + "-" + mastheads[static_cast<std::size_t>(k) % mastheads.size()] + ".com";
            locals_by_city[city.name].push_back(domain);
            rng::Stream s(rng::derive(seed, "pi", domain));
            double center = sc.local_pi_purple;
            if (city.category == CityCategory::democrat) center = sc.local_pi_dem_city;
            if (city.category == CityCategory::republican) center = sc.local_pi_rep_city;
            pi_target[domain] = std::clamp(center + (s.uniform() * 2.0 - 1.0) * sc.pi_jitter, -100.0, 100.0);
            is_news[domain] = true;
        }
    }

    // query universe
    std::set<std::string> election_set(cfg.elections.pool.begin(), cfg.elections.pool.end());
    std::set<std::string> queries = election_set;
    queries.insert(cfg.schedule.nonpartisan_query_pool.begin(), cfg.schedule.nonpartisan_query_pool.end());
    for (const auto* pool : {&cfg.population.partisan_terms_democrat, &cfg.population.partisan_terms_republican,
                             &cfg.population.hashtags_democrat, &cfg.population.hashtags_republican}) {
        queries.insert(pool->begin(), pool->end());
    }
    std::set<std::string> domain_queries(dems.begin(), dems.end());
    domain_queries.insert(reps.begin(), reps.end());
    queries.insert(domain_queries.begin(), domain_queries.end());

    for (const auto& q : queries) {
        rng::Stream cand(rng::derive(seed, "candidates", q));
        std::vector<std::string> chosen;
        std::set<std::string> seen;
        auto push = [&](const std::string& d) {
            if (seen.insert(d).second) chosen.push_back(d);
        };
        if (domain_queries.count(q)) push(q);  // the site itself
        for (const auto& d : cand.sample(generic, std::min<std::size_t>(static_cast<std::size_t>(sc.candidates_generic), generic.size()))) push(d);
        for (const auto& d : cand.sample(popular, std::min<std::size_t>(static_cast<std::size_t>(sc.candidates_popular), popular.size()))) push(d);
        for (const auto& d : cand.sample(dems, std::min<std::size_t>(static_cast<std::size_t>(sc.candidates_partisan_per_side), dems.size()))) push(d);
        for (const auto& d : cand.sample(reps, std::min<std::size_t>(static_cast<std::size_t>(sc.candidates_partisan_per_side), reps.size()))) push(d);
        if (election_set.count(q)) {
            for (const auto& city : pop.cities)
                for (const auto& d : locals_by_city[city.name]) push(d);
        }
        // the anchor stays off domain-name queries so the searched site keeps rank 1
        if (sc.anchor_base > 0.0 && !domain_queries.count(q)) push(anchor_domain);
        for (const auto& d : chosen) {
            WebIndexEntry e;
            e.domain = d;
            rng::Stream rel(rng::derive(seed, "relevance", q, d));
            e.base_relevance = sc.base_lo + (sc.base_hi - sc.base_lo) * rel.uniform();
            if (domain_queries.count(q) && d == q) e.base_relevance = sc.base_hi + sc.domain_query_bonus;
            if (sc.anchor_base > 0.0 && d == anchor_domain) e.base_relevance = sc.anchor_base;
            e.pi = pi_target.at(d);
            e.is_news = is_news.at(d);
            for (const auto& city : pop.cities) {
                const auto& ls = locals_by_city[city.name];
                if (std::find(ls.begin(), ls.end(), d) != ls.end()) e.locality = city.name;
            }
            fx.index.add(q, std::move(e));
        }
    }

    // ideology table: raw index scores jittered around the target
    for (const auto& [domain, target] : pi_target) {
        rng::Stream s(rng::derive(seed, "ideology", domain));
        std::array<std::optional<double>, kIdeologyIndexCount> raw{};
        for (std::size_t slot = 0; slot < kIdeologyIndexCount; ++slot) {
            const double present = s.uniform();
            const double jitter = s.uniform() * 0.1 - 0.05;
            if (present < sc.index_presence_prob) {
                const double value = std::clamp(target / 100.0 + jitter, -1.0, 1.0);
                raw[slot] = rescale_index(value, -1.0, 1.0);
            }
        }
        fx.ideology.set(domain, raw);
    }

    // localness: memberships for most, indicator text for some
    fx.lexicon.local_indicators = {"local news", "local"};
    fx.lexicon.nonlocal_indicators = {"usa", "national", "international"};
    fx.lexicon.state_abbreviations = PlaceLexicon::default_state_abbreviations();
    for (const auto& city : pop.cities) fx.lexicon.us_place_names.insert(detail::city_slug(city.name));

    std::map<std::string, const CityProfile*> city_of_local;
    for (const auto& city : pop.cities)
        for (const auto& d : locals_by_city[city.name]) city_of_local[d] = &pop.city(city.name);

    for (const auto& [domain, _] : pi_target) {
        DomainMetadata m;
        m.domain = domain;
        const auto dot = domain.rfind('.');
        m.tld = dot == std::string::npos ? "" : domain.substr(dot + 1);
        if (const auto it = city_of_local.find(domain); it != city_of_local.end()) {
            m.collection_memberships.insert("states_local");
            m.description_text = "local news and events for " + detail::city_slug(it->second->name);
        } else {
            rng::Stream s(rng::derive(seed, "meta", domain));
            const double r = s.uniform();
            if (r < 0.85) m.collection_memberships.insert("national");
            else if (r < 0.95) m.description_text = "national coverage across the usa";
            // else: no signal, left for the review stream
        }
        fx.metadata.push_back(std::move(m));
    }
    for (const auto& m : fx.metadata) fx.labels[m.domain] = classify_local(m, fx.lexicon).label;
    return fx;
}

// --- simulation core ----------------------------------------------------------

struct SimulationResult {
    std::vector<SerpRecord> serps;    // election-query pages only
    std::vector<VisitEvent> events;   // every visit and search, time-ordered
};

// Runs the daily loop: every user's scheduled browsing and searching
// updates the engine state (each search clicks the first organic result),
// then the day's election queries run for all users and are recorded.
inline SimulationResult simulate_run(const ExperimentConfig& cfg, const Population& pop, const WebIndex& index) {
    cfg.engine.validate();
    EngineState state(pop);
    SimulationResult out;

    struct Item {
        enum class Kind { direct_visit, search, election } kind;
        std::string payload;
    };

    for (int day = 0; day < cfg.n_days; ++day) {
        const CivilDate date = add_days(cfg.start_date, day);
        const auto election_queries = cfg.elections.queries_for_day(day);
        for (const auto& user : pop.users) {
            const auto plan = daily_schedule(user, date, cfg.seed, cfg.schedule);
            const int offset_min = pop.city(user.city).utc_offset_hours * 60;

            std::vector<Item> items;
            for (const auto& v : plan.partisan_visits) {
                items.push_back({v.via_search ? Item::Kind::search : Item::Kind::direct_visit, v.domain});
            }
            for (const auto& v : plan.popular_visits) items.push_back({Item::Kind::direct_visit, v.domain});
            for (const auto& q : plan.nonpartisan_searches) items.push_back({Item::Kind::search, q});
            for (const auto& q : plan.partisan_searches) items.push_back({Item::Kind::search, q});
            for (const auto& q : election_queries) items.push_back({Item::Kind::election, q});

            // contiguous chunks per session, timestamps forced monotone
            const std::size_t n_sessions = plan.session_minutes.size();
            const std::size_t base_size = items.size() / n_sessions;
            const std::size_t extra = items.size() % n_sessions;
            Timestamp prev = std::numeric_limits<Timestamp>::min();
            std::size_t item_idx = 0;
            for (std::size_t sess = 0; sess < n_sessions; ++sess) {
                const std::size_t take = base_size + (sess < extra ? 1 : 0);
                for (std::size_t pos = 0; pos < take; ++pos, ++item_idx) {
                    Timestamp ts = make_timestamp(date, 0, 0, 0, offset_min) +
                                   static_cast<Timestamp>(plan.session_minutes[sess]) * 60 +
                                   static_cast<Timestamp>(pos) * 40;
                    if (prev != std::numeric_limits<Timestamp>::min() && ts < prev + 40) ts = prev + 40;
                    prev = ts;

                    const Item& item = items[item_idx];
                    if (item.kind == Item::Kind::direct_visit) {
                        state.record_visit(user.user_id, item.payload);
                        out.events.push_back({ts, user.user_id, VisitEvent::Kind::visit, item.payload});
                        continue;
                    }
                    const SerpRecord rec = serve(item.payload, user, ts, state, index, cfg.engine, cfg.seed);
                    out.events.push_back({ts, user.user_id, VisitEvent::Kind::search, item.payload});
                    const std::string& clicked = rec.organic.front();
                    state.record_visit(user.user_id, clicked);
                    out.events.push_back({ts + 20, user.user_id, VisitEvent::Kind::visit, clicked});
                    if (item.kind == Item::Kind::election) out.serps.push_back(rec);
                }
            }
        }
    }
    std::stable_sort(out.events.begin(), out.events.end(),
                     [](const VisitEvent& a, const VisitEvent& b) { return a.ts < b.ts; });
    return out;
}

}  // namespace serpaudit
