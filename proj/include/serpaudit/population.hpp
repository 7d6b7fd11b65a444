#pragma once

// Synthetic user population: 25 cities x (2 Democrat + 2 Republican + 2
// non-partisan) users with randomized favorite sets and search vocabulary,
// plus per-day activity schedules. Every draw is derived from the master
// seed and a stable key (user index, date ordinal), so regeneration is
// exact regardless of call order.

#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "serpaudit/civil.hpp"
#include "serpaudit/prng.hpp"

namespace serpaudit {

enum class Ideology { democrat, republican, nonpartisan };
enum class CityCategory { democrat, republican, purple };

inline const char* to_string(Ideology i) {
    switch (i) {
        case Ideology::democrat: return "Democrat";
        case Ideology::republican: return "Republican";
        default: return "nonpartisan";
    }
}
inline const char* to_string(CityCategory c) {
    switch (c) {
        case CityCategory::democrat: return "Democrat";
        case CityCategory::republican: return "Republican";
        default: return "purple";
    }
}

inline Ideology ideology_from_string(const std::string& s) {
    if (s == "Democrat") return Ideology::democrat;
    if (s == "Republican") return Ideology::republican;
    if (s == "nonpartisan") return Ideology::nonpartisan;
    throw std::runtime_error("unknown ideology: " + s);
}

inline CityCategory classify_city(double rep_share, double dem_threshold = 45.0, double rep_threshold = 55.0) {
    if (!(dem_threshold < rep_threshold)) throw std::invalid_argument("classify_city: inverted thresholds");
    if (rep_share < 0.0 || rep_share > 100.0) throw std::invalid_argument("classify_city: share outside [0,100]");
    if (rep_share >= rep_threshold) return CityCategory::republican;
    if (rep_share <= dem_threshold) return CityCategory::democrat;
    return CityCategory::purple;
}

struct CityProfile {
    std::string name;
    double rep_vote_share = 50.0;  // percent, 2016 baseline
    CityCategory category = CityCategory::purple;
    int utc_offset_hours = 0;
};

struct UserProfile {
    std::string user_id;
    std::string fingerprint_id;
    Ideology ideology = Ideology::nonpartisan;
    std::string city;
    std::string browser_language;
    std::vector<std::string> favorite_popular_domains;
    std::vector<std::string> favorite_partisan_domains;  // exactly 10 for partisan users
    std::vector<std::string> partisan_terms;             // 50 for partisan users
    std::vector<std::string> partisan_hashtags;          // 10 for partisan users

    // favorite websites = popular + partisan favorites
    std::set<std::string> favorite_set() const {
        std::set<std::string> s(favorite_popular_domains.begin(), favorite_popular_domains.end());
        s.insert(favorite_partisan_domains.begin(), favorite_partisan_domains.end());
        return s;
    }

    // the 60 partisan search items: 50 terms + 10 hashtags
    std::vector<std::string> partisan_search_items() const {
        std::vector<std::string> v = partisan_terms;
        v.insert(v.end(), partisan_hashtags.begin(), partisan_hashtags.end());
        return v;
    }
};

struct CityInput {
    std::string name;
    double rep_vote_share = 50.0;
    int utc_offset_hours = 0;
};

struct PopulationConfig {
    std::vector<CityInput> cities;  // exactly 25
    std::vector<std::string> popular_domains;           // >= 100
    std::vector<std::string> partisan_domains_democrat;   // >= 100
    std::vector<std::string> partisan_domains_republican; // >= 100
    std::vector<std::string> partisan_terms_democrat;     // >= 50
    std::vector<std::string> partisan_terms_republican;   // >= 50
    std::vector<std::string> hashtags_democrat;           // >= 10
    std::vector<std::string> hashtags_republican;         // >= 10
    double dem_threshold = 45.0;
    double rep_threshold = 55.0;
    std::size_t n_popular_favorites = 10;
    std::string browser_language = "en-US";
};

struct Population {
    std::vector<CityProfile> cities;
    std::vector<UserProfile> users;

    const UserProfile& user(const std::string& id) const {
        for (const auto& u : users)
            if (u.user_id == id) return u;
        throw std::runtime_error("unknown user: " + id);
    }
    const CityProfile& city(const std::string& name) const {
        for (const auto& c : cities)
            if (c.name == name) return c;
        throw std::runtime_error("unknown city: " + name);
    }
};

namespace detail {
inline void require_pool(std::size_t have, std::size_t need, const char* pool) {
    if (have < need) {
        throw std::invalid_argument(std::string("population config: pool '") + pool + "' has " +
                                    std::to_string(have) + " entries, needs " + std::to_string(need));
    }
}
}  // namespace detail

inline constexpr std::size_t kCityCount = 25;
inline constexpr std::size_t kUsersPerCity = 6;  // 2 Democrat + 2 Republican + 2 non-partisan
inline constexpr std::size_t kPartisanFavorites = 10;
inline constexpr std::size_t kPartisanTermsPerUser = 50;
inline constexpr std::size_t kHashtagsPerUser = 10;

inline Population generate_population(const PopulationConfig& cfg, std::uint64_t seed) {
    if (cfg.cities.size() != kCityCount) {
        throw std::invalid_argument("population config: pool 'cities' has " + std::to_string(cfg.cities.size()) +
                                    " entries, needs " + std::to_string(kCityCount));
    }
    detail::require_pool(cfg.popular_domains.size(), 100, "popular_domains");
    detail::require_pool(cfg.partisan_domains_democrat.size(), 100, "partisan_domains_democrat");
    detail::require_pool(cfg.partisan_domains_republican.size(), 100, "partisan_domains_republican");
    detail::require_pool(cfg.partisan_terms_democrat.size(), kPartisanTermsPerUser, "partisan_terms_democrat");
    detail::require_pool(cfg.partisan_terms_republican.size(), kPartisanTermsPerUser, "partisan_terms_republican");
    detail::require_pool(cfg.hashtags_democrat.size(), kHashtagsPerUser, "hashtags_democrat");
    detail::require_pool(cfg.hashtags_republican.size(), kHashtagsPerUser, "hashtags_republican");
    detail::require_pool(cfg.popular_domains.size(), cfg.n_popular_favorites, "popular_domains");

    Population pop;
    for (const auto& c : cfg.cities) {
        pop.cities.push_back({c.name, c.rep_vote_share,
                              classify_city(c.rep_vote_share, cfg.dem_threshold, cfg.rep_threshold),
                              c.utc_offset_hours});
    }

    static constexpr Ideology kSlots[kUsersPerCity] = {Ideology::democrat,    Ideology::democrat,
                                                       Ideology::republican,  Ideology::republican,
                                                       Ideology::nonpartisan, Ideology::nonpartisan};

    std::set<std::string> fingerprints;
    for (std::size_t ci = 0; ci < kCityCount; ++ci) {
        for (std::size_t slot = 0; slot < kUsersPerCity; ++slot) {
            const std::size_t index = ci * kUsersPerCity + slot;
            UserProfile u;
            char idbuf[8];
            std::snprintf(idbuf, sizeof idbuf, "u%03zu", index + 1);
            u.user_id = idbuf;
            u.ideology = kSlots[slot];
            u.city = cfg.cities[ci].name;
            u.browser_language = cfg.browser_language;

            rng::Stream fp_stream(rng::derive(seed, "fingerprint", static_cast<std::uint64_t>(index)));
            char fpbuf[20];
            do {
                std::snprintf(fpbuf, sizeof fpbuf, "fp-%016llx",
                              static_cast<unsigned long long>(fp_stream.next()));
            } while (!fingerprints.insert(fpbuf).second);
            u.fingerprint_id = fpbuf;

            rng::Stream stream(rng::derive(seed, "user", static_cast<std::uint64_t>(index)));
            u.favorite_popular_domains = stream.sample(cfg.popular_domains, cfg.n_popular_favorites);
            if (u.ideology != Ideology::nonpartisan) {
                const bool dem = u.ideology == Ideology::democrat;
                u.favorite_partisan_domains =
                    stream.sample(dem ? cfg.partisan_domains_democrat : cfg.partisan_domains_republican,
                                  kPartisanFavorites);
                u.partisan_terms = stream.sample(dem ? cfg.partisan_terms_democrat : cfg.partisan_terms_republican,
                                                 kPartisanTermsPerUser);
                u.partisan_hashtags = stream.sample(dem ? cfg.hashtags_democrat : cfg.hashtags_republican,
                                                    kHashtagsPerUser);
            }
            pop.users.push_back(std::move(u));
        }
    }
    return pop;
}

// One direct or search-mediated website visit.
struct SiteVisit {
    std::string domain;
    bool via_search = false;  // the domain name is typed into the search box instead
};

struct ActivityPlan {
    std::vector<int> session_minutes;  // local minutes since midnight, ascending, within [540, 960]
    std::vector<SiteVisit> partisan_visits;
    std::vector<SiteVisit> popular_visits;
    std::vector<std::string> nonpartisan_searches;
    std::vector<std::string> partisan_searches;
};

struct ScheduleConfig {
    int popular_visits_min = 2;
    int popular_visits_max = 4;
    double domain_search_prob = 0.25;  // chance a partisan visit goes through the search box
    std::vector<std::string> nonpartisan_query_pool = {
        "weather today", "ups tracker", "unit converter", "timer 10 minutes", "calculator",
        "translate", "movie showtimes", "population of usa", "miles to km", "sunset time"};
};

inline constexpr int kSessionWindowStart = 9 * 60;   // 09:00 local
inline constexpr int kSessionWindowEnd = 16 * 60;    // 16:00 local

// Draws the day's activity for one user. Sub-seed: (seed, user_id hash,
// date ordinal), so plans are independent of generation order.
inline ActivityPlan daily_schedule(const UserProfile& user, const CivilDate& date, std::uint64_t seed,
                                   const ScheduleConfig& cfg = {}) {
    if (cfg.nonpartisan_query_pool.size() < 2) {
        throw std::invalid_argument("schedule config: nonpartisan query pool needs >= 2 entries");
    }
    if (cfg.popular_visits_min > cfg.popular_visits_max || cfg.popular_visits_min < 0) {
        throw std::invalid_argument("schedule config: invalid popular visit range");
    }
    rng::Stream stream(rng::derive(seed, "schedule", user.user_id, days_from_civil(date)));
    ActivityPlan plan;

    const int sessions = static_cast<int>(stream.uniform_int(1, 3));
    for (int i = 0; i < sessions; ++i) {
        plan.session_minutes.push_back(static_cast<int>(stream.uniform_int(kSessionWindowStart, kSessionWindowEnd)));
    }
    std::sort(plan.session_minutes.begin(), plan.session_minutes.end());

    const bool partisan = user.ideology != Ideology::nonpartisan;
    if (partisan) {
        const auto n_visits = static_cast<std::size_t>(stream.uniform_int(3, 5));
        for (const auto& d : stream.sample(user.favorite_partisan_domains, n_visits)) {
            plan.partisan_visits.push_back({d, stream.uniform() < cfg.domain_search_prob});
        }
    }

    const auto n_popular = static_cast<std::size_t>(
        stream.uniform_int(cfg.popular_visits_min, cfg.popular_visits_max));
    for (const auto& d : stream.sample(user.favorite_popular_domains,
                                       std::min(n_popular, user.favorite_popular_domains.size()))) {
        plan.popular_visits.push_back({d, false});
    }

    const auto n_np = static_cast<std::size_t>(stream.uniform_int(1, 2));
    plan.nonpartisan_searches = stream.sample(cfg.nonpartisan_query_pool, n_np);

    if (partisan) {
        const auto n_ps = static_cast<std::size_t>(stream.uniform_int(3, 9));
        plan.partisan_searches = stream.sample(user.partisan_search_items(), n_ps);
    }
    return plan;
}

// --- JSON forms -------------------------------------------------------------

inline nlohmann::json to_json(const UserProfile& u) {
    nlohmann::json j;
    j["user_id"] = u.user_id;
    j["fingerprint_id"] = u.fingerprint_id;
    j["ideology"] = to_string(u.ideology);
    j["city"] = u.city;
    j["browser_language"] = u.browser_language;
    j["favorite_popular_domains"] = u.favorite_popular_domains;
    j["favorite_partisan_domains"] = u.favorite_partisan_domains;
    j["partisan_terms"] = u.partisan_terms;
    j["partisan_hashtags"] = u.partisan_hashtags;
    return j;
}

inline UserProfile user_from_json(const nlohmann::json& j) {
    UserProfile u;
    u.user_id = j.at("user_id").get<std::string>();
    u.fingerprint_id = j.at("fingerprint_id").get<std::string>();
    u.ideology = ideology_from_string(j.at("ideology").get<std::string>());
    u.city = j.at("city").get<std::string>();
    u.browser_language = j.at("browser_language").get<std::string>();
    u.favorite_popular_domains = j.at("favorite_popular_domains").get<std::vector<std::string>>();
    u.favorite_partisan_domains = j.at("favorite_partisan_domains").get<std::vector<std::string>>();
    u.partisan_terms = j.at("partisan_terms").get<std::vector<std::string>>();
    u.partisan_hashtags = j.at("partisan_hashtags").get<std::vector<std::string>>();
    return u;
}

inline PopulationConfig population_config_from_json(const nlohmann::json& j) {
    PopulationConfig cfg;
    for (const auto& c : j.at("cities")) {
        cfg.cities.push_back({c.at("name").get<std::string>(), c.at("rep_vote_share").get<double>(),
                              c.at("utc_offset").get<int>()});
    }
    cfg.popular_domains = j.at("popular_domains").get<std::vector<std::string>>();
    cfg.partisan_domains_democrat = j.at("partisan_domains").at("democrat").get<std::vector<std::string>>();
    cfg.partisan_domains_republican = j.at("partisan_domains").at("republican").get<std::vector<std::string>>();
    cfg.partisan_terms_democrat = j.at("partisan_terms").at("democrat").get<std::vector<std::string>>();
    cfg.partisan_terms_republican = j.at("partisan_terms").at("republican").get<std::vector<std::string>>();
    cfg.hashtags_democrat = j.at("hashtags").at("democrat").get<std::vector<std::string>>();
    cfg.hashtags_republican = j.at("hashtags").at("republican").get<std::vector<std::string>>();
    if (j.contains("city_thresholds")) {
        cfg.dem_threshold = j["city_thresholds"].value("dem", 45.0);
        cfg.rep_threshold = j["city_thresholds"].value("rep", 55.0);
    }
    cfg.n_popular_favorites = j.value("n_popular_favorites", std::size_t{10});
    cfg.browser_language = j.value("browser_language", std::string("en-US"));
    return cfg;
}

}  // namespace serpaudit
