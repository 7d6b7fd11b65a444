#pragma once

// Deterministic simulated search engine with injectable personalization:
// a familiarity boost from the user's past visits, a locality boost, an
// ideology-affinity boost, and seeded Gaussian score noise. With all
// effects at zero it degrades to a fixed relevance ranking, which is the
// null benchmark the audit pipeline is validated against.

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "serpaudit/civil.hpp"
#include "serpaudit/csv.hpp"
#include "serpaudit/population.hpp"
#include "serpaudit/prng.hpp"
#include "serpaudit/serp_record.hpp"

namespace serpaudit {

struct WebIndexEntry {
    std::string domain;
    double base_relevance = 0.0;
    double pi = 0.0;                      // ideology score in [-100,100]
    std::optional<std::string> locality;  // city name, when the site is local
    bool is_news = false;
};

class WebIndex {
public:
    void add(const std::string& query, WebIndexEntry entry) {
        by_query_[query].push_back(std::move(entry));
    }

    const std::vector<WebIndexEntry>& candidates(const std::string& query) const {
        static const std::vector<WebIndexEntry> empty;
        const auto it = by_query_.find(query);
        return it == by_query_.end() ? empty : it->second;
    }

    std::size_t query_count() const { return by_query_.size(); }

    // all distinct domains, for fixture generation downstream
    std::set<std::string> domains() const {
        std::set<std::string> out;
        for (const auto& [_, entries] : by_query_)
            for (const auto& e : entries) out.insert(e.domain);
        return out;
    }

    // CSV fixture: query,domain,base_relevance,pi,locality,is_news
    static WebIndex read_csv(std::istream& is) {
        const auto table = csv::Table::read(is);
        const auto c_q = table.col("query"), c_d = table.col("domain"), c_b = table.col("base_relevance");
        const auto c_pi = table.col("pi"), c_loc = table.col("locality"), c_news = table.col("is_news");
        WebIndex idx;
        for (const auto& row : table.rows) {
            WebIndexEntry e;
            e.domain = row[c_d];
            e.base_relevance = csv::to_double(row[c_b], "base_relevance");
            e.pi = csv::to_double(row[c_pi], "pi");
            if (!row[c_loc].empty()) e.locality = row[c_loc];
            e.is_news = row[c_news] == "1" || row[c_news] == "true";
            idx.add(row[c_q], std::move(e));
        }
        return idx;
    }

    void write_csv(std::ostream& os) const {
        csv::write_row(os, {"query", "domain", "base_relevance", "pi", "locality", "is_news"});
        for (const auto& [query, entries] : by_query_) {
            for (const auto& e : entries) {
                csv::write_row(os, {query, e.domain, csv::format_double(e.base_relevance),
                                    csv::format_double(e.pi), e.locality.value_or(""),
                                    e.is_news ? "1" : "0"});
            }
        }
    }

private:
    std::map<std::string, std::vector<WebIndexEntry>> by_query_;
};

struct PersonalizationConfig {
    double lambda_fam = 0.0;    // boost per unit of g(prior visits)
    double lambda_local = 0.0;  // boost when the entry's locality matches the user's city
    double lambda_ideo = 0.0;   // boost per unit of sign-affinity between entry pi and user ideology
    double noise_sd = 0.0;
    int page_size = 8;
    bool familiarity_log = true;    // g(v) = ln(1+v); false -> g(v) = v
    double top_story_prob = 0.0;    // chance a (query, date) emits a top-stories component
    int top_story_size = 3;

    void validate() const {
        if (lambda_fam < 0 || lambda_local < 0 || lambda_ideo < 0 || noise_sd < 0) {
            throw std::invalid_argument("personalization config: lambdas and noise_sd must be nonnegative");
        }
        if (page_size < 1) throw std::invalid_argument("personalization config: page_size must be >= 1");
    }
};

// Per-(user, domain) visit counts; counts only ever grow.
class EngineState {
public:
    explicit EngineState(const Population& pop) {
        for (const auto& u : pop.users) visits_[u.user_id];
    }
    EngineState() = default;

    void add_user(const std::string& user_id) { visits_[user_id]; }

    void record_visit(const std::string& user_id, const std::string& domain) {
        const auto it = visits_.find(user_id);
        if (it == visits_.end()) throw std::runtime_error("record_visit: unknown user " + user_id);
        it->second[domain] += 1;
    }

    int visits(const std::string& user_id, const std::string& domain) const {
        const auto it = visits_.find(user_id);
        if (it == visits_.end()) return 0;
        const auto jt = it->second.find(domain);
        return jt == it->second.end() ? 0 : jt->second;
    }

private:
    std::map<std::string, std::map<std::string, int>> visits_;
};

inline double ideology_sign(Ideology i) {
    switch (i) {
        case Ideology::democrat: return -1.0;
        case Ideology::republican: return 1.0;
        default: return 0.0;
    }
}

// score = base + lambda_fam * g(visits) + lambda_local * 1[locality match]
//       + lambda_ideo * sign(user) * pi/100 + Gaussian(0, noise_sd).
// The noise draw is keyed on (seed, user, query, date, domain), so a given
// page is reproducible regardless of evaluation order.
inline double personalize_score(const WebIndexEntry& entry, const UserProfile& user, const EngineState& state,
                                const PersonalizationConfig& cfg, std::uint64_t seed, const std::string& query,
                                const CivilDate& date) {
    double score = entry.base_relevance;
    if (cfg.lambda_fam > 0.0) {
        const double v = state.visits(user.user_id, entry.domain);
        score += cfg.lambda_fam * (cfg.familiarity_log ? std::log1p(v) : v);
    }
    if (cfg.lambda_local > 0.0 && entry.locality && *entry.locality == user.city) {
        score += cfg.lambda_local;
    }
    if (cfg.lambda_ideo > 0.0) {
        score += cfg.lambda_ideo * ideology_sign(user.ideology) * entry.pi / 100.0;
    }
    if (cfg.noise_sd > 0.0) {
        rng::Stream noise(rng::derive(seed, "noise", user.user_id, query, days_from_civil(date), entry.domain));
        score += noise.normal(0.0, cfg.noise_sd);
    }
    return score;
}

// Serves one page: top page_size candidates by personalized score, ties
// broken by domain. The top-stories component is emitted per (query, date)
// with probability top_story_prob, ranked the same way over news-flagged
// candidates.
inline SerpRecord serve(const std::string& query, const UserProfile& user, Timestamp ts, const EngineState& state,
                        const WebIndex& index, const PersonalizationConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const auto& candidates = index.candidates(query);
    if (candidates.size() < static_cast<std::size_t>(cfg.page_size)) {
        throw std::runtime_error("serve: query '" + query + "' has " + std::to_string(candidates.size()) +
                                 " candidates, needs " + std::to_string(cfg.page_size));
    }
    const CivilDate date = utc_date_of(ts);

    std::vector<std::pair<double, const WebIndexEntry*>> scored;
    scored.reserve(candidates.size());
    for (const auto& e : candidates) {
        scored.emplace_back(personalize_score(e, user, state, cfg, seed, query, date), &e);
    }
    const auto by_score = [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second->domain < b.second->domain;
    };
    std::sort(scored.begin(), scored.end(), by_score);

    SerpRecord rec;
    rec.user_id = user.user_id;
    rec.ts = ts;
    rec.query = query;
    rec.lang = user.browser_language;
    for (int i = 0; i < cfg.page_size; ++i) rec.organic.push_back(scored[static_cast<std::size_t>(i)].second->domain);

    if (cfg.top_story_prob > 0.0) {
        rng::Stream coin(rng::derive(seed, "top_stories", query, days_from_civil(date)));
        if (coin.uniform() < cfg.top_story_prob) {
            std::vector<std::pair<double, const WebIndexEntry*>> news;
            for (const auto& [s, e] : scored)
                if (e->is_news) news.emplace_back(s, e);
            if (!news.empty()) {
                std::vector<std::string> stories;
                const auto take = std::min<std::size_t>(news.size(), static_cast<std::size_t>(cfg.top_story_size));
                for (std::size_t i = 0; i < take; ++i) stories.push_back(news[i].second->domain);
                rec.top_stories = std::move(stories);
            }
        }
    }
    return rec;
}

}  // namespace serpaudit
