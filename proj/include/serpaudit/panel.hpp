#pragma once

// Builds the user x election-query analysis panel from SERP records, user
// profiles, the merged ideology table, localness labels, and the ordered
// visit/search log. Prior-activity counts are taken strictly before each
// record's timestamp and restricted to favorite domains that ever occur in
// any user's election-related organic results.

#include <algorithm>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "serpaudit/civil.hpp"
#include "serpaudit/csv.hpp"
#include "serpaudit/ideology.hpp"
#include "serpaudit/localness.hpp"
#include "serpaudit/population.hpp"
#include "serpaudit/regression.hpp"
#include "serpaudit/serp_record.hpp"
#include "serpaudit/similarity.hpp"

namespace serpaudit {

struct PanelRow {
    std::string user_id;
    CivilDate date;
    std::string query;
    std::string browser_language;
    int n_familiar = 0;
    std::optional<int> top_familiar_rank;  // present iff n_familiar >= 1
    int prior_visits = 0;
    int prior_searches = 0;
    std::optional<double> sris_all;
    std::optional<double> sris_new;
    std::optional<double> sris_new_local;
    std::optional<double> sris_new_nonlocal;
    int user_dem = 0;
    int user_rep = 0;
    int city_dem = 0;
    int city_rep = 0;
    double visited_sites_ideology = 0.0;
    double city_rep_share = 0.0;
};

struct VisitEvent {
    Timestamp ts = 0;
    std::string user_id;
    enum class Kind { visit, search } kind = Kind::visit;
    std::string target;  // domain for visits, query string for searches
};

enum class ListKind { organic, top_stories };

inline std::vector<PanelRow> build_panel(std::span<const SerpRecord> records, const Population& pop,
                                         const IdeologyTable& ideology,
                                         const std::map<std::string, LocalLabel>& localness,
                                         std::span<const VisitEvent> visit_log, Persistence p,
                                         ListKind kind = ListKind::organic) {
    for (std::size_t i = 1; i < visit_log.size(); ++i) {
        if (visit_log[i].ts < visit_log[i - 1].ts) {
            throw std::invalid_argument("build_panel: visit log not ordered by time");
        }
    }

    // favorites that ever occur in any user's election-related organic results
    std::set<std::string> occur;
    for (const auto& r : records)
        for (const auto& d : r.organic) occur.insert(d);

    struct UserInfo {
        const UserProfile* profile;
        const CityProfile* city;
        std::set<std::string> favorites;
        std::set<std::string> relevant;  // favorites ∩ occur
        std::vector<const VisitEvent*> events;
        std::vector<std::pair<Timestamp, std::size_t>> record_order;  // (ts, record index)
    };
    std::map<std::string, UserInfo> users;
    for (const auto& u : pop.users) {
        UserInfo info;
        info.profile = &u;
        info.city = &pop.city(u.city);
        info.favorites = u.favorite_set();
        for (const auto& d : info.favorites)
            if (occur.count(d)) info.relevant.insert(d);
        users.emplace(u.user_id, std::move(info));
    }

    for (const auto& e : visit_log) {
        const auto it = users.find(e.user_id);
        if (it == users.end()) throw std::runtime_error("build_panel: unknown user in visit log: " + e.user_id);
        it->second.events.push_back(&e);
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto it = users.find(records[i].user_id);
        if (it == users.end()) throw std::runtime_error("build_panel: unknown user in records: " + records[i].user_id);
        it->second.record_order.emplace_back(records[i].ts, i);
    }

    std::vector<PanelRow> rows(records.size());
    std::vector<bool> emit(records.size(), true);

    for (auto& [user_id, info] : users) {
        std::stable_sort(info.record_order.begin(), info.record_order.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        std::size_t ev = 0;
        int prior_visits = 0, prior_searches = 0;
        double pi_sum = 0.0;
        int pi_count = 0;
        for (const auto& [ts, idx] : info.record_order) {
            while (ev < info.events.size() && info.events[ev]->ts < ts) {
                const auto& e = *info.events[ev];
                if (e.kind == VisitEvent::Kind::visit) {
                    if (info.relevant.count(e.target)) ++prior_visits;
                    if (info.favorites.count(e.target)) {
                        pi_sum += ideology.pi(e.target);
                        ++pi_count;
                    }
                } else {
                    if (info.relevant.count(e.target)) ++prior_searches;
                }
                ++ev;
            }

            const SerpRecord& rec = records[idx];
            PanelRow row;
            row.user_id = user_id;
            row.date = utc_date_of(rec.ts);
            row.query = rec.query;
            row.browser_language = rec.lang;
            row.prior_visits = prior_visits;
            row.prior_searches = prior_searches;
            row.visited_sites_ideology = pi_count > 0 ? pi_sum / pi_count : 0.0;
            row.user_dem = info.profile->ideology == Ideology::democrat ? 1 : 0;
            row.user_rep = info.profile->ideology == Ideology::republican ? 1 : 0;
            row.city_dem = info.city->category == CityCategory::democrat ? 1 : 0;
            row.city_rep = info.city->category == CityCategory::republican ? 1 : 0;
            row.city_rep_share = info.city->rep_vote_share;

            const std::vector<std::string>* raw_page = &rec.organic;
            if (kind == ListKind::top_stories) {
                if (!rec.top_stories || rec.top_stories->empty()) {
                    emit[idx] = false;
                    continue;
                }
                raw_page = &*rec.top_stories;
            }
            const RankedList page(*raw_page);
            for (std::size_t i = 0; i < page.size(); ++i) {
                if (info.favorites.count(page[i])) {
                    ++row.n_familiar;
                    if (!row.top_familiar_rank) row.top_familiar_rank = static_cast<int>(i) + 1;
                }
            }
            if (!page.empty()) {
                DomainSubset sub{SubsetSelector::all, &info.favorites, &localness};
                row.sris_all = subset_sris(page.items(), sub, ideology, p);
                sub.selector = SubsetSelector::new_only;
                row.sris_new = subset_sris(page.items(), sub, ideology, p);
                sub.selector = SubsetSelector::new_local;
                row.sris_new_local = subset_sris(page.items(), sub, ideology, p);
                sub.selector = SubsetSelector::new_nonlocal;
                row.sris_new_nonlocal = subset_sris(page.items(), sub, ideology, p);
            }
            rows[idx] = std::move(row);
        }
    }

    std::vector<PanelRow> out;
    out.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i)
        if (emit[i]) out.push_back(std::move(rows[i]));
    return out;
}

// Drops rows whose `value` lies strictly above the (100 - top_pct)
// percentile, nearest-rank definition.
template <typename Getter>
std::vector<PanelRow> trim_outliers(std::vector<PanelRow> rows, double top_pct, Getter value) {
    if (top_pct < 0.0 || top_pct >= 100.0) throw std::invalid_argument("trim_outliers: top_pct must lie in [0,100)");
    if (rows.empty() || top_pct == 0.0) return rows;
    std::vector<double> values;
    values.reserve(rows.size());
    for (const auto& r : rows) values.push_back(static_cast<double>(value(r)));
    std::sort(values.begin(), values.end());
    const double q = (100.0 - top_pct) / 100.0;
    auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
    rank = std::min(std::max<std::size_t>(rank, 1), values.size());
    const double threshold = values[rank - 1];
    std::vector<PanelRow> kept;
    kept.reserve(rows.size());
    for (auto& r : rows)
        if (static_cast<double>(value(r)) <= threshold) kept.push_back(std::move(r));
    return kept;
}

inline std::vector<PanelRow> trim_outliers(std::vector<PanelRow> rows, double top_pct = 0.5) {
    return trim_outliers(std::move(rows), top_pct, [](const PanelRow& r) { return r.prior_visits; });
}

// --- CSV form ---------------------------------------------------------------

inline const std::vector<std::string>& panel_csv_header() {
    static const std::vector<std::string> h = {
        "user_id", "date", "query", "browser_language", "n_familiar", "top_familiar_rank",
        "prior_visits", "prior_searches", "sris_all", "sris_new", "sris_new_local", "sris_new_nonlocal",
        "user_dem", "user_rep", "city_dem", "city_rep", "visited_sites_ideology", "city_rep_share"};
    return h;
}

inline void write_panel_csv(std::ostream& os, std::span<const PanelRow> rows) {
    csv::write_row(os, panel_csv_header());
    auto opt_int = [](const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); };
    auto opt_num = [](const std::optional<double>& v) { return v ? csv::format_double(*v) : std::string(); };
    for (const auto& r : rows) {
        csv::write_row(os, {r.user_id, format_date(r.date), r.query, r.browser_language,
                            std::to_string(r.n_familiar), opt_int(r.top_familiar_rank),
                            std::to_string(r.prior_visits), std::to_string(r.prior_searches),
                            opt_num(r.sris_all), opt_num(r.sris_new), opt_num(r.sris_new_local),
                            opt_num(r.sris_new_nonlocal), std::to_string(r.user_dem), std::to_string(r.user_rep),
                            std::to_string(r.city_dem), std::to_string(r.city_rep),
                            csv::format_double(r.visited_sites_ideology), csv::format_double(r.city_rep_share)});
    }
}

inline std::vector<PanelRow> read_panel_csv(std::istream& is) {
    const auto table = csv::Table::read(is);
    auto opt_int = [](const std::string& s) -> std::optional<int> {
        if (s.empty()) return std::nullopt;
        return static_cast<int>(csv::to_double(s, "panel int"));
    };
    auto opt_num = [](const std::string& s) -> std::optional<double> {
        if (s.empty()) return std::nullopt;
        return csv::to_double(s, "panel value");
    };
    std::map<std::string, std::size_t> c;
    for (const auto& name : panel_csv_header()) c[name] = table.col(name);
    std::vector<PanelRow> out;
    out.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        PanelRow r;
        r.user_id = row[c["user_id"]];
        r.date = parse_date(row[c["date"]]);
        r.query = row[c["query"]];
        r.browser_language = row[c["browser_language"]];
        r.n_familiar = static_cast<int>(csv::to_double(row[c["n_familiar"]], "n_familiar"));
        r.top_familiar_rank = opt_int(row[c["top_familiar_rank"]]);
        r.prior_visits = static_cast<int>(csv::to_double(row[c["prior_visits"]], "prior_visits"));
        r.prior_searches = static_cast<int>(csv::to_double(row[c["prior_searches"]], "prior_searches"));
        r.sris_all = opt_num(row[c["sris_all"]]);
        r.sris_new = opt_num(row[c["sris_new"]]);
        r.sris_new_local = opt_num(row[c["sris_new_local"]]);
        r.sris_new_nonlocal = opt_num(row[c["sris_new_nonlocal"]]);
        r.user_dem = static_cast<int>(csv::to_double(row[c["user_dem"]], "user_dem"));
        r.user_rep = static_cast<int>(csv::to_double(row[c["user_rep"]], "user_rep"));
        r.city_dem = static_cast<int>(csv::to_double(row[c["city_dem"]], "city_dem"));
        r.city_rep = static_cast<int>(csv::to_double(row[c["city_rep"]], "city_rep"));
        r.visited_sites_ideology = csv::to_double(row[c["visited_sites_ideology"]], "visited_sites_ideology");
        r.city_rep_share = csv::to_double(row[c["city_rep_share"]], "city_rep_share");
        out.push_back(std::move(r));
    }
    return out;
}

// Regression-ready frame: numeric columns plus categorical fixed-effect and
// cluster keys (user, date, query, lang).
inline econ::Dataset panel_dataset(std::span<const PanelRow> rows) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    econ::Dataset d;
    auto num = [&](const char* name, auto getter) {
        std::vector<double> v;
        v.reserve(rows.size());
        for (const auto& r : rows) v.push_back(getter(r));
        d.add_numeric(name, std::move(v));
    };
    num("n_familiar", [](const PanelRow& r) { return static_cast<double>(r.n_familiar); });
    num("top_familiar_rank", [&](const PanelRow& r) { return r.top_familiar_rank ? *r.top_familiar_rank : nan; });
    num("prior_visits", [](const PanelRow& r) { return static_cast<double>(r.prior_visits); });
    num("prior_searches", [](const PanelRow& r) { return static_cast<double>(r.prior_searches); });
    num("sris_all", [&](const PanelRow& r) { return r.sris_all ? *r.sris_all : nan; });
    num("sris_new", [&](const PanelRow& r) { return r.sris_new ? *r.sris_new : nan; });
    num("sris_new_local", [&](const PanelRow& r) { return r.sris_new_local ? *r.sris_new_local : nan; });
    num("sris_new_nonlocal", [&](const PanelRow& r) { return r.sris_new_nonlocal ? *r.sris_new_nonlocal : nan; });
    num("user_dem", [](const PanelRow& r) { return static_cast<double>(r.user_dem); });
    num("user_rep", [](const PanelRow& r) { return static_cast<double>(r.user_rep); });
    num("city_dem", [](const PanelRow& r) { return static_cast<double>(r.city_dem); });
    num("city_rep", [](const PanelRow& r) { return static_cast<double>(r.city_rep); });
    num("visited_sites_ideology", [](const PanelRow& r) { return r.visited_sites_ideology; });
    num("city_rep_share", [](const PanelRow& r) { return r.city_rep_share; });
    num("any_familiar", [](const PanelRow& r) { return r.n_familiar > 0 ? 1.0 : 0.0; });

    auto cat = [&](const char* name, auto getter) {
        std::vector<std::string> v;
        v.reserve(rows.size());
        for (const auto& r : rows) v.push_back(getter(r));
        d.add_categorical(name, std::move(v));
    };
    cat("user", [](const PanelRow& r) { return r.user_id; });
    cat("date", [](const PanelRow& r) { return format_date(r.date); });
    cat("query", [](const PanelRow& r) { return r.query; });
    cat("lang", [](const PanelRow& r) { return r.browser_language; });
    return d;
}

// --- visit log JSONL --------------------------------------------------------

inline nlohmann::json to_json(const VisitEvent& e) {
    nlohmann::json j;
    j["ts"] = format_timestamp(e.ts);
    j["user_id"] = e.user_id;
    j["kind"] = e.kind == VisitEvent::Kind::visit ? "visit" : "search";
    j["target"] = e.target;
    return j;
}

inline VisitEvent visit_event_from_json(const nlohmann::json& j) {
    VisitEvent e;
    e.ts = parse_timestamp(j.at("ts").get<std::string>());
    e.user_id = j.at("user_id").get<std::string>();
    e.kind = j.at("kind").get<std::string>() == "search" ? VisitEvent::Kind::search : VisitEvent::Kind::visit;
    e.target = j.at("target").get<std::string>();
    return e;
}

inline void write_events_jsonl(std::ostream& os, std::span<const VisitEvent> events) {
    for (const auto& e : events) os << to_json(e).dump() << '\n';
}

inline std::vector<VisitEvent> read_events_jsonl(std::istream& is) {
    std::vector<VisitEvent> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        out.push_back(visit_event_from_json(nlohmann::json::parse(line)));
    }
    return out;
}

}  // namespace serpaudit
