#pragma once

// Similarity of ranked result lists: Jaccard over the domain sets and
// extrapolated rank-biased overlap with geometric top-weighting, plus the
// click-through-mass calibration of the persistence parameter.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "serpaudit/civil.hpp"
#include "serpaudit/csv.hpp"
#include "serpaudit/serp_record.hpp"

namespace serpaudit {

// Geometric decay parameter; strictly inside (0,1).
struct Persistence {
    double p;
    explicit Persistence(double value) : p(value) {
        if (!(value > 0.0 && value < 1.0)) throw std::invalid_argument("persistence must lie in (0,1)");
    }
};

// Ordered list of normalized domains; duplicates collapse to the first
// occurrence so prefix overlaps behave like sets.
class RankedList {
public:
    RankedList() = default;
    explicit RankedList(const std::vector<std::string>& raw) {
        std::set<std::string> seen;
        for (const auto& item : raw) {
            std::string d = item;
            std::transform(d.begin(), d.end(), d.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
            if (d.empty()) continue;
            if (seen.insert(d).second) items_.push_back(std::move(d));
        }
    }

    std::size_t size() const { return items_.size(); }
    bool empty() const { return items_.empty(); }
    const std::vector<std::string>& items() const { return items_; }
    const std::string& operator[](std::size_t i) const { return items_[i]; }

private:
    std::vector<std::string> items_;
};

// |A ∩ B| / |A ∪ B|; two empty pages are identical by definition.
inline double jaccard(const RankedList& a, const RankedList& b) {
    if (a.empty() && b.empty()) return 1.0;
    std::set<std::string> uni(a.items().begin(), a.items().end());
    std::size_t inter = 0;
    for (const auto& d : b.items()) {
        if (uni.count(d)) ++inter;
        else uni.insert(d);
    }
    return static_cast<double>(inter) / static_cast<double>(uni.size());
}

// Weight of rank d under the geometric family: (1-p) * p^(d-1).
inline double rank_weight(int d, Persistence p) {
    if (d < 1) throw std::invalid_argument("rank_weight: rank must be >= 1");
    return (1.0 - p.p) * std::pow(p.p, d - 1);
}

// Extrapolated RBO at evaluation depth k = min(|s|, |t|):
//   RBO_EXT = (X_k / k) p^k + ((1-p)/p) * sum_{d=1..k} (X_d / d) p^d
// where X_d is the overlap of the two depth-d prefixes. Lists of unequal
// length are truncated to the shorter one.
inline double rbo_ext(const RankedList& s, const RankedList& t, Persistence p) {
    if (s.empty() || t.empty()) throw std::invalid_argument("rbo_ext: lists must be nonempty");
    const std::size_t k = std::min(s.size(), t.size());

    std::set<std::string> pending;  // seen in exactly one list so far
    std::size_t overlap = 0;
    double pw = 1.0;
    double sum = 0.0;
    for (std::size_t d = 1; d <= k; ++d) {
        const std::string& a = s[d - 1];
        const std::string& b = t[d - 1];
        if (a == b) {
            ++overlap;
        } else {
            if (pending.erase(a)) ++overlap;
            else pending.insert(a);
            if (pending.erase(b)) ++overlap;
            else pending.insert(b);
        }
        pw *= p.p;
        sum += static_cast<double>(overlap) / static_cast<double>(d) * pw;
    }
    return static_cast<double>(overlap) / static_cast<double>(k) * pw + (1.0 - p.p) / p.p * sum;
}

// RBO weight mass carried by ranks 1..d (Webber et al.'s prefix-weight
// closed form). Strictly decreasing in p for fixed d.
inline double prefix_weight(Persistence p, int depth) {
    if (depth < 1) throw std::invalid_argument("prefix_weight: depth must be >= 1");
    const double pv = p.p;
    double tail = 0.0;
    double pw = 1.0;
    for (int i = 1; i <= depth - 1; ++i) {
        pw *= pv;
        tail += pw / i;
    }
    // pw == p^(d-1) after the loop
    return 1.0 - pw + (1.0 - pv) / pv * depth * (-std::log1p(-pv) - tail);
}

enum class CalibrationMode { geometric, rbo_prefix };

// Solves for the persistence that places `mass` of the weight on the first
// `depth` ranks. Geometric mode solves 1 - p^depth = mass in closed form;
// rbo-prefix mode bisects prefix_weight.
inline Persistence fit_persistence(double mass, int depth, CalibrationMode mode) {
    if (!(mass > 0.0 && mass < 1.0)) throw std::invalid_argument("fit_persistence: mass must lie in (0,1)");
    if (depth < 1) throw std::invalid_argument("fit_persistence: depth must be >= 1");
    if (mode == CalibrationMode::geometric) {
        return Persistence(std::pow(1.0 - mass, 1.0 / depth));
    }
    double lo = 1e-12, hi = 1.0 - 1e-12;
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (prefix_weight(Persistence(mid), depth) > mass) lo = mid;
        else hi = mid;
        if (hi - lo < 1e-12) break;
    }
    if (hi - lo > 1e-6) throw std::runtime_error("fit_persistence: bisection did not converge");
    return Persistence(0.5 * (lo + hi));
}

struct SimilarityRow {
    std::string user_i;
    std::string user_j;
    std::string query;
    CivilDate date;
    double gap_hours = 0.0;
    double jaccard = 0.0;
    double rbo_ext = 0.0;
    std::string list_kind;  // "organic" or "top_stories"
};

// All unordered user pairs that issued the same query on the same UTC date
// within the gap threshold. When a user has several records for one
// (query, date) key the earliest is used. Top-story rows are emitted only
// when both sides carry the component.
inline std::vector<SimilarityRow> pairwise_similarity(std::span<const SerpRecord> records,
                                                      std::optional<double> max_gap_hours,
                                                      Persistence p) {
    struct Key {
        std::string query;
        CivilDate date;
        auto operator<=>(const Key&) const = default;
    };
    std::map<Key, std::map<std::string, const SerpRecord*>> groups;
    for (const auto& r : records) {
        auto& slot = groups[Key{r.query, utc_date_of(r.ts)}][r.user_id];
        if (slot == nullptr || r.ts < slot->ts) slot = &r;
    }

    std::vector<SimilarityRow> rows;
    for (const auto& [key, by_user] : groups) {
        std::vector<const SerpRecord*> recs;
        recs.reserve(by_user.size());
        for (const auto& [_, rec] : by_user) recs.push_back(rec);
        for (std::size_t i = 0; i < recs.size(); ++i) {
            for (std::size_t j = i + 1; j < recs.size(); ++j) {
                const SerpRecord& a = *recs[i];
                const SerpRecord& b = *recs[j];
                const double gap = std::abs(static_cast<double>(a.ts - b.ts)) / 3600.0;
                if (max_gap_hours && gap > *max_gap_hours) continue;
                const RankedList la(a.organic), lb(b.organic);
                rows.push_back({a.user_id, b.user_id, key.query, key.date, gap,
                                jaccard(la, lb),
                                (la.empty() || lb.empty()) ? (la.empty() && lb.empty() ? 1.0 : 0.0)
                                                           : rbo_ext(la, lb, p),
                                "organic"});
                if (a.top_stories && b.top_stories && !a.top_stories->empty() && !b.top_stories->empty()) {
                    const RankedList ta(*a.top_stories), tb(*b.top_stories);
                    rows.push_back({a.user_id, b.user_id, key.query, key.date, gap,
                                    jaccard(ta, tb), rbo_ext(ta, tb, p), "top_stories"});
                }
            }
        }
    }
    return rows;
}

inline void write_similarity_csv(std::ostream& os, std::span<const SimilarityRow> rows) {
    csv::write_row(os, {"user_i", "user_j", "query", "date", "gap_hours", "jaccard", "rbo_ext", "list_kind"});
    for (const auto& r : rows) {
        csv::write_row(os, {r.user_i, r.user_j, r.query, format_date(r.date),
                            csv::format_double(r.gap_hours), csv::format_double(r.jaccard),
                            csv::format_double(r.rbo_ext), r.list_kind});
    }
}

}  // namespace serpaudit
