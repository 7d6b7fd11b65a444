#pragma once

// Per-domain ideology scores merged from up to five external indices, and
// the rank-weighted Search Result Ideology Score of a result page.

#include <array>
#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "serpaudit/csv.hpp"
#include "serpaudit/localness.hpp"
#include "serpaudit/similarity.hpp"

namespace serpaudit {

inline constexpr std::size_t kIdeologyIndexCount = 5;
inline constexpr std::array<const char*, kIdeologyIndexCount> kIdeologyIndexNames = {
    "alignment", "partisanship", "mturk", "pew", "audience_bias"};

// Affine map of [a,b] onto the liberal-conservative scale [-100,100].
inline double rescale_index(double raw, double a, double b) {
    if (!(a < b)) throw std::invalid_argument("rescale_index: need a < b");
    if (raw < a || raw > b) throw std::invalid_argument("rescale_index: value outside source range");
    return -100.0 + 200.0 * (raw - a) / (b - a);
}

enum class MergePolicy { zero_fill, available_only };

// Merged score from the five index slots, each already on [-100,100].
// zero_fill treats absent indices as 0 and divides by five; available_only
// averages whatever is present (all absent -> 0).
inline double merge_pi(const std::array<std::optional<double>, kIdeologyIndexCount>& scores, MergePolicy policy) {
    double sum = 0.0;
    std::size_t present = 0;
    for (const auto& s : scores) {
        if (s) {
            sum += *s;
            ++present;
        }
    }
    if (policy == MergePolicy::zero_fill) return sum / static_cast<double>(kIdeologyIndexCount);
    return present == 0 ? 0.0 : sum / static_cast<double>(present);
}

class IdeologyTable {
public:
    explicit IdeologyTable(MergePolicy policy = MergePolicy::zero_fill) : policy_(policy) {}

    void set(const std::string& domain, const std::array<std::optional<double>, kIdeologyIndexCount>& scores) {
        scores_[domain] = scores;
    }

    void set_single(const std::string& domain, double pi) {
        std::array<std::optional<double>, kIdeologyIndexCount> s{};
        // one slot carrying the full value under zero_fill needs *5
        if (policy_ == MergePolicy::zero_fill) s[0] = pi * kIdeologyIndexCount;
        else s[0] = pi;
        scores_[domain] = s;
    }

    MergePolicy policy() const { return policy_; }

    // Merged score; domains absent from every index are neutral.
    double pi(const std::string& domain) const {
        const auto it = scores_.find(domain);
        if (it == scores_.end()) return 0.0;
        return merge_pi(it->second, policy_);
    }

    // Merged score using only the index at `slot` (absent -> 0), for the
    // per-index robustness columns.
    double pi_single_index(const std::string& domain, std::size_t slot) const {
        const auto it = scores_.find(domain);
        if (it == scores_.end() || !it->second[slot]) return 0.0;
        return *it->second[slot];
    }

    // The stored per-index scores (rescaled to [-100,100]), or nullptr.
    const std::array<std::optional<double>, kIdeologyIndexCount>* raw(const std::string& domain) const {
        const auto it = scores_.find(domain);
        return it == scores_.end() ? nullptr : &it->second;
    }

    std::size_t size() const { return scores_.size(); }

    // CSV fixture: domain,alignment,partisanship,mturk,pew,audience_bias
    // with raw values on [-1,1] and empty cells for missing scores.
    static IdeologyTable load_csv(std::istream& is, MergePolicy policy = MergePolicy::zero_fill,
                                  double raw_lo = -1.0, double raw_hi = 1.0) {
        const auto table = csv::Table::read(is);
        const auto c_dom = table.col("domain");
        std::array<std::size_t, kIdeologyIndexCount> cols{};
        for (std::size_t i = 0; i < kIdeologyIndexCount; ++i) cols[i] = table.col(kIdeologyIndexNames[i]);
        IdeologyTable out(policy);
        for (const auto& row : table.rows) {
            std::array<std::optional<double>, kIdeologyIndexCount> scores{};
            for (std::size_t i = 0; i < kIdeologyIndexCount; ++i) {
                const std::string& cell = row[cols[i]];
                if (cell.empty()) continue;
                scores[i] = rescale_index(csv::to_double(cell, kIdeologyIndexNames[i]), raw_lo, raw_hi);
            }
            out.scores_[row[c_dom]] = scores;
        }
        return out;
    }

private:
    MergePolicy policy_;
    std::map<std::string, std::array<std::optional<double>, kIdeologyIndexCount>> scores_;
};

// SRIS = sum(pi_d * w_d) / sum(w_d), w_d = (1-p) p^(d-1), d the 1-based rank
// within the evaluated page.
inline double sris(std::span<const std::string> page, const IdeologyTable& table, Persistence p) {
    if (page.empty()) throw std::invalid_argument("sris: empty page");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < page.size(); ++i) {
        const double w = rank_weight(static_cast<int>(i) + 1, p);
        num += table.pi(page[i]) * w;
        den += w;
    }
    return num / den;
}

enum class SubsetSelector { all, new_only, new_local, new_nonlocal };

inline SubsetSelector subset_selector_from_string(const std::string& s) {
    if (s == "all") return SubsetSelector::all;
    if (s == "new") return SubsetSelector::new_only;
    if (s == "new-local") return SubsetSelector::new_local;
    if (s == "new-nonlocal") return SubsetSelector::new_nonlocal;
    throw std::runtime_error("unknown subset selector: " + s);
}

// "New" means outside the evaluating user's favorite set. The locality
// splits additionally require a Local / NonLocal label; Unresolved domains
// belong to neither split.
struct DomainSubset {
    SubsetSelector selector = SubsetSelector::all;
    const std::set<std::string>* favorites = nullptr;                // required unless selector == all
    const std::map<std::string, LocalLabel>* localness = nullptr;    // required for the locality splits
};

// Filters the page by the selector, re-ranks survivors 1..k preserving
// order, then applies sris. An empty filtered page is a missing value, not
// an error.
inline std::optional<double> subset_sris(std::span<const std::string> page, const DomainSubset& subset,
                                         const IdeologyTable& table, Persistence p) {
    std::vector<std::string> kept;
    kept.reserve(page.size());
    for (const auto& d : page) {
        if (subset.selector != SubsetSelector::all) {
            if (subset.favorites == nullptr) throw std::invalid_argument("subset_sris: favorites set required");
            if (subset.favorites->count(d)) continue;
        }
        if (subset.selector == SubsetSelector::new_local || subset.selector == SubsetSelector::new_nonlocal) {
            if (subset.localness == nullptr) throw std::invalid_argument("subset_sris: localness labels required");
            const auto it = subset.localness->find(d);
            const LocalLabel label = it == subset.localness->end() ? LocalLabel::unresolved : it->second;
            if (subset.selector == SubsetSelector::new_local && label != LocalLabel::local) continue;
            if (subset.selector == SubsetSelector::new_nonlocal && label != LocalLabel::non_local) continue;
        }
        kept.push_back(d);
    }
    if (kept.empty()) return std::nullopt;
    return sris(kept, table, p);
}

}  // namespace serpaudit
