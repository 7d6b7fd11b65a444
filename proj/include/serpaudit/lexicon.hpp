#pragma once

// Partisan lexicon construction: chi-square partisanship of domains and
// stemmed bigrams, per-phrase ideological loading against speaker
// positions, usage-based filtering, and state-level validation of the
// selected search terms.

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "serpaudit/civil.hpp"
#include "serpaudit/csv.hpp"

namespace serpaudit::lexicon {

enum class Side { republican, democrat };

inline const char* to_string(Side s) { return s == Side::republican ? "Republican" : "Democrat"; }

// Usage counts of one item (domain or stemmed bigram) by each side's
// sources. Complements against the corpus totals are formed by the callers
// that know the totals.
struct TaggedCounts {
    std::string item;
    double f_r = 0.0;
    double f_d = 0.0;
};

// Chi-square partisanship with the standard four distinct marginals:
//   (f_r f_~d - f_d f_~r)^2
//   -----------------------------------------------
//   (f_r+f_d)(f_~r+f_~d)(f_r+f_~r)(f_d+f_~d)
inline double chi_square_partisanship(double f_r, double f_d, double f_nr, double f_nd) {
    const double m1 = f_r + f_d;
    const double m2 = f_nr + f_nd;
    const double m3 = f_r + f_nr;
    const double m4 = f_d + f_nd;
    if (m1 <= 0.0 || m2 <= 0.0 || m3 <= 0.0 || m4 <= 0.0) {
        throw std::invalid_argument("chi_square_partisanship: degenerate contingency table");
    }
    const double num = f_r * f_nd - f_d * f_nr;
    return num * num / (m1 * m2 * m3 * m4);
}

struct RankedItems {
    std::vector<std::pair<std::string, double>> items;  // (item, chi-square), descending
    std::size_t requested = 0;
    bool shortfall = false;
};

// Top n items predominantly used by `side`: those with f_side > f_other,
// ranked by chi-square (ties broken lexicographically).
inline RankedItems top_partisan_items(std::span<const TaggedCounts> counts, std::size_t n, Side side) {
    if (n < 1) throw std::invalid_argument("top_partisan_items: n must be >= 1");
    double total_r = 0.0, total_d = 0.0;
    for (const auto& c : counts) {
        total_r += c.f_r;
        total_d += c.f_d;
    }
    std::vector<std::pair<std::string, double>> scored;
    for (const auto& c : counts) {
        const bool qualifies = side == Side::republican ? c.f_r > c.f_d : c.f_d > c.f_r;
        if (!qualifies) continue;
        scored.emplace_back(c.item, chi_square_partisanship(c.f_r, c.f_d, total_r - c.f_r, total_d - c.f_d));
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    RankedItems out;
    out.requested = n;
    out.shortfall = scored.size() < n;
    if (scored.size() > n) scored.resize(n);
    out.items = std::move(scored);
    return out;
}

struct LoadingFit {
    double beta = 0.0;
    double se = 0.0;
    double t = 0.0;
};

// Simple OLS of a phrase's relative usage frequency on speaker ideology
// (with intercept). t = beta / se; an exact fit yields se 0 and t = +-inf.
inline LoadingFit partisan_loading(std::span<const double> speaker_ideology,
                                   std::span<const double> relative_frequency) {
    const std::size_t n = speaker_ideology.size();
    if (n != relative_frequency.size()) throw std::invalid_argument("partisan_loading: length mismatch");
    if (n < 3) throw std::invalid_argument("partisan_loading: need at least 3 speakers");
    double x_mean = 0.0, y_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        x_mean += speaker_ideology[i];
        y_mean += relative_frequency[i];
    }
    x_mean /= static_cast<double>(n);
    y_mean /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = speaker_ideology[i] - x_mean;
        sxx += dx * dx;
        sxy += dx * (relative_frequency[i] - y_mean);
    }
    if (sxx <= 0.0) throw std::invalid_argument("partisan_loading: constant ideology regressor");
    LoadingFit fit;
    fit.beta = sxy / sxx;
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double resid = relative_frequency[i] - y_mean - fit.beta * (speaker_ideology[i] - x_mean);
        rss += resid * resid;
    }
    fit.se = std::sqrt(std::max(rss, 0.0) / static_cast<double>(n - 2) / sxx);
    if (fit.se > 0.0) fit.t = fit.beta / fit.se;
    else fit.t = fit.beta == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), fit.beta);
    return fit;
}

// Divide by the maximum absolute value; sign-preserving, idempotent.
inline std::vector<double> rescale_t_values(std::span<const double> t_values) {
    if (t_values.empty()) throw std::invalid_argument("rescale_t_values: empty input");
    double max_abs = 0.0;
    for (double t : t_values) max_abs = std::max(max_abs, std::abs(t));
    if (max_abs == 0.0) throw std::invalid_argument("rescale_t_values: all-zero input");
    std::vector<double> out;
    out.reserve(t_values.size());
    for (double t : t_values) out.push_back(t / max_abs);
    return out;
}

// One Google-Trends-style observation: relative frequency of `term` in
// `state` on `date`, scaled to [0,100] against a shared reference term.
struct TrendObs {
    std::string term;
    std::string state;
    CivilDate date;
    double value = 0.0;
    bool is_reference = false;
};

class TrendSeries {
public:
    void add(TrendObs obs) {
        dates_.insert(obs.date);
        states_.insert(obs.state);
        rows_.push_back(std::move(obs));
    }

    const std::vector<TrendObs>& rows() const { return rows_; }
    std::size_t day_count() const { return dates_.size(); }
    const std::set<std::string>& states() const { return states_; }

    // days on which the term shows strictly positive usage anywhere
    std::size_t days_used(const std::string& term) const {
        std::set<CivilDate> days;
        for (const auto& r : rows_)
            if (r.term == term && r.value > 0.0) days.insert(r.date);
        return days.size();
    }

    std::size_t states_used(const std::string& term) const {
        std::set<std::string> st;
        for (const auto& r : rows_)
            if (r.term == term && r.value > 0.0) st.insert(r.state);
        return st.size();
    }

    // mean over all recorded days (absent observations count as zero)
    double mean_value(const std::string& term, const std::string& state) const {
        if (dates_.empty()) return 0.0;
        double sum = 0.0;
        for (const auto& r : rows_)
            if (r.term == term && r.state == state) sum += r.value;
        return sum / static_cast<double>(dates_.size());
    }

    // CSV fixture: term,state,date,value,is_reference
    static TrendSeries read_csv(std::istream& is) {
        const auto table = csv::Table::read(is);
        const auto c_term = table.col("term"), c_state = table.col("state"), c_date = table.col("date");
        const auto c_value = table.col("value"), c_ref = table.col("is_reference");
        TrendSeries out;
        for (const auto& row : table.rows) {
            TrendObs obs;
            obs.term = row[c_term];
            obs.state = row[c_state];
            obs.date = parse_date(row[c_date]);
            obs.value = csv::to_double(row[c_value], "value");
            obs.is_reference = row[c_ref] == "1" || row[c_ref] == "true";
            out.add(std::move(obs));
        }
        return out;
    }

private:
    std::vector<TrendObs> rows_;
    std::set<CivilDate> dates_;
    std::set<std::string> states_;
};

// Keep terms used on >= min_days days and in >= min_states states
// (inclusive thresholds). Order of the input is preserved.
inline std::vector<std::string> trend_filter(std::span<const std::string> terms, const TrendSeries& series,
                                             std::size_t min_days = 50, std::size_t min_states = 10) {
    std::vector<std::string> kept;
    for (const auto& t : terms) {
        if (series.days_used(t) >= min_days && series.states_used(t) >= min_states) kept.push_back(t);
    }
    return kept;
}

struct RelatedRow {
    std::string term;
    std::string related_query;
    double top_metric = 0.0;
};

// Related queries searched at least 90 percent as often as the original
// term. The original's own metric is its self-row if present, else 100
// (the Trends convention of scaling the top query to 100).
inline std::vector<std::string> expand_related(const std::string& term, std::span<const RelatedRow> related,
                                               double threshold = 0.9) {
    double base = 100.0;
    for (const auto& r : related)
        if (r.term == term && r.related_query == term) base = r.top_metric;
    std::vector<std::pair<double, std::string>> hits;
    for (const auto& r : related) {
        if (r.term != term || r.related_query == term) continue;
        if (r.top_metric >= threshold * base) hits.emplace_back(r.top_metric, r.related_query);
    }
    std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<std::string> out;
    out.reserve(hits.size());
    for (auto& h : hits) out.push_back(std::move(h.second));
    return out;
}

struct PartisanTerm {
    std::string term;
    double score = 0.0;  // pi in [-1,1]
    Side label = Side::republican;
};

struct TermSelection {
    std::vector<PartisanTerm> terms;
    bool shortfall = false;
};

// |score| strictly above the cutoff, ranked by |score| descending (ties
// lexicographic), truncated to n; negative scores are Democrat.
inline TermSelection select_search_terms(std::span<const std::pair<std::string, double>> scored,
                                         double cutoff = 0.5, std::size_t n = 400) {
    std::vector<std::pair<std::string, double>> kept;
    for (const auto& [term, score] : scored)
        if (std::abs(score) > cutoff) kept.emplace_back(term, score);
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        const double aa = std::abs(a.second), bb = std::abs(b.second);
        if (aa != bb) return aa > bb;
        return a.first < b.first;
    });
    TermSelection out;
    out.shortfall = kept.size() < n;
    if (kept.size() > n) kept.resize(n);
    out.terms.reserve(kept.size());
    for (auto& [term, score] : kept) {
        out.terms.push_back({std::move(term), score, score < 0.0 ? Side::democrat : Side::republican});
    }
    return out;
}

struct StateVolumes {
    double rep = 0.0;
    double dem = 0.0;
    double net = 0.0;
};

// RepSearches_s = sum_p mean value of term p in state s / (P * 100), and
// analogously for the Democrat side; net = rep - dem.
inline std::map<std::string, StateVolumes> net_search_volume(const TrendSeries& series,
                                                             std::span<const std::string> rep_terms,
                                                             std::span<const std::string> dem_terms) {
    if (rep_terms.empty() || dem_terms.empty()) {
        throw std::invalid_argument("net_search_volume: empty term set");
    }
    std::map<std::string, StateVolumes> out;
    for (const auto& state : series.states()) {
        StateVolumes v;
        for (const auto& t : rep_terms) v.rep += series.mean_value(t, state);
        for (const auto& t : dem_terms) v.dem += series.mean_value(t, state);
        v.rep /= static_cast<double>(rep_terms.size()) * 100.0;
        v.dem /= static_cast<double>(dem_terms.size()) * 100.0;
        v.net = v.rep - v.dem;
        out[state] = v;
    }
    return out;
}

inline double pearson_correlation(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("pearson_correlation: length mismatch");
    const std::size_t n = x.size();
    if (n < 3) throw std::invalid_argument("pearson_correlation: need at least 3 points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) throw std::invalid_argument("pearson_correlation: zero variance");
    return sxy / std::sqrt(sxx * syy);
}

// --- fixture readers --------------------------------------------------------

// corpus CSV: item,side,count   (side R or D; rows for one item accumulate)
inline std::vector<TaggedCounts> read_corpus_csv(std::istream& is) {
    const auto table = csv::Table::read(is);
    const auto c_item = table.col("item"), c_side = table.col("side"), c_count = table.col("count");
    std::map<std::string, TaggedCounts> acc;
    std::vector<std::string> order;
    for (const auto& row : table.rows) {
        auto [it, inserted] = acc.try_emplace(row[c_item], TaggedCounts{row[c_item], 0.0, 0.0});
        if (inserted) order.push_back(row[c_item]);
        const double cnt = csv::to_double(row[c_count], "count");
        if (row[c_side] == "R" || row[c_side] == "r") it->second.f_r += cnt;
        else if (row[c_side] == "D" || row[c_side] == "d") it->second.f_d += cnt;
        else throw std::runtime_error("corpus: unknown side '" + row[c_side] + "'");
    }
    std::vector<TaggedCounts> out;
    out.reserve(order.size());
    for (const auto& item : order) out.push_back(acc.at(item));
    return out;
}

// speaker CSV: speaker,dw_nominate,phrase,count. Produces, per phrase, the
// parallel (ideology, relative frequency) vectors with one entry per
// speaker; relative frequency is the speaker's count of the phrase over
// the speaker's total phrase count.
struct SpeakerPhrasePanel {
    std::vector<std::string> speakers;
    std::vector<double> ideology;                       // per speaker
    std::map<std::string, std::vector<double>> rel_freq;  // phrase -> per-speaker f~
};

inline SpeakerPhrasePanel read_speaker_csv(std::istream& is) {
    const auto table = csv::Table::read(is);
    const auto c_sp = table.col("speaker"), c_dw = table.col("dw_nominate");
    const auto c_ph = table.col("phrase"), c_ct = table.col("count");
    std::map<std::string, double> dw;
    std::map<std::string, double> totals;
    std::map<std::string, std::map<std::string, double>> counts;  // phrase -> speaker -> count
    std::vector<std::string> speaker_order;
    for (const auto& row : table.rows) {
        const std::string& sp = row[c_sp];
        if (!dw.count(sp)) {
            dw[sp] = csv::to_double(row[c_dw], "dw_nominate");
            speaker_order.push_back(sp);
        }
        const double cnt = csv::to_double(row[c_ct], "count");
        counts[row[c_ph]][sp] += cnt;
        totals[sp] += cnt;
    }
    SpeakerPhrasePanel out;
    out.speakers = speaker_order;
    for (const auto& sp : speaker_order) out.ideology.push_back(dw.at(sp));
    for (const auto& [phrase, by_speaker] : counts) {
        std::vector<double> freqs;
        freqs.reserve(speaker_order.size());
        for (const auto& sp : speaker_order) {
            const auto it = by_speaker.find(sp);
            const double total = totals.at(sp);
            freqs.push_back(it == by_speaker.end() || total <= 0.0 ? 0.0 : it->second / total);
        }
        out.rel_freq[phrase] = std::move(freqs);
    }
    return out;
}

inline std::vector<RelatedRow> read_related_csv(std::istream& is) {
    const auto table = csv::Table::read(is);
    const auto c_term = table.col("term"), c_rel = table.col("related_query"), c_met = table.col("top_metric");
    std::vector<RelatedRow> out;
    out.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        out.push_back({row[c_term], row[c_rel], csv::to_double(row[c_met], "top_metric")});
    }
    return out;
}

}  // namespace serpaudit::lexicon
