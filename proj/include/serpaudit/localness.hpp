#pragma once

// Local / non-local classification of result domains. Rules fire in a fixed
// order: collection membership, then indicator-term matching in the domain
// and its description metadata, then structural cues (foreign TLD, embedded
// state abbreviation). Whatever remains is Unresolved and goes to a review
// stream instead of being guessed.

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "serpaudit/csv.hpp"

namespace serpaudit {

enum class LocalLabel { local, non_local, unresolved };

inline const char* to_string(LocalLabel l) {
    switch (l) {
        case LocalLabel::local: return "Local";
        case LocalLabel::non_local: return "NonLocal";
        default: return "Unresolved";
    }
}

inline LocalLabel local_label_from_string(const std::string& s) {
    if (s == "Local") return LocalLabel::local;
    if (s == "NonLocal") return LocalLabel::non_local;
    if (s == "Unresolved") return LocalLabel::unresolved;
    throw std::runtime_error("unknown localness label: " + s);
}

struct DomainMetadata {
    std::string domain;
    std::string tld;
    std::string description_text;                 // description/site-name/title text, concatenated
    std::set<std::string> collection_memberships; // canonical tags: "states_local", "national"
};

struct PlaceLexicon {
    std::set<std::string> us_place_names;      // after exclusions
    std::set<std::string> local_indicators;    // "local news", "local", ...
    std::set<std::string> nonlocal_indicators; // "usa", "national", "international", ...
    std::set<std::string> state_abbreviations;

    static std::set<std::string> default_state_abbreviations() {
        static const std::array<const char*, 51> abbr = {
            "al", "ak", "az", "ar", "ca", "co", "ct", "de", "fl", "ga", "hi", "id", "il", "in", "ia",
            "ks", "ky", "la", "me", "md", "ma", "mi", "mn", "ms", "mo", "mt", "ne", "nv", "nh", "nj",
            "nm", "ny", "nc", "nd", "oh", "ok", "or", "pa", "ri", "sc", "sd", "tn", "tx", "ut", "vt",
            "va", "wa", "wv", "wi", "wy", "dc"};
        return {abbr.begin(), abbr.end()};
    }

    // Word-list file: one term per line, '#' comments, '!term' removes a
    // previously added term (used for ambiguous place names).
    static std::set<std::string> parse_word_list(std::istream& is) {
        std::set<std::string> out;
        std::string line;
        while (std::getline(is, line)) {
            if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
            while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
            std::size_t start = line.find_first_not_of(" \t");
            if (start == std::string::npos) continue;
            std::string term = line.substr(start);
            std::transform(term.begin(), term.end(), term.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
            if (term[0] == '!') out.erase(term.substr(1));
            else out.insert(term);
        }
        return out;
    }

    static PlaceLexicon load(const std::string& places_path, const std::string& local_path,
                             const std::string& nonlocal_path) {
        auto read = [](const std::string& path) {
            std::ifstream f(path);
            if (!f) throw std::runtime_error("cannot open word list " + path);
            return parse_word_list(f);
        };
        PlaceLexicon lex;
        lex.us_place_names = read(places_path);
        lex.local_indicators = read(local_path);
        lex.nonlocal_indicators = read(nonlocal_path);
        lex.state_abbreviations = default_state_abbreviations();
        return lex;
    }
};

namespace detail {

inline bool is_word_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
}

// Whole-word (or whole-phrase) containment; boundaries are any non-alnum
// character or the string edge, so "wa" matches in "atg.wa.gov" but not in
// "washingtonpost".
inline bool contains_term(const std::string& text, const std::string& term) {
    if (term.empty()) return false;
    std::size_t pos = 0;
    while ((pos = text.find(term, pos)) != std::string::npos) {
        const bool left_ok = pos == 0 || !is_word_char(text[pos - 1]);
        const std::size_t end = pos + term.size();
        const bool right_ok = end == text.size() || !is_word_char(text[end]);
        if (left_ok && right_ok) return true;
        ++pos;
    }
    return false;
}

inline std::size_t count_matches(const std::string& text, const std::set<std::string>& terms) {
    std::size_t n = 0;
    for (const auto& t : terms)
        if (contains_term(text, t)) ++n;
    return n;
}

inline std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace detail

struct LocalnessResult {
    LocalLabel label = LocalLabel::unresolved;
    std::string rule_fired;
};

inline LocalnessResult classify_local(const DomainMetadata& meta, const PlaceLexicon& lexicon) {
    // (1) collection membership
    if (meta.collection_memberships.count("national")) {
        return {LocalLabel::non_local, "membership:national"};
    }
    if (meta.collection_memberships.count("states_local")) {
        return {LocalLabel::local, "membership:states_local"};
    }

    // (2) indicator terms in domain + description
    const std::string desc = detail::lower(meta.description_text);
    const std::string domain = detail::lower(meta.domain);
    const std::string full = domain + " " + desc;

    std::size_t local_full = detail::count_matches(full, lexicon.us_place_names) +
                             detail::count_matches(full, lexicon.local_indicators);
    std::size_t nonlocal_full = detail::count_matches(full, lexicon.nonlocal_indicators);

    if (local_full > 0 && nonlocal_full == 0) return {LocalLabel::local, "text:local_only"};
    if (nonlocal_full > 0 && local_full == 0) return {LocalLabel::non_local, "text:nonlocal_only"};
    if (local_full > 0 && nonlocal_full > 0) {
        const std::size_t local_desc = detail::count_matches(desc, lexicon.us_place_names) +
                                       detail::count_matches(desc, lexicon.local_indicators);
        const std::size_t nonlocal_desc = detail::count_matches(desc, lexicon.nonlocal_indicators);
        if (local_desc > 0 && nonlocal_desc == 0) return {LocalLabel::local, "text:metadata_local_only"};
        if (local_full >= 3 * nonlocal_full) return {LocalLabel::local, "text:local_dominant"};
    }

    // (3) structural cues
    const std::string tld = detail::lower(meta.tld);
    const auto last_dot = tld.rfind('.');
    const std::string tld_tail = last_dot == std::string::npos ? tld : tld.substr(last_dot + 1);
    if (tld_tail.size() == 2 && tld_tail != "us") return {LocalLabel::non_local, "structural:foreign_tld"};

    std::string label_buf;
    std::vector<std::string> labels;
    for (char c : domain) {
        if (c == '.') {
            labels.push_back(label_buf);
            label_buf.clear();
        } else {
            label_buf += c;
        }
    }
    labels.push_back(label_buf);
    for (const auto& lab : labels) {
        if (lexicon.state_abbreviations.count(lab)) return {LocalLabel::local, "structural:state_abbreviation"};
    }

    return {LocalLabel::unresolved, "unresolved"};
}

// --- fixture formats ------------------------------------------------------

// metadata CSV: domain,tld,description_text,collections  (collections ';'-separated)
inline std::vector<DomainMetadata> read_metadata_csv(std::istream& is) {
    const auto table = csv::Table::read(is);
    const auto c_dom = table.col("domain"), c_tld = table.col("tld");
    const auto c_desc = table.col("description_text"), c_coll = table.col("collections");
    std::vector<DomainMetadata> out;
    out.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        DomainMetadata m;
        m.domain = row[c_dom];
        m.tld = row[c_tld];
        m.description_text = row[c_desc];
        std::stringstream ss(row[c_coll]);
        std::string tag;
        while (std::getline(ss, tag, ';'))
            if (!tag.empty()) m.collection_memberships.insert(tag);
        out.push_back(std::move(m));
    }
    return out;
}

// Batch run; labels go to `out` as CSV and Unresolved domains additionally
// to `review` (one domain per line), standing in for manual follow-up.
inline std::map<std::string, LocalLabel> classify_batch(const std::vector<DomainMetadata>& metas,
                                                        const PlaceLexicon& lexicon,
                                                        std::ostream& out, std::ostream& review) {
    csv::write_row(out, {"domain", "label", "rule_fired"});
    std::map<std::string, LocalLabel> labels;
    for (const auto& m : metas) {
        const auto res = classify_local(m, lexicon);
        labels[m.domain] = res.label;
        csv::write_row(out, {m.domain, to_string(res.label), res.rule_fired});
        if (res.label == LocalLabel::unresolved) review << m.domain << '\n';
    }
    return labels;
}

// labels CSV: domain,label[,rule_fired]
inline std::map<std::string, LocalLabel> read_labels_csv(std::istream& is) {
    const auto table = csv::Table::read(is);
    const auto c_dom = table.col("domain"), c_label = table.col("label");
    std::map<std::string, LocalLabel> out;
    for (const auto& row : table.rows) out[row[c_dom]] = local_label_from_string(row[c_label]);
    return out;
}

}  // namespace serpaudit
