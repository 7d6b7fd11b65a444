#pragma once

// Registrable-domain extraction. With a public-suffix rule set loaded the
// matcher follows the usual algorithm (longest match, wildcard and
// exception rules, implicit "*" default); without rules it falls back to
// the last-two-labels heuristic.

#include <algorithm>
#include <cctype>
#include <istream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace serpaudit {

struct SuffixRules {
    std::set<std::string> exact;      // "com", "co.uk"
    std::set<std::string> wildcard;   // "*.ck" stored as "ck"
    std::set<std::string> exception;  // "!www.ck" stored as "www.ck"

    bool empty() const { return exact.empty() && wildcard.empty() && exception.empty(); }

    static SuffixRules parse(std::istream& is) {
        SuffixRules r;
        std::string line;
        while (std::getline(is, line)) {
            const auto end = line.find("//");
            if (end != std::string::npos) line.resize(end);
            while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r')) line.pop_back();
            std::size_t start = line.find_first_not_of(" \t");
            if (start == std::string::npos) continue;
            std::string rule = line.substr(start);
            std::transform(rule.begin(), rule.end(), rule.begin(), [](unsigned char c) { return std::tolower(c); });
            if (rule[0] == '!') {
                r.exception.insert(rule.substr(1));
            } else if (rule.rfind("*.", 0) == 0) {
                r.wildcard.insert(rule.substr(2));
            } else {
                r.exact.insert(rule);
            }
        }
        return r;
    }

    static SuffixRules parse_string(const std::string& text) {
        std::istringstream is(text);
        return parse(is);
    }
};

namespace detail {

inline std::vector<std::string> split_labels(const std::string& host) {
    std::vector<std::string> labels;
    std::string cur;
    for (char c : host) {
        if (c == '.') {
            labels.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    labels.push_back(cur);
    return labels;
}

inline std::string join_tail(const std::vector<std::string>& labels, std::size_t count) {
    std::string out;
    for (std::size_t i = labels.size() - count; i < labels.size(); ++i) {
        if (!out.empty()) out += '.';
        out += labels[i];
    }
    return out;
}

}  // namespace detail

// Pulls the hostname out of a URL or bare-host string; throws
// std::invalid_argument when no plausible hostname is present.
inline std::string extract_host(const std::string& url) {
    std::string s = url;
    // trim surrounding whitespace
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) throw std::invalid_argument("no hostname in '" + url + "'");
    const auto last = s.find_last_not_of(" \t\r\n");
    s = s.substr(first, last - first + 1);

    if (const auto scheme = s.find("://"); scheme != std::string::npos) s = s.substr(scheme + 3);
    else if (s.rfind("//", 0) == 0) s = s.substr(2);
    if (const auto cut = s.find_first_of("/?#"); cut != std::string::npos) s = s.substr(0, cut);
    if (const auto at = s.rfind('@'); at != std::string::npos) s = s.substr(at + 1);
    if (const auto colon = s.find(':'); colon != std::string::npos) s = s.substr(0, colon);

    while (!s.empty() && s.back() == '.') s.pop_back();
    if (s.empty()) throw std::invalid_argument("no hostname in '" + url + "'");

    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    for (char c : s) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '.' || c == '-' || c == '_';
        if (!ok) throw std::invalid_argument("invalid hostname in '" + url + "'");
    }
    if (s.front() == '.' || s.find("..") != std::string::npos) {
        throw std::invalid_argument("invalid hostname in '" + url + "'");
    }
    return s;
}

inline std::string normalize_domain(const std::string& url, const SuffixRules* rules = nullptr) {
    const std::string host = extract_host(url);
    const auto labels = detail::split_labels(host);
    if (labels.size() <= 1) return host;

    if (rules == nullptr || rules->empty()) {
        return detail::join_tail(labels, 2);
    }

    // Longest matching rule wins; exceptions beat wildcards of equal reach.
    std::size_t suffix_len = 1;  // implicit "*" rule
    for (std::size_t take = 1; take <= labels.size(); ++take) {
        const std::string tail = detail::join_tail(labels, take);
        if (rules->exception.count(tail)) {
            suffix_len = take - 1;
            break;
        }
        if (rules->exact.count(tail) && take > suffix_len) suffix_len = take;
        if (take >= 2) {
            const std::string parent = detail::join_tail(labels, take - 1);
            if (rules->wildcard.count(parent) && take > suffix_len) suffix_len = take;
        }
    }
    const std::size_t want = std::min(labels.size(), suffix_len + 1);
    return detail::join_tail(labels, want);
}

}  // namespace serpaudit
