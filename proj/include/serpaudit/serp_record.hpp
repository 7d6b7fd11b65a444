#pragma once

// One observed result page. The JSON Lines form is the shared wire format
// between the simulator and the analysis layer, so externally collected
// pages can be dropped in unchanged.

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "serpaudit/civil.hpp"

namespace serpaudit {

struct SerpRecord {
    std::string user_id;
    Timestamp ts = 0;
    std::string query;
    std::vector<std::string> organic;
    std::optional<std::vector<std::string>> top_stories;
    std::string lang;

    bool operator==(const SerpRecord&) const = default;
};

inline nlohmann::json to_json(const SerpRecord& r) {
    nlohmann::json j;
    j["user_id"] = r.user_id;
    j["ts"] = format_timestamp(r.ts);
    j["query"] = r.query;
    j["organic"] = r.organic;
    if (r.top_stories) j["top_stories"] = *r.top_stories;
    else j["top_stories"] = nullptr;
    j["lang"] = r.lang;
    return j;
}

inline SerpRecord serp_from_json(const nlohmann::json& j) {
    SerpRecord r;
    r.user_id = j.at("user_id").get<std::string>();
    r.ts = parse_timestamp(j.at("ts").get<std::string>());
    r.query = j.at("query").get<std::string>();
    r.organic = j.at("organic").get<std::vector<std::string>>();
    if (j.contains("top_stories") && !j.at("top_stories").is_null()) {
        r.top_stories = j.at("top_stories").get<std::vector<std::string>>();
    }
    r.lang = j.value("lang", "");
    return r;
}

inline void write_serp_jsonl(std::ostream& os, const std::vector<SerpRecord>& records) {
    for (const auto& r : records) os << to_json(r).dump() << '\n';
}

inline std::vector<SerpRecord> read_serp_jsonl(std::istream& is) {
    std::vector<SerpRecord> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        out.push_back(serp_from_json(nlohmann::json::parse(line)));
    }
    return out;
}

}  // namespace serpaudit
