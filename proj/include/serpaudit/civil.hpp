#pragma once

// Civil dates and ISO-8601 timestamps. Offsets are fixed (no DST); the
// record format always serializes instants in UTC with a trailing 'Z'.

#include <cstdint>
#include <compare>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace serpaudit {

struct CivilDate {
    int year = 1970;
    int month = 1;  // 1..12
    int day = 1;    // 1..31

    auto operator<=>(const CivilDate&) const = default;
};

// Days since 1970-01-01 (proleptic Gregorian), Hinnant's algorithm.
inline std::int64_t days_from_civil(const CivilDate& d) {
    const int y = d.year - (d.month <= 2);
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(d.month + (d.month > 2 ? -3 : 9)) + 2) / 5 + static_cast<unsigned>(d.day) - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline CivilDate civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return CivilDate{static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
}

inline CivilDate add_days(const CivilDate& d, std::int64_t n) {
    return civil_from_days(days_from_civil(d) + n);
}

inline bool valid_date(const CivilDate& d) {
    if (d.month < 1 || d.month > 12 || d.day < 1) return false;
    static constexpr int lens[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    int len = lens[d.month - 1];
    if (d.month == 2) {
        const bool leap = (d.year % 4 == 0 && d.year % 100 != 0) || d.year % 400 == 0;
        if (leap) len = 29;
    }
    return d.day <= len;
}

inline CivilDate parse_date(const std::string& s) {
    CivilDate d;
    char dash1 = 0, dash2 = 0;
    if (std::sscanf(s.c_str(), "%d%c%2d%c%2d", &d.year, &dash1, &d.month, &dash2, &d.day) != 5 ||
        dash1 != '-' || dash2 != '-' || !valid_date(d)) {
        throw std::invalid_argument("invalid date: " + s);
    }
    return d;
}

inline std::string format_date(const CivilDate& d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", d.year, d.month, d.day);
    return buf;
}

// Seconds since the epoch, UTC.
using Timestamp = std::int64_t;

inline Timestamp make_timestamp(const CivilDate& date, int hour, int minute, int second, int utc_offset_minutes = 0) {
    return days_from_civil(date) * 86400 + hour * 3600 + minute * 60 + second - static_cast<std::int64_t>(utc_offset_minutes) * 60;
}

inline CivilDate utc_date_of(Timestamp ts) {
    std::int64_t days = ts / 86400;
    if (ts % 86400 < 0) --days;
    return civil_from_days(days);
}

// Accepts "YYYY-MM-DDTHH:MM:SS" followed by 'Z', "+HH:MM", or "-HH:MM".
inline Timestamp parse_timestamp(const std::string& s) {
    CivilDate d;
    int hh = 0, mm = 0, ss = 0;
    int n = 0;
    if (std::sscanf(s.c_str(), "%d-%2d-%2dT%2d:%2d:%2d%n", &d.year, &d.month, &d.day, &hh, &mm, &ss, &n) != 6 ||
        !valid_date(d) || hh > 23 || mm > 59 || ss > 60) {
        throw std::invalid_argument("invalid timestamp: " + s);
    }
    const std::string rest = s.substr(static_cast<std::size_t>(n));
    int offset_min = 0;
    if (rest == "Z" || rest.empty()) {
        offset_min = 0;
    } else if ((rest[0] == '+' || rest[0] == '-') && rest.size() == 6 && rest[3] == ':') {
        const int oh = std::stoi(rest.substr(1, 2));
        const int om = std::stoi(rest.substr(4, 2));
        offset_min = oh * 60 + om;
        if (rest[0] == '-') offset_min = -offset_min;
    } else {
        throw std::invalid_argument("invalid timestamp zone: " + s);
    }
    return make_timestamp(d, hh, mm, ss, offset_min);
}

inline std::string format_timestamp(Timestamp ts) {
    const CivilDate d = utc_date_of(ts);
    std::int64_t sod = ts - days_from_civil(d) * 86400;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02lld:%02lld:%02lldZ", d.year, d.month, d.day,
                  static_cast<long long>(sod / 3600), static_cast<long long>((sod / 60) % 60),
                  static_cast<long long>(sod % 60));
    return buf;
}

}  // namespace serpaudit
