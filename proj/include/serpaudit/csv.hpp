#pragma once

// Minimal RFC-4180-style CSV reading and writing (quoted fields, embedded
// commas/newlines). All fixture and output tables go through this.

#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace serpaudit::csv {

inline std::string escape(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline void write_row(std::ostream& os, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) os << ',';
        os << escape(fields[i]);
    }
    os << '\n';
}

// Reads one record (may span lines inside quotes). Returns false at EOF.
inline bool read_record(std::istream& is, std::vector<std::string>& out) {
    out.clear();
    std::string field;
    bool in_quotes = false;
    bool any = false;
    int c;
    while ((c = is.get()) != EOF) {
        any = true;
        if (in_quotes) {
            if (c == '"') {
                if (is.peek() == '"') {
                    field += '"';
                    is.get();
                } else {
                    in_quotes = false;
                }
            } else {
                field += static_cast<char>(c);
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else if (c == '\r') {
            //skip; handled by the \n that follows
        } else if (c == '\n') {
            out.push_back(std::move(field));
            return true;
        } else {
            field += static_cast<char>(c);
        }
    }
    if (!any) return false;
    out.push_back(std::move(field));
    return true;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t col(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw std::runtime_error("csv: missing column '" + name + "'");
    }

    static Table read(std::istream& is) {
        Table t;
        std::vector<std::string> rec;
        if (!read_record(is, t.header)) return t;
        while (read_record(is, rec)) {
            if (rec.size() == 1 && rec[0].empty()) continue;  // blank line
            t.rows.push_back(rec);
        }
        return t;
    }

    static Table read_file(const std::string& path) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("csv: cannot open " + path);
        return read(f);
    }
};

inline double to_double(const std::string& s, const char* what) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error(std::string("csv: bad numeric value '") + s + "' for " + what);
    }
}

// Fixed formatting keeps emitted tables byte-stable across runs.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

}  // namespace serpaudit::csv
