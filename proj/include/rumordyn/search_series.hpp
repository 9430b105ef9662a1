#pragma once

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include "rumordyn/csv.hpp"
#include "rumordyn/date.hpp"
#include "rumordyn/errors.hpp"

namespace rumordyn {

// Daily search-frequency counts for one entity, consecutive days.
struct SearchSeries {
    std::string entity;
    Date start;
    std::vector<double> frequencies; // day i is start.plus_days(i)

    std::size_t size() const { return frequencies.size(); }
    bool empty() const { return frequencies.empty(); }
    Date date_at(std::size_t idx) const { return start.plus_days(long(idx)); }

    bool covers(Date from, Date to) const {
        if (empty() || from > to) return false;
        return start <= from && to <= date_at(size() - 1);
    }

    double at(Date day) const {
        long off = start.days_until(day);
        if (off < 0 || std::size_t(off) >= size())
            raise(Errc::date_not_covered,
                  "series '" + entity + "' does not cover " + day.to_string());
        return frequencies[std::size_t(off)];
    }

    void validate() const {
        for (double f : frequencies)
            if (!(f >= 0.0) || !std::isfinite(f))
                raise(Errc::invalid_params, "frequencies must be finite and >= 0");
    }
};

// Sub-series of `length` consecutive days starting at the outbreak date.
// Day 0 of the result is the outbreak day.
inline SearchSeries extract_window(const SearchSeries& series, Date outbreak_date,
                                   std::size_t length = 7) {
    if (length == 0) raise(Errc::invalid_params, "window length must be >= 1");
    Date last = outbreak_date.plus_days(long(length) - 1);
    if (!series.covers(outbreak_date, last))
        raise(Errc::window_out_of_range,
              "series '" + series.entity + "' does not cover " + outbreak_date.to_string() +
                  ".." + last.to_string());
    SearchSeries window;
    window.entity = series.entity;
    window.start = outbreak_date;
    long off = series.start.days_until(outbreak_date);
    window.frequencies.assign(series.frequencies.begin() + off,
                              series.frequencies.begin() + off + long(length));
    return window;
}

// CSV form: header `date,frequency`, ISO dates, one row per consecutive day.
inline SearchSeries parse_series_csv(const std::string& text, const std::string& entity) {
    SearchSeries s;
    s.entity = entity;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    bool have_prev = false;
    Date prev;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        auto fields = csv::parse_line(line, line_no);
        if (line_no == 1) {
            if (fields.size() != 2 || fields[0] != "date" || fields[1] != "frequency")
                raise(Errc::parse_error, "line 1: expected header 'date,frequency'");
            continue;
        }
        if (fields.size() != 2)
            raise(Errc::parse_error, "line " + std::to_string(line_no) + ": expected 2 fields");
        Date d = [&] {
            try {
                return Date::parse(fields[0]);
            } catch (const Error& e) {
                raise(Errc::parse_error,
                      "line " + std::to_string(line_no) + ", field 'date': " + e.what());
            }
        }();
        char* end = nullptr;
        double f = std::strtod(fields[1].c_str(), &end);
        if (end == fields[1].c_str() || *end != '\0' || !(f >= 0.0))
            raise(Errc::parse_error, "line " + std::to_string(line_no) +
                                         ", field 'frequency': non-negative number required");
        if (!have_prev) {
            s.start = d;
            have_prev = true;
        } else if (prev.days_until(d) != 1) {
            raise(Errc::parse_error,
                  "line " + std::to_string(line_no) + ": dates must increase by one day");
        }
        prev = d;
        s.frequencies.push_back(f);
    }
    if (s.empty()) raise(Errc::parse_error, "series has no data rows");
    return s;
}

inline std::string series_csv(const SearchSeries& s) {
    std::string out = "date,frequency\n";
    char buf[64];
    for (std::size_t idx = 0; idx < s.size(); ++idx) {
        double f = s.frequencies[idx];
        if (f == std::floor(f) && std::abs(f) < 1e15)
            std::snprintf(buf, sizeof(buf), "%.0f", f);
        else
            std::snprintf(buf, sizeof(buf), "%.17g", f);
        out += s.date_at(idx).to_string();
        out += ',';
        out += buf;
        out += '\n';
    }
    return out;
}

} // namespace rumordyn
