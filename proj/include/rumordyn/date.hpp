#pragma once

#include <chrono>
#include <compare>
#include <cstdio>
#include <string>

#include "rumordyn/errors.hpp"

namespace rumordyn {

// Calendar day, stored as days since the civil epoch. ISO-8601 text form only.
class Date {
public:
    Date() = default;

    static Date from_ymd(int year, unsigned month, unsigned day) {
        std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                        std::chrono::day{day}};
        if (!ymd.ok())
            raise(Errc::parse_error, "invalid calendar date " + std::to_string(year) + "-" +
                                         std::to_string(month) + "-" + std::to_string(day));
        return Date(std::chrono::sys_days{ymd}.time_since_epoch().count());
    }

    static Date parse(const std::string& iso) {
        int y = 0;
        unsigned m = 0, d = 0;
        char tail = 0;
        if (std::sscanf(iso.c_str(), "%d-%u-%u%c", &y, &m, &d, &tail) != 3 || iso.size() != 10)
            raise(Errc::parse_error, "expected ISO-8601 date (YYYY-MM-DD), got '" + iso + "'");
        return from_ymd(y, m, d);
    }

    std::string to_string() const {
        auto ymd = std::chrono::year_month_day{
            std::chrono::sys_days{std::chrono::days{serial_}}};
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(ymd.year()),
                      unsigned(ymd.month()), unsigned(ymd.day()));
        return buf;
    }

    Date plus_days(long n) const { return Date(serial_ + n); }
    long days_until(Date other) const { return other.serial_ - serial_; }

    auto operator<=>(const Date&) const = default;

private:
    explicit Date(long serial) : serial_(serial) {}
    long serial_ = 0;
};

} // namespace rumordyn
