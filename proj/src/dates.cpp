#include "monsoon/dates.hpp"

#include <charconv>
#include <cstdio>

#include "monsoon/errors.hpp"

namespace monsoon {

namespace chr = std::chrono;

Date::Date(int y, unsigned m, unsigned d) {
    chr::year_month_day ymd{chr::year{y}, chr::month{m}, chr::day{d}};
    if (!ymd.ok())
        throw DataError("invalid calendar date " + std::to_string(y) + "-" + std::to_string(m) +
                        "-" + std::to_string(d));
    days_ = chr::sys_days{ymd};
}

Date Date::parse(const std::string& iso) {
    int y = 0;
    unsigned m = 0, d = 0;
    const char* b = iso.data();
    const char* e = b + iso.size();
    auto r1 = std::from_chars(b, e, y);
    if (r1.ec != std::errc{} || r1.ptr >= e || *r1.ptr != '-')
        throw DataError("bad date '" + iso + "', expected YYYY-MM-DD");
    auto r2 = std::from_chars(r1.ptr + 1, e, m);
    if (r2.ec != std::errc{} || r2.ptr >= e || *r2.ptr != '-')
        throw DataError("bad date '" + iso + "', expected YYYY-MM-DD");
    auto r3 = std::from_chars(r2.ptr + 1, e, d);
    if (r3.ec != std::errc{} || r3.ptr != e)
        throw DataError("bad date '" + iso + "', expected YYYY-MM-DD");
    return Date(y, m, d);
}

std::string Date::iso() const {
    chr::year_month_day ymd{days_};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()),
                  unsigned(ymd.day()));
    return buf;
}

int Date::year() const { return int(chr::year_month_day{days_}.year()); }
unsigned Date::month() const { return unsigned(chr::year_month_day{days_}.month()); }
unsigned Date::day() const { return unsigned(chr::year_month_day{days_}.day()); }

Date Date::plus_days(int n) const { return Date(days_ + chr::days{n}); }

} // namespace monsoon
