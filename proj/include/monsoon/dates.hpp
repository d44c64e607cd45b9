#pragma once

#include <chrono>
#include <compare>
#include <string>

namespace monsoon {

// Calendar date with day-resolution arithmetic, ISO-8601 text form.
class Date {
public:
    Date() = default;
    Date(int year, unsigned month, unsigned day);

    static Date parse(const std::string& iso); // "YYYY-MM-DD"
    std::string iso() const;

    int year() const;
    unsigned month() const;
    unsigned day() const;

    Date plus_days(int n) const;
    // serial day number; consecutive dates differ by exactly 1
    long serial() const { return days_.time_since_epoch().count(); }

    auto operator<=>(const Date&) const = default;

private:
    explicit Date(std::chrono::sys_days d) : days_(d) {}
    std::chrono::sys_days days_{};
};

} // namespace monsoon
