#pragma once

#include <map>
#include <string>
#include <vector>

#include "monsoon/data.hpp"

namespace monsoon {

// Flat key=value run configuration. Lines starting with '#' (after leading
// whitespace) and blank lines are ignored; keys and values are trimmed.
// Later assignments to the same key win, as do set() overrides from CLI flags.
class Config {
public:
    static Config parse(const std::string& text);
    static Config load(const std::string& path);

    bool has(const std::string& key) const;
    void set(const std::string& key, std::string value);

    std::string get_str(const std::string& key) const;
    std::string get_str(const std::string& key, std::string fallback) const;
    long get_int(const std::string& key) const;
    long get_int(const std::string& key, long fallback) const;
    double get_real(const std::string& key) const;
    double get_real(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<int> get_int_list(const std::string& key) const;
    std::vector<int> get_int_list(const std::string& key, std::vector<int> fallback) const;
    YearRange get_year_range(const std::string& key) const;
    YearRange get_year_range(const std::string& key, YearRange fallback) const;

    // Sorted key=value dump, one per line. Stable input for run digests.
    std::string canonical() const;

private:
    std::map<std::string, std::string> values_;
};

} // namespace monsoon
