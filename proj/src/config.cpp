#include "monsoon/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "monsoon/errors.hpp"

namespace monsoon {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

long parse_long(const std::string& key, const std::string& text) {
    long v = 0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last)
        throw ConfigError("config key '" + key + "' is not an integer: '" + text + "'");
    return v;
}

double parse_real(const std::string& key, const std::string& text) {
    double v = 0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last)
        throw ConfigError("config key '" + key + "' is not a number: '" + text + "'");
    return v;
}

} // namespace

Config Config::parse(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#')
            continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + " has no '=': '" +
                              stripped + "'");
        const std::string key = trim(std::string_view(stripped).substr(0, eq));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(lineno) + " has an empty key");
        cfg.values_[key] = trim(std::string_view(stripped).substr(eq + 1));
    }
    return cfg;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

bool Config::has(const std::string& key) const { return values_.count(key) != 0; }

void Config::set(const std::string& key, std::string value) { values_[key] = std::move(value); }

std::string Config::get_str(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end())
        throw ConfigError("config key '" + key + "' is missing");
    return it->second;
}

std::string Config::get_str(const std::string& key, std::string fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? std::move(fallback) : it->second;
}

long Config::get_int(const std::string& key) const { return parse_long(key, get_str(key)); }

long Config::get_int(const std::string& key, long fallback) const {
    return has(key) ? get_int(key) : fallback;
}

double Config::get_real(const std::string& key) const { return parse_real(key, get_str(key)); }

double Config::get_real(const std::string& key, double fallback) const {
    return has(key) ? get_real(key) : fallback;
}

bool Config::get_bool(const std::string& key) const {
    std::string v = get_str(key);
    std::transform(v.begin(), v.end(), v.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("config key '" + key + "' is not a boolean: '" + v + "'");
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    return has(key) ? get_bool(key) : fallback;
}

std::vector<int> Config::get_int_list(const std::string& key) const {
    const std::string raw = get_str(key);
    std::vector<int> out;
    std::size_t pos = 0;
    while (pos <= raw.size()) {
        const auto comma = raw.find(',', pos);
        const std::string item =
            trim(std::string_view(raw).substr(pos, comma == std::string::npos ? raw.size() - pos
                                                                              : comma - pos));
        if (item.empty())
            throw ConfigError("config key '" + key + "' has an empty list item");
        out.push_back(static_cast<int>(parse_long(key, item)));
        if (comma == std::string::npos)
            break;
        pos = comma + 1;
    }
    if (out.empty())
        throw ConfigError("config key '" + key + "' is an empty list");
    return out;
}

std::vector<int> Config::get_int_list(const std::string& key, std::vector<int> fallback) const {
    return has(key) ? get_int_list(key) : std::move(fallback);
}

YearRange Config::get_year_range(const std::string& key) const {
    const std::string raw = get_str(key);
    const auto dash = raw.find('-');
    if (dash == std::string::npos)
        throw ConfigError("config key '" + key + "' must look like FIRST-LAST: '" + raw + "'");
    YearRange yr;
    yr.first = static_cast<int>(parse_long(key, trim(std::string_view(raw).substr(0, dash))));
    yr.last = static_cast<int>(parse_long(key, trim(std::string_view(raw).substr(dash + 1))));
    if (yr.last < yr.first)
        throw ConfigError("config key '" + key + "' has last year before first: '" + raw + "'");
    return yr;
}

YearRange Config::get_year_range(const std::string& key, YearRange fallback) const {
    return has(key) ? get_year_range(key) : fallback;
}

std::string Config::canonical() const {
    std::string out;
    for (const auto& [k, v] : values_) {
        out += k;
        out += '=';
        out += v;
        out += '\n';
    }
    return out;
}

} // namespace monsoon
