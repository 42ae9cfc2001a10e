#include "wq/time.hpp"

#include "wq/error.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>

namespace wq {

namespace {

bool read_int(std::string_view s, std::size_t& pos, std::size_t digits, int& out) {
    if (pos + digits > s.size()) return false;
    int v = 0;
    for (std::size_t i = 0; i < digits; ++i) {
        char c = s[pos + i];
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
    }
    out = v;
    pos += digits;
    return true;
}

bool expect(std::string_view s, std::size_t& pos, char c) {
    if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
    }
    return false;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

bool parse_ymd(std::string_view s, std::size_t& pos, Date& out) {
    int y, m, d;
    if (!read_int(s, pos, 4, y) || !expect(s, pos, '-') || !read_int(s, pos, 2, m) ||
        !expect(s, pos, '-') || !read_int(s, pos, 2, d))
        return false;
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                    std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return false;
    out = std::chrono::sys_days{ymd};
    return true;
}

}  // namespace

bool try_parse_date(std::string_view text, Date& out) {
    auto s = trim(text);
    std::size_t pos = 0;
    return parse_ymd(s, pos, out) && pos == s.size();
}

Date parse_date(std::string_view text) {
    Date d;
    if (!try_parse_date(text, d)) throw DataError("malformed date: '" + std::string(text) + "'");
    return d;
}

bool try_parse_instant(std::string_view text, Instant& out) {
    auto s = trim(text);
    std::size_t pos = 0;
    Date day;
    if (!parse_ymd(s, pos, day)) return false;
    int hh = 0, mm = 0, ss = 0;
    if (pos < s.size() && (s[pos] == 'T' || s[pos] == ' ')) {
        ++pos;
        if (!read_int(s, pos, 2, hh) || !expect(s, pos, ':') || !read_int(s, pos, 2, mm)) return false;
        if (expect(s, pos, ':')) {
            if (!read_int(s, pos, 2, ss)) return false;
            if (expect(s, pos, '.')) {
                while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
            }
        }
    }
    if (hh > 23 || mm > 59 || ss > 60) return false;
    long offset = 0;
    if (pos < s.size()) {
        if (s[pos] == 'Z') {
            ++pos;
        } else if (s[pos] == '+' || s[pos] == '-') {
            int sign = s[pos] == '+' ? 1 : -1;
            ++pos;
            int oh, om = 0;
            if (!read_int(s, pos, 2, oh)) return false;
            expect(s, pos, ':');
            if (pos < s.size() && !read_int(s, pos, 2, om)) return false;
            offset = sign * (oh * 3600L + om * 60L);
        }
    }
    if (pos != s.size()) return false;
    out = Instant{day} + std::chrono::seconds{hh * 3600L + mm * 60L + ss - offset};
    return true;
}

Instant parse_instant(std::string_view text) {
    Instant t;
    if (!try_parse_instant(text, t)) throw DataError("malformed timestamp: '" + std::string(text) + "'");
    return t;
}

std::string format_date(Date d) {
    std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

std::string format_instant(Instant t) {
    auto day = std::chrono::floor<std::chrono::days>(t);
    auto sec = (t - day).count();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%sT%02ld:%02ld:%02ldZ", format_date(day).c_str(), sec / 3600,
                  (sec / 60) % 60, sec % 60);
    return buf;
}

std::chrono::seconds parse_duration(std::string_view text) {
    auto s = trim(text);
    double value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr == s.data())
        throw ParameterError("malformed duration: '" + std::string(text) + "'");
    std::string_view unit(ptr, s.data() + s.size() - ptr);
    double scale;
    if (unit.empty() || unit == "s") scale = 1;
    else if (unit == "min" || unit == "m") scale = 60;
    else if (unit == "h") scale = 3600;
    else if (unit == "d") scale = 86400;
    else throw ParameterError("unknown duration unit in '" + std::string(text) + "'");
    double secs = value * scale;
    if (secs != static_cast<double>(static_cast<long long>(secs)))
        throw ParameterError("duration must be a whole number of seconds: '" + std::string(text) + "'");
    return std::chrono::seconds{static_cast<long long>(secs)};
}

}  // namespace wq
