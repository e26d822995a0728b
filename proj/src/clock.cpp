#include "lsfs/clock.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cstdio>

namespace lsfs {

Timestamp SystemClock::now() const {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

// Howard Hinnant's civil calendar algorithms.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

namespace {

struct Civil {
    std::int64_t year;
    unsigned month;
    unsigned day;
};

Civil civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const auto doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    return {y + (m <= 2), m, d};
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) {
        --q;
    }
    return q;
}

} // namespace

std::string format_rfc3339(Timestamp t) {
    const std::int64_t days = floor_div(t, 86'400'000);
    std::int64_t rem = t - days * 86'400'000;
    const auto c = civil_from_days(days);
    const auto hh = rem / 3'600'000;
    rem %= 3'600'000;
    const auto mm = rem / 60'000;
    rem %= 60'000;
    const auto ss = rem / 1000;
    const auto ms = rem % 1000;
    return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}.{:03}Z", c.year, c.month, c.day, hh, mm, ss, ms);
}

std::optional<Timestamp> parse_rfc3339(std::string_view text) {
    int y = 0;
    unsigned mo = 0;
    unsigned d = 0;
    unsigned h = 0;
    unsigned mi = 0;
    unsigned s = 0;
    int consumed = 0;
    const std::string buf(text);
    if (std::sscanf(buf.c_str(), "%d-%u-%uT%u:%u:%u%n", &y, &mo, &d, &h, &mi, &s, &consumed) != 6) {
        return std::nullopt;
    }
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || s > 60) {
        return std::nullopt;
    }
    std::size_t pos = static_cast<std::size_t>(consumed);
    std::int64_t millis = 0;
    if (pos < buf.size() && buf[pos] == '.') {
        ++pos;
        int digits = 0;
        while (pos < buf.size() && buf[pos] >= '0' && buf[pos] <= '9') {
            if (digits < 3) {
                millis = millis * 10 + (buf[pos] - '0');
            }
            ++digits;
            ++pos;
        }
        if (digits == 0) {
            return std::nullopt;
        }
        for (; digits < 3; ++digits) {
            millis *= 10;
        }
    }
    std::int64_t offset_min = 0;
    if (pos < buf.size() && (buf[pos] == 'Z' || buf[pos] == 'z')) {
        ++pos;
    } else if (pos < buf.size() && (buf[pos] == '+' || buf[pos] == '-')) {
        const int sign = buf[pos] == '-' ? -1 : 1;
        unsigned oh = 0;
        unsigned om = 0;
        if (std::sscanf(buf.c_str() + pos + 1, "%2u:%2u", &oh, &om) != 2) {
            return std::nullopt;
        }
        offset_min = sign * static_cast<std::int64_t>(oh * 60 + om);
        pos += 6;
    } else {
        return std::nullopt;
    }
    if (pos != buf.size()) {
        return std::nullopt;
    }
    const std::int64_t days = days_from_civil(y, mo, d);
    return ((days * 24 + h) * 60 + mi - offset_min) * 60'000 + static_cast<std::int64_t>(s) * 1000 + millis;
}

} // namespace lsfs
