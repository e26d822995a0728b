#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace lsfs {

/// Milliseconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

class Clock {
public:
    virtual ~Clock() = default;
    virtual Timestamp now() const = 0;
};

class SystemClock final : public Clock {
public:
    Timestamp now() const override;
};

/// Test clock. Time only moves when told to.
class ManualClock final : public Clock {
public:
    explicit ManualClock(Timestamp start = 0) : now_(start) {}

    Timestamp now() const override { return now_.load(); }
    void set(Timestamp t) { now_.store(t); }
    void advance(std::int64_t ms) { now_.fetch_add(ms); }

private:
    std::atomic<Timestamp> now_;
};

std::string format_rfc3339(Timestamp t);
std::optional<Timestamp> parse_rfc3339(std::string_view text);

/// Days since 1970-01-01 for a proleptic Gregorian date.
std::int64_t days_from_civil(std::int64_t year, unsigned month, unsigned day);

} // namespace lsfs
