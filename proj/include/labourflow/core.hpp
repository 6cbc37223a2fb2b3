#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace labourflow {

// Stable opaque identifier for a registry entry (province, city or district).
using CityId = std::string;

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// All timestamps in the data are Chinese; civil-date math applies this offset
// (China Standard Time, no DST) before splitting an epoch into days.
inline constexpr std::int64_t kCstOffsetSeconds = 8 * 3600;

// Calendar quarter in China Standard Time, printed as e.g. "2020Q1".
struct QuarterId {
    int year = 0;
    int quarter = 0;  // 1..4

    friend bool operator==(const QuarterId&, const QuarterId&) = default;
    friend auto operator<=>(const QuarterId&, const QuarterId&) = default;

    std::string str() const;
    // Strict "YYYYQn" with n in 1..4; throws Error otherwise.
    static QuarterId parse(const std::string& text);
};

// Days since 1970-01-01 of a proleptic Gregorian date.
std::int64_t days_from_civil(int year, int month, int day);

// Inverse of days_from_civil.
void civil_from_days(std::int64_t days, int& year, int& month, int& day);

// Epoch seconds (UTC) of the first instant of the quarter in CST.
std::int64_t quarter_start_epoch(const QuarterId& q);

}  // namespace labourflow

template <>
struct std::hash<labourflow::QuarterId> {
    std::size_t operator()(const labourflow::QuarterId& q) const noexcept {
        return std::hash<int>()(q.year * 4 + q.quarter);
    }
};
