#include "labourflow/core.hpp"

#include <cctype>

namespace labourflow {

std::string QuarterId::str() const {
    return std::to_string(year) + "Q" + std::to_string(quarter);
}

QuarterId QuarterId::parse(const std::string& text) {
    if (text.size() != 6 || text[4] != 'Q')
        throw Error("bad quarter '" + text + "' (expected YYYYQn)");
    for (int i = 0; i < 4; ++i)
        if (!std::isdigit(static_cast<unsigned char>(text[i])))
            throw Error("bad quarter '" + text + "' (expected YYYYQn)");
    int q = text[5] - '0';
    if (q < 1 || q > 4)
        throw Error("bad quarter '" + text + "' (quarter digit must be 1..4)");
    return QuarterId{std::stoi(text.substr(0, 4)), q};
}

// Howard Hinnant's civil date algorithms.
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& year, int& month, int& day) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    day = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    month = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    year = static_cast<int>(y + (month <= 2));
}

std::int64_t quarter_start_epoch(const QuarterId& q) {
    const int month = (q.quarter - 1) * 3 + 1;
    return days_from_civil(q.year, month, 1) * 86400 - kCstOffsetSeconds;
}

}  // namespace labourflow
