#include "labourflow/ingest.hpp"

#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>

#include "labourflow/io_util.hpp"

namespace labourflow::ingest {

namespace {

// Records with an embedded tab or newline would not round-trip through the
// tab-separated files, so the writers refuse them up front.
void check_field(std::string_view value, std::string_view what) {
    if (value.find_first_of("\t\n\r") != std::string_view::npos) {
        throw Error("field '" + std::string(what) + "' contains a tab or newline");
    }
}

std::int64_t floor_div_day(std::int64_t seconds) {
    return seconds >= 0 ? seconds / 86400 : -((-seconds + 86399) / 86400);
}

bool contains_any(const QueryRecord& r, std::span<const std::string> keywords) {
    for (const std::string& kw : keywords) {
        if (r.query_text.find(kw) != std::string::npos) return true;
        if (r.clicked_title && r.clicked_title->find(kw) != std::string::npos) return true;
    }
    return false;
}

}  // namespace

const std::vector<std::string>& default_job_keywords() {
    static const std::vector<std::string> kKeywords = {"recruitment", "job hunting"};
    return kKeywords;
}

QuarterId quarter_of(std::int64_t timestamp) {
    const std::int64_t shifted = timestamp + kCstOffsetSeconds;
    if (shifted < 0) {
        throw Error("timestamp " + std::to_string(timestamp) + " is before 1970 in CST");
    }
    int y = 0, m = 0, d = 0;
    civil_from_days(shifted / 86400, y, m, d);
    return QuarterId{y, (m - 1) / 3 + 1};
}

std::int64_t cst_day_of(std::int64_t timestamp) {
    return floor_div_day(timestamp + kCstOffsetSeconds);
}

std::vector<QueryRecord> filter_job_queries(std::span<const QueryRecord> records,
                                            std::span<const std::string> keywords) {
    if (keywords.empty()) throw Error("job keyword list must not be empty");
    std::vector<QueryRecord> kept;
    for (const QueryRecord& r : records) {
        if (contains_any(r, keywords)) kept.push_back(r);
    }
    return kept;
}

std::vector<QueryRecord> dedup(std::span<const QueryRecord> records,
                               const geo::Registry& registry) {
    std::vector<QueryRecord> kept;
    std::unordered_set<std::string> seen;
    seen.reserve(records.size() * 2);
    for (const QueryRecord& r : records) {
        std::string key = std::to_string(cst_day_of(r.timestamp));
        key += '\x1f';
        key += r.query_text;
        key += '\x1f';
        // Distinguish "absent title" from "empty title" so the key is exact.
        key += r.clicked_title ? "t:" + *r.clicked_title : std::string("-");
        key += '\x1f';
        if (auto city = registry.locate_point(r.location)) key += *city;
        if (seen.insert(std::move(key)).second) kept.push_back(r);
    }
    return kept;
}

std::vector<FlowIntentRecord> extract_flow_intents(std::span<const QueryRecord> records,
                                                   const geo::Registry& registry,
                                                   const match::PlaceDictionary& dict,
                                                   ExtractDiagnostics* diag) {
    ExtractDiagnostics local;
    std::vector<FlowIntentRecord> out;
    for (const QueryRecord& r : records) {
        const auto origin = registry.locate_point(r.location);
        if (!origin) {
            ++local.dropped_no_origin;
            continue;
        }
        auto matches = dict.match_places(r.query_text);
        auto dest = match::resolve_destination(matches, *origin, registry);
        if (!dest && r.clicked_title) {
            matches = dict.match_places(*r.clicked_title);
            dest = match::resolve_destination(matches, *origin, registry);
        }
        if (!dest) {
            ++local.dropped_no_destination;
            continue;
        }
        if (*dest == *origin) {
            ++local.dropped_same_city;
            continue;
        }
        out.push_back(FlowIntentRecord{*origin, *dest, quarter_of(r.timestamp)});
    }
    if (diag) *diag += local;
    return out;
}

std::vector<QueryRecord> read_query_log(const std::filesystem::path& path,
                                        ParseDiagnostics* diag) {
    std::vector<QueryRecord> out;
    ParseDiagnostics local;
    io::for_each_line(path, [&](std::size_t, std::string_view line) {
        if (line.empty()) return;
        const auto fields = io::split(line, '\t');
        if (fields.size() != 5) {
            ++local.malformed_lines;
            return;
        }
        const auto ts = io::parse_int(fields[0]);
        const auto lat = io::parse_double(fields[1]);
        const auto lon = io::parse_double(fields[2]);
        if (!ts || !lat || !lon || *ts <= 0 || *lat < -90.0 || *lat > 90.0 ||
            *lon < -180.0 || *lon > 180.0) {
            ++local.malformed_lines;
            return;
        }
        QueryRecord r;
        r.timestamp = *ts;
        r.location.lat = *lat;
        r.location.lon = *lon;
        r.query_text = std::string(fields[3]);
        if (!fields[4].empty()) r.clicked_title = std::string(fields[4]);
        out.push_back(std::move(r));
    });
    if (diag) diag->malformed_lines += local.malformed_lines;
    return out;
}

std::string format_query_log(std::span<const QueryRecord> records) {
    std::string out;
    for (const QueryRecord& r : records) {
        check_field(r.query_text, "query_text");
        if (r.clicked_title) check_field(*r.clicked_title, "clicked_title");
        out += std::to_string(r.timestamp);
        out += '\t';
        out += io::format_double(r.location.lat);
        out += '\t';
        out += io::format_double(r.location.lon);
        out += '\t';
        out += r.query_text;
        out += '\t';
        if (r.clicked_title) out += *r.clicked_title;
        out += '\n';
    }
    return out;
}

std::vector<JobPostingRecord> read_postings(const std::filesystem::path& path,
                                            ParseDiagnostics* diag) {
    std::vector<JobPostingRecord> out;
    ParseDiagnostics local;
    io::for_each_line(path, [&](std::size_t, std::string_view line) {
        if (line.empty()) return;
        const auto fields = io::split(line, '\t');
        if (fields.size() != 4 || fields[1].empty() || fields[2].empty()) {
            ++local.malformed_lines;
            return;
        }
        const auto ts = io::parse_int(fields[0]);
        if (!ts || *ts <= 0) {
            ++local.malformed_lines;
            return;
        }
        JobPostingRecord r;
        r.publish_timestamp = *ts;
        r.working_city = std::string(fields[1]);
        r.title = std::string(fields[2]);
        r.description = std::string(fields[3]);
        out.push_back(std::move(r));
    });
    if (diag) diag->malformed_lines += local.malformed_lines;
    return out;
}

std::string format_postings(std::span<const JobPostingRecord> records) {
    std::string out;
    for (const JobPostingRecord& r : records) {
        check_field(r.working_city, "working_city");
        check_field(r.title, "title");
        check_field(r.description, "description");
        if (r.title.empty()) throw Error("posting title must not be empty");
        out += std::to_string(r.publish_timestamp);
        out += '\t';
        out += r.working_city;
        out += '\t';
        out += r.title;
        out += '\t';
        out += r.description;
        out += '\n';
    }
    return out;
}

std::vector<FlowIntentRecord> read_flow_intents(const std::filesystem::path& path) {
    std::vector<FlowIntentRecord> out;
    io::for_each_line(path, [&](std::size_t lineno, std::string_view line) {
        if (line.empty()) return;
        const auto fields = io::split(line, '\t');
        if (fields.size() != 3) {
            throw Error(path.string() + ":" + std::to_string(lineno) +
                        ": expected 3 tab-separated fields");
        }
        FlowIntentRecord r;
        r.origin = std::string(fields[0]);
        r.destination = std::string(fields[1]);
        try {
            r.quarter = QuarterId::parse(std::string(fields[2]));
        } catch (const Error& e) {
            throw Error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        if (r.origin.empty() || r.destination.empty() || r.origin == r.destination) {
            throw Error(path.string() + ":" + std::to_string(lineno) +
                        ": invalid flow intent record");
        }
        out.push_back(std::move(r));
    });
    return out;
}

std::string format_flow_intents(std::span<const FlowIntentRecord> records) {
    std::string out;
    for (const FlowIntentRecord& r : records) {
        out += r.origin;
        out += '\t';
        out += r.destination;
        out += '\t';
        out += r.quarter.str();
        out += '\n';
    }
    return out;
}

}  // namespace labourflow::ingest
