#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "labourflow/core.hpp"
#include "labourflow/geo.hpp"

namespace labourflow::match {

struct MatchCandidate {
    std::string surface;
    std::size_t begin = 0;  // [begin, end) byte offsets into the text
    std::size_t end = 0;
    std::vector<CityId> candidates;  // sorted, unique
};

// Multi-pattern matcher over every official name and alias in the registry.
// Construction is linear in total pattern length; matching is linear in the
// text length plus the number of matches (Aho-Corasick with precomputed
// goto transitions).
class PlaceDictionary {
public:
    using PatternTable = std::vector<std::pair<std::string, std::vector<CityId>>>;

    static PlaceDictionary build(const geo::Registry& registry);
    static PlaceDictionary from_patterns(const PatternTable& patterns);

    // Every occurrence of every pattern, overlapping included, ordered by
    // (begin, end). Matching is exact over the raw bytes; no normalization.
    std::vector<MatchCandidate> match_places(std::string_view text) const;

    std::size_t pattern_count() const { return surfaces_.size(); }
    const std::vector<CityId>* candidates_for(std::string_view surface) const;

private:
    struct Node {
        std::array<std::int32_t, 256> next;
        std::vector<std::int32_t> out;  // pattern ids ending here
    };

    PlaceDictionary() = default;
    void compile();

    std::vector<std::string> surfaces_;
    std::vector<std::vector<CityId>> candidates_;
    std::unordered_map<std::string_view, std::size_t> surface_index_;
    std::vector<Node> nodes_;
};

// Picks one place out of an ambiguous candidate set by applying, in strict
// order: (1) same province as the origin, (2) higher administrative level,
// (3) smaller centroid distance to the origin; residual ties fall back to
// the lexicographically smallest place_id. Pure function of its inputs.
CityId disambiguate(std::span<const CityId> candidates, const CityId& origin,
                    const geo::Registry& registry);

// Resolves a full match list to a destination city: disambiguates every
// mention, keeps the mention with the lowest administrative level (district
// < prefecture < province, first occurrence breaking ties), rolls districts
// up to their city, and yields nothing for province-only mentions.
std::optional<CityId> resolve_destination(std::span<const MatchCandidate> matches,
                                          const CityId& origin, const geo::Registry& registry);

}  // namespace labourflow::match
