#include "labourflow/matcher.hpp"

#include <algorithm>
#include <deque>
#include <map>

namespace labourflow::match {

PlaceDictionary PlaceDictionary::build(const geo::Registry& registry) {
    if (registry.size() == 0) throw Error("cannot build place dictionary from an empty registry");

    // Collect surface -> candidate ids over all names and aliases. A map
    // keeps pattern order deterministic regardless of registry file order.
    std::map<std::string, std::vector<CityId>> table;
    for (const geo::City& c : registry.entries()) {
        table[c.official_name].push_back(c.city_id);
        for (const std::string& alias : c.aliases) table[alias].push_back(c.city_id);
    }

    PatternTable patterns;
    patterns.reserve(table.size());
    for (auto& [surface, ids] : table) {
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        patterns.emplace_back(surface, std::move(ids));
    }
    return from_patterns(patterns);
}

PlaceDictionary PlaceDictionary::from_patterns(const PatternTable& patterns) {
    PlaceDictionary dict;
    for (const auto& [surface, ids] : patterns) {
        if (surface.empty()) throw Error("empty pattern in place dictionary");
        if (ids.empty()) throw Error("pattern '" + surface + "' has no candidate places");
        dict.surfaces_.push_back(surface);
        auto sorted = ids;
        std::sort(sorted.begin(), sorted.end());
        sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
        dict.candidates_.push_back(std::move(sorted));
    }
    if (dict.surfaces_.empty()) throw Error("place dictionary has no patterns");
    dict.compile();
    return dict;
}

void PlaceDictionary::compile() {
    surface_index_.reserve(surfaces_.size());
    for (std::size_t i = 0; i < surfaces_.size(); ++i) {
        if (!surface_index_.emplace(surfaces_[i], i).second)
            throw Error("duplicate pattern '" + surfaces_[i] + "'");
    }

    // Trie with explicit goto table per node.
    nodes_.clear();
    nodes_.push_back(Node{});
    nodes_[0].next.fill(-1);
    for (std::size_t pid = 0; pid < surfaces_.size(); ++pid) {
        std::int32_t cur = 0;
        for (const unsigned char ch : surfaces_[pid]) {
            if (nodes_[cur].next[ch] < 0) {
                nodes_[cur].next[ch] = static_cast<std::int32_t>(nodes_.size());
                nodes_.push_back(Node{});
                nodes_.back().next.fill(-1);
            }
            cur = nodes_[cur].next[ch];
        }
        nodes_[cur].out.push_back(static_cast<std::int32_t>(pid));
    }

    // BFS: convert missing transitions to suffix-link transitions and fold
    // each node's suffix outputs into its own output list.
    std::vector<std::int32_t> fail(nodes_.size(), 0);
    std::deque<std::int32_t> queue;
    for (int ch = 0; ch < 256; ++ch) {
        std::int32_t& t = nodes_[0].next[ch];
        if (t < 0) {
            t = 0;
        } else {
            fail[t] = 0;
            queue.push_back(t);
        }
    }
    while (!queue.empty()) {
        const std::int32_t u = queue.front();
        queue.pop_front();
        const auto& fail_out = nodes_[fail[u]].out;
        nodes_[u].out.insert(nodes_[u].out.end(), fail_out.begin(), fail_out.end());
        for (int ch = 0; ch < 256; ++ch) {
            std::int32_t& t = nodes_[u].next[ch];
            if (t < 0) {
                t = nodes_[fail[u]].next[ch];
            } else {
                fail[t] = nodes_[fail[u]].next[ch];
                queue.push_back(t);
            }
        }
    }
}

std::vector<MatchCandidate> PlaceDictionary::match_places(std::string_view text) const {
    std::vector<MatchCandidate> out;
    std::int32_t state = 0;
    for (std::size_t pos = 0; pos < text.size(); ++pos) {
        state = nodes_[state].next[static_cast<unsigned char>(text[pos])];
        for (const std::int32_t pid : nodes_[state].out) {
            const std::string& surface = surfaces_[pid];
            MatchCandidate m;
            m.surface = surface;
            m.begin = pos + 1 - surface.size();
            m.end = pos + 1;
            m.candidates = candidates_[pid];
            out.push_back(std::move(m));
        }
    }
    std::sort(out.begin(), out.end(), [](const MatchCandidate& a, const MatchCandidate& b) {
        return a.begin != b.begin ? a.begin < b.begin : a.end < b.end;
    });
    return out;
}

const std::vector<CityId>* PlaceDictionary::candidates_for(std::string_view surface) const {
    const auto it = surface_index_.find(surface);
    return it == surface_index_.end() ? nullptr : &candidates_[it->second];
}

CityId disambiguate(std::span<const CityId> candidates, const CityId& origin,
                    const geo::Registry& registry) {
    if (candidates.empty()) throw Error("disambiguate called with no candidates");

    std::vector<CityId> pool(candidates.begin(), candidates.end());
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
    if (pool.size() == 1) return pool.front();

    const geo::City& origin_city = registry.at(origin);

    // Rule 1: same province as the origin.
    std::vector<CityId> same_province;
    for (const CityId& id : pool)
        if (registry.at(id).province_id == origin_city.province_id) same_province.push_back(id);
    if (!same_province.empty()) pool = std::move(same_province);
    if (pool.size() == 1) return pool.front();

    // Rule 2: higher administrative level (province > prefecture > district).
    geo::AdminLevel top = geo::AdminLevel::district;
    for (const CityId& id : pool) top = std::max(top, registry.at(id).admin_level);
    std::erase_if(pool, [&](const CityId& id) { return registry.at(id).admin_level != top; });
    if (pool.size() == 1) return pool.front();

    // Rule 3: closer to the origin.
    double best = registry.city_distance(origin, pool.front());
    for (const CityId& id : pool) best = std::min(best, registry.city_distance(origin, id));
    std::erase_if(pool, [&](const CityId& id) { return registry.city_distance(origin, id) != best; });

    // Residual tie: pool is sorted, take the smallest id.
    return pool.front();
}

std::optional<CityId> resolve_destination(std::span<const MatchCandidate> matches,
                                          const CityId& origin, const geo::Registry& registry) {
    std::vector<CityId> resolved;  // first-occurrence order, distinct
    for (const MatchCandidate& m : matches) {
        CityId place = disambiguate(m.candidates, origin, registry);
        if (std::find(resolved.begin(), resolved.end(), place) == resolved.end())
            resolved.push_back(std::move(place));
    }
    if (resolved.empty()) return std::nullopt;

    geo::AdminLevel lowest = geo::AdminLevel::province;
    for (const CityId& id : resolved) lowest = std::min(lowest, registry.at(id).admin_level);
    if (lowest == geo::AdminLevel::province) return std::nullopt;  // no city-level destination

    for (const CityId& id : resolved) {
        const geo::City& c = registry.at(id);
        if (c.admin_level != lowest) continue;
        if (c.admin_level == geo::AdminLevel::district) return *c.parent_city_id;
        return id;
    }
    return std::nullopt;  // unreachable
}

}  // namespace labourflow::match
