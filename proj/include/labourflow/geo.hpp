#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "labourflow/core.hpp"

namespace labourflow::geo {

// Ordered most-specific first: a district is the "lowest" level and a
// province the "highest". Comparisons below rely on this numbering.
enum class AdminLevel { district = 0, prefecture_city = 1, province = 2 };

enum class Tier { T1, NewT1, T2, T3, T4, T5 };

std::string_view to_string(AdminLevel level);
std::string_view to_string(Tier tier);
std::optional<AdminLevel> admin_level_from(std::string_view s);
std::optional<Tier> tier_from(std::string_view s);

struct LatLon {
    double lat = 0.0;
    double lon = 0.0;
    friend bool operator==(const LatLon&, const LatLon&) = default;
};

struct City {
    CityId city_id;
    std::string official_name;
    std::vector<std::string> aliases;
    std::string province_id;
    AdminLevel admin_level = AdminLevel::prefecture_city;
    Tier tier = Tier::T5;
    LatLon centroid;
    // Simple closed rings (first vertex == last, >= 4 vertices). An entry
    // with no rings cannot be located by coordinate but still participates
    // in name matching.
    std::vector<std::vector<LatLon>> polygon;
    std::optional<CityId> parent_city_id;  // districts point at their city
};

struct Indicator {
    CityId city_id;
    std::string name;
    double value = 0.0;
};

// Great-circle distance on a sphere of radius 6371.0 km.
double haversine_km(LatLon a, LatLon b);

// Even-odd containment test; points on the boundary count as inside.
bool point_in_ring(LatLon p, std::span<const LatLon> ring);

class Registry {
public:
    // Validates every structural invariant; throws Error naming the
    // offending entry otherwise.
    explicit Registry(std::vector<City> entries);

    std::size_t size() const { return entries_.size(); }
    std::span<const City> entries() const { return entries_; }
    const City* find(const CityId& id) const noexcept;
    const City& at(const CityId& id) const;  // throws Error for unknown ids

    // Prefecture-level cities in city_id order; the node universe of the
    // quarterly flow graphs.
    const std::vector<CityId>& city_ids() const { return city_ids_; }

    // Maps a coordinate to the prefecture city whose territory contains it.
    // When several polygons contain the point the lowest admin level wins,
    // ties broken by lexicographic city_id; districts resolve to their
    // parent city. Province polygons never produce an origin.
    // Throws Error for out-of-range coordinates.
    std::optional<CityId> locate_point(LatLon point) const;

    // Centroid-to-centroid great-circle distance in kilometres.
    double city_distance(const CityId& a, const CityId& b) const;

private:
    struct Bounds {
        double min_lat, max_lat, min_lon, max_lon;
    };

    std::vector<City> entries_;
    std::unordered_map<CityId, std::size_t> index_;
    std::vector<CityId> city_ids_;
    std::vector<std::vector<Bounds>> ring_bounds_;  // parallel to entries_
};

// Reads a line-JSON registry file (one City object per line). Parse errors
// carry the line number; invariant violations name the entry.
Registry load_registry(const std::filesystem::path& path);

// Reads (city_id, name, value) tab-separated rows.
std::vector<Indicator> load_indicators(const std::filesystem::path& path);

}  // namespace labourflow::geo
