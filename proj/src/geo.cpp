#include "labourflow/geo.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "labourflow/io_util.hpp"

namespace labourflow::geo {

namespace {

constexpr double kEarthRadiusKm = 6371.0;
constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

bool point_on_segment(LatLon p, LatLon a, LatLon b) {
    const double cross = (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
    if (cross != 0.0) return false;
    return p.lat >= std::min(a.lat, b.lat) && p.lat <= std::max(a.lat, b.lat) &&
           p.lon >= std::min(a.lon, b.lon) && p.lon <= std::max(a.lon, b.lon);
}

}  // namespace

std::string_view to_string(AdminLevel level) {
    switch (level) {
        case AdminLevel::district: return "district";
        case AdminLevel::prefecture_city: return "prefecture_city";
        case AdminLevel::province: return "province";
    }
    return "?";
}

std::string_view to_string(Tier tier) {
    switch (tier) {
        case Tier::T1: return "T1";
        case Tier::NewT1: return "NewT1";
        case Tier::T2: return "T2";
        case Tier::T3: return "T3";
        case Tier::T4: return "T4";
        case Tier::T5: return "T5";
    }
    return "?";
}

std::optional<AdminLevel> admin_level_from(std::string_view s) {
    if (s == "district") return AdminLevel::district;
    if (s == "prefecture_city") return AdminLevel::prefecture_city;
    if (s == "province") return AdminLevel::province;
    return std::nullopt;
}

std::optional<Tier> tier_from(std::string_view s) {
    if (s == "T1") return Tier::T1;
    if (s == "NewT1") return Tier::NewT1;
    if (s == "T2") return Tier::T2;
    if (s == "T3") return Tier::T3;
    if (s == "T4") return Tier::T4;
    if (s == "T5") return Tier::T5;
    return std::nullopt;
}

double haversine_km(LatLon a, LatLon b) {
    const double phi1 = a.lat * kDegToRad;
    const double phi2 = b.lat * kDegToRad;
    const double dphi = (b.lat - a.lat) * kDegToRad;
    const double dlambda = (b.lon - a.lon) * kDegToRad;
    const double s = std::sin(dphi / 2);
    const double t = std::sin(dlambda / 2);
    const double h = s * s + std::cos(phi1) * std::cos(phi2) * t * t;
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

bool point_in_ring(LatLon p, std::span<const LatLon> ring) {
    for (std::size_t i = 0; i + 1 < ring.size(); ++i)
        if (point_on_segment(p, ring[i], ring[i + 1])) return true;

    bool inside = false;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        const LatLon& a = ring[i];
        const LatLon& b = ring[i + 1];
        if ((a.lat > p.lat) != (b.lat > p.lat)) {
            const double x = a.lon + (p.lat - a.lat) / (b.lat - a.lat) * (b.lon - a.lon);
            if (p.lon < x) inside = !inside;
        }
    }
    return inside;
}

Registry::Registry(std::vector<City> entries) : entries_(std::move(entries)) {
    std::sort(entries_.begin(), entries_.end(),
              [](const City& a, const City& b) { return a.city_id < b.city_id; });

    index_.reserve(entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const City& c = entries_[i];
        if (c.city_id.empty()) throw Error("registry entry with empty city_id");
        if (!index_.emplace(c.city_id, i).second)
            throw Error("duplicate city_id '" + c.city_id + "'");
    }

    std::unordered_map<std::string, const City*> name_province;
    for (const City& c : entries_) {
        const std::string key = c.official_name + "\x1f" + c.province_id;
        auto [it, fresh] = name_province.emplace(key, &c);
        if (!fresh)
            throw Error("duplicate (official_name, province) pair for '" + c.city_id + "' and '" +
                        it->second->city_id + "'");

        if (c.centroid.lat < -90 || c.centroid.lat > 90 || c.centroid.lon < -180 ||
            c.centroid.lon > 180)
            throw Error("centroid out of range for '" + c.city_id + "'");

        for (const auto& ring : c.polygon) {
            if (ring.size() < 4)
                throw Error("polygon ring with fewer than 4 vertices for '" + c.city_id + "'");
            if (!(ring.front() == ring.back()))
                throw Error("polygon ring not closed for '" + c.city_id + "'");
        }

        if (c.admin_level == AdminLevel::district) {
            if (!c.parent_city_id)
                throw Error("district '" + c.city_id + "' has no parent_city_id");
            const City* parent = find(*c.parent_city_id);
            if (!parent)
                throw Error("dangling parent: district '" + c.city_id + "' points at unknown '" +
                            *c.parent_city_id + "'");
            if (parent->admin_level != AdminLevel::prefecture_city)
                throw Error("dangling parent: district '" + c.city_id +
                            "' must point at a prefecture_city, got '" + parent->city_id + "'");
        }
    }

    for (const City& c : entries_)
        if (c.admin_level == AdminLevel::prefecture_city) city_ids_.push_back(c.city_id);

    ring_bounds_.resize(entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        for (const auto& ring : entries_[i].polygon) {
            Bounds b{ring[0].lat, ring[0].lat, ring[0].lon, ring[0].lon};
            for (const LatLon& v : ring) {
                b.min_lat = std::min(b.min_lat, v.lat);
                b.max_lat = std::max(b.max_lat, v.lat);
                b.min_lon = std::min(b.min_lon, v.lon);
                b.max_lon = std::max(b.max_lon, v.lon);
            }
            ring_bounds_[i].push_back(b);
        }
    }
}

const City* Registry::find(const CityId& id) const noexcept {
    const auto it = index_.find(id);
    return it == index_.end() ? nullptr : &entries_[it->second];
}

const City& Registry::at(const CityId& id) const {
    const City* c = find(id);
    if (!c) throw Error("unknown city_id '" + id + "'");
    return *c;
}

std::optional<CityId> Registry::locate_point(LatLon p) const {
    if (p.lat < -90 || p.lat > 90 || p.lon < -180 || p.lon > 180)
        throw Error("coordinate out of range (" + io::format_double(p.lat) + ", " +
                    io::format_double(p.lon) + ")");

    const City* best = nullptr;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const City& c = entries_[i];
        if (c.admin_level == AdminLevel::province) continue;
        if (best && best->admin_level < c.admin_level) continue;

        bool contained = false;
        for (std::size_t r = 0; r < c.polygon.size() && !contained; ++r) {
            const Bounds& b = ring_bounds_[i][r];
            if (p.lat < b.min_lat || p.lat > b.max_lat || p.lon < b.min_lon || p.lon > b.max_lon)
                continue;
            contained = point_in_ring(p, c.polygon[r]);
        }
        if (!contained) continue;

        if (!best || c.admin_level < best->admin_level ||
            (c.admin_level == best->admin_level && c.city_id < best->city_id))
            best = &c;
    }

    if (!best) return std::nullopt;
    if (best->admin_level == AdminLevel::district) return *best->parent_city_id;
    return best->city_id;
}

double Registry::city_distance(const CityId& a, const CityId& b) const {
    const City& ca = at(a);
    const City& cb = at(b);
    if (a == b) return 0.0;
    return haversine_km(ca.centroid, cb.centroid);
}

namespace {

std::vector<LatLon> ring_from_flat(const nlohmann::json& flat, const std::string& id) {
    if (!flat.is_array() || flat.size() % 2 != 0)
        throw Error("polygon ring for '" + id + "' must be a flat [lat,lon,...] array of even length");
    std::vector<LatLon> ring;
    ring.reserve(flat.size() / 2);
    for (std::size_t i = 0; i < flat.size(); i += 2)
        ring.push_back(LatLon{flat[i].get<double>(), flat[i + 1].get<double>()});
    return ring;
}

City city_from_json(const nlohmann::json& j) {
    City c;
    c.city_id = j.at("city_id").get<std::string>();
    c.official_name = j.at("official_name").get<std::string>();
    if (j.contains("aliases"))
        for (const auto& a : j.at("aliases")) c.aliases.push_back(a.get<std::string>());
    c.province_id = j.at("province_id").get<std::string>();

    const auto level = admin_level_from(j.at("admin_level").get<std::string>());
    if (!level) throw Error("unknown admin_level for '" + c.city_id + "'");
    c.admin_level = *level;

    if (j.contains("tier") && !j.at("tier").is_null()) {
        const auto tier = tier_from(j.at("tier").get<std::string>());
        if (!tier) throw Error("unknown tier for '" + c.city_id + "'");
        c.tier = *tier;
    }

    const auto& cen = j.at("centroid");
    c.centroid = LatLon{cen.at(0).get<double>(), cen.at(1).get<double>()};

    if (j.contains("polygon"))
        for (const auto& ring : j.at("polygon")) c.polygon.push_back(ring_from_flat(ring, c.city_id));

    if (j.contains("parent_city_id") && !j.at("parent_city_id").is_null())
        c.parent_city_id = j.at("parent_city_id").get<std::string>();
    return c;
}

}  // namespace

Registry load_registry(const std::filesystem::path& path) {
    std::vector<City> cities;
    io::for_each_line(path, [&](std::size_t lineno, std::string_view line) {
        if (line.empty()) return;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw Error(path.string() + ":" + std::to_string(lineno) + ": invalid JSON record");
        try {
            cities.push_back(city_from_json(j));
        } catch (const nlohmann::json::exception& e) {
            throw Error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    });
    if (cities.empty()) throw Error(path.string() + ": registry file has no records");
    return Registry(std::move(cities));
}

std::vector<Indicator> load_indicators(const std::filesystem::path& path) {
    std::vector<Indicator> out;
    io::for_each_line(path, [&](std::size_t lineno, std::string_view line) {
        if (line.empty()) return;
        const auto fields = io::split(line, '\t');
        if (fields.size() != 3)
            throw Error(path.string() + ":" + std::to_string(lineno) +
                        ": expected 3 tab-separated fields");
        const auto value = io::parse_double(fields[2]);
        if (!value || !std::isfinite(*value))
            throw Error(path.string() + ":" + std::to_string(lineno) +
                        ": indicator value must be a finite number");
        out.push_back(Indicator{std::string(fields[0]), std::string(fields[1]), *value});
    });
    return out;
}

}  // namespace labourflow::geo
