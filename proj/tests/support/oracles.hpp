#pragma once

// Independent reference implementations that the tests compare the library
// against. Everything here favours obviousness over speed: naive scans,
// double loops, exhaustive enumeration.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "labourflow/core.hpp"
#include "labourflow/geo.hpp"

namespace oracle {

// ---------------------------------------------------------------- matching

struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::string surface;
    friend auto operator<=>(const Span&, const Span&) = default;
};

// Every occurrence of every pattern found with std::string_view::find.
inline std::vector<Span> naive_match(std::span<const std::string> patterns,
                                     std::string_view text) {
    std::vector<Span> out;
    std::set<std::string_view> seen;
    for (const std::string& pattern : patterns) {
        if (pattern.empty() || !seen.insert(pattern).second) continue;
        for (std::size_t pos = text.find(pattern); pos != std::string_view::npos;
             pos = text.find(pattern, pos + 1)) {
            out.push_back({pos, pos + pattern.size(), pattern});
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

// -------------------------------------------------- disambiguation cascade

// Literal rule-by-rule filter: same province, then highest administrative
// level, then smallest centroid distance, then smallest id.
inline labourflow::CityId rule_cascade(std::vector<labourflow::CityId> pool,
                                       const labourflow::CityId& origin,
                                       const labourflow::geo::Registry& registry) {
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
    if (pool.size() > 1) {
        const std::string& province = registry.at(origin).province_id;
        std::vector<labourflow::CityId> same;
        for (const auto& id : pool) {
            if (registry.at(id).province_id == province) same.push_back(id);
        }
        if (!same.empty()) pool = std::move(same);
    }
    if (pool.size() > 1) {
        int best = -1;
        for (const auto& id : pool) {
            best = std::max(best, static_cast<int>(registry.at(id).admin_level));
        }
        std::erase_if(pool, [&](const labourflow::CityId& id) {
            return static_cast<int>(registry.at(id).admin_level) != best;
        });
    }
    if (pool.size() > 1) {
        double best = registry.city_distance(pool.front(), origin);
        for (const auto& id : pool) {
            best = std::min(best, registry.city_distance(id, origin));
        }
        std::erase_if(pool, [&](const labourflow::CityId& id) {
            return registry.city_distance(id, origin) != best;
        });
    }
    return pool.front();
}

// ------------------------------------------------------------- ray casting

// Independent even-odd test. Points on a segment count as inside.
inline bool point_on_segment(labourflow::geo::LatLon p, labourflow::geo::LatLon a,
                             labourflow::geo::LatLon b) {
    const double cross =
        (b.lat - a.lat) * (p.lon - a.lon) - (b.lon - a.lon) * (p.lat - a.lat);
    if (cross != 0.0) return false;
    return p.lat >= std::min(a.lat, b.lat) && p.lat <= std::max(a.lat, b.lat) &&
           p.lon >= std::min(a.lon, b.lon) && p.lon <= std::max(a.lon, b.lon);
}

inline bool ray_cast_inside(labourflow::geo::LatLon p,
                            std::span<const labourflow::geo::LatLon> ring) {
    bool inside = false;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        const auto a = ring[i];
        const auto b = ring[i + 1];
        if (point_on_segment(p, a, b)) return true;
        const bool crosses = (a.lat > p.lat) != (b.lat > p.lat);
        if (!crosses) continue;
        const double lon_at = a.lon + (p.lat - a.lat) / (b.lat - a.lat) * (b.lon - a.lon);
        if (p.lon < lon_at) inside = !inside;
    }
    return inside;
}

// Registry-wide location: lowest admin level wins, ties by id, districts
// roll up to their parent, provinces never produce an origin.
inline std::optional<labourflow::CityId> locate_oracle(
    const labourflow::geo::Registry& registry, labourflow::geo::LatLon p) {
    const labourflow::geo::City* best = nullptr;
    for (const auto& city : registry.entries()) {
        if (city.admin_level == labourflow::geo::AdminLevel::province) continue;
        bool contains = false;
        for (const auto& ring : city.polygon) {
            if (ray_cast_inside(p, ring)) {
                contains = true;
                break;
            }
        }
        if (!contains) continue;
        if (best == nullptr ||
            static_cast<int>(city.admin_level) < static_cast<int>(best->admin_level) ||
            (city.admin_level == best->admin_level && city.city_id < best->city_id)) {
            best = &city;
        }
    }
    if (best == nullptr) return std::nullopt;
    if (best->parent_city_id) return *best->parent_city_id;
    return best->city_id;
}

// ------------------------------------------------------------------- HITS

inline void l1_normalize(std::vector<double>& v) {
    double sum = 0.0;
    for (const double x : v) sum += x;
    if (sum > 0.0) {
        for (double& x : v) x /= sum;
    }
}

// Dominant eigenvector (L1-normalized) of a dense non-negative matrix by
// plain power iteration from a uniform start.
inline std::vector<double> dominant_eigenvector(const std::vector<std::vector<double>>& m,
                                                double tol = 1e-14,
                                                int max_iter = 500000) {
    const std::size_t n = m.size();
    std::vector<double> v(n, 1.0 / static_cast<double>(n));
    for (int it = 0; it < max_iter; ++it) {
        std::vector<double> next(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) next[i] += m[i][j] * v[j];
        }
        l1_normalize(next);
        double delta = 0.0;
        for (std::size_t i = 0; i < n; ++i) delta = std::max(delta, std::abs(next[i] - v[i]));
        v = std::move(next);
        if (delta < tol) break;
    }
    return v;
}

// (authority, hub) from dense eigen-iteration on PᵀP and PPᵀ.
inline std::pair<std::vector<double>, std::vector<double>> hits_eigen(
    const std::vector<std::vector<double>>& w) {
    const std::size_t n = w.size();
    std::vector<std::vector<double>> p(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += w[i][j];
        if (row > 0.0) {
            for (std::size_t j = 0; j < n; ++j) p[i][j] = w[i][j] / row;
        }
    }
    std::vector<std::vector<double>> ptp(n, std::vector<double>(n, 0.0));
    std::vector<std::vector<double>> ppt(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double a = 0.0, h = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                a += p[k][i] * p[k][j];
                h += p[i][k] * p[j][k];
            }
            ptp[i][j] = a;
            ppt[i][j] = h;
        }
    }
    return {dominant_eigenvector(ptp), dominant_eigenvector(ppt)};
}

// ------------------------------------------------------------- modularity

inline double modularity_double_loop(const std::vector<std::vector<double>>& w,
                                     std::span<const std::int32_t> assignment,
                                     double gamma) {
    const std::size_t n = w.size();
    std::vector<std::vector<double>> s(n, std::vector<double>(n, 0.0));
    double two_m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            s[i][j] = w[i][j] + w[j][i];
            two_m += s[i][j];
        }
    }
    std::vector<double> k(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) k[i] += s[i][j];
    }
    double q = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (assignment[i] != assignment[j]) continue;
            q += s[i][j] - gamma * k[i] * k[j] / two_m;
        }
    }
    return q / two_m;
}

// Enumerates every set partition of {0..n-1} as a restricted-growth string.
inline void for_each_partition(std::size_t n,
                               const std::function<void(const std::vector<std::int32_t>&)>& fn) {
    std::vector<std::int32_t> a(n, 0);
    const std::function<void(std::size_t, std::int32_t)> rec = [&](std::size_t i,
                                                                   std::int32_t max_used) {
        if (i == n) {
            fn(a);
            return;
        }
        for (std::int32_t c = 0; c <= max_used + 1; ++c) {
            a[i] = c;
            rec(i + 1, std::max(max_used, c));
        }
    };
    if (n > 0) rec(1, 0);  // node 0 pinned to community 0 avoids relabels
}

// --------------------------------------------------------------- agreement

inline double adjusted_rand_index(std::span<const std::int32_t> a,
                                  std::span<const std::int32_t> b) {
    const auto comb2 = [](double x) { return x * (x - 1.0) / 2.0; };
    std::map<std::pair<std::int32_t, std::int32_t>, double> joint;
    std::map<std::int32_t, double> ra, rb;
    for (std::size_t i = 0; i < a.size(); ++i) {
        joint[{a[i], b[i]}] += 1.0;
        ra[a[i]] += 1.0;
        rb[b[i]] += 1.0;
    }
    double sum_joint = 0.0, sum_a = 0.0, sum_b = 0.0;
    for (const auto& [_, c] : joint) sum_joint += comb2(c);
    for (const auto& [_, c] : ra) sum_a += comb2(c);
    for (const auto& [_, c] : rb) sum_b += comb2(c);
    const double total = comb2(static_cast<double>(a.size()));
    const double expected = sum_a * sum_b / total;
    const double maximum = 0.5 * (sum_a + sum_b);
    if (maximum == expected) return 1.0;
    return (sum_joint - expected) / (maximum - expected);
}

// ------------------------------------------------------------ correlations

inline double pearson_r(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

inline std::vector<double> average_ranks(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && v[order[j]] == v[order[i]]) ++j;
        const double rank = (static_cast<double>(i) + static_cast<double>(j - 1)) / 2.0 + 1.0;
        for (std::size_t t = i; t < j; ++t) ranks[order[t]] = rank;
        i = j;
    }
    return ranks;
}

inline double spearman_r(std::span<const double> x, std::span<const double> y) {
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    return pearson_r(rx, ry);
}

// tau-b over all pairs with explicit tie bookkeeping.
inline double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    double concordant = 0.0, discordant = 0.0, ties_x = 0.0, ties_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = x[j] - x[i];
            const double dy = y[j] - y[i];
            if (dx == 0.0 && dy == 0.0) continue;
            if (dx == 0.0) {
                ties_x += 1.0;
            } else if (dy == 0.0) {
                ties_y += 1.0;
            } else if ((dx > 0.0) == (dy > 0.0)) {
                concordant += 1.0;
            } else {
                discordant += 1.0;
            }
        }
    }
    const double nc_nd = concordant + discordant;
    return (concordant - discordant) /
           std::sqrt((nc_nd + ties_x) * (nc_nd + ties_y));
}

// ----------------------------------------------------------------- kmeans

// Minimal within-cluster sum of squares over every 2-way partition.
inline double best_two_partition_wcss(const std::vector<std::vector<double>>& points) {
    const std::size_t n = points.size();
    const std::size_t dim = points.front().size();
    const auto wcss_of = [&](std::uint32_t mask) {
        std::vector<double> c0(dim, 0.0), c1(dim, 0.0);
        double n0 = 0.0, n1 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            auto& c = (mask >> i & 1u) ? c1 : c0;
            auto& cnt = (mask >> i & 1u) ? n1 : n0;
            for (std::size_t d = 0; d < dim; ++d) c[d] += points[i][d];
            cnt += 1.0;
        }
        for (std::size_t d = 0; d < dim; ++d) {
            c0[d] /= n0;
            c1[d] /= n1;
        }
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& c = (mask >> i & 1u) ? c1 : c0;
            for (std::size_t d = 0; d < dim; ++d) {
                const double diff = points[i][d] - c[d];
                total += diff * diff;
            }
        }
        return total;
    };
    double best = std::numeric_limits<double>::infinity();
    for (std::uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
        best = std::min(best, wcss_of(mask));
    }
    return best;
}

}  // namespace oracle
