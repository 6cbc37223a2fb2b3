#include "labourflow/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "labourflow/core.hpp"

namespace labourflow::stats {

namespace {

void check_inputs(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error("correlation inputs differ in length");
    if (x.size() < 3) throw Error("correlation needs at least 3 samples");
    for (const double v : x) {
        if (!std::isfinite(v)) throw Error("correlation input is not finite");
    }
    for (const double v : y) {
        if (!std::isfinite(v)) throw Error("correlation input is not finite");
    }
}

double clamp_r(double r) { return std::clamp(r, -1.0, 1.0); }

// Two-sided p of a t statistic with df degrees of freedom.
double t_p_value(double t, double df) {
    const boost::math::students_t dist(df);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
    const auto n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw Error("correlation undefined: zero variance input");
    }
    return clamp_r(sxy / std::sqrt(sxx * syy));
}

// Merge-sort pass over the y sequence (already ordered by x) counting
// strict inversions, i.e. discordant pairs.
std::uint64_t count_inversions(std::vector<double>& v, std::vector<double>& tmp,
                               std::size_t lo, std::size_t hi) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::uint64_t inv =
        count_inversions(v, tmp, lo, mid) + count_inversions(v, tmp, mid, hi);
    std::size_t a = lo, b = mid, o = lo;
    while (a < mid && b < hi) {
        if (v[b] < v[a]) {
            inv += mid - a;
            tmp[o++] = v[b++];
        } else {
            tmp[o++] = v[a++];
        }
    }
    while (a < mid) tmp[o++] = v[a++];
    while (b < hi) tmp[o++] = v[b++];
    std::copy(tmp.begin() + static_cast<std::ptrdiff_t>(lo),
              tmp.begin() + static_cast<std::ptrdiff_t>(hi),
              v.begin() + static_cast<std::ptrdiff_t>(lo));
    return inv;
}

}  // namespace

std::string_view to_string(Method m) {
    switch (m) {
        case Method::pearson: return "pearson";
        case Method::spearman: return "spearman";
        case Method::kendall: return "kendall";
    }
    throw Error("invalid correlation method");
}

std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        // positions i..j share the average of ranks i+1..j+1
        const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

CorrelationResult pearson(std::span<const double> x, std::span<const double> y) {
    check_inputs(x, y);
    CorrelationResult res;
    res.method = Method::pearson;
    res.n = x.size();
    res.r = pearson_r(x, y);
    if (1.0 - res.r * res.r <= 0.0) {
        res.p_value = 0.0;
    } else {
        const double df = static_cast<double>(res.n) - 2.0;
        const double t = res.r * std::sqrt(df / (1.0 - res.r * res.r));
        res.p_value = std::clamp(t_p_value(t, df), 0.0, 1.0);
    }
    return res;
}

CorrelationResult spearman(std::span<const double> x, std::span<const double> y) {
    check_inputs(x, y);
    const std::vector<double> rx = average_ranks(x);
    const std::vector<double> ry = average_ranks(y);
    CorrelationResult res = pearson(rx, ry);
    res.method = Method::spearman;
    return res;
}

CorrelationResult kendall(std::span<const double> x, std::span<const double> y) {
    check_inputs(x, y);
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (x[a] != x[b]) return x[a] < x[b];
        return y[a] < y[b];
    });

    const auto nd = static_cast<double>(n);
    const double tot = nd * (nd - 1.0) / 2.0;

    // Tie bookkeeping: group sizes in x, in y, and in (x, y) jointly.
    double v1 = 0.0, v3 = 0.0;
    double vt_var = 0.0;     // sum t(t-1)(2t+5) over x-tie groups
    double sum_t2 = 0.0;     // sum t(t-1)
    double sum_t3 = 0.0;     // sum t(t-1)(t-2)
    {
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
            const double t = static_cast<double>(j - i + 1);
            v1 += t * (t - 1.0) / 2.0;
            vt_var += t * (t - 1.0) * (2.0 * t + 5.0);
            sum_t2 += t * (t - 1.0);
            sum_t3 += t * (t - 1.0) * (t - 2.0);
            std::size_t a = i;
            while (a <= j) {
                std::size_t b = a;
                while (b + 1 <= j && y[order[b + 1]] == y[order[a]]) ++b;
                const double u = static_cast<double>(b - a + 1);
                v3 += u * (u - 1.0) / 2.0;
                a = b + 1;
            }
            i = j + 1;
        }
    }
    double v2 = 0.0, vu_var = 0.0, sum_u2 = 0.0, sum_u3 = 0.0;
    {
        std::vector<double> ys(y.begin(), y.end());
        std::sort(ys.begin(), ys.end());
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && ys[j + 1] == ys[i]) ++j;
            const double u = static_cast<double>(j - i + 1);
            v2 += u * (u - 1.0) / 2.0;
            vu_var += u * (u - 1.0) * (2.0 * u + 5.0);
            sum_u2 += u * (u - 1.0);
            sum_u3 += u * (u - 1.0) * (u - 2.0);
            i = j + 1;
        }
    }
    if (tot == v1 || tot == v2) {
        throw Error("correlation undefined: zero variance input");
    }

    std::vector<double> ys_by_x(n);
    for (std::size_t i = 0; i < n; ++i) ys_by_x[i] = y[order[i]];
    std::vector<double> tmp(n);
    const auto dis = static_cast<double>(count_inversions(ys_by_x, tmp, 0, n));

    const double s = tot - v1 - v2 + v3 - 2.0 * dis;  // concordant - discordant
    CorrelationResult res;
    res.method = Method::kendall;
    res.n = n;
    res.r = clamp_r(s / std::sqrt((tot - v1) * (tot - v2)));

    const double v0 = nd * (nd - 1.0) * (2.0 * nd + 5.0);
    double var = (v0 - vt_var - vu_var) / 18.0 +
                 sum_t2 * sum_u2 / (2.0 * nd * (nd - 1.0)) +
                 sum_t3 * sum_u3 / (9.0 * nd * (nd - 1.0) * (nd - 2.0));
    if (var <= 0.0) {
        res.p_value = 1.0;
    } else {
        const double z = s / std::sqrt(var);
        res.p_value = std::clamp(std::erfc(std::abs(z) / std::sqrt(2.0)), 0.0, 1.0);
    }
    return res;
}

}  // namespace labourflow::stats
