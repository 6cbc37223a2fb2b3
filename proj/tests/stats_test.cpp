#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "labourflow/core.hpp"
#include "labourflow/rng.hpp"
#include "labourflow/stats.hpp"
#include "support/oracles.hpp"

using labourflow::Error;
using labourflow::Rng;
using namespace labourflow::stats;

namespace {

// Small integer-valued samples so rank ties actually occur.
std::vector<double> random_sample(Rng& rng, std::size_t n, int levels) {
    std::vector<double> v(n);
    for (auto& x : v) x = static_cast<double>(rng.uniform_int(levels));
    return v;
}

bool constant(const std::vector<double>& v) {
    for (const double x : v) {
        if (x != v.front()) return false;
    }
    return true;
}

}  // namespace

TEST_SUITE("stats") {

TEST_CASE("average_ranks") {
    const std::vector<double> v = {10.0, 20.0, 20.0, 30.0};
    CHECK(average_ranks(v) == std::vector<double>{1.0, 2.5, 2.5, 4.0});
    const std::vector<double> same = {7.0, 7.0, 7.0};
    CHECK(average_ranks(same) == std::vector<double>{2.0, 2.0, 2.0});
    const std::vector<double> rev = {3.0, 2.0, 1.0};
    CHECK(average_ranks(rev) == std::vector<double>{3.0, 2.0, 1.0});
}

TEST_CASE("frozen four-point example") {
    const std::vector<double> x = {1.0, 2.0, 3.0, 4.0};
    const std::vector<double> y = {1.0, 3.0, 2.0, 4.0};

    const CorrelationResult p = pearson(x, y);
    CHECK(p.method == Method::pearson);
    CHECK(p.n == 4);
    CHECK(p.r == doctest::Approx(0.8).epsilon(1e-14));
    CHECK(p.p_value == doctest::Approx(0.2).epsilon(1e-12));

    const CorrelationResult s = spearman(x, y);
    CHECK(s.method == Method::spearman);
    CHECK(s.r == doctest::Approx(0.8).epsilon(1e-14));
    CHECK(s.p_value == doctest::Approx(0.2).epsilon(1e-12));

    const CorrelationResult k = kendall(x, y);
    CHECK(k.method == Method::kendall);
    // one discordant pair out of six: tau is exactly 4/6
    CHECK(k.r == 4.0 / 6.0);
    CHECK(k.p_value == doctest::Approx(0.17423138824802498).epsilon(1e-12));
}

TEST_CASE("frozen ten-point example with heavy ties") {
    const std::vector<double> x = {3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0, 5.0, 3.0};
    const std::vector<double> y = {2.0, 7.0, 1.0, 8.0, 2.0, 8.0, 1.0, 8.0, 2.0, 8.0};

    const CorrelationResult p = pearson(x, y);
    CHECK(p.r == doctest::Approx(0.10492284287735881).epsilon(1e-12));
    CHECK(p.p_value == doctest::Approx(0.77299136156272641).epsilon(1e-12));

    const CorrelationResult s = spearman(x, y);
    CHECK(s.r == doctest::Approx(0.13471506281091267).epsilon(1e-12));
    CHECK(s.p_value == doctest::Approx(0.71060088052238291).epsilon(1e-12));

    const CorrelationResult k = kendall(x, y);
    CHECK(k.r == doctest::Approx(0.13041013273932525).epsilon(1e-12));
    CHECK(k.p_value == doctest::Approx(0.63252029218846828).epsilon(1e-12));
}

TEST_CASE("frozen near-linear example") {
    const std::vector<double> x = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0};
    const std::vector<double> y = {2.1, 2.9, 4.2, 5.1, 5.9, 7.2, 8.1, 8.8};

    const CorrelationResult p = pearson(x, y);
    CHECK(p.r == doctest::Approx(0.99817877444798708).epsilon(1e-12));
    CHECK(p.p_value == doctest::Approx(1.5081266452164322e-08).epsilon(1e-10));

    // Perfect rank agreement: r pins to 1 and the p-value to 0.
    const CorrelationResult s = spearman(x, y);
    CHECK(s.r == 1.0);
    CHECK(s.p_value == 0.0);

    const CorrelationResult k = kendall(x, y);
    CHECK(k.r == 1.0);
    CHECK(k.p_value == doctest::Approx(0.00053200550513924922).epsilon(1e-10));
}

TEST_CASE("perfect lines") {
    const std::vector<double> x = {1.0, 2.0, 3.0, 5.0};
    std::vector<double> up, down;
    for (const double v : x) {
        up.push_back(2.0 * v + 1.0);
        down.push_back(-0.5 * v);
    }
    CHECK(pearson(x, up).r == 1.0);
    CHECK(pearson(x, up).p_value == 0.0);
    CHECK(pearson(x, down).r == -1.0);
    CHECK(pearson(x, down).p_value == 0.0);
    CHECK(kendall(x, down).r == -1.0);
}

TEST_CASE("input validation") {
    const std::vector<double> x = {1.0, 2.0, 3.0};
    const std::vector<double> short_y = {1.0, 2.0};
    CHECK_THROWS_AS(pearson(x, short_y), Error);
    CHECK_THROWS_AS(spearman(short_y, short_y), Error);
    CHECK_THROWS_AS(kendall(short_y, short_y), Error);

    const std::vector<double> flat = {5.0, 5.0, 5.0};
    CHECK_THROWS_WITH_AS(pearson(flat, x), doctest::Contains("zero variance"), Error);
    CHECK_THROWS_WITH_AS(pearson(x, flat), doctest::Contains("zero variance"), Error);
    CHECK_THROWS_WITH_AS(spearman(flat, x), doctest::Contains("zero variance"), Error);
    CHECK_THROWS_WITH_AS(kendall(x, flat), doctest::Contains("zero variance"), Error);

    const std::vector<double> bad = {1.0, std::nan(""), 3.0};
    CHECK_THROWS_AS(pearson(bad, x), Error);
    const std::vector<double> inf = {1.0, 2.0, std::numeric_limits<double>::infinity()};
    CHECK_THROWS_AS(kendall(x, inf), Error);
}

TEST_CASE("random samples agree with brute-force oracles") {
    Rng rng(20200401);
    int done = 0;
    while (done < 60) {
        const std::size_t n = 5 + rng.uniform_int(36);
        // Mix tie-heavy and smooth samples.
        const int levels = (done % 2 == 0) ? 5 : 1000;
        const auto x = random_sample(rng, n, levels);
        const auto y = random_sample(rng, n, levels);
        if (constant(x) || constant(y)) continue;
        ++done;

        CHECK(std::abs(pearson(x, y).r - oracle::pearson_r(x, y)) < 1e-12);
        CHECK(std::abs(spearman(x, y).r - oracle::spearman_r(x, y)) < 1e-12);
        CHECK(std::abs(kendall(x, y).r - oracle::kendall_tau_b(x, y)) < 1e-12);
    }
}

TEST_CASE("symmetry in the two arguments") {
    Rng rng(81);
    for (int trial = 0; trial < 10; ++trial) {
        const auto x = random_sample(rng, 12, 6);
        const auto y = random_sample(rng, 12, 6);
        if (constant(x) || constant(y)) continue;
        CHECK(pearson(x, y).r == doctest::Approx(pearson(y, x).r).epsilon(1e-14));
        CHECK(spearman(x, y).r == doctest::Approx(spearman(y, x).r).epsilon(1e-14));
        CHECK(kendall(x, y).r == doctest::Approx(kendall(y, x).r).epsilon(1e-14));
    }
}

TEST_CASE("invariance under transforms") {
    const std::vector<double> x = {1.0, 4.0, 2.0, 8.0, 5.0, 7.0};
    const std::vector<double> y = {3.0, 1.0, 4.0, 1.0, 5.0, 9.0};

    SUBCASE("pearson under positive affine maps") {
        std::vector<double> ax;
        for (const double v : x) ax.push_back(3.0 * v - 10.0);
        CHECK(pearson(ax, y).r == doctest::Approx(pearson(x, y).r).epsilon(1e-14));
        std::vector<double> neg;
        for (const double v : x) neg.push_back(-2.0 * v);
        CHECK(pearson(neg, y).r == doctest::Approx(-pearson(x, y).r).epsilon(1e-14));
    }
    SUBCASE("rank methods under strictly monotone maps") {
        std::vector<double> cubed;
        for (const double v : x) cubed.push_back(v * v * v);
        CHECK(spearman(cubed, y).r == spearman(x, y).r);
        CHECK(kendall(cubed, y).r == kendall(x, y).r);
        CHECK(spearman(cubed, y).p_value == spearman(x, y).p_value);
        CHECK(kendall(cubed, y).p_value == kendall(x, y).p_value);
    }
}

TEST_CASE("p-values stay in range and shrink with evidence") {
    Rng rng(4242);
    for (int trial = 0; trial < 10; ++trial) {
        const auto x = random_sample(rng, 10, 8);
        const auto y = random_sample(rng, 10, 8);
        if (constant(x) || constant(y)) continue;
        for (const auto& res : {pearson(x, y), spearman(x, y), kendall(x, y)}) {
            CHECK(res.p_value >= 0.0);
            CHECK(res.p_value <= 1.0);
            CHECK(res.r >= -1.0);
            CHECK(res.r <= 1.0);
            CHECK(res.n == 10);
        }
    }
    // The same correlation over more samples is stronger evidence.
    std::vector<double> x_short, y_short, x_long, y_long;
    for (int i = 0; i < 6; ++i) {
        x_short.push_back(i);
        y_short.push_back(i + ((i % 2) ? 0.5 : -0.5));
    }
    for (int i = 0; i < 24; ++i) {
        x_long.push_back(i % 6);
        y_long.push_back(i % 6 + ((i % 2) ? 0.5 : -0.5));
    }
    CHECK(pearson(x_long, y_long).p_value < pearson(x_short, y_short).p_value);
}

TEST_CASE("method names") {
    CHECK(to_string(Method::pearson) == "pearson");
    CHECK(to_string(Method::spearman) == "spearman");
    CHECK(to_string(Method::kendall) == "kendall");
}

}  // TEST_SUITE
