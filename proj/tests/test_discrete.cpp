#include <doctest.h>

#include <cmath>
#include <vector>

#include "mtebounds/dgp.hpp"
#include "mtebounds/discrete.hpp"
#include "mtebounds/errors.hpp"
#include "mtebounds/normal.hpp"

using namespace mtebounds;

namespace {

struct Row {
    double z, d, s, y;
};

Sample from_rows(const std::vector<Row>& rows)
{
    const auto n = static_cast<Eigen::Index>(rows.size());
    Sample s;
    s.y.resize(n);
    s.s.resize(n);
    s.d.resize(n);
    s.z.resize(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Row& r = rows[static_cast<std::size_t>(i)];
        s.z(i, 0) = r.z;
        s.d(i) = r.d;
        s.s(i) = r.s;
        s.y(i) = r.y;
    }
    return s;
}

OutcomeGrid integer_grid(int bins)
{
    Eigen::VectorXd e(bins + 1);
    for (int k = 0; k <= bins; ++k) e(k) = k - 0.5;
    return OutcomeGrid::from_edges(e);
}

DiscreteLevel level(double p, double eSD, double eSU, std::vector<double> q1, std::vector<double> q0)
{
    DiscreteLevel l;
    l.count = 1.0;
    l.p = p;
    l.eSD = eSD;
    l.eSU = eSU;
    l.q1 = Eigen::Map<Eigen::VectorXd>(q1.data(), static_cast<Eigen::Index>(q1.size()));
    l.q0 = Eigen::Map<Eigen::VectorXd>(q0.data(), static_cast<Eigen::Index>(q0.size()));
    return l;
}

}  // namespace

TEST_CASE("ladder cells hold the instrument-level means, sorted by propensity")
{
    // z = 5: p = 1/4; z = 1: p = 3/4; z = 2: p = 1/4 (merged with z = 5).
    std::vector<Row> rows = {
        {5, 1, 1, 0}, {5, 0, 1, 1}, {5, 0, 0, 0}, {5, 0, 1, 2},
        {1, 1, 1, 2}, {1, 1, 0, 0}, {1, 1, 1, 1}, {1, 0, 1, 0},
        {2, 0, 1, 0}, {2, 1, 1, 1}, {2, 0, 0, 0}, {2, 0, 0, 0},
    };
    DiscreteLadder ladder = build_ladder(from_rows(rows), integer_grid(3));
    REQUIRE(ladder.levels.size() == 2);
    const DiscreteLevel& lo = ladder.levels[0];
    const DiscreteLevel& hi = ladder.levels[1];
    CHECK(lo.count == 8.0);
    CHECK(lo.p == doctest::Approx(0.25));
    CHECK(lo.zValues.size() == 2);
    CHECK(lo.eSD == doctest::Approx(2.0 / 8));
    CHECK(lo.eSU == doctest::Approx(3.0 / 8));
    CHECK(lo.q1(0) == doctest::Approx(1.0 / 8));
    CHECK(lo.q1(1) == doctest::Approx(1.0 / 8));
    CHECK(lo.q0(2) == doctest::Approx(1.0 / 8));
    CHECK(hi.p == doctest::Approx(0.75));
    CHECK(hi.eSD == doctest::Approx(0.5));
    CHECK(hi.q1(2) == doctest::Approx(0.25));
    CHECK(hi.zValues == std::vector<double>{1.0});
}

TEST_CASE("ladder construction rejects degenerate instruments")
{
    CHECK_THROWS_AS(build_ladder(from_rows({{0, 1, 1, 0}, {1, 0, 1, 0}}), integer_grid(2)), ConfigError);
    std::vector<Row> many;
    for (int i = 0; i < 1001; ++i) {
        many.push_back({double(i), 1, 1, 0});
        many.push_back({double(i), 0, 1, 0});
    }
    CHECK_THROWS_AS(build_ladder(from_rows(many), integer_grid(2)), ConfigError);
    CHECK_THROWS_AS(build_ladder(from_rows({{0, 1, 1, 0}}), integer_grid(2), 1), ConfigError);
}

TEST_CASE("binary instrument LATE bounds by hand")
{
    DiscreteLadder ladder;
    ladder.grid = integer_grid(4);
    // Between the levels: dp = 0.5, treated selected mass gains 0.4 spread
    // evenly over the bins (m1 = 0.8); untreated loses 0.2 in bins 1 and 2
    // (m0 = 0.4), so alpha = 1/2.
    ladder.levels.push_back(level(0.2, 0.1, 0.6, {0.1, 0, 0, 0}, {0.1, 0.2, 0.2, 0.1}));
    ladder.levels.push_back(level(0.7, 0.5, 0.4, {0.2, 0.1, 0.1, 0.1}, {0.1, 0.1, 0.1, 0.1}));
    LateBound b = late_bounds(ladder, 2, TrimMode::Fractional);
    CHECK(b.pLo == 0.2);
    CHECK(b.pHi == 0.7);
    CHECK(b.alphaTilde == doctest::Approx(0.5));
    CHECK(b.xi0 == doctest::Approx(1.5));
    // Treated complier distribution is uniform on {0..3}: lower half mean 0.5,
    // upper half mean 2.5.
    CHECK(b.lower == doctest::Approx(0.5 - 1.5));
    CHECK(b.upper == doctest::Approx(2.5 - 1.5));
    CHECK(b.status == BoundStatus::Partial);
    CHECK_FALSE(b.violation);
    CHECK_THROWS_AS(late_bounds(ladder, 3), ConfigError);
    CHECK(all_late_bounds(ladder).size() == 1);
}

TEST_CASE("wrong-signed selection differences and vanishing untreated mass")
{
    DiscreteLadder ladder;
    ladder.grid = integer_grid(2);
    ladder.levels.push_back(level(0.2, 0.5, 0.4, {0.25, 0.25}, {0.2, 0.2}));
    ladder.levels.push_back(level(0.6, 0.3, 0.2, {0.15, 0.15}, {0.1, 0.1}));
    LateBound v = late_bounds(ladder, 2);
    CHECK(v.violation);
    CHECK(v.status == BoundStatus::NonEstimable);

    ladder.levels[1] = level(0.6, 0.7, 0.4, {0.35, 0.35}, {0.2, 0.2});
    LateBound lost = late_bounds(ladder, 2);
    CHECK_FALSE(lost.violation);
    CHECK(lost.status == BoundStatus::Lost);
    CHECK(std::isinf(lost.upper));
}

TEST_CASE("population ladder matches simulated cell means")
{
    DgpConfig cfg = panel_a();
    const int cells = 4;
    OutcomeGrid grid = OutcomeGrid::from_edges(Eigen::VectorXd::LinSpaced(9, -12.0, 12.0));
    DiscreteLadder pop = population_ladder(cfg, cells, grid);
    REQUIRE(pop.levels.size() == cells);

    const Eigen::Index n = 400000;
    Sample s = generate(cfg, n, 77);
    std::vector<double> cnt(cells, 0), d(cells, 0), sd(cells, 0), su(cells, 0), q1(cells, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
        int j = std::min(cells - 1, static_cast<int>(normal_cdf(s.z(i, 0)) * cells));
        cnt[j] += 1;
        d[j] += s.d(i);
        sd[j] += s.s(i) * s.d(i);
        su[j] += s.s(i) * (1 - s.d(i));
        if (s.s(i) == 1 && s.d(i) == 1 && s.y(i) >= 0.0 && s.y(i) < 3.0) q1[j] += 1;
    }
    for (int j = 0; j < cells; ++j) {
        const DiscreteLevel& l = pop.levels[static_cast<std::size_t>(j)];
        auto near = [&](double truth, double hits) {
            double m = hits / cnt[j];
            return std::abs(m - truth) < 4.0 * std::sqrt(m * (1 - m) / cnt[j]) + 1e-6;
        };
        CHECK(l.p == doctest::Approx((j + 0.5) / cells));
        CHECK(near(l.p, d[j]));
        CHECK(near(l.eSD, sd[j]));
        CHECK(near(l.eSU, su[j]));
        CHECK(near(l.q1(4), q1[j]));
        CHECK(l.q1.sum() == doctest::Approx(l.eSD).epsilon(1e-8));
        CHECK(l.q0.sum() == doctest::Approx(l.eSU).epsilon(1e-8));
    }
    for (const LateBound& b : all_late_bounds(pop)) {
        CHECK_FALSE(b.violation);
        CHECK(b.lower <= b.upper);
    }
}
