#include <catch2/catch_amalgamated.hpp>

#include <maxvar/geometry.hpp>

#include "oracles.hpp"

using namespace maxvar;
using Catch::Approx;

TEST_CASE("unit ball volumes")
{
    CHECK(unit_ball_volume(0) == 1.0);
    CHECK(unit_ball_volume(1) == 2.0);
    CHECK(unit_ball_volume(2) == Approx(std::numbers::pi).epsilon(1e-15));
    CHECK(unit_ball_volume(3) == Approx(4.0 * std::numbers::pi / 3.0).epsilon(1e-15));
    for (int d = 0; d <= 30; ++d)
        CHECK(std::abs(unit_ball_volume(d) / unit_ball_volume_gamma(d) - 1.0) <= 1e-12);
}

TEST_CASE("volume ratio bound")
{
    const auto rep = volume_ratio_check(25);
    CHECK(rep.pass_from_3);
    CHECK(rep.final_pass);
    CHECK(rep.max_slack < 0.0);
    REQUIRE(rep.rows.size() == 25);
    CHECK(!rep.rows[0].pass);  // sigma_1 / sigma_0 = 2 > 1
    CHECK(!rep.rows[1].pass);  // pi / 2 > sqrt 2
    CHECK(rep.rows[0].final_pass);
    CHECK_THROWS_AS(volume_ratio_check(2), InvalidArgument);
}

TEST_CASE("ball intersection volume closed forms")
{
    const Ball a{{0, 0}, 1.0};
    CHECK(ball_intersection_volume(a, Ball{{2.0, 0}, 1.0}, 2) == 0.0);
    CHECK(ball_intersection_volume(a, Ball{{5.0, 0}, 1.0}, 3) == 0.0);
    CHECK(ball_intersection_volume(a, Ball{{0.1, 0}, 3.0}, 2) == Approx(std::numbers::pi));
    CHECK(ball_intersection_volume(Ball{{0.3, 0}, 0.5}, Ball{{0, 0}, 2.0}, 4) == Approx(unit_ball_volume(4) * 0.0625));

    const double lens = 2.0 * std::numbers::pi / 3.0 - std::sqrt(3.0) / 2.0;
    CHECK(ball_intersection_volume(a, Ball{{1.0, 0}, 1.0}, 2) == Approx(lens).epsilon(1e-12));
    CHECK(oracle::monte_carlo_intersection(a, Ball{{1.0, 0}, 1.0}, 2, 1000000, 1) == Approx(lens).epsilon(0.01));

    // two unit balls in 3D at distance D: pi (4 + D)(2 - D)^2 / 12
    for (double D : {0.2, 1.0, 1.7}) {
        const double want = std::numbers::pi * (4.0 + D) * (2.0 - D) * (2.0 - D) / 12.0;
        CHECK(ball_intersection_volume(Ball{{}, 1.0}, Ball{{D}, 1.0}, 3) == Approx(want).epsilon(1e-12));
    }
    CHECK_THROWS_AS(ball_intersection_volume(a, Ball{{}, 0.0}, 2), InvalidArgument);
}

TEST_CASE("spherical caps agree with the low-dimensional closed forms")
{
    CounterRng rng(3, 0);
    for (int t = 0; t < 200; ++t) {
        const double r1 = rng.uniform(0.2, 2.0), r2 = rng.uniform(0.2, 2.0);
        const double D = rng.uniform(std::abs(r1 - r2), r1 + r2);
        const double x = (D * D + r1 * r1 - r2 * r2) / (2 * D);
        for (int d : {2, 3}) {
            const double caps = cap_volume(r1, r1 - x, d) + cap_volume(r2, r2 - (D - x), d);
            const double closed = ball_intersection_volume(Ball{{}, r1}, Ball{{D}, r2}, d);
            CHECK(caps == Approx(closed).epsilon(1e-10).margin(1e-14));
        }
    }
}

TEST_CASE("ball intersection volume against Monte Carlo")
{
    CounterRng rng(17, 0);
    for (int t = 0; t < 8; ++t) {
        const int d = 1 + t % 4;
        const Ball b{{}, rng.uniform(0.5, 1.5)};
        const Ball c{{rng.uniform(0.2, 1.0), rng.uniform(-0.3, 0.3)}, rng.uniform(0.5, 1.5)};
        const double exact = ball_intersection_volume(b, c, d);
        const double mc = oracle::monte_carlo_intersection(b, c, d, 400000, 100 + t);
        CHECK(mc == Approx(exact).epsilon(0.02));
        CHECK(ball_intersection_volume(c, b, d) == Approx(exact).epsilon(1e-12));
    }
}

TEST_CASE("intersection volume is monotone in the radii and continuous in the distance")
{
    for (int d = 1; d <= 4; ++d) {
        double prev = -1.0;
        for (double r = 0.2; r < 2.0; r += 0.1) {
            const double v = ball_intersection_volume(Ball{{}, 1.0}, Ball{{0.9}, r}, d);
            CHECK(v >= prev);
            prev = v;
        }
        const Ball b{{}, 1.0};
        double last = ball_intersection_volume(b, Ball{{0.0}, 1.2}, d);
        for (double D = 0.01; D < 2.3; D += 0.01) {
            const double v = ball_intersection_volume(b, Ball{{D}, 1.2}, d);
            CHECK(v <= last + 1e-12);
            CHECK(last - v < 0.1);
            last = v;
        }
    }
}

TEST_CASE("shrink lemma")
{
    const int d = 2;
    const double lambda = shrink_lambda_limit(d);
    const auto tangent = shrink_disjoint_check(Ball{{}, 1.0}, Ball{{3.0}, 2.0}, lambda, d);
    CHECK(tangent.outcome == Outcome::Holds);
    CHECK(tangent.overlap == 0.0);
    CHECK(shrink_disjoint_check(Ball{{}, 1.0}, Ball{{}, 1.0}, lambda, d).outcome == Outcome::PremiseNotMet);
    CHECK(shrink_disjoint_check(Ball{{}, 2.0}, Ball{{2.9}, 1.0}, lambda, d).outcome == Outcome::PremiseNotMet);
    CHECK_THROWS_AS(shrink_disjoint_check(Ball{{}, 1.0}, Ball{{3.0}, 2.0}, 2.0 * lambda, d), InvalidArgument);
    CHECK_THROWS_AS(shrink_disjoint_check(Ball{{}, 1.0}, Ball{{3.0}, 2.0}, 0.0, d), InvalidArgument);

    for (int dd = 1; dd <= 4; ++dd) {
        const auto t = shrink_campaign(dd, 2000, 5);
        CHECK(t.violated == 0);
        CHECK(t.premise_met > 500);
        CHECK(t.min_gap > -1e-9);
    }
}

TEST_CASE("minimal angle probe")
{
    const double right = 0.5 * std::numbers::pi;
    const auto big = min_angle_probe(1e6, 2000, 1);
    CHECK(big.all_within);
    CHECK(big.max_angle <= 0.25 * std::numbers::pi + 1e-4);
    CHECK(big.samples > 1000);

    // x1 = x2 on one side, y1 and y2 on opposite sides of the unit circle
    const Point x{0.15, 0.0}, y1{0.0, 1.0}, y2{0.0, -1.0};
    CHECK(dist(x, y1) >= 1.01);
    CHECK(angle_between(detail::sub(y1, x), detail::sub(y2, x)) > right);

    const auto small = min_angle_probe(1.01, 100, 1);
    CHECK(!small.worst_case_within);
    const auto& w = small.witness;
    CHECK(angle_between(w[0], w[1]) <= 0.25 * std::numbers::pi + 1e-12);
    CHECK(norm(w[2]) <= 1.0 + 1e-9);
    CHECK(norm(w[3]) <= 1.0 + 1e-9);
    CHECK(dist(w[0], w[2]) >= 1.01 - 1e-9);
    CHECK(angle_between(detail::sub(w[2], w[0]), detail::sub(w[3], w[1])) > right);

    // the extremal angle is pi/4 + 2 asin(1/N)
    CHECK(detail::extremal_angle(4.0) == Approx(0.25 * std::numbers::pi + 2.0 * std::asin(0.25)));
    CHECK(small.critical_n == Approx(1.0 / std::sin(std::numbers::pi / 8.0)).epsilon(1e-9));

    const auto crit = min_angle_probe(small.critical_n, 100000, 9);
    CHECK(crit.all_within);
    CHECK(crit.samples > 50000);
    CHECK(crit.max_angle <= right);
}

TEST_CASE("lens region")
{
    const int n = 512;
    const auto g = GridGeometry::cube(2, n);
    const Cube x{{0.5, 0.5}, 0.5, 2};
    const Ball c{{0.5, 0.0}, 0.2};
    const auto a = lens_region(x, c, 0.25);
    const double t = 0.25 * c.diameter();
    const double r = c.radius;
    const double want = r * r * std::acos(t / r) - t * std::sqrt(r * r - t * t);
    CHECK(measure(rasterize_region(a, g)) == Approx(want).epsilon(0.02));

    // vanishing L leaves C n X
    const auto thin = lens_region(x, c, 1e-9);
    const auto cx = rasterize_if(g, [&](const Point& p) { return c.contains(p) && x.contains(p); });
    CHECK(rasterize_region(thin, g) == cx);

    // ball X
    const Ball xb{{0.5, 0.5}, 0.4};
    const Ball cb{{0.9, 0.5}, 0.1};
    const auto ab = lens_region(xb, cb, 0.25);
    CHECK(ab.contains(Point{0.82, 0.5}));
    CHECK(!ab.contains(Point{0.88, 0.5}));

    CHECK_THROWS_AS(lens_region(x, c, 0.3), InvalidArgument);
    CHECK_THROWS_AS(lens_region(x, Ball{{0.5, 0.1}, 0.2}, 0.25), InvalidArgument);
    CHECK_THROWS_AS(lens_region(Cube{{0.5, 0.5}, 0.05, 2}, Ball{{0.5, 0.45}, 0.5}, 0.25), InvalidArgument);
}

TEST_CASE("lens region is convex")
{
    const Cube x{{0.5, 0.5}, 0.5, 2};
    const Ball c{{1.0, 1.0}, 0.4};  // centered at a corner
    const auto a = lens_region(x, c, 0.1);
    CounterRng rng(2, 0);
    std::vector<Point> pts;
    while (pts.size() < 400) {
        const Point p{rng.uniform(0.5, 1.0), rng.uniform(0.5, 1.0)};
        if (a.contains(p)) pts.push_back(p);
    }
    for (std::size_t i = 0; i + 1 < pts.size(); i += 2) {
        const Point m{0.5 * (pts[i][0] + pts[i + 1][0]), 0.5 * (pts[i][1] + pts[i + 1][1])};
        CHECK(a.contains(m));
    }

    // raster version: the cell of a midpoint of two region cells touches the region
    const auto g = GridGeometry::cube(2, 128);
    const auto ra = rasterize_region(a, g);
    std::vector<Index> cells;
    for (Index i = 0; i < g.size(); ++i)
        if (ra[i]) cells.push_back(i);
    REQUIRE(cells.size() > 100);
    for (int t = 0; t < 500; ++t) {
        const auto p = g.coords(cells[rng.below(cells.size())]);
        const auto q = g.coords(cells[rng.below(cells.size())]);
        bool near = false;
        for (Index dx = 0; dx <= 1; ++dx)
            for (Index dy = 0; dy <= 1; ++dy)
                near = near || ra[g.linear((p[0] + q[0] + dx) / 2, (p[1] + q[1] + dy) / 2)];
        CHECK(near);
    }
}

TEST_CASE("isoperimetric ratio")
{
    for (int d : {2, 3}) {
        const auto g = GridGeometry::cube(d, d == 2 ? 64 : 32);
        const GridSet cube(g, true);
        const auto half = rasterize_if(g, [](const Point& p) { return p[0] < 0.5; });
        const auto s = isoperimetric_ratio(cube, half);
        CHECK(s.ratio == Approx(std::pow(0.5, d - 1)).epsilon(0.05));
        CHECK(!s.violation);
        CHECK(isoperimetric_ratio(cube, GridSet(g)).ratio == 0.0);
    }
    const auto g = GridGeometry::cube(2, 32);
    const auto left = rasterize_if(g, [](const Point& p) { return p[0] < 0.3; });
    const auto right = rasterize_if(g, [](const Point& p) { return p[0] > 0.7; });
    const auto s = isoperimetric_ratio(left | right, left);
    CHECK(s.violation);
    CHECK(std::isinf(s.ratio));
    CHECK_THROWS_AS(isoperimetric_ratio(GridSet(g), left), InvalidArgument);

    // small disk: ratio near the continuous value, within the anisotropy of face counting
    const auto gg = GridGeometry::cube(2, 256);
    const auto disk = rasterize(gg, Ball{{0.5, 0.5}, 0.1});
    const double cont = std::numbers::pi * 0.01 / std::pow(2 * std::numbers::pi * 0.1, 2);
    const double got = isoperimetric_ratio(GridSet(gg, true), disk).ratio;
    CHECK(got <= cont);
    CHECK(got >= cont * std::pow(std::numbers::pi / 4.0, 2) * 0.95);
}

TEST_CASE("reach inside lemma")
{
    const Ball b{{}, 1.0};
    for (int d = 1; d <= 3; ++d) {
        const auto self = reach_inside_check(b, BallFamily({b}), 1.0, d, d == 3 ? 10 : 40);
        CHECK(self.outcome == Outcome::Holds);
        CHECK(self.covered == 1.0);
    }
    const auto tiny = reach_inside_check(b, BallFamily({Ball{{1.0, 0.0}, 0.05}}), 0.1, 2);
    CHECK(tiny.outcome == Outcome::PremiseNotMet);
    CHECK(tiny.covered < 0.01);

    for (int d = 1; d <= 3; ++d) {
        const auto t = reach_campaign(d, d == 3 ? 300 : 1000, 4, d == 3 ? 10 : 40);
        CHECK(t.violated == 0);
        CHECK(t.holds > t.trials / 2);
    }
}
