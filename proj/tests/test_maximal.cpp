#include <catch2/catch_amalgamated.hpp>

#include <maxvar/maximal.hpp>
#include <maxvar/rng.hpp>

#include "oracles.hpp"

using namespace maxvar;

namespace {

GridSet random_set(const GridGeometry& g, std::uint64_t seed, double p)
{
    CounterRng rng(seed, 7);
    GridSet s(g);
    for (Index i = 0; i < g.size(); ++i) s.set(i, rng.uniform() < p);
    return s;
}

GridSet random_blobs(const GridGeometry& g, std::uint64_t seed, int k)
{
    CounterRng rng(seed, 8);
    GridSet s(g);
    const double w = g.extent(0);
    for (int j = 0; j < k; ++j) {
        Point c{};
        for (int a = 0; a < g.d; ++a) c[a] = g.origin[a] + rng.uniform(0.2, 0.8) * w;
        s |= rasterize(g, Ball{c, rng.uniform(0.03, 0.15) * w});
    }
    return s;
}

} // namespace

TEST_CASE("radius schedules")
{
    const auto g = GridGeometry::cube(2, 64);
    const auto s = RadiusSchedule::default_for(g);
    const auto r = s.radii();
    REQUIRE(!r.empty());
    CHECK(r.front() == g.h);
    CHECK(r.back() <= 0.5 * g.diameter() * (1 + 1e-12));
    CHECK(std::is_sorted(r.begin(), r.end()));

    const auto a = RadiusSchedule::parse("arith:h:h:0.25", g);
    CHECK(a.radii().size() == 16);
    CHECK(RadiusSchedule::parse("geom:1.05", g).radii() == r);

    CHECK_THROWS_AS(RadiusSchedule::parse("geom:0.9", g), InvalidArgument);
    CHECK_THROWS_AS(RadiusSchedule::parse("arith:h:0.001:0.2", g), InvalidArgument);
    CHECK_THROWS_AS(RadiusSchedule::parse("spiral:2", g), InvalidArgument);
}

TEST_CASE("dyadic maximal function of simple sets")
{
    const auto g = GridGeometry::cube(2, 8);
    const auto free = Domain::free_space(g);
    const auto full = dyadic_maximal(GridSet(g, true), Domain::box(g));
    for (double v : full.values()) CHECK(v == 1.0);

    GridSet corner(g);
    corner.set(g.linear(0, 0));
    const auto m = dyadic_maximal(corner, free);
    CHECK(m[g.linear(0, 0)] == 1.0);
    CHECK(m[g.linear(1, 0)] == 0.25);
    CHECK(m[g.linear(1, 1)] == 0.25);
    CHECK(m[g.linear(3, 2)] == 1.0 / 16);
    CHECK(m[g.linear(7, 7)] == 1.0 / 64);
    CHECK(m[g.linear(4, 0)] == 1.0 / 64);

    // E = Omega = one dyadic cube
    const DyadicCube q{2, {1, 0, 0}};
    const auto qc = cube_cells(g, q);
    const auto mq = dyadic_maximal(qc, Domain::within(qc));
    for (Index i = 0; i < g.size(); ++i) CHECK(mq[i] == (qc[i] ? 1.0 : 0.0));
}

TEST_CASE("dyadic maximal function equals exhaustive enumeration")
{
    for (std::uint64_t s = 0; s < 6; ++s) {
        const auto g = GridGeometry::cube(2, 32);
        const auto e = s % 2 ? random_set(g, s, 0.1) : random_blobs(g, s, 3);
        CHECK(dyadic_maximal(e, Domain::free_space(g)) == oracle::brute_dyadic(e, Domain::free_space(g)));
        const auto omega = Domain::within(random_blobs(g, s + 50, 4));
        CHECK(dyadic_maximal(e, omega) == oracle::brute_dyadic(e, omega));
    }
    const auto g3 = GridGeometry::cube(3, 16);
    const auto e3 = random_blobs(g3, 4, 3);
    CHECK(dyadic_maximal(e3, Domain::free_space(g3)) == oracle::brute_dyadic(e3, Domain::free_space(g3)));

    const auto g1 = GridGeometry::cube(1, 64);
    const auto e1 = random_set(g1, 2, 0.2);
    CHECK(dyadic_maximal(e1, Domain::box(g1)) == oracle::brute_dyadic(e1, Domain::box(g1)));
}

TEST_CASE("dyadic maximal rejects bad input")
{
    GridGeometry g = GridGeometry::cube(2, 12);
    CHECK_THROWS_AS(dyadic_maximal(GridSet(g), Domain::free_space(g)), InvalidArgument);
    const auto g8 = GridGeometry::cube(2, 8);
    CHECK_THROWS_AS(dyadic_maximal(GridSet(g8), Domain::free_space(g)), GeometryMismatch);
}

TEST_CASE("attained dyadic values are dyadic rationals")
{
    const auto g = GridGeometry::cube(2, 8);
    const auto m = dyadic_maximal(random_set(g, 3, 0.2), Domain::free_space(g));
    for (double v : attained_levels(m)) {
        bool ok = false;
        for (int j = 0; j <= 3 && !ok; ++j) {
            const double k = v * std::ldexp(1.0, 2 * j);
            ok = k == std::floor(k);
        }
        CHECK(ok);
    }
}

TEST_CASE("uncentered maximal function equals brute force on small grids")
{
    for (int d : {1, 2, 3}) {
        const auto g = GridGeometry::cube(d, d == 3 ? 10 : (d == 2 ? 24 : 60));
        const auto sched = RadiusSchedule::geometric(g.h, 0.5 * g.diameter(), 1.3);
        for (std::uint64_t s = 0; s < 3; ++s) {
            const auto e = random_blobs(g, s + 10 * d, 2) | random_set(g, s, 0.02);
            for (int mode = 0; mode < 3; ++mode) {
                const Domain omega = mode == 0   ? Domain::free_space(g)
                                     : mode == 1 ? Domain::box(g)
                                                 : Domain::within(random_blobs(g, s + 90, 5));
                const auto fast = uncentered_maximal(e, omega, sched, 1);
                const auto slow = oracle::brute_uncentered(e, omega, sched.radii());
                CHECK(fast == slow);
            }
        }
    }
}

TEST_CASE("uncentered maximal function is deterministic across thread counts")
{
    const auto g = GridGeometry::cube(2, 48);
    const auto e = random_blobs(g, 1, 3);
    const auto s = RadiusSchedule::default_for(g);
    CHECK(uncentered_maximal(e, Domain::free_space(g), s, 1) == uncentered_maximal(e, Domain::free_space(g), s, 3));
}

TEST_CASE("uncentered maximal function basic properties")
{
    const auto g = GridGeometry::cube(2, 40);
    const auto sched = RadiusSchedule::geometric(g.h, 0.5 * g.diameter(), 1.1);
    const auto box = Domain::box(g);
    for (double v : uncentered_maximal(GridSet(g, true), box, sched).values()) CHECK(v == 1.0);
    for (double v : uncentered_maximal(GridSet(g), box, sched).values()) CHECK(v == 0.0);

    const auto e = random_blobs(g, 5, 2);
    const auto bigger = e | random_blobs(g, 6, 2);
    const auto m = uncentered_maximal(e, box, sched);
    const auto mb = uncentered_maximal(bigger, box, sched);
    const auto coarse = uncentered_maximal(e, box, RadiusSchedule::geometric(g.h, 0.5 * g.diameter(), 1.5));
    for (Index i = 0; i < g.size(); ++i) {
        CHECK(m[i] >= 0.0);
        CHECK(m[i] <= 1.0);
        CHECK(mb[i] >= m[i]);
    }
    // the coarse radii are not a subset; compare against the union schedule instead
    auto fine = RadiusSchedule::arithmetic(g.h, 0.5 * g.diameter(), g.h / 8);
    const auto mf = uncentered_maximal(e, box, fine);
    const auto mc = uncentered_maximal(e, box, RadiusSchedule::arithmetic(g.h, 0.5 * g.diameter(), g.h));
    for (Index i = 0; i < g.size(); ++i) CHECK(mf[i] >= mc[i]);
    (void)coarse;

    CHECK_THROWS_AS(uncentered_maximal(e, box, RadiusSchedule::geometric(0.5, 0.1, 1.1)), InvalidArgument);
}

TEST_CASE("superlevel families reproduce the level sets")
{
    const auto g = GridGeometry::cube(2, 64);
    const auto free = Domain::free_space(g);
    const auto e = random_blobs(g, 11, 3) | random_set(g, 2, 0.01);

    const auto dy = MaximalOperator::dyadic();
    const auto md = dy.apply(e, free);
    for (double lambda : {0.05, 0.2, 0.5, 0.9}) {
        const auto fam = superlevel_family(e, free, lambda, dy);
        CHECK(fam.cells(g) == level_set(md, lambda));
    }
    const auto levels = attained_levels(md);
    if (levels.back() < 1.0) CHECK(superlevel_family(e, free, levels.back(), dy).size() == 0);

    const auto un = MaximalOperator::uncentered(RadiusSchedule::geometric(g.h, 0.3, 1.15));
    const auto box = Domain::box(g);
    const auto mu = un.apply(e, box);
    for (double lambda : {0.2, 0.6}) {
        const auto fam = superlevel_family(e, box, lambda, un);
        CHECK(fam.cells(g) == level_set(mu, lambda));
    }
    double top = 0.0;
    for (double v : mu.values()) top = std::max(top, v);
    if (top < 1.0) CHECK(superlevel_family(e, box, top, un).size() == 0);
}

TEST_CASE("dyadic superlevel cubes of one cube are maximal ancestors")
{
    const auto g = GridGeometry::cube(2, 16);
    const DyadicCube q{1, {2, 2, 0}};
    const auto e = cube_cells(g, q);
    const auto cubes = dyadic_superlevel_cubes(e, Domain::free_space(g), 0.2);
    // the level-2 parent has density 1/4 > 0.2; its parent has 1/16
    REQUIRE(cubes.size() == 1);
    CHECK(cubes[0] == q.parent());
}

TEST_CASE("maximal function dominates the indicator")
{
    const auto g = GridGeometry::cube(2, 64);
    const auto free = Domain::free_space(g);
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto e = random_blobs(g, s, 3) | random_set(g, s, 0.05);
        CHECK(mf_geq_f_check(e, free, dyadic_maximal(e, free), MaximalOperator::dyadic()).empty());
    }

    const auto disk = rasterize(g, Ball{{0.5, 0.5}, 0.3});
    const auto op = MaximalOperator::uncentered(RadiusSchedule::geometric(g.h, 0.4, 1.2));
    CHECK(mf_geq_f_check(disk, free, op.apply(disk, free), op).empty());

    GridSet lone(g);
    lone.set(g.linear(20, 20));
    const auto op3 = MaximalOperator::uncentered(RadiusSchedule::geometric(3 * g.h, 0.4, 1.2));
    const auto m = op3.apply(lone, free);
    CHECK(m[g.linear(20, 20)] < 1.0);
    CHECK(mf_geq_f_check(lone, free, m, op3).empty());

    // a field that misses part of E is caught
    ScalarField zero(g);
    CHECK(!mf_geq_f_check(disk, free, zero, op).empty());
}
