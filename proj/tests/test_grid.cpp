#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <numeric>

#include <maxvar/ball.hpp>
#include <maxvar/distance_transform.hpp>
#include <maxvar/grid.hpp>
#include <maxvar/rng.hpp>

#include "oracles.hpp"

using namespace maxvar;
using Catch::Approx;

namespace {

ScalarField random_field(const GridGeometry& g, std::uint64_t seed, int levels = 0)
{
    CounterRng rng(seed, 1);
    ScalarField f(g);
    for (Index i = 0; i < g.size(); ++i)
        f[i] = levels > 0 ? static_cast<double>(rng.below(levels + 1)) / levels : rng.uniform();
    return f;
}

GridSet random_set(const GridGeometry& g, std::uint64_t seed, double p)
{
    CounterRng rng(seed, 2);
    GridSet s(g);
    for (Index i = 0; i < g.size(); ++i) s.set(i, rng.uniform() < p);
    return s;
}

} // namespace

TEST_CASE("measure counts cells times cell volume")
{
    const auto g = GridGeometry::cube(2, 16);
    CHECK(measure(GridSet(g)) == 0.0);

    auto g4 = GridGeometry::cube(2, 4, 0.25);
    CHECK(measure(GridSet(g4, true)) == Approx(1.0));

    const auto g256 = GridGeometry::cube(2, 256);
    const auto disk = rasterize(g256, Ball{{0.5, 0.5}, 0.4});
    CHECK(measure(disk) == Approx(std::numbers::pi * 0.16).margin(0.01));
    // halving h moves the estimate by O(h)
    const auto g512 = GridGeometry::cube(2, 512);
    CHECK(std::abs(measure(rasterize(g512, Ball{{0.5, 0.5}, 0.4})) - measure(disk)) < 4.0 / 256);
}

TEST_CASE("perimeter of simple sets")
{
    const auto g = GridGeometry::cube(2, 32);
    CHECK(perimeter(GridSet(g, true)) == Approx(4.0));

    GridSet one(g);
    one.set(g.linear(5, 7));
    CHECK(perimeter(one) == Approx(4.0 * g.h));

    const auto g512 = GridGeometry::cube(2, 512);
    // the face-count perimeter of a disk is the anisotropic length 8r
    CHECK(perimeter(rasterize(g512, Ball{{0.5, 0.5}, 0.25})) == Approx(2.0).epsilon(0.05));
}

TEST_CASE("perimeter is symmetric and subadditive")
{
    const auto g = GridGeometry::cube(2, 40);
    const auto free = Domain::free_space(g);
    const auto box = Domain::box(g);
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto a = random_set(g, s, 0.3);
        const auto b = random_set(g, s + 100, 0.2);
        CHECK(perimeter(a, box) == perimeter(a.complement(), box));
        CHECK(perimeter(a | b, free) <= perimeter(a, free) + perimeter(b, free) + 1e-12);
    }
    // in free space the box edge belongs to the complement's boundary only
    // when the set is kept off the edge
    const auto disk = rasterize(g, Ball{{0.5, 0.5}, 0.3});
    CHECK(perimeter(disk, free) == perimeter(disk.complement(), box));
}

TEST_CASE("masked perimeter only counts faces between domain cells")
{
    const auto g = GridGeometry::cube(2, 8);
    GridSet omega(g);
    for (Index y = 0; y < 8; ++y)
        for (Index x = 0; x < 4; ++x) omega.set(g.linear(x, y));
    GridSet e(g);
    for (Index y = 0; y < 8; ++y) e.set(g.linear(1, y));
    // column x=1 has faces to x=0 and x=2, both inside the domain
    CHECK(perimeter_faces(e, Domain::within(omega)) == 16);
    CHECK(perimeter_faces(GridSet(g, true), Domain::within(omega)) == 0);
}

TEST_CASE("classify_cells")
{
    const auto g = GridGeometry::cube(2, 32);
    const auto free = Domain::free_space(g);

    const auto full = classify_cells(GridSet(g, true), free);
    CHECK(full.interior == g.size());

    GridSet one(g);
    one.set(g.linear(10, 10));
    const auto p = classify_cells(one, free);
    CHECK(p.boundary == 5);
    CHECK(p.exterior == g.size() - 5);
    CHECK(p.cls[g.linear(10, 11)] == CellClass::Boundary);

    const auto half = rasterize_if(g, [](const Point& x) { return x[0] < 0.5; });
    const auto q = classify_cells(half, free);
    for (Index i = 0; i < g.size(); ++i) {
        const auto c = g.coords(i);
        const bool astride = c[0] == 15 || c[0] == 16;
        CHECK((q.cls[i] == CellClass::Boundary) == astride);
    }
    const auto interior = q.select(g, CellClass::Interior);
    CHECK(interior.subset_of(half));
    CHECK(half.subset_of(interior | q.select(g, CellClass::Boundary)));
    CHECK(q.interior + q.boundary + q.exterior == g.size());
}

TEST_CASE("level sets are strict and nested")
{
    const auto g = GridGeometry::cube(2, 16);
    CHECK(level_set(ScalarField(g, 1.0), 0.5).count() == g.size());
    const auto e = random_set(g, 3, 0.4);
    CHECK(level_set(ScalarField::indicator(e), 0.3) == e);

    const auto f = random_field(g, 9);
    auto v = std::vector<double>(f.values().begin(), f.values().end());
    std::nth_element(v.begin(), v.begin() + static_cast<long>(v.size() / 2), v.end());
    const double med = v[v.size() / 2];
    const auto s = level_set(f, med);
    for (Index i = 0; i < g.size(); ++i) CHECK(s[i] == (f[i] > med));
    CHECK(level_set(f, 0.7).subset_of(level_set(f, 0.2)));

    CHECK_THROWS_AS(level_set(f, 1.0), InvalidArgument);
    CHECK_THROWS_AS(level_set(f, -0.1), InvalidArgument);
}

TEST_CASE("attained_levels")
{
    const auto g = GridGeometry::cube(2, 8);
    CHECK(attained_levels(ScalarField(g, 0.5)) == std::vector<double>{0.5});
    GridSet e(g);
    e.set(3);
    CHECK(attained_levels(ScalarField::indicator(e)) == std::vector<double>{0.0, 1.0});
}

TEST_CASE("coarea identity matches the direct face sum")
{
    const auto g = GridGeometry::cube(2, 64);
    const auto free = Domain::free_space(g);
    CHECK(variation_coarea(ScalarField(g, 0.4), Domain::box(g)) == 0.0);

    const auto e = random_set(g, 5, 0.5);
    CHECK(variation_coarea(ScalarField::indicator(e), free) == Approx(perimeter(e, free)));

    for (std::uint64_t s = 0; s < 10; ++s) {
        for (int levels : {0, 7}) {
            const auto f = random_field(g, s, levels);
            const double direct = total_variation_direct(f, free);
            CHECK(std::abs(variation_coarea(f, free) - direct) <= 1e-9 * std::max(1.0, direct));
        }
    }

    const auto g3 = GridGeometry::cube(3, 12);
    const auto f3 = random_field(g3, 77);
    const auto omega = Domain::within(random_set(g3, 8, 0.7));
    const double direct = total_variation_direct(f3, omega);
    CHECK(std::abs(variation_coarea(f3, omega) - direct) <= 1e-9 * std::max(1.0, direct));
}

TEST_CASE("total variation of a half-grid indicator is the interface length")
{
    const auto g = GridGeometry::cube(2, 32);
    const auto half = rasterize_if(g, [](const Point& x) { return x[1] < 0.5; });
    CHECK(total_variation_direct(ScalarField::indicator(half), Domain::box(g)) == Approx(1.0));
}

TEST_CASE("level_set_perimeters agrees with perimeter of each level set")
{
    const auto g = GridGeometry::cube(2, 48);
    const auto free = Domain::free_space(g);
    const auto f = random_field(g, 12, 9);
    const std::vector<double> lambdas{0.05, 0.5, 1.0 / 9.0, 0.0, 0.95};
    const auto per = level_set_perimeters(f, free, lambdas);
    for (std::size_t k = 0; k < lambdas.size(); ++k) CHECK(per[k] == Approx(perimeter(level_set(f, lambdas[k]), free)));
}

TEST_CASE("boundary of a union")
{
    const auto g = GridGeometry::cube(2, 64);
    const auto a = random_set(g, 1, 0.3);
    CHECK(boundary_union_check(a, GridSet(g)).empty());
    CHECK(boundary_union_check(a, a).empty());
    for (std::uint64_t s = 0; s < 100; ++s)
        CHECK(boundary_union_check(random_set(g, s, 0.4), random_set(g, s + 1000, 0.4)).empty());
}

TEST_CASE("geometry mismatch is reported")
{
    const auto a = GridSet(GridGeometry::cube(2, 8));
    const auto b = GridSet(GridGeometry::cube(2, 16));
    CHECK_THROWS_AS(perimeter(a, Domain::free_space(b.geometry())), GeometryMismatch);
    CHECK_THROWS_AS(classify_cells(a, Domain::box(b.geometry())), GeometryMismatch);
}

TEST_CASE("distance transform matches brute force")
{
    for (int d : {1, 2, 3}) {
        const auto g = GridGeometry::cube(d, d == 3 ? 9 : (d == 2 ? 23 : 40));
        for (std::uint64_t s = 0; s < 4; ++s) {
            const auto src = random_set(g, s * 31 + d, s == 0 ? 0.0 : 0.05);
            for (bool ext : {false, true}) {
                const auto fast = squared_distance_transform(src, ext);
                const auto slow = oracle::brute_sq_distance(src, ext);
                CHECK(fast == slow);
            }
        }
    }
}

TEST_CASE("pairwise_sum is independent of the caller's split")
{
    std::vector<double> v(1000);
    CounterRng rng(4, 4);
    for (auto& x : v) x = rng.uniform();
    const double a = pairwise_sum(v);
    const double b = pairwise_sum(v);
    CHECK(a == b);
    CHECK(a == Approx(std::accumulate(v.begin(), v.end(), 0.0)));
}
