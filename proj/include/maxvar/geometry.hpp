#pragma once

// Continuous ball geometry: unit-ball volumes, two-ball intersection volumes,
// the lens region near the boundary of a ball or cube, and numerical probes of
// the elementary ball lemmas.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "ball.hpp"
#include "family.hpp"
#include "grid.hpp"
#include "rng.hpp"

namespace maxvar {

/// Volume of the d-dimensional unit ball, by sigma_d = sigma_{d-2} * 2 pi / d.
inline double unit_ball_volume(int d)
{
    detail::require(d >= 0, "dimension must be nonnegative");
    double even = 1.0, odd = 2.0;
    if (d == 0) return even;
    if (d == 1) return odd;
    double v = d % 2 == 0 ? even : odd;
    for (int k = d % 2 == 0 ? 2 : 3; k <= d; k += 2) v *= 2.0 * std::numbers::pi / k;
    return v;
}

/// Same quantity from pi^(d/2) / Gamma(d/2 + 1).
inline double unit_ball_volume_gamma(int d)
{
    return std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

inline double ball_volume(const Ball& b, int d) { return unit_ball_volume(d) * std::pow(b.radius, d); }

struct VolumeRatioRow {
    int d = 0;
    double ratio = 0.0;        // sigma_d / sigma_{d-1}
    double bound = 0.0;        // sqrt(d)
    bool pass = false;
    double final_lhs = 0.0;    // (d + 1) sigma_d / sigma_{d-1}
    double final_rhs = 0.0;    // 4 d^(3/2)
    bool final_pass = false;
};

struct VolumeRatioReport {
    std::vector<VolumeRatioRow> rows;
    double max_slack = 0.0;    // max of ratio - sqrt(d) over d >= 3 (negative when all hold)
    bool pass_from_3 = true;   // ratio <= sqrt(d) for every 3 <= d <= d_max
    bool final_pass = true;    // the weaker bound used afterwards, for every d
};

/// Checks sigma_d / sigma_{d-1} <= sqrt(d) for 1 <= d <= d_max, and the bound
/// (d + 1) sigma_d / sigma_{d-1} <= 4 d^(3/2) that the ratio is used for. The
/// first one fails for d = 1 and d = 2; both are recorded.
inline VolumeRatioReport volume_ratio_check(int d_max)
{
    detail::require(d_max >= 3, "d_max must be at least 3");
    VolumeRatioReport rep;
    rep.max_slack = -std::numeric_limits<double>::infinity();
    for (int d = 1; d <= d_max; ++d) {
        VolumeRatioRow r;
        r.d = d;
        r.ratio = unit_ball_volume(d) / unit_ball_volume(d - 1);
        r.bound = std::sqrt(static_cast<double>(d));
        r.pass = r.ratio <= r.bound;
        r.final_lhs = (d + 1) * r.ratio;
        r.final_rhs = 4.0 * std::pow(static_cast<double>(d), 1.5);
        r.final_pass = r.final_lhs <= r.final_rhs * (1.0 + 1e-12);
        if (d >= 3) {
            rep.max_slack = std::max(rep.max_slack, r.ratio - r.bound);
            rep.pass_from_3 = rep.pass_from_3 && r.pass;
        }
        rep.final_pass = rep.final_pass && r.final_pass;
        rep.rows.push_back(r);
    }
    return rep;
}

/// Volume of the cap of height t (0 <= t <= 2r) cut from a d-ball of radius r.
inline double cap_volume(double r, double t, int d)
{
    if (t <= 0.0) return 0.0;
    const double full = unit_ball_volume(d) * std::pow(r, d);
    if (t >= 2.0 * r) return full;
    if (t > r) return full - cap_volume(r, 2.0 * r - t, d);
    const double x = (2.0 * r * t - t * t) / (r * r);
    return 0.5 * full * boost::math::ibeta(0.5 * (d + 1), 0.5, std::min(1.0, x));
}

/// |B n C| in dimension d. Closed forms for d <= 3, spherical caps beyond.
inline double ball_intersection_volume(const Ball& b, const Ball& c, int d)
{
    detail::require(b.radius > 0.0 && c.radius > 0.0, "ball radius must be positive");
    detail::require(d >= 1 && d <= kMaxDim, "dimension out of range");
    const double r1 = b.radius, r2 = c.radius;
    const double D = dist(b.center, c.center);
    if (D >= r1 + r2) return 0.0;
    if (D <= std::abs(r1 - r2)) return unit_ball_volume(d) * std::pow(std::min(r1, r2), d);
    switch (d) {
    case 1:
        return r1 + r2 - D;
    case 2: {
        const double a1 = std::acos(std::clamp((D * D + r1 * r1 - r2 * r2) / (2 * D * r1), -1.0, 1.0));
        const double a2 = std::acos(std::clamp((D * D + r2 * r2 - r1 * r1) / (2 * D * r2), -1.0, 1.0));
        return r1 * r1 * (a1 - 0.5 * std::sin(2 * a1)) + r2 * r2 * (a2 - 0.5 * std::sin(2 * a2));
    }
    case 3: {
        const double s = r1 + r2 - D;
        return std::numbers::pi * s * s * (D * D + 2 * D * r2 - 3 * r2 * r2 + 2 * D * r1 + 6 * r1 * r2 - 3 * r1 * r1) /
               (12 * D);
    }
    default: {
        const double x = (D * D + r1 * r1 - r2 * r2) / (2 * D);  // plane offset from b's center
        return cap_volume(r1, r1 - x, d) + cap_volume(r2, r2 - (D - x), d);
    }
    }
}

// ---------------------------------------------------------------------------

enum class Outcome { PremiseNotMet, Holds, Violated, Inconclusive };

inline const char* to_string(Outcome o)
{
    switch (o) {
    case Outcome::PremiseNotMet: return "premise not met";
    case Outcome::Holds: return "holds";
    case Outcome::Violated: return "violated";
    case Outcome::Inconclusive: return "inconclusive";
    }
    return "?";
}

/// Largest lambda the shrink lemma admits in dimension d.
inline double shrink_lambda_limit(int d) { return std::pow(2.0, -0.5 * (d + 1)) * std::pow(d, -1.5); }

/// Shrink factor 1 - 2 d^(3/(d+1)) lambda^(2/(d+1)).
inline double shrink_factor(int d, double lambda)
{
    return 1.0 - 2.0 * std::pow(d, 3.0 / (d + 1)) * std::pow(lambda, 2.0 / (d + 1));
}

struct ShrinkResult {
    Outcome outcome = Outcome::PremiseNotMet;
    double overlap = 0.0;  // |B n C| / |B|
    double factor = 0.0;
    double gap = 0.0;      // center distance minus (factor r_B + r_C)
};

/// If |B n C| <= lambda |B| and diam C >= diam B, the shrunken ball factor * B
/// must miss C.
inline ShrinkResult shrink_disjoint_check(const Ball& b, const Ball& c, double lambda, int d)
{
    detail::require(lambda > 0.0 && lambda <= shrink_lambda_limit(d) * (1.0 + 1e-12),
                    "lambda outside (0, 2^(-(d+1)/2) d^(-3/2)]");
    ShrinkResult r;
    r.factor = shrink_factor(d, lambda);
    if (c.radius < b.radius) return r;
    r.overlap = ball_intersection_volume(b, c, d) / ball_volume(b, d);
    if (r.overlap > lambda) return r;
    const double D = dist(b.center, c.center);
    const double s = std::max(0.0, r.factor);
    r.gap = D - (s * b.radius + c.radius);
    const double tol = 1e-12 * (D + b.radius + c.radius);
    r.outcome = r.gap >= -tol ? Outcome::Holds : Outcome::Violated;
    return r;
}

// ---------------------------------------------------------------------------

struct AngleProbe {
    double max_angle = 0.0;        // over the random samples
    bool all_within = true;        // every sampled angle <= pi/2
    long samples = 0;
    double worst_case_angle = 0.0; // explicit extremal configuration at this N
    bool worst_case_within = true;
    double critical_n = 0.0;       // smallest N whose extremal configuration passes
    std::array<Point, 4> witness{}; // x1, x2, y1, y2 of the extremal configuration
};

inline double angle_between(const Point& a, const Point& b)
{
    double dot = 0.0;
    for (int i = 0; i < kMaxDim; ++i) dot += a[i] * b[i];
    return std::acos(std::clamp(dot / (norm(a) * norm(b)), -1.0, 1.0));
}

namespace detail {

inline Point sub(const Point& a, const Point& b)
{
    Point r{};
    for (int i = 0; i < kMaxDim; ++i) r[i] = a[i] - b[i];
    return r;
}

/// Extremal planar configuration: x_i at angle pi/4 apart and at distance
/// sqrt(N^2 - 1), y_i on the unit circle with |y_i - x_i| = N, turned outwards.
inline std::array<Point, 4> angle_extremal(double n)
{
    const double theta = std::asin(std::min(1.0, 1.0 / n));
    const double rho = std::sqrt(std::max(0.0, n * n - 1.0));
    std::array<Point, 4> out{};
    for (int i = 0; i < 2; ++i) {
        const double sgn = i == 0 ? 1.0 : -1.0;
        const double phi = sgn * std::numbers::pi / 8.0;
        Point x{rho * std::cos(phi), rho * std::sin(phi)};
        // direction of y - x: towards the origin, turned away from the other point
        const double dir = phi + std::numbers::pi + sgn * theta;
        Point y{x[0] + n * std::cos(dir), x[1] + n * std::sin(dir)};
        out[i] = x;
        out[2 + i] = y;
    }
    return out;
}

inline double extremal_angle(double n)
{
    const auto c = angle_extremal(n);
    return angle_between(sub(c[2], c[0]), sub(c[3], c[1]));
}

} // namespace detail

/// Samples x1, x2 with angle(x1, x2) <= pi/4 and y1, y2 in the unit ball with
/// |y_i - x_i| >= N, and reports the largest angle between y1 - x1 and y2 - x2.
/// Also evaluates the extremal configuration and bisects for the N where it
/// reaches pi/2.
inline AngleProbe min_angle_probe(double n, long trials, std::uint64_t seed, int d = 2)
{
    detail::require(n > 1.0, "N must exceed 1");
    detail::require(d >= 2 && d <= kMaxDim, "dimension out of range");
    AngleProbe p;
    const double right = 0.5 * std::numbers::pi;

    auto unit = [&](CounterRng& rng) {
        Point u{};
        double s = 0.0;
        while (s < 1e-12) {
            s = 0.0;
            for (int a = 0; a < d; ++a) {
                u[a] = rng.normal();
                s += u[a] * u[a];
            }
        }
        for (int a = 0; a < d; ++a) u[a] /= std::sqrt(s);
        return u;
    };
    auto in_ball = [&](CounterRng& rng) {
        const Point u = unit(rng);
        const double r = std::pow(rng.uniform(), 1.0 / d);
        Point y{};
        for (int a = 0; a < d; ++a) y[a] = r * u[a];
        return y;
    };

    for (long t = 0; t < trials; ++t) {
        CounterRng rng(seed, static_cast<std::uint64_t>(t));
        const Point u1 = unit(rng);
        Point u2 = unit(rng);
        // rotate u2 into the cone of half-angle pi/4 around u1 by rejection
        for (int k = 0; k < 64 && angle_between(u1, u2) > 0.25 * std::numbers::pi; ++k) u2 = unit(rng);
        if (angle_between(u1, u2) > 0.25 * std::numbers::pi) continue;
        // distances near the critical shell are the interesting ones
        const double lo = std::max(0.0, n - 1.0);
        Point x1{}, x2{};
        const double r1 = lo + rng.uniform() * (rng.uniform() < 0.5 ? 2.0 : 4.0 * n);
        const double r2 = lo + rng.uniform() * (rng.uniform() < 0.5 ? 2.0 : 4.0 * n);
        for (int a = 0; a < d; ++a) {
            x1[a] = r1 * u1[a];
            x2[a] = r2 * u2[a];
        }
        Point y1{}, y2{};
        bool found = false;
        for (int k = 0; k < 64 && !found; ++k) {
            y1 = in_ball(rng);
            y2 = in_ball(rng);
            found = dist(y1, x1) >= n && dist(y2, x2) >= n;
        }
        if (!found) continue;
        const double ang = angle_between(detail::sub(y1, x1), detail::sub(y2, x2));
        ++p.samples;
        p.max_angle = std::max(p.max_angle, ang);
        p.all_within = p.all_within && ang <= right;
    }

    p.witness = detail::angle_extremal(n);
    p.worst_case_angle = detail::extremal_angle(n);
    p.worst_case_within = p.worst_case_angle <= right;
    double lo = 1.0 + 1e-12, hi = 1e6;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (detail::extremal_angle(mid) <= right ? hi : lo) = mid;
    }
    p.critical_n = hi;
    return p;
}

// ---------------------------------------------------------------------------

/// X n C n {y : dist(y, X^c) > L diam C} for a ball C centered on the boundary of
/// X (a ball or a cube).
struct LensRegion {
    std::variant<Ball, Cube> x;
    Ball c;
    double l = 0.25;

    double depth_in_x(const Point& p) const
    {
        return std::visit([&](const auto& s) { return s.depth(p); }, x);
    }

    bool contains(const Point& p) const
    {
        return c.contains(p) && depth_in_x(p) > l * c.diameter();
    }
};

inline LensRegion lens_region(const std::variant<Ball, Cube>& x, const Ball& c, double l)
{
    detail::require(l > 0.0 && l <= 0.25, "L must lie in (0, 1/4]");
    const double xdiam = std::visit([](const auto& s) { return s.diameter(); }, x);
    detail::require(c.diameter() <= 2.0 * xdiam * (1.0 + 1e-12), "diam C must not exceed 2 diam X");
    LensRegion r{x, c, l};
    const double on_boundary = r.depth_in_x(c.center);
    detail::require(std::abs(on_boundary) <= 1e-9 * std::max(1.0, xdiam), "C must be centered on the boundary of X");
    return r;
}

inline GridSet rasterize_region(const LensRegion& a, const GridGeometry& g)
{
    return rasterize_if(g, [&](const Point& p) { return a.contains(p); });
}

struct IsoperimetricSample {
    double ratio = 0.0;
    double inside = 0.0;     // |E n A|
    double outside = 0.0;    // |A \ E|
    double perimeter = 0.0;  // discrete perimeter of E in A
    bool violation = false;  // both parts nonempty but no boundary in A
};

/// min(|E n A|, |A \ E|)^(d-1) / Per(E, A)^d with the cells of A as the domain.
inline IsoperimetricSample isoperimetric_ratio(const GridSet& domain, const GridSet& e)
{
    const auto& g = e.geometry();
    require_same(g, domain.geometry(), "isoperimetric_ratio");
    detail::require(!domain.empty(), "the domain has no cells");
    IsoperimetricSample s;
    s.inside = measure(e & domain);
    s.outside = measure(domain.minus(e));
    s.perimeter = perimeter(e, Domain::within(domain));
    const double m = std::min(s.inside, s.outside);
    if (m == 0.0) return s;
    if (s.perimeter == 0.0) {
        s.violation = true;
        s.ratio = std::numeric_limits<double>::infinity();
        return s;
    }
    s.ratio = std::pow(m, g.d - 1) / std::pow(s.perimeter, g.d);
    return s;
}

// ---------------------------------------------------------------------------

struct ReachResult {
    Outcome outcome = Outcome::PremiseNotMet;
    double covered = 0.0;          // discrete |U F n B| / |B|
    double annulus = 0.0;          // discrete |B \ (1 - lambda/d) B| / |B|
    std::size_t witness = 0;       // index into the family when found
};

/// If |U F n B| >= lambda |B| then some F meets (1 - lambda/d) B. Measures are
/// cell counts on a local grid with `cells_per_radius` cells across r_B; the
/// intersection test is exact. When no witness exists but the discrete annulus
/// alone already reaches lambda, the raster cannot decide and the result is
/// inconclusive.
inline ReachResult reach_inside_check(const Ball& b, const BallFamily& fam, double lambda, int d,
                                      int cells_per_radius = 40)
{
    detail::require(lambda > 0.0 && lambda <= 1.0, "lambda must lie in (0, 1]");
    detail::require(d >= 1 && d <= kMaxGridDim, "dimension out of range");
    GridGeometry g;
    g.d = d;
    g.h = b.radius / cells_per_radius;
    for (int a = 0; a < d; ++a) {
        g.shape[a] = 2 * cells_per_radius + 1;
        g.origin[a] = b.center[a] - (cells_per_radius + 0.5) * g.h;
    }
    const Ball inner = b.scaled(1.0 - lambda / d);
    Index total = 0, hit = 0, ring = 0;
    for_each_cell_in_ball(g, b, [&](const auto&, Index i) {
        if (i == kOutside) return;
        const Point p = g.cell_center(i);
        ++total;
        ring += !inner.contains(p);
        hit += fam.covers(p);
    });
    ReachResult r;
    r.covered = static_cast<double>(hit) / static_cast<double>(total);
    r.annulus = static_cast<double>(ring) / static_cast<double>(total);
    if (r.covered < lambda) return r;
    for (std::size_t k = 0; k < fam.size(); ++k)
        if (intersects(fam[k], inner)) {
            r.outcome = Outcome::Holds;
            r.witness = k;
            return r;
        }
    r.outcome = r.annulus >= lambda ? Outcome::Inconclusive : Outcome::Violated;
    return r;
}

// ---------------------------------------------------------------------------

struct CampaignTally {
    long trials = 0;
    long premise_met = 0;
    long holds = 0;
    long violated = 0;
    long inconclusive = 0;
    double min_gap = std::numeric_limits<double>::infinity();  // shrink only
    std::vector<std::string> witnesses;

    void count(Outcome o)
    {
        ++trials;
        if (o == Outcome::PremiseNotMet) return;
        ++premise_met;
        if (o == Outcome::Holds) ++holds;
        else if (o == Outcome::Violated) ++violated;
        else ++inconclusive;
    }
};

/// Random shrink-lemma configurations in dimension d: r_B = 1, r_C in [1, 8],
/// lambda up to the admissible limit and the center distance drawn near the
/// distance where the overlap equals lambda.
inline CampaignTally shrink_campaign(int d, long trials, std::uint64_t seed)
{
    CampaignTally t;
    const double lmax = shrink_lambda_limit(d);
    for (long k = 0; k < trials; ++k) {
        CounterRng rng(seed, 1000003ULL * static_cast<std::uint64_t>(d) + static_cast<std::uint64_t>(k));
        const double lambda = lmax * (k % 4 == 0 ? 1.0 : rng.uniform(1e-3, 1.0));
        Ball b{{}, 1.0};
        Ball c{{}, rng.uniform() < 0.3 ? 1.0 : rng.uniform(1.0, 8.0)};
        // distance where the overlap fraction equals lambda, by bisection
        double lo = c.radius - b.radius, hi = c.radius + b.radius;
        for (int it = 0; it < 80; ++it) {
            const double mid = 0.5 * (lo + hi);
            c.center[0] = mid;
            (ball_intersection_volume(b, c, d) / ball_volume(b, d) > lambda ? lo : hi) = mid;
        }
        const double dist_c = hi + rng.uniform(-0.02, 0.2) * (k % 2 == 0 ? 0.0 : 1.0);
        // random direction
        Point u{};
        double s = 0.0;
        for (int a = 0; a < d; ++a) s += (u[a] = rng.normal()) * u[a];
        for (int a = 0; a < d; ++a) c.center[a] = dist_c * u[a] / std::sqrt(s);
        const auto r = shrink_disjoint_check(b, c, lambda, d);
        t.count(r.outcome);
        if (r.outcome != Outcome::PremiseNotMet) t.min_gap = std::min(t.min_gap, r.gap);
        if (r.outcome == Outcome::Violated && t.witnesses.size() < 5)
            t.witnesses.push_back("d=" + std::to_string(d) + " lambda=" + std::to_string(lambda) +
                                  " rC=" + std::to_string(c.radius) + " D=" + std::to_string(dist_c));
    }
    return t;
}

/// Random reach-lemma configurations in dimension d <= 3: B the unit ball, one
/// to six balls near its boundary, and lambda drawn up to the covered fraction.
inline CampaignTally reach_campaign(int d, long trials, std::uint64_t seed, int cells_per_radius)
{
    CampaignTally t;
    const Ball b{{}, 1.0};
    for (long k = 0; k < trials; ++k) {
        CounterRng rng(seed, 7000003ULL * static_cast<std::uint64_t>(d) + static_cast<std::uint64_t>(k));
        BallFamily fam;
        const int count = 1 + static_cast<int>(rng.below(6));
        for (int j = 0; j < count; ++j) {
            Point u{};
            double s = 0.0;
            for (int a = 0; a < d; ++a) s += (u[a] = rng.normal()) * u[a];
            const double rad = rng.uniform(0.05, 0.8);
            const double at = rng.uniform(0.6, 1.0) + rad * rng.uniform(0.0, 1.0);
            Ball f{{}, rad};
            for (int a = 0; a < d; ++a) f.center[a] = at * u[a] / std::sqrt(s);
            fam.add(f);
        }
        const double covered = reach_inside_check(b, fam, 1.0, d, cells_per_radius).covered;
        if (covered <= 0.0) {
            t.count(Outcome::PremiseNotMet);
            continue;
        }
        const double lambda = std::min(1.0, covered * rng.uniform(0.5, 1.0));
        const auto r = reach_inside_check(b, fam, lambda, d, cells_per_radius);
        t.count(r.outcome);
        if (r.outcome == Outcome::Violated && t.witnesses.size() < 5)
            t.witnesses.push_back("d=" + std::to_string(d) + " trial=" + std::to_string(k) +
                                  " lambda=" + std::to_string(lambda));
    }
    return t;
}

} // namespace maxvar
