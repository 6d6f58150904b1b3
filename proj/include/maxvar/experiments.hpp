#pragma once

// Shape corpus, variation ratios, level-set perimeter rates with slope fits,
// the single-cube estimate, prefix convergence of superlevel families and the
// desk-scale lemma suite.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "ball.hpp"
#include "coverings.hpp"
#include "geometry.hpp"
#include "grid.hpp"
#include "maximal.hpp"
#include "report.hpp"
#include "rng.hpp"

namespace maxvar {

namespace detail {

inline std::string fmt(double v)
{
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string p; std::getline(ss, p, sep);) out.push_back(p);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

inline double to_double(const std::string& s)
{
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw InvalidArgument("not a number: '" + s + "'");
    return v;
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn)
{
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < n; i += threads) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace detail

// ---------------------------------------------------------------------------

/// A shape in the unit box [0, 1]^d, mapped onto the grid box. Text form:
///   ball:R[:C1:C2[:C3]]   cube:HALF[:C...]   annulus:RIN:ROUT[:C...]
///   balls:K[:RMIN:RMAX]   dyadic:P[:LEVEL]   half:T[:AXIS]
/// optionally followed by "#SEED".
struct ShapeSpec {
    enum class Kind { Ball, Cube, Annulus, UnionRandomBalls, RandomDyadic, HalfSpace };

    Kind kind = Kind::Ball;
    std::vector<double> params;
    std::uint64_t seed = 0;
    int margin_cells = 2;

    static ShapeSpec parse(const std::string& text, int margin_cells = 2)
    {
        ShapeSpec s;
        s.margin_cells = margin_cells;
        std::string body = text;
        if (const auto hash = text.find('#'); hash != std::string::npos) {
            body = text.substr(0, hash);
            s.seed = static_cast<std::uint64_t>(std::stoull(text.substr(hash + 1)));
        }
        auto parts = detail::split(body, ':');
        detail::require(parts.size() >= 2, "shape must be kind:parameters");
        const std::string k = parts[0];
        if (k == "ball") s.kind = Kind::Ball;
        else if (k == "cube") s.kind = Kind::Cube;
        else if (k == "annulus") s.kind = Kind::Annulus;
        else if (k == "balls") s.kind = Kind::UnionRandomBalls;
        else if (k == "dyadic") s.kind = Kind::RandomDyadic;
        else if (k == "half") s.kind = Kind::HalfSpace;
        else throw InvalidArgument("unknown shape kind '" + k + "'");
        for (std::size_t i = 1; i < parts.size(); ++i) s.params.push_back(detail::to_double(parts[i]));
        s.validate();
        return s;
    }

    std::string kind_name() const
    {
        switch (kind) {
        case Kind::Ball: return "ball";
        case Kind::Cube: return "cube";
        case Kind::Annulus: return "annulus";
        case Kind::UnionRandomBalls: return "balls";
        case Kind::RandomDyadic: return "dyadic";
        case Kind::HalfSpace: return "half";
        }
        return "?";
    }

    std::string to_string() const
    {
        std::string s = kind_name();
        for (double p : params) s += ":" + detail::fmt(p);
        if (seed != 0) s += "#" + std::to_string(seed);
        return s;
    }

    void validate() const
    {
        auto need = [&](std::size_t lo, std::size_t hi) {
            detail::require(params.size() >= lo && params.size() <= hi,
                            kind_name() + " takes between " + std::to_string(lo) + " and " + std::to_string(hi) +
                                " parameters");
        };
        auto unit = [&](double v, const char* what) {
            detail::require(v >= 0.0 && v <= 1.0, std::string(what) + " must lie in [0, 1]");
        };
        detail::require(margin_cells >= 0, "margin must be nonnegative");
        switch (kind) {
        case Kind::Ball:
        case Kind::Cube:
            need(1, 4);
            detail::require(params[0] > 0.0 && params[0] <= 0.5, "radius must lie in (0, 1/2]");
            for (std::size_t i = 1; i < params.size(); ++i) unit(params[i], "center");
            break;
        case Kind::Annulus:
            need(2, 5);
            detail::require(params[0] >= 0.0 && params[0] < params[1] && params[1] <= 0.5,
                            "annulus radii must satisfy 0 <= RIN < ROUT <= 1/2");
            for (std::size_t i = 2; i < params.size(); ++i) unit(params[i], "center");
            break;
        case Kind::UnionRandomBalls:
            need(1, 3);
            detail::require(params[0] >= 0.0 && params[0] == std::floor(params[0]), "ball count must be an integer");
            if (params.size() == 3)
                detail::require(params[1] > 0.0 && params[1] <= params[2] && params[2] <= 0.5, "bad radius range");
            detail::require(params.size() != 2, "give both RMIN and RMAX");
            break;
        case Kind::RandomDyadic:
            need(1, 2);
            unit(params[0], "density");
            if (params.size() == 2)
                detail::require(params[1] >= 0.0 && params[1] <= 12.0 && params[1] == std::floor(params[1]),
                                "level must be an integer in [0, 12]");
            break;
        case Kind::HalfSpace:
            need(1, 2);
            unit(params[0], "offset");
            if (params.size() == 2) detail::require(params[1] == 0 || params[1] == 1 || params[1] == 2, "axis must be 0, 1 or 2");
            break;
        }
    }

    bool is_random() const { return kind == Kind::UnionRandomBalls || kind == Kind::RandomDyadic; }
    bool clips_to_margin() const { return is_random() || kind == Kind::HalfSpace; }

    bool operator==(const ShapeSpec&) const = default;
};

namespace detail {

inline GridSet margin_band(const GridGeometry& g, int m)
{
    GridSet band(g);
    for (Index i = 0; i < g.size(); ++i) {
        const auto c = g.coords(i);
        bool in = false;
        for (int a = 0; a < g.d; ++a) in = in || c[a] < m || c[a] >= g.shape[a] - m;
        band.set(i, in);
    }
    return band;
}

inline Point unit_to_world(const GridGeometry& g, const Point& u)
{
    Point p{};
    for (int a = 0; a < g.d; ++a) p[a] = g.origin[a] + u[a] * g.extent(a);
    return p;
}

inline Point shape_center(const ShapeSpec& s, std::size_t first, int d)
{
    Point u{};
    for (int a = 0; a < d; ++a) u[a] = first + a < s.params.size() ? s.params[first + a] : 0.5;
    return u;
}

} // namespace detail

/// Rasterizes the shape onto the grid. Deterministic shapes must stay out of the
/// band of margin_cells cells along the box edges; random shapes and half-spaces
/// are clipped to it.
inline GridSet generate_shape(const ShapeSpec& spec, const GridGeometry& g)
{
    spec.validate();
    const double scale = g.extent(0);
    for (int a = 1; a < g.d; ++a)
        detail::require(g.shape[a] == g.shape[0], "shapes need a grid with equal extents");
    GridSet e(g);
    const auto& p = spec.params;
    switch (spec.kind) {
    case ShapeSpec::Kind::Ball:
        e = rasterize(g, Ball{detail::unit_to_world(g, detail::shape_center(spec, 1, g.d)), p[0] * scale});
        break;
    case ShapeSpec::Kind::Cube: {
        Cube q{detail::unit_to_world(g, detail::shape_center(spec, 1, g.d)), p[0] * scale, g.d};
        e = rasterize(g, q);
        break;
    }
    case ShapeSpec::Kind::Annulus: {
        const Point c = detail::unit_to_world(g, detail::shape_center(spec, 2, g.d));
        e = rasterize(g, Ball{c, p[1] * scale});
        if (p[0] > 0.0) e = e.minus(rasterize(g, Ball{c, p[0] * scale}));
        break;
    }
    case ShapeSpec::Kind::UnionRandomBalls: {
        const int k = static_cast<int>(p[0]);
        const double rmin = p.size() == 3 ? p[1] : 0.03;
        const double rmax = p.size() == 3 ? p[2] : 0.12;
        CounterRng rng(spec.seed, 0x62616c6cULL);
        for (int j = 0; j < k; ++j) {
            Point u{};
            for (int a = 0; a < g.d; ++a) u[a] = rng.uniform(0.1, 0.9);
            e |= rasterize(g, Ball{detail::unit_to_world(g, u), rng.uniform(rmin, rmax) * scale});
        }
        break;
    }
    case ShapeSpec::Kind::RandomDyadic: {
        const int level = p.size() == 2 ? static_cast<int>(p[1]) : 3;
        const Index per_axis = Index{1} << level;
        Index count = 1;
        for (int a = 0; a < g.d; ++a) count *= per_axis;
        std::vector<std::uint8_t> keep(static_cast<std::size_t>(count));
        for (Index q = 0; q < count; ++q) {
            CounterRng rng(spec.seed, static_cast<std::uint64_t>(q) + 0x64796164ULL);
            keep[static_cast<std::size_t>(q)] = rng.uniform() < p[0] || p[0] == 1.0;
        }
        for (Index i = 0; i < g.size(); ++i) {
            const auto c = g.coords(i);
            Index q = 0, mult = 1;
            for (int a = 0; a < g.d; ++a) {
                const Index k = std::min<Index>(per_axis - 1, c[a] * per_axis / g.shape[a]);
                q += k * mult;
                mult *= per_axis;
            }
            e.set(i, keep[static_cast<std::size_t>(q)] != 0);
        }
        break;
    }
    case ShapeSpec::Kind::HalfSpace: {
        const int axis = p.size() == 2 ? static_cast<int>(p[1]) : 0;
        detail::require(axis < g.d, "half-space axis exceeds the grid dimension");
        const double t = g.origin[axis] + p[0] * g.extent(axis);
        e = rasterize_if(g, [&](const Point& x) { return x[axis] < t; });
        break;
    }
    }
    if (spec.margin_cells > 0) {
        const GridSet band = detail::margin_band(g, spec.margin_cells);
        if (spec.clips_to_margin()) {
            e = e.minus(band);
        } else if (!(e & band).empty()) {
            throw InvalidArgument("margin violation: " + spec.to_string() + " reaches within " +
                                  std::to_string(spec.margin_cells) + " cells of the box edge");
        }
    }
    return e;
}

/// The 20-shape corpus used for the boundedness and constant experiments.
inline std::vector<ShapeSpec> default_corpus(int margin_cells = 2)
{
    const char* specs[] = {
        "ball:0.25",           "ball:0.1:0.3:0.6",    "ball:0.35",           "cube:0.2",
        "cube:0.3:0.45:0.55",  "cube:0.1:0.3:0.3",    "annulus:0.15:0.3",    "annulus:0.08:0.2:0.55:0.45",
        "balls:3#1",           "balls:5#2",           "balls:8#3",           "balls:12:0.02:0.08#4",
        "balls:2#5",           "dyadic:0.3:3#6",      "dyadic:0.5:3#7",      "dyadic:0.2:4#8",
        "dyadic:0.6:2#9",      "half:0.5",            "half:0.3:1",          "balls:6:0.05:0.2#10",
    };
    std::vector<ShapeSpec> out;
    for (const char* s : specs) out.push_back(ShapeSpec::parse(s, margin_cells));
    return out;
}

// ---------------------------------------------------------------------------

struct VariationResult {
    double variation = 0.0;
    double perimeter = 0.0;
    double ratio = 0.0;
};

/// var(M 1_E, Omega) / Per(E, Omega) for a precomputed maximal function.
inline VariationResult variation_ratio_of(const GridSet& e, const Domain& omega, const ScalarField& m)
{
    detail::require(!e.empty(), "E must be nonempty");
    VariationResult r;
    r.variation = variation_coarea(m, omega);
    r.perimeter = perimeter(e, omega);
    if (r.perimeter == 0.0) {
        if (r.variation != 0.0) throw InvalidArgument("E has zero perimeter in Omega");
        return r;
    }
    r.ratio = r.variation / r.perimeter;
    return r;
}

/// var(M 1_E, Omega) / Per(E, Omega). A constant maximal function over a set
/// without boundary in Omega gives 0.
inline double variation_ratio(const GridSet& e, const Domain& omega, const MaximalOperator& op)
{
    return variation_ratio_of(e, omega, op.apply(e, omega)).ratio;
}

// ---------------------------------------------------------------------------

/// n points from a to b, equally spaced in log scale.
inline std::vector<double> logspace(double a, double b, int n)
{
    detail::require(a > 0.0 && b > a && n >= 2, "logspace needs 0 < a < b and n >= 2");
    std::vector<double> v;
    for (int i = 0; i < n; ++i) v.push_back(std::exp(std::log(a) + (std::log(b) - std::log(a)) * i / (n - 1)));
    v.front() = a;
    v.back() = b;
    return v;
}

/// "log:A:B:N" or "list:L1,L2,...".
inline std::vector<double> parse_lambda_grid(const std::string& text)
{
    const auto parts = detail::split(text, ':');
    if (parts.size() == 4 && parts[0] == "log")
        return logspace(detail::to_double(parts[1]), detail::to_double(parts[2]), std::stoi(parts[3]));
    if (parts.size() == 2 && parts[0] == "list") {
        std::vector<double> v;
        for (const auto& s : detail::split(parts[1], ',')) v.push_back(detail::to_double(s));
        return v;
    }
    throw InvalidArgument("lambda grid must be log:A:B:N or list:L1,L2,...");
}

inline void validate_lambda_grid(const std::vector<double>& lambdas)
{
    detail::require(!lambdas.empty(), "lambda grid is empty");
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        detail::require(lambdas[i] > 0.0 && lambdas[i] < 1.0, "lambda values must lie in (0, 1)");
        if (i > 0) detail::require(lambdas[i] > lambdas[i - 1], "lambda grid must be strictly increasing");
    }
}

struct SlopeFit {
    double slope = std::numeric_limits<double>::quiet_NaN();
    double intercept = std::numeric_limits<double>::quiet_NaN();
    double half_width = std::numeric_limits<double>::quiet_NaN();  // 95% bootstrap
    std::size_t points = 0;
};

/// Least squares y = a + b x with a residual bootstrap for the slope.
inline SlopeFit fit_slope(const std::vector<double>& x, const std::vector<double>& y, std::uint64_t seed,
                          int resamples = 100)
{
    SlopeFit f;
    f.points = x.size();
    if (x.size() < 2) return f;
    auto ls = [&](const std::vector<double>& yy, double& a, double& b) {
        const double n = static_cast<double>(x.size());
        const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
        const double my = std::accumulate(yy.begin(), yy.end(), 0.0) / n;
        double sxx = 0.0, sxy = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            sxx += (x[i] - mx) * (x[i] - mx);
            sxy += (x[i] - mx) * (yy[i] - my);
        }
        b = sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
        a = my - b * mx;
    };
    ls(y, f.intercept, f.slope);
    if (x.size() < 3) {
        f.half_width = 0.0;
        return f;
    }
    std::vector<double> res(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) res[i] = y[i] - (f.intercept + f.slope * x[i]);
    std::vector<double> slopes;
    std::vector<double> yb(x.size());
    for (int k = 0; k < resamples; ++k) {
        CounterRng rng(seed, 0x626f6f74ULL + static_cast<std::uint64_t>(k));
        for (std::size_t i = 0; i < x.size(); ++i) yb[i] = f.intercept + f.slope * x[i] + res[rng.below(res.size())];
        double a = 0.0, b = 0.0;
        ls(yb, a, b);
        slopes.push_back(b);
    }
    std::sort(slopes.begin(), slopes.end());
    auto q = [&](double p) {
        const double pos = p * static_cast<double>(slopes.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(slopes.size() - 1, lo + 1);
        return slopes[lo] + (pos - static_cast<double>(lo)) * (slopes[hi] - slopes[lo]);
    };
    f.half_width = 0.5 * (q(0.975) - q(0.025));
    return f;
}

struct RateRow {
    double lambda = 0.0;
    double perimeter = 0.0;  // Per({M 1_E > lambda}, Omega)
    double c_dy = 0.0;       // perimeter lambda^((d-1)/d) / Per(E)
    double c_un = 0.0;       // c_dy / (1 - ln lambda)
    bool empty = false;      // the level set has no cells
};

struct RateReport {
    std::string op;
    int d = 2;
    Index resolution = 0;
    double base_perimeter = 0.0;  // Per(E, Omega)
    std::vector<RateRow> rows;
    SlopeFit fit;
    double expected_slope = 0.0;  // -(d-1)/d
    double sup_c_dy = 0.0;
    double sup_c_un = 0.0;
    std::size_t empty_rows = 0;

    Json to_json() const
    {
        Json j;
        j["operator"] = op;
        j["d"] = d;
        j["resolution"] = resolution;
        j["base_perimeter"] = base_perimeter;
        j["slope"] = fit.slope;
        j["slope_half_width"] = fit.half_width;
        j["fit_points"] = fit.points;
        j["expected_slope"] = expected_slope;
        j["sup_c_dy"] = sup_c_dy;
        j["sup_c_un"] = sup_c_un;
        j["empty_rows"] = empty_rows;
        Json rs = Json::array();
        for (const auto& r : rows)
            rs.push_back({{"lambda", r.lambda}, {"perimeter", r.perimeter}, {"c_dy", r.c_dy}, {"c_un", r.c_un},
                          {"empty", r.empty}});
        j["rows"] = rs;
        return j;
    }

    std::string to_csv() const
    {
        std::ostringstream os;
        os.precision(17);
        os << "lambda,perimeter,c_dy,c_un,empty\n";
        for (const auto& r : rows)
            os << r.lambda << ',' << r.perimeter << ',' << r.c_dy << ',' << r.c_un << ',' << (r.empty ? 1 : 0) << '\n';
        return os.str();
    }
};

/// Level-set perimeters and constants for a precomputed maximal function.
inline RateReport levelset_rate_of(const GridSet& e, const Domain& omega, const ScalarField& m,
                                   const std::vector<double>& lambdas, const std::string& op_name,
                                   std::uint64_t seed = 0)
{
    validate_lambda_grid(lambdas);
    const auto& g = e.geometry();
    RateReport rep;
    rep.op = op_name;
    rep.d = g.d;
    rep.resolution = g.shape[0];
    rep.expected_slope = -static_cast<double>(g.d - 1) / g.d;
    rep.base_perimeter = perimeter(e, omega);
    detail::require(rep.base_perimeter > 0.0, "E has zero perimeter in Omega");
    const auto per = level_set_perimeters(m, omega, lambdas);
    double top = 0.0;
    for (Index i = 0; i < g.size(); ++i)
        if (omega.contains(i)) top = std::max(top, m[i]);
    const double expo = static_cast<double>(g.d - 1) / g.d;
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        RateRow r;
        r.lambda = lambdas[i];
        r.perimeter = per[i];
        r.empty = !(top > lambdas[i]);
        r.c_dy = r.perimeter * std::pow(r.lambda, expo) / rep.base_perimeter;
        r.c_un = r.c_dy / (1.0 - std::log(r.lambda));
        rep.empty_rows += r.empty;
        rep.sup_c_dy = std::max(rep.sup_c_dy, r.c_dy);
        rep.sup_c_un = std::max(rep.sup_c_un, r.c_un);
        rep.rows.push_back(r);
    }
    std::vector<double> x, y;
    const std::size_t half = (lambdas.size() + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
        const auto& r = rep.rows[i];
        if (r.empty || !(r.perimeter > 0.0)) continue;
        x.push_back(std::log(r.lambda));
        y.push_back(std::log(r.perimeter));
    }
    rep.fit = fit_slope(x, y, seed);
    return rep;
}

inline RateReport levelset_rate(const GridSet& e, const Domain& omega, const MaximalOperator& op,
                                const std::vector<double>& lambdas, std::uint64_t seed = 0)
{
    validate_lambda_grid(lambdas);
    return levelset_rate_of(e, omega, op.apply(e, omega), lambdas, op.name(), seed);
}

// ---------------------------------------------------------------------------

/// Largest offset k >= 0 along the +x axis from the cell c such that some ball
/// of the given lattice keys, centered on the axis, contains the cell c + k e_1
/// and has E-density above lambda. Free space; counts use the cells of E.
inline Index axial_level_radius(const GridSet& e, Index c, double lambda, const std::vector<std::int64_t>& keys)
{
    const auto& g = e.geometry();
    const auto cc = g.coords(c);
    std::vector<std::array<Index, kMaxGridDim>> cells;
    for (Index i = 0; i < g.size(); ++i)
        if (e[i]) cells.push_back(g.coords(i));
    Index best = -1;
    for (auto key : keys) {
        const auto lb = LatticeBall::make(key, g.d);
        const Index reach = lb.reach;
        // densities of the axis centers that can matter
        for (Index j = -reach; j < g.shape[0]; ++j) {
            std::int64_t hits = 0;
            for (const auto& p : cells) {
                std::int64_t q = (p[0] - (cc[0] + j)) * (p[0] - (cc[0] + j));
                for (int a = 1; a < g.d; ++a) q += (p[a] - cc[a]) * (p[a] - cc[a]);
                hits += q < key;
            }
            if (!(static_cast<double>(hits) > lambda * static_cast<double>(lb.cells))) continue;
            // farthest axis cell in this ball
            const Index far = j + reach;
            best = std::max(best, std::min(far, g.shape[0] - 1 - cc[0]));
        }
    }
    return best;
}

struct AxialCheck {
    double lambda = 0.0;
    Index field_radius = -1;   // from the computed maximal function
    Index oracle_radius = -1;  // from axial_level_radius
    bool pass = false;
};

struct OptimalityReport {
    RateReport rate;
    std::vector<AxialCheck> axial;
    double tolerance = 0.1;
    bool slope_pass = false;
    bool axial_pass = false;
    bool resolution_flag = false;  // slope confidence wider than the tolerance

    bool pass() const { return slope_pass && axial_pass; }
};

struct OptimalityConfig {
    int d = 2;
    Index n = 512;
    double radius = 0.05;        // world radius of the ball
    double radius_cells = 4.0;   // cells across that radius (sets h)
    std::vector<double> lambdas = logspace(1e-3, 0.3, 25);
    std::vector<double> axial_lambdas = {1e-3, 1e-2, 1e-1};
    double step_cells = 0.25;    // arithmetic schedule step in cells
    unsigned threads = 0;
    std::uint64_t seed = 0;
};

/// Free-space ball centered on a cell center in the middle of the box, with the
/// uncentered operator on an arithmetic schedule that reaches past the largest
/// level-set radius r lambda_min^(-1/d).
inline OptimalityReport optimality_experiment(const OptimalityConfig& cfg)
{
    validate_lambda_grid(cfg.lambdas);
    detail::require(cfg.d >= 1 && cfg.d <= 3, "dimension must be 1, 2 or 3");
    GridGeometry g;
    g.d = cfg.d;
    g.h = cfg.radius / cfg.radius_cells;
    const Index mid = cfg.n / 2;
    for (int a = 0; a < cfg.d; ++a) {
        g.shape[a] = cfg.n;
        g.origin[a] = -(static_cast<double>(mid) + 0.5) * g.h;
    }
    g.validate();
    const Point center{};
    const Ball ball{center, cfg.radius};
    const GridSet e = rasterize(g, ball);
    const double reach = cfg.radius * std::pow(cfg.lambdas.front(), -1.0 / cfg.d);
    const double half_box = static_cast<double>(cfg.n - mid - 1) * g.h;
    detail::require(reach * 1.1 < half_box, "box too small for the smallest level");
    const auto sched = RadiusSchedule::arithmetic(g.h, std::min(1.1 * reach, half_box), cfg.step_cells * g.h);
    const auto op = MaximalOperator::uncentered(sched, cfg.threads);
    const Domain free = Domain::free_space(g);
    const ScalarField m = op.apply(e, free);

    OptimalityReport rep;
    rep.rate = levelset_rate_of(e, free, m, cfg.lambdas, op.name(), cfg.seed);
    rep.tolerance = cfg.d == 3 ? 0.15 : 0.1;
    rep.slope_pass = std::abs(rep.rate.fit.slope - rep.rate.expected_slope) <= rep.tolerance;
    rep.resolution_flag = !(rep.rate.fit.half_width <= rep.tolerance);

    std::vector<std::int64_t> keys;
    for (const auto& [k, r] : detail::schedule_keys(sched, g.h)) keys.push_back(k);
    const Index c = g.linear(mid, cfg.d > 1 ? mid : 0, cfg.d > 2 ? mid : 0);
    rep.axial_pass = true;
    for (double l : cfg.axial_lambdas) {
        AxialCheck a;
        a.lambda = l;
        const auto cc = g.coords(c);
        for (Index k = 0; cc[0] + k < g.shape[0]; ++k)
            if (m[c + k] > l) a.field_radius = k;
        a.oracle_radius = axial_level_radius(e, c, l, keys);
        a.pass = a.field_radius >= 0 && std::abs(a.field_radius - a.oracle_radius) <= 2;
        rep.axial_pass = rep.axial_pass && a.pass;
        rep.axial.push_back(a);
    }
    return rep;
}

// ---------------------------------------------------------------------------

struct SingleCubeResult {
    double density = 0.0;      // measured |E n Q| / |Q|
    double numerator = 0.0;    // boundary of Q away from E
    double inner = 0.0;        // Per(E, int Q)
    double denominator = 0.0;  // lambda^(-(d-1)/d) Per(E, int Q)
    double ratio = 0.0;
};

/// Boundary of Q (cube or ball) away from E against the boundary of E inside Q.
/// The density of E in Q must equal lambda up to the fraction of Q cells in one
/// boundary layer, or up to `tolerance` when that is given.
inline SingleCubeResult single_cube_estimate(const GridSet& e, const std::variant<Ball, Cube>& q, double lambda,
                                             double tolerance = -1.0)
{
    detail::require(lambda > 0.0 && lambda <= 1.0, "lambda must lie in (0, 1]");
    const auto& g = e.geometry();
    const GridSet qr = std::holds_alternative<Ball>(q) ? rasterize(g, std::get<Ball>(q)) : rasterize(g, std::get<Cube>(q));
    detail::require(!qr.empty(), "Q has no cells");
    SingleCubeResult r;
    r.density = static_cast<double>((qr & e).count()) / static_cast<double>(qr.count());
    if (tolerance < 0.0)
        tolerance = static_cast<double>(perimeter_faces(qr, Domain::free_space(g))) / static_cast<double>(qr.count());
    if (std::abs(r.density - lambda) > tolerance)
        throw InvalidArgument("density mismatch: E has density " + detail::fmt(r.density) + " in Q, expected " +
                              detail::fmt(lambda));
    Index faces = 0;
    for_each_face(g, Domain::free_space(g), [&](Index a, Index b, const Face&) {
        const bool ia = a != kOutside && qr[a];
        const bool ib = b != kOutside && qr[b];
        if (ia == ib) return;
        faces += !e[ia ? a : b];
    });
    r.numerator = static_cast<double>(faces) * g.face_area();
    r.inner = perimeter(e, Domain::within(qr));
    r.denominator = std::pow(lambda, -static_cast<double>(g.d - 1) / g.d) * r.inner;
    if (r.numerator == 0.0) r.ratio = 0.0;
    else r.ratio = r.denominator > 0.0 ? r.numerator / r.denominator : std::numeric_limits<double>::infinity();
    return r;
}

struct SingleCubeCampaign {
    long cases = 0;
    long skipped = 0;  // E covers Q or misses it
    double max_ratio = 0.0;
};

/// Random blob unions against random cubes or balls, with lambda set to the
/// measured density so the premise holds exactly.
inline SingleCubeCampaign single_cube_campaign(std::uint64_t seed, long count, Index n = 128)
{
    const auto g = GridGeometry::cube(2, n);
    SingleCubeCampaign out;
    for (long t = 0; t < count; ++t) {
        CounterRng rng(seed, 0x63756265ULL + static_cast<std::uint64_t>(t));
        GridSet e(g);
        const int k = 1 + static_cast<int>(rng.below(6));
        for (int j = 0; j < k; ++j)
            e |= rasterize(g, Ball{{rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)}, rng.uniform(0.03, 0.2)});
        const Point c{rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.7)};
        const double half = rng.uniform(0.08, 0.25);
        std::variant<Ball, Cube> q;
        if (t % 2) q = Ball{c, half};
        else q = Cube{c, half, 2};
        const GridSet qr = t % 2 ? rasterize(g, std::get<Ball>(q)) : rasterize(g, std::get<Cube>(q));
        const Index inside = (qr & e).count();
        if (inside == 0 || inside == qr.count()) {
            ++out.skipped;
            continue;
        }
        const double lambda = static_cast<double>(inside) / static_cast<double>(qr.count());
        out.max_ratio = std::max(out.max_ratio, single_cube_estimate(e, q, lambda, 0.0).ratio);
        ++out.cases;
    }
    return out;
}

// ---------------------------------------------------------------------------

struct PrefixRow {
    std::size_t members = 0;
    double deficit = 0.0;    // |L \ U_k| / |L|
    double perimeter = 0.0;  // Per(U_k u (E n Omega), Omega)
};

struct SemicontinuityReport {
    double level_measure = 0.0;
    double level_perimeter = 0.0;
    std::size_t family_size = 0;
    std::vector<PrefixRow> rows;
    bool monotone = true;       // deficits nonincreasing
    bool converged = true;      // the full family reproduces the level set
    bool inequality = true;     // Per(L) <= min over the tail + tolerance
    double tolerance = 0.0;
    double tail_deficit = 0.0;  // rows at or below this deficit form the tail
    double tail_min = 0.0;

    bool pass() const { return monotone && converged && inequality; }
};

/// Unions of growing prefixes of the superlevel family at fractions
/// `fractions` (the last should be 1), compared with the level set L.
inline SemicontinuityReport lower_semicontinuity_check(const GridSet& e, const Domain& omega,
                                                       const MaximalOperator& op, double lambda,
                                                       const std::vector<double>& fractions = {0.01, 0.1, 0.5, 0.9,
                                                                                               0.99, 1.0},
                                                       double tail_deficit = 0.02)
{
    detail::require(lambda > 0.0 && lambda < 1.0, "lambda must lie in (0, 1)");
    detail::require(!fractions.empty(), "need at least one prefix");
    const auto& g = e.geometry();
    const ScalarField m = op.apply(e, omega);
    const GridSet level = level_set(m, lambda);
    const auto fam = superlevel_family(e, omega, lambda, op);
    const GridSet base = e & omega.cells();
    SemicontinuityReport rep;
    rep.family_size = fam.size();
    rep.level_measure = measure(level);
    rep.level_perimeter = perimeter(level, omega);
    rep.tolerance = 2.0 * g.h * rep.level_perimeter;
    rep.tail_deficit = tail_deficit;

    GridSet acc = base;
    std::size_t done = 0;
    auto add_member = [&](std::size_t i) {
        if (i < fam.cubes.size()) acc |= cube_cells(g, fam.cubes[i]);
        else {
            for_each_cell_in_ball(
                g, fam.balls[i - fam.cubes.size()],
                [&](const auto&, Index c) {
                    if (c != kOutside) acc.set(c);
                },
                true);
        }
    };
    const GridSet om = omega.cells();
    for (double f : fractions) {
        detail::require(f >= 0.0 && f <= 1.0, "prefix fractions must lie in [0, 1]");
        const auto upto = static_cast<std::size_t>(std::ceil(f * static_cast<double>(fam.size())));
        for (; done < std::min(upto, fam.size()); ++done) add_member(done);
        PrefixRow r;
        r.members = done;
        const GridSet u = acc & om;
        const Index lc = level.count();
        r.deficit = lc == 0 ? 0.0 : static_cast<double>(level.minus(u).count()) / static_cast<double>(lc);
        r.perimeter = perimeter(u, omega);
        if (!rep.rows.empty() && r.deficit > rep.rows.back().deficit) rep.monotone = false;
        rep.rows.push_back(r);
    }
    const GridSet final_union = acc & om;
    rep.converged = rep.rows.back().members < fam.size() || final_union == level;
    rep.tail_min = std::numeric_limits<double>::infinity();
    for (const auto& r : rep.rows)
        if (r.deficit <= tail_deficit) rep.tail_min = std::min(rep.tail_min, r.perimeter);
    rep.inequality = rep.level_perimeter <= rep.tail_min + rep.tolerance;
    return rep;
}

// ---------------------------------------------------------------------------

struct FamilyRatio {
    double outside = 0.0;  // boundary of the union away from E
    double inside = 0.0;   // boundary of E inside the union
    double ratio = 0.0;    // outside / (lambda^(-(d-1)/d) (1 - ln lambda) inside)
};

/// For balls each with E-density above lambda: the boundary of their union away
/// from E against the boundary of E inside the union.
inline FamilyRatio finite_family_ratio(const GridSet& e, const BallFamily& fam, double lambda)
{
    detail::require(lambda > 0.0 && lambda < 1.0, "lambda must lie in (0, 1)");
    const auto& g = e.geometry();
    const GridSet u = rasterize_union(g, fam);
    Index faces = 0;
    for_each_face(g, Domain::free_space(g), [&](Index a, Index b, const Face&) {
        const bool ia = a != kOutside && u[a];
        const bool ib = b != kOutside && u[b];
        if (ia == ib) return;
        faces += !((a != kOutside && e[a]) || (b != kOutside && e[b]));
    });
    FamilyRatio r;
    r.outside = static_cast<double>(faces) * g.face_area();
    r.inside = u.empty() ? 0.0 : perimeter(e, Domain::within(u));
    const double scale = std::pow(lambda, -static_cast<double>(g.d - 1) / g.d) * (1.0 - std::log(lambda));
    r.ratio = r.outside == 0.0 ? 0.0
                               : (r.inside > 0.0 ? r.outside / (scale * r.inside) : std::numeric_limits<double>::infinity());
    return r;
}

// ---------------------------------------------------------------------------

struct CorpusEntry {
    std::string shape;
    VariationResult variation;
    RateReport rate;
};

/// Variation ratio and level-set constants for each shape at resolution n, with
/// Omega the open grid box.
inline std::vector<CorpusEntry> corpus_experiment(const std::vector<ShapeSpec>& corpus, int d, Index n,
                                                  MaximalOperator::Kind kind, const std::vector<double>& lambdas,
                                                  unsigned threads = 0, std::uint64_t seed = 0)
{
    const auto g = GridGeometry::cube(d, n);
    std::vector<CorpusEntry> out(corpus.size());
    detail::parallel_for(corpus.size(), threads, [&](std::size_t i) {
        const GridSet e = generate_shape(corpus[i], g);
        const Domain box = Domain::box(g);
        const auto op = kind == MaximalOperator::Kind::Dyadic ? MaximalOperator::dyadic()
                                                              : MaximalOperator::uncentered(RadiusSchedule::default_for(g), 1);
        const ScalarField m = op.apply(e, box);
        out[i].shape = corpus[i].to_string();
        out[i].variation = variation_ratio_of(e, box, m);
        out[i].rate = levelset_rate_of(e, box, m, lambdas, op.name(), seed);
    });
    return out;
}

struct CorpusSummary {
    double max_ratio = 0.0;
    double sup_c_dy = 0.0;
    double sup_c_un = 0.0;
    bool finite = true;
};

inline CorpusSummary summarize(const std::vector<CorpusEntry>& entries)
{
    CorpusSummary s;
    for (const auto& e : entries) {
        s.finite = s.finite && std::isfinite(e.variation.ratio) && std::isfinite(e.rate.sup_c_dy);
        s.max_ratio = std::max(s.max_ratio, e.variation.ratio);
        s.sup_c_dy = std::max(s.sup_c_dy, e.rate.sup_c_dy);
        s.sup_c_un = std::max(s.sup_c_un, e.rate.sup_c_un);
    }
    return s;
}

// ---------------------------------------------------------------------------

namespace detail {

inline GridSet suite_blobs(const GridGeometry& g, CounterRng& rng, int k, double rmin, double rmax)
{
    GridSet s(g);
    for (int j = 0; j < k; ++j) {
        Point c{};
        for (int a = 0; a < g.d; ++a) c[a] = g.origin[a] + rng.uniform(0.15, 0.85) * g.extent(a);
        s |= rasterize(g, Ball{c, rng.uniform(rmin, rmax) * g.extent(0)});
    }
    return s;
}

/// Balls centered at E cells with E-density in (lo, hi].
inline BallFamily suite_density_balls(const GridSet& e, CounterRng& rng, int count, double lo, double hi, double rmin,
                                      double rmax)
{
    const auto& g = e.geometry();
    std::vector<Index> cells;
    for (Index i = 0; i < g.size(); ++i)
        if (e[i]) cells.push_back(i);
    BallFamily f;
    if (cells.empty()) return f;
    for (int tries = 0; tries < 100000 && static_cast<int>(f.size()) < count; ++tries) {
        const Ball b{g.cell_center(cells[rng.below(cells.size())]), rng.uniform(rmin, rmax)};
        const double dens = density(e, b);
        if (dens > lo && dens <= hi) f.add(b);
    }
    return f;
}

inline long scaled(double budget, long base) { return std::max(1L, static_cast<long>(std::ceil(budget * static_cast<double>(base)))); }

inline Json point_json(const Point& p, int d)
{
    Json j = Json::array();
    for (int a = 0; a < d; ++a) j.push_back(p[a]);
    return j;
}

} // namespace detail

struct LargeBallTrend {
    std::vector<double> ks;
    std::vector<double> median_ratio;       // Per(U B, C) / Per(C)
    std::vector<double> median_normalized;  // ratio K^d, reported only
    bool pass = true;                       // every median <= 2 x the first

    Json to_json() const
    {
        Json med = Json::object(), norm = Json::object();
        for (std::size_t i = 0; i < ks.size(); ++i) {
            med[detail::fmt(ks[i])] = median_ratio[i];
            norm[detail::fmt(ks[i])] = median_normalized[i];
        }
        return {{"median_ratio", med}, {"median_normalized", norm}};
    }
};

/// Random families of 1 to 5 balls of diameter K..3K times diam C whose
/// boundaries cross the unit window ball C, for K in ks.
inline LargeBallTrend large_ball_trend(std::uint64_t seed, long families, const std::vector<double>& ks = {2.0, 4.0, 8.0},
                                       int d = 2, int cells = 32)
{
    LargeBallTrend out;
    out.ks = ks;
    for (double k : ks) {
        std::vector<double> ratios, norms;
        for (long t = 0; t < families; ++t) {
            CounterRng rng(seed, 700 + static_cast<std::uint64_t>(t));
            const Ball c{{}, 1.0};
            BallFamily fam;
            const int count = 1 + static_cast<int>(rng.below(5));
            for (int j = 0; j < count; ++j) {
                const double rad = k * c.radius * rng.uniform(1.0, 3.0);
                Point dir{};
                double len = 0.0;
                while (len < 1e-9) {
                    len = 0.0;
                    for (int a = 0; a < d; ++a) {
                        dir[a] = rng.normal();
                        len += dir[a] * dir[a];
                    }
                    len = std::sqrt(len);
                }
                const double at = rad + rng.uniform(-1.0, 1.0) * c.radius;
                Point center{};
                for (int a = 0; a < d; ++a) center[a] = at * dir[a] / len;
                fam.add(Ball{center, rad});
            }
            const auto res = large_ball_boundary_ratio(c, fam, k, d, cells);
            ratios.push_back(res.ratio);
            norms.push_back(res.normalized);
        }
        std::sort(ratios.begin(), ratios.end());
        std::sort(norms.begin(), norms.end());
        out.median_ratio.push_back(ratios[ratios.size() / 2]);
        out.median_normalized.push_back(norms[norms.size() / 2]);
    }
    for (double m : out.median_ratio) out.pass = out.pass && std::isfinite(m) && m <= 2.0 * out.median_ratio.front();
    return out;
}

struct IntersectingUnionTrials {
    std::vector<double> lambdas;
    std::vector<double> max_constant;  // ratio / envelope, worst over the trials
    long trials = 0;
    bool pass = true;                  // premise held and every constant <= 1

    Json to_json() const
    {
        Json c = Json::object();
        for (std::size_t i = 0; i < lambdas.size(); ++i) c[detail::fmt(lambdas[i])] = max_constant[i];
        return {{"trials_per_lambda", trials}, {"max_constant", c}};
    }
};

/// Random families of 1 to 6 balls, each placed so that a uniform fraction in
/// [lambda, 1] of its area lies in F = B(0.5, 0.05), on a 256^2 grid.
inline IntersectingUnionTrials intersecting_union_trials(std::uint64_t seed, long trials,
                                                         const std::vector<double>& lambdas = {0.05, 0.1, 0.2})
{
    IntersectingUnionTrials out;
    out.lambdas = lambdas;
    out.trials = trials;
    const auto g = GridGeometry::cube(2, 256);
    const Ball f{{0.5, 0.5}, 0.05};
    for (double lambda : lambdas) {
        double worst = 0.0;
        for (long t = 0; t < trials; ++t) {
            CounterRng rng(seed, 800 + static_cast<std::uint64_t>(t) + static_cast<std::uint64_t>(lambda * 1000));
            BallFamily fam;
            const int count = 1 + static_cast<int>(rng.below(6));
            for (int j = 0; j < count; ++j) {
                const double rb = f.radius * rng.uniform(0.3, 1.0) * std::pow(lambda, -0.5);
                const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
                const double target = rng.uniform(lambda, 1.0);
                double lo = 0.0, hi = f.radius + rb;
                for (int it = 0; it < 60; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    const Ball b{{f.center[0] + mid * std::cos(phi), f.center[1] + mid * std::sin(phi)}, rb};
                    (ball_intersection_volume(b, f, 2) / ball_volume(b, 2) >= target ? lo : hi) = mid;
                }
                fam.add(Ball{{f.center[0] + lo * std::cos(phi), f.center[1] + lo * std::sin(phi)}, rb});
            }
            const auto res = intersecting_union_perimeter_check(g, f, fam, lambda);
            out.pass = out.pass && res.offending.empty() && std::isfinite(res.constant) && res.constant <= 1.0;
            worst = std::max(worst, res.constant);
        }
        out.max_constant.push_back(worst);
    }
    return out;
}

/// Every lemma check at a desk-scale configuration; budget scales the trial
/// counts (1 = default, 0 = nothing runs). The adversarial minimal-angle entry is
/// expected to fail the lemma's conclusion; its record passes when it does.
inline VerificationReport lemma_suite(std::uint64_t seed, double budget = 1.0)
{
    VerificationReport rep;
    rep.kind = "lemma_suite";
    rep.seed = seed;
    if (!(budget > 0.0)) return rep;
    const auto g = GridGeometry::cube(2, 128);

    rep.add(timed_record("boundary_of_union", [&](Record& r) {
        const long cases = detail::scaled(budget, 100);
        long bad = 0;
        for (long t = 0; t < cases; ++t) {
            CounterRng rng(seed, 100 + static_cast<std::uint64_t>(t));
            const auto gg = GridGeometry::cube(2, 64);
            bad += !boundary_union_check(detail::suite_blobs(gg, rng, 3, 0.05, 0.2), detail::suite_blobs(gg, rng, 3, 0.05, 0.2)).empty();
        }
        r.measured = {{"cases", cases}, {"violations", bad}};
        r.pass = bad == 0;
    }));

    rep.add(timed_record("maximal_function_dominates", [&](Record& r) {
        const long cases = detail::scaled(budget, 40);
        long bad = 0;
        const auto gg = GridGeometry::cube(2, 64);
        for (long t = 0; t < cases; ++t) {
            CounterRng rng(seed, 200 + static_cast<std::uint64_t>(t));
            const GridSet e = detail::suite_blobs(gg, rng, 3, 0.05, 0.2);
            const Domain om = t % 2 ? Domain::box(gg) : Domain::free_space(gg);
            const auto op = t % 3 == 0 ? MaximalOperator::dyadic()
                                       : MaximalOperator::uncentered(RadiusSchedule::geometric(gg.h, 0.3, 1.2), 1);
            bad += !mf_geq_f_check(e, om, op.apply(e, om), op).empty();
        }
        r.measured = {{"cases", cases}, {"violations", bad}};
        r.pass = bad == 0;
    }));

    rep.add(timed_record("reach_inside", [&](Record& r) {
        const long trials = detail::scaled(budget, 1000);
        long violated = 0, premise = 0, inconclusive = 0;
        for (int d = 1; d <= 3; ++d) {
            const auto t = reach_campaign(d, d == 3 ? std::max(1L, trials / 4) : trials, seed, d == 3 ? 10 : 40);
            violated += t.violated;
            premise += t.premise_met;
            inconclusive += t.inconclusive;
        }
        r.measured = {{"premise_met", premise}, {"violations", violated}, {"inconclusive", inconclusive}};
        r.pass = violated == 0 && premise > 0;
    }));

    rep.add(timed_record("shrink_disjoint", [&](Record& r) {
        const long trials = detail::scaled(budget, 2500);
        Json per = Json::object();
        long violated = 0;
        double gap = std::numeric_limits<double>::infinity();
        for (int d = 1; d <= 4; ++d) {
            const auto t = shrink_campaign(d, trials, seed);
            violated += t.violated;
            gap = std::min(gap, t.min_gap);
            per[std::to_string(d)] = {{"premise_met", t.premise_met}, {"violations", t.violated}, {"min_gap", t.min_gap}};
        }
        r.measured = {{"per_dimension", per}, {"violations", violated}, {"min_gap", gap}};
        r.pass = violated == 0;
    }));

    rep.add(timed_record("min_angle", [&](Record& r) {
        const auto probe = min_angle_probe(1e6, detail::scaled(budget, 2000), seed);
        const auto crit = min_angle_probe(probe.critical_n, detail::scaled(budget, 20000), seed + 1);
        r.measured = {{"max_angle_large_n", probe.max_angle},
                      {"critical_n", probe.critical_n},
                      {"max_angle_at_critical_n", crit.max_angle},
                      {"samples", crit.samples}};
        r.pass = probe.all_within && crit.all_within && crit.worst_case_within;
    }));

    rep.add(timed_record("min_angle_adversarial", [&](Record& r) {
        const auto probe = min_angle_probe(1.01, detail::scaled(budget, 2000), seed);
        Json w = Json::array();
        for (const auto& p : probe.witness) w.push_back(detail::point_json(p, 2));
        r.measured = {{"n", 1.01},
                      {"lemma_holds", probe.worst_case_within && probe.all_within},
                      {"worst_case_angle", probe.worst_case_angle},
                      {"witness", w}};
        r.note = "expected failure: N = 1.01 is below the critical N";
        r.pass = !probe.worst_case_within;
    }));

    rep.add(timed_record("volume_ratio", [&](Record& r) {
        const auto v = volume_ratio_check(25);
        r.measured = {{"max_slack_from_3", v.max_slack},
                      {"ratio_d1", v.rows[0].ratio},
                      {"ratio_d2", v.rows[1].ratio},
                      {"final_bound_all_d", v.final_pass}};
        r.pass = v.pass_from_3 && v.final_pass;
    }));

    rep.add(timed_record("lens_region", [&](Record& r) {
        const auto gg = GridGeometry::cube(2, 512);
        const Cube x{{0.5, 0.5}, 0.5, 2};
        const Ball c{{0.5, 0.0}, 0.2};
        const auto a = lens_region(x, c, 0.25);
        const double t = 0.25 * c.diameter();
        const double want = c.radius * c.radius * std::acos(t / c.radius) - t * std::sqrt(c.radius * c.radius - t * t);
        const double got = measure(rasterize_region(a, gg));
        CounterRng rng(seed, 300);
        long bad = 0, pairs = 0;
        const auto corner = lens_region(x, Ball{{1.0, 1.0}, 0.4}, 0.1);
        std::vector<Point> pts;
        for (long k = 0; k < detail::scaled(budget, 20000) && pts.size() < 2000; ++k) {
            const Point p{rng.uniform(0.5, 1.0), rng.uniform(0.5, 1.0)};
            if (corner.contains(p)) pts.push_back(p);
        }
        for (std::size_t i = 0; i + 1 < pts.size(); i += 2, ++pairs) {
            const Point mpt{0.5 * (pts[i][0] + pts[i + 1][0]), 0.5 * (pts[i][1] + pts[i + 1][1])};
            bad += !corner.contains(mpt);
        }
        r.measured = {{"area", got}, {"closed_form", want}, {"convexity_pairs", pairs}, {"convexity_violations", bad}};
        r.pass = std::abs(got / want - 1.0) <= 0.02 && bad == 0;
    }));

    rep.add(timed_record("isoperimetric_ratio", [&](Record& r) {
        Json vals = Json::object();
        bool ok = true;
        for (int d : {2, 3}) {
            const auto gg = GridGeometry::cube(d, d == 2 ? 64 : 32);
            const auto half = rasterize_if(gg, [](const Point& p) { return p[0] < 0.5; });
            const auto s = isoperimetric_ratio(GridSet(gg, true), half);
            vals[std::to_string(d)] = s.ratio;
            ok = ok && std::abs(s.ratio / std::pow(0.5, d - 1) - 1.0) <= 0.05;
        }
        r.measured = {{"half_cube_ratio", vals}};
        r.pass = ok;
    }));

    rep.add(timed_record("vitali", [&](Record& r) {
        CounterRng rng(seed, 400);
        BallFamily input;
        const long n = detail::scaled(budget, 1000);
        for (long i = 0; i < n; ++i) input.add(Ball{{rng.uniform(), rng.uniform()}, rng.uniform(0.002, 0.03)});
        const auto sel = vitali_subfamily(input);
        const bool disjoint = pairwise_disjoint(sel);
        const auto unc = vitali_uncovered(GridGeometry::cube(2, 256), input, sel);
        r.measured = {{"input", n}, {"selected", sel.size()}, {"disjoint", disjoint}, {"uncovered_cells", unc.count()}};
        r.pass = disjoint && unc.empty();
    }));

    rep.add(timed_record("boxing", [&](Record& r) {
        const long cases = detail::scaled(budget, 5);
        double worst = 0.0, dens_excess = 0.0;
        for (long t = 0; t < cases; ++t) {
            CounterRng rng(seed, 500 + static_cast<std::uint64_t>(t));
            const GridSet e = detail::suite_blobs(g, rng, 6, 0.02, 0.08);
            const auto outer = detail::suite_density_balls(e, rng, 10, 0.0, 0.5, 0.05, 0.2);
            const auto cover = boxing_cover(e, outer);
            worst = std::max(worst, cover.residual_fraction);
            for (const auto& f : cover.balls)
                dens_excess = std::max(dens_excess, std::abs(density(e, f) - 0.5) - boxing_tolerance(g, f));
        }
        r.measured = {{"cases", cases}, {"max_residual_fraction", worst}, {"max_density_excess", dens_excess}};
        r.pass = worst < 0.01 && dens_excess <= 1e-12;
    }));

    rep.add(timed_record("surface_boxing", [&](Record& r) {
        const Ball x{{0.5, 0.5}, 0.4};
        const auto e = rasterize(g, Ball{{0.5, 0.5}, 0.4 / std::sqrt(2.0)});
        const auto cover = surface_boxing_cover(x, e, 0.5);
        r.measured = {{"balls", cover.balls.size()}, {"skipped", cover.skipped.size()}, {"min_ratio", cover.min_ratio}};
        r.pass = !cover.balls.empty() && cover.min_ratio > 0.0;
    }));

    rep.add(timed_record("multiscale_covers", [&](Record& r) {
        const long cases = detail::scaled(budget, 3);
        bool ok = true;
        double cmin = std::numeric_limits<double>::infinity();
        std::size_t overlaps = 0, unresolved = 0;
        for (long t = 0; t < cases; ++t) {
            CounterRng rng(seed, 600 + static_cast<std::uint64_t>(t));
            const GridSet e = detail::suite_blobs(g, rng, 6, 0.03, 0.1);
            const auto outer = detail::suite_density_balls(e, rng, 15, 0.3, 1.0, 0.03, 0.15);
            const auto c = multiscale_covers(e, outer, 0.3);
            ok = ok && c.disjoint() && c.covered() && c.close() && c.positive();
            cmin = std::min(cmin, c.min_constant);
            overlaps += c.cross_scale_overlaps;
            unresolved += c.unresolved.size();
        }
        r.measured = {{"cases", cases},
                      {"min_constant", cmin},
                      {"cross_scale_overlaps", overlaps},
                      {"unresolved_balls", unresolved}};
        r.pass = ok;
    }));

    rep.add(timed_record("large_ball_boundary", [&](Record& r) {
        const auto t = large_ball_trend(seed, detail::scaled(budget, 20));
        r.measured = t.to_json();
        r.pass = t.pass;
    }));

    rep.add(timed_record("intersecting_union", [&](Record& r) {
        const auto t = intersecting_union_trials(seed, detail::scaled(budget, 10));
        r.measured = t.to_json();
        r.pass = t.pass;
    }));

    rep.add(timed_record("finite_family", [&](Record& r) {
        double worst = 0.0;
        bool ok = true;
        for (long t = 0; t < detail::scaled(budget, 5); ++t) {
            CounterRng rng(seed, 900 + static_cast<std::uint64_t>(t));
            const GridSet e = detail::suite_blobs(g, rng, 6, 0.03, 0.1);
            const auto fam = detail::suite_density_balls(e, rng, 15, 0.3, 1.0, 0.03, 0.15);
            const auto fr = finite_family_ratio(e, fam, 0.3);
            ok = ok && std::isfinite(fr.ratio);
            worst = std::max(worst, fr.ratio);
        }
        r.measured = {{"max_ratio", worst}};
        r.pass = ok;
    }));

    rep.add(timed_record("single_cube", [&](Record& r) {
        const auto gg = GridGeometry::cube(2, 128);
        const Cube q{{0.5, 0.5}, 0.5 - 4 * gg.h, 2};
        double worst = 0.0;
        bool ok = true;
        for (double lambda : {0.1, 0.25, 0.5}) {
            const double top = q.center[1] - q.half + lambda * 2.0 * q.half;
            const auto slab = rasterize_if(gg, [&](const Point& p) { return p[1] < top; });
            const auto res = single_cube_estimate(slab, q, lambda);
            const double want = (3.0 - 2.0 * lambda) * std::sqrt(lambda);
            ok = ok && std::abs(res.ratio / want - 1.0) < 0.05;
            worst = std::max(worst, res.ratio);
        }
        r.measured = {{"max_slab_ratio", worst}};
        r.pass = ok;
    }));

    rep.add(timed_record("lower_semicontinuity", [&](Record& r) {
        const auto gg = GridGeometry::cube(2, 64);
        bool ok = true;
        for (long t = 0; t < detail::scaled(budget, 4); ++t) {
            CounterRng rng(seed, 1000 + static_cast<std::uint64_t>(t));
            const GridSet e = detail::suite_blobs(gg, rng, 3, 0.05, 0.15);
            const auto op = t % 2 ? MaximalOperator::dyadic()
                                  : MaximalOperator::uncentered(RadiusSchedule::geometric(gg.h, 0.3, 1.2), 1);
            ok = ok && lower_semicontinuity_check(e, Domain::free_space(gg), op, 0.3).pass();
        }
        r.measured = {{"cases", detail::scaled(budget, 4)}};
        r.pass = ok;
    }));

    return rep;
}

} // namespace maxvar
