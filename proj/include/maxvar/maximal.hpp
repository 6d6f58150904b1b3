#pragma once

// Local dyadic and local uncentered maximal operators applied to indicator
// functions, and their superlevel sets written as unions of cubes or balls.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ball.hpp"
#include "distance_transform.hpp"
#include "family.hpp"
#include "grid.hpp"

namespace maxvar {

/// Finite set of radii standing in for the supremum over all radii.
struct RadiusSchedule {
    enum class Kind { Arithmetic, Geometric };

    Kind kind = Kind::Geometric;
    double r_min = 0.0;
    double r_max = 0.0;
    double step = 1.05;  // increment (arithmetic) or ratio (geometric)

    static RadiusSchedule geometric(double r_min, double r_max, double ratio)
    {
        return {Kind::Geometric, r_min, r_max, ratio};
    }
    static RadiusSchedule arithmetic(double r_min, double r_max, double step)
    {
        return {Kind::Arithmetic, r_min, r_max, step};
    }

    /// Ratio 1.05 from h to half the box diagonal.
    static RadiusSchedule default_for(const GridGeometry& g) { return geometric(g.h, 0.5 * g.diameter(), 1.05); }

    /// "geom:RATIO[:RMIN:RMAX]" or "arith:STEP[:RMIN:RMAX]"; missing bounds default
    /// to h and half the box diagonal. STEP may be written "h" for one cell.
    static RadiusSchedule parse(const std::string& text, const GridGeometry& g)
    {
        std::vector<std::string> parts;
        std::stringstream ss(text);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
        detail::require(parts.size() == 2 || parts.size() == 4, "schedule must be kind:step[:rmin:rmax]");
        auto num = [&](const std::string& s) { return s == "h" ? g.h : std::stod(s); };
        RadiusSchedule r = default_for(g);
        if (parts[0] == "geom") r.kind = Kind::Geometric;
        else if (parts[0] == "arith") r.kind = Kind::Arithmetic;
        else throw InvalidArgument("unknown schedule kind '" + parts[0] + "'");
        r.step = num(parts[1]);
        if (parts.size() == 4) {
            r.r_min = num(parts[2]);
            r.r_max = num(parts[3]);
        }
        r.validate(g);
        return r;
    }

    std::string to_string() const
    {
        std::ostringstream os;
        os.precision(17);
        os << (kind == Kind::Geometric ? "geom:" : "arith:") << step << ':' << r_min << ':' << r_max;
        return os.str();
    }

    std::vector<double> radii() const
    {
        std::vector<double> out;
        if (!(r_min > 0.0) || r_max < r_min) return out;
        const double limit = r_max * (1.0 + 1e-12);
        if (kind == Kind::Geometric) {
            if (!(step > 1.0)) return out;
            for (int k = 0;; ++k) {
                const double r = r_min * std::pow(step, k);
                if (r > limit) break;
                out.push_back(r);
            }
        } else {
            if (!(step > 0.0)) return out;
            for (Index k = 0;; ++k) {
                const double r = r_min + static_cast<double>(k) * step;
                if (r > limit) break;
                out.push_back(r);
            }
        }
        return out;
    }

    void validate(const GridGeometry& g) const
    {
        detail::require(r_min >= g.h * (1.0 - 1e-12), "schedule r_min must be at least one cell side");
        detail::require(r_max <= g.diameter() * (1.0 + 1e-12), "schedule r_max must not exceed the grid diameter");
        detail::require(kind == Kind::Geometric ? step > 1.0 : step > 0.0, "schedule step must be increasing");
        detail::require(!radii().empty(), "schedule is empty");
    }
};

/// Half-open dyadic cube [index, index + 1) * 2^level in cell units.
struct DyadicCube {
    int level = 0;
    std::array<Index, kMaxGridDim> index{0, 0, 0};

    Index side_cells() const { return Index{1} << level; }

    DyadicCube parent() const
    {
        DyadicCube p{level + 1, index};
        for (auto& c : p.index) c >>= 1;
        return p;
    }

    bool contains_cell(const std::array<Index, kMaxGridDim>& cell, int d) const
    {
        for (int a = 0; a < d; ++a)
            if ((cell[a] >> level) != index[a]) return false;
        return true;
    }

    bool operator==(const DyadicCube&) const = default;
};

inline GridSet cube_cells(const GridGeometry& g, const DyadicCube& q)
{
    GridSet s(g);
    const Index side = q.side_cells();
    const Index ex = side, ey = g.d >= 2 ? side : 1, ez = g.d >= 3 ? side : 1;
    for (Index z = 0; z < ez; ++z)
        for (Index y = 0; y < ey; ++y)
            for (Index x = 0; x < ex; ++x)
                s.set(g.linear(q.index[0] * ex + x, q.index[1] * ey + y, q.index[2] * ez + z));
    return s;
}

/// Largest dyadic level whose cubes still tile the grid.
inline int max_dyadic_level(const GridGeometry& g)
{
    int top = 62;
    for (int a = 0; a < g.d; ++a) {
        int e = 0;
        while ((Index{1} << (e + 1)) <= g.shape[a]) ++e;
        top = std::min(top, e);
    }
    return top;
}

namespace detail {

/// Per-level pyramid of E-counts and of "cube lies in Omega" flags.
struct DyadicPyramid {
    int levels = 0;
    std::vector<std::array<Index, kMaxGridDim>> dims;
    std::vector<std::vector<Index>> counts;
    std::vector<std::vector<std::uint8_t>> in_domain;

    Index at(int n, Index x, Index y, Index z) const { return x + dims[n][0] * (y + dims[n][1] * z); }
};

inline DyadicPyramid build_pyramid(const GridSet& e, const Domain& omega)
{
    const auto& g = e.geometry();
    require_same(g, omega.geometry(), "dyadic_maximal");
    detail::require(g.all_powers_of_two(), "dyadic maximal operator needs power-of-two grid extents");
    DyadicPyramid p;
    p.levels = max_dyadic_level(g) + 1;
    p.dims.push_back(g.shape);
    p.counts.emplace_back(static_cast<std::size_t>(g.size()));
    p.in_domain.emplace_back(static_cast<std::size_t>(g.size()));
    for (Index i = 0; i < g.size(); ++i) {
        p.counts[0][i] = e[i];
        p.in_domain[0][i] = omega.contains(i);
    }
    for (int n = 1; n < p.levels; ++n) {
        auto dm = p.dims[n - 1];
        for (int a = 0; a < g.d; ++a) dm[a] /= 2;
        p.dims.push_back(dm);
        const Index total = dm[0] * dm[1] * dm[2];
        std::vector<Index> cnt(static_cast<std::size_t>(total), 0);
        std::vector<std::uint8_t> ok(static_cast<std::size_t>(total), 1);
        const auto& prev_dims = p.dims[n - 1];
        for (Index z = 0; z < prev_dims[2]; ++z)
            for (Index y = 0; y < prev_dims[1]; ++y)
                for (Index x = 0; x < prev_dims[0]; ++x) {
                    const Index child = p.at(n - 1, x, y, z);
                    const Index par = p.at(n, x >> 1, g.d >= 2 ? y >> 1 : y, g.d >= 3 ? z >> 1 : z);
                    cnt[par] += p.counts[n - 1][child];
                    ok[par] &= p.in_domain[n - 1][child];
                }
        p.counts.push_back(std::move(cnt));
        p.in_domain.push_back(std::move(ok));
    }
    return p;
}

} // namespace detail

/// Local dyadic maximal function of 1_E: at each cell of Omega, the largest
/// density |E n Q| / |Q| over dyadic cubes Q with cell in Q and Q inside Omega (in
/// free space: inside the box). Values are exact cell-count ratios; 0 off Omega.
inline ScalarField dyadic_maximal(const GridSet& e, const Domain& omega)
{
    const auto& g = e.geometry();
    const auto p = detail::build_pyramid(e, omega);
    std::vector<double> best;  // values of the current level
    for (int n = p.levels - 1; n >= 0; --n) {
        const auto& dm = p.dims[n];
        const double volume = std::ldexp(1.0, n * g.d);
        std::vector<double> cur(p.counts[n].size(), 0.0);
        for (Index z = 0; z < dm[2]; ++z)
            for (Index y = 0; y < dm[1]; ++y)
                for (Index x = 0; x < dm[0]; ++x) {
                    const Index i = p.at(n, x, y, z);
                    double v = 0.0;
                    if (n + 1 < p.levels)
                        v = best[p.at(n + 1, x >> 1, g.d >= 2 ? y >> 1 : y, g.d >= 3 ? z >> 1 : z)];
                    if (p.in_domain[n][i]) v = std::max(v, static_cast<double>(p.counts[n][i]) / volume);
                    cur[i] = v;
                }
        best = std::move(cur);
    }
    return ScalarField(g, std::move(best));
}

/// Maximal dyadic cubes inside Omega with density > lambda.
inline std::vector<DyadicCube> dyadic_superlevel_cubes(const GridSet& e, const Domain& omega, double lambda)
{
    detail::require(lambda > 0.0 && lambda < 1.0, "level must lie in (0, 1)");
    const auto& g = e.geometry();
    const auto p = detail::build_pyramid(e, omega);
    std::vector<DyadicCube> out;
    std::vector<std::uint8_t> covered;  // an ancestor already qualifies
    for (int n = p.levels - 1; n >= 0; --n) {
        const auto& dm = p.dims[n];
        const double volume = std::ldexp(1.0, n * g.d);
        std::vector<std::uint8_t> cur(p.counts[n].size(), 0);
        for (Index z = 0; z < dm[2]; ++z)
            for (Index y = 0; y < dm[1]; ++y)
                for (Index x = 0; x < dm[0]; ++x) {
                    const Index i = p.at(n, x, y, z);
                    bool above = n + 1 < p.levels &&
                                 covered[p.at(n + 1, x >> 1, g.d >= 2 ? y >> 1 : y, g.d >= 3 ? z >> 1 : z)];
                    if (!above && p.in_domain[n][i] && static_cast<double>(p.counts[n][i]) > lambda * volume) {
                        out.push_back(DyadicCube{n, {x, y, z}});
                        above = true;
                    }
                    cur[i] = above;
                }
        covered = std::move(cur);
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace detail {

/// Running sums of E along x, one row of length nx + 1 per (y, z), plus the
/// x-extent of E in each row.
struct RowPrefix {
    Index nx = 0, rows = 0;
    std::vector<std::int32_t> sums;
    std::vector<Index> first, last;  // first > last when the row is empty

    explicit RowPrefix(const GridSet& e)
    {
        const auto& g = e.geometry();
        nx = g.shape[0];
        rows = g.shape[1] * g.shape[2];
        sums.assign(static_cast<std::size_t>((nx + 1) * rows), 0);
        first.assign(static_cast<std::size_t>(rows), nx);
        last.assign(static_cast<std::size_t>(rows), -1);
        for (Index r = 0; r < rows; ++r) {
            std::int32_t* s = sums.data() + r * (nx + 1);
            for (Index x = 0; x < nx; ++x) {
                const bool in = e[r * nx + x];
                s[x + 1] = s[x] + in;
                if (in) {
                    first[r] = std::min(first[r], x);
                    last[r] = x;
                }
            }
        }
    }
};

/// cnt[c] = |E n B(c)| for every lattice center c in the box.
inline void ball_counts(const GridGeometry& g, const RowPrefix& pre, const LatticeBall& lb, std::vector<std::int32_t>& cnt)
{
    const Index nx = g.shape[0], ny = g.shape[1], nz = g.shape[2];
    cnt.assign(static_cast<std::size_t>(g.size()), 0);
    for (Index sz = 0; sz < nz; ++sz)
        for (Index sy = 0; sy < ny; ++sy) {
            const Index srow = sy + ny * sz;
            if (pre.first[srow] > pre.last[srow]) continue;
            const std::int32_t* s = pre.sums.data() + srow * (nx + 1);
            for (const auto& row : lb.rows) {
                const Index cy = sy - row.dy, cz = sz - row.dz;
                if (cy < 0 || cy >= ny || cz < 0 || cz >= nz) continue;
                const Index w = row.half_width;
                std::int32_t* out = cnt.data() + (cy + ny * cz) * nx;
                const Index x0 = std::max<Index>(0, pre.first[srow] - w);
                const Index x1 = std::min<Index>(nx - 1, pre.last[srow] + w);
                for (Index cx = x0; cx <= x1; ++cx) {
                    const Index lo = std::max<Index>(cx - w, 0);
                    const Index hi = std::min<Index>(cx + w + 1, nx);
                    out[cx] += s[hi] - s[lo];
                }
            }
        }
}

/// dst[x] = max src[x-w .. x+w] (clamped to [0, n)); src must be nonnegative.
inline void sliding_max(const double* src, Index n, Index w, double* dst, std::vector<double>& buf)
{
    if (w == 0) {
        std::copy(src, src + n, dst);
        return;
    }
    const Index win = 2 * w + 1;
    const Index m = ((n + 2 * w + win - 1) / win) * win;
    buf.assign(static_cast<std::size_t>(3 * m), 0.0);
    double* p = buf.data();
    double* pre = p + m;
    double* suf = p + 2 * m;
    std::copy(src, src + n, p + w);
    for (Index b = 0; b < m; b += win) {
        pre[b] = p[b];
        for (Index k = b + 1; k < b + win; ++k) pre[k] = std::max(pre[k - 1], p[k]);
        suf[b + win - 1] = p[b + win - 1];
        for (Index k = b + win - 2; k >= b; --k) suf[k] = std::max(suf[k + 1], p[k]);
    }
    // window in the padded buffer is [x, x + 2w]
    for (Index x = 0; x < n; ++x) dst[x] = std::max(suf[x], pre[x + 2 * w]);
}

/// out = max(out, ratio dilated by the lattice ball), over the support of ratio.
inline void dilate_max_into(const GridGeometry& g, const std::vector<double>& ratio, const LatticeBall& lb,
                            std::vector<double>& out)
{
    const Index nx = g.shape[0], ny = g.shape[1], nz = g.shape[2];
    // ball rows grouped by half width
    std::vector<int> widths;
    for (const auto& r : lb.rows) widths.push_back(r.half_width);
    std::sort(widths.begin(), widths.end());
    widths.erase(std::unique(widths.begin(), widths.end()), widths.end());

    std::vector<double> smax(static_cast<std::size_t>(nx)), buf;
    for (Index sz = 0; sz < nz; ++sz)
        for (Index sy = 0; sy < ny; ++sy) {
            const double* src = ratio.data() + (sy + ny * sz) * nx;
            Index rx0 = nx, rx1 = -1;
            for (Index x = 0; x < nx; ++x)
                if (src[x] > 0.0) {
                    rx0 = std::min(rx0, x);
                    rx1 = x;
                }
            if (rx1 < 0) continue;
            for (int w : widths) {
                const Index a = std::max<Index>(0, rx0 - w);
                const Index b = std::min<Index>(nx, rx1 + w + 1);
                sliding_max(src + a, b - a, w, smax.data() + a, buf);
                for (const auto& row : lb.rows) {
                    if (row.half_width != w) continue;
                    const Index ty = sy + row.dy, tz = sz + row.dz;
                    if (ty < 0 || ty >= ny || tz < 0 || tz >= nz) continue;
                    double* o = out.data() + (ty + ny * tz) * nx;
                    for (Index x = a; x < b; ++x) o[x] = std::max(o[x], smax[x]);
                }
            }
        }
}

/// Distinct lattice-ball keys of a schedule, each with the first radius mapping to it.
inline std::vector<std::pair<std::int64_t, double>> schedule_keys(const RadiusSchedule& sched, double h)
{
    std::vector<std::pair<std::int64_t, double>> keys;
    for (double r : sched.radii()) {
        const auto k = LatticeBall::key_for(r, h);
        if (keys.empty() || keys.back().first != k) keys.emplace_back(k, r);
    }
    return keys;
}

/// Squared distance (cells^2) from each center to the nearest non-Omega center,
/// empty in free space. B(c, r) lies in Omega iff the value is >= the ball key.
inline std::vector<double> admissibility_field(const Domain& omega)
{
    if (omega.is_free_space()) return {};
    return squared_distance_transform(omega.mask()->complement(), true);
}

} // namespace detail

/// Uncentered maximal function of 1_E over balls with radii from the schedule
/// and centers on the cell-center lattice of the box. A ball B(c, r) is admissible
/// when it lies in Omega; in free space every center in the box is admissible and
/// lattice cells beyond the box count as complement cells. 0 where no admissible
/// ball contains the cell, and off Omega.
inline ScalarField uncentered_maximal(const GridSet& e, const Domain& omega, const RadiusSchedule& schedule,
                                      unsigned threads = 0)
{
    const auto& g = e.geometry();
    require_same(g, omega.geometry(), "uncentered_maximal");
    const auto keys = detail::schedule_keys(schedule, g.h);
    detail::require(!keys.empty(), "radius schedule is empty");

    const detail::RowPrefix pre(e);
    const auto adm = detail::admissibility_field(omega);
    double max_adm = 0.0;
    for (double v : adm) max_adm = std::max(max_adm, v);

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, keys.size()));
    std::vector<std::vector<double>> partial(threads, std::vector<double>(static_cast<std::size_t>(g.size()), 0.0));

    auto work = [&](unsigned t) {
        std::vector<std::int32_t> cnt;
        std::vector<double> ratio(static_cast<std::size_t>(g.size()));
        // interleaved so every worker gets a mix of small and large radii
        for (std::size_t k = t; k < keys.size(); k += threads) {
            const auto key = keys[k].first;
            if (!adm.empty() && max_adm < static_cast<double>(key)) continue;
            const auto lb = LatticeBall::make(key, g.d);
            detail::ball_counts(g, pre, lb, cnt);
            const auto cells = static_cast<double>(lb.cells);
            for (Index i = 0; i < g.size(); ++i) {
                const bool ok = adm.empty() || adm[i] >= static_cast<double>(key);
                ratio[i] = ok ? static_cast<double>(cnt[i]) / cells : 0.0;
            }
            detail::dilate_max_into(g, ratio, lb, partial[t]);
        }
    };
    if (threads == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
        for (auto& th : pool) th.join();
    }
    ScalarField out(g);
    for (Index i = 0; i < g.size(); ++i) {
        double v = 0.0;
        for (const auto& p : partial) v = std::max(v, p[i]);
        out[i] = omega.contains(i) ? std::min(v, 1.0) : 0.0;
    }
    return out;
}

/// All admissible schedule balls with density > lambda.
inline BallFamily uncentered_superlevel_balls(const GridSet& e, const Domain& omega, const RadiusSchedule& schedule,
                                              double lambda)
{
    detail::require(lambda > 0.0 && lambda < 1.0, "level must lie in (0, 1)");
    const auto& g = e.geometry();
    require_same(g, omega.geometry(), "superlevel_family");
    const detail::RowPrefix pre(e);
    const auto adm = detail::admissibility_field(omega);
    BallFamily fam;
    std::vector<std::int32_t> cnt;
    for (const auto& [key, radius] : detail::schedule_keys(schedule, g.h)) {
        const auto lb = LatticeBall::make(key, g.d);
        detail::ball_counts(g, pre, lb, cnt);
        for (Index i = 0; i < g.size(); ++i) {
            if (!adm.empty() && adm[i] < static_cast<double>(key)) continue;
            if (static_cast<double>(cnt[i]) > lambda * static_cast<double>(lb.cells)) fam.add(Ball{g.cell_center(i), radius});
        }
    }
    return fam;
}

// ---------------------------------------------------------------------------

/// Which maximal operator, with its discretization parameters.
struct MaximalOperator {
    enum class Kind { Dyadic, Uncentered };

    Kind kind = Kind::Dyadic;
    RadiusSchedule schedule{};
    unsigned threads = 0;

    static MaximalOperator dyadic() { return {Kind::Dyadic, {}, 0}; }
    static MaximalOperator uncentered(const RadiusSchedule& s, unsigned threads = 0)
    {
        return {Kind::Uncentered, s, threads};
    }

    std::string name() const { return kind == Kind::Dyadic ? "dyadic" : "uncentered"; }

    ScalarField apply(const GridSet& e, const Domain& omega) const
    {
        return kind == Kind::Dyadic ? dyadic_maximal(e, omega) : uncentered_maximal(e, omega, schedule, threads);
    }
};

/// The superlevel set of the maximal function as a union of cubes or balls.
struct SuperlevelFamily {
    std::vector<DyadicCube> cubes;
    BallFamily balls;

    std::size_t size() const { return cubes.size() + balls.size(); }

    /// Cells of the union, restricted to the box.
    GridSet cells(const GridGeometry& g) const
    {
        GridSet s = rasterize_union(g, balls);
        for (const auto& q : cubes) s |= cube_cells(g, q);
        return s;
    }
};

inline SuperlevelFamily superlevel_family(const GridSet& e, const Domain& omega, double lambda,
                                          const MaximalOperator& op)
{
    SuperlevelFamily f;
    if (op.kind == MaximalOperator::Kind::Dyadic) f.cubes = dyadic_superlevel_cubes(e, omega, lambda);
    else f.balls = uncentered_superlevel_balls(e, omega, op.schedule, lambda);
    return f;
}

/// Cells where the maximal function must equal 1 but f is smaller. Dyadic: every
/// cell of E n Omega. Uncentered: every admissible center whose smallest schedule
/// ball lies inside E (the erosion of E by that ball).
inline std::vector<Index> mf_geq_f_check(const GridSet& e, const Domain& omega, const ScalarField& f,
                                         const MaximalOperator& op)
{
    const auto& g = e.geometry();
    require_same(g, omega.geometry(), "mf_geq_f_check");
    require_same(g, f.geometry(), "mf_geq_f_check");
    std::vector<Index> bad;
    if (op.kind == MaximalOperator::Kind::Dyadic) {
        for (Index i = 0; i < g.size(); ++i)
            if (e[i] && omega.contains(i) && f[i] < 1.0) bad.push_back(i);
        return bad;
    }
    const auto keys = detail::schedule_keys(op.schedule, g.h);
    detail::require(!keys.empty(), "radius schedule is empty");
    const auto lb = LatticeBall::make(keys.front().first, g.d);
    const detail::RowPrefix pre(e);
    std::vector<std::int32_t> cnt;
    detail::ball_counts(g, pre, lb, cnt);
    const auto adm = detail::admissibility_field(omega);
    for (Index i = 0; i < g.size(); ++i) {
        if (!adm.empty() && adm[i] < static_cast<double>(lb.key)) continue;
        if (cnt[i] == lb.cells && f[i] < 1.0) bad.push_back(i);
    }
    return bad;
}

} // namespace maxvar
