#pragma once

// Exact squared Euclidean distance transform on the cell-center lattice
// (separable lower-envelope method of Felzenszwalb and Huttenlocher).

#include <cstdint>
#include <limits>
#include <vector>

#include "grid.hpp"

namespace maxvar {

namespace detail {

// One pass of the 1-D transform on f sampled with the given stride; f holds
// squared distances (or +inf) and is overwritten.
inline void edt_1d(double* f, Index n, Index stride, std::vector<double>& buf, std::vector<Index>& v,
                   std::vector<double>& z)
{
    constexpr double inf = std::numeric_limits<double>::infinity();
    buf.resize(static_cast<std::size_t>(n));
    v.resize(static_cast<std::size_t>(n));
    z.resize(static_cast<std::size_t>(n) + 1);
    for (Index q = 0; q < n; ++q) buf[q] = f[q * stride];

    Index k = -1;
    for (Index q = 0; q < n; ++q) {
        if (buf[q] == inf) continue;
        const auto fq = buf[q] + static_cast<double>(q) * static_cast<double>(q);
        while (k >= 0) {
            const Index p = v[k];
            const double s = (fq - (buf[p] + static_cast<double>(p) * static_cast<double>(p))) /
                             (2.0 * static_cast<double>(q - p));
            if (s <= z[k]) {
                --k;
                continue;
            }
            ++k;
            v[k] = q;
            z[k] = s;
            z[k + 1] = inf;
            break;
        }
        if (k < 0) {
            k = 0;
            v[0] = q;
            z[0] = -inf;
            z[1] = inf;
        }
    }
    if (k < 0) return;  // no finite sample: row stays +inf
    Index j = 0;
    for (Index q = 0; q < n; ++q) {
        while (z[j + 1] < static_cast<double>(q)) ++j;
        const double t = static_cast<double>(q - v[j]);
        f[q * stride] = t * t + buf[v[j]];
    }
}

} // namespace detail

/// Squared distance, in cell units, from each cell center to the nearest center of
/// a `source` cell. With `box_exterior_is_source`, lattice points beyond the box
/// count as sources too. Result is +inf where no source exists.
inline std::vector<double> squared_distance_transform(const GridSet& source, bool box_exterior_is_source)
{
    const auto& g = source.geometry();
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> f(static_cast<std::size_t>(g.size()));
    for (Index i = 0; i < g.size(); ++i) f[i] = source[i] ? 0.0 : inf;

    std::vector<double> buf, z;
    std::vector<Index> v;
    const auto& sh = g.shape;
    for (int axis = 0; axis < g.d; ++axis) {
        const Index st = g.stride(axis);
        const Index n = sh[axis];
        for (Index z2 = 0; z2 < (axis == 2 ? 1 : sh[2]); ++z2)
            for (Index y = 0; y < (axis == 1 ? 1 : sh[1]); ++y)
                for (Index x = 0; x < (axis == 0 ? 1 : sh[0]); ++x)
                    detail::edt_1d(f.data() + g.linear(x, y, z2), n, st, buf, v, z);
    }
    if (box_exterior_is_source) {
        for (Index i = 0; i < g.size(); ++i) {
            const auto c = g.coords(i);
            for (int a = 0; a < g.d; ++a) {
                const double t = static_cast<double>(std::min(c[a] + 1, sh[a] - c[a]));
                f[i] = std::min(f[i], t * t);
            }
        }
    }
    return f;
}

} // namespace maxvar
