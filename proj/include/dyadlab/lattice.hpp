#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "dyadlab/error.hpp"

namespace dyadlab {

// Goodness parameters r, epsilon together with the corona separation
// parameters tau, rho (rho > r is required downstream).
struct GoodnessParams {
    int r = 4;
    double epsilon = 0.25;
    int tau = 3;
    int rho = 8;
};

// Dyadic grid over a root cube [origin, origin+side)^n, refined to depth L.
// A nonzero shift makes it an NTV-style random grid: every cube is the
// translate by shift (in finest-cell units) of the corresponding unshifted
// cube.  Shifts are quantized to finest cells so cell masses restrict exactly.
struct Grid {
    int n = 1;
    int depth = 8;
    std::vector<double> root_origin;  // size n; default zeros
    double root_side = 1.0;
    std::vector<long> shift;  // per-axis, in finest cells; empty means zero

    Grid() = default;
    Grid(int n_, int depth_, double origin = 0.0, double side = 1.0)
        : n(n_), depth(depth_), root_origin(n_, origin), root_side(side) {}

    long cells_per_axis() const { return 1L << depth; }
    long cell_count() const {
        long c = 1;
        for (int i = 0; i < n; ++i) c *= cells_per_axis();
        return c;
    }
    double cell_width() const { return root_side / static_cast<double>(cells_per_axis()); }
    long shift_on(int axis) const { return shift.empty() ? 0 : shift[axis]; }
    bool shifted() const {
        return std::any_of(shift.begin(), shift.end(), [](long s) { return s != 0; });
    }

    // center coordinate of global cell (by per-axis cell index)
    double cell_center(int axis, long cell) const {
        return root_origin[axis] + (static_cast<double>(cell) + 0.5) * cell_width();
    }
};

// Axis-parallel box in global (unshifted) cell coordinates, half open.
// May stick out of [0, 2^L)^n; measure code clamps.
struct CellBox {
    std::vector<long> lo, hi;

    long volume_cells() const {
        long v = 1;
        for (size_t i = 0; i < lo.size(); ++i) {
            if (hi[i] <= lo[i]) return 0;
            v *= hi[i] - lo[i];
        }
        return v;
    }
    bool inside(long cells_per_axis) const {
        for (size_t i = 0; i < lo.size(); ++i)
            if (lo[i] < 0 || hi[i] > cells_per_axis) return false;
        return true;
    }
    bool contains(const CellBox& other) const {
        for (size_t i = 0; i < lo.size(); ++i)
            if (other.lo[i] < lo[i] || other.hi[i] > hi[i]) return false;
        return true;
    }
    bool disjoint(const CellBox& other) const {
        for (size_t i = 0; i < lo.size(); ++i)
            if (other.hi[i] <= lo[i] || hi[i] <= other.lo[i]) return true;
        return false;
    }
};

struct DyadicCube {
    int level = 0;
    std::vector<long> index;  // per axis, in [0, 2^level)

    bool operator==(const DyadicCube& o) const { return level == o.level && index == o.index; }
    bool operator<(const DyadicCube& o) const {
        if (level != o.level) return level < o.level;
        return index < o.index;
    }
};

inline DyadicCube root_cube(const Grid& g) { return DyadicCube{0, std::vector<long>(g.n, 0)}; }

inline long side_cells(const Grid& g, const DyadicCube& q) { return 1L << (g.depth - q.level); }

inline double side_length(const Grid& g, const DyadicCube& q) {
    return g.root_side / static_cast<double>(1L << q.level);
}

inline std::vector<double> cube_center(const Grid& g, const DyadicCube& q) {
    std::vector<double> c(g.n);
    const double w = g.cell_width();
    const long s = side_cells(g, q);
    for (int i = 0; i < g.n; ++i) {
        long lo = q.index[i] * s + g.shift_on(i);
        c[i] = g.root_origin[i] + (static_cast<double>(lo) + 0.5 * s) * w;
    }
    return c;
}

inline CellBox cube_cells(const Grid& g, const DyadicCube& q) {
    CellBox b;
    b.lo.resize(g.n);
    b.hi.resize(g.n);
    const long s = side_cells(g, q);
    for (int i = 0; i < g.n; ++i) {
        b.lo[i] = q.index[i] * s + g.shift_on(i);
        b.hi[i] = b.lo[i] + s;
    }
    return b;
}

// Concentric dilate in real coordinates (for geometry that need not be cell
// aligned, e.g. 2Q of a finest cube).
struct RealBox {
    std::vector<double> lo, hi;
    bool contains_point(const std::vector<double>& x) const {
        for (size_t i = 0; i < lo.size(); ++i)
            if (x[i] < lo[i] || x[i] >= hi[i]) return false;
        return true;
    }
};

inline RealBox dilate_real(const Grid& g, const DyadicCube& q, double t) {
    RealBox b;
    b.lo.resize(g.n);
    b.hi.resize(g.n);
    const double w = g.cell_width();
    const long s = side_cells(g, q);
    for (int i = 0; i < g.n; ++i) {
        const double lo = g.root_origin[i] + (q.index[i] * s + g.shift_on(i)) * w;
        const double side = s * w;
        const double c = lo + side / 2;
        b.lo[i] = c - t * side / 2;
        b.hi[i] = c + t * side / 2;
    }
    return b;
}

// Concentric dilate by integer t (t*side must stay cell aligned: t odd works
// for every cube, t even needs side >= 2 cells).
inline CellBox dilate_cells(const Grid& g, const DyadicCube& q, int t) {
    CellBox b = cube_cells(g, q);
    const long s = side_cells(g, q);
    const long grow2 = s * (t - 1);  // total growth, split evenly
    require(grow2 % 2 == 0, "misaligned-cube", "dilation not cell aligned");
    for (int i = 0; i < g.n; ++i) {
        b.lo[i] -= grow2 / 2;
        b.hi[i] += grow2 / 2;
    }
    return b;
}

// Concentric shrink to (1-delta)Q with delta = num/den; requires alignment.
inline CellBox shrink_cells(const Grid& g, const DyadicCube& q, long num, long den) {
    CellBox b = cube_cells(g, q);
    const long s = side_cells(g, q);
    require((s * num) % (2 * den) == 0, "alignment", "(1-delta)Q not cell aligned");
    const long margin = s * num / (2 * den);
    for (int i = 0; i < g.n; ++i) {
        b.lo[i] += margin;
        b.hi[i] -= margin;
    }
    return b;
}

inline std::vector<DyadicCube> children(const Grid& g, const DyadicCube& q) {
    require(q.level < g.depth, "level-overflow", "cube at maximal depth has no children");
    std::vector<DyadicCube> out;
    out.reserve(1u << g.n);
    const long combos = 1L << g.n;
    for (long m = 0; m < combos; ++m) {
        DyadicCube c;
        c.level = q.level + 1;
        c.index.resize(g.n);
        for (int i = 0; i < g.n; ++i) c.index[i] = 2 * q.index[i] + ((m >> i) & 1);
        out.push_back(std::move(c));
    }
    return out;
}

inline DyadicCube parent(const DyadicCube& q) {
    require(q.level > 0, "level-overflow", "root has no parent");
    DyadicCube p;
    p.level = q.level - 1;
    p.index.resize(q.index.size());
    for (size_t i = 0; i < q.index.size(); ++i) p.index[i] = q.index[i] >> 1;
    return p;
}

inline DyadicCube ancestor(const DyadicCube& q, int level) {
    require(level >= 0 && level <= q.level, "level-overflow", "bad ancestor level");
    DyadicCube a;
    a.level = level;
    a.index.resize(q.index.size());
    const int k = q.level - level;
    for (size_t i = 0; i < q.index.size(); ++i) a.index[i] = q.index[i] >> k;
    return a;
}

inline bool contains(const DyadicCube& big, const DyadicCube& small) {
    if (big.level > small.level) return false;
    const int k = small.level - big.level;
    for (size_t i = 0; i < big.index.size(); ++i)
        if ((small.index[i] >> k) != big.index[i]) return false;
    return true;
}

inline bool strictly_contains(const DyadicCube& big, const DyadicCube& small) {
    return big.level < small.level && contains(big, small);
}

// Serialization token: "level:i0,i1,...:shift0,shift1,..." (shift omitted when zero).
inline std::string cube_token(const Grid& g, const DyadicCube& q) {
    std::string s = std::to_string(q.level) + ":";
    for (int i = 0; i < g.n; ++i) {
        if (i) s += ",";
        s += std::to_string(q.index[i]);
    }
    if (g.shifted()) {
        s += ":";
        for (int i = 0; i < g.n; ++i) {
            if (i) s += ",";
            s += std::to_string(g.shift_on(i));
        }
    }
    return s;
}

// --- (r,epsilon)-goodness ---------------------------------------------------
//
// Q is bad iff some ancestor I in the same hierarchy with l(I) >= 2^r l(Q)
// has dist(Q, dI) < 2 sqrt(n) l(Q)^eps l(I)^(1-eps); side lengths are used for
// |Q|, |I|.  Distances are exact in cell units.  When epsilon = p/q with a
// small denominator the comparison is done in integer arithmetic, otherwise
// in long double.  Ancestors are the full hierarchy over the (possibly
// shifted) root, so goodness is shift equivariant by construction.

namespace detail {

inline bool rationalize_eps(double eps, long& p, long& q) {
    for (long den = 1; den <= 8; ++den) {
        double num = eps * static_cast<double>(den);
        double r = std::round(num);
        if (std::abs(num - r) < 1e-12 && r >= 1 && r < den) {
            p = static_cast<long>(r);
            q = den;
            return true;
        }
    }
    return false;
}

// checks d < 2 sqrt(n) sq^eps sI^(1-eps) exactly for eps = p/q:
// equivalent to d^(2q) < 4^q n^q sq^(2p) sI^(2(q-p)) over the integers,
// provided the products fit in 128 bits.
inline bool bad_exact(long d, long sq, long sI, long n, long p, long q, bool& ok) {
    auto bits = [](long v) {
        int b = 0;
        while (v > 0) {
            ++b;
            v >>= 1;
        }
        return b;
    };
    long lhs_bits = 2.0 * q * bits(d);
    long rhs_bits = 2 * q + q * bits(n) + 2 * p * bits(sq) + 2 * (q - p) * bits(sI);
    if (lhs_bits > 120 || rhs_bits > 120) {
        ok = false;
        return false;
    }
    ok = true;
    auto ipow = [](unsigned __int128 base, long e) {
        unsigned __int128 r = 1;
        while (e-- > 0) r *= base;
        return r;
    };
    unsigned __int128 lhs = ipow(static_cast<unsigned __int128>(d), 2 * q);
    unsigned __int128 rhs = ipow(4, q) * ipow(static_cast<unsigned __int128>(n), q) *
                            ipow(static_cast<unsigned __int128>(sq), 2 * p) *
                            ipow(static_cast<unsigned __int128>(sI), 2 * (q - p));
    return lhs < rhs;
}

} // namespace detail

inline bool is_good(const Grid& g, const DyadicCube& q, const GoodnessParams& params) {
    require(params.r >= 1, "bad-parameter", "goodness r must be >= 1");
    require(params.epsilon > 0 && params.epsilon < 1, "bad-parameter", "epsilon in (0,1)");
    const long sq = side_cells(g, q);
    long p = 0, den = 0;
    const bool have_rat = detail::rationalize_eps(params.epsilon, p, den);
    for (int lev = q.level - params.r; lev >= 0; --lev) {
        const DyadicCube anc = ancestor(q, lev);
        const long sI = side_cells(g, anc);
        // min face gap between Q and the boundary of its ancestor, in cells
        long d = sI;  // upper bound
        for (int i = 0; i < g.n; ++i) {
            const long alo = anc.index[i] * sI;
            const long qlo = q.index[i] * sq;
            d = std::min(d, std::min(qlo - alo, (alo + sI) - (qlo + sq)));
        }
        bool bad;
        bool exact_ok = false;
        if (have_rat) {
            bad = detail::bad_exact(d, sq, sI, g.n, p, den, exact_ok);
        }
        if (!have_rat || !exact_ok) {
            long double rhs = 2.0L * std::sqrt(static_cast<long double>(g.n)) *
                              std::pow(static_cast<long double>(sq), (long double)params.epsilon) *
                              std::pow(static_cast<long double>(sI), 1.0L - (long double)params.epsilon);
            bad = static_cast<long double>(d) < rhs;
        }
        if (bad) return false;
    }
    return true;
}

// --- Whitney decomposition --------------------------------------------------
//
// open_region is a cell mask over the unshifted lattice (finest cells strictly
// inside the root).  Returns the maximal dyadic cubes Q with 3Q inside the
// region.  Cubes are emitted coarse to fine, sorted within a level.

class CellMask {
public:
    CellMask(const Grid& g, std::vector<char> cells) : g_(&g), cells_(std::move(cells)) {
        require(static_cast<long>(cells_.size()) == g.cell_count(), "bad-parameter",
                "cell mask size mismatch");
        build_sat();
    }

    const Grid& grid() const { return *g_; }
    bool cell(long linear) const { return cells_[static_cast<size_t>(linear)] != 0; }
    long count() const { return total_; }

    // number of set cells inside box (box clamped to lattice)
    long box_count(const CellBox& b) const {
        const long C = g_->cells_per_axis();
        CellBox cl = b;
        for (int i = 0; i < g_->n; ++i) {
            cl.lo[i] = std::max(cl.lo[i], 0L);
            cl.hi[i] = std::min(cl.hi[i], C);
            if (cl.hi[i] <= cl.lo[i]) return 0;
        }
        return sat_box(cl);
    }

    bool box_full(const CellBox& b) const {
        // full means every cell of b (none clamped away) is set
        const long C = g_->cells_per_axis();
        for (int i = 0; i < g_->n; ++i)
            if (b.lo[i] < 0 || b.hi[i] > C) return false;
        return box_count(b) == b.volume_cells();
    }

private:
    void build_sat() {
        const long C = g_->cells_per_axis();
        const int n = g_->n;
        dims_.assign(n, C + 1);
        long sz = 1;
        for (int i = 0; i < n; ++i) sz *= C + 1;
        sat_.assign(static_cast<size_t>(sz), 0);
        // strides for sat array, last axis fastest
        strides_.assign(n, 1);
        for (int i = n - 2; i >= 0; --i) strides_[i] = strides_[i + 1] * (C + 1);
        cell_strides_.assign(n, 1);
        for (int i = n - 2; i >= 0; --i) cell_strides_[i] = cell_strides_[i + 1] * C;
        total_ = 0;
        std::vector<long> idx(n, 0);
        const long cells = g_->cell_count();
        for (long lin = 0; lin < cells; ++lin) {
            long v = cells_[static_cast<size_t>(lin)] ? 1 : 0;
            total_ += v;
            // sat[idx+1...] computed by inclusion-exclusion over corners
            long pos = 0;
            for (int i = 0; i < n; ++i) pos += (idx[i] + 1) * strides_[i];
            long acc = v;
            for (long corner = 1; corner < (1L << n); ++corner) {
                long p2 = 0;
                bool valid = true;
                int bits = 0;
                for (int i = 0; i < n; ++i) {
                    long off = (corner >> i) & 1;
                    long coord = idx[i] + 1 - off;
                    if (coord < 0) {
                        valid = false;
                        break;
                    }
                    bits += static_cast<int>(off);
                    p2 += coord * strides_[i];
                }
                if (!valid) continue;
                acc += (bits % 2 == 1 ? 1 : -1) * sat_[static_cast<size_t>(p2)];
            }
            sat_[static_cast<size_t>(pos)] = acc;
            // advance idx
            for (int i = n - 1; i >= 0; --i) {
                if (++idx[i] < C) break;
                idx[i] = 0;
            }
        }
    }

    long sat_at(const std::vector<long>& coord) const {
        long pos = 0;
        for (size_t i = 0; i < coord.size(); ++i) pos += coord[i] * strides_[i];
        return sat_[static_cast<size_t>(pos)];
    }

    long sat_box(const CellBox& b) const {
        const int n = g_->n;
        long total = 0;
        std::vector<long> coord(n);
        for (long corner = 0; corner < (1L << n); ++corner) {
            int bits = 0;
            for (int i = 0; i < n; ++i) {
                if ((corner >> i) & 1) {
                    coord[i] = b.lo[i];
                    ++bits;
                } else {
                    coord[i] = b.hi[i];
                }
            }
            total += (bits % 2 == 1 ? -1 : 1) * sat_at(coord);
        }
        return total;
    }

    const Grid* g_;
    std::vector<char> cells_;
    std::vector<long> sat_;
    std::vector<long> dims_, strides_, cell_strides_;
    long total_ = 0;
};

inline std::vector<DyadicCube> whitney(const CellMask& region, const Grid& g) {
    require(!g.shifted(), "bad-parameter", "whitney runs on the unshifted grid");
    std::vector<DyadicCube> out;
    // chosen[level] holds selected cubes for the maximality test
    std::vector<std::vector<DyadicCube>> chosen(static_cast<size_t>(g.depth) + 1);
    std::vector<long> idx;
    for (int lev = 0; lev <= g.depth; ++lev) {
        const long per_axis = 1L << lev;
        long count = 1;
        for (int i = 0; i < g.n; ++i) count *= per_axis;
        idx.assign(g.n, 0);
        for (long lin = 0; lin < count; ++lin) {
            DyadicCube q{lev, idx};
            bool covered = false;
            for (int l2 = 0; l2 < lev && !covered; ++l2) {
                const DyadicCube a = ancestor(q, l2);
                covered = std::binary_search(chosen[static_cast<size_t>(l2)].begin(),
                                             chosen[static_cast<size_t>(l2)].end(), a);
            }
            if (!covered && region.box_full(dilate_cells(g, q, 3))) {
                chosen[static_cast<size_t>(lev)].push_back(q);
                out.push_back(q);
            }
            for (int i = g.n - 1; i >= 0; --i) {
                if (++idx[i] < per_axis) break;
                idx[i] = 0;
            }
        }
        std::sort(chosen[static_cast<size_t>(lev)].begin(), chosen[static_cast<size_t>(lev)].end());
    }
    return out;
}

} // namespace dyadlab
