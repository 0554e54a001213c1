#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dyadlab/lattice.hpp"
#include "dyadlab/rng.hpp"

namespace dyadlab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Nonnegative density sampled on the finest cells of a grid; cell mass is
// density * cell volume.  A summed-area table gives exact O(2^n) masses of
// axis-aligned cell boxes, so cube masses are additive over children by
// construction (up to the usual FP rounding of a fixed summation order).
class LatticeMeasure {
public:
    LatticeMeasure(const Grid& grid, std::vector<double> density)
        : grid_(grid), density_(std::move(density)) {
        require(static_cast<long>(density_.size()) == grid_.cell_count(), "bad-parameter",
                "density size mismatch");
        cell_vol_ = 1.0;
        for (int i = 0; i < grid_.n; ++i) cell_vol_ *= grid_.cell_width();
        double total = 0;
        for (double d : density_) {
            require(d >= 0, "bad-parameter", "negative density");
            total += d;
        }
        require(total > 0, "bad-parameter", "measure must have positive total mass");
        build_sat();
    }

    const Grid& grid() const { return grid_; }
    double cell_volume() const { return cell_vol_; }
    long cell_count() const { return static_cast<long>(density_.size()); }
    double density(long linear) const { return density_[static_cast<size_t>(linear)]; }
    const std::vector<double>& densities() const { return density_; }
    double cell_mass_linear(long linear) const { return density_[static_cast<size_t>(linear)] * cell_vol_; }
    double total_mass() const { return total_mass_; }

    // mass of an axis-aligned cell box, clamped to the lattice
    double box_mass(const CellBox& b) const {
        const long C = grid_.cells_per_axis();
        CellBox cl = b;
        for (int i = 0; i < grid_.n; ++i) {
            cl.lo[i] = std::max(cl.lo[i], 0L);
            cl.hi[i] = std::min(cl.hi[i], C);
            if (cl.hi[i] <= cl.lo[i]) return 0.0;
        }
        return sat_box(cl) * cell_vol_;
    }

    double cube_mass(const DyadicCube& q) const { return box_mass(cube_cells(grid_, q)); }

    // integral of a cell-sampled function against the measure over a box
    double integrate(const std::vector<double>& f, const CellBox& b) const {
        double s = 0;
        for_each_cell(b, [&](long lin) { s += f[static_cast<size_t>(lin)] * cell_mass_linear(lin); });
        return s;
    }

    double integrate(const std::vector<double>& f) const {
        double s = 0;
        for (long i = 0; i < cell_count(); ++i) s += f[static_cast<size_t>(i)] * cell_mass_linear(i);
        return s;
    }

    // iterate linear indices of lattice cells inside box (clamped)
    template <typename F>
    void for_each_cell(const CellBox& b, F&& fn) const {
        const long C = grid_.cells_per_axis();
        CellBox cl = b;
        for (int i = 0; i < grid_.n; ++i) {
            cl.lo[i] = std::max(cl.lo[i], 0L);
            cl.hi[i] = std::min(cl.hi[i], C);
            if (cl.hi[i] <= cl.lo[i]) return;
        }
        std::vector<long> idx = cl.lo;
        while (true) {
            long lin = 0;
            for (int i = 0; i < grid_.n; ++i) lin += idx[i] * cell_strides_[i];
            fn(lin);
            int i = grid_.n - 1;
            for (; i >= 0; --i) {
                if (++idx[i] < cl.hi[i]) break;
                idx[i] = cl.lo[i];
            }
            if (i < 0) break;
        }
    }

    long linear_index(const std::vector<long>& idx) const {
        long lin = 0;
        for (int i = 0; i < grid_.n; ++i) lin += idx[i] * cell_strides_[i];
        return lin;
    }

    std::vector<long> cell_coords(long linear) const {
        std::vector<long> idx(grid_.n);
        for (int i = 0; i < grid_.n; ++i) {
            idx[i] = linear / cell_strides_[i];
            linear %= cell_strides_[i];
        }
        return idx;
    }

    std::vector<double> cell_center(long linear) const {
        auto idx = cell_coords(linear);
        std::vector<double> x(grid_.n);
        for (int i = 0; i < grid_.n; ++i) x[i] = grid_.cell_center(i, idx[i]);
        return x;
    }

private:
    void build_sat() {
        const long C = grid_.cells_per_axis();
        const int n = grid_.n;
        long sz = 1;
        for (int i = 0; i < n; ++i) sz *= C + 1;
        sat_.assign(static_cast<size_t>(sz), 0.0);
        strides_.assign(n, 1);
        for (int i = n - 2; i >= 0; --i) strides_[i] = strides_[i + 1] * (C + 1);
        cell_strides_.assign(n, 1);
        for (int i = n - 2; i >= 0; --i) cell_strides_[i] = cell_strides_[i + 1] * C;
        std::vector<long> idx(n, 0);
        total_mass_ = 0;
        for (long lin = 0; lin < cell_count(); ++lin) {
            double v = density_[static_cast<size_t>(lin)];
            total_mass_ += v * cell_vol_;
            long pos = 0;
            for (int i = 0; i < n; ++i) pos += (idx[i] + 1) * strides_[i];
            double acc = v;
            for (long corner = 1; corner < (1L << n); ++corner) {
                long p2 = 0;
                int bits = 0;
                for (int i = 0; i < n; ++i) {
                    long off = (corner >> i) & 1;
                    bits += static_cast<int>(off);
                    p2 += (idx[i] + 1 - off) * strides_[i];
                }
                acc += (bits % 2 == 1 ? 1.0 : -1.0) * sat_[static_cast<size_t>(p2)];
            }
            sat_[static_cast<size_t>(pos)] = acc;
            for (int i = n - 1; i >= 0; --i) {
                if (++idx[i] < C) break;
                idx[i] = 0;
            }
        }
    }

    double sat_box(const CellBox& b) const {
        const int n = grid_.n;
        double total = 0;
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
            long pos = 0;
            for (int i = 0; i < n; ++i) pos += coord[i] * strides_[i];
            total += (bits % 2 == 1 ? -1.0 : 1.0) * sat_[static_cast<size_t>(pos)];
        }
        return total;
    }

    Grid grid_;
    std::vector<double> density_;
    std::vector<double> sat_;
    std::vector<long> strides_, cell_strides_;
    double cell_vol_ = 1;
    double total_mass_ = 0;
};

// --- generators ---------------------------------------------------------
//
// Families: "lebesgue"; "power:a:c" with density |x-c|^a, a >= 0;
// "cascade:p0[:seed]" recursive mass splitting with child fractions in
// [p0, 1-p0(2^n-1)]; "onehot[:cell]" a single charged cell;
// "from-file:path" (or a bare path) in the DYADMEAS format.

inline LatticeMeasure generate_lebesgue(const Grid& g) {
    return LatticeMeasure(g, std::vector<double>(static_cast<size_t>(g.cell_count()), 1.0));
}

inline LatticeMeasure generate_power(const Grid& g, double a, double c) {
    require(a >= 0, "bad-parameter", "power family needs a >= 0 (midpoint quadrature)");
    std::vector<double> d(static_cast<size_t>(g.cell_count()));
    LatticeMeasure probe(g, std::vector<double>(d.size(), 1.0));  // for coordinates
    for (long lin = 0; lin < g.cell_count(); ++lin) {
        auto x = probe.cell_center(lin);
        double r2 = 0;
        for (int i = 0; i < g.n; ++i) r2 += (x[i] - c) * (x[i] - c);
        d[static_cast<size_t>(lin)] = std::pow(std::sqrt(r2), a);
    }
    return LatticeMeasure(g, std::move(d));
}

inline LatticeMeasure generate_cascade(const Grid& g, double p0, Rng rng) {
    const long kids = 1L << g.n;
    require(p0 > 0 && p0 * static_cast<double>(kids) < 1.0, "bad-parameter",
            "cascade p0 must satisfy 0 < p0 < 2^-n");
    std::vector<double> mass(static_cast<size_t>(g.cell_count()), 0.0);
    LatticeMeasure probe(g, std::vector<double>(mass.size(), 1.0));
    double root_vol = 1;
    for (int i = 0; i < g.n; ++i) root_vol *= g.root_side;
    // depth-first split; total mass equals root volume so scales match lebesgue
    struct Item {
        DyadicCube q;
        double m;
    };
    std::vector<Item> stack{{root_cube(g), root_vol}};
    std::vector<double> frac(static_cast<size_t>(kids));
    while (!stack.empty()) {
        Item it = stack.back();
        stack.pop_back();
        if (it.q.level == g.depth) {
            CellBox b = cube_cells(g, it.q);
            std::vector<long> idx = b.lo;
            long lin = probe.linear_index(idx);
            mass[static_cast<size_t>(lin)] = it.m;
            continue;
        }
        // fractions: p0 floor plus a random split of the surplus
        double surplus = 1.0 - p0 * static_cast<double>(kids);
        double tot = 0;
        for (long k = 0; k < kids; ++k) {
            frac[static_cast<size_t>(k)] = -std::log(std::max(rng.uniform(), 1e-300));
            tot += frac[static_cast<size_t>(k)];
        }
        for (long k = 0; k < kids; ++k)
            frac[static_cast<size_t>(k)] = p0 + surplus * frac[static_cast<size_t>(k)] / tot;
        auto ch = children(g, it.q);
        for (long k = 0; k < kids; ++k)
            stack.push_back({ch[static_cast<size_t>(k)], it.m * frac[static_cast<size_t>(k)]});
    }
    double cell_vol = 1;
    for (int i = 0; i < g.n; ++i) cell_vol *= g.cell_width();
    for (auto& m : mass) m /= cell_vol;
    return LatticeMeasure(g, std::move(mass));
}

inline LatticeMeasure generate_onehot(const Grid& g, long cell = -1) {
    std::vector<double> d(static_cast<size_t>(g.cell_count()), 0.0);
    long hot = cell >= 0 ? cell : g.cell_count() / 2;
    require(hot >= 0 && hot < g.cell_count(), "bad-parameter", "onehot cell out of range");
    d[static_cast<size_t>(hot)] = 1.0;
    return LatticeMeasure(g, std::move(d));
}

// --- DYADMEAS file format (bit exact) ------------------------------------

inline void save_measure(const LatticeMeasure& mu, const std::string& path) {
    std::ostringstream os;
    const Grid& g = mu.grid();
    os << "DYADMEAS 1\n" << g.n << " " << g.depth;
    char buf[64];
    for (int i = 0; i < g.n; ++i) {
        std::snprintf(buf, sizeof buf, " %.17g", g.root_origin[i]);
        os << buf;
    }
    std::snprintf(buf, sizeof buf, " %.17g", g.root_side);
    os << buf << "\n";
    for (long lin = 0; lin < mu.cell_count(); ++lin) {
        std::snprintf(buf, sizeof buf, "%.17g\n", mu.density(lin));
        os << buf;
    }
    // write-temp-then-rename keeps partially written files out of readers' view
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::trunc);
        require(f.good(), "bad-parameter", "cannot open " + tmp);
        f << os.str();
    }
    std::rename(tmp.c_str(), path.c_str());
}

inline LatticeMeasure load_measure(const std::string& path) {
    std::ifstream f(path);
    require(f.good(), "bad-parameter", "cannot open measure file " + path);
    std::string magic;
    int version = 0;
    f >> magic >> version;
    require(magic == "DYADMEAS" && version == 1, "bad-parameter", "not a DYADMEAS 1 file");
    int n = 0, L = 0;
    f >> n >> L;
    require(n >= 1 && n <= 3 && L >= 1 && L <= 24, "bad-parameter", "bad lattice header");
    Grid g(n, L);
    for (int i = 0; i < n; ++i) f >> g.root_origin[i];
    f >> g.root_side;
    std::vector<double> d(static_cast<size_t>(g.cell_count()));
    for (auto& v : d) f >> v;
    require(f.good() || f.eof(), "bad-parameter", "truncated measure file");
    return LatticeMeasure(g, std::move(d));
}

inline LatticeMeasure generate(const Grid& g, const std::string& spec, std::uint64_t seed = 0) {
    auto split = [](const std::string& s) {
        std::vector<std::string> parts;
        std::string cur;
        for (char ch : s) {
            if (ch == ':') {
                parts.push_back(cur);
                cur.clear();
            } else {
                cur += ch;
            }
        }
        parts.push_back(cur);
        return parts;
    };
    auto parts = split(spec);
    const std::string& fam = parts[0];
    if (fam == "lebesgue") return generate_lebesgue(g);
    if (fam == "power") {
        require(parts.size() >= 2, "bad-parameter", "power:a[:c]");
        double a = std::stod(parts[1]);
        double c = parts.size() >= 3 ? std::stod(parts[2]) : 0.0;
        return generate_power(g, a, c);
    }
    if (fam == "cascade") {
        require(parts.size() >= 2, "bad-parameter", "cascade:p0[:seed]");
        double p0 = std::stod(parts[1]);
        std::uint64_t s = parts.size() >= 3 ? std::stoull(parts[2]) : seed;
        return generate_cascade(g, p0, Rng(s, "cascade"));
    }
    if (fam == "onehot") {
        long cell = parts.size() >= 2 ? std::stol(parts[1]) : -1;
        return generate_onehot(g, cell);
    }
    if (fam == "from-file") {
        require(parts.size() >= 2, "bad-parameter", "from-file:path");
        return load_measure(parts[1]);
    }
    // bare path fallback
    if (spec.find('/') != std::string::npos || spec.find(".") != std::string::npos)
        return load_measure(spec);
    fail("bad-parameter", "unknown measure family: " + spec);
}

} // namespace dyadlab
