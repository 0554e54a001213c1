#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "dyadlab/measure.hpp"

namespace dyadlab {

// enumerate every cube of the grid, coarse to fine (unshifted hierarchy)
template <typename F>
inline void for_each_cube(const Grid& g, F&& fn, int max_level = -1) {
    const int top = max_level < 0 ? g.depth : std::min(max_level, g.depth);
    std::vector<long> idx;
    for (int lev = 0; lev <= top; ++lev) {
        const long per_axis = 1L << lev;
        long count = 1;
        for (int i = 0; i < g.n; ++i) count *= per_axis;
        idx.assign(g.n, 0);
        for (long lin = 0; lin < count; ++lin) {
            fn(DyadicCube{lev, idx});
            for (int i = g.n - 1; i >= 0; --i) {
                if (++idx[i] < per_axis) break;
                idx[i] = 0;
            }
        }
    }
}

inline std::vector<DyadicCube> all_cubes(const Grid& g, int max_level = -1) {
    std::vector<DyadicCube> out;
    for_each_cube(g, [&](const DyadicCube& q) { out.push_back(q); }, max_level);
    return out;
}

inline bool inside_root(const Grid& g, const DyadicCube& q) {
    return cube_cells(g, q).inside(g.cells_per_axis());
}

// shifted companions of a grid with the given per-axis finest-cell offsets;
// suprema extended over their cubes stay honest lower bounds because shifted
// cubes are cell aligned and masses restrict exactly
inline std::vector<Grid> grid_ensemble(const Grid& g, const std::vector<long>& shifts) {
    std::vector<Grid> out{g};
    for (long s : shifts) {
        Grid gs = g;
        gs.shift.assign(static_cast<size_t>(g.n), s % g.cells_per_axis());
        out.push_back(gs);
    }
    return out;
}

// --- doubling ---------------------------------------------------------------

struct DoublingReport {
    double c_doub = 1;       // sup |2Q|/|Q| over cubes with 2Q inside the root
    double theta = 0;        // log2 c_doub
    double beta = 0.5;       // (beta,gamma) reverse-doubling pair fitted at beta=1/2
    double gamma = 1;        // min |Q/2|/|Q|
    double c_dyadic = 1;     // sup |parent Q|/|Q|, the dyadic-halving constant
    bool non_doubling = false;
    std::string witness;     // cube achieving c_doub
};

// c_doub ranges over cubes Q with side >= 2 cells whose concentric double
// stays inside the root; zero-mass cubes against positive doubles flag +inf.
inline DoublingReport doubling_report(const LatticeMeasure& mu) {
    const Grid& g = mu.grid();
    DoublingReport rep;
    rep.c_doub = 0;
    rep.gamma = kInf;
    bool any = false;
    for_each_cube(g, [&](const DyadicCube& q) {
        if (q.level >= g.depth) return;  // need even side for 2Q
        CellBox twoq = dilate_cells(g, q, 2);
        if (!twoq.inside(g.cells_per_axis())) return;
        any = true;
        const double m = mu.cube_mass(q);
        const double m2 = mu.box_mass(twoq);
        if (m <= 0) {
            if (m2 > 0) {
                rep.c_doub = kInf;
                rep.non_doubling = true;
                rep.witness = cube_token(g, q);
            }
            return;
        }
        const double r = m2 / m;
        if (r > rep.c_doub) {
            rep.c_doub = r;
            rep.witness = cube_token(g, q);
        }
        if (q.level <= g.depth - 2) {
            CellBox half = shrink_cells(g, q, 1, 2);
            rep.gamma = std::min(rep.gamma, mu.box_mass(half) / m);
        }
    });
    require(any, "degenerate-measure", "no cube with 2Q inside the root");
    for_each_cube(g, [&](const DyadicCube& q) {
        if (q.level == 0) return;
        const double m = mu.cube_mass(q);
        const double mp = mu.cube_mass(parent(q));
        if (m <= 0) {
            if (mp > 0) rep.c_dyadic = kInf;
            return;
        }
        rep.c_dyadic = std::max(rep.c_dyadic, mp / m);
    });
    if (rep.c_doub < 1) rep.c_doub = 1;
    rep.theta = std::log2(rep.c_doub);
    if (!std::isfinite(rep.c_doub)) rep.non_doubling = true;
    return rep;
}

// --- subset sampling ----------------------------------------------------
//
// Suprema over "all compact E inside Q" are unsearchable; we use three
// generators (random cell unions, dyadic subcubes, greedy density-extremal
// prefixes) plus E = Q itself.  The greedy sets witness tight envelopes for
// monotone densities.

struct SubsetSample {
    DyadicCube q;
    std::vector<long> cells;  // linear indices of E's cells
};

class SubsetSampler {
public:
    SubsetSampler(const LatticeMeasure& mu, Rng rng) : mu_(&mu), rng_(rng) {}

    // random positive-mass cube with level in [min_level, max_level]
    DyadicCube random_cube(int min_level = 0, int max_level = -1) {
        const Grid& g = mu_->grid();
        const int hi = max_level < 0 ? g.depth : std::min(max_level, g.depth);
        for (int tries = 0; tries < 256; ++tries) {
            int lev = min_level + rng_.index(hi - min_level + 1);
            DyadicCube q{lev, {}};
            q.index.resize(g.n);
            for (int i = 0; i < g.n; ++i) q.index[i] = rng_.index(1L << lev);
            if (mu_->cube_mass(q) > 0) return q;
        }
        return root_cube(g);
    }

    std::vector<SubsetSample> subsets_of(const DyadicCube& q, int count) {
        std::vector<SubsetSample> out;
        std::vector<long> cells;
        mu_->for_each_cell(cube_cells(mu_->grid(), q), [&](long lin) { cells.push_back(lin); });
        if (cells.empty()) return out;
        // E = Q always participates
        out.push_back({q, cells});
        // greedy density-descending prefixes
        std::vector<long> by_density = cells;
        std::stable_sort(by_density.begin(), by_density.end(),
                         [&](long a, long b) { return mu_->density(a) > mu_->density(b); });
        for (double fr : {0.05, 0.25, 0.5}) {
            size_t k = std::max<size_t>(1, static_cast<size_t>(fr * by_density.size()));
            out.push_back({q, std::vector<long>(by_density.begin(), by_density.begin() + k)});
        }
        // dyadic subcubes
        const Grid& g = mu_->grid();
        for (int c = 0; c < count / 3; ++c) {
            if (q.level >= g.depth) break;
            int lev = q.level + 1 + rng_.index(g.depth - q.level);
            DyadicCube sq{lev, {}};
            sq.index.resize(g.n);
            const int k = lev - q.level;
            for (int i = 0; i < g.n; ++i)
                sq.index[i] = (q.index[i] << k) + rng_.index(1L << k);
            std::vector<long> sc;
            mu_->for_each_cell(cube_cells(g, sq), [&](long lin) { sc.push_back(lin); });
            if (!sc.empty()) out.push_back({q, std::move(sc)});
        }
        // random cell unions
        while (static_cast<int>(out.size()) < count + 4) {
            double p = rng_.uniform(0.05, 0.95);
            std::vector<long> sel;
            for (long lin : cells)
                if (rng_.uniform() < p) sel.push_back(lin);
            if (!sel.empty()) out.push_back({q, std::move(sel)});
        }
        return out;
    }

    Rng& rng() { return rng_; }

private:
    const LatticeMeasure* mu_;
    Rng rng_;
};

inline double cells_mass(const LatticeMeasure& mu, const std::vector<long>& cells) {
    double s = 0;
    for (long lin : cells) s += mu.cell_mass_linear(lin);
    return s;
}

// --- A-infinity fit -------------------------------------------------------
//
// Fits the C=1 log-log envelope: the largest eps in (0,1] with
// |E|_w / |Q|_w <= (|E|/|Q|)^eps on every sample.  eps near zero flags a
// non-A-infinity measure (mass concentrating on Lebesgue-null sets).

struct EnvelopeFit {
    double C = 1;
    double epsilon = 1;
    bool flagged = false;  // envelope degenerate (eps below threshold)
    long samples = 0;
    std::string witness;
};

inline EnvelopeFit a_infinity_fit(const LatticeMeasure& omega, int samples, Rng rng) {
    require(samples >= 8, "insufficient-samples", "need at least 8 samples");
    SubsetSampler sampler(omega, rng);
    EnvelopeFit fit;
    double eps = 1.0;
    int cube_draws = std::max(4, samples / 8);
    for (int cd = 0; cd < cube_draws; ++cd) {
        DyadicCube q = sampler.random_cube();
        const double qmass = omega.cube_mass(q);
        if (qmass <= 0) continue;
        long qcells = cube_cells(omega.grid(), q).volume_cells();
        for (auto& s : sampler.subsets_of(q, samples / cube_draws + 1)) {
            const double em = cells_mass(omega, s.cells);
            const double u = std::log(static_cast<double>(s.cells.size()) /
                                      static_cast<double>(qcells));
            ++fit.samples;
            if (u >= 0 || em <= 0) continue;  // E = Q or w-null E never binds
            const double v = std::log(em / qmass);
            const double slope = v / u;  // both negative or v = 0
            if (slope < eps) {
                eps = slope;
                fit.witness = cube_token(omega.grid(), q) + "#" + std::to_string(s.cells.size());
            }
        }
    }
    fit.epsilon = std::max(eps, 0.0);
    fit.flagged = fit.epsilon < 0.01;
    return fit;
}

// --- C_q weight fit -------------------------------------------------------
//
// |E|_s / int |M 1_Q|^q ds <= C (|E|/|Q|)^eps with M the alpha=0 maximal
// operator restricted to lattice cubes and the integral over the root cube
// (domain restriction of the paper's R^n integral).

inline std::vector<double> maximal_indicator(const LatticeMeasure& sigma, const DyadicCube& q) {
    // M 1_Q at each cell center: sup over lattice cubes R containing the cell
    // of |R cap Q| / |R|; dyadic structure reduces it to the ancestor chain.
    const Grid& g = sigma.grid();
    std::vector<double> out(static_cast<size_t>(sigma.cell_count()), 0.0);
    const long qcells = cube_cells(g, q).volume_cells();
    for (long lin = 0; lin < sigma.cell_count(); ++lin) {
        auto idx = sigma.cell_coords(lin);
        DyadicCube cell{g.depth, idx};
        double best = 0;
        for (int lev = g.depth; lev >= 0; --lev) {
            DyadicCube a = ancestor(cell, lev);
            if (contains(q, a)) {
                best = 1.0;
                break;
            }
            if (contains(a, q)) {
                long acells = cube_cells(g, a).volume_cells();
                best = std::max(best, static_cast<double>(qcells) / static_cast<double>(acells));
            }
        }
        out[static_cast<size_t>(lin)] = best;
    }
    return out;
}

inline EnvelopeFit cq_constant(const LatticeMeasure& sigma, double qexp, int samples, Rng rng) {
    require(qexp > 1, "bad-parameter", "C_q needs q > 1");
    require(samples >= 8, "insufficient-samples", "need at least 8 samples");
    SubsetSampler sampler(sigma, rng);
    EnvelopeFit fit;
    double eps = 1.0;
    int cube_draws = std::max(4, samples / 8);
    for (int cd = 0; cd < cube_draws; ++cd) {
        DyadicCube q = sampler.random_cube();
        auto m1q = maximal_indicator(sigma, q);
        double denom = 0;
        for (long lin = 0; lin < sigma.cell_count(); ++lin)
            denom += std::pow(m1q[static_cast<size_t>(lin)], qexp) * sigma.cell_mass_linear(lin);
        if (denom <= 0) continue;
        long qcells = cube_cells(sigma.grid(), q).volume_cells();
        for (auto& s : sampler.subsets_of(q, samples / cube_draws + 1)) {
            const double em = cells_mass(sigma, s.cells);
            const double u =
                std::log(static_cast<double>(s.cells.size()) / static_cast<double>(qcells));
            ++fit.samples;
            if (u >= 0 || em <= 0) continue;
            const double v = std::log(em / denom);
            if (v >= 0) {  // cannot happen: denom >= |Q|_s >= |E|_s
                eps = 0;
                continue;
            }
            eps = std::min(eps, v / u);
        }
    }
    fit.epsilon = std::max(eps, 0.0);
    fit.flagged = fit.epsilon < 0.01;
    return fit;
}

// --- comparability ----------------------------------------------------------

struct ComparabilityReport {
    EnvelopeFit sigma_given_omega;  // |E|_s/|Q|_s <= C (|E|_w/|Q|_w)^eps
    EnvelopeFit omega_given_sigma;
    double carleson_ratio_so = 0;  // max ||F||_Car(s) / ||F||_Car(w) over sampled families
    double carleson_ratio_os = 0;
    bool comparable = true;
};

namespace detail {

inline EnvelopeFit comparability_direction(const LatticeMeasure& num, const LatticeMeasure& den,
                                           int samples, Rng rng) {
    SubsetSampler sampler(den, rng);
    EnvelopeFit fit;
    double eps = 1.0;
    int cube_draws = std::max(4, samples / 8);
    for (int cd = 0; cd < cube_draws; ++cd) {
        DyadicCube q = sampler.random_cube();
        const double qn = num.cube_mass(q), qd = den.cube_mass(q);
        if (qn <= 0 || qd <= 0) continue;
        for (auto& s : sampler.subsets_of(q, samples / cube_draws + 1)) {
            const double en = cells_mass(num, s.cells);
            const double ed = cells_mass(den, s.cells);
            ++fit.samples;
            if (en <= 0) continue;
            if (ed <= 0) {  // mass in num invisible to den: not comparable
                eps = 0;
                fit.witness = cube_token(num.grid(), q);
                continue;
            }
            const double u = std::log(ed / qd);
            const double v = std::log(en / qn);
            if (u >= 0) continue;
            if (v >= 0) continue;
            if (v / u < eps) {
                eps = v / u;
                fit.witness = cube_token(num.grid(), q) + "#" + std::to_string(s.cells.size());
            }
        }
    }
    fit.epsilon = std::max(eps, 0.0);
    fit.flagged = fit.epsilon < 0.01;
    return fit;
}

} // namespace detail

// ||F||_Car(mu): max over F in the family of sum_{F' subset F, F' in family}
// |F'|_mu / |F|_mu; tops with zero mass are skipped.
inline double carleson_norm(const std::vector<DyadicCube>& family, const LatticeMeasure& mu) {
    double best = 0;
    for (const auto& f : family) {
        const double fm = mu.cube_mass(f);
        if (fm <= 0) continue;
        double sum = 0;
        for (const auto& f2 : family)
            if (contains(f, f2)) sum += mu.cube_mass(f2);
        best = std::max(best, sum / fm);
    }
    return best;
}

inline ComparabilityReport comparability_report(
    const LatticeMeasure& sigma, const LatticeMeasure& omega,
    const std::vector<std::vector<DyadicCube>>& families, int samples, Rng rng) {
    ComparabilityReport rep;
    rep.sigma_given_omega =
        detail::comparability_direction(sigma, omega, samples, rng.substream("so"));
    rep.omega_given_sigma =
        detail::comparability_direction(omega, sigma, samples, rng.substream("os"));
    for (const auto& fam : families) {
        if (fam.empty()) continue;
        const double cs = carleson_norm(fam, sigma);
        const double cw = carleson_norm(fam, omega);
        if (cw > 0) rep.carleson_ratio_so = std::max(rep.carleson_ratio_so, cs / cw);
        if (cs > 0) rep.carleson_ratio_os = std::max(rep.carleson_ratio_os, cw / cs);
    }
    rep.comparable = !rep.sigma_given_omega.flagged && !rep.omega_given_sigma.flagged &&
                     std::isfinite(rep.carleson_ratio_so) && std::isfinite(rep.carleson_ratio_os);
    return rep;
}

} // namespace dyadlab
