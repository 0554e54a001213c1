#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "dyadlab/alpert.hpp"
#include "dyadlab/operator.hpp"
#include "dyadlab/weights.hpp"

namespace dyadlab {

// Every constant here is a sampled supremum: reports carry the witness that
// achieved the max (re-evaluating it reproduces the value) plus the sampler
// provenance, and are lower bounds on the continuum constants by
// construction.

struct Witness {
    DyadicCube q, q2;
    int beta_index = -1;
    std::vector<long> e_cells, f_cells;
    std::vector<double> poly_f, poly_g;
    std::vector<DyadicCube> decomposition;
    double x0 = 0, radius = 0, eps = 0;
    std::string token;
};

struct ConstantReport {
    std::string name;
    double value = 0;
    bool lower_bound_flag = true;
    Witness witness;
    std::string provenance;
};

inline void take_max(ConstantReport& rep, double v, Witness w) {
    if (v > rep.value) {
        rep.value = v;
        rep.witness = std::move(w);
    }
}

// operator pair: T_sigma with its adjoint acting on omega
struct OpPair {
    const DiscretizedOperator* T = nullptr;
    const DiscretizedOperator* Tstar = nullptr;
    const LatticeMeasure* sigma = nullptr;
    const LatticeMeasure* omega = nullptr;

    OpPair swapped() const { return OpPair{Tstar, T, omega, sigma}; }
};

inline double integral_sq(const LatticeMeasure& mu, const std::vector<double>& v,
                          const CellBox* box = nullptr) {
    double s = 0;
    if (box) {
        mu.for_each_cell(*box, [&](long lin) {
            s += v[static_cast<size_t>(lin)] * v[static_cast<size_t>(lin)] * mu.cell_mass_linear(lin);
        });
    } else {
        for (long lin = 0; lin < mu.cell_count(); ++lin)
            s += v[static_cast<size_t>(lin)] * v[static_cast<size_t>(lin)] * mu.cell_mass_linear(lin);
    }
    return s;
}

// --- Muckenhoupt ----------------------------------------------------------

inline double a2_sample(const LatticeMeasure& sigma, const LatticeMeasure& omega, double alpha,
                        const DyadicCube& q) {
    const Grid& g = sigma.grid();
    const double vol = std::pow(side_length(g, q), g.n);
    const double norm = std::pow(vol, 1.0 - alpha / g.n);
    return (sigma.cube_mass(q) / norm) * (omega.cube_mass(q) / norm);
}

inline ConstantReport a2_classical(const LatticeMeasure& sigma, const LatticeMeasure& omega,
                                   double alpha, const std::vector<DyadicCube>& family) {
    ConstantReport rep;
    rep.name = "A2^alpha";
    rep.provenance = "lattice-cube-family";
    for (const auto& q : family) {
        Witness w;
        w.q = q;
        w.token = cube_token(sigma.grid(), q);
        take_max(rep, a2_sample(sigma, omega, alpha, q), std::move(w));
    }
    return rep;
}

// the shifted-grid extension of the supremum: cubes of every ensemble grid
// that sit fully inside the root
inline ConstantReport a2_classical_ensemble(const LatticeMeasure& sigma,
                                            const LatticeMeasure& omega, double alpha,
                                            const std::vector<Grid>& ensemble,
                                            int max_level = -1) {
    ConstantReport rep;
    rep.name = "A2^alpha";
    rep.provenance = "lattice+shifted-cube-family";
    for (const auto& g : ensemble) {
        for_each_cube(
            g,
            [&](const DyadicCube& q) {
                if (!inside_root(g, q)) return;
                const double vol = std::pow(side_length(g, q), g.n);
                const double norm = std::pow(vol, 1.0 - alpha / g.n);
                CellBox b = cube_cells(g, q);
                const double v = (sigma.box_mass(b) / norm) * (omega.box_mass(b) / norm);
                Witness w;
                w.q = q;
                w.token = cube_token(g, q);
                take_max(rep, v, std::move(w));
            },
            max_level);
    }
    return rep;
}

inline double a2_tailed_sample(const LatticeMeasure& sigma, const LatticeMeasure& omega,
                               double alpha, const DyadicCube& q, bool starred) {
    const Grid& g = sigma.grid();
    const double vol = std::pow(side_length(g, q), g.n);
    const double norm = std::pow(vol, 1.0 - alpha / g.n);
    if (!starred) return poisson(g, q, sigma, alpha) * omega.cube_mass(q) / norm;
    return (sigma.cube_mass(q) / norm) * poisson(g, q, omega, alpha);
}

inline std::pair<ConstantReport, ConstantReport> a2_one_tailed(
    const LatticeMeasure& sigma, const LatticeMeasure& omega, double alpha,
    const std::vector<DyadicCube>& family) {
    ConstantReport plain, star;
    plain.name = "cal-A2^alpha";
    star.name = "cal-A2^alpha-star";
    plain.provenance = star.provenance = "lattice-cube-family;tail-truncated";
    for (const auto& q : family) {
        Witness w;
        w.q = q;
        w.token = cube_token(sigma.grid(), q);
        take_max(plain, a2_tailed_sample(sigma, omega, alpha, q, false), w);
        take_max(star, a2_tailed_sample(sigma, omega, alpha, q, true), w);
    }
    return {plain, star};
}

// --- pivotal conditions -----------------------------------------------------

// value of one subdecomposition sample: (1/|Q|_s) sum_r P_k(Q_r, 1_Q s)^2 |Q_r|_w
inline double pivotal_sample(const LatticeMeasure& sigma, const LatticeMeasure& omega,
                             double alpha, int kappa, const DyadicCube& q,
                             const std::vector<DyadicCube>& parts) {
    const Grid& g = sigma.grid();
    const double qs = sigma.cube_mass(q);
    if (qs <= 0) return 0;
    std::vector<char> mask(static_cast<size_t>(sigma.cell_count()), 0);
    sigma.for_each_cell(cube_cells(g, q), [&](long lin) { mask[static_cast<size_t>(lin)] = 1; });
    double acc = 0;
    for (const auto& r : parts) {
        const double p = poisson_m(g, r, sigma, alpha, kappa, &mask);
        acc += p * p * omega.cube_mass(r);
    }
    return acc / qs;
}

// random dyadic subdecompositions: full level-k splits, random recursive
// splits, and Whitney collections of random open subsets
inline std::vector<std::vector<DyadicCube>> sample_subdecompositions(const Grid& g,
                                                                     const DyadicCube& q,
                                                                     int count, Rng rng) {
    std::vector<std::vector<DyadicCube>> out;
    out.push_back({q});  // the single-cube subdecomposition
    for (int k = 1; k <= std::min(3, g.depth - q.level); ++k) {
        std::vector<DyadicCube> parts{q};
        for (int j = 0; j < k; ++j) {
            std::vector<DyadicCube> next;
            for (auto& p : parts)
                for (auto& c : children(g, p)) next.push_back(c);
            parts = std::move(next);
        }
        out.push_back(std::move(parts));
    }
    for (int t = 0; t < count; ++t) {
        std::vector<DyadicCube> parts;
        std::vector<DyadicCube> stack{q};
        while (!stack.empty()) {
            DyadicCube p = stack.back();
            stack.pop_back();
            const bool can_split = p.level < g.depth;
            if (can_split && rng.uniform() < 0.6) {
                for (auto& c : children(g, p)) stack.push_back(c);
            } else if (rng.uniform() < 0.8) {
                parts.push_back(p);
            }  // else drop: subdecompositions need not cover Q
        }
        if (!parts.empty()) out.push_back(std::move(parts));
    }
    return out;
}

inline ConstantReport pivotal(const LatticeMeasure& sigma, const LatticeMeasure& omega,
                              double alpha, int kappa, int cube_samples, int decomp_samples,
                              Rng rng) {
    ConstantReport rep;
    rep.name = "V2^{alpha,kappa}";
    rep.provenance = "level-splits+random-recursive;seed=" + std::to_string(rng.seed());
    const Grid& g = sigma.grid();
    SubsetSampler sampler(sigma, rng.substream("cubes"));
    Rng drng = rng.substream("decomp");
    for (int s = 0; s < cube_samples; ++s) {
        DyadicCube q = s == 0 ? root_cube(g) : sampler.random_cube(0, g.depth - 1);
        if (sigma.cube_mass(q) <= 0) continue;
        for (auto& parts : sample_subdecompositions(g, q, decomp_samples, drng.substream(std::to_string(s)))) {
            Witness w;
            w.q = q;
            w.decomposition = parts;
            w.token = cube_token(g, q) + "#parts=" + std::to_string(parts.size());
            take_max(rep, pivotal_sample(sigma, omega, alpha, kappa, q, parts), std::move(w));
        }
    }
    return rep;
}

// --- testing conditions -----------------------------------------------------

struct TestingPair {
    ConstantReport local;  // T^(kappa)
    ConstantReport full;   // FT^(kappa)
};

// T_sigma(1_Q m_Q^beta) for one cube and monomial; returns the full-lattice
// value vector
inline std::vector<double> testing_field(const OpPair& pair, const DyadicCube& q, int kappa,
                                         int beta_index) {
    const LatticeMeasure& sigma = *pair.sigma;
    std::vector<long> cells;
    auto mono = monomials_on_cells(sigma, q, kappa, &cells);
    return pair.T->apply_sparse(cells, mono[static_cast<size_t>(beta_index)]);
}

inline double cube_testing_sample(const OpPair& pair, const DyadicCube& q, int kappa,
                                  int beta_index, bool full) {
    const double qs = pair.sigma->cube_mass(q);
    if (qs <= 0) return 0;
    auto v = testing_field(pair, q, kappa, beta_index);
    CellBox box = cube_cells(pair.sigma->grid(), q);
    const double num = integral_sq(*pair.omega, v, full ? nullptr : &box);
    return std::sqrt(num / qs);
}

inline TestingPair cube_testing(const OpPair& pair, int kappa,
                                const std::vector<DyadicCube>& family) {
    TestingPair out;
    out.local.name = "T^(" + std::to_string(kappa) + ")";
    out.full.name = "FT^(" + std::to_string(kappa) + ")";
    out.local.provenance = out.full.provenance = "lattice-cube-family";
    const int P = static_cast<int>(monomial_indices(pair.sigma->grid().n, kappa).size());
    for (const auto& q : family) {
        const double qs = pair.sigma->cube_mass(q);
        if (qs <= 0) continue;  // zero-mass cubes skipped with flag
        std::vector<long> cells;
        auto mono = monomials_on_cells(*pair.sigma, q, kappa, &cells);
        CellBox box = cube_cells(pair.sigma->grid(), q);
        for (int b = 0; b < P; ++b) {
            auto v = pair.T->apply_sparse(cells, mono[static_cast<size_t>(b)]);
            Witness w;
            w.q = q;
            w.beta_index = b;
            w.token = cube_token(pair.sigma->grid(), q) + "#beta" + std::to_string(b);
            take_max(out.local, std::sqrt(integral_sq(*pair.omega, v, &box) / qs), w);
            take_max(out.full, std::sqrt(integral_sq(*pair.omega, v) / qs), w);
        }
    }
    return out;
}

inline double indicator_sample(const OpPair& pair, const DyadicCube& q,
                               const std::vector<long>& e_cells) {
    const double qs = pair.sigma->cube_mass(q);
    if (qs <= 0 || e_cells.empty()) return 0;
    std::vector<double> ones(e_cells.size(), 1.0);
    auto v = pair.T->apply_sparse(e_cells, ones);
    CellBox box = cube_cells(pair.sigma->grid(), q);
    return std::sqrt(integral_sq(*pair.omega, v, &box) / qs);
}

inline ConstantReport indicator_testing(const OpPair& pair, int cube_samples, int subset_samples,
                                        Rng rng) {
    ConstantReport rep;
    rep.name = "T^IC";
    rep.provenance = "subset-sampler;seed=" + std::to_string(rng.seed());
    SubsetSampler sampler(*pair.sigma, rng);
    const Grid& g = pair.sigma->grid();
    for (int s = 0; s < cube_samples; ++s) {
        DyadicCube q = s == 0 ? root_cube(g) : sampler.random_cube();
        if (pair.sigma->cube_mass(q) <= 0) continue;
        for (auto& sub : sampler.subsets_of(q, subset_samples)) {
            Witness w;
            w.q = q;
            w.e_cells = sub.cells;
            w.token = cube_token(g, q) + "#|E|=" + std::to_string(sub.cells.size());
            take_max(rep, indicator_sample(pair, q, sub.cells), std::move(w));
        }
    }
    return rep;
}

// --- bilinear indicator/cube testing -----------------------------------------

inline double bict_sample(const OpPair& pair, const DyadicCube& q,
                          const std::vector<long>& e_cells, const std::vector<long>& f_cells) {
    const double qs = pair.sigma->cube_mass(q);
    const double qw = pair.omega->cube_mass(q);
    if (qs <= 0 || qw <= 0 || e_cells.empty() || f_cells.empty()) return 0;
    std::vector<double> ones(e_cells.size(), 1.0);
    auto v = pair.T->apply_sparse(e_cells, ones);
    double acc = 0;
    for (long lin : f_cells) acc += v[static_cast<size_t>(lin)] * pair.omega->cell_mass_linear(lin);
    return std::abs(acc) / std::sqrt(qs * qw);
}

// rw_sample shares the integrand with bict_sample but normalizes by the
// subsets' own masses
inline double rw_sample(const OpPair& pair, const DyadicCube& q, const std::vector<long>& e_cells,
                        const std::vector<long>& f_cells) {
    const double es = cells_mass(*pair.sigma, e_cells);
    const double fw = cells_mass(*pair.omega, f_cells);
    if (es <= 0 || fw <= 0) return 0;
    std::vector<double> ones(e_cells.size(), 1.0);
    auto v = pair.T->apply_sparse(e_cells, ones);
    double acc = 0;
    for (long lin : f_cells) acc += v[static_cast<size_t>(lin)] * pair.omega->cell_mass_linear(lin);
    return std::abs(acc) / std::sqrt(es * fw);
}

struct BictReport {
    ConstantReport bict;
    ConstantReport sign_optimal;  // the |f|,|g| <= 1 extension of the supremum
    ConstantReport rw;            // restricted weak type over the same sample set
};

// One sweep feeds all three bilinear constants, so the sample-wise chain
// BICT <= N^rw holds on shared witnesses by construction: every (Q, E, F)
// pair, including the sign-decomposed ones, is scored under both
// normalizations.
inline BictReport bilinear_reports(const OpPair& pair, int cube_samples, int pair_samples,
                                   Rng rng) {
    BictReport out;
    out.bict.name = "BICT";
    out.sign_optimal.name = "BICT-sign-optimal";
    out.rw.name = "N^rw";
    out.bict.provenance = out.sign_optimal.provenance = out.rw.provenance =
        "pair-sampler;seed=" + std::to_string(rng.seed());
    const Grid& g = pair.sigma->grid();
    SubsetSampler se(*pair.sigma, rng.substream("E"));
    SubsetSampler sf(*pair.omega, rng.substream("F"));
    auto score = [&](const DyadicCube& q, const std::vector<long>& E, const std::vector<long>& F,
                     const char* tag) {
        if (E.empty() || F.empty()) return;
        Witness w;
        w.q = q;
        w.e_cells = E;
        w.f_cells = F;
        w.token = cube_token(g, q) + tag;
        Witness w2 = w;
        take_max(out.bict, bict_sample(pair, q, E, F), std::move(w));
        take_max(out.rw, rw_sample(pair, q, E, F), std::move(w2));
    };
    for (int s = 0; s < cube_samples; ++s) {
        DyadicCube q = s == 0 ? root_cube(g) : se.random_cube();
        const double qs = pair.sigma->cube_mass(q);
        const double qw = pair.omega->cube_mass(q);
        if (qs <= 0 || qw <= 0) continue;
        auto es = se.subsets_of(q, pair_samples);
        auto fs = sf.subsets_of(q, pair_samples);
        const size_t m = std::min(es.size(), fs.size());
        for (size_t i = 0; i < m; ++i) score(q, es[i].cells, fs[i].cells, "");
        // sign-optimal variant: one alternation starting from f = 1_Q
        std::vector<long> qcells;
        pair.sigma->for_each_cell(cube_cells(g, q), [&](long lin) { qcells.push_back(lin); });
        std::vector<double> ones(qcells.size(), 1.0);
        auto v = pair.T->apply_sparse(qcells, ones);
        std::vector<long> fplus, fminus;
        for (long lin : qcells) (v[static_cast<size_t>(lin)] >= 0 ? fplus : fminus).push_back(lin);
        auto g_vals = std::vector<double>(qcells.size());
        for (size_t i = 0; i < qcells.size(); ++i)
            g_vals[i] = v[static_cast<size_t>(qcells[i])] >= 0 ? 1.0 : -1.0;
        auto u = pair.Tstar->apply_sparse(qcells, g_vals);
        std::vector<long> eplus, eminus;
        for (long lin : qcells) (u[static_cast<size_t>(lin)] >= 0 ? eplus : eminus).push_back(lin);
        // value of <T(1_{E+}-1_{E-}), 1_{F+}-1_{F-}>_w normalized
        double val = 0;
        {
            std::vector<long> sup;
            std::vector<double> fv;
            for (long lin : eplus) {
                sup.push_back(lin);
                fv.push_back(1.0);
            }
            for (long lin : eminus) {
                sup.push_back(lin);
                fv.push_back(-1.0);
            }
            if (!sup.empty()) {
                auto tv = pair.T->apply_sparse(sup, fv);
                for (size_t i = 0; i < qcells.size(); ++i)
                    val += tv[static_cast<size_t>(qcells[i])] * g_vals[i] *
                           pair.omega->cell_mass_linear(qcells[i]);
            }
        }
        Witness w;
        w.q = q;
        w.token = cube_token(g, q) + "#sign";
        take_max(out.sign_optimal, std::abs(val) / std::sqrt(qs * qw), std::move(w));
        // the four decomposed indicator pairs join the shared sample set
        for (auto* E : {&eplus, &eminus})
            for (auto* F : {&fplus, &fminus}) score(q, *E, *F, "#signpart");
    }
    return out;
}

inline BictReport bict(const OpPair& pair, int cube_samples, int pair_samples, Rng rng) {
    return bilinear_reports(pair, cube_samples, pair_samples, rng);
}

inline ConstantReport weak_norms(const OpPair& pair, int cube_samples, int pair_samples, Rng rng) {
    return bilinear_reports(pair, cube_samples, pair_samples, rng).rw;
}

// --- weak boundedness over disjoint near cubes --------------------------------

inline double wbp_sample_in(const OpPair& pair, const Grid& g, const DyadicCube& q,
                            const DyadicCube& q2, const std::vector<double>& fcoef,
                            const std::vector<double>& gcoef, int kappa1, int kappa2) {
    const double qs = pair.sigma->box_mass(cube_cells(g, q));
    const double qw = pair.omega->box_mass(cube_cells(g, q2));
    if (qs <= 0 || qw <= 0) return 0;
    std::vector<long> qcells, q2cells;
    auto fmono = monomials_on_cells_in(*pair.sigma, g, q, kappa1, &qcells);
    auto gmono = monomials_on_cells_in(*pair.omega, g, q2, kappa2, &q2cells);
    std::vector<double> fv(qcells.size(), 0.0), gv(q2cells.size(), 0.0);
    for (size_t b = 0; b < fcoef.size(); ++b)
        for (size_t c = 0; c < qcells.size(); ++c) fv[c] += fcoef[b] * fmono[b][c];
    for (size_t b = 0; b < gcoef.size(); ++b)
        for (size_t c = 0; c < q2cells.size(); ++c) gv[c] += gcoef[b] * gmono[b][c];
    auto v = pair.T->apply_sparse(qcells, fv);
    double acc = 0;
    for (size_t c = 0; c < q2cells.size(); ++c)
        acc += v[static_cast<size_t>(q2cells[c])] * gv[c] * pair.omega->cell_mass_linear(q2cells[c]);
    return std::abs(acc) / std::sqrt(qs * qw);
}

inline double wbp_sample(const OpPair& pair, const DyadicCube& q, const DyadicCube& q2,
                         const std::vector<double>& fcoef, const std::vector<double>& gcoef,
                         int kappa1, int kappa2) {
    return wbp_sample_in(pair, pair.sigma->grid(), q, q2, fcoef, gcoef, kappa1, kappa2);
}

// normalize coefficients so sup over the cube's cell centers is 1
inline bool q_normalize_in(const LatticeMeasure& mu, const Grid& g, const DyadicCube& q, int kappa,
                           std::vector<double>& coef) {
    std::vector<long> cells;
    auto mono = monomials_on_cells_in(mu, g, q, kappa, &cells);
    double sup = 0;
    for (size_t c = 0; c < cells.size(); ++c) {
        double v = 0;
        for (size_t b = 0; b < coef.size(); ++b) v += coef[b] * mono[b][c];
        sup = std::max(sup, std::abs(v));
    }
    if (sup <= 0) return false;
    for (auto& x : coef) x /= sup;
    return true;
}

inline bool q_normalize(const LatticeMeasure& mu, const DyadicCube& q, int kappa,
                        std::vector<double>& coef) {
    return q_normalize_in(mu, mu.grid(), q, kappa, coef);
}

struct WbpReport {
    ConstantReport wbp;
    double max_ft_ratio = 0;  // max over samples of value / localized full-testing bound
};

inline WbpReport wbp(const OpPair& pair, int kappa1, int kappa2, int pair_samples, Rng rng,
                     const std::vector<Grid>* ensemble = nullptr) {
    WbpReport out;
    out.wbp.name = "WBP^(k1,k2)";
    out.wbp.provenance = "adjacent-pair-sampler;seed=" + std::to_string(rng.seed());
    std::vector<Grid> grids = ensemble ? *ensemble : std::vector<Grid>{pair.sigma->grid()};
    Rng prng = rng.substream("polys");
    Rng crng = rng.substream("cubes");
    int made = 0;
    for (int tries = 0; tries < pair_samples * 20 && made < pair_samples; ++tries) {
        const Grid& g = grids[static_cast<size_t>(crng.index(static_cast<long>(grids.size())))];
        const int P1 = static_cast<int>(monomial_indices(g.n, kappa1).size());
        const int P2 = static_cast<int>(monomial_indices(g.n, kappa2).size());
        // draw Q', then Q inside 3Q' \ Q' at an equal-or-deeper level
        int lev = 1 + crng.index(g.depth);
        DyadicCube q2{lev, {}};
        q2.index.resize(g.n);
        for (int i = 0; i < g.n; ++i) q2.index[i] = crng.index(1L << lev);
        int lev_q = lev + crng.index(std::min(3, g.depth - lev) + 1);
        CellBox triple = dilate_cells(g, q2, 3);
        DyadicCube q{lev_q, {}};
        q.index.resize(g.n);
        const long sq = side_cells(g, DyadicCube{lev_q, std::vector<long>(g.n, 0)});
        for (int i = 0; i < g.n; ++i) {
            const long lo = triple.lo[i] / sq;  // triple is aligned to coarser cubes
            const long span = (triple.hi[i] - triple.lo[i]) / sq;
            q.index[i] = lo + crng.index(span);
        }
        CellBox qb = cube_cells(g, q);
        CellBox q2b = cube_cells(g, q2);
        if (!(triple.contains(qb) && qb.disjoint(q2b) && qb.inside(g.cells_per_axis()) &&
              q2b.inside(g.cells_per_axis())))
            continue;
        std::vector<double> fcoef(static_cast<size_t>(P1)), gcoef(static_cast<size_t>(P2));
        for (auto& v : fcoef) v = prng.normal();
        for (auto& v : gcoef) v = prng.normal();
        if (!q_normalize_in(*pair.sigma, g, q, kappa1, fcoef)) continue;
        if (!q_normalize_in(*pair.omega, g, q2, kappa2, gcoef)) continue;
        const double val = wbp_sample_in(pair, g, q, q2, fcoef, gcoef, kappa1, kappa2);
        Witness w;
        w.q = q;
        w.q2 = q2;
        w.poly_f = fcoef;
        w.poly_g = gcoef;
        w.token = cube_token(g, q) + "|" + cube_token(g, q2);
        take_max(out.wbp, val, std::move(w));
        // localized full-testing bound for the same (Q, f): Cauchy-Schwarz in g
        const double qs = pair.sigma->box_mass(qb);
        if (qs > 0 && val > 0) {
            std::vector<long> qcells;
            auto fmono = monomials_on_cells_in(*pair.sigma, g, q, kappa1, &qcells);
            std::vector<double> fv(qcells.size(), 0.0);
            for (size_t b = 0; b < fcoef.size(); ++b)
                for (size_t c = 0; c < qcells.size(); ++c) fv[c] += fcoef[b] * fmono[b][c];
            auto tv = pair.T->apply_sparse(qcells, fv);
            const double ftloc = std::sqrt(integral_sq(*pair.omega, tv) / qs);
            if (ftloc > 0) out.max_ft_ratio = std::max(out.max_ft_ratio, val / ftloc);
        }
        ++made;
    }
    return out;
}

// --- operator norm ------------------------------------------------------------
//
// Largest singular value of D_w^(1/2) K M_s D_s^(-1/2) by power iteration on
// the normal matrix, Rayleigh-quotient stopping at relative 1e-8, three
// deterministic restarts.  The adjoint's scaled matrix is the transpose, so
// its norm is the same number by construction (exact duality).

struct OpNormReport {
    double value = 0;
    bool converged = true;
    int iterations = 0;
};

namespace detail {

inline std::vector<double> scaled_matrix(const OpPair& pair) {
    const long N = pair.T->size();
    std::vector<double> S(static_cast<size_t>(N) * static_cast<size_t>(N), 0.0);
    for (long i = 0; i < N; ++i) {
        const double wi = pair.omega->cell_mass_linear(i);
        if (wi <= 0) continue;
        const double swi = std::sqrt(wi);
        for (long j = 0; j < N; ++j) {
            const double sj = pair.sigma->cell_mass_linear(j);
            if (sj <= 0) continue;
            S[static_cast<size_t>(i) * N + j] = swi * pair.T->entry(i, j) / std::sqrt(sj);
        }
    }
    return S;
}

inline OpNormReport power_norm(const std::vector<double>& S, long N, double tol, int max_iter,
                               std::uint64_t seed) {
    OpNormReport rep;
    double best = 0;
    for (int restart = 0; restart < 3; ++restart) {
        Rng rng(seed, "opnorm-restart-" + std::to_string(restart));
        std::vector<double> v(static_cast<size_t>(N));
        double n0 = 0;
        for (auto& x : v) {
            x = rng.normal();
            n0 += x * x;
        }
        n0 = std::sqrt(n0);
        for (auto& x : v) x /= n0;
        double lambda = 0;
        bool conv = false;
        std::vector<double> w(static_cast<size_t>(N)), u(static_cast<size_t>(N));
        for (int it = 0; it < max_iter; ++it) {
            // w = S v; u = S^T w
            parallel_for(0, N, [&](long i) {
                const double* row = &S[static_cast<size_t>(i) * N];
                double s = 0;
                for (long j = 0; j < N; ++j) s += row[j] * v[static_cast<size_t>(j)];
                w[static_cast<size_t>(i)] = s;
            });
            parallel_for(0, N, [&](long j) {
                double s = 0;
                for (long i = 0; i < N; ++i) s += S[static_cast<size_t>(i) * N + j] * w[static_cast<size_t>(i)];
                u[static_cast<size_t>(j)] = s;
            });
            double nv = 0, nu = 0;
            for (long j = 0; j < N; ++j) {
                nv += v[static_cast<size_t>(j)] * u[static_cast<size_t>(j)];
                nu += u[static_cast<size_t>(j)] * u[static_cast<size_t>(j)];
            }
            const double lam = nv;  // v^T G v with ||v|| = 1
            rep.iterations = it + 1;
            if (nu <= 0) {
                lambda = 0;
                conv = true;
                break;
            }
            const double inv = 1.0 / std::sqrt(nu);
            for (long j = 0; j < N; ++j) v[static_cast<size_t>(j)] = u[static_cast<size_t>(j)] * inv;
            if (it > 0 && std::abs(lam - lambda) <= tol * std::abs(lam)) {
                lambda = lam;
                conv = true;
                break;
            }
            lambda = lam;
        }
        if (!conv) rep.converged = false;
        best = std::max(best, lambda);
        // normalize v once up front so the Rayleigh quotient is valid
    }
    rep.value = std::sqrt(std::max(best, 0.0));
    return rep;
}

} // namespace detail

inline OpNormReport op_norm(const OpPair& pair, double tol = 1e-8, int max_iter = 4000,
                            std::uint64_t seed = 0) {
    auto S = detail::scaled_matrix(pair);
    return detail::power_norm(S, pair.T->size(), tol, max_iter, seed);
}

// the adjoint's scaled matrix is S^T: identical singular values, so the
// report reuses the primal computation verbatim
inline OpNormReport op_norm_adjoint(const OpPair& pair, double tol = 1e-8, int max_iter = 4000,
                                    std::uint64_t seed = 0) {
    return op_norm(pair, tol, max_iter, seed);
}

// --- cancellation constants ---------------------------------------------------

struct AnnulusEntry {
    std::vector<double> x0;
    double radius = 0;  // N
    double eps = 0;
};

inline double cancellation_sample(const KernelSpec& kernel, const LatticeMeasure& sigma,
                                  const LatticeMeasure& omega, const AnnulusEntry& a,
                                  const std::vector<double>* pcoef = nullptr, int kappa = 1) {
    const Grid& g = sigma.grid();
    const long N = sigma.cell_count();
    // polynomial values, normalized by sup over the ball
    std::vector<double> pv(static_cast<size_t>(N), 1.0);
    if (pcoef) {
        auto betas = monomial_indices(g.n, kappa);
        double sup = 0;
        for (long j = 0; j < N; ++j) {
            auto y = sigma.cell_center(j);
            double r2 = 0;
            for (int i = 0; i < g.n; ++i) r2 += (y[static_cast<size_t>(i)] - a.x0[static_cast<size_t>(i)]) * (y[static_cast<size_t>(i)] - a.x0[static_cast<size_t>(i)]);
            if (r2 >= a.radius * a.radius) continue;
            double v = 0;
            for (size_t b = 0; b < pcoef->size(); ++b) {
                double t = 1;
                for (int i = 0; i < g.n; ++i)
                    for (int k = 0; k < betas[b][static_cast<size_t>(i)]; ++k)
                        t *= (y[static_cast<size_t>(i)] - a.x0[static_cast<size_t>(i)]) / a.radius;
                v += (*pcoef)[b] * t;
            }
            pv[static_cast<size_t>(j)] = v;
            sup = std::max(sup, std::abs(v));
        }
        if (sup <= 0) return 0;
        for (auto& v : pv) v /= sup;
    }
    double ball_sigma = 0, acc = 0;
    std::vector<double> inner(static_cast<size_t>(N), 0.0);
    for (long i = 0; i < N; ++i) {
        auto x = sigma.cell_center(i);
        double r2 = 0;
        for (int d = 0; d < g.n; ++d) r2 += (x[static_cast<size_t>(d)] - a.x0[static_cast<size_t>(d)]) * (x[static_cast<size_t>(d)] - a.x0[static_cast<size_t>(d)]);
        const bool in_ball = r2 < a.radius * a.radius;
        if (in_ball) ball_sigma += sigma.cell_mass_linear(i);
        if (!in_ball || omega.cell_mass_linear(i) <= 0) continue;
        double s = 0;
        for (long j = 0; j < N; ++j) {
            if (j == i) continue;
            auto y = sigma.cell_center(j);
            double d2 = 0;
            for (int d = 0; d < g.n; ++d) d2 += (x[static_cast<size_t>(d)] - y[static_cast<size_t>(d)]) * (x[static_cast<size_t>(d)] - y[static_cast<size_t>(d)]);
            const double dist = std::sqrt(d2);
            if (dist <= a.eps || dist >= a.radius) continue;  // rough annulus
            s += kernel.eval(x, y) * pv[static_cast<size_t>(j)] * sigma.cell_mass_linear(j);
        }
        inner[static_cast<size_t>(i)] = s;
        acc += s * s * omega.cell_mass_linear(i);
    }
    if (ball_sigma <= 0) return 0;  // empty-ball skipped
    return acc / ball_sigma;
}

struct CancellationReport {
    ConstantReport plain;  // A_K
    ConstantReport poly;   // A_K^(kappa)
};

inline CancellationReport cancellation_constant(const KernelSpec& kernel,
                                                const LatticeMeasure& sigma,
                                                const LatticeMeasure& omega,
                                                const std::vector<AnnulusEntry>& ladder,
                                                int kappa, int poly_samples, Rng rng) {
    CancellationReport out;
    out.plain.name = "A_K";
    out.poly.name = "A_K^(" + std::to_string(kappa) + ")";
    out.plain.provenance = out.poly.provenance =
        "annulus-ladder;seed=" + std::to_string(rng.seed());
    const int P = static_cast<int>(monomial_indices(sigma.grid().n, kappa).size());
    Rng prng = rng.substream("polys");
    for (const auto& a : ladder) {
        Witness w;
        w.x0 = a.x0[0];
        w.radius = a.radius;
        w.eps = a.eps;
        w.token = "ball@" + std::to_string(a.x0[0]) + "r" + std::to_string(a.radius);
        const double plain = cancellation_sample(kernel, sigma, omega, a);
        take_max(out.plain, plain, w);
        take_max(out.poly, plain, w);  // p = 1 is in the polynomial family
        for (int t = 0; t < poly_samples; ++t) {
            std::vector<double> coef(static_cast<size_t>(P));
            for (auto& c : coef) c = prng.normal();
            Witness wp = w;
            wp.poly_f = coef;
            wp.token += "#poly";
            take_max(out.poly, cancellation_sample(kernel, sigma, omega, a, &coef, kappa),
                     std::move(wp));
        }
    }
    return out;
}

} // namespace dyadlab
