#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "dyadlab/linalg.hpp"
#include "dyadlab/measure.hpp"
#include "dyadlab/rng.hpp"
#include "dyadlab/weights.hpp"

namespace dyadlab {

// Weighted Alpert wavelets.  All integrals are midpoint-rule cell sums, so the
// construction is the exact discrete L^2 theory on cell centers: Gram
// identities, telescoping and Parseval hold to rounding error by construction,
// and the tests pin them at 1e-10.

// multi-indices |beta| < kappa, graded (degree ascending), lex within a degree
inline std::vector<std::vector<int>> monomial_indices(int n, int kappa) {
    std::vector<std::vector<int>> out;
    std::vector<int> beta(static_cast<size_t>(n), 0);
    auto rec = [&](auto&& self, int axis, int remaining) -> void {
        if (axis == n - 1) {
            beta[static_cast<size_t>(axis)] = remaining;
            out.push_back(beta);
            return;
        }
        for (int k = remaining; k >= 0; --k) {
            beta[static_cast<size_t>(axis)] = k;
            self(self, axis + 1, remaining - k);
        }
    };
    for (int deg = 0; deg < kappa; ++deg) rec(rec, 0, deg);
    return out;
}

// polynomial of degree < kappa on a cube, in coordinates (x - c_Q)/l(Q)
struct CubePoly {
    DyadicCube cube;
    int kappa = 1;
    std::vector<double> coeffs;  // per monomial index
};

// per-child coefficient blocks over the children of `cube`, same coordinates
struct PiecewisePoly {
    DyadicCube cube;
    int kappa = 1;
    std::vector<std::vector<double>> blocks;  // [child][monomial]
};

struct AlpertBasis {
    DyadicCube cube;
    int kappa = 1;
    int dim = 0;
    double gram_tolerance = 1e-12;
    bool zero_mass = false;
    std::vector<PiecewisePoly> funcs;
    // cached evaluation data
    std::vector<long> cells;                   // linear cell indices of the cube
    std::vector<std::vector<double>> values;   // values[f][cell position]
};

namespace detail {

inline double eval_monomial(const std::vector<double>& x, const std::vector<double>& center,
                            double side, const std::vector<int>& beta) {
    double v = 1;
    for (size_t i = 0; i < beta.size(); ++i) {
        const double t = (x[i] - center[i]) / side;
        for (int k = 0; k < beta[i]; ++k) v *= t;
    }
    return v;
}

} // namespace detail

// scaled monomial values on the cells of a cube, in for_each_cell order; the
// grid override lets shifted-grid cubes carry their own centers
inline std::vector<std::vector<double>> monomials_on_cells_in(const LatticeMeasure& mu,
                                                              const Grid& g, const DyadicCube& q,
                                                              int kappa,
                                                              std::vector<long>* cells_out) {
    auto betas = monomial_indices(g.n, kappa);
    auto center = cube_center(g, q);
    const double side = side_length(g, q);
    std::vector<long> cells;
    mu.for_each_cell(cube_cells(g, q), [&](long lin) { cells.push_back(lin); });
    std::vector<std::vector<double>> vals(betas.size(), std::vector<double>(cells.size()));
    for (size_t c = 0; c < cells.size(); ++c) {
        auto x = mu.cell_center(cells[c]);
        for (size_t b = 0; b < betas.size(); ++b)
            vals[b][c] = detail::eval_monomial(x, center, side, betas[b]);
    }
    if (cells_out) *cells_out = std::move(cells);
    return vals;
}

inline std::vector<std::vector<double>> monomials_on_cells(const LatticeMeasure& mu,
                                                           const DyadicCube& q, int kappa,
                                                           std::vector<long>* cells_out = nullptr) {
    return monomials_on_cells_in(mu, mu.grid(), q, kappa, cells_out);
}

inline std::vector<double> cube_poly_values(const LatticeMeasure& mu, const CubePoly& p,
                                            std::vector<long>* cells_out = nullptr) {
    std::vector<long> cells;
    auto mono = monomials_on_cells(mu, p.cube, p.kappa, &cells);
    std::vector<double> out(cells.size(), 0.0);
    for (size_t b = 0; b < p.coeffs.size(); ++b)
        for (size_t c = 0; c < cells.size(); ++c) out[c] += p.coeffs[b] * mono[b][c];
    if (cells_out) *cells_out = std::move(cells);
    return out;
}

// Orthonormal basis of V (- W in L^2(mu), where V is spanned by child
// indicators times polynomials of degree < kappa and W by the cube's own
// polynomials.  Modified Gram-Schmidt in child-major then degree-major order,
// reorthogonalized once; directions whose residual falls below
// gram_tolerance times the largest generator norm are dimension loss.
inline AlpertBasis build_alpert(const LatticeMeasure& mu, const DyadicCube& q, int kappa,
                                double gram_tolerance = 1e-12) {
    const Grid& g = mu.grid();
    require(kappa >= 1, "bad-parameter", "kappa >= 1");
    require(q.level < g.depth, "level-overflow", "cube at maximal depth has no children");
    AlpertBasis basis;
    basis.cube = q;
    basis.kappa = kappa;
    basis.gram_tolerance = gram_tolerance;

    auto betas = monomial_indices(g.n, kappa);
    const int P = static_cast<int>(betas.size());
    auto mono = monomials_on_cells(mu, q, kappa, &basis.cells);
    const size_t ncells = basis.cells.size();
    std::vector<double> mass(ncells);
    double qmass = 0;
    for (size_t c = 0; c < ncells; ++c) {
        mass[c] = mu.cell_mass_linear(basis.cells[c]);
        qmass += mass[c];
    }
    if (qmass <= 0) {
        basis.zero_mass = true;
        return basis;
    }

    // child of each cell (bit pattern over axes)
    auto kids = children(g, q);
    const int K = static_cast<int>(kids.size());
    std::vector<int> cell_child(ncells);
    {
        std::vector<CellBox> kid_boxes;
        kid_boxes.reserve(static_cast<size_t>(K));
        for (auto& k : kids) kid_boxes.push_back(cube_cells(g, k));
        for (size_t c = 0; c < ncells; ++c) {
            auto idx = mu.cell_coords(basis.cells[c]);
            for (int k = 0; k < K; ++k) {
                bool in = true;
                for (int i = 0; i < g.n; ++i)
                    if (idx[static_cast<size_t>(i)] < kid_boxes[static_cast<size_t>(k)].lo[static_cast<size_t>(i)] ||
                        idx[static_cast<size_t>(i)] >= kid_boxes[static_cast<size_t>(k)].hi[static_cast<size_t>(i)]) {
                        in = false;
                        break;
                    }
                if (in) {
                    cell_child[c] = k;
                    break;
                }
            }
        }
    }

    auto dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0;
        for (size_t c = 0; c < ncells; ++c) s += a[c] * b[c] * mass[c];
        return s;
    };

    // Gram of W = span{1_Q m^b}
    std::vector<double> gw(static_cast<size_t>(P) * P);
    for (int i = 0; i < P; ++i)
        for (int j = 0; j < P; ++j)
            gw[static_cast<size_t>(i) * P + j] = dot(mono[static_cast<size_t>(i)], mono[static_cast<size_t>(j)]);

    struct Cand {
        std::vector<double> vals;                 // on cells
        std::vector<std::vector<double>> blocks;  // coefficient tracking
    };

    double ref_norm = 0;
    std::vector<Cand> accepted;
    for (int child = 0; child < K; ++child) {
        for (int b = 0; b < P; ++b) {
            Cand cand;
            cand.vals.assign(ncells, 0.0);
            for (size_t c = 0; c < ncells; ++c)
                if (cell_child[c] == child) cand.vals[c] = mono[static_cast<size_t>(b)][c];
            cand.blocks.assign(static_cast<size_t>(K), std::vector<double>(static_cast<size_t>(P), 0.0));
            cand.blocks[static_cast<size_t>(child)][static_cast<size_t>(b)] = 1.0;
            const double gen_norm = std::sqrt(std::max(dot(cand.vals, cand.vals), 0.0));
            ref_norm = std::max(ref_norm, gen_norm);
            if (gen_norm <= 0) continue;

            // project off W
            std::vector<double> rhs(static_cast<size_t>(P));
            for (int j = 0; j < P; ++j) rhs[static_cast<size_t>(j)] = dot(cand.vals, mono[static_cast<size_t>(j)]);
            auto a = solve_spd_pinv(gw, P, rhs);
            for (int j = 0; j < P; ++j) {
                if (a[static_cast<size_t>(j)] == 0) continue;
                for (size_t c = 0; c < ncells; ++c)
                    cand.vals[c] -= a[static_cast<size_t>(j)] * mono[static_cast<size_t>(j)][c];
                for (int k = 0; k < K; ++k)
                    cand.blocks[static_cast<size_t>(k)][static_cast<size_t>(j)] -= a[static_cast<size_t>(j)];
            }
            // MGS against accepted, two passes
            for (int pass = 0; pass < 2; ++pass) {
                for (auto& acc : accepted) {
                    const double d = dot(cand.vals, acc.vals);
                    if (d == 0) continue;
                    for (size_t c = 0; c < ncells; ++c) cand.vals[c] -= d * acc.vals[c];
                    for (int k = 0; k < K; ++k)
                        for (int j = 0; j < P; ++j)
                            cand.blocks[static_cast<size_t>(k)][static_cast<size_t>(j)] -=
                                d * acc.blocks[static_cast<size_t>(k)][static_cast<size_t>(j)];
                }
                // re-project off W once more for stability
                for (int j = 0; j < P; ++j) rhs[static_cast<size_t>(j)] = dot(cand.vals, mono[static_cast<size_t>(j)]);
                auto a2 = solve_spd_pinv(gw, P, rhs);
                for (int j = 0; j < P; ++j) {
                    if (a2[static_cast<size_t>(j)] == 0) continue;
                    for (size_t c = 0; c < ncells; ++c)
                        cand.vals[c] -= a2[static_cast<size_t>(j)] * mono[static_cast<size_t>(j)][c];
                    for (int k = 0; k < K; ++k)
                        cand.blocks[static_cast<size_t>(k)][static_cast<size_t>(j)] -= a2[static_cast<size_t>(j)];
                }
            }
            const double res_norm = std::sqrt(std::max(dot(cand.vals, cand.vals), 0.0));
            if (res_norm <= gram_tolerance * ref_norm) continue;  // dimension loss
            const double inv = 1.0 / res_norm;
            for (auto& v : cand.vals) v *= inv;
            for (auto& blk : cand.blocks)
                for (auto& co : blk) co *= inv;
            // sign: leading coefficient (child-major, degree-major) positive
            double lead = 0, amax = 0;
            for (int k = 0; k < K && lead == 0; ++k)
                for (int j = 0; j < P; ++j)
                    amax = std::max(amax, std::abs(cand.blocks[static_cast<size_t>(k)][static_cast<size_t>(j)]));
            for (int k = 0; k < K && lead == 0; ++k)
                for (int j = 0; j < P; ++j)
                    if (std::abs(cand.blocks[static_cast<size_t>(k)][static_cast<size_t>(j)]) > 1e-12 * amax) {
                        lead = cand.blocks[static_cast<size_t>(k)][static_cast<size_t>(j)];
                        break;
                    }
            if (lead < 0) {
                for (auto& v : cand.vals) v = -v;
                for (auto& blk : cand.blocks)
                    for (auto& co : blk) co = -co;
            }
            accepted.push_back(std::move(cand));
        }
    }

    basis.dim = static_cast<int>(accepted.size());
    for (auto& acc : accepted) {
        PiecewisePoly pp;
        pp.cube = q;
        pp.kappa = kappa;
        pp.blocks = std::move(acc.blocks);
        basis.funcs.push_back(std::move(pp));
        basis.values.push_back(std::move(acc.vals));
    }
    return basis;
}

// coefficients <f, h^a>_mu and the projection as a cell vector over Q's cells
struct DeltaProjection {
    std::vector<double> coeffs;
    std::vector<double> values;  // on basis.cells
};

inline DeltaProjection project_delta(const AlpertBasis& basis, const LatticeMeasure& mu,
                                     const std::vector<double>& f) {
    DeltaProjection out;
    out.values.assign(basis.cells.size(), 0.0);
    out.coeffs.assign(static_cast<size_t>(basis.dim), 0.0);
    for (int a = 0; a < basis.dim; ++a) {
        double s = 0;
        for (size_t c = 0; c < basis.cells.size(); ++c)
            s += f[static_cast<size_t>(basis.cells[c])] * basis.values[static_cast<size_t>(a)][c] *
                 mu.cell_mass_linear(basis.cells[c]);
        out.coeffs[static_cast<size_t>(a)] = s;
        for (size_t c = 0; c < basis.cells.size(); ++c)
            out.values[c] += s * basis.values[static_cast<size_t>(a)][c];
    }
    return out;
}

// E_{Q;kappa}: mu-orthogonal projection onto polynomials of degree < kappa on Q
inline CubePoly project_E(const LatticeMeasure& mu, const DyadicCube& q, int kappa,
                          const std::vector<double>& f) {
    require(mu.cube_mass(q) > 0, "zero-mass-cube", "projection needs positive cube mass");
    std::vector<long> cells;
    auto mono = monomials_on_cells(mu, q, kappa, &cells);
    const int P = static_cast<int>(mono.size());
    std::vector<double> gq(static_cast<size_t>(P) * P), rhs(static_cast<size_t>(P));
    for (int i = 0; i < P; ++i) {
        double bi = 0;
        for (size_t c = 0; c < cells.size(); ++c)
            bi += f[static_cast<size_t>(cells[c])] * mono[static_cast<size_t>(i)][c] *
                  mu.cell_mass_linear(cells[c]);
        rhs[static_cast<size_t>(i)] = bi;
        for (int j = 0; j < P; ++j) {
            double s = 0;
            for (size_t c = 0; c < cells.size(); ++c)
                s += mono[static_cast<size_t>(i)][c] * mono[static_cast<size_t>(j)][c] *
                     mu.cell_mass_linear(cells[c]);
            gq[static_cast<size_t>(i) * P + j] = s;
        }
    }
    CubePoly p;
    p.cube = q;
    p.kappa = kappa;
    p.coeffs = solve_spd_pinv(gq, P, rhs);
    return p;
}

// Lazily built cache of per-cube bases for a fixed (mu, kappa, top)
class AlpertTree {
public:
    AlpertTree(const LatticeMeasure& mu, int kappa, DyadicCube top, double tol = 1e-12)
        : mu_(&mu), kappa_(kappa), top_(std::move(top)), tol_(tol) {}

    const AlpertBasis& basis(const DyadicCube& q) {
        auto it = cache_.find(q);
        if (it != cache_.end()) return it->second;
        return cache_.emplace(q, build_alpert(*mu_, q, kappa_, tol_)).first->second;
    }

    const LatticeMeasure& measure() const { return *mu_; }
    int kappa() const { return kappa_; }
    const DyadicCube& top() const { return top_; }

    template <typename F>
    void for_each_tree_cube(F&& fn) {
        // cubes of the subtree of `top` that have children (level < depth)
        std::vector<DyadicCube> stack{top_};
        while (!stack.empty()) {
            DyadicCube q = stack.back();
            stack.pop_back();
            if (q.level >= mu_->grid().depth) continue;
            fn(q);
            for (auto& c : children(mu_->grid(), q)) stack.push_back(c);
        }
    }

private:
    const LatticeMeasure* mu_;
    int kappa_;
    DyadicCube top_;
    double tol_;
    std::map<DyadicCube, AlpertBasis> cache_;
};

struct WaveletExpansion {
    DyadicCube top;
    int kappa = 1;
    CubePoly base;                               // E_{top;kappa} f
    std::map<DyadicCube, std::vector<double>> coefficients;  // cube -> coeff array
};

inline WaveletExpansion expand(AlpertTree& tree, const std::vector<double>& f) {
    WaveletExpansion ex;
    ex.top = tree.top();
    ex.kappa = tree.kappa();
    ex.base = project_E(tree.measure(), tree.top(), tree.kappa(), f);
    tree.for_each_tree_cube([&](const DyadicCube& q) {
        const AlpertBasis& b = tree.basis(q);
        if (b.dim == 0) return;
        auto pr = project_delta(b, tree.measure(), f);
        ex.coefficients.emplace(q, std::move(pr.coeffs));
    });
    return ex;
}

// cell-sampled reconstruction over the cells of the top cube
inline std::vector<double> reconstruct(AlpertTree& tree, const WaveletExpansion& ex) {
    const LatticeMeasure& mu = tree.measure();
    std::vector<double> out(static_cast<size_t>(mu.cell_count()), 0.0);
    std::vector<long> cells;
    auto base_vals = cube_poly_values(mu, ex.base, &cells);
    for (size_t c = 0; c < cells.size(); ++c) out[static_cast<size_t>(cells[c])] = base_vals[c];
    for (const auto& [q, coeffs] : ex.coefficients) {
        const AlpertBasis& b = tree.basis(q);
        for (int a = 0; a < b.dim; ++a)
            for (size_t c = 0; c < b.cells.size(); ++c)
                out[static_cast<size_t>(b.cells[c])] +=
                    coeffs[static_cast<size_t>(a)] * b.values[static_cast<size_t>(a)][c];
    }
    return out;
}

// max pointwise residual of 1_Q sum_{Q strict I subset P} delta_I f - (E_Q f - E_P f),
// over positive-mass cells of Q
inline double telescoping_check(AlpertTree& tree, const DyadicCube& P, const DyadicCube& Q,
                                const std::vector<double>& f) {
    require(strictly_contains(P, Q), "bad-parameter", "telescoping needs Q strictly inside P");
    const LatticeMeasure& mu = tree.measure();
    std::vector<long> qcells;
    mu.for_each_cell(cube_cells(mu.grid(), Q), [&](long lin) { qcells.push_back(lin); });
    std::vector<double> lhs(qcells.size(), 0.0);
    for (int lev = P.level; lev < Q.level; ++lev) {
        const DyadicCube I = ancestor(Q, lev);
        const AlpertBasis& b = tree.basis(I);
        if (b.dim == 0) continue;
        auto pr = project_delta(b, mu, f);
        // add projection values on Q's cells
        std::map<long, double> vals;
        for (size_t c = 0; c < b.cells.size(); ++c) vals[b.cells[c]] = pr.values[c];
        for (size_t c = 0; c < qcells.size(); ++c) {
            auto it = vals.find(qcells[c]);
            if (it != vals.end()) lhs[c] += it->second;
        }
    }
    auto eq = cube_poly_values(mu, project_E(mu, Q, tree.kappa(), f));
    std::vector<long> pcells;
    auto ep = cube_poly_values(mu, project_E(mu, P, tree.kappa(), f), &pcells);
    std::map<long, double> ep_at;
    for (size_t c = 0; c < pcells.size(); ++c) ep_at[pcells[c]] = ep[c];
    double worst = 0;
    for (size_t c = 0; c < qcells.size(); ++c) {
        if (mu.cell_mass_linear(qcells[c]) <= 0) continue;
        const double rhs = eq[c] - ep_at[qcells[c]];
        worst = std::max(worst, std::abs(lhs[c] - rhs));
    }
    return worst;
}

// the two L^infinity control ratios for the polynomial projection E_{Q;kappa}
struct SupNormDiag {
    double linf_over_avg = 0;    // ||E f||_Linf(Q,mu) / E_Q^mu |f|
    double linf_sq_mass_over_l2 = 0;  // ||E f||_inf^2 |Q|_mu / ||E f||_L2(mu)^2
};

inline SupNormDiag sup_norm_diag(const LatticeMeasure& mu, const DyadicCube& q, int kappa,
                                 const std::vector<double>& f) {
    const double qmass = mu.cube_mass(q);
    require(qmass > 0, "zero-average", "cube has no mass");
    std::vector<long> cells;
    auto ef = cube_poly_values(mu, project_E(mu, q, kappa, f), &cells);
    double avg_abs = 0, sup = 0, l2 = 0;
    for (size_t c = 0; c < cells.size(); ++c) {
        const double m = mu.cell_mass_linear(cells[c]);
        avg_abs += std::abs(f[static_cast<size_t>(cells[c])]) * m;
        if (m > 0) sup = std::max(sup, std::abs(ef[c]));
        l2 += ef[c] * ef[c] * m;
    }
    avg_abs /= qmass;
    require(avg_abs > 0, "zero-average", "E|f| vanishes on the cube");
    SupNormDiag d;
    d.linf_over_avg = sup / avg_abs;
    d.linf_sq_mass_over_l2 = l2 > 0 ? sup * sup * qmass / l2 : kInf;
    return d;
}

// --- energy nondegeneracy ---------------------------------------------------
//
// ratio |Q|_mu / int_Q |P|^2 dmu over Q-normalized P (sup over Q's cell
// centers equal to 1).  Finite uniformly for doubling mu; degenerate measures
// drive it to +inf.

inline double energy_ratio(const LatticeMeasure& mu, const DyadicCube& q,
                           const std::vector<double>& coeffs, int kappa) {
    std::vector<long> cells;
    auto mono = monomials_on_cells(mu, q, kappa, &cells);
    double sup = 0;
    std::vector<double> pv(cells.size(), 0.0);
    for (size_t b = 0; b < coeffs.size(); ++b)
        for (size_t c = 0; c < cells.size(); ++c) pv[c] += coeffs[b] * mono[b][c];
    for (double v : pv) sup = std::max(sup, std::abs(v));
    require(sup > 0, "bad-parameter", "zero polynomial");
    double energy = 0, qmass = 0;
    for (size_t c = 0; c < cells.size(); ++c) {
        const double m = mu.cell_mass_linear(cells[c]);
        energy += (pv[c] / sup) * (pv[c] / sup) * m;
        qmass += m;
    }
    if (qmass <= 0) return 0;
    return energy > 0 ? qmass / energy : kInf;
}

// text table export: cube token, function index, child index, monomial
// multi-index, coefficient
inline std::string basis_table(const Grid& g, const AlpertBasis& basis) {
    std::string out = "cube\tfunction\tchild\tmonomial\tcoefficient\n";
    auto betas = monomial_indices(g.n, basis.kappa);
    char buf[64];
    for (size_t f = 0; f < basis.funcs.size(); ++f) {
        const auto& blocks = basis.funcs[f].blocks;
        for (size_t child = 0; child < blocks.size(); ++child)
            for (size_t b = 0; b < blocks[child].size(); ++b) {
                out += cube_token(g, basis.cube) + "\t" + std::to_string(f) + "\t" +
                       std::to_string(child) + "\t";
                for (size_t i = 0; i < betas[b].size(); ++i) {
                    if (i) out += ",";
                    out += std::to_string(betas[b][i]);
                }
                std::snprintf(buf, sizeof buf, "\t%.17g\n", blocks[child][b]);
                out += buf;
            }
    }
    return out;
}

struct NondegeneracyReport {
    double c_hat = 0;  // max sampled ratio
    bool degenerate_flag = false;
    std::string witness;
};

inline NondegeneracyReport nondegeneracy_constant(const LatticeMeasure& mu, int kappa,
                                                  int cube_sweep, int poly_samples, Rng rng) {
    const Grid& g = mu.grid();
    NondegeneracyReport rep;
    auto betas = monomial_indices(g.n, kappa);
    const int P = static_cast<int>(betas.size());
    SubsetSampler sampler(mu, rng.substream("cubes"));
    Rng prng = rng.substream("polys");
    for (int s = 0; s < cube_sweep; ++s) {
        DyadicCube q = sampler.random_cube();
        if (mu.cube_mass(q) <= 0) continue;
        std::vector<long> cells;
        mu.for_each_cell(cube_cells(g, q), [&](long lin) { cells.push_back(lin); });
        for (int t = 0; t < poly_samples; ++t) {
            std::vector<double> coeffs(static_cast<size_t>(P));
            for (auto& c : coeffs) c = prng.normal();
            double r = energy_ratio(mu, q, coeffs, kappa);
            if (r > rep.c_hat) {
                rep.c_hat = r;
                rep.witness = cube_token(g, q);
            }
        }
        if (kappa >= 2 && g.n == 1 && cells.size() >= 2) {
            // adversarial sample: a normalized polynomial vanishing at the
            // heaviest cell (drives the ratio to +inf for one-hot measures)
            long hot = cells[0];
            for (long lin : cells)
                if (mu.density(lin) > mu.density(hot)) hot = lin;
            auto center = cube_center(g, q);
            const double side = side_length(g, q);
            const double z = (mu.cell_center(hot)[0] - center[0]) / side;
            std::vector<double> coeffs(static_cast<size_t>(P), 0.0);
            coeffs[0] = -z;
            coeffs[1] = 1.0;  // P(t) = t - z in scaled coordinates
            double r = energy_ratio(mu, q, coeffs, kappa);
            if (r > rep.c_hat) {
                rep.c_hat = r;
                rep.witness = cube_token(g, q) + "#vanishing";
            }
        }
    }
    rep.degenerate_flag = !std::isfinite(rep.c_hat) || rep.c_hat > 1e6;
    return rep;
}

} // namespace dyadlab
