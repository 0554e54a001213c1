#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "dyadlab/alpert.hpp"
#include "dyadlab/constants.hpp"
#include "dyadlab/operator.hpp"
#include "dyadlab/weights.hpp"

namespace dyadlab {

// --- Calderon-Zygmund stopping forests -----------------------------------

struct StoppingForest {
    DyadicCube top;
    double gamma = 4;
    std::vector<DyadicCube> members;          // sorted, includes top
    std::map<DyadicCube, double> alpha;       // F -> E_F |f|
    double c0 = 0;                            // Carleson constant of the members
};

inline double cube_average_abs(const LatticeMeasure& mu, const std::vector<double>& f,
                               const DyadicCube& q) {
    const double m = mu.cube_mass(q);
    if (m <= 0) return 0;
    double acc = 0;
    mu.for_each_cell(cube_cells(mu.grid(), q), [&](long lin) {
        acc += std::abs(f[static_cast<size_t>(lin)]) * mu.cell_mass_linear(lin);
    });
    return acc / m;
}

// members = top plus, recursively, the maximal descendants whose |f|-average
// exceeds gamma times their stopping parent's average
inline StoppingForest cz_stopping(const LatticeMeasure& mu, const std::vector<double>& f,
                                  double gamma, const DyadicCube& top) {
    require(gamma >= 4, "bad-parameter", "CZ stopping needs gamma >= 4");
    require(mu.cube_mass(top) > 0, "bad-parameter", "top cube must carry mass");
    const Grid& g = mu.grid();
    StoppingForest forest;
    forest.top = top;
    forest.gamma = gamma;
    std::vector<std::pair<DyadicCube, double>> agenda{{top, cube_average_abs(mu, f, top)}};
    while (!agenda.empty()) {
        auto [F, aF] = agenda.back();
        agenda.pop_back();
        forest.members.push_back(F);
        forest.alpha.emplace(F, aF);
        // maximal descendants with average > gamma * aF
        std::vector<DyadicCube> stack;
        if (F.level < g.depth)
            for (auto& c : children(g, F)) stack.push_back(c);
        while (!stack.empty()) {
            DyadicCube q = stack.back();
            stack.pop_back();
            if (mu.cube_mass(q) <= 0) continue;
            const double a = cube_average_abs(mu, f, q);
            if (a > gamma * aF) {
                agenda.emplace_back(q, a);
            } else if (q.level < g.depth) {
                for (auto& c : children(g, q)) stack.push_back(c);
            }
        }
    }
    std::sort(forest.members.begin(), forest.members.end());
    forest.c0 = carleson_norm(forest.members, mu);
    return forest;
}

// smallest member containing q (the stopping parent pi_F(q))
inline const DyadicCube* stopping_parent(const StoppingForest& forest, const DyadicCube& q) {
    const DyadicCube* best = nullptr;
    for (const auto& f : forest.members)
        if (contains(f, q) && (!best || f.level > best->level)) best = &f;
    return best;
}

inline std::map<DyadicCube, std::vector<DyadicCube>> coronas(const StoppingForest& forest,
                                                             const Grid& g) {
    std::map<DyadicCube, std::vector<DyadicCube>> out;
    for (const auto& f : forest.members) out[f] = {};
    std::vector<DyadicCube> stack{forest.top};
    while (!stack.empty()) {
        DyadicCube q = stack.back();
        stack.pop_back();
        const DyadicCube* owner = stopping_parent(forest, q);
        if (owner) out[*owner].push_back(q);
        if (q.level < g.depth)
            for (auto& c : children(g, q)) stack.push_back(c);
    }
    return out;
}

// indented cube-token tree with the stopping values
inline std::string forest_to_text(const StoppingForest& forest, const Grid& g) {
    std::string out;
    char buf[64];
    auto rec = [&](auto&& self, const DyadicCube& f, int depth) -> void {
        out.append(static_cast<size_t>(2 * depth), ' ');
        std::snprintf(buf, sizeof buf, " alpha=%.17g\n", forest.alpha.at(f));
        out += cube_token(g, f) + buf;
        for (const auto& child : forest.members)
            if (strictly_contains(f, child)) {
                // direct forest children only: no intermediate member between
                bool direct = true;
                for (const auto& mid : forest.members)
                    if (strictly_contains(f, mid) && strictly_contains(mid, child)) direct = false;
                if (direct) self(self, child, depth + 1);
            }
    };
    rec(rec, forest.top, 0);
    return out;
}

// --- Carleson embeddings ------------------------------------------------

// max over random nonnegative f of sum_I c_I (E_I^s f)^2 / (||f||^2 ||c||_Car)
struct CarlesonCheck {
    double carleson_norm = 0;  // ||c||_Car(sigma)
    double max_ratio = 0;
    bool vacuous = false;
};

inline CarlesonCheck carleson_embedding_check(const LatticeMeasure& sigma,
                                              const std::map<DyadicCube, double>& c,
                                              int f_samples, Rng rng) {
    const Grid& g = sigma.grid();
    CarlesonCheck out;
    // ||c||_Car over all lattice cubes with positive mass
    for_each_cube(g, [&](const DyadicCube& j) {
        const double jm = sigma.cube_mass(j);
        if (jm <= 0) return;
        double sum = 0;
        for (const auto& [i, ci] : c)
            if (contains(j, i)) sum += ci;
        out.carleson_norm = std::max(out.carleson_norm, sum / jm);
    });
    if (out.carleson_norm <= 0) {
        out.vacuous = true;
        return out;
    }
    for (int t = 0; t < f_samples; ++t) {
        std::vector<double> f(static_cast<size_t>(sigma.cell_count()));
        for (auto& v : f) v = std::abs(rng.normal());
        double fn = 0;
        for (long lin = 0; lin < sigma.cell_count(); ++lin)
            fn += f[static_cast<size_t>(lin)] * f[static_cast<size_t>(lin)] * sigma.cell_mass_linear(lin);
        if (fn <= 0) continue;
        double lhs = 0;
        for (const auto& [i, ci] : c) {
            const double m = sigma.cube_mass(i);
            if (m <= 0) continue;
            double avg = 0;
            sigma.for_each_cell(cube_cells(g, i), [&](long lin) {
                avg += f[static_cast<size_t>(lin)] * sigma.cell_mass_linear(lin);
            });
            avg /= m;
            lhs += ci * avg * avg;
        }
        out.max_ratio = std::max(out.max_ratio, lhs / (fn * out.carleson_norm));
    }
    return out;
}

struct BilinearCetCheck {
    double lhs = 0;
    double cprime = 0;  // max_J sum_{I in J} a_I / sqrt(|J|_s |J|_w)
    double c_fit = 0;   // lhs / (cprime ||f|| ||g||)
    bool vacuous = false;
};

inline BilinearCetCheck bilinear_cet_check(const LatticeMeasure& sigma,
                                           const LatticeMeasure& omega,
                                           const std::map<DyadicCube, double>& a,
                                           const std::vector<double>& f,
                                           const std::vector<double>& gfun,
                                           bool use_sup_averages) {
    const Grid& g = sigma.grid();
    BilinearCetCheck out;
    auto avg = [&](const LatticeMeasure& mu, const std::vector<double>& h, const DyadicCube& q) {
        const double m = mu.cube_mass(q);
        if (m <= 0) return 0.0;
        double s = 0;
        mu.for_each_cell(cube_cells(g, q), [&](long lin) {
            s += h[static_cast<size_t>(lin)] * mu.cell_mass_linear(lin);
        });
        return s / m;
    };
    auto sup_avg = [&](const LatticeMeasure& mu, const std::vector<double>& h,
                       const DyadicCube& q) {
        double best = 0;
        for (int lev = q.level; lev >= 0; --lev) best = std::max(best, avg(mu, h, ancestor(q, lev)));
        return best;
    };
    for (const auto& [i, ai] : a) {
        const double af = use_sup_averages ? sup_avg(sigma, f, i) : avg(sigma, f, i);
        const double ag = use_sup_averages ? sup_avg(omega, gfun, i) : avg(omega, gfun, i);
        out.lhs += ai * af * ag;
    }
    for_each_cube(g, [&](const DyadicCube& j) {
        const double js = sigma.cube_mass(j), jw = omega.cube_mass(j);
        if (js <= 0 || jw <= 0) return;
        double sum = 0;
        for (const auto& [i, ai] : a)
            if (contains(j, i)) sum += ai;
        out.cprime = std::max(out.cprime, sum / std::sqrt(js * jw));
    });
    double fn = 0, gn = 0;
    for (long lin = 0; lin < sigma.cell_count(); ++lin) {
        fn += f[static_cast<size_t>(lin)] * f[static_cast<size_t>(lin)] * sigma.cell_mass_linear(lin);
        gn += gfun[static_cast<size_t>(lin)] * gfun[static_cast<size_t>(lin)] * omega.cell_mass_linear(lin);
    }
    const double denom = out.cprime * std::sqrt(fn * gn);
    if (denom <= 0) {
        out.vacuous = out.lhs == 0;
        return out;
    }
    out.c_fit = out.lhs / denom;
    return out;
}

// --- parallel corona decomposition -----------------------------------------

enum class PairClass { near, disjoint, far };

struct CoronaPairValue {
    DyadicCube a, b;
    PairClass cls;
    double value = 0;
};

struct CoronaSplit {
    double near = 0, disjoint = 0, far = 0, full = 0;
    std::vector<CoronaPairValue> pairs;
    double total() const { return near + disjoint + far; }
};

inline PairClass classify_pair(const StoppingForest& A, const StoppingForest& B,
                               const DyadicCube& a, const DyadicCube& b) {
    const bool a_in_b = contains(b, a);
    const bool b_in_a = contains(a, b);
    if (!a_in_b && !b_in_a) return PairClass::disjoint;  // dyadic cubes: disjoint or nested
    if (b_in_a) {
        for (const auto& a1 : A.members)
            if (contains(a1, b) && strictly_contains(a, a1)) return PairClass::far;
    }
    if (a_in_b) {
        for (const auto& b1 : B.members)
            if (contains(b1, a) && strictly_contains(b, b1)) return PairClass::far;
    }
    return PairClass::near;
}

// corona projections of f as full-lattice vectors, one per stopping cube;
// the global polynomial projection of the top cube rides with the top corona
inline std::map<DyadicCube, std::vector<double>> corona_projections(
    AlpertTree& tree, const StoppingForest& forest, const std::vector<double>& f) {
    const LatticeMeasure& mu = tree.measure();
    std::map<DyadicCube, std::vector<double>> out;
    for (const auto& m : forest.members)
        out.emplace(m, std::vector<double>(static_cast<size_t>(mu.cell_count()), 0.0));
    {
        std::vector<long> cells;
        auto base = cube_poly_values(mu, project_E(mu, forest.top, tree.kappa(), f), &cells);
        auto& vec = out[forest.top];
        for (size_t c = 0; c < cells.size(); ++c) vec[static_cast<size_t>(cells[c])] = base[c];
    }
    tree.for_each_tree_cube([&](const DyadicCube& q) {
        const AlpertBasis& basis = tree.basis(q);
        if (basis.dim == 0) return;
        const DyadicCube* owner = stopping_parent(forest, q);
        if (!owner) return;
        auto pr = project_delta(basis, mu, f);
        auto& vec = out[*owner];
        for (size_t c = 0; c < basis.cells.size(); ++c)
            vec[static_cast<size_t>(basis.cells[c])] += pr.values[c];
    });
    return out;
}

inline CoronaSplit parallel_corona_split(const OpPair& pair, AlpertTree& ftree,
                                         AlpertTree& gtree, const StoppingForest& A,
                                         const StoppingForest& B, const std::vector<double>& f,
                                         const std::vector<double>& gfun) {
    const LatticeMeasure& omega = *pair.omega;
    CoronaSplit split;
    auto pf = corona_projections(ftree, A, f);
    auto pg = corona_projections(gtree, B, gfun);
    // full form directly
    {
        auto tf = pair.T->apply(f);
        for (long lin = 0; lin < omega.cell_count(); ++lin)
            split.full += tf[static_cast<size_t>(lin)] * gfun[static_cast<size_t>(lin)] *
                          omega.cell_mass_linear(lin);
    }
    for (const auto& [a, fa] : pf) {
        auto tfa = pair.T->apply(fa);
        for (const auto& [b, gb] : pg) {
            double v = 0;
            for (long lin = 0; lin < omega.cell_count(); ++lin)
                v += tfa[static_cast<size_t>(lin)] * gb[static_cast<size_t>(lin)] *
                     omega.cell_mass_linear(lin);
            const PairClass cls = classify_pair(A, B, a, b);
            switch (cls) {
                case PairClass::near: split.near += v; break;
                case PairClass::disjoint: split.disjoint += v; break;
                case PairClass::far: split.far += v; break;
            }
            split.pairs.push_back({a, b, cls, v});
        }
    }
    return split;
}

inline std::string split_to_csv(const CoronaSplit& split, const Grid& g) {
    std::string out = "A,B,class,value\n";
    char buf[64];
    for (const auto& p : split.pairs) {
        const char* cls = p.cls == PairClass::near      ? "near"
                          : p.cls == PairClass::disjoint ? "disjoint"
                                                         : "far";
        std::snprintf(buf, sizeof buf, ",%s,%.17g\n", cls, p.value);
        out += cube_token(g, p.a) + "," + cube_token(g, p.b) + buf;
    }
    return out;
}

// --- shifted coronas --------------------------------------------------------
//
// The tau-shifted corona of F drops the cubes within tau levels of F and
// adopts the top tau levels of each stopping child.  Every cube below the top
// is assigned to exactly one shifted corona; the cubes within tau levels of
// the global top are dropped (the top has no parent to adopt them).

inline std::map<DyadicCube, std::vector<DyadicCube>> shifted_coronas(const StoppingForest& forest,
                                                                     const Grid& g, int tau) {
    require(tau >= 1, "bad-parameter", "tau >= 1");
    std::map<DyadicCube, std::vector<DyadicCube>> out;
    for (const auto& m : forest.members) out[m] = {};
    std::vector<DyadicCube> stack{forest.top};
    while (!stack.empty()) {
        DyadicCube q = stack.back();
        stack.pop_back();
        if (q.level < g.depth)
            for (auto& c : children(g, q)) stack.push_back(c);
        // deepest candidate F' with q within its top tau levels
        const DyadicCube* cand = nullptr;
        for (const auto& f : forest.members)
            if (contains(f, q) && q.level <= f.level + tau &&
                (!cand || f.level > cand->level))
                cand = &f;
        if (cand) {
            if (*cand == forest.top) continue;  // dropped block at the very top
            // adopt into the corona of the stopping parent of F'
            DyadicCube up = parent(*cand);
            const DyadicCube* owner = stopping_parent(forest, up);
            if (owner) out[*owner].push_back(q);
        } else {
            const DyadicCube* owner = stopping_parent(forest, q);
            if (owner) out[*owner].push_back(q);
        }
    }
    return out;
}

// --- Monotonicity Lemma diagnostic -------------------------------------------

struct MonotonicityDiag {
    double lhs = 0;    // || delta_J T mu ||^2
    double phi2 = 0;   // main-term bound
    double psi2 = 0;   // remainder bound
    double ratio = 0;  // lhs / (phi2 + psi2)
    bool vacuous = false;
};

// minimizer over J of || |x-m|^kappa ||_{L^2(1_J omega)}, coordinate descent
// with golden-section line searches, tolerance 1e-6 l(J), ties toward c_J
inline std::vector<double> poly_center(const LatticeMeasure& omega, const DyadicCube& j,
                                       int kappa) {
    const Grid& g = omega.grid();
    std::vector<long> cells;
    omega.for_each_cell(cube_cells(g, j), [&](long lin) { cells.push_back(lin); });
    auto objective = [&](const std::vector<double>& m) {
        double acc = 0;
        for (long lin : cells) {
            auto y = omega.cell_center(lin);
            double r2 = 0;
            for (int i = 0; i < g.n; ++i) r2 += (y[static_cast<size_t>(i)] - m[static_cast<size_t>(i)]) * (y[static_cast<size_t>(i)] - m[static_cast<size_t>(i)]);
            acc += std::pow(r2, kappa) * omega.cell_mass_linear(lin);  // |x-m|^(2 kappa)
        }
        return acc;
    };
    std::vector<double> m = cube_center(g, j);
    const double l = side_length(g, j);
    const double golden = 0.6180339887498949;
    for (int sweep = 0; sweep < 3 * g.n; ++sweep) {
        const int ax = sweep % g.n;
        double lo = m[static_cast<size_t>(ax)] - l / 2, hi = m[static_cast<size_t>(ax)] + l / 2;
        // clamp to J
        auto ctr = cube_center(g, j);
        lo = std::max(lo, ctr[static_cast<size_t>(ax)] - l / 2);
        hi = std::min(hi, ctr[static_cast<size_t>(ax)] + l / 2);
        double a = hi - golden * (hi - lo), b = lo + golden * (hi - lo);
        auto eval_at = [&](double v) {
            auto mm = m;
            mm[static_cast<size_t>(ax)] = v;
            return objective(mm);
        };
        double fa = eval_at(a), fb = eval_at(b);
        while (hi - lo > 1e-6 * l) {
            if (fa <= fb) {
                hi = b;
                b = a;
                fb = fa;
                a = hi - golden * (hi - lo);
                fa = eval_at(a);
            } else {
                lo = a;
                a = b;
                fa = fb;
                b = lo + golden * (hi - lo);
                fb = eval_at(b);
            }
        }
        m[static_cast<size_t>(ax)] = (lo + hi) / 2;
    }
    return m;
}

inline MonotonicityDiag monotonicity_diag(const KernelSpec& kernel, const LatticeMeasure& geom,
                                          const std::vector<double>& mu_cell_mass,
                                          const LatticeMeasure& omega, const DyadicCube& j,
                                          int kappa) {
    const Grid& g = geom.grid();
    MonotonicityDiag out;
    // support must avoid 2J
    RealBox twoJ = dilate_real(g, j, 2.0);
    for (long lin = 0; lin < geom.cell_count(); ++lin)
        if (mu_cell_mass[static_cast<size_t>(lin)] != 0)
            require(!twoJ.contains_point(geom.cell_center(lin)), "support-violation",
                    "mu must be supported off 2J");
    // T mu on J's cells (kernel is smooth there; no truncation needed)
    std::vector<long> jcells;
    omega.for_each_cell(cube_cells(g, j), [&](long lin) { jcells.push_back(lin); });
    std::vector<double> tmu(static_cast<size_t>(geom.cell_count()), 0.0);
    for (long lin : jcells) {
        auto x = geom.cell_center(lin);
        double s = 0;
        for (long y = 0; y < geom.cell_count(); ++y) {
            const double m = mu_cell_mass[static_cast<size_t>(y)];
            if (m == 0) continue;
            s += kernel.eval(x, geom.cell_center(y)) * m;
        }
        tmu[static_cast<size_t>(lin)] = s;
    }
    auto basis = build_alpert(omega, j, kappa);
    if (basis.dim == 0) {
        out.vacuous = true;
        return out;
    }
    auto pr = project_delta(basis, omega, tmu);
    for (double c : pr.coeffs) out.lhs += c * c;

    auto m = poly_center(omega, j, kappa);
    // Phi^2: sum over |beta| = kappa of |(1/beta!) int d^beta K(m, y) dmu|^2
    //        * || delta_J x^beta ||^2
    auto betas = monomial_indices(g.n, kappa + 1);
    const double fd_step = g.cell_width() / 2;
    for (const auto& beta : betas) {
        int order = 0;
        for (int b : beta) order += b;
        if (order != kappa) continue;
        double fact = 1;
        for (int b : beta)
            for (int k = 2; k <= b; ++k) fact *= k;
        double v = 0;
        for (long y = 0; y < geom.cell_count(); ++y) {
            const double mass = mu_cell_mass[static_cast<size_t>(y)];
            if (mass == 0) continue;
            v += kernel.deriv_x(beta, m, geom.cell_center(y), fd_step) * mass;
        }
        v /= fact;
        // projection of the raw monomial x^beta
        std::vector<double> mono(static_cast<size_t>(geom.cell_count()), 0.0);
        for (long lin : jcells) {
            auto x = geom.cell_center(lin);
            double t = 1;
            for (int i = 0; i < g.n; ++i)
                for (int k = 0; k < beta[static_cast<size_t>(i)]; ++k) t *= x[static_cast<size_t>(i)];
            mono[static_cast<size_t>(lin)] = t;
        }
        auto pm = project_delta(basis, omega, mono);
        double norm2 = 0;
        for (double c : pm.coeffs) norm2 += c * c;
        out.phi2 += v * v * norm2;
    }
    // Psi^2: (P_{kappa+delta}(J, |mu|) / l(J)^kappa)^2 || |x-m|^kappa ||^2_{L2(1_J w)}
    const double l = side_length(g, j);
    auto c_j = cube_center(g, j);
    double pk = 0;
    for (long y = 0; y < geom.cell_count(); ++y) {
        const double mass = std::abs(mu_cell_mass[static_cast<size_t>(y)]);
        if (mass == 0) continue;
        auto yy = geom.cell_center(y);
        double r2 = 0;
        for (int i = 0; i < g.n; ++i) r2 += (yy[static_cast<size_t>(i)] - c_j[static_cast<size_t>(i)]) * (yy[static_cast<size_t>(i)] - c_j[static_cast<size_t>(i)]);
        const double d = std::sqrt(r2);
        const double mo = kappa + kernel.delta_smooth;
        pk += std::pow(l, mo) / std::pow(l + d, mo + g.n - kernel.alpha) * mass;
    }
    double xnorm2 = 0;
    for (long lin : jcells) {
        auto x = omega.cell_center(lin);
        double r2 = 0;
        for (int i = 0; i < g.n; ++i) r2 += (x[static_cast<size_t>(i)] - m[static_cast<size_t>(i)]) * (x[static_cast<size_t>(i)] - m[static_cast<size_t>(i)]);
        xnorm2 += std::pow(r2, kappa) * omega.cell_mass_linear(lin);
    }
    out.psi2 = (pk / std::pow(l, kappa)) * (pk / std::pow(l, kappa)) * xnorm2;
    const double denom = out.phi2 + out.psi2;
    if (denom <= 0) {
        out.vacuous = out.lhs == 0;
        out.ratio = 0;
        return out;
    }
    out.ratio = out.lhs / denom;
    return out;
}

// --- rectangle-to-cubes decomposition ----------------------------------------
//
// R = [0,1)^(n-1) x [0,t) splits into the slab E = [0,1)^(n-1) x [t*, t) and
// pairwise disjoint dyadic cubes tiling [0,1)^(n-1) x [0, t*), where
// t* = b/2^m, 2^-m < eps and b = ceil(2^m t) - 1 (the boundary case of the
// window 2^m t - 1 <= b < 2^m t).

struct RectCube {
    int k = 0;               // side 2^-k
    std::vector<long> pos;   // integer coords, cube = prod [pos 2^-k, (pos+1) 2^-k)
};

struct RectangleDecomposition {
    int m = 0;
    long b = 0;
    double t_star = 0;
    std::vector<RectCube> cubes;
    long count = 0;                  // B
    double paper_bound = 0;          // 2^(nm - n - m + 2)
};

inline RectangleDecomposition rectangle_decomposition(double t, int n, double eps) {
    require(t > 0 && t < 1, "bad-parameter", "t in (0,1)");
    require(eps > 0 && eps < 1, "bad-parameter", "eps in (0,1)");
    RectangleDecomposition out;
    // smallest m with 2^-m <= eps whose truncation satisfies |t - t*| < eps;
    // the bump handles dyadic t, where b = 2^m t - 1 loses a full 2^-m
    int m = 1;
    while (std::ldexp(1.0, -m) > eps) ++m;
    auto b_of = [&](int mm) { return static_cast<long>(std::ceil(std::ldexp(t, mm))) - 1; };
    if (t - std::ldexp(static_cast<double>(std::max(b_of(m), 0L)), -m) >= eps) ++m;
    out.m = m;
    out.b = b_of(m);
    if (out.b <= 0) {
        out.b = 0;
        out.t_star = 0;  // empty cube list; E is the whole rectangle
        out.paper_bound = std::ldexp(1.0, n * m - n - m + 2);
        return out;
    }
    out.t_star = std::ldexp(static_cast<double>(out.b), -m);
    out.paper_bound = std::ldexp(1.0, n * m - n - m + 2);
    long prefix_num = 0;  // prefix over 2^m
    for (int k = 1; k <= m; ++k) {
        const long bit = (out.b >> (m - k)) & 1;
        if (!bit) continue;
        // R_k = [0,1)^(n-1) x [prefix, prefix + 2^-k): 2^((n-1)k) cubes of side 2^-k
        const long cells_per_axis = 1L << k;
        const long start = prefix_num >> (m - k);  // prefix / 2^-k, exact by construction
        std::vector<long> pos(static_cast<size_t>(n), 0);
        pos[static_cast<size_t>(n - 1)] = start;
        while (true) {
            out.cubes.push_back({k, pos});
            int i = n - 2;
            for (; i >= 0; --i) {
                if (++pos[static_cast<size_t>(i)] < cells_per_axis) break;
                pos[static_cast<size_t>(i)] = 0;
            }
            if (i < 0) break;
        }
        prefix_num += 1L << (m - k);
    }
    out.count = static_cast<long>(out.cubes.size());
    return out;
}

// exact cellwise tiling verification at resolution 2^-m
inline bool rectangle_tiling_exact(const RectangleDecomposition& d, int n) {
    const long C = 1L << d.m;
    const long slab = d.b;  // cells along the last axis
    long total = 1;
    for (int i = 0; i < n - 1; ++i) total *= C;
    total *= slab;
    std::vector<char> hit;
    hit.assign(static_cast<size_t>(std::max<long>(total, 1)), 0);
    long covered = 0;
    for (const auto& c : d.cubes) {
        const long scale = 1L << (d.m - c.k);
        std::vector<long> lo(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) lo[static_cast<size_t>(i)] = c.pos[static_cast<size_t>(i)] * scale;
        std::vector<long> idx = lo;
        while (true) {
            // linear index over [0,C)^(n-1) x [0, slab)
            if (idx[static_cast<size_t>(n - 1)] >= slab) return false;
            long lin = 0;
            for (int i = 0; i < n - 1; ++i) lin = lin * C + idx[static_cast<size_t>(i)];
            lin = lin * slab + idx[static_cast<size_t>(n - 1)];
            if (hit[static_cast<size_t>(lin)]) return false;
            hit[static_cast<size_t>(lin)] = 1;
            ++covered;
            int i = n - 1;
            for (; i >= 0; --i) {
                if (++idx[static_cast<size_t>(i)] < lo[static_cast<size_t>(i)] + scale) break;
                idx[static_cast<size_t>(i)] = lo[static_cast<size_t>(i)];
            }
            if (i < 0) break;
        }
    }
    return covered == total;
}

// --- boundary mass of doubling measures ---------------------------------------

// ratio |Q \ (1-delta)Q|_mu ln(1/delta) / |Q|_mu for dyadic delta = 2^-k
inline double boundary_mass_check(const LatticeMeasure& mu, const DyadicCube& q, int k) {
    require(k >= 1, "bad-parameter", "delta = 2^-k needs k >= 1");
    const double qm = mu.cube_mass(q);
    require(qm > 0, "bad-parameter", "cube must carry mass");
    CellBox inner = shrink_cells(mu.grid(), q, 1, 1L << k);
    const double inner_mass = mu.box_mass(inner);
    const double delta = std::ldexp(1.0, -k);
    return (qm - inner_mass) * std::log(1.0 / delta) / qm;
}

} // namespace dyadlab
