#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "dyadlab/config.hpp"
#include "dyadlab/constants.hpp"
#include "dyadlab/corona.hpp"
#include "dyadlab/operator.hpp"

namespace dyadlab {

// Theorem-level inequalities carry unknowable absolute constants, so checks
// assert bounded ratios against configured ceilings and persist the raw
// numbers.  A check whose two sides both vanish is a vacuous pass, labeled.

struct CheckRecord {
    std::string name;
    double lhs = 0, rhs = 0;
    double ratio = 0;
    double fitted_constant = 0;
    double ceiling = 0;
    bool pass = false;
    bool vacuous = false;
    std::string witness;
};

inline CheckRecord ratio_check(std::string name, double lhs, double rhs, double ceiling,
                               std::string witness = "") {
    CheckRecord r;
    r.name = std::move(name);
    r.lhs = lhs;
    r.rhs = rhs;
    r.ceiling = ceiling;
    r.witness = std::move(witness);
    if (lhs == 0 && rhs == 0) {
        r.vacuous = true;
        r.pass = true;
        return r;
    }
    r.ratio = rhs > 0 ? lhs / rhs : kInf;
    r.fitted_constant = r.ratio;
    r.pass = r.ratio <= ceiling;
    return r;
}

// Experiment description resolved from a config file; the lattice budget caps
// the dense operator matrix.
struct ExperimentSpec {
    std::string id = "experiment";
    int n = 1;
    int L = 9;
    double root_origin = 0;
    double root_side = 1;
    std::string sigma = "lebesgue";
    std::string omega = "lebesgue";
    std::string kernel = "hilbert";
    double alpha = 0;
    double delta_cells = 4;
    double R_units = 4;  // outer radius in root-side units
    int kappa = 2;
    int kappa1 = 1, kappa2 = 1;
    std::uint64_t seed = 0;
    int cube_samples = 12;
    int subset_samples = 6;
    int pair_samples = 6;
    GoodnessParams goodness;
    double ceiling_t1 = 100;
    double ceiling_diag = 10;
    long budget = 4'000'000;

    static ExperimentSpec from_config(const Config& cfg) {
        ExperimentSpec s;
        s.id = cfg.str("experiment.id", s.id);
        s.seed = static_cast<std::uint64_t>(cfg.integer("experiment.seed", 0));
        s.n = static_cast<int>(cfg.integer("lattice.n", s.n));
        s.L = static_cast<int>(cfg.integer("lattice.L", s.L));
        s.root_origin = cfg.num("lattice.root_origin", s.root_origin);
        s.root_side = cfg.num("lattice.root_side", s.root_side);
        s.sigma = cfg.str("measures.sigma", s.sigma);
        s.omega = cfg.str("measures.omega", s.omega);
        s.kernel = cfg.str("kernel.kind", s.kernel);
        s.alpha = cfg.num("kernel.alpha", s.alpha);
        s.delta_cells = cfg.num("truncation.delta_cells", s.delta_cells);
        s.R_units = cfg.num("truncation.R", s.R_units);
        s.kappa = static_cast<int>(cfg.integer("tolerances.kappa", s.kappa));
        s.kappa1 = static_cast<int>(cfg.integer("tolerances.kappa1", s.kappa));
        s.kappa2 = static_cast<int>(cfg.integer("tolerances.kappa2", s.kappa));
        s.cube_samples = static_cast<int>(cfg.integer("samplers.cube_samples", s.cube_samples));
        s.subset_samples =
            static_cast<int>(cfg.integer("samplers.subset_samples", s.subset_samples));
        s.pair_samples = static_cast<int>(cfg.integer("samplers.pair_samples", s.pair_samples));
        s.goodness.r = static_cast<int>(cfg.integer("goodness.r", s.goodness.r));
        s.goodness.epsilon = cfg.num("goodness.epsilon", s.goodness.epsilon);
        s.goodness.tau = static_cast<int>(cfg.integer("goodness.tau", s.goodness.tau));
        s.goodness.rho = static_cast<int>(cfg.integer("goodness.rho", s.goodness.rho));
        s.ceiling_t1 = cfg.num("tolerances.ceiling_t1", s.ceiling_t1);
        s.ceiling_diag = cfg.num("tolerances.ceiling_diag", s.ceiling_diag);
        s.budget = cfg.integer("tolerances.budget", s.budget);
        return s;
    }

    Grid grid() const {
        Grid g(n, L, root_origin, root_side);
        long cells = g.cell_count();
        require(cells * cells <= budget, "budget-exceeded",
                "lattice exceeds the matrix budget");
        return g;
    }
};

// materialized experiment: measures, operators and the cube family
struct Experiment {
    Grid g;
    LatticeMeasure sigma, omega;
    KernelSpec kernel;
    TruncationSpec trunc;
    DiscretizedOperator T, Tstar;
    std::vector<DyadicCube> cubes;

    explicit Experiment(const ExperimentSpec& s)
        : g(s.grid()),
          sigma(generate(g, s.sigma, s.seed)),
          omega(generate(g, s.omega, s.seed + 1)),
          kernel(KernelSpec::parse(s.kernel, s.n, s.alpha)),
          trunc{s.delta_cells * g.cell_width(), s.R_units * s.root_side, 0.25, false},
          T(kernel, trunc, sigma, s.budget),
          Tstar(adjoint_kernel(kernel), trunc, omega, s.budget),
          cubes(all_cubes(g, g.depth - 1)) {}

    OpPair pair() const { return OpPair{&T, &Tstar, &sigma, &omega}; }
    OpPair dual() const { return OpPair{&Tstar, &T, &omega, &sigma}; }
};

// --- T1 chains -------------------------------------------------------------

struct T1Bundle {
    double a2 = 0, a2t = 0, a2t_star = 0;
    double t1 = 0, t1_star = 0;
    double tic = 0, tic_star = 0;
    double bict_v = 0;
    double norm = 0;
};

inline T1Bundle t1_bundle(const Experiment& ex, const ExperimentSpec& s) {
    T1Bundle b;
    b.a2 = a2_classical(ex.sigma, ex.omega, s.alpha, ex.cubes).value;
    auto [p, q] = a2_one_tailed(ex.sigma, ex.omega, s.alpha, ex.cubes);
    b.a2t = p.value;
    b.a2t_star = q.value;
    b.t1 = cube_testing(ex.pair(), 1, ex.cubes).local.value;
    b.t1_star = cube_testing(ex.dual(), 1, ex.cubes).local.value;
    Rng rng(s.seed, "t1");
    b.tic = indicator_testing(ex.pair(), s.cube_samples, s.subset_samples, rng.substream("ic")).value;
    b.tic_star =
        indicator_testing(ex.dual(), s.cube_samples, s.subset_samples, rng.substream("ic*")).value;
    b.bict_v = bict(ex.pair(), s.cube_samples, s.pair_samples, rng.substream("bict")).bict.value;
    b.norm = op_norm(ex.pair(), 1e-8, 4000, s.seed).value;
    return b;
}

inline std::vector<CheckRecord> run_t1_chain(const ExperimentSpec& s) {
    Experiment ex(s);
    auto b = t1_bundle(ex, s);
    std::vector<CheckRecord> out;
    const double muck = std::sqrt(b.a2t + b.a2t_star);
    out.push_back(ratio_check("NIC: N <= C (sqrt(A2t+A2t*) + TIC + TIC*)", b.norm,
                              muck + b.tic + b.tic_star, s.ceiling_t1));
    out.push_back(ratio_check("NBICT: N <= C (sqrt(A2t+A2t*) + T + T* + BICT)", b.norm,
                              muck + b.t1 + b.t1_star + b.bict_v, s.ceiling_t1));
    // converse for elliptic kernels: sampled constants only bound from below,
    // so the reversed ratio is indicative
    Rng erng(s.seed, "ellip");
    const double ell = ellipticity_probe(
        ex.kernel, {0.1 * s.root_side, 0.5 * s.root_side}, 4, erng,
        cube_center(ex.g, root_cube(ex.g)));
    if (ell > 0) {
        out.push_back(ratio_check("converse (elliptic): RHS <= C N",
                                  muck + b.tic + b.tic_star, b.norm, s.ceiling_t1));
    }
    return out;
}

// --- good-lambda ------------------------------------------------------------

inline std::vector<CheckRecord> run_goodlambda(const ExperimentSpec& s, int lambda_steps = 10,
                                               int beta_count = 5) {
    Grid g = s.grid();
    auto omega = generate(g, s.omega, s.seed + 1);
    require(s.alpha > 0, "bad-parameter", "good-lambda needs alpha > 0");
    auto wfit = a_infinity_fit(omega, 200, Rng(s.seed, "gl-ainf"));
    std::vector<CheckRecord> out;
    if (wfit.flagged) {
        CheckRecord warn;
        warn.name = "omega A-infinity pre-check";
        warn.pass = false;
        out.push_back(warn);
    }
    auto geom = generate_lebesgue(g);
    Rng rng(s.seed, "gl-f");
    // f lives on the middle half of the root: the lattice is a bounded-domain
    // model, and localized mass keeps the superlevel sets of I_alpha f away
    // from the root boundary
    std::vector<double> f(static_cast<size_t>(geom.cell_count()), 0.0);
    for (long j = geom.cell_count() / 4; j < 3 * geom.cell_count() / 4; ++j)
        f[static_cast<size_t>(j)] = std::abs(rng.normal());
    for (int sp = 0; sp < 3; ++sp) {
        // spikes give I_alpha f the dynamic range the level-set ladder needs
        long j = geom.cell_count() / 4 + rng.index(geom.cell_count() / 2);
        f[static_cast<size_t>(j)] += 50.0 * (1.0 + std::abs(rng.normal()));
    }
    std::vector<double> nu(f.size());
    for (long j = 0; j < geom.cell_count(); ++j)
        nu[static_cast<size_t>(j)] = f[static_cast<size_t>(j)] * geom.cell_mass_linear(j);
    std::vector<double> ia(static_cast<size_t>(geom.cell_count())),
        ma(static_cast<size_t>(geom.cell_count()));
    parallel_for(0, geom.cell_count(), [&](long x) {
        ia[static_cast<size_t>(x)] = frac_integral(geom, nu, x, s.alpha);
        ma[static_cast<size_t>(x)] = frac_maximal(geom, f, x, s.alpha);
    });
    double imax = 0;
    for (double v : ia) imax = std::max(imax, v);
    auto level_mass = [&](double lam, double beta_cut) {
        // omega{I > gamma lam, M <= beta lam} with gamma folded into lam by caller
        double acc = 0;
        for (long x = 0; x < geom.cell_count(); ++x)
            if (ia[static_cast<size_t>(x)] > lam &&
                (beta_cut <= 0 || ma[static_cast<size_t>(x)] <= beta_cut))
                acc += omega.cell_mass_linear(x);
        return acc;
    };
    const double gamma = 2.0;
    auto r_max_of = [&](double beta) {
        double r_max = 0;
        bool any = false;
        for (int ls = 0; ls < lambda_steps; ++ls) {
            const double lam = imax * std::ldexp(1.0, -(ls + 1));
            const double rhs = level_mass(lam, 0);
            if (rhs <= 0) continue;
            any = true;
            r_max = std::max(r_max, level_mass(gamma * lam, beta * lam) / rhs);
        }
        return std::pair<double, bool>(r_max, any);
    };
    for (int bk = 1; bk <= beta_count; ++bk) {
        const double beta = std::ldexp(1.0, -bk);
        auto [r_max, any] = r_max_of(beta);
        CheckRecord rec;
        rec.name = "good-lambda beta=2^-" + std::to_string(bk);
        rec.lhs = r_max;
        rec.rhs = 1;
        rec.ratio = r_max;
        rec.ceiling = 1.0;
        rec.vacuous = !any || r_max == 0;  // empty superlevel intersections
        rec.pass = r_max <= 1.0;           // the sets nest, so 1 is a hard ceiling
        out.push_back(rec);
    }
    // envelope fit log r = log C + eps log(beta/gamma) over a wider beta
    // ladder, since the criterion betas often empty the intersection outright
    std::vector<double> log_bg, log_r;
    for (int bk = -2; bk <= beta_count; ++bk) {
        const double beta = std::ldexp(1.0, -bk);
        auto [r_max, any] = r_max_of(beta);
        if (any && r_max > 0) {
            log_bg.push_back(std::log(beta / gamma));
            log_r.push_back(std::log(r_max));
        }
    }
    CheckRecord fit;
    fit.name = "good-lambda envelope exponent";
    if (log_bg.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double m = static_cast<double>(log_bg.size());
        for (size_t i = 0; i < log_bg.size(); ++i) {
            sx += log_bg[i];
            sy += log_r[i];
            sxx += log_bg[i] * log_bg[i];
            sxy += log_bg[i] * log_r[i];
        }
        const double eps_hat = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        const double logC = (sy - eps_hat * sx) / m;
        fit.fitted_constant = std::exp(logC);
        fit.lhs = eps_hat;
        fit.rhs = 0.05;
        fit.pass = eps_hat > 0.05;
        fit.ratio = eps_hat;
    } else {
        // every sampled intersection was empty: the inequality held with room
        // to spare at each (lambda, beta), so the fit has nothing to constrain
        fit.vacuous = true;
        fit.pass = true;
    }
    out.push_back(fit);
    // maximum-principle sub-diagnostic: smallest N in 1..5 with
    // I_a(1_{2Q} f) > lam/2 on {I_a f > lam} inside every interior Whitney
    // cube Q of the superlevel set at lam 2^-N.  The bounded root truncates
    // the tails, so only cubes with 9Q inside the root are probed.
    {
        CheckRecord mp;
        mp.name = "maximum principle N";
        int found = -1;
        long probed = 0;
        for (int N = 1; N <= 5 && found < 0; ++N) {
            bool ok = true;
            probed = 0;
            for (int ls = 1; ls < lambda_steps && ok; ++ls) {
                const double lam = imax * std::ldexp(1.0, -ls);
                const double lam_low = lam * std::ldexp(1.0, -N);
                std::vector<char> open(static_cast<size_t>(geom.cell_count()), 0);
                for (long x = 0; x < geom.cell_count(); ++x)
                    if (ia[static_cast<size_t>(x)] > lam_low) open[static_cast<size_t>(x)] = 1;
                open.front() = 0;  // whitney needs a region strictly inside the root
                open.back() = 0;
                CellMask mask(g, open);
                for (const auto& qw : whitney(mask, g)) {
                    // keep only cubes whose Whitney witness is genuine: 9Q must
                    // meet a true sub-level cell inside the root, not just the
                    // clipped root edge
                    bool genuine = false;
                    geom.for_each_cell(dilate_cells(g, qw, 9), [&](long lin) {
                        if (ia[static_cast<size_t>(lin)] <= lam_low) genuine = true;
                    });
                    if (!genuine) continue;
                    RealBox two = dilate_real(g, qw, 2.0);
                    std::vector<double> nu2(nu.size(), 0.0);
                    for (long lin = 0; lin < geom.cell_count(); ++lin)
                        if (two.contains_point(geom.cell_center(lin)))
                            nu2[static_cast<size_t>(lin)] = nu[static_cast<size_t>(lin)];
                    geom.for_each_cell(cube_cells(g, qw), [&](long x) {
                        if (!ok) return;
                        if (ia[static_cast<size_t>(x)] > lam) {
                            ++probed;
                            if (frac_integral(geom, nu2, x, s.alpha) <= lam / 2) ok = false;
                        }
                    });
                    if (!ok) break;
                }
            }
            if (ok && probed > 0) found = N;
        }
        mp.lhs = found;
        mp.pass = found > 0 || probed == 0;
        mp.vacuous = probed == 0;
        out.push_back(mp);
    }
    return out;
}

// --- truncation uniformity -----------------------------------------------

inline std::vector<CheckRecord> run_truncation_uniformity(const ExperimentSpec& s,
                                                          int ladder_size = 6) {
    Experiment ex(s);
    const double nref = op_norm(ex.pair(), 1e-8, 4000, s.seed).value;
    const double a2 = a2_classical(ex.sigma, ex.omega, s.alpha, ex.cubes).value;
    double worst = 0;
    for (int k = 0; k < ladder_size; ++k) {
        TruncationSpec t;
        t.delta = (2 << k) * ex.g.cell_width();
        t.R = 4.0 * s.root_side;
        t.rough = true;
        if (t.delta >= t.R) break;
        DiscretizedOperator Te(ex.kernel, t, ex.sigma, s.budget);
        DiscretizedOperator Tes(adjoint_kernel(ex.kernel), t, ex.omega, s.budget);
        OpPair p{&Te, &Tes, &ex.sigma, &ex.omega};
        worst = std::max(worst, op_norm(p, 1e-8, 4000, s.seed).value);
    }
    std::vector<CheckRecord> out;
    out.push_back(ratio_check("truncation uniformity: max_eps N(T_eps) <= C (N + sqrt(A2))",
                              worst, nref + std::sqrt(a2), s.ceiling_diag));
    // covering-argument subcheck with a = 1/4: greedy maximal disjoint
    // (a/2)eps-balls; each point sits in at most 2^n (1+1/a)^n balls of
    // radius (a+1)eps
    {
        const double a = 0.25;
        const double eps = 16 * ex.g.cell_width();
        std::vector<double> centers;
        for (long lin = 0; lin < ex.sigma.cell_count(); ++lin) {
            const double x = ex.sigma.cell_center(lin)[0];
            bool ok = true;
            for (double c : centers)
                if (std::abs(x - c) < a * eps) ok = false;  // (a/2)-balls disjoint
            if (ok) centers.push_back(x);
        }
        long worst_overlap = 0;
        for (long lin = 0; lin < ex.sigma.cell_count(); ++lin) {
            const double x = ex.sigma.cell_center(lin)[0];
            long c = 0;
            for (double ctr : centers)
                if (std::abs(x - ctr) < (a + 1) * eps) ++c;
            worst_overlap = std::max(worst_overlap, c);
        }
        const double bound = std::pow(2.0 * (1 + 1 / a), ex.g.n);
        out.push_back(ratio_check("cover overlap <= 2^n (1+1/a)^n",
                                  static_cast<double>(worst_overlap), bound, 1.0));
    }
    return out;
}

// --- polynomial testing control -----------------------------------------

inline std::vector<CheckRecord> run_poly_testing_control(const ExperimentSpec& s) {
    Experiment ex(s);
    auto ftk = cube_testing(ex.pair(), s.kappa, ex.cubes).full.value;
    auto ft1 = cube_testing(ex.pair(), 1, ex.cubes).full.value;
    const double nrm = op_norm(ex.pair(), 1e-8, 4000, s.seed).value;
    std::vector<CheckRecord> out;
    for (double eps : {0.25, 0.125}) {
        const double slack = ftk - eps * nrm;
        CheckRecord rec = ratio_check(
            "FT^(kappa) <= C(kappa,eps) FT + eps N @eps=" + std::to_string(eps),
            std::max(slack, 0.0), ft1, s.ceiling_diag);
        out.push_back(rec);
    }
    // exact n=1 linear-recovery identity on cells: the r-integral of
    // 1_{[r,b)}(y) over each cell is clamp(y - r_cell_lo, 0, cell), summing to
    // y - a exactly in dyadic arithmetic
    {
        const Grid& g = ex.g;
        double worst = 0;
        const double a = g.root_origin[0], b = a + g.root_side;
        for (long y = 0; y < ex.sigma.cell_count(); ++y) {
            const double yy = ex.sigma.cell_center(y)[0];
            double integral = 0;
            for (long rc = 0; rc < ex.sigma.cell_count(); ++rc) {
                const double rlo = a + rc * g.cell_width();
                integral += std::clamp(yy - rlo, 0.0, g.cell_width());
            }
            integral /= (b - a);
            const double direct = (yy - a) / (b - a);
            worst = std::max(worst, std::abs(integral - direct));
        }
        CheckRecord rec;
        rec.name = "linear recovery identity (exact)";
        rec.lhs = worst;
        rec.pass = worst == 0.0;
        out.push_back(rec);
    }
    return out;
}

// --- cancellation ------------------------------------------------------------

inline std::vector<AnnulusEntry> annulus_ladder(const Grid& g, int count, Rng rng) {
    std::vector<AnnulusEntry> ladder;
    const double w = g.cell_width();
    for (int t = 0; t < count; ++t) {
        AnnulusEntry a;
        a.radius = g.root_side * std::ldexp(1.0, -(1 + rng.index(3)));  // 1/2 .. 1/8 of root
        a.x0.resize(g.n);
        for (int i = 0; i < g.n; ++i)
            a.x0[static_cast<size_t>(i)] =
                g.root_origin[i] + a.radius + rng.uniform() * (g.root_side - 2 * a.radius);
        double e = std::max(2.0 * w, a.radius * std::ldexp(1.0, -(2 + rng.index(3))));
        a.eps = e;
        if (a.eps < a.radius) ladder.push_back(a);
    }
    return ladder;
}

inline std::vector<CheckRecord> run_cancellation(const ExperimentSpec& s) {
    Experiment ex(s);
    Rng rng(s.seed, "canc");
    auto ladder = annulus_ladder(ex.g, std::max(4, s.cube_samples), rng.substream("ladder"));
    auto rep = cancellation_constant(ex.kernel, ex.sigma, ex.omega, ladder, s.kappa, 3,
                                     rng.substream("poly"));
    auto rep_star = cancellation_constant(adjoint_kernel(ex.kernel), ex.omega, ex.sigma, ladder,
                                          s.kappa, 3, rng.substream("poly*"));
    const double a2 = a2_classical(ex.sigma, ex.omega, s.alpha, ex.cubes).value;
    auto [p, q] = a2_one_tailed(ex.sigma, ex.omega, s.alpha, ex.cubes);
    const double nrm = op_norm(ex.pair(), 1e-8, 4000, s.seed).value;
    std::vector<CheckRecord> out;
    out.push_back(ratio_check("necessity: A_K <= C (N^2 + A2)", rep.plain.value,
                              nrm * nrm + a2, s.ceiling_diag));
    out.push_back(ratio_check("sufficiency probe: N <= C (A_K + A_K* + sqrt(A2t + A2t*))", nrm,
                              rep.plain.value + rep_star.plain.value + std::sqrt(p.value + q.value),
                              s.ceiling_t1));
    CheckRecord mono;
    mono.name = "A_K^(kappa) >= A_K (p=1 in the family)";
    mono.lhs = rep.plain.value;
    mono.rhs = rep.poly.value;
    mono.pass = rep.poly.value >= rep.plain.value;
    mono.vacuous = rep.poly.value == 0 && rep.plain.value == 0;
    out.push_back(mono);
    return out;
}

// --- wavelet suite ---------------------------------------------------------

inline std::vector<CheckRecord> run_wavelets(const ExperimentSpec& s) {
    Grid g = s.grid();
    auto mu = generate(g, s.sigma, s.seed);
    AlpertTree tree(mu, s.kappa, root_cube(g));
    Rng rng(s.seed, "wavelets");
    std::vector<CheckRecord> out;
    // Gram and moment residuals over every built basis
    double gram_res = 0, mom_res = 0;
    tree.for_each_tree_cube([&](const DyadicCube& q) {
        const AlpertBasis& b = tree.basis(q);
        if (b.dim == 0) return;
        for (int i = 0; i < b.dim; ++i)
            for (int j = 0; j < b.dim; ++j) {
                double ip = 0;
                for (size_t c = 0; c < b.cells.size(); ++c)
                    ip += b.values[static_cast<size_t>(i)][c] * b.values[static_cast<size_t>(j)][c] *
                          mu.cell_mass_linear(b.cells[c]);
                gram_res = std::max(gram_res, std::abs(ip - (i == j ? 1.0 : 0.0)));
            }
        std::vector<long> cells;
        auto mono = monomials_on_cells(mu, q, s.kappa, &cells);
        for (int i = 0; i < b.dim; ++i)
            for (size_t m = 0; m < mono.size(); ++m) {
                double ip = 0, nb = 0;
                for (size_t c = 0; c < cells.size(); ++c) {
                    ip += b.values[static_cast<size_t>(i)][c] * mono[m][c] *
                          mu.cell_mass_linear(cells[c]);
                    nb += mono[m][c] * mono[m][c] * mu.cell_mass_linear(cells[c]);
                }
                if (nb > 0) mom_res = std::max(mom_res, std::abs(ip) / std::sqrt(nb));
            }
    });
    out.push_back(ratio_check("gram residual <= 1e-10", gram_res, 1e-10, 1.0));
    out.push_back(ratio_check("moment residual <= 1e-10", mom_res, 1e-10, 1.0));
    // telescoping on random nested pairs
    double tel = 0;
    for (int t = 0; t < 20; ++t) {
        std::vector<double> f(static_cast<size_t>(mu.cell_count()));
        for (auto& v : f) v = rng.normal();
        const int lq = 2 + static_cast<int>(rng.index(std::max(1, g.depth - 2)));
        DyadicCube q{lq, {}};
        q.index.resize(g.n);
        for (int i = 0; i < g.n; ++i) q.index[i] = rng.index(1L << lq);
        DyadicCube p = ancestor(q, static_cast<int>(rng.index(lq)));
        tel = std::max(tel, telescoping_check(tree, p, q, f));
    }
    out.push_back(ratio_check("telescoping residual <= 1e-10", tel, 1e-10, 1.0));
    // Parseval
    double par = 0;
    for (int t = 0; t < 5; ++t) {
        std::vector<double> f(static_cast<size_t>(mu.cell_count()));
        for (auto& v : f) v = rng.normal();
        auto ex = expand(tree, f);
        double total = 0;
        for (long i = 0; i < mu.cell_count(); ++i)
            total += f[static_cast<size_t>(i)] * f[static_cast<size_t>(i)] * mu.cell_mass_linear(i);
        std::vector<long> cells;
        auto base = cube_poly_values(mu, ex.base, &cells);
        double acc = 0;
        for (size_t c = 0; c < cells.size(); ++c)
            acc += base[c] * base[c] * mu.cell_mass_linear(cells[c]);
        for (auto& [q2, coeffs] : ex.coefficients)
            for (double cv : coeffs) acc += cv * cv;
        if (total > 0) par = std::max(par, std::abs(acc - total) / total);
    }
    out.push_back(ratio_check("parseval relative error <= 1e-9", par, 1e-9, 1.0));
    return out;
}

// --- corona suite ------------------------------------------------------------

inline std::vector<CheckRecord> run_corona_suite(const ExperimentSpec& s) {
    Experiment ex(s);
    Rng rng(s.seed, "corona");
    AlpertTree ftree(ex.sigma, 1, root_cube(ex.g));
    AlpertTree gtree(ex.omega, 1, root_cube(ex.g));
    std::vector<CheckRecord> out;
    double worst = 0;
    double c0_max = 0;
    for (int t = 0; t < 5; ++t) {
        std::vector<double> f(static_cast<size_t>(ex.sigma.cell_count())), h(f.size());
        for (auto& v : f) v = rng.normal();
        for (auto& v : h) v = rng.normal();
        auto A = cz_stopping(ex.sigma, f, 4.0, root_cube(ex.g));
        auto B = cz_stopping(ex.omega, h, 4.0, root_cube(ex.g));
        c0_max = std::max({c0_max, A.c0, B.c0});
        auto split = parallel_corona_split(ex.pair(), ftree, gtree, A, B, f, h);
        worst = std::max(worst,
                         std::abs(split.total() - split.full) / std::max(1.0, std::abs(split.full)));
    }
    out.push_back(ratio_check("corona split exactness <= 1e-9", worst, 1e-9, 1.0));
    CheckRecord c0rec;
    c0rec.name = "stopping Carleson constant";
    c0rec.lhs = c0_max;
    c0rec.ceiling = s.ceiling_diag;
    c0rec.ratio = c0_max / s.ceiling_diag;
    c0rec.pass = c0_max <= s.ceiling_diag;
    out.push_back(c0rec);
    return out;
}

} // namespace dyadlab
