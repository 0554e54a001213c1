#include <catch2/catch_amalgamated.hpp>

#ifdef DYADLAB_HAVE_EIGEN
#include <Eigen/Dense>
#include <Eigen/SVD>
#endif

#include "dyadlab/constants.hpp"
#include "dyadlab/measure.hpp"
#include "dyadlab/operator.hpp"

using namespace dyadlab;
using Catch::Approx;

namespace {

struct Lab {
    Grid g;
    LatticeMeasure sigma, omega;
    KernelSpec kernel;
    TruncationSpec trunc;
    DiscretizedOperator T, Tstar;

    Lab(int L, const std::string& sspec, const std::string& wspec, double origin = 0,
        double side = 1, const std::string& kspec = "hilbert", double alpha = 0)
        : g(1, L, origin, side),
          sigma(generate(g, sspec)),
          omega(generate(g, wspec)),
          kernel(KernelSpec::parse(kspec, 1, alpha)),
          trunc{4 * g.cell_width(), 4 * side, 0.25, false},
          T(kernel, trunc, sigma),
          Tstar(adjoint_kernel(kernel), trunc, omega) {}

    OpPair pair() const { return OpPair{&T, &Tstar, &sigma, &omega}; }
};

} // namespace

TEST_CASE("classical A2") {
    SECTION("(dx, dx), alpha=0 gives exactly 1") {
        Grid g(1, 7);
        auto leb = generate_lebesgue(g);
        auto rep = a2_classical(leb, leb, 0.0, all_cubes(g));
        CHECK(rep.value == Approx(1.0).margin(1e-14));
    }
    SECTION("(dx, 2dx) gives exactly 2") {
        Grid g(1, 6);
        auto leb = generate_lebesgue(g);
        LatticeMeasure two(g, std::vector<double>(static_cast<size_t>(g.cell_count()), 2.0));
        auto rep = a2_classical(leb, two, 0.0, all_cubes(g));
        CHECK(rep.value == Approx(2.0).margin(1e-14));
    }
    SECTION("power pair matches a per-cube closed-form evaluation") {
        // (|x|^1/2 dx, dx) on [-1,1): cube masses of the power weight have the
        // antiderivative closed form, up to midpoint quadrature
        Grid g(1, 10, -1.0, 2.0);
        auto pw = generate_power(g, 0.5, 0.0);
        auto leb = generate_lebesgue(g);
        auto family = all_cubes(g, 6);
        auto rep = a2_classical(pw, leb, 0.0, family);
        double oracle = 0;
        auto prim = [](double x) {
            return x >= 0 ? (2.0 / 3.0) * std::pow(x, 1.5) : -(2.0 / 3.0) * std::pow(-x, 1.5);
        };
        for (const auto& q : family) {
            const double l = side_length(g, q);
            const double lo = -1.0 + q.index[0] * l;
            const double mass = prim(lo + l) - prim(lo);
            oracle = std::max(oracle, mass / l);
        }
        CHECK(rep.value == Approx(oracle).epsilon(2e-3));
        CHECK(a2_sample(pw, leb, 0.0, rep.witness.q) == Approx(rep.value).margin(1e-12));
    }
}

TEST_CASE("one-tailed A2") {
    SECTION("(dx,dx) n=1 alpha=0: below 2 on a bounded root, near 2 deep inside") {
        Grid g(1, 8);
        auto leb = generate_lebesgue(g);
        auto [plain, star] = a2_one_tailed(leb, leb, 0.0, all_cubes(g, 7));
        CHECK(plain.value <= 2.0 + 1e-9);
        CHECK(plain.value > 1.5);
        CHECK(star.value == Approx(plain.value).margin(1e-12));  // symmetric pair
    }
    SECTION("omega vanishing on the sampled cubes gives 0") {
        Grid g(1, 5);
        auto leb = generate_lebesgue(g);
        auto hot = generate_onehot(g, 0);
        std::vector<DyadicCube> family{DyadicCube{1, {1}}, DyadicCube{2, {2}}};
        auto [plain, star] = a2_one_tailed(leb, hot, 0.0, family);
        CHECK(plain.value == 0.0);
    }
    SECTION("A2 <= c A2-tailed per cube, c from the integrand at x in Q") {
        Grid g(1, 7, -1.0, 2.0);
        auto s = generate_power(g, 0.25, 0.0);
        auto w = generate_power(g, 0.5, 0.0);
        const double c = std::pow(1.0 + 0.5, 2.0);  // (1 + sqrt(n)/2)^(2(n-alpha)), n=1, alpha=0
        for (const auto& q : all_cubes(g, 5)) {
            CHECK(a2_sample(s, w, 0.0, q) <=
                  c * a2_tailed_sample(s, w, 0.0, q, false) * (1 + 1e-9));
        }
    }
}

TEST_CASE("pivotal condition") {
    Grid g(1, 7, -1.0, 2.0);
    auto s = generate_power(g, 0.25, 0.0);
    auto w = generate_power(g, 0.5, 0.0);
    SECTION("single-cube subdecomposition value") {
        DyadicCube q{2, {1}};
        std::vector<char> mask(static_cast<size_t>(s.cell_count()), 0);
        s.for_each_cell(cube_cells(g, q), [&](long lin) { mask[static_cast<size_t>(lin)] = 1; });
        const double p = poisson_m(g, q, s, 0.5, 2, &mask);
        const double want = p * p * w.cube_mass(q) / s.cube_mass(q);
        CHECK(pivotal_sample(s, w, 0.5, 2, q, {q}) == Approx(want).epsilon(1e-12));
    }
    SECTION("monotone in kappa on identical samplers") {
        auto r1 = pivotal(s, w, 0.5, 1, 6, 4, Rng(5, "piv"));
        auto r2 = pivotal(s, w, 0.5, 2, 6, 4, Rng(5, "piv"));
        auto r3 = pivotal(s, w, 0.5, 3, 6, 4, Rng(5, "piv"));
        CHECK(r2.value <= r1.value * (1 + 1e-12));
        CHECK(r3.value <= r2.value * (1 + 1e-12));
    }
    SECTION("witness reproducibility") {
        auto rep = pivotal(s, w, 0.5, 2, 6, 4, Rng(7, "piv"));
        CHECK(pivotal_sample(s, w, 0.5, 2, rep.witness.q, rep.witness.decomposition) ==
              Approx(rep.value).margin(1e-12 * (1 + rep.value)));
    }
}

TEST_CASE("cube testing") {
    SECTION("zero operator tests to zero") {
        Grid g(1, 6);
        auto leb = generate_lebesgue(g);
        KernelSpec k = KernelSpec::parse("hilbert", 1, 0.0);
        TruncationSpec t{4 * g.cell_width(), 4 * g.cell_width(), 0.25, false};
        DiscretizedOperator T(k, t, leb);
        DiscretizedOperator Ts(adjoint_kernel(k), t, leb);
        OpPair pair{&T, &Ts, &leb, &leb};
        auto tp = cube_testing(pair, 2, all_cubes(g, 5));
        CHECK(tp.local.value == 0.0);
        CHECK(tp.full.value == 0.0);
    }
    Lab lab(7, "lebesgue", "lebesgue");
    SECTION("local testing never exceeds full testing, shared samples") {
        auto tp = cube_testing(lab.pair(), 2, all_cubes(lab.g, 6));
        CHECK(tp.local.value <= tp.full.value * (1 + 1e-12));
        CHECK(tp.full.value > 0);
        CHECK(cube_testing_sample(lab.pair(), tp.local.witness.q, 2, tp.local.witness.beta_index,
                                  false) == Approx(tp.local.value).margin(1e-12));
        CHECK(cube_testing_sample(lab.pair(), tp.full.witness.q, 2, tp.full.witness.beta_index,
                                  true) == Approx(tp.full.value).margin(1e-12));
    }
    SECTION("kappa=1 value is stable under refinement within 10%") {
        double prev = -1;
        for (int L : {7, 8}) {
            Lab fine(L, "lebesgue", "lebesgue");
            auto tp = cube_testing(fine.pair(), 1, all_cubes(fine.g, L - 1));
            if (prev > 0) CHECK(std::abs(tp.local.value - prev) <= 0.10 * prev);
            prev = tp.local.value;
        }
    }
    SECTION("T^(1) <= T^(kappa) on shared cubes") {
        auto family = all_cubes(lab.g, 6);
        auto t1 = cube_testing(lab.pair(), 1, family);
        auto t3 = cube_testing(lab.pair(), 3, family);
        CHECK(t1.local.value <= t3.local.value * (1 + 1e-12));
    }
}

TEST_CASE("indicator testing") {
    Lab lab(7, "power:0.25:0", "power:0.5:0", -1.0, 2.0);
    SECTION("dominates kappa=1 cube testing on shared cubes") {
        // E = Q is always in the subset sampler, so T^(1) <= T^IC sample-wise
        auto ic = indicator_testing(lab.pair(), 10, 6, Rng(3, "ic"));
        std::vector<DyadicCube> family;
        SubsetSampler ss(lab.sigma, Rng(3, "ic"));
        for (int t = 0; t < 10; ++t)
            family.push_back(t == 0 ? root_cube(lab.g) : ss.random_cube());
        auto t1 = cube_testing(lab.pair(), 1, family);
        CHECK(t1.local.value <= ic.value * (1 + 1e-9));
        CHECK(indicator_sample(lab.pair(), ic.witness.q, ic.witness.e_cells) ==
              Approx(ic.value).margin(1e-12));
    }
    SECTION("empty E contributes zero") {
        CHECK(indicator_sample(lab.pair(), root_cube(lab.g), {}) == 0.0);
    }
    SECTION("dual sweep is deterministic") {
        auto d1 = indicator_testing(lab.pair().swapped(), 8, 5, Rng(9, "dual"));
        auto d2 = indicator_testing(lab.pair().swapped(), 8, 5, Rng(9, "dual"));
        CHECK(d1.value == d2.value);
    }
}

TEST_CASE("bilinear indicator testing and restricted weak type") {
    Lab lab(7, "lebesgue", "power:0.5:0", -1.0, 2.0);
    auto b = bict(lab.pair(), 8, 5, Rng(11, "bict"));
    auto rw = weak_norms(lab.pair(), 8, 5, Rng(11, "bict"));

    SECTION("empty subsets contribute zero") {
        CHECK(bict_sample(lab.pair(), root_cube(lab.g), {}, {1, 2}) == 0.0);
    }
    SECTION("sign-optimal bracket: BICT <= sign-optimal <= 4 BICT on shared samples") {
        CHECK(b.bict.value <= b.sign_optimal.value * (1 + 1e-9) + 1e-15);
        CHECK(b.sign_optimal.value <= 4 * b.bict.value * (1 + 1e-9));
    }
    SECTION("BICT <= N^rw on shared samples") {
        CHECK(b.bict.value <= rw.value * (1 + 1e-9));
    }
    SECTION("E=F=Q: the two samples coincide") {
        std::vector<long> qcells;
        lab.sigma.for_each_cell(cube_cells(lab.g, root_cube(lab.g)),
                                [&](long lin) { qcells.push_back(lin); });
        CHECK(bict_sample(lab.pair(), root_cube(lab.g), qcells, qcells) ==
              Approx(rw_sample(lab.pair(), root_cube(lab.g), qcells, qcells)).margin(1e-15));
    }
    SECTION("witness reproducibility") {
        CHECK(bict_sample(lab.pair(), b.bict.witness.q, b.bict.witness.e_cells,
                          b.bict.witness.f_cells) == Approx(b.bict.value).margin(1e-12));
        CHECK(rw_sample(lab.pair(), rw.witness.q, rw.witness.e_cells, rw.witness.f_cells) ==
              Approx(rw.value).margin(1e-12));
    }
}

TEST_CASE("weak boundedness") {
    SECTION("zero operator gives zero") {
        Grid g(1, 6);
        auto leb = generate_lebesgue(g);
        KernelSpec k = KernelSpec::parse("zero", 1, 0.0);
        TruncationSpec t{4 * g.cell_width(), 2.0, 0.25, false};
        DiscretizedOperator T(k, t, leb), Ts(adjoint_kernel(k), t, leb);
        OpPair pair{&T, &Ts, &leb, &leb};
        auto rep = wbp(pair, 1, 1, 10, Rng(13, "wbp"));
        CHECK(rep.wbp.value == 0.0);
    }
    Lab lab(7, "lebesgue", "lebesgue");
    SECTION("disjoint supports with an antisymmetric kernel still interact") {
        auto rep = wbp(lab.pair(), 1, 1, 30, Rng(17, "wbp"));
        CHECK(rep.wbp.value > 0);
        CHECK(wbp_sample(lab.pair(), rep.wbp.witness.q, rep.wbp.witness.q2,
                         rep.wbp.witness.poly_f, rep.wbp.witness.poly_g, 1, 1) ==
              Approx(rep.wbp.value).margin(1e-12));
    }
    SECTION("each sample is Cauchy-Schwarz dominated by localized full testing") {
        auto rep = wbp(lab.pair(), 2, 2, 30, Rng(19, "wbp"));
        CHECK(rep.max_ft_ratio <= 1.0 + 1e-9);
    }
}

TEST_CASE("operator norm") {
    SECTION("zero operator has norm 0") {
        Grid g(1, 5);
        auto leb = generate_lebesgue(g);
        KernelSpec k = KernelSpec::parse("zero", 1, 0.0);
        TruncationSpec t{4 * g.cell_width(), 2.0, 0.25, false};
        DiscretizedOperator T(k, t, leb), Ts(adjoint_kernel(k), t, leb);
        OpPair pair{&T, &Ts, &leb, &leb};
        CHECK(op_norm(pair).value == 0.0);
    }
#ifdef DYADLAB_HAVE_EIGEN
    SECTION("power iteration matches the dense SVD oracle on <=256 cells") {
        for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
            Grid g(1, 8, -1.0, 2.0);  // 256 cells
            Rng rng(seed, "opnorm-test");
            std::vector<double> ds(static_cast<size_t>(g.cell_count())),
                dw(static_cast<size_t>(g.cell_count()));
            for (auto& v : ds) v = 0.1 + rng.uniform();
            for (auto& v : dw) v = 0.1 + rng.uniform();
            LatticeMeasure sigma(g, ds), omega(g, dw);
            KernelSpec k = KernelSpec::parse("hilbert", 1, 0.0);
            TruncationSpec t{4 * g.cell_width(), 8.0, 0.25, false};
            DiscretizedOperator T(k, t, sigma), Ts(adjoint_kernel(k), t, omega);
            OpPair pair{&T, &Ts, &sigma, &omega};
            auto rep = op_norm(pair);
            auto S = detail::scaled_matrix(pair);
            Eigen::MatrixXd M(g.cell_count(), g.cell_count());
            for (long i = 0; i < g.cell_count(); ++i)
                for (long j = 0; j < g.cell_count(); ++j)
                    M(i, j) = S[static_cast<size_t>(i) * g.cell_count() + j];
            const double oracle = M.jacobiSvd().singularValues()(0);
            CHECK(rep.value == Approx(oracle).epsilon(1e-6));
        }
    }
#endif
    SECTION("duality is exact by construction") {
        Lab lab(6, "power:0.25:0", "power:0.5:0", -1.0, 2.0);
        CHECK(op_norm(lab.pair()).value == op_norm_adjoint(lab.pair()).value);
    }
    SECTION("every testing report stays below the discretized norm") {
        Lab lab(7, "lebesgue", "power:0.5:0", -1.0, 2.0);
        const double N = op_norm(lab.pair()).value;
        auto tp = cube_testing(lab.pair(), 2, all_cubes(lab.g, 6));
        auto ic = indicator_testing(lab.pair(), 8, 5, Rng(23, "ord"));
        auto b = bict(lab.pair(), 8, 5, Rng(23, "ord"));
        CHECK(tp.local.value <= N + 1e-8);
        CHECK(tp.full.value <= N + 1e-8);
        CHECK(ic.value <= N + 1e-8);
        CHECK(b.bict.value <= N + 1e-8);
    }
}

TEST_CASE("scaling covariance in omega") {
    // scaling omega by lambda^2 = 4 multiplies N, T, T^IC by 2 and A2 by 4, exactly
    Grid g(1, 6, -1.0, 2.0);
    auto sigma = generate_power(g, 0.25, 0.0);
    auto omega = generate_power(g, 0.5, 0.0);
    std::vector<double> d4(static_cast<size_t>(g.cell_count()));
    for (long i = 0; i < g.cell_count(); ++i) d4[static_cast<size_t>(i)] = 4.0 * omega.density(i);
    LatticeMeasure omega4(g, d4);
    KernelSpec k = KernelSpec::parse("hilbert", 1, 0.0);
    TruncationSpec t{4 * g.cell_width(), 8.0, 0.25, false};
    DiscretizedOperator T(k, t, sigma);
    DiscretizedOperator Ts1(adjoint_kernel(k), t, omega), Ts4(adjoint_kernel(k), t, omega4);
    OpPair p1{&T, &Ts1, &sigma, &omega}, p4{&T, &Ts4, &sigma, &omega4};

    CHECK(op_norm(p4).value == 2.0 * op_norm(p1).value);
    auto fam = all_cubes(g, 5);
    CHECK(a2_classical(sigma, omega4, 0.0, fam).value ==
          4.0 * a2_classical(sigma, omega, 0.0, fam).value);
    auto t1 = cube_testing(p1, 1, fam), t4 = cube_testing(p4, 1, fam);
    CHECK(t4.local.value == 2.0 * t1.local.value);
    auto i1 = indicator_testing(p1, 6, 4, Rng(29, "sc"));
    auto i4 = indicator_testing(p4, 6, 4, Rng(29, "sc"));
    CHECK(i4.value == 2.0 * i1.value);
}

TEST_CASE("cancellation constants") {
    Grid g(1, 7);
    auto sigma = generate_lebesgue(g);
    auto omega = generate_lebesgue(g);
    std::vector<AnnulusEntry> ladder;
    for (double r : {0.25, 0.125})
        for (double e : {4 * g.cell_width(), 8 * g.cell_width()})
            ladder.push_back({{0.5}, r, e});

    SECTION("sigma vanishing inside the annuli gives zero") {
        auto hot = generate_onehot(g, 0);  // all mass in the far edge cell
        std::vector<AnnulusEntry> far{{{0.75}, 0.125, 4 * g.cell_width()}};
        auto rep = cancellation_constant(KernelSpec::parse("hilbert", 1, 0.0), hot, omega, far, 2,
                                         2, Rng(31, "canc"));
        CHECK(rep.plain.value == 0.0);
    }
    SECTION("antisymmetric kernel, symmetric sigma, centered ball: inner integrals vanish") {
        std::vector<AnnulusEntry> centered{{{0.5}, 0.25, 4 * g.cell_width()}};
        auto rep = cancellation_constant(KernelSpec::parse("hilbert", 1, 0.0), sigma, omega,
                                         centered, 1, 0, Rng(37, "canc"));
        CHECK(rep.plain.value == Approx(0.0).margin(1e-18));
    }
    SECTION("polynomial variant dominates the plain constant exactly") {
        auto rep = cancellation_constant(KernelSpec::parse("hilbert", 1, 0.0), sigma, omega,
                                         ladder, 2, 3, Rng(41, "canc"));
        CHECK(rep.poly.value >= rep.plain.value);
    }
    SECTION("witness reproducibility") {
        auto rep = cancellation_constant(KernelSpec::parse("hilbert", 1, 0.0), sigma, omega,
                                         ladder, 1, 0, Rng(43, "canc"));
        AnnulusEntry a{{rep.plain.witness.x0}, rep.plain.witness.radius, rep.plain.witness.eps};
        CHECK(cancellation_sample(KernelSpec::parse("hilbert", 1, 0.0), sigma, omega, a) ==
              Approx(rep.plain.value).margin(1e-15));
    }
}
