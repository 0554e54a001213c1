#include <catch2/catch_amalgamated.hpp>

#include "dyadlab/measure.hpp"
#include "dyadlab/operator.hpp"
#include "dyadlab/weights.hpp"

using namespace dyadlab;
using Catch::Approx;

namespace {

DiscretizedOperator make_hilbert(const LatticeMeasure& sigma, double delta_cells = 4) {
    KernelSpec k = KernelSpec::parse("hilbert", 1, 0.0);
    TruncationSpec t;
    t.delta = delta_cells * sigma.grid().cell_width();
    t.R = 4.0 * sigma.grid().root_side;
    return DiscretizedOperator(k, t, sigma);
}

} // namespace

TEST_CASE("apply basics") {
    Grid g(1, 7);
    auto sigma = generate_lebesgue(g);
    auto op = make_hilbert(sigma);

    SECTION("zero input gives zero output") {
        std::vector<double> f(static_cast<size_t>(sigma.cell_count()), 0.0);
        for (double v : op.apply(f)) CHECK(v == 0.0);
    }
    SECTION("odd kernel kills even functions at the symmetry point") {
        // f even about x = 1/2, sigma symmetric: T f(1/2) = 0; with an even
        // cell count the two center cells straddle 1/2, so their values cancel
        std::vector<double> f(static_cast<size_t>(sigma.cell_count()));
        for (long i = 0; i < sigma.cell_count(); ++i) {
            double x = sigma.cell_center(i)[0];
            f[static_cast<size_t>(i)] = (x - 0.5) * (x - 0.5);
        }
        auto Tf = op.apply(f);
        const long mid = sigma.cell_count() / 2;
        CHECK(Tf[static_cast<size_t>(mid - 1)] + Tf[static_cast<size_t>(mid)] ==
              Approx(0.0).margin(1e-12));
    }
    SECTION("kernel bound holds entrywise") {
        for (long i = 0; i < op.size(); i += 17)
            for (long j = 0; j < op.size(); j += 13) {
                if (i == j) continue;
                double dist = std::abs(sigma.cell_center(i)[0] - sigma.cell_center(j)[0]);
                CHECK(std::abs(op.entry(i, j)) <=
                      op.kernel().czc / dist * sigma.cell_mass_linear(j) * (1 + 1e-12));
            }
    }
    SECTION("R = delta gives the zero operator") {
        KernelSpec k = KernelSpec::parse("hilbert", 1, 0.0);
        TruncationSpec t;
        t.delta = 4 * g.cell_width();
        t.R = t.delta;
        DiscretizedOperator zop(k, t, sigma);
        std::vector<double> f(static_cast<size_t>(sigma.cell_count()), 1.0);
        for (double v : zop.apply(f)) CHECK(v == 0.0);
    }
    SECTION("widening the dead zone only changes values by the annulus part") {
        KernelSpec k = KernelSpec::parse("hilbert", 1, 0.0);
        TruncationSpec narrow, wide;
        narrow.delta = 4 * g.cell_width();
        narrow.R = 2.0;
        narrow.rough = true;
        wide.delta = 8 * g.cell_width();
        wide.R = 1.0;
        wide.rough = true;
        DiscretizedOperator on(k, narrow, sigma), ow(k, wide, sigma);
        std::vector<double> f(static_cast<size_t>(sigma.cell_count()));
        Rng rng(3, "trunc");
        for (auto& v : f) v = rng.normal();
        auto a = on.apply(f), b = ow.apply(f);
        for (long i = 0; i < op.size(); ++i) {
            double ann = 0;
            for (long j = 0; j < op.size(); ++j) {
                if (i == j) continue;
                double d = std::abs(sigma.cell_center(i)[0] - sigma.cell_center(j)[0]);
                bool in_narrow = d > narrow.delta && d < narrow.R;
                bool in_wide = d > wide.delta && d < wide.R;
                if (in_narrow != in_wide)
                    ann += (in_narrow ? 1.0 : -1.0) *
                           k.eval(sigma.cell_center(i), sigma.cell_center(j)) *
                           f[static_cast<size_t>(j)] * sigma.cell_mass_linear(j);
            }
            CHECK(a[static_cast<size_t>(i)] - b[static_cast<size_t>(i)] ==
                  Approx(ann).margin(1e-10));
        }
    }
}

TEST_CASE("adjointness at matrix level") {
    Grid g(1, 6, -1.0, 2.0);
    auto sigma = generate_power(g, 0.25, 0.0);
    auto omega = generate_power(g, 0.5, 0.0);
    KernelSpec k = KernelSpec::parse("hilbert", 1, 0.0);
    TruncationSpec t;
    t.delta = 4 * g.cell_width();
    t.R = 4.0;
    DiscretizedOperator op(k, t, sigma);
    DiscretizedOperator adj(adjoint_kernel(k), t, omega);
    Rng rng(5, "adj");
    std::vector<double> f(static_cast<size_t>(sigma.cell_count())), h(f.size());
    for (auto& v : f) v = rng.normal();
    for (auto& v : h) v = rng.normal();
    auto Tf = op.apply(f);
    auto Th = adj.apply(h);
    double lhs = 0, rhs = 0;
    for (long i = 0; i < sigma.cell_count(); ++i) {
        lhs += Tf[static_cast<size_t>(i)] * h[static_cast<size_t>(i)] * omega.cell_mass_linear(i);
        rhs += f[static_cast<size_t>(i)] * Th[static_cast<size_t>(i)] * sigma.cell_mass_linear(i);
    }
    CHECK(lhs == Approx(rhs).epsilon(1e-12));
}

TEST_CASE("maximal truncation") {
    Grid g(1, 7);
    auto sigma = generate_lebesgue(g);
    KernelSpec frac = KernelSpec::parse("fracint:0.5", 1, 0.5);
    std::vector<std::pair<double, double>> ladder;
    for (int k = 2; k <= 6; ++k) ladder.emplace_back(std::pow(2.0, -k), 2.0);

    SECTION("zero f gives zero") {
        std::vector<double> f(static_cast<size_t>(sigma.cell_count()), 0.0);
        CHECK(maximal_truncation(frac, sigma, f, 10, ladder) == 0.0);
    }
    SECTION("nonnegative f: T_flat below the fractional integral") {
        Rng rng(7, "tb");
        std::vector<double> f(static_cast<size_t>(sigma.cell_count()));
        for (auto& v : f) v = std::abs(rng.normal());
        std::vector<double> nu(f.size());
        for (long j = 0; j < sigma.cell_count(); ++j)
            nu[static_cast<size_t>(j)] = f[static_cast<size_t>(j)] * sigma.cell_mass_linear(j);
        for (long x = 5; x < sigma.cell_count(); x += 31) {
            double tb = maximal_truncation(frac, sigma, f, x, ladder);
            double ia = frac_integral(sigma, nu, x, 0.5);
            CHECK(tb <= ia * (1 + 1e-12));
        }
    }
    SECTION("single-entry ladder is a plain truncated application") {
        Rng rng(9, "tb2");
        std::vector<double> f(static_cast<size_t>(sigma.cell_count()));
        for (auto& v : f) v = rng.normal();
        std::vector<std::pair<double, double>> one{{4 * g.cell_width(), 2.0}};
        KernelSpec k = KernelSpec::parse("hilbert", 1, 0.0);
        TruncationSpec t;
        t.delta = one[0].first;
        t.R = one[0].second;
        t.rough = true;
        DiscretizedOperator op(k, t, sigma);
        auto Tf = op.apply(f);
        for (long x = 3; x < sigma.cell_count(); x += 29)
            CHECK(maximal_truncation(k, sigma, f, x, one) ==
                  Approx(std::abs(Tf[static_cast<size_t>(x)])).margin(1e-12));
    }
}

TEST_CASE("fractional maximal operator") {
    Grid g(1, 7);
    auto sigma = generate_lebesgue(g);
    SECTION("alpha=0, f=1 gives M=1 everywhere") {
        std::vector<double> f(static_cast<size_t>(sigma.cell_count()), 1.0);
        for (long x = 0; x < sigma.cell_count(); x += 11)
            CHECK(frac_maximal(sigma, f, x, 0.0) == Approx(1.0).margin(1e-12));
    }
    SECTION("indicator lower bound at the finest cube") {
        std::vector<double> f(static_cast<size_t>(sigma.cell_count()), 0.0);
        f[40] = 1.0;
        CHECK(frac_maximal(sigma, f, 40, 0.0) >= 1.0 - 1e-12);
    }
    SECTION("one-hot decay matches direct enumeration") {
        std::vector<double> f(static_cast<size_t>(sigma.cell_count()), 0.0);
        const long hot = 40;
        f[hot] = 1.0;
        const double alpha = 0.5;
        for (long x = 0; x < sigma.cell_count(); x += 13) {
            double want = 0;
            auto idx = sigma.cell_coords(x);
            DyadicCube cell{g.depth, idx};
            for (int lev = g.depth; lev >= 0; --lev) {
                DyadicCube q = ancestor(cell, lev);
                CellBox b = cube_cells(g, q);
                auto hotidx = sigma.cell_coords(hot);
                if (hotidx[0] >= b.lo[0] && hotidx[0] < b.hi[0]) {
                    double vol = side_length(g, q);
                    want = std::max(want, std::pow(vol, alpha - 1) * sigma.cell_mass_linear(hot));
                }
            }
            CHECK(frac_maximal(sigma, f, x, alpha) == Approx(want).margin(1e-14));
        }
    }
}

TEST_CASE("fractional integral values") {
    SECTION("zero measure gives zero") {
        Grid g(1, 6);
        auto geom = generate_lebesgue(g);
        std::vector<double> nu(static_cast<size_t>(geom.cell_count()), 0.0);
        CHECK(frac_integral(geom, nu, 5, 0.5) == 0.0);
    }
    SECTION("far point mass is the plain kernel value") {
        Grid g(1, 6);
        auto geom = generate_lebesgue(g);
        std::vector<double> nu(static_cast<size_t>(geom.cell_count()), 0.0);
        nu[10] = 2.5;
        const double d = std::abs(geom.cell_center(50)[0] - geom.cell_center(10)[0]);
        CHECK(frac_integral(geom, nu, 50, 0.5) == Approx(2.5 * std::pow(d, -0.5)).epsilon(1e-14));
    }
    SECTION("lebesgue on [0,1) at x near 1/2: refinement approaches 2 sqrt 2") {
        // int_0^1 |1/2 - y|^(-1/2) dy = 2 int_0^(1/2) t^(-1/2) dt = 2 sqrt 2
        const double want = 2.0 * std::sqrt(2.0);
        double prev = 1e9;
        for (int L : {6, 8, 10}) {
            Grid g(1, L);
            auto geom = generate_lebesgue(g);
            std::vector<double> nu(static_cast<size_t>(geom.cell_count()));
            for (long j = 0; j < geom.cell_count(); ++j)
                nu[static_cast<size_t>(j)] = geom.cell_mass_linear(j);
            const long x = geom.cell_count() / 2;
            double got = frac_integral(geom, nu, x, 0.5);
            double err = std::abs(got - want);
            CHECK(err < prev * 1.2);
            prev = err;
        }
        CHECK(prev < 2e-2);
    }
}

TEST_CASE("poisson integrals") {
    SECTION("near-center point mass gives about l^(alpha-n)") {
        Grid g(1, 8);
        DyadicCube q{3, {3}};
        std::vector<double> d(static_cast<size_t>(g.cell_count()), 0.0);
        CellBox b = cube_cells(g, q);
        long mid = (b.lo[0] + b.hi[0]) / 2 - 1;  // half a cell left of c_Q
        d[static_cast<size_t>(mid)] = 1.0;
        LatticeMeasure mu(g, std::move(d));
        const double l = side_length(g, q);
        for (double m : {1.0, 2.0, 3.0}) {
            const double got = poisson_m(g, q, mu, 0.0, m);
            const double mass = mu.total_mass();
            const double dd = g.cell_width() / 2;
            const double want = std::pow(l, m) / std::pow(l + dd, m + 1) * mass;
            CHECK(got == Approx(want).epsilon(1e-12));
        }
    }
    SECTION("monotone in the order m") {
        Grid g(1, 7, -1.0, 2.0);
        auto mu = generate_power(g, 0.5, 0.0);
        Rng rng(11, "pm");
        for (int t = 0; t < 30; ++t) {
            int lev = rng.index(g.depth + 1);
            DyadicCube q{lev, {rng.index(1L << lev)}};
            double p1 = poisson_m(g, q, mu, 0.25, 1.0);
            double p2 = poisson_m(g, q, mu, 0.25, 2.0);
            double p3 = poisson_m(g, q, mu, 0.25, 3.0);
            CHECK(p2 <= p1 * (1 + 1e-12));
            CHECK(p3 <= p2 * (1 + 1e-12));
        }
    }
    SECTION("reproducing Poisson of lebesgue approaches 2 as the root grows") {
        // P^0(Q, dx) = 2 over all of R; bounded roots truncate the tail
        double prev = 0;
        for (int e : {0, 2, 4}) {
            const double root_side = std::pow(2.0, e);
            Grid g(1, 7 + e, 0.0, root_side);
            auto mu = generate_lebesgue(g);
            DyadicCube q{6 + e, {0}};
            q.index[0] = (1L << (6 + e)) / 2;
            const double val = poisson(g, q, mu, 0.0);
            CHECK(val <= 2.0 + 1e-9);
            CHECK(val >= prev - 1e-12);
            prev = val;
        }
        CHECK(prev > 1.9);
    }
}

TEST_CASE("ellipticity probe") {
    std::vector<double> ladder{0.01, 0.1, 0.5, 1.0};
    std::vector<double> x0{0.3};
    SECTION("fractional integral kernel gives exactly 1") {
        KernelSpec k = KernelSpec::parse("fracint:0.5", 1, 0.5);
        CHECK(ellipticity_probe(k, ladder, 4, Rng(1, "ell"), x0) == Approx(1.0).margin(1e-12));
    }
    SECTION("hilbert kernel gives exactly 1") {
        KernelSpec k = KernelSpec::parse("hilbert", 1, 0.0);
        CHECK(ellipticity_probe(k, ladder, 4, Rng(2, "ell"), x0) == Approx(1.0).margin(1e-12));
    }
    SECTION("zero kernel flags nonelliptic") {
        KernelSpec k = KernelSpec::parse("zero", 1, 0.0);
        CHECK(ellipticity_probe(k, ladder, 4, Rng(3, "ell"), x0) == 0.0);
    }
}

TEST_CASE("poisson decay under goodness separation") {
    Grid g(1, 10);
    auto sigma = generate_lebesgue(g);
    // separation dist(J, dI) > 2 l(J)^eps l(I)^(1-eps) needs l(I)/l(J) > 2^(2/eps);
    // eps = 1/2 makes level gaps of 5+ workable inside an L=10 lattice
    SECTION("vacuous when sigma vanishes off I") {
        DyadicCube I{2, {1}}, K = I;
        DyadicCube J{7, {48}};  // [384,392) in cells, centered in I = [256,512)
        auto out = poisson_decay_check(g, J, I, K, sigma, 0.0, 1.0, 0.5);
        CHECK(out.vacuous);
    }
    SECTION("lebesgue sweep stays bounded and does not grow with depth") {
        DyadicCube K = root_cube(g);
        DyadicCube I{2, {1}};
        double shallow = 0, deep = 0;
        for (int lev : {7, 9}) {
            DyadicCube J{lev, {384 / (1L << (g.depth - lev))}};  // starts at cell 384
            auto out = poisson_decay_check(g, J, I, K, sigma, 0.0, 1.0, 0.5);
            CHECK(out.ratio < 50.0);
            (lev == 7 ? shallow : deep) = out.ratio;
        }
        CHECK(deep <= shallow * 1.5);
    }
    SECTION("precondition violation throws") {
        DyadicCube K = root_cube(g);
        DyadicCube I{2, {1}};
        DyadicCube J{3, {2}};  // touches the boundary of I
        CHECK_THROWS_AS(poisson_decay_check(g, J, I, K, sigma, 0.0, 1.0, 0.5), Error);
    }
}
