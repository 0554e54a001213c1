#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "dyadlab/kernel.hpp"
#include "dyadlab/measure.hpp"
#include "dyadlab/parallel.hpp"

namespace dyadlab {

// T_{sigma,delta,R} f(x) = int K_{delta,R}(x,y) f(y) dsigma(y) realized as a
// dense matrix on lattice cells: entry (i,j) = eta(|x_i-y_j|) K(x_i,y_j) m_j,
// diagonal zeroed.  delta must cover at least two cell diameters so the
// excluded diagonal sits inside the dead zone.
class DiscretizedOperator {
public:
    DiscretizedOperator(KernelSpec kernel, TruncationSpec trunc, const LatticeMeasure& sigma,
                        long matrix_budget = 4'000'000)
        : kernel_(std::move(kernel)), trunc_(trunc), sigma_(&sigma) {
        const long N = sigma.cell_count();
        require(N * N <= matrix_budget, "budget-exceeded",
                "operator matrix would exceed the cell budget");
        const double cell_diam =
            sigma.grid().cell_width() * std::sqrt(static_cast<double>(sigma.grid().n));
        require(trunc_.delta >= 2 * cell_diam || kernel_.kind == KernelKind::zero,
                "delta-too-small", "truncation delta must cover two cell diameters");
        matrix_.assign(static_cast<size_t>(N) * static_cast<size_t>(N), 0.0);
        std::vector<std::vector<double>> centers(static_cast<size_t>(N));
        for (long i = 0; i < N; ++i) centers[static_cast<size_t>(i)] = sigma.cell_center(i);
        parallel_for(0, N, [&](long i) {
            const auto& x = centers[static_cast<size_t>(i)];
            double* row = &matrix_[static_cast<size_t>(i) * static_cast<size_t>(N)];
            for (long j = 0; j < N; ++j) {
                if (j == i) continue;
                const auto& y = centers[static_cast<size_t>(j)];
                double r2 = 0;
                for (int d = 0; d < sigma.grid().n; ++d) r2 += (x[d] - y[d]) * (x[d] - y[d]);
                const double r = std::sqrt(r2);
                const double e = trunc_.eta(r);
                if (e == 0) continue;
                row[j] = e * kernel_.eval(x, y) * sigma.cell_mass_linear(j);
            }
        });
    }

    const KernelSpec& kernel() const { return kernel_; }
    const TruncationSpec& truncation() const { return trunc_; }
    const LatticeMeasure& sigma() const { return *sigma_; }
    long size() const { return sigma_->cell_count(); }
    double entry(long i, long j) const {
        return matrix_[static_cast<size_t>(i) * static_cast<size_t>(size()) + static_cast<size_t>(j)];
    }

    std::vector<double> apply(const std::vector<double>& f) const {
        const long N = size();
        std::vector<double> out(static_cast<size_t>(N), 0.0);
        parallel_for(0, N, [&](long i) {
            const double* row = &matrix_[static_cast<size_t>(i) * static_cast<size_t>(N)];
            double s = 0;
            for (long j = 0; j < N; ++j) s += row[j] * f[static_cast<size_t>(j)];
            out[static_cast<size_t>(i)] = s;
        });
        return out;
    }

    // apply to an indicator-supported f, visiting only the support cells
    std::vector<double> apply_sparse(const std::vector<long>& support,
                                     const std::vector<double>& f_on_support) const {
        const long N = size();
        std::vector<double> out(static_cast<size_t>(N), 0.0);
        parallel_for(0, N, [&](long i) {
            const double* row = &matrix_[static_cast<size_t>(i) * static_cast<size_t>(N)];
            double s = 0;
            for (size_t k = 0; k < support.size(); ++k)
                s += row[support[k]] * f_on_support[k];
            out[static_cast<size_t>(i)] = s;
        });
        return out;
    }

private:
    KernelSpec kernel_;
    TruncationSpec trunc_;
    const LatticeMeasure* sigma_;
    std::vector<double> matrix_;
};

// The adjoint has kernel K*(x,y) = K(y,x) and integrates against the other
// measure; at matrix level its weighted normal matrix is the transpose of the
// primal one, which op_norm exploits for exact norm duality.
inline KernelSpec adjoint_kernel(const KernelSpec& k) {
    KernelSpec a = k;
    a.kind = KernelKind::custom;
    a.custom = [k](const std::vector<double>& x, const std::vector<double>& y) {
        return k.eval(y, x);
    };
    return a;
}

// --- pointwise operators ------------------------------------------------

// T_flat: max over a ladder of rough (eps, R) truncations of |integral|;
// a lower bound for the continuum supremum.
inline double maximal_truncation(const KernelSpec& kernel, const LatticeMeasure& sigma,
                                 const std::vector<double>& f, long x_cell,
                                 const std::vector<std::pair<double, double>>& ladder) {
    require(!ladder.empty(), "empty-ladder", "maximal truncation needs a ladder");
    const auto x = sigma.cell_center(x_cell);
    const long N = sigma.cell_count();
    double best = 0;
    for (auto [eps, R] : ladder) {
        double acc = 0;
        for (long j = 0; j < N; ++j) {
            if (j == x_cell) continue;
            const auto y = sigma.cell_center(j);
            double r2 = 0;
            for (size_t d = 0; d < x.size(); ++d) r2 += (x[d] - y[d]) * (x[d] - y[d]);
            const double r = std::sqrt(r2);
            if (r <= eps || r >= R) continue;
            acc += kernel.eval(x, y) * f[static_cast<size_t>(j)] * sigma.cell_mass_linear(j);
        }
        best = std::max(best, std::abs(acc));
    }
    return best;
}

// alpha-fractional Hardy-Littlewood maximal function of f dsigma at a cell
// center, over lattice cubes (all levels) containing the cell, plus the cube
// ladders of any configured shifted grids; a documented lower bound for the
// continuum supremum over all cubes.
inline double frac_maximal(const LatticeMeasure& sigma, const std::vector<double>& f, long x_cell,
                           double alpha, const std::vector<Grid>* extra_grids = nullptr) {
    const Grid& g = sigma.grid();
    auto idx = sigma.cell_coords(x_cell);
    double best = 0;
    auto ladder = [&](const Grid& gg) {
        // cell of x in gg's hierarchy (gg may be shifted)
        std::vector<long> local = idx;
        for (int i = 0; i < gg.n; ++i) {
            local[static_cast<size_t>(i)] -= gg.shift_on(i);
            if (local[static_cast<size_t>(i)] < 0 ||
                local[static_cast<size_t>(i)] >= gg.cells_per_axis())
                return;  // x outside this shifted hierarchy
        }
        DyadicCube cell{gg.depth, local};
        for (int lev = gg.depth; lev >= 0; --lev) {
            DyadicCube q = ancestor(cell, lev);
            double num = 0;
            sigma.for_each_cell(cube_cells(gg, q), [&](long lin) {
                num += std::abs(f[static_cast<size_t>(lin)]) * sigma.cell_mass_linear(lin);
            });
            double vol = std::pow(side_length(gg, q), gg.n);
            best = std::max(best, std::pow(vol, alpha / gg.n - 1.0) * num);
        }
    };
    ladder(g);
    if (extra_grids)
        for (const auto& gg : *extra_grids) ladder(gg);
    return best;
}

// I_alpha(nu)(x) for a signed cell-mass vector nu; the self-cell contribution
// uses the analytic integral for n=1 and a 4^n midpoint refinement for n>=2.
inline double frac_integral(const LatticeMeasure& geom, const std::vector<double>& nu_cell_mass,
                            long x_cell, double alpha) {
    require(alpha > 0, "bad-parameter", "I_alpha needs alpha > 0");
    const Grid& g = geom.grid();
    const auto x = geom.cell_center(x_cell);
    const int n = g.n;
    const double w = g.cell_width();
    double acc = 0;
    for (long j = 0; j < geom.cell_count(); ++j) {
        const double m = nu_cell_mass[static_cast<size_t>(j)];
        if (m == 0) continue;
        if (j == x_cell) {
            double avg;
            if (n == 1) {
                avg = 2.0 * std::pow(w / 2.0, alpha) / alpha / w;
            } else {
                const int sub = 4;
                double s = 0;
                long total = 1;
                for (int i = 0; i < n; ++i) total *= sub;
                auto yc = geom.cell_center(j);
                for (long t = 0; t < total; ++t) {
                    long rem = t;
                    double r2 = 0;
                    for (int i = 0; i < n; ++i) {
                        long k = rem % sub;
                        rem /= sub;
                        double y = yc[static_cast<size_t>(i)] - w / 2 + (k + 0.5) * (w / sub);
                        r2 += (x[static_cast<size_t>(i)] - y) * (x[static_cast<size_t>(i)] - y);
                    }
                    if (r2 > 0) s += std::pow(std::sqrt(r2), alpha - n);
                }
                avg = s / static_cast<double>(total);
            }
            acc += avg * m;
            continue;
        }
        const auto y = geom.cell_center(j);
        double r2 = 0;
        for (int i = 0; i < n; ++i) r2 += (x[static_cast<size_t>(i)] - y[static_cast<size_t>(i)]) * (x[static_cast<size_t>(i)] - y[static_cast<size_t>(i)]);
        acc += std::pow(std::sqrt(r2), alpha - n) * m;
    }
    return acc;
}

// --- Poisson integrals ----------------------------------------------------
//
// Integration runs over the root cube only; callers treat values as
// tail-truncated.

// reproducing Poisson P^alpha(Q, mu) = int (l / (l + |x - c_Q|)^2)^(n-alpha) dmu
inline double poisson(const Grid& g, const DyadicCube& q, const LatticeMeasure& mu, double alpha) {
    const double l = side_length(g, q);
    auto c = cube_center(g, q);
    double acc = 0;
    for (long j = 0; j < mu.cell_count(); ++j) {
        const double m = mu.cell_mass_linear(j);
        if (m == 0) continue;
        auto y = mu.cell_center(j);
        double r2 = 0;
        for (int i = 0; i < g.n; ++i) r2 += (y[static_cast<size_t>(i)] - c[static_cast<size_t>(i)]) * (y[static_cast<size_t>(i)] - c[static_cast<size_t>(i)]);
        const double d = std::sqrt(r2);
        acc += std::pow(l / ((l + d) * (l + d)), g.n - alpha) * m;
    }
    return acc;
}

// P_m^alpha(Q, mu) = int l^m / (l + |y - c_Q|)^(m+n-alpha) dmu, m >= 1 (real)
inline double poisson_m(const Grid& g, const DyadicCube& q, const LatticeMeasure& mu, double alpha,
                        double m_order, const std::vector<char>* support_mask = nullptr) {
    const double l = side_length(g, q);
    auto c = cube_center(g, q);
    double acc = 0;
    for (long j = 0; j < mu.cell_count(); ++j) {
        if (support_mask && !(*support_mask)[static_cast<size_t>(j)]) continue;
        const double m = mu.cell_mass_linear(j);
        if (m == 0) continue;
        auto y = mu.cell_center(j);
        double r2 = 0;
        for (int i = 0; i < g.n; ++i) r2 += (y[static_cast<size_t>(i)] - c[static_cast<size_t>(i)]) * (y[static_cast<size_t>(i)] - c[static_cast<size_t>(i)]);
        const double d = std::sqrt(r2);
        acc += std::pow(l, m_order) / std::pow(l + d, m_order + g.n - alpha) * m;
    }
    return acc;
}

// min over the sample ladder of |K(x, x+tu)| t^(n-alpha): positive certifies
// sampled ellipticity
inline double ellipticity_probe(const KernelSpec& kernel, const std::vector<double>& t_ladder,
                                int direction_samples, Rng rng,
                                const std::vector<double>& x0) {
    const int n = kernel.n;
    double cmin = kInf;
    std::vector<double> u(static_cast<size_t>(n));
    for (int s = 0; s < std::max(direction_samples, n == 1 ? 2 : 4); ++s) {
        if (n == 1) {
            u[0] = s % 2 == 0 ? 1.0 : -1.0;
        } else {
            double norm = 0;
            for (int i = 0; i < n; ++i) {
                u[static_cast<size_t>(i)] = rng.normal();
                norm += u[static_cast<size_t>(i)] * u[static_cast<size_t>(i)];
            }
            norm = std::sqrt(norm);
            for (int i = 0; i < n; ++i) u[static_cast<size_t>(i)] /= norm;
        }
        for (double t : t_ladder) {
            require(t > 0, "bad-parameter", "ladder t must be positive");
            std::vector<double> y = x0;
            for (int i = 0; i < n; ++i) y[static_cast<size_t>(i)] += t * u[static_cast<size_t>(i)];
            cmin = std::min(cmin, std::abs(kernel.eval(x0, y)) * std::pow(t, n - kernel.alpha));
        }
    }
    return std::isfinite(cmin) ? cmin : 0.0;
}

// ratio P_m(J, sigma 1_{K\I}) / [(l(J)/l(I))^(m - eps(n+m-alpha)) P_m(I, sigma 1_{K\I})]
struct PoissonDecay {
    double ratio = 0;
    bool vacuous = false;
};

inline PoissonDecay poisson_decay_check(const Grid& g, const DyadicCube& J, const DyadicCube& I,
                                        const DyadicCube& K, const LatticeMeasure& sigma,
                                        double alpha, double m_order, double eps) {
    require(strictly_contains(I, J) && contains(K, I), "precondition-violated",
            "need J inside I inside K");
    // dist(J, boundary of I) > 2 sqrt(n) l(J)^eps l(I)^(1-eps)
    const long sJ = side_cells(g, J), sI = side_cells(g, I);
    long d = sI;
    for (int i = 0; i < g.n; ++i) {
        const long jlo = J.index[i] * sJ, ilo = I.index[i] * sI;
        d = std::min(d, std::min(jlo - ilo, (ilo + sI) - (jlo + sJ)));
    }
    const double rhs_cells = 2 * std::sqrt(static_cast<double>(g.n)) *
                             std::pow(static_cast<double>(sJ), eps) *
                             std::pow(static_cast<double>(sI), 1 - eps);
    require(static_cast<double>(d) > rhs_cells, "precondition-violated",
            "J is not good inside I");
    // restrict sigma to K \ I
    std::vector<char> mask(static_cast<size_t>(sigma.cell_count()), 0);
    CellBox kb = cube_cells(g, K), ib = cube_cells(g, I);
    sigma.for_each_cell(kb, [&](long lin) { mask[static_cast<size_t>(lin)] = 1; });
    sigma.for_each_cell(ib, [&](long lin) { mask[static_cast<size_t>(lin)] = 0; });
    const double pj = poisson_m(g, J, sigma, alpha, m_order, &mask);
    const double pi = poisson_m(g, I, sigma, alpha, m_order, &mask);
    PoissonDecay out;
    if (pi == 0) {
        out.vacuous = pj == 0;
        out.ratio = 0;
        return out;
    }
    const double lr = side_length(g, J) / side_length(g, I);
    out.ratio = pj / (std::pow(lr, m_order - eps * (g.n + m_order - alpha)) * pi);
    return out;
}

} // namespace dyadlab
