#pragma once

#include <cmath>
#include <vector>

#include "dyadlab/error.hpp"

namespace dyadlab {

// Small dense helpers for the Gram computations: cyclic Jacobi eigensolver and
// a pseudo-inverse solve with relative rank cutoff.  Matrices are row-major.

struct SymEigen {
    std::vector<double> values;   // ascending
    std::vector<double> vectors;  // column k = eigenvector k (row-major dim x dim)
    int dim = 0;
};

inline SymEigen jacobi_eigensym(std::vector<double> a, int dim, int max_sweeps = 64) {
    SymEigen r;
    r.dim = dim;
    r.vectors.assign(static_cast<size_t>(dim) * dim, 0.0);
    for (int i = 0; i < dim; ++i) r.vectors[static_cast<size_t>(i) * dim + i] = 1.0;
    auto A = [&](int i, int j) -> double& { return a[static_cast<size_t>(i) * dim + j]; };
    auto V = [&](int i, int j) -> double& { return r.vectors[static_cast<size_t>(i) * dim + j]; };
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0;
        for (int i = 0; i < dim; ++i)
            for (int j = i + 1; j < dim; ++j) off += A(i, j) * A(i, j);
        if (off < 1e-30) break;
        for (int p = 0; p < dim - 1; ++p) {
            for (int q = p + 1; q < dim; ++q) {
                const double apq = A(p, q);
                if (std::abs(apq) < 1e-300) continue;
                const double theta = (A(q, q) - A(p, p)) / (2 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1));
                const double c = 1 / std::sqrt(t * t + 1);
                const double s = t * c;
                for (int k = 0; k < dim; ++k) {
                    const double akp = A(k, p), akq = A(k, q);
                    A(k, p) = c * akp - s * akq;
                    A(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < dim; ++k) {
                    const double apk = A(p, k), aqk = A(q, k);
                    A(p, k) = c * apk - s * aqk;
                    A(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < dim; ++k) {
                    const double vkp = V(k, p), vkq = V(k, q);
                    V(k, p) = c * vkp - s * vkq;
                    V(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    r.values.resize(static_cast<size_t>(dim));
    for (int i = 0; i < dim; ++i) r.values[static_cast<size_t>(i)] = A(i, i);
    // sort ascending, permuting vectors
    for (int i = 0; i < dim; ++i) {
        int m = i;
        for (int j = i + 1; j < dim; ++j)
            if (r.values[static_cast<size_t>(j)] < r.values[static_cast<size_t>(m)]) m = j;
        if (m != i) {
            std::swap(r.values[static_cast<size_t>(i)], r.values[static_cast<size_t>(m)]);
            for (int k = 0; k < dim; ++k)
                std::swap(r.vectors[static_cast<size_t>(k) * dim + i],
                          r.vectors[static_cast<size_t>(k) * dim + m]);
        }
    }
    return r;
}

// x = pinv(A) b for symmetric PSD A, dropping eigenvalues below cutoff*max
inline std::vector<double> solve_spd_pinv(const std::vector<double>& a, int dim,
                                          const std::vector<double>& b, double cutoff = 1e-13) {
    SymEigen e = jacobi_eigensym(a, dim);
    double lmax = 0;
    for (double v : e.values) lmax = std::max(lmax, std::abs(v));
    std::vector<double> x(static_cast<size_t>(dim), 0.0);
    if (lmax <= 0) return x;
    for (int k = 0; k < dim; ++k) {
        const double lam = e.values[static_cast<size_t>(k)];
        if (lam <= cutoff * lmax) continue;
        double dot = 0;
        for (int i = 0; i < dim; ++i)
            dot += e.vectors[static_cast<size_t>(i) * dim + k] * b[static_cast<size_t>(i)];
        dot /= lam;
        for (int i = 0; i < dim; ++i)
            x[static_cast<size_t>(i)] += dot * e.vectors[static_cast<size_t>(i) * dim + k];
    }
    return x;
}

// --- dense simplex for the capacity program ----------------------------------
//
// Solves   min c.h   s.t.  A h >= b,  h >= 0   with A >= 0, b > 0, c > 0,
// by running the primal simplex on the dual  max b.y : A^T y <= c, y >= 0,
// whose slack basis is feasible.  Returns the optimal value and the primal
// solution recovered from the reduced costs of the slack columns.

struct LpResult {
    bool ok = false;
    double value = 0;
    std::vector<double> h;
};

inline LpResult simplex_min_cover(const std::vector<std::vector<double>>& A,
                                  const std::vector<double>& b, const std::vector<double>& c,
                                  int max_iters = 20000) {
    const int m = static_cast<int>(b.size());  // primal constraints = dual vars
    const int p = static_cast<int>(c.size());  // primal vars = dual constraints
    LpResult res;
    if (m == 0) {
        res.ok = true;
        res.h.assign(static_cast<size_t>(p), 0.0);
        return res;
    }
    // tableau: rows = p dual constraints, cols = m dual vars + p slacks + rhs
    const int cols = m + p + 1;
    std::vector<std::vector<double>> T(static_cast<size_t>(p),
                                       std::vector<double>(static_cast<size_t>(cols), 0.0));
    for (int i = 0; i < p; ++i) {
        for (int j = 0; j < m; ++j) T[static_cast<size_t>(i)][static_cast<size_t>(j)] = A[static_cast<size_t>(j)][static_cast<size_t>(i)];
        T[static_cast<size_t>(i)][static_cast<size_t>(m + i)] = 1.0;
        T[static_cast<size_t>(i)][static_cast<size_t>(cols - 1)] = c[static_cast<size_t>(i)];
    }
    // objective row (maximize b.y): z_j - c_j starts at -b_j for dual vars
    std::vector<double> z(static_cast<size_t>(cols), 0.0);
    for (int j = 0; j < m; ++j) z[static_cast<size_t>(j)] = -b[static_cast<size_t>(j)];
    std::vector<int> basis(static_cast<size_t>(p));
    for (int i = 0; i < p; ++i) basis[static_cast<size_t>(i)] = m + i;

    for (int iter = 0; iter < max_iters; ++iter) {
        // entering column: most negative z (Bland on near ties for anti-cycling)
        int enter = -1;
        double best = -1e-12;
        for (int j = 0; j < cols - 1; ++j) {
            if (z[static_cast<size_t>(j)] < best - 1e-15) {
                best = z[static_cast<size_t>(j)];
                enter = j;
            }
        }
        if (enter < 0) {
            res.ok = true;
            break;
        }
        int leave = -1;
        double best_ratio = 0;
        for (int i = 0; i < p; ++i) {
            const double a = T[static_cast<size_t>(i)][static_cast<size_t>(enter)];
            if (a > 1e-12) {
                const double r = T[static_cast<size_t>(i)][static_cast<size_t>(cols - 1)] / a;
                if (leave < 0 || r < best_ratio - 1e-15 ||
                    (r < best_ratio + 1e-15 && basis[static_cast<size_t>(i)] < basis[static_cast<size_t>(leave)])) {
                    leave = i;
                    best_ratio = r;
                }
            }
        }
        if (leave < 0) return res;  // dual unbounded: primal infeasible (cannot happen here)
        // pivot
        const double piv = T[static_cast<size_t>(leave)][static_cast<size_t>(enter)];
        for (int j = 0; j < cols; ++j) T[static_cast<size_t>(leave)][static_cast<size_t>(j)] /= piv;
        for (int i = 0; i < p; ++i) {
            if (i == leave) continue;
            const double f = T[static_cast<size_t>(i)][static_cast<size_t>(enter)];
            if (f == 0) continue;
            for (int j = 0; j < cols; ++j)
                T[static_cast<size_t>(i)][static_cast<size_t>(j)] -= f * T[static_cast<size_t>(leave)][static_cast<size_t>(j)];
        }
        const double fz = z[static_cast<size_t>(enter)];
        for (int j = 0; j < cols; ++j) z[static_cast<size_t>(j)] -= fz * T[static_cast<size_t>(leave)][static_cast<size_t>(j)];
        basis[static_cast<size_t>(leave)] = enter;
    }
    if (!res.ok) return res;
    // primal solution from reduced costs under the slack columns
    res.h.assign(static_cast<size_t>(p), 0.0);
    for (int i = 0; i < p; ++i) res.h[static_cast<size_t>(i)] = std::max(0.0, z[static_cast<size_t>(m + i)]);
    res.value = 0;
    for (int i = 0; i < p; ++i) res.value += c[static_cast<size_t>(i)] * res.h[static_cast<size_t>(i)];
    return res;
}

} // namespace dyadlab
