#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "dyadlab/error.hpp"

namespace dyadlab {

// alpha-fractional CZ kernels with size |K(x,y)| <= czc |x-y|^(alpha-n).
// Built-in kinds: hilbert (n=1), riesz:j, fracint:alpha, zero, plus custom
// callables.  Config syntax: "hilbert" | "riesz:j" | "fracint:alpha" | "zero".
enum class KernelKind { hilbert, riesz, frac_int, zero, custom };

struct KernelSpec {
    int n = 1;
    double alpha = 0;
    KernelKind kind = KernelKind::hilbert;
    int riesz_j = 0;       // component index for riesz
    double czc = 1.0;      // C_CZ in the size/smoothness bounds
    double delta_smooth = 0.5;  // the Holder delta in (kappa + delta)-smoothness
    std::function<double(const std::vector<double>&, const std::vector<double>&)> custom;

    bool antisymmetric() const { return kind == KernelKind::hilbert || kind == KernelKind::riesz; }

    double eval(const std::vector<double>& x, const std::vector<double>& y) const {
        switch (kind) {
            case KernelKind::zero:
                return 0.0;
            case KernelKind::hilbert: {
                const double t = x[0] - y[0];
                return t == 0 ? 0.0 : 1.0 / t;
            }
            case KernelKind::riesz: {
                double r2 = 0;
                for (size_t i = 0; i < x.size(); ++i) r2 += (x[i] - y[i]) * (x[i] - y[i]);
                if (r2 == 0) return 0.0;
                const double r = std::sqrt(r2);
                return (x[static_cast<size_t>(riesz_j)] - y[static_cast<size_t>(riesz_j)]) /
                       std::pow(r, n + 1 - alpha);
            }
            case KernelKind::frac_int: {
                double r2 = 0;
                for (size_t i = 0; i < x.size(); ++i) r2 += (x[i] - y[i]) * (x[i] - y[i]);
                if (r2 == 0) return 0.0;
                return std::pow(std::sqrt(r2), alpha - n);
            }
            case KernelKind::custom:
                return custom(x, y);
        }
        return 0.0;
    }

    // order-k derivative in the first variable along multi-index beta,
    // evaluated at (x, y); closed forms for the n=1 builtins, central
    // differences (step = h) otherwise
    double deriv_x(const std::vector<int>& beta, std::vector<double> x,
                   const std::vector<double>& y, double h) const {
        int order = 0;
        for (int b : beta) order += b;
        if (order == 0) return eval(x, y);
        if (n == 1) {
            const double t = x[0] - y[0];
            if (t == 0) return 0;
            if (kind == KernelKind::hilbert) {
                // d^k/dx^k (x-y)^-1 = (-1)^k k! (x-y)^-(k+1)
                double f = 1;
                for (int k = 1; k <= order; ++k) f *= -k;
                return f * std::pow(t, -(order + 1));
            }
            if (kind == KernelKind::frac_int) {
                // d^k/dx^k |t|^(a-1) with a = alpha, n = 1
                double a = alpha - 1;
                double coef = 1;
                for (int k = 0; k < order; ++k) coef *= (a - k);
                const double sgn = t > 0 ? 1.0 : -1.0;
                return coef * std::pow(std::abs(t), a - order) *
                       (order % 2 == 1 ? sgn : 1.0);
            }
            if (kind == KernelKind::zero) return 0.0;
        }
        // central differences of total order `order` along beta
        std::function<double(int)> rec = [&](int axis) -> double {
            while (axis < n && beta[static_cast<size_t>(axis)] == 0) ++axis;
            if (axis >= n) return eval(x, y);
            const double save = x[static_cast<size_t>(axis)];
            std::vector<int> rest = beta;
            --rest[static_cast<size_t>(axis)];
            auto sub = [&](double xv) {
                x[static_cast<size_t>(axis)] = xv;
                double v = KernelSpec::deriv_x(rest, x, y, h);
                x[static_cast<size_t>(axis)] = save;
                return v;
            };
            const double plus = sub(save + h / 2), minus = sub(save - h / 2);
            return (plus - minus) / h;
        };
        return rec(0);
    }

    static KernelSpec parse(const std::string& text, int n, double alpha) {
        KernelSpec k;
        k.n = n;
        k.alpha = alpha;
        if (text == "hilbert") {
            require(n == 1, "bad-parameter", "hilbert kernel needs n = 1");
            k.kind = KernelKind::hilbert;
        } else if (text.rfind("riesz:", 0) == 0) {
            k.kind = KernelKind::riesz;
            k.riesz_j = std::stoi(text.substr(6));
            require(k.riesz_j >= 0 && k.riesz_j < n, "bad-parameter", "riesz component out of range");
        } else if (text.rfind("fracint:", 0) == 0) {
            k.kind = KernelKind::frac_int;
            k.alpha = std::stod(text.substr(8));
            require(k.alpha > 0 && k.alpha < n, "bad-parameter", "fracint alpha in (0,n)");
        } else if (text == "zero") {
            k.kind = KernelKind::zero;
        } else {
            fail("bad-parameter", "unknown kernel: " + text);
        }
        return k;
    }
};

// Truncation pair (delta, R) with a C^2 smoothstep ramp over a width fraction
// `ramp_w` of each radius; the kernel passes unchanged on
// [delta(1+w), R(1-w)] and vanishes outside [delta, R].  rough = sharp cutoff.
struct TruncationSpec {
    double delta = 0;
    double R = 0;
    double ramp_w = 0.25;
    bool rough = false;

    static double smoothstep(double t) {
        if (t <= 0) return 0;
        if (t >= 1) return 1;
        return t * t * t * (10 + t * (-15 + 6 * t));
    }

    double eta(double r) const {
        if (r <= delta || r >= R) return 0;
        if (rough) return 1;
        double v = 1;
        const double up = delta * ramp_w;
        if (up > 0 && r < delta + up) v *= smoothstep((r - delta) / up);
        const double down = R * ramp_w;
        if (down > 0 && r > R - down) v *= smoothstep((R - r) / down);
        return v;
    }
};

} // namespace dyadlab
