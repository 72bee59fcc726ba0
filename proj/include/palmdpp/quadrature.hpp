#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"

namespace palmdpp {

// Nodes and positive weights for sum_i w_i f(x_i) ~ integral f.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    std::string domain;

    std::size_t size() const { return nodes.size(); }

    double total_weight() const {
        double s = 0;
        for (double w : weights) s += w;
        return s;
    }

    template <class F>
    auto integrate(F&& f) const -> decltype(f(0.0)) {
        decltype(f(0.0)) acc{};
        for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * f(nodes[i]);
        return acc;
    }

    void append(const QuadratureRule& other) {
        nodes.insert(nodes.end(), other.nodes.begin(), other.nodes.end());
        weights.insert(weights.end(), other.weights.begin(), other.weights.end());
    }
};

// Gauss-Legendre on [-1, 1] by Newton iteration on P_n.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
    std::vector<double> x(n), w(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1, p1 = z;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1;
            dp = n * (z * p1 - p0) / (z * z - 1);
            double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        double p0 = 1, p1 = z;
        for (int k = 2; k <= n; ++k) {
            double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (z * p1 - p0) / (z * z - 1);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = w[n - 1 - i] = 2 / ((1 - z * z) * dp * dp);
    }
    if (n % 2 == 1) x[n / 2] = 0;
    return {x, w};
}

// Composite Gauss-Legendre over consecutive breakpoints.
inline QuadratureRule composite_rule(const std::vector<double>& breaks, int order = 20,
                                     std::string domain = "interval") {
    auto [gx, gw] = gauss_legendre(order);
    QuadratureRule r;
    r.domain = std::move(domain);
    r.nodes.reserve((breaks.size() - 1) * order);
    r.weights.reserve((breaks.size() - 1) * order);
    for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
        double a = breaks[p], b = breaks[p + 1];
        double h = 0.5 * (b - a), m = 0.5 * (a + b);
        for (int j = 0; j < order; ++j) {
            r.nodes.push_back(m + h * gx[j]);
            r.weights.push_back(h * gw[j]);
        }
    }
    return r;
}

// Breakpoints on [a, b]: `panels` uniform panels, the outer ones refined
// geometrically by `levels` halvings toward each flagged endpoint.
inline std::vector<double> graded_breaks(double a, double b, int panels, int levels,
                                         bool grade_left = true, bool grade_right = true) {
    std::vector<double> br;
    double h = (b - a) / panels;
    if (grade_left) {
        for (int l = levels; l >= 1; --l) br.push_back(a + h * std::ldexp(1.0, -l));
        br.insert(br.begin(), a);
    } else {
        br.push_back(a);
    }
    for (int p = 1; p < panels; ++p) br.push_back(a + p * h);
    if (grade_right) {
        for (int l = 1; l <= levels; ++l) br.push_back(b - h * std::ldexp(1.0, -l));
    }
    br.push_back(b);
    std::sort(br.begin(), br.end());
    br.erase(std::unique(br.begin(), br.end()), br.end());
    return br;
}

inline QuadratureRule interval_rule(double a, double b, int panels, int order = 20, int levels = 0) {
    return composite_rule(graded_breaks(a, b, panels, levels, levels > 0, levels > 0), order,
                          "interval");
}

// Whole line through x = tan t, t in (-pi/2, pi/2); weights carry sec^2 t.
// Endpoint grading resolves integrands that decay slowly at infinity.
inline QuadratureRule line_rule(int panels, int order = 20, int levels = 30) {
    QuadratureRule t = composite_rule(graded_breaks(-pi / 2, pi / 2, panels, levels), order);
    QuadratureRule r;
    r.domain = "line";
    for (std::size_t i = 0; i < t.size(); ++i) {
        double c = std::cos(t.nodes[i]);
        if (c <= 0) continue;
        r.nodes.push_back(std::tan(t.nodes[i]));
        r.weights.push_back(t.weights[i] / (c * c));
    }
    return r;
}

// |x| > R on both sides, via x = tan t restricted to |t| > atan R.
inline QuadratureRule tail_rule(double R, int panels, int order = 20, int levels = 30) {
    double t0 = std::atan(R);
    QuadratureRule r;
    r.domain = "tail";
    auto half = composite_rule(graded_breaks(t0, pi / 2, panels, levels, false, true), order);
    for (std::size_t i = 0; i < half.size(); ++i) {
        double c = std::cos(half.nodes[i]);
        if (c <= 0) continue;
        double x = std::tan(half.nodes[i]), w = half.weights[i] / (c * c);
        r.nodes.push_back(-x);
        r.weights.push_back(w);
        r.nodes.push_back(x);
        r.weights.push_back(w);
    }
    return r;
}

// Periodic trapezoid on the angle interval (-pi, pi], weights sum to 2*pi.
inline QuadratureRule circle_trapezoid(int m) {
    QuadratureRule r;
    r.domain = "circle";
    for (int j = 0; j < m; ++j) {
        r.nodes.push_back(-pi + 2 * pi * (j + 0.5) / m);
        r.weights.push_back(2 * pi / m);
    }
    return r;
}

// Angles in (0, 2*pi) graded toward both ends, for integrands singular at
// theta = 0 (mod 2*pi). `oscillations` bounds the highest frequency resolved.
inline QuadratureRule circle_graded(int oscillations, int order = 20, int levels = 40) {
    int panels = std::max(8, 2 * oscillations);
    QuadratureRule r = composite_rule(graded_breaks(0, 2 * pi, panels, levels), order, "circle");
    return r;
}

// Integrate f over [a, b] by composite Gauss-Legendre, doubling panels until two
// successive values agree to `tol` relative (absolute below 1).
template <class F>
auto integrate_doubling(F&& f, double a, double b, double tol = 1e-11, int panels = 4,
                        int levels = 0, int max_panels = 1 << 14) -> decltype(f(0.0)) {
    using T = decltype(f(0.0));
    auto eval = [&](int p) {
        return interval_rule(a, b, p, 20, levels).integrate(f);
    };
    T prev = eval(panels);
    for (int p = 2 * panels; p <= max_panels; p *= 2) {
        T cur = eval(p);
        if (std::abs(cur - prev) <= tol * std::max(1.0, double(std::abs(cur)))) return cur;
        prev = cur;
    }
    throw ConvergenceError("integrate_doubling: no convergence on [" + std::to_string(a) + ", " +
                           std::to_string(b) + "]");
}

}  // namespace palmdpp
