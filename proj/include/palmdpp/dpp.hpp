#pragma once

// Determinantal-process functionals on Nystrom discretizations: Fredholm
// determinants, counting generating functions, correlation minors, and the
// Palm transform at infinity of an integrable kernel.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"
#include "kernel.hpp"
#include "quadrature.hpp"

namespace palmdpp {

struct DiscretizedKernel {
    std::vector<double> nodes;
    std::vector<double> weights;
    Eigen::MatrixXcd values;  // K(x_i, x_j)
    std::string label;

    std::size_t size() const { return nodes.size(); }

    // W^{1/2} K W^{1/2}.
    Eigen::MatrixXcd symmetrized() const {
        Eigen::VectorXd s(nodes.size());
        for (std::size_t i = 0; i < nodes.size(); ++i) s[i] = std::sqrt(weights[i]);
        return s.asDiagonal() * values * s.asDiagonal();
    }
};

inline DiscretizedKernel discretize(const KernelFunction& K, const QuadratureRule& q,
                                    std::string label = "") {
    DiscretizedKernel d;
    d.nodes = q.nodes;
    d.weights = q.weights;
    std::size_t n = q.size();
    d.values.resize(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) d.values(i, j) = K(q.nodes[i], q.nodes[j]);
    d.label = std::move(label);
    return d;
}

inline DiscretizedKernel discretize(const IntegrableKernel& K, const QuadratureRule& q) {
    return discretize(K.as_function(), q, K.label());
}

struct Interval {
    double lo = 0, hi = 0;
    bool contains(double x) const { return x >= lo && x <= hi; }
};

// Gauss-Legendre panels on each window, so window edges fall on panel edges.
inline QuadratureRule window_rule(const std::vector<Interval>& windows, int panels = 16,
                                  int order = 20) {
    QuadratureRule r;
    r.domain = "windows";
    for (const Interval& w : windows) r.append(interval_rule(w.lo, w.hi, panels, order));
    return r;
}

struct FredholmResult {
    cplx value;
    double rcond = 1;  // reciprocal condition estimate of I + W^{1/2} D K W^{1/2}
};

// det(I + D_{g-1} K W) evaluated as det(I + W^{1/2} D_{g-1} K W^{1/2}) by LU
// with partial pivoting.
template <class G>
FredholmResult fredholm_det_report(const DiscretizedKernel& K, G&& g) {
    std::size_t n = K.size();
    Eigen::MatrixXcd M = K.symmetrized();
    for (std::size_t i = 0; i < n; ++i) {
        cplx d = cplx(g(K.nodes[i])) - 1.0;
        M.row(Eigen::Index(i)) *= d;
    }
    M += Eigen::MatrixXcd::Identity(Eigen::Index(n), Eigen::Index(n));
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
    FredholmResult r{lu.determinant(), lu.rcond()};
    if (!is_finite(r.value))
        throw NumericalError("fredholm_det: non-finite determinant (rcond " +
                             std::to_string(r.rcond) + ")");
    return r;
}

template <class G>
cplx fredholm_det(const DiscretizedKernel& K, G&& g) {
    return fredholm_det_report(K, std::forward<G>(g)).value;
}

// E prod_j z_j^{#B_j} = det(1 + sum_j (z_j - 1) chi_{B_j} K).
inline cplx counting_mgf(const DiscretizedKernel& K, const std::vector<Interval>& windows,
                         const std::vector<cplx>& z) {
    if (windows.size() != z.size()) throw ParameterError("counting_mgf: windows and z differ in size");
    for (std::size_t i = 0; i < windows.size(); ++i) {
        if (!(windows[i].hi > windows[i].lo)) throw ParameterError("counting_mgf: empty window");
        for (std::size_t j = i + 1; j < windows.size(); ++j)
            if (windows[i].lo < windows[j].hi && windows[j].lo < windows[i].hi)
                throw ParameterError("counting_mgf: overlapping windows");
    }
    return fredholm_det(K, [&](double x) -> cplx {
        for (std::size_t j = 0; j < windows.size(); ++j)
            if (windows[j].contains(x)) return z[j];
        return 1.0;
    });
}

// Probability of no particle in [lo, hi].
inline double gap_probability(const KernelFunction& K, double lo, double hi, int panels = 16) {
    DiscretizedKernel D = discretize(K, interval_rule(lo, hi, panels), "gap");
    return fredholm_det(D, [](double) { return 0.0; }).real();
}

// k-point correlation det[K(x_i, x_j)].
inline double correlation(const KernelFunction& K, const std::vector<double>& pts) {
    std::size_t k = pts.size();
    if (k == 0) return 1.0;
    Eigen::MatrixXcd M(k, k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) M(i, j) = K(pts[i], pts[j]);
    return M.determinant().real();
}

inline double correlation(const IntegrableKernel& K, const std::vector<double>& pts) {
    return correlation(K.as_function(), pts);
}

// Eigenvalues of the Hermitian part of W^{1/2} K W^{1/2}.
inline std::vector<double> spectrum(const DiscretizedKernel& K) {
    Eigen::MatrixXcd S = K.symmetrized();
    Eigen::MatrixXcd H = 0.5 * (S + S.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H, Eigen::EigenvaluesOnly);
    return {es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size()};
}

// int_{|x| > R} K(x, x) dx (R = 0: whole domain), doubling panels until stable.
inline double tail_mass(const KernelFunction& K, double R, double tol = 1e-9, int max_panels = 1024) {
    if (R < 0) throw ParameterError("tail_mass: R < 0");
    auto eval = [&](int panels) {
        QuadratureRule q = R == 0 ? line_rule(panels) : tail_rule(R, panels);
        double s = 0;
        for (std::size_t i = 0; i < q.size(); ++i) s += q.weights[i] * K(q.nodes[i], q.nodes[i]).real();
        return s;
    };
    double prev = eval(8);
    for (int p = 16; p <= max_panels; p *= 2) {
        double cur = eval(p);
        if (!std::isfinite(cur)) break;
        if (std::abs(cur - prev) <= tol * std::max(1.0, std::abs(cur))) return cur;
        prev = cur;
    }
    throw ConvergenceError("tail_mass: diagonal not integrable beyond R = " + std::to_string(R));
}

inline double tail_mass(const IntegrableKernel& K, double R, double tol = 1e-9) {
    return tail_mass(K.as_function(), R, tol);
}

// Palm kernel at infinity: conjugate by x -> 1/x, take the Palm transform at 0
// (the inverted kernel is evaluated there through its weight-stripped form),
// conjugate back.
inline IntegrableKernel palm_at_infinity(const IntegrableKernel& K, const PalmOptions& opt = {}) {
    if (!std::isinf(K.spec().lo) || !std::isinf(K.spec().hi))
        throw DomainError("palm_at_infinity: kernel must live on the whole line");
    tail_mass(K, 1.0, 1e-7);
    IntegrableKernel inv = mobius_pushforward(K, inversion());
    IntegrableKernel reg = regularize(inv, 0.0);
    IntegrableKernel palm = palm_transform(reg, 0.0, opt);
    IntegrableKernel out = mobius_pushforward(palm, inversion());
    KernelSpec s = out.spec();
    s.label = K.label() + "|palm(inf)";
    return IntegrableKernel(std::move(s));
}

}  // namespace palmdpp
