#pragma once

// The confluent hypergeometric kernel K^(s) on R \ {0} and its image Pi^(s)
// under y = 1/x.
//
//   A~(x) = e^{-i/x} 1F1(s; 2Re s+1; 2i/x)
//   B~(x) = (2/x) e^{-i/x} 1F1(s+1; 2Re s+2; 2i/x)
//   rho~(x) = |2/x|^{Re s} e^{pi Im s sgn(x) / 2}
//   c_s = Gamma(s+1) Gamma(conj s+1) / (2 pi Gamma(2Re s+1) Gamma(2Re s+2))
//
// The upper parameter s+1 in B~ and the second denominator 2Re s+2 in c_s are
// the conventions under which the kernel is Hermitian and matches the scaling
// limit of pseudo-Jacobi kernels; ChkConvention::printed() selects the
// alternative (s and Re s+2) for comparison.

#include <cmath>
#include <functional>
#include <vector>

#include "common.hpp"
#include "kernel.hpp"
#include "quadrature.hpp"
#include "specfun.hpp"

namespace palmdpp {

class HuaPickrellParam {
public:
    explicit HuaPickrellParam(cplx s) : s_(s) {
        if (!is_finite(s) || !(s.real() > -0.5))
            throw ParameterError("Hua-Pickrell parameter needs Re s > -1/2, got " +
                                 std::to_string(s.real()) + (s.imag() >= 0 ? "+" : "") +
                                 std::to_string(s.imag()) + "i");
    }
    HuaPickrellParam(double re, double im) : HuaPickrellParam(cplx(re, im)) {}

    cplx value() const { return s_; }
    double re() const { return s_.real(); }
    double im() const { return s_.imag(); }
    HuaPickrellParam shifted(int k = 1) const { return HuaPickrellParam(s_ + double(k)); }

private:
    cplx s_;
};

struct ChkConvention {
    bool shifted_q = true;   // 1F1 upper parameter in B~: s+1 (true) or s
    bool doubled_cs = true;  // second Gamma in the denominator of c_s: 2Re s+2 (true) or Re s+2

    static ChkConvention printed() { return {false, false}; }
    static ChkConvention standard() { return {true, true}; }
};

inline double chk_constant(const HuaPickrellParam& p, const ChkConvention& conv = {}) {
    cplx s = p.value();
    double d2 = conv.doubled_cs ? 2 * p.re() + 2 : p.re() + 2;
    cplx v = Gamma(s + 1.0) * Gamma(std::conj(s) + 1.0) * rgamma(2 * p.re() + 1) * rgamma(d2) /
             (2 * pi);
    return v.real();
}

// Functions of the two decompositions, evaluated at complex arguments where
// meaningful (A~, B~, A-diamond, B-diamond are holomorphic off 0).
struct ChkComponents {
    HuaPickrellParam param{0.5, 0};
    ChkConvention conv;
    double c_s = 0;

    cplx upper_q() const { return param.value() + (conv.shifted_q ? 1.0 : 0.0); }
    double b1() const { return 2 * param.re() + 1; }
    double b2() const { return 2 * param.re() + 2; }

    // B-diamond(y) = e^{-iy} 1F1(s; 2Re s+1; 2iy), A-diamond(y) = 2y e^{-iy} 1F1(q; 2Re s+2; 2iy).
    ABValue diamond(cplx y) const {
        const cplx I(0, 1);
        cplx e = std::exp(-I * y);
        return {2.0 * y * e * hyp1f1(upper_q(), b2(), 2.0 * I * y),
                e * hyp1f1(param.value(), b1(), 2.0 * I * y)};
    }

    ABJet diamond_jet(double y) const {
        const cplx I(0, 1);
        cplx z = 2.0 * I * y, e = std::exp(-I * y);
        cplx s = param.value(), q = upper_q();
        cplx m1 = hyp1f1(s, b1(), z), dm1 = s / b1() * hyp1f1(s + 1.0, b1() + 1, z);
        cplx m2 = hyp1f1(q, b2(), z), dm2 = q / b2() * hyp1f1(q + 1.0, b2() + 1, z);
        cplx bd = e * m1, dbd = e * (-I * m1 + 2.0 * I * dm1);
        cplx g = e * m2, dg = e * (-I * m2 + 2.0 * I * dm2);
        return {2.0 * y * g, bd, 2.0 * g + 2.0 * y * dg, dbd};
    }

    // A~(x) = B-diamond(1/x), B~(x) = A-diamond(1/x).
    ABValue tilde(cplx x) const {
        ABValue d = diamond(1.0 / x);
        return {d.b, d.a};
    }

    ABJet tilde_jet(double x) const {
        ABJet d = diamond_jet(1.0 / x);
        double f = -1.0 / (x * x);
        return {d.b, d.a, d.db * f, d.da * f};
    }

    double rho_tilde(double x) const {
        return std::pow(std::abs(2.0 / x), param.re()) * std::exp(pi * param.im() * sgn(x) / 2);
    }

    double rho_diamond(double y) const {
        return std::pow(std::abs(2.0 * y), param.re()) * std::exp(pi * param.im() * sgn(y) / 2);
    }

    cplx P(double x) const { return rho_tilde(x) * tilde(x).a; }
    cplx Q(double x) const { return rho_tilde(x) * tilde(x).b; }

    // c_s (P(x)Q(y) - P(y)Q(x)) / (x - y), x != y.
    cplx kernel_pq(double x, double y) const {
        return c_s * (P(x) * Q(y) - P(y) * Q(x)) / (x - y);
    }
};

inline ChkComponents chk_components(const HuaPickrellParam& p, const ChkConvention& conv = {}) {
    ChkComponents c;
    c.param = p;
    c.conv = conv;
    c.c_s = chk_constant(p, conv);
    return c;
}

// K^(s) with rho = sqrt(c_s) rho~.
inline IntegrableKernel make_chk(const HuaPickrellParam& p, const ChkConvention& conv = {}) {
    ChkComponents c = chk_components(p, conv);
    double root = std::sqrt(c.c_s);
    KernelSpec s;
    s.ab = [c](cplx z) { return c.tilde(z); };
    s.jet = [c](double x) { return c.tilde_jet(x); };
    s.rho = [c, root](double x) { return root * c.rho_tilde(x); };
    s.singular.push_back({0.0, std::nullopt, false});
    s.label = "chk";
    return IntegrableKernel(std::move(s));
}

// Pi^(s)(x, y) = K^(s)(1/x, 1/y) / (xy) built from A-diamond, B-diamond with
// rho(y) = sqrt(c_s) |2y|^{Re s} e^{pi Im s sgn(y)/2}. At y = 0 the weight is
// registered as 1, so Pi^(s)(0, 0) is the weight-stripped value 2.
inline IntegrableKernel make_pi(const HuaPickrellParam& p, const ChkConvention& conv = {}) {
    ChkComponents c = chk_components(p, conv);
    double root = std::sqrt(c.c_s);
    KernelSpec s;
    s.ab = [c](cplx z) { return c.diamond(z); };
    s.jet = [c](double y) { return c.diamond_jet(y); };
    s.rho = [c, root](double y) { return root * c.rho_diamond(y); };
    s.singular.push_back({0.0, 1.0, true});
    s.label = "pi";
    return IntegrableKernel(std::move(s));
}

// sup over test pairs of |int K(x,u) K(u,y) du - K(x,y)| for a kernel given as
// a function, with the integral taken by `quad`.
inline double projection_residual(const KernelFunction& K, const QuadratureRule& quad,
                                  const std::vector<double>& test) {
    double worst = 0;
    std::vector<std::vector<cplx>> col(test.size(), std::vector<cplx>(quad.size()));
    for (std::size_t i = 0; i < test.size(); ++i)
        for (std::size_t j = 0; j < quad.size(); ++j) col[i][j] = K(test[i], quad.nodes[j]);
    for (std::size_t i = 0; i < test.size(); ++i)
        for (std::size_t k = 0; k < test.size(); ++k) {
            cplx acc = 0;
            for (std::size_t j = 0; j < quad.size(); ++j)
                acc += col[i][j] * quad.weights[j] * K(quad.nodes[j], test[k]);
            worst = std::max(worst, std::abs(acc - K(test[i], test[k])));
        }
    return worst;
}

struct ProjectionOptions {
    std::vector<double> windows{12.5, 25, 50, 100};
    std::vector<double> test_points{-4, -2, -1, -0.5, 0.5, 1, 2, 4};
    double cutoff = 400;   // v-range [1/R, cutoff] in the inverted variable, then doubled
    int panels_per_unit = 1;
};

struct ProjectionReport {
    std::vector<double> windows;
    std::vector<double> residuals;
    bool decreasing = false;
    double bound_outer = 0;  // int_{|x|>1} dx / ((x^2+1)|x|^{2Re s})
    double bound_inner = 0;  // int_{-1}^{1} |x|^{2Re s} dx
};

// Projection residual of K^(s) on windows [-R, R]. The integral over
// |u| < 1 runs in v = 1/u over [1, infinity): composite Gauss-Legendre up to
// `cutoff` and 2 * cutoff, combined by Richardson extrapolation of the 1/v
// tail; |u| in [1, R] is integrated directly.
inline ProjectionReport projection_check(const HuaPickrellParam& p, const ProjectionOptions& opt = {},
                                         const ChkConvention& conv = {}) {
    IntegrableKernel K = make_chk(p, conv);
    ProjectionReport rep;
    const auto& T = opt.test_points;
    std::size_t nt = T.size();
    std::vector<ABValue> abT(nt);
    std::vector<double> rhoT(nt);
    for (std::size_t i = 0; i < nt; ++i) {
        abT[i] = K.ab(T[i]);
        rhoT[i] = K.rho(T[i]);
    }
    std::vector<std::vector<cplx>> target(nt, std::vector<cplx>(nt));
    for (std::size_t i = 0; i < nt; ++i)
        for (std::size_t k = 0; k < nt; ++k) target[i][k] = K(T[i], T[k]);

    // Accumulate sum_j w_j K(x_i, u_j) K(u_j, x_k) into acc for nodes u_j.
    auto accumulate = [&](const QuadratureRule& q, std::vector<std::vector<cplx>>& acc) {
        for (std::size_t j = 0; j < q.size(); ++j) {
            double u = q.nodes[j];
            ABValue au = K.ab(u);
            double ru = K.rho(u);
            std::vector<cplx> kx(nt);
            for (std::size_t i = 0; i < nt; ++i) {
                cplx num = abT[i].a * au.b - au.a * abT[i].b;
                kx[i] = rhoT[i] * ru * num / (T[i] - u);
            }
            for (std::size_t i = 0; i < nt; ++i)
                for (std::size_t k = 0; k < nt; ++k) acc[i][k] += q.weights[j] * kx[i] * kx[k];
        }
    };
    auto zero = [&] { return std::vector<std::vector<cplx>>(nt, std::vector<cplx>(nt, 0.0)); };

    // Inner part |u| < 1 through v = 1/u: du = dv / v^2.
    auto inner_rule = [&](double v0, double v1) {
        std::vector<double> br;
        int panels = std::max(1, int(std::ceil((v1 - v0) * opt.panels_per_unit)));
        for (int i = 0; i <= panels; ++i) br.push_back(v0 + (v1 - v0) * i / panels);
        QuadratureRule qv = composite_rule(br, 20);
        QuadratureRule q;
        for (std::size_t j = 0; j < qv.size(); ++j) {
            double v = qv.nodes[j];
            q.nodes.push_back(1.0 / v);
            q.weights.push_back(qv.weights[j] / (v * v));
            q.nodes.push_back(-1.0 / v);
            q.weights.push_back(qv.weights[j] / (v * v));
        }
        return q;
    };
    auto acc_near = zero(), acc_far = zero();
    accumulate(inner_rule(1.0, opt.cutoff), acc_near);
    accumulate(inner_rule(opt.cutoff, 2 * opt.cutoff), acc_far);

    double prev = std::numeric_limits<double>::infinity();
    rep.decreasing = true;
    for (double R : opt.windows) {
        // |u| in [1, R], log-spaced panels.
        auto acc = zero();
        int panels = std::max(4, int(8 * std::log2(std::max(R, 2.0))));
        std::vector<double> br;
        for (int i = 0; i <= panels; ++i) br.push_back(std::pow(R, double(i) / panels));
        QuadratureRule half = composite_rule(br, 20);
        QuadratureRule outer;
        for (std::size_t j = 0; j < half.size(); ++j) {
            outer.nodes.push_back(half.nodes[j]);
            outer.weights.push_back(half.weights[j]);
            outer.nodes.push_back(-half.nodes[j]);
            outer.weights.push_back(half.weights[j]);
        }
        accumulate(outer, acc);
        double worst = 0;
        for (std::size_t i = 0; i < nt; ++i)
            for (std::size_t k = 0; k < nt; ++k) {
                // Richardson: I(2V) = near + far, I(V) = near; I_inf ~ 2 I(2V) - I(V).
                cplx inner = 2.0 * (acc_near[i][k] + acc_far[i][k]) - acc_near[i][k];
                worst = std::max(worst, std::abs(acc[i][k] + inner - target[i][k]));
            }
        rep.windows.push_back(R);
        rep.residuals.push_back(worst);
        if (!(worst < prev)) rep.decreasing = false;
        prev = worst;
    }
    double rs = p.re();
    rep.bound_inner = 2.0 / (2 * rs + 1);
    rep.bound_outer = 2.0 * integrate_doubling(
                                [rs](double t) { return std::pow(t, 2 * rs) / (1 + t * t); }, 0.0,
                                1.0, 1e-12, 4, 40);
    return rep;
}

}  // namespace palmdpp
