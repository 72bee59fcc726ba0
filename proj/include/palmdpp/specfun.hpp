#pragma once

// Complex Gamma, Kummer 1F1 and Gauss 2F1.
//
// 1F1 is summed in double precision for |z| <= 2, in binary128 for |z| <= 40
// (the series cancels like e^{|z|} on the imaginary axis) and by the
// large-argument expansion beyond. The Euler integrals serve as independent
// quadrature routes.

#include <array>
#include <cmath>
#include <functional>
#include <string>

#include "common.hpp"
#include "quadrature.hpp"

namespace palmdpp {

namespace detail {

inline constexpr double lanczos_g = 7.0;
inline constexpr std::array<double, 9> lanczos_c = {
    0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
    771.32342877765313,   -176.61502916214059,   12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};

inline bool is_nonpositive_integer(cplx z) {
    return z.imag() == 0 && z.real() <= 0 && z.real() == std::round(z.real());
}

// log Gamma for Re z >= 1/2.
inline cplx log_gamma_right(cplx z) {
    z -= 1.0;
    cplx x = lanczos_c[0];
    for (int i = 1; i < 9; ++i) x += lanczos_c[i] / (z + double(i));
    cplx t = z + lanczos_g + 0.5;
    return 0.5 * std::log(2 * pi) + (z + 0.5) * std::log(t) - t + std::log(x);
}

}  // namespace detail

// log Gamma(z) on some branch; exp of it is Gamma(z).
inline cplx log_gamma(cplx z) {
    if (detail::is_nonpositive_integer(z))
        throw PoleError("log_gamma: pole at " + std::to_string(z.real()));
    if (z.real() >= 0.5) return detail::log_gamma_right(z);
    return std::log(pi) - std::log(std::sin(pi * z)) - detail::log_gamma_right(1.0 - z);
}

inline cplx Gamma(cplx z) {
    if (detail::is_nonpositive_integer(z))
        throw PoleError("gamma: pole at " + std::to_string(z.real()));
    if (z.real() >= 0.5) return std::exp(detail::log_gamma_right(z));
    // Reflection.
    return pi / (std::sin(pi * z) * std::exp(detail::log_gamma_right(1.0 - z)));
}

// 1/Gamma(z), entire; zero at the poles of Gamma.
inline cplx rgamma(cplx z) {
    if (detail::is_nonpositive_integer(z)) return 0.0;
    if (z.real() >= 0.5) return std::exp(-detail::log_gamma_right(z));
    return std::sin(pi * z) * std::exp(detail::log_gamma_right(1.0 - z)) / pi;
}

struct HypergeometricOptions {
    int max_terms = 100000;
    double series_double_radius = 2.0;
    double series_quad_radius = 40.0;
};

namespace detail {

using f128 = __float128;

struct qcplx {
    f128 re = 0, im = 0;
};
inline qcplx operator+(qcplx a, qcplx b) { return {a.re + b.re, a.im + b.im}; }
inline qcplx operator*(qcplx a, qcplx b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}
inline qcplx operator/(qcplx a, qcplx b) {
    f128 d = b.re * b.re + b.im * b.im;
    return {(a.re * b.re + a.im * b.im) / d, (a.im * b.re - a.re * b.im) / d};
}
inline f128 norm1(qcplx a) {
    return (a.re < 0 ? -a.re : a.re) + (a.im < 0 ? -a.im : a.im);
}
inline qcplx to_q(cplx z) { return {z.real(), z.imag()}; }
inline cplx to_d(qcplx z) { return {double(z.re), double(z.im)}; }

// Terms t_{k+1} = t_k (a+k) z / ((b+k)(k+1)); stop once past the peak and
// three consecutive terms are below the relative tolerance.
inline cplx series_1f1_double(cplx a, cplx b, cplx z, int max_terms) {
    cplx term = 1, sum = 1;
    int small = 0;
    double zabs = std::abs(z), aabs = std::abs(a);
    for (int k = 0; k < max_terms; ++k) {
        term *= (a + double(k)) * z / ((b + double(k)) * double(k + 1));
        sum += term;
        double ts = std::abs(term), ss = std::abs(sum);
        if (ts == 0 && k > zabs + aabs) return sum;
        if (ts <= 1e-17 * ss) {
            if (++small >= 3 && k > zabs + aabs) return sum;
        } else {
            small = 0;
        }
    }
    throw ConvergenceError("kummer_1f1: series did not converge");
}

inline cplx series_1f1_quad(cplx a, cplx b, cplx z, int max_terms) {
    qcplx qa = to_q(a), qb = to_q(b), qz = to_q(z);
    qcplx term{1, 0}, sum{1, 0};
    int small = 0;
    double zabs = std::abs(z), aabs = std::abs(a);
    for (int k = 0; k < max_terms; ++k) {
        qcplx kk{f128(k), 0};
        term = term * (qa + kk) * qz / ((qb + kk) * qcplx{f128(k + 1), 0});
        sum = sum + term;
        f128 ts = norm1(term), ss = norm1(sum);
        if (ts == 0 && k > zabs + aabs) return to_d(sum);
        if (ts <= f128(1e-20) * ss) {
            if (++small >= 3 && k > zabs + aabs) return to_d(sum);
        } else {
            small = 0;
        }
    }
    throw ConvergenceError("kummer_1f1: binary128 series did not converge");
}

// Sum_k (p)_k (q)_k / k! w^k, stopped at the smallest term.
inline cplx asymptotic_sum(cplx p, cplx q, cplx w) {
    cplx term = 1, sum = 1;
    double prev = 1;
    for (int k = 0; k < 400; ++k) {
        cplx next = term * (p + double(k)) * (q + double(k)) / double(k + 1) * w;
        double m = std::abs(next);
        if (m > prev) break;
        term = next;
        sum += term;
        prev = m;
        if (m <= 1e-17 * std::abs(sum)) break;
    }
    return sum;
}

// Large-|z| expansion of M(a,b,z) = Gamma(b) * (two exponential branches).
inline cplx asymptotic_1f1(cplx a, cplx b, cplx z) {
    const cplx I(0, 1);
    double sign = (z.imag() >= 0) ? 1.0 : -1.0;
    cplx first = std::exp(sign * I * pi * a - a * std::log(z)) * rgamma(b - a) *
                 asymptotic_sum(a, a - b + 1.0, -1.0 / z);
    cplx second = std::exp(z + (a - b) * std::log(z)) * rgamma(a) *
                  asymptotic_sum(1.0 - a, b - a, 1.0 / z);
    return Gamma(b) * (first + second);
}

}  // namespace detail

// Kummer's function 1F1(a; b; z) for complex b (not a nonpositive integer).
inline cplx hyp1f1(cplx a, cplx b, cplx z, const HypergeometricOptions& opt = {}) {
    if (detail::is_nonpositive_integer(b))
        throw DomainError("kummer_1f1: b is a nonpositive integer");
    if (!is_finite(a) || !is_finite(z)) throw DomainError("kummer_1f1: non-finite argument");
    double r = std::abs(z);
    if (r == 0) return 1.0;
    cplx v;
    if (r <= opt.series_double_radius)
        v = detail::series_1f1_double(a, b, z, opt.max_terms);
    else if (r <= opt.series_quad_radius)
        v = detail::series_1f1_quad(a, b, z, opt.max_terms);
    else
        v = detail::asymptotic_1f1(a, b, z);
    if (!is_finite(v)) throw NumericalError("kummer_1f1: non-finite value");
    return v;
}

inline cplx kummer_1f1(cplx a, double b, cplx z, const HypergeometricOptions& opt = {}) {
    return hyp1f1(a, cplx(b, 0), z, opt);
}

// d/dz 1F1(a; b; z) = (a/b) 1F1(a+1; b+1; z).
inline cplx kummer_1f1_deriv(cplx a, double b, cplx z) {
    return a / b * hyp1f1(a + 1.0, cplx(b + 1, 0), z);
}

namespace detail {

// Integral over (0, 1) of t^{alpha-1} (1-t)^{beta-1} h(t) dt, Re alpha, Re beta > 0.
// Near each endpoint t = u^{1/Re alpha} (resp. 1-t = v^{1/Re beta}) leaves a
// bounded integrand; the u-range is split into dyadic panels and each panel is
// subdivided until two successive values agree.
inline cplx euler_integral(cplx alpha, cplx beta, const std::function<cplx(double)>& h,
                           double tol = 1e-11) {
    double p = alpha.real(), q = beta.real();
    if (!(p > 0) || !(q > 0)) throw DomainError("euler_integral: needs Re alpha, Re beta > 0");
    auto side = [&](double pw, cplx ex_self, cplx ex_other, bool left, int sub) {
        double U = std::pow(0.5, pw);
        std::vector<double> br;
        br.push_back(U);
        for (int k = 1; k <= 64; ++k) br.push_back(U * std::ldexp(1.0, -k));
        std::sort(br.begin(), br.end());
        std::vector<double> fine;
        for (std::size_t i = 0; i + 1 < br.size(); ++i)
            for (int j = 0; j < sub; ++j) fine.push_back(br[i] + (br[i + 1] - br[i]) * j / sub);
        fine.push_back(br.back());
        auto rule = composite_rule(fine, 20);
        cplx imag_ratio(0, ex_self.imag() / pw);
        return rule.integrate([&](double u) -> cplx {
                   double t = std::pow(u, 1.0 / pw);
                   double tt = left ? t : 1.0 - t;
                   double other = 1.0 - t;
                   cplx f = std::exp(imag_ratio * std::log(u)) / pw;
                   f *= std::exp((ex_other - 1.0) * std::log(other));
                   return f * h(tt);
               });
    };
    auto total = [&](int sub) {
        return side(p, alpha, beta, true, sub) + side(q, beta, alpha, false, sub);
    };
    cplx prev = total(1);
    for (int sub = 2; sub <= 256; sub *= 2) {
        cplx cur = total(sub);
        if (std::abs(cur - prev) <= tol * std::max(1.0, std::abs(cur))) return cur;
        prev = cur;
    }
    throw ConvergenceError("euler_integral: panel doubling did not converge");
}

}  // namespace detail

// 1F1 from Gamma(b)/(Gamma(a)Gamma(b-a)) * int_0^1 e^{zt} t^{a-1} (1-t)^{b-a-1} dt.
inline cplx kummer_1f1_integral(cplx a, double b, cplx z) {
    cplx bb(b, 0);
    if (!(a.real() > 0) || !(b - a.real() > 0))
        throw DomainError("kummer_1f1_integral: needs b > Re a > 0");
    cplx pref = Gamma(bb) * rgamma(a) * rgamma(bb - a);
    return pref * detail::euler_integral(a, bb - a, [z](double t) { return std::exp(z * t); });
}

// 2F1(a, b; c; z) from the Euler integral
// Gamma(c)/(Gamma(b)Gamma(c-b)) int_0^1 t^{b-1}(1-t)^{c-b-1}(1-zt)^{-a} dt.
inline cplx gauss_2f1(cplx a, cplx b, double c, cplx z) {
    if (!(b.real() > 0) || !(c - b.real() > 0))
        throw DomainError("gauss_2f1: needs Re c > Re b > 0");
    if (z.imag() == 0 && z.real() >= 1) throw DomainError("gauss_2f1: z on the cut [1, inf)");
    cplx cc(c, 0);
    cplx pref = Gamma(cc) * rgamma(b) * rgamma(cc - b);
    return pref * detail::euler_integral(b, cc - b, [a, z](double t) {
               return std::exp(-a * std::log(1.0 - z * t));
           });
}

// Truncated Gauss series, |z| < 1.
inline cplx gauss_2f1_series(cplx a, cplx b, cplx c, cplx z, int max_terms = 100000) {
    if (std::abs(z) >= 1) throw DomainError("gauss_2f1_series: |z| >= 1");
    cplx term = 1, sum = 1;
    int small = 0;
    for (int k = 0; k < max_terms; ++k) {
        term *= (a + double(k)) * (b + double(k)) / ((c + double(k)) * double(k + 1)) * z;
        sum += term;
        if (std::abs(term) <= 1e-17 * std::abs(sum)) {
            if (++small >= 3 && k > std::abs(a) + std::abs(b)) return sum;
        } else {
            small = 0;
        }
    }
    throw ConvergenceError("gauss_2f1_series: no convergence");
}

// sup over |z| = r (m equispaced points) of |2F1(n, b; c; z/n) - 1F1(b; c; z)|.
inline double confluence_error(double n, cplx b, double c, double r = 1, int m = 64) {
    double e = 0;
    for (int k = 0; k < m; ++k) {
        cplx z = std::polar(r, 2 * pi * k / m);
        e = std::max(e, std::abs(gauss_2f1(n, b, c, z / n) - kummer_1f1(b, c, z)));
    }
    return e;
}

}  // namespace palmdpp
