#pragma once

// Integrable kernels
//   Pi(x, y) = g(x) conj(g(y)) rho(x) rho(y) (A(x)B(y) - A(y)B(x)) / (x - y)
// with A, B holomorphic near the real domain, rho > 0 and an optional
// unimodular gauge g. Transforms (Palm, normal form, Mobius change of
// variables, regauging) return new kernels that share the parents' immutable
// state.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"
#include "quadrature.hpp"

namespace palmdpp {

struct ABValue {
    cplx a, b;
};

struct ABJet {
    cplx a, b, da, db;
};

using ABFunction = std::function<ABValue(cplx)>;
using JetFunction = std::function<ABJet(double)>;
using WeightFunction = std::function<double(double)>;
using PhaseFunction = std::function<cplx(double)>;
using KernelFunction = std::function<cplx(double, double)>;

// A point where rho jumps, vanishes or diverges, or where A, B have no direct
// evaluation. `rho_value` is the registered value used when evaluating there.
struct SingularPoint {
    double x = 0;
    std::optional<double> rho_value;
    bool ab_regular = true;
};

struct KernelSpec {
    ABFunction ab;
    JetFunction jet;  // optional analytic (A, B, A', B') on the real line
    WeightFunction rho;
    PhaseFunction gauge;  // optional
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    std::vector<SingularPoint> singular;
    double scale = 1.0;  // length scale for finite differences and Cauchy circles
    std::string label;
};

inline constexpr double diagonal_switch = 1e-6;

class IntegrableKernel {
public:
    IntegrableKernel() = default;
    explicit IntegrableKernel(KernelSpec spec)
        : s_(std::make_shared<const KernelSpec>(std::move(spec))) {
        if (!s_->ab) throw ParameterError("IntegrableKernel: missing A, B");
        if (!s_->rho) throw ParameterError("IntegrableKernel: missing rho");
    }

    const KernelSpec& spec() const { return *s_; }
    const std::string& label() const { return s_->label; }

    ABValue ab(cplx z) const { return s_->ab(z); }

    ABJet jet(double x) const {
        if (s_->jet) return s_->jet(x);
        // 5-point central differences along the real axis.
        double h = std::pow(eps, 0.2) * s_->scale;
        ABValue m2 = ab(x - 2 * h), m1 = ab(x - h), p1 = ab(x + h), p2 = ab(x + 2 * h), c = ab(x);
        return {c.a, c.b, (m2.a - 8.0 * m1.a + 8.0 * p1.a - p2.a) / (12 * h),
                (m2.b - 8.0 * m1.b + 8.0 * p1.b - p2.b) / (12 * h)};
    }

    const SingularPoint* singular_at(double x) const {
        for (const auto& sp : s_->singular)
            if (std::abs(sp.x - x) <= 1e-14 * (1 + std::abs(x))) return &sp;
        return nullptr;
    }

    bool in_domain(double x) const { return x > s_->lo && x < s_->hi && std::isfinite(x); }

    double rho(double x) const {
        if (const SingularPoint* sp = singular_at(x)) {
            if (sp->rho_value) return *sp->rho_value;
            throw DomainError("kernel '" + s_->label + "': evaluation at singular point " +
                              std::to_string(x) + " without a registered limit");
        }
        return s_->rho(x);
    }

    cplx gauge(double x) const { return s_->gauge ? s_->gauge(x) : cplx(1.0); }

    // Weight-stripped kernel (A(x)B(y) - A(y)B(x)) / (x - y). Near the
    // diagonal the quotient is replaced by A'B - AB' at the midpoint, whose
    // first-order correction in (x - y) vanishes identically.
    cplx stripped(double x, double y) const {
        if (std::abs(x - y) < diagonal_switch * (1 + std::abs(x))) {
            ABJet j = jet(0.5 * (x + y));
            return j.da * j.b - j.a * j.db;
        }
        ABValue u = ab(x), v = ab(y);
        return (u.a * v.b - v.a * u.b) / (x - y);
    }

    cplx operator()(double x, double y) const {
        check_domain(x);
        check_domain(y);
        double rx = rho(x), ry = rho(y);
        if (rx == 0 || ry == 0) return 0.0;
        return gauge(x) * std::conj(gauge(y)) * rx * ry * stripped(x, y);
    }

    double diagonal(double x) const { return (*this)(x, x).real(); }

    // Radius for Cauchy circles at p: the length scale, capped by half the
    // distance to the nearest other point where A, B are irregular.
    double series_radius(double p) const {
        double r = s_->scale;
        for (const auto& sp : s_->singular) {
            if (sp.ab_regular) continue;
            double d = std::abs(sp.x - p);
            if (d > 1e-14 * (1 + std::abs(p))) r = std::min(r, 0.5 * d);
        }
        return r;
    }

    KernelFunction as_function() const {
        IntegrableKernel k = *this;
        return [k](double x, double y) { return k(x, y); };
    }

private:
    void check_domain(double x) const {
        if (!in_domain(x))
            throw DomainError("kernel '" + s_->label + "': " + std::to_string(x) +
                              " outside the domain");
    }

    std::shared_ptr<const KernelSpec> s_;
};

// Laurent coefficients of A and B about `center` from the trapezoid rule on a
// circle; coefficient of (z - center)^k is stored at index k - lowest.
struct LocalSeries {
    double center = 0, radius = 1;
    int lowest = 0;
    std::vector<cplx> a, b;
    double scale_a = 0, scale_b = 0;  // max |A|, |B| on the circle

    int highest() const { return lowest + int(a.size()) - 1; }
    cplx coef_a(int k) const { return k < lowest || k > highest() ? cplx(0) : a[k - lowest]; }
    cplx coef_b(int k) const { return k < lowest || k > highest() ? cplx(0) : b[k - lowest]; }

    // Smallest k with |c_k| r^k above tol times the circle maximum.
    static int order(const std::vector<cplx>& c, int lowest, double r, double scale, double tol) {
        for (std::size_t i = 0; i < c.size(); ++i) {
            int k = lowest + int(i);
            if (std::abs(c[i]) * std::pow(r, k) > tol * scale) return k;
        }
        return std::numeric_limits<int>::max();
    }
    int order_a(double tol = 1e-10) const { return order(a, lowest, radius, scale_a, tol); }
    int order_b(double tol = 1e-10) const { return order(b, lowest, radius, scale_b, tol); }

    // Valid for |z - center| well inside the circle (used for <= radius / 4).
    ABValue eval(cplx z) const {
        cplx d = z - center, sa = 0, sb = 0;
        int lo = std::max(lowest, 0);
        for (int k = highest(); k >= lo; --k) {
            sa = sa * d + coef_a(k);
            sb = sb * d + coef_b(k);
        }
        if (lo > 0) {
            sa *= std::pow(d, lo);
            sb *= std::pow(d, lo);
        }
        for (int k = lowest; k < 0 && k <= highest(); ++k) {
            sa += coef_a(k) * std::pow(d, k);
            sb += coef_b(k) * std::pow(d, k);
        }
        return {sa, sb};
    }

    ABValue deriv(cplx z) const {
        cplx d = z - center, sa = 0, sb = 0;
        int lo = std::max(lowest, 1);
        for (int k = highest(); k >= lo; --k) {
            sa = sa * d + double(k) * coef_a(k);
            sb = sb * d + double(k) * coef_b(k);
        }
        if (lo > 1) {
            sa *= std::pow(d, lo - 1);
            sb *= std::pow(d, lo - 1);
        }
        for (int k = lowest; k < 0 && k <= highest(); ++k) {
            sa += double(k) * coef_a(k) * std::pow(d, k - 1);
            sb += double(k) * coef_b(k) * std::pow(d, k - 1);
        }
        return {sa, sb};
    }
};

inline LocalSeries local_series(const IntegrableKernel& K, double p, double r = 0, int M = 64) {
    if (r <= 0) r = K.series_radius(p);
    LocalSeries s;
    s.center = p;
    s.radius = r;
    std::vector<ABValue> f(M);
    for (int j = 0; j < M; ++j) {
        double phi = 2 * pi * j / M;
        f[j] = K.ab(p + r * std::polar(1.0, phi));
        if (!is_finite(f[j].a) || !is_finite(f[j].b))
            throw NumericalError("local_series: non-finite A, B on the Cauchy circle of '" +
                                 K.label() + "'");
        s.scale_a = std::max(s.scale_a, std::abs(f[j].a));
        s.scale_b = std::max(s.scale_b, std::abs(f[j].b));
    }
    int kmin = -M / 2 + 1, kmax = M / 2 - 1;
    std::vector<cplx> ca, cb;
    for (int k = kmin; k <= kmax; ++k) {
        cplx sa = 0, sb = 0;
        for (int j = 0; j < M; ++j) {
            cplx e = std::polar(1.0, -2 * pi * double(k) * j / M);
            sa += f[j].a * e;
            sb += f[j].b * e;
        }
        double rk = std::pow(r, -k) / M;
        ca.push_back(sa * rk);
        cb.push_back(sb * rk);
    }
    // Keep negative powers only when they are above the aliasing noise.
    double smax = std::max(s.scale_a, s.scale_b);
    int low = 0;
    for (int k = kmin; k < 0; ++k) {
        std::size_t i = std::size_t(k - kmin);
        if (std::max(std::abs(ca[i]), std::abs(cb[i])) * std::pow(r, k) > 1e-11 * smax) {
            low = k;
            break;
        }
    }
    s.lowest = low;
    s.a.assign(ca.begin() + (low - kmin), ca.end());
    s.b.assign(cb.begin() + (low - kmin), cb.end());
    return s;
}

namespace detail {

inline double sgn_pow(double x, int k) { return (k % 2 != 0 && x < 0) ? -1.0 : 1.0; }

inline SingularPoint* find_singular(std::vector<SingularPoint>& v, double x) {
    for (auto& sp : v)
        if (std::abs(sp.x - x) <= 1e-14 * (1 + std::abs(x))) return &sp;
    return nullptr;
}

}  // namespace detail

// Replace A, B within radius / 4 of p by the Laurent series, remove a pole of
// order m by (A, B, rho) -> ((z-p)^m A, (z-p)^m B, rho / |x-p|^m) and mark p
// as a point where A, B are regular.
inline IntegrableKernel regularize(const IntegrableKernel& K, double p) {
    LocalSeries ls = local_series(K, p);
    int m = std::max(0, -ls.lowest);
    KernelSpec s = K.spec();
    double r = ls.radius;
    auto shifted = std::make_shared<LocalSeries>(ls);
    shifted->lowest += m;  // multiplication by (z-p)^m relabels the powers
    IntegrableKernel parent = K;
    s.ab = [parent, shifted, p, r, m](cplx z) -> ABValue {
        if (std::abs(z - p) <= 0.25 * r) return shifted->eval(z);
        ABValue v = parent.ab(z);
        cplx f = std::pow(z - p, m);
        return {v.a * f, v.b * f};
    };
    s.jet = [parent, shifted, p, r, m](double x) -> ABJet {
        if (std::abs(x - p) <= 0.25 * r) {
            ABValue v = shifted->eval(x), d = shifted->deriv(x);
            return {v.a, v.b, d.a, d.b};
        }
        ABJet j = parent.jet(x);
        double f = std::pow(x - p, m), df = m == 0 ? 0.0 : m * std::pow(x - p, m - 1);
        return {j.a * f, j.b * f, j.da * f + j.a * df, j.db * f + j.b * df};
    };
    if (m > 0) {
        WeightFunction rho = s.rho;
        s.rho = [rho, p, m](double x) { return rho(x) / std::pow(std::abs(x - p), m); };
        PhaseFunction g = s.gauge;
        s.gauge = [g, p, m](double x) {
            cplx base = g ? g(x) : cplx(1.0);
            return base * detail::sgn_pow(x - p, m);
        };
    }
    if (SingularPoint* sp = detail::find_singular(s.singular, p))
        sp->ab_regular = true;
    else
        s.singular.push_back({p, std::nullopt, true});
    s.label = K.label() + "|reg(" + std::to_string(p) + ")";
    return IntegrableKernel(std::move(s));
}

struct NormalForm {
    int k = 0;
    IntegrableKernel kernel;
};

struct PalmOptions {
    double tol = 1e-10;  // relative threshold for vanishing coefficients
};

// Zero-order extraction at p: returns k and a kernel with
// A = (x-p)^{k+1} A', B = (x-p)^k B' (A'(p), B'(p) != 0) after an SL2 mixing of
// (A, B), divided by (x-p)^k, with rho multiplied by |x-p|^k.
inline NormalForm normal_form(const IntegrableKernel& K, double p, const PalmOptions& opt = {}) {
    LocalSeries ls = local_series(K, p);
    if (ls.lowest < 0) {
        return normal_form(regularize(K, p), p, opt);
    }
    double r = ls.radius;
    double dscale = ls.scale_a * ls.scale_b / r;
    cplx D = ls.coef_a(1) * ls.coef_b(0) - ls.coef_a(0) * ls.coef_b(1);
    if (std::abs(D) > opt.tol * dscale) return {0, K};

    int oa = ls.order_a(opt.tol), ob = ls.order_b(opt.tol);
    int k = std::min(oa, ob);
    if (k == std::numeric_limits<int>::max() || k >= ls.highest() - 2)
        throw NumericalError("normal_form: A and B vanish identically near " + std::to_string(p));
    // SL2 mixing that zeroes A's k-th coefficient, pivoting on the larger one.
    cplx ak = ls.coef_a(k), bk = ls.coef_b(k);
    cplx c11, c12, c21, c22;  // (A', B') = (c11 A + c21 B, c12 A + c22 B)
    if (std::abs(bk) >= std::abs(ak)) {
        c11 = 1; c21 = -ak / bk; c12 = 0; c22 = 1;
    } else {
        c11 = -bk / ak; c21 = 1; c12 = -1; c22 = 0;
    }
    auto mix = [=](ABValue v) -> ABValue { return {c11 * v.a + c21 * v.b, c12 * v.a + c22 * v.b}; };
    auto shifted = std::make_shared<LocalSeries>(ls);
    for (std::size_t i = 0; i < ls.a.size(); ++i) {
        ABValue m = mix({ls.a[i], ls.b[i]});
        shifted->a[i] = m.a;
        shifted->b[i] = m.b;
    }
    double sa = 0, sb = 0;
    for (std::size_t i = 0; i < shifted->a.size(); ++i) {
        int kk = shifted->lowest + int(i);
        sa = std::max(sa, std::abs(shifted->a[i]) * std::pow(r, kk));
        sb = std::max(sb, std::abs(shifted->b[i]) * std::pow(r, kk));
    }
    cplx a_next = shifted->coef_a(k + 1), b_lead = shifted->coef_b(k);
    if (std::abs(a_next) * std::pow(r, k + 1) <= opt.tol * sa ||
        std::abs(b_lead) * std::pow(r, k) <= opt.tol * sb)
        throw NumericalError("normal_form: ambiguous zero order at " + std::to_string(p));
    // Divide the series by (z-p)^k.
    shifted->a.erase(shifted->a.begin(), shifted->a.begin() + k);
    shifted->b.erase(shifted->b.begin(), shifted->b.begin() + k);
    shifted->lowest = 0;

    if (k == 0) {
        KernelSpec s = K.spec();
        IntegrableKernel parent = K;
        s.ab = [parent, mix](cplx z) { return mix(parent.ab(z)); };
        s.jet = [parent, c11, c12, c21, c22](double x) {
            ABJet j = parent.jet(x);
            return ABJet{c11 * j.a + c21 * j.b, c12 * j.a + c22 * j.b, c11 * j.da + c21 * j.db,
                         c12 * j.da + c22 * j.db};
        };
        return {0, IntegrableKernel(std::move(s))};
    }

    KernelSpec s = K.spec();
    IntegrableKernel parent = K;
    s.ab = [parent, shifted, mix, p, r, k](cplx z) -> ABValue {
        if (std::abs(z - p) <= 0.25 * r) return shifted->eval(z);
        ABValue v = mix(parent.ab(z));
        cplx f = std::pow(z - p, -k);
        return {v.a * f, v.b * f};
    };
    s.jet = [parent, shifted, p, r, k, c11, c12, c21, c22](double x) -> ABJet {
        if (std::abs(x - p) <= 0.25 * r) {
            ABValue v = shifted->eval(x), d = shifted->deriv(x);
            return {v.a, v.b, d.a, d.b};
        }
        ABJet j = parent.jet(x);
        cplx a = c11 * j.a + c21 * j.b, b = c12 * j.a + c22 * j.b;
        cplx da = c11 * j.da + c21 * j.db, db = c12 * j.da + c22 * j.db;
        double f = std::pow(x - p, -k), df = -k * std::pow(x - p, -k - 1);
        return {a * f, b * f, da * f + a * df, db * f + b * df};
    };
    WeightFunction rho = s.rho;
    s.rho = [rho, p, k](double x) { return rho(x) * std::pow(std::abs(x - p), k); };
    PhaseFunction g = s.gauge;
    s.gauge = [g, p, k](double x) {
        cplx base = g ? g(x) : cplx(1.0);
        return base * detail::sgn_pow(x - p, k);
    };
    s.label = K.label() + "|nf(" + std::to_string(p) + ")";
    return {k, IntegrableKernel(std::move(s))};
}

// Palm kernel at a finite point p:
//   Pi^p = Pi - Pi(., p) Pi(p, .) / Pi(p, p)
// in integrable form, A^p = A - A(p) Pi~(p, x) / Pi~(p, p) and likewise for B,
// with Pi~ the weight-stripped kernel. When Pi~(p, p) = 0 the formula is
// applied to the normal form and the result is expressed again in the input's
// weight, so repeated Palm transforms at p accumulate the zero order.
inline IntegrableKernel palm_transform(const IntegrableKernel& K, double p,
                                       const PalmOptions& opt = {}) {
    if (!K.in_domain(p) && !K.singular_at(p))
        throw DomainError("palm_transform: point " + std::to_string(p) + " outside the domain");
    IntegrableKernel base = K;
    LocalSeries probe = local_series(base, p);
    if (probe.lowest < 0) base = regularize(base, p);

    NormalForm nf = normal_form(base, p, opt);
    const IntegrableKernel& Kn = nf.kernel;
    int k = nf.k;
    LocalSeries ls = local_series(Kn, p);
    double r = ls.radius;
    cplx a0 = ls.coef_a(0), b0 = ls.coef_b(0);
    cplx D = ls.coef_a(1) * b0 - a0 * ls.coef_b(1);
    if (std::abs(D) <= opt.tol * ls.scale_a * ls.scale_b / r)
        throw NumericalError("palm_transform: stripped diagonal vanishes after normal form");

    auto series = std::make_shared<LocalSeries>(ls);
    // Pi~(p, z) near p: -sum_{j>=1} (a0 b_j - a_j b0) (z-p)^{j-1}.
    auto near = [series, a0, b0, D](cplx z, bool want_deriv) -> ABJet {
        const LocalSeries& L = *series;
        cplx d = z - L.center;
        cplx pi_pz = 0, dpi = 0;
        for (int j = L.highest(); j >= 1; --j) {
            cplx c = -(a0 * L.coef_b(j) - L.coef_a(j) * b0);
            pi_pz = pi_pz * d + c;
        }
        if (want_deriv)
            for (int j = L.highest(); j >= 2; --j) {
                cplx c = -(a0 * L.coef_b(j) - L.coef_a(j) * b0) * double(j - 1);
                dpi = dpi * d + c;
            }
        ABValue v = L.eval(z);
        ABValue dv = want_deriv ? L.deriv(z) : ABValue{0, 0};
        return {v.a - a0 * pi_pz / D, v.b - b0 * pi_pz / D, dv.a - a0 * dpi / D,
                dv.b - b0 * dpi / D};
    };

    KernelSpec s = K.spec();
    IntegrableKernel parent = Kn;
    s.ab = [parent, near, p, r, a0, b0, D, k](cplx z) -> ABValue {
        ABValue out;
        if (std::abs(z - p) <= 0.25 * r) {
            ABJet j = near(z, false);
            out = {j.a, j.b};
        } else {
            ABValue v = parent.ab(z);
            cplx pi_pz = (a0 * v.b - v.a * b0) / (p - z);
            out = {v.a - a0 * pi_pz / D, v.b - b0 * pi_pz / D};
        }
        if (k > 0) {
            cplx f = std::pow(z - p, k);
            out.a *= f;
            out.b *= f;
        }
        return out;
    };
    s.jet = [parent, near, p, r, a0, b0, D, k](double x) -> ABJet {
        ABJet out;
        if (std::abs(x - p) <= 0.25 * r) {
            out = near(x, true);
        } else {
            ABJet j = parent.jet(x);
            cplx num = a0 * j.b - j.a * b0;
            cplx pi_px = num / (p - x);
            cplx dpi = ((a0 * j.db - j.da * b0) * (p - x) + num) / ((p - x) * (p - x));
            out = {j.a - a0 * pi_px / D, j.b - b0 * pi_px / D, j.da - a0 * dpi / D,
                   j.db - b0 * dpi / D};
        }
        if (k > 0) {
            double f = std::pow(x - p, k), df = k * std::pow(x - p, k - 1);
            out = {out.a * f, out.b * f, out.da * f + out.a * df, out.db * f + out.b * df};
        }
        return out;
    };
    s.singular = base.spec().singular;
    s.rho = base.spec().rho;
    s.gauge = base.spec().gauge;
    s.label = K.label() + "|palm(" + std::to_string(p) + ")";
    return IntegrableKernel(std::move(s));
}

// Palm kernel from the subtraction formula on the weight-stripped kernel
// (independent of the integrable-form construction).
inline KernelFunction palm_subtraction(const IntegrableKernel& K, double p) {
    cplx dpp = K.stripped(p, p);
    return [K, p, dpp](double x, double y) -> cplx {
        double rx = K.rho(x), ry = K.rho(y);
        cplx v = K.stripped(x, y) - K.stripped(x, p) * K.stripped(p, y) / dpp;
        return K.gauge(x) * std::conj(K.gauge(y)) * rx * ry * v;
    };
}

// Palm kernel when A(p) = 0 and B(p) != 0: B is replaced by
// B - c A(x)/(x-p) with c = B(p)/A'(p).
inline IntegrableKernel palm_transform_vanishing_a(const IntegrableKernel& K, double p) {
    ABJet jp = K.jet(p);
    if (std::abs(jp.a) > 1e-12 * std::max(1.0, std::abs(jp.b)))
        throw ParameterError("palm_transform_vanishing_a: A(p) != 0");
    cplx c = jp.b / jp.da;
    KernelSpec s = K.spec();
    IntegrableKernel parent = K;
    LocalSeries ls = local_series(K, p);
    auto series = std::make_shared<LocalSeries>(ls);
    double r = ls.radius;
    // A(z)/(z-p) near p from the series.
    auto a_over = [series](cplx z) {
        const LocalSeries& L = *series;
        cplx d = z - L.center, acc = 0;
        for (int j = L.highest(); j >= 1; --j) acc = acc * d + L.coef_a(j);
        return acc;
    };
    s.ab = [parent, c, p, r, a_over](cplx z) -> ABValue {
        ABValue v = parent.ab(z);
        cplx q = std::abs(z - p) <= 0.25 * r ? a_over(z) : v.a / (z - p);
        return {v.a, v.b - c * q};
    };
    s.jet = {};
    s.label = K.label() + "|palm0(" + std::to_string(p) + ")";
    return IntegrableKernel(std::move(s));
}

// Real Mobius map x -> (a x + b) / (c x + d).
struct Mobius {
    double a = 1, b = 0, c = 0, d = 1;
    double det() const { return a * d - b * c; }
    cplx operator()(cplx z) const { return (a * z + b) / (c * z + d); }
    double operator()(double x) const { return (a * x + b) / (c * x + d); }
    double deriv(double x) const { return det() / ((c * x + d) * (c * x + d)); }
    Mobius inverse() const { return {d, -b, -c, a}; }
    // Point sent to infinity, if any.
    std::optional<double> pole() const {
        if (c == 0) return std::nullopt;
        return -d / c;
    }
};

inline Mobius inversion() { return {0, 1, 1, 0}; }

// Change of variables by a Mobius map g:
//   K_g(x, y) = K(g(x), g(y)) sqrt(|g'(x) g'(y)|)
// realized on the components as (A o g, sgn(det) B o g, rho o g) with gauge
// multiplied by sgn(c x + d).
inline IntegrableKernel mobius_pushforward(const IntegrableKernel& K, const Mobius& g) {
    double det = g.det();
    if (det == 0) throw DomainError("mobius_pushforward: degenerate map");
    double sd = det > 0 ? 1.0 : -1.0;
    Mobius gi = g.inverse();
    KernelSpec s;
    IntegrableKernel parent = K;
    s.ab = [parent, g, sd](cplx z) -> ABValue {
        ABValue v = parent.ab(g(z));
        return {v.a, sd * v.b};
    };
    s.jet = [parent, g, sd](double x) -> ABJet {
        ABJet j = parent.jet(g(x));
        double gp = g.deriv(x);
        return {j.a, sd * j.b, j.da * gp, sd * j.db * gp};
    };
    const KernelSpec& ps = K.spec();
    auto pole = g.pole();
    s.rho = [parent, g](double x) { return parent.rho(g(x)); };
    PhaseFunction gauge = ps.gauge;
    s.gauge = [gauge, g](double x) {
        cplx base = gauge ? gauge(g(x)) : cplx(1.0);
        return base * (g.c * x + g.d < 0 ? -1.0 : 1.0);
    };
    // Domain: preimage of (lo, hi).
    if (std::isinf(ps.lo) && std::isinf(ps.hi)) {
        s.lo = ps.lo;
        s.hi = ps.hi;
    } else {
        double e1 = std::isinf(ps.lo) ? (gi.c != 0 ? gi.a / gi.c : ps.lo) : gi(ps.lo);
        double e2 = std::isinf(ps.hi) ? (gi.c != 0 ? gi.a / gi.c : ps.hi) : gi(ps.hi);
        if (pole && *pole > std::min(e1, e2) && *pole < std::max(e1, e2))
            throw DomainError("mobius_pushforward: preimage of the domain is unbounded");
        s.lo = std::min(e1, e2);
        s.hi = std::max(e1, e2);
    }
    for (const auto& sp : ps.singular) {
        if (gi.c * sp.x + gi.d == 0) continue;
        s.singular.push_back({gi(sp.x), sp.rho_value, sp.ab_regular});
    }
    if (pole) {
        // Image of infinity: rho there is the limit of rho at infinity.
        if (!detail::find_singular(s.singular, *pole))
            s.singular.push_back({*pole, std::nullopt, false});
    }
    s.scale = K.spec().scale;
    s.label = K.label() + "|mobius";
    return IntegrableKernel(std::move(s));
}

// General change of variables; the result is a plain kernel function.
inline KernelFunction pushforward(const KernelFunction& K, std::function<double(double)> g,
                                  std::function<double(double)> jac) {
    return [K, g, jac](double x, double y) -> cplx {
        double jx = jac(x), jy = jac(y);
        if (jx == 0 || jy == 0) throw DomainError("pushforward: vanishing jacobian");
        return K(g(x), g(y)) * std::sqrt(std::abs(jx * jy));
    };
}

// (A, B, rho) -> (A u, B u, rho / |u|) for u real and nonzero on the domain,
// holomorphic nearby; the sign of u goes into the gauge.
inline IntegrableKernel rescale(const IntegrableKernel& K, std::function<cplx(cplx)> u,
                                std::function<cplx(cplx)> du) {
    KernelSpec s = K.spec();
    IntegrableKernel parent = K;
    s.ab = [parent, u](cplx z) {
        ABValue v = parent.ab(z);
        cplx f = u(z);
        return ABValue{v.a * f, v.b * f};
    };
    s.jet = [parent, u, du](double x) {
        ABJet j = parent.jet(x);
        cplx f = u(x), df = du(x);
        return ABJet{j.a * f, j.b * f, j.da * f + j.a * df, j.db * f + j.b * df};
    };
    WeightFunction rho = s.rho;
    s.rho = [rho, u](double x) { return rho(x) / std::abs(u(x).real()); };
    PhaseFunction g = s.gauge;
    s.gauge = [g, u](double x) {
        cplx base = g ? g(x) : cplx(1.0);
        return base * (u(x).real() < 0 ? -1.0 : 1.0);
    };
    s.label = K.label() + "|rescaled";
    return IntegrableKernel(std::move(s));
}

// Gauge equivalence on a grid: diagonals and moduli agree within tol.
struct GaugeReport {
    bool equivalent = true;
    double max_diagonal_deviation = 0;
    double max_modulus_deviation = 0;
    double diagonal_at = 0;
    double modulus_at_x = 0, modulus_at_y = 0;
    double tol = 0;
};

inline GaugeReport gauge_equivalent(const KernelFunction& K1, const KernelFunction& K2,
                                    const std::vector<double>& grid, double tol = 1e-6) {
    GaugeReport r;
    r.tol = tol;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double x = grid[i];
        double dd = std::abs(K1(x, x) - K2(x, x));
        if (dd > r.max_diagonal_deviation) {
            r.max_diagonal_deviation = dd;
            r.diagonal_at = x;
        }
        for (std::size_t j = i + 1; j < grid.size(); ++j) {
            double y = grid[j];
            double md = std::abs(std::abs(K1(x, y)) - std::abs(K2(x, y)));
            if (md > r.max_modulus_deviation) {
                r.max_modulus_deviation = md;
                r.modulus_at_x = x;
                r.modulus_at_y = y;
            }
        }
    }
    r.equivalent = r.max_diagonal_deviation <= tol && r.max_modulus_deviation <= tol;
    return r;
}

inline GaugeReport gauge_equivalent(const IntegrableKernel& K1, const IntegrableKernel& K2,
                                    const std::vector<double>& grid, double tol = 1e-6) {
    return gauge_equivalent(K1.as_function(), K2.as_function(), grid, tol);
}

// Division property check: with f = rho h, h(p) = 0, verify that
// f(t)/(t-p) lies in the range of K by projecting it through the
// quadrature-discretized kernel. Returns the relative residual.
struct DivisionReport {
    bool in_range = false;
    double residual_f = 0;
    double residual_quotient = 0;
};

inline DivisionReport division_check(const IntegrableKernel& K, const std::function<cplx(double)>& h,
                                     double p, const QuadratureRule& quad, double tol = 1e-8) {
    if (std::abs(h(p)) > 1e-12) throw ParameterError("division_check: h(p) != 0");
    auto residual = [&](const std::function<cplx(double)>& f) {
        std::size_t n = quad.size();
        std::vector<cplx> fv(n);
        double norm = 0;
        for (std::size_t i = 0; i < n; ++i) {
            fv[i] = f(quad.nodes[i]);
            norm += quad.weights[i] * std::norm(fv[i]);
        }
        double res = 0;
        for (std::size_t i = 0; i < n; ++i) {
            cplx acc = 0;
            for (std::size_t j = 0; j < n; ++j) acc += K(quad.nodes[i], quad.nodes[j]) * quad.weights[j] * fv[j];
            res += quad.weights[i] * std::norm(acc - fv[i]);
        }
        return std::sqrt(res / std::max(norm, 1e-300));
    };
    DivisionReport r;
    r.residual_f = residual([&](double t) { return K.rho(t) * h(t); });
    if (r.residual_f > tol) throw ParameterError("division_check: f is not in the range of K");
    r.residual_quotient = residual([&](double t) { return K.rho(t) * h(t) / (t - p); });
    r.in_range = r.residual_quotient <= tol;
    return r;
}

}  // namespace palmdpp
