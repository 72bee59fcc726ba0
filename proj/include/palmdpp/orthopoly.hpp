#pragma once

// Orthogonal polynomials on the line (Stieltjes procedure on a discretized
// measure) and on the unit circle (Szego recursion from trigonometric
// moments), with their Christoffel-Darboux kernels.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "common.hpp"
#include "kernel.hpp"
#include "quadrature.hpp"

namespace palmdpp {

struct PseudoJacobiParams {
    int n = 1;
    cplx s;
};

// Positive weight on (lo, hi), given through its logarithm.
struct WeightSpec {
    std::function<double(double)> log_weight;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    // Highest k with int |x|^k w finite; moments of degree max+1 may exist as
    // symmetric limits (odd top degree) and are used that way.
    int max_moment_degree = std::numeric_limits<int>::max();
    std::optional<PseudoJacobiParams> pseudo_jacobi;
    std::string name;

    double weight(double x) const {
        if (!(x > lo && x < hi)) return 0.0;
        return std::exp(log_weight(x));
    }
};

// w_{n,s}(x) = (1+x^2)^{-n-Re s} e^{2 Im s atan x}.
inline WeightSpec pseudo_jacobi(int n, cplx s) {
    if (n < 0) throw ParameterError("pseudo_jacobi: n < 0");
    double e = n + s.real();
    if (!(2 * e > 1)) throw ParameterError("pseudo_jacobi: weight not integrable (2(n+Re s) <= 1)");
    WeightSpec w;
    double im = s.imag();
    w.log_weight = [e, im](double x) { return -e * std::log1p(x * x) + 2 * im * std::atan(x); };
    // |x|^k w ~ |x|^{k - 2n - 2Re s}: absolutely integrable iff k < 2n + 2Re s - 1.
    double bound = 2 * e - 1;
    int k = int(std::ceil(bound)) - 1;
    w.max_moment_degree = k;
    w.pseudo_jacobi = PseudoJacobiParams{n, s};
    w.name = "pseudo-jacobi(n=" + std::to_string(n) + ",s=" + std::to_string(s.real()) +
             (im >= 0 ? "+" : "") + std::to_string(im) + "i)";
    return w;
}

inline WeightSpec uniform_weight(double lo, double hi) {
    WeightSpec w;
    w.log_weight = [](double) { return 0.0; };
    w.lo = lo;
    w.hi = hi;
    w.name = "uniform[" + std::to_string(lo) + "," + std::to_string(hi) + "]";
    return w;
}

inline WeightSpec log_weight_spec(std::function<double(double)> logw, double lo, double hi,
                                  std::string name, int max_moment = std::numeric_limits<int>::max()) {
    WeightSpec w;
    w.log_weight = std::move(logw);
    w.lo = lo;
    w.hi = hi;
    w.max_moment_degree = max_moment;
    w.name = std::move(name);
    return w;
}

// Nodes with log(weight * quadrature weight), through x = tan t on
// (atan lo, atan hi) with endpoint grading.
struct DiscreteMeasure {
    std::vector<double> x;
    std::vector<double> log_w;
};

inline DiscreteMeasure discretize_weight(const WeightSpec& w, int panels, int levels = 30) {
    double t0 = std::atan(w.lo), t1 = std::atan(w.hi);
    QuadratureRule t = composite_rule(graded_breaks(t0, t1, panels, levels), 20);
    DiscreteMeasure m;
    for (std::size_t i = 0; i < t.size(); ++i) {
        double c = std::cos(t.nodes[i]);
        if (c <= 0) continue;
        double x = std::tan(t.nodes[i]);
        if (!(x > w.lo && x < w.hi)) continue;
        double lw = w.log_weight(x) - 2 * std::log(c) + std::log(t.weights[i]);
        if (!std::isfinite(lw)) continue;
        m.x.push_back(x);
        m.log_w.push_back(lw);
    }
    return m;
}

// Orthonormal recurrence x p_k = b_{k+1} p_{k+1} + a_k p_k + b_k p_{k-1}.
// a has entries a_0..a_{n-1}, b has b_0 = 0, b_1..b_{n-1}; mu0 = int w.
struct RecurrenceTable {
    std::vector<double> a, b;
    double mu0 = 0;
    int degree = 0;
    bool circle = false;
    std::vector<cplx> verblunsky;  // circle only
};

struct RecurrenceOptions {
    int panels = 0;  // 0: automatic
    int levels = 30;
    double tol = 1e-10;  // relative agreement under panel doubling
};

namespace detail {

// Stieltjes procedure on a discrete measure with per-node log scaling:
// the value of p_k at node i is u_i e^{L_i}, and the measure weight enters as
// e^{2 L_i} through the initial L_i = log_w / 2.
inline RecurrenceTable stieltjes(const DiscreteMeasure& m, int n) {
    std::size_t N = m.x.size();
    std::vector<double> L(N), u(N), v(N, 0.0), r(N);
    double lmax = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < N; ++i) lmax = std::max(lmax, m.log_w[i]);
    double mu0 = 0;
    for (std::size_t i = 0; i < N; ++i) mu0 += std::exp(m.log_w[i] - lmax);
    double log_mu0 = std::log(mu0) + lmax;
    for (std::size_t i = 0; i < N; ++i) {
        L[i] = 0.5 * m.log_w[i];
        u[i] = std::exp(-0.5 * log_mu0);
    }
    RecurrenceTable t;
    t.degree = n;
    t.mu0 = std::exp(log_mu0);
    t.a.assign(n, 0.0);
    t.b.assign(n, 0.0);
    for (int k = 0; k < n; ++k) {
        double ak = 0;
        for (std::size_t i = 0; i < N; ++i) ak += m.x[i] * u[i] * u[i] * std::exp(2 * L[i]);
        t.a[k] = ak;
        if (k == n - 1) break;
        double nb = 0, ref = 0;
        for (std::size_t i = 0; i < N; ++i) {
            r[i] = (m.x[i] - ak) * u[i] - (k > 0 ? t.b[k] : 0.0) * v[i];
            double e = std::exp(2 * L[i]);
            nb += r[i] * r[i] * e;
            ref += (m.x[i] * m.x[i] + ak * ak) * u[i] * u[i] * e;
        }
        if (!(nb > 1e-26 * ref) || !std::isfinite(nb))
            throw NumericalError("recurrence_line: b_k^2 lost positivity at k = " +
                                 std::to_string(k + 1));
        nb = std::sqrt(nb);
        t.b[k + 1] = nb;
        for (std::size_t i = 0; i < N; ++i) {
            v[i] = u[i];
            u[i] = r[i] / nb;
            double au = std::abs(u[i]);
            if (au > 1e100 || (au < 1e-100 && au > 0)) {
                double sh = std::log(au);
                u[i] /= au;
                v[i] /= au;
                L[i] += sh;
            }
        }
    }
    return t;
}

}  // namespace detail

// Recurrence coefficients for degrees 0..n (monic P_n needs a_{n-1}), with
// panel doubling until successive tables agree.
inline RecurrenceTable recurrence_line(const WeightSpec& w, int n, const RecurrenceOptions& opt = {}) {
    if (n < 1) throw ParameterError("recurrence_line: n < 1");
    if (w.max_moment_degree < 2 * n - 2)
        throw ConvergenceError("recurrence_line: moments of " + w.name + " diverge below degree " +
                               std::to_string(2 * n - 2));
    int panels = opt.panels > 0 ? opt.panels : std::max(24, int(0.4 * n) + 24);
    RecurrenceTable prev = detail::stieltjes(discretize_weight(w, panels, opt.levels), n);
    for (int attempt = 0; attempt < 5; ++attempt) {
        panels *= 2;
        RecurrenceTable cur = detail::stieltjes(discretize_weight(w, panels, opt.levels), n);
        double dev = std::abs(cur.mu0 - prev.mu0) / cur.mu0;
        double scale = 0;
        for (int k = 0; k < n; ++k) scale = std::max({scale, std::abs(cur.a[k]), cur.b[k]});
        for (int k = 0; k < n; ++k)
            dev = std::max({dev, std::abs(cur.a[k] - prev.a[k]) / std::max(scale, 1.0),
                            std::abs(cur.b[k] - prev.b[k]) / std::max(scale, 1.0)});
        if (dev < opt.tol) return cur;
        prev = cur;
    }
    throw ConvergenceError("recurrence_line: moments of " + w.name +
                           " do not converge under panel doubling");
}

// Orthonormal polynomials from a table.
class LinePolynomials {
public:
    LinePolynomials(RecurrenceTable t, WeightSpec w) : t_(std::move(t)), w_(std::move(w)) {}

    const RecurrenceTable& table() const { return t_; }
    const WeightSpec& weight() const { return w_; }
    int degree() const { return t_.degree; }

    // p_0..p_{m-1} at z (m <= degree).
    template <class T>
    std::vector<T> values(T z, int m) const {
        std::vector<T> p(m);
        if (m == 0) return p;
        p[0] = T(1.0 / std::sqrt(t_.mu0));
        if (m > 1) p[1] = (z - t_.a[0]) * p[0] / t_.b[1];
        for (int k = 1; k + 1 < m; ++k)
            p[k + 1] = ((z - t_.a[k]) * p[k] - t_.b[k] * p[k - 1]) / t_.b[k + 1];
        return p;
    }

    // (b_n p_n, p_{n-1}) = (P_n / sqrt(h_{n-1}), P_{n-1} / sqrt(h_{n-1})) and
    // derivatives, for the top degree n.
    ABJet top(cplx z) const {
        int n = t_.degree;
        cplx p_prev = 0, p = 1.0 / std::sqrt(t_.mu0), dp_prev = 0, dp = 0;
        for (int k = 0; k < n; ++k) {
            // r = (z - a_k) p_k - b_k p_{k-1} = b_{k+1} p_{k+1}
            cplx r = (z - t_.a[k]) * p - t_.b[k] * p_prev;
            cplx dr = p + (z - t_.a[k]) * dp - t_.b[k] * dp_prev;
            if (k == n - 1) return {r, p, dr, dp};
            p_prev = p;
            dp_prev = dp;
            p = r / t_.b[k + 1];
            dp = dr / t_.b[k + 1];
        }
        return {};
    }

    // log-scaled psi_k(x) = p_k(x) sqrt(w(x)), k < m: returns values and a common
    // log factor (value = out[k] * e^{log_scale}).
    std::vector<double> psi(double x, int m, double* log_scale) const {
        std::vector<double> p(m);
        double L = 0.5 * w_.log_weight(x);
        if (m == 0) {
            *log_scale = L;
            return p;
        }
        p[0] = 1.0 / std::sqrt(t_.mu0);
        if (m > 1) p[1] = (x - t_.a[0]) * p[0] / t_.b[1];
        for (int k = 1; k + 1 < m; ++k) {
            p[k + 1] = ((x - t_.a[k]) * p[k] - t_.b[k] * p[k - 1]) / t_.b[k + 1];
            double mag = std::abs(p[k + 1]);
            if (mag > 1e100) {
                for (int j = 0; j <= k + 1; ++j) p[j] /= mag;
                L += std::log(mag);
            }
        }
        *log_scale = L;
        return p;
    }

    std::vector<double> psi(double x, int m) const {
        double L;
        std::vector<double> p = psi(x, m, &L);
        double f = std::exp(L);
        for (double& v : p) v *= f;
        return p;
    }

private:
    RecurrenceTable t_;
    WeightSpec w_;
};

// Gram matrix of p_0..p_{m-1} under an independent (finer, ungraded-offset)
// quadrature; returns max |G - I|.
inline double gram_deviation_line(const LinePolynomials& P, int m, int panels = 0) {
    const WeightSpec& w = P.weight();
    if (panels <= 0) panels = std::max(60, int(1.3 * P.degree()) + 60);
    DiscreteMeasure q = discretize_weight(w, panels, 36);
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t i = 0; i < q.x.size(); ++i) {
        double L;
        std::vector<double> p = P.psi(q.x[i], m, &L);
        double lw = q.log_w[i] - w.log_weight(q.x[i]) + 2 * L;  // quad weight * sec^2 * e^{2L}
        double f = std::exp(lw);
        if (f == 0) continue;
        Eigen::Map<Eigen::VectorXd> v(p.data(), m);
        G.noalias() += f * v * v.transpose();
    }
    return (G - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff();
}

// Zeros of P_m (m <= degree) as eigenvalues of the Jacobi matrix.
inline std::vector<double> zeros(const RecurrenceTable& t, int m) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m, m);
    for (int k = 0; k < m; ++k) {
        J(k, k) = t.a[k];
        if (k + 1 < m) J(k, k + 1) = J(k + 1, k) = t.b[k + 1];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J, Eigen::EigenvaluesOnly);
    std::vector<double> z(es.eigenvalues().data(), es.eigenvalues().data() + m);
    return z;
}

// Strict interlacing of sorted zeros of P_m and P_{m-1}.
inline bool strictly_interlace(const std::vector<double>& zm, const std::vector<double>& zm1) {
    if (zm.size() != zm1.size() + 1) return false;
    for (std::size_t i = 0; i < zm1.size(); ++i)
        if (!(zm[i] < zm1[i] && zm1[i] < zm[i + 1])) return false;
    return true;
}

// Projection onto span{1, ..., x^{n-1}} sqrt(w) as an integrable kernel:
// A = P_n / sqrt(h_{n-1}), B = p_{n-1}, rho = sqrt(w). Values of A grow like
// |x|^n, so the direct form is intended for moderate n |log|x||.
inline IntegrableKernel cd_kernel_line(const LinePolynomials& P) {
    auto poly = std::make_shared<LinePolynomials>(P);
    KernelSpec s;
    s.ab = [poly](cplx z) {
        ABJet j = poly->top(z);
        return ABValue{j.a, j.b};
    };
    s.jet = [poly](double x) { return poly->top(x); };
    s.rho = [poly](double x) { return std::sqrt(poly->weight().weight(x)); };
    s.lo = P.weight().lo;
    s.hi = P.weight().hi;
    s.label = "cd[" + P.weight().name + ",n=" + std::to_string(P.degree()) + "]";
    return IntegrableKernel(std::move(s));
}

inline IntegrableKernel cd_kernel_line(const WeightSpec& w, int n, const RecurrenceOptions& opt = {}) {
    return cd_kernel_line(LinePolynomials(recurrence_line(w, n, opt), w));
}

// Direct sum sum_{k<n} psi_k(x) psi_k(y).
inline double cd_direct_sum(const LinePolynomials& P, double x, double y) {
    double lx, ly;
    std::vector<double> px = P.psi(x, P.degree(), &lx), py = P.psi(y, P.degree(), &ly);
    double s = 0;
    for (int k = 0; k < P.degree(); ++k) s += px[k] * py[k];
    return s * std::exp(lx + ly);
}

// ---------------------------------------------------------------- circle

struct CircularWeight {
    std::function<double(double)> weight;  // of theta in (-pi, pi]
    std::optional<cplx> s;
    std::string name;
};

// w^(s)(e^{i theta}) = |2 sin(theta/2)|^{2Re s} e^{-Im s (theta - pi sgn theta)}.
inline CircularWeight circular_jacobi(cplx s) {
    if (!(s.real() > -0.5)) throw ParameterError("circular_jacobi: needs Re s > -1/2");
    CircularWeight w;
    double re = s.real(), im = s.imag();
    w.weight = [re, im](double th) {
        th = std::remainder(th, 2 * pi);
        if (th == 0) return re > 0 ? 0.0 : (re == 0 ? 1.0 : std::numeric_limits<double>::infinity());
        return std::pow(std::abs(2 * std::sin(th / 2)), 2 * re) *
               std::exp(-im * (th - pi * sgn(th)));
    };
    w.s = s;
    w.name = "circular-jacobi(s=" + std::to_string(re) + (im >= 0 ? "+" : "") +
             std::to_string(im) + "i)";
    return w;
}

inline CircularWeight uniform_circle() {
    CircularWeight w;
    w.weight = [](double) { return 1.0; };
    w.name = "uniform-circle";
    return w;
}

// Trigonometric moments c_k = int w(theta) e^{-ik theta} dtheta / 2pi, k = 0..m,
// on (0, 2 pi) graded toward the possibly singular point theta = 0.
inline std::vector<cplx> circle_moments(const CircularWeight& w, int m, int levels = 40) {
    QuadratureRule q = circle_graded(m + 4, 20, levels);
    std::vector<cplx> c(m + 1, 0.0);
    for (std::size_t i = 0; i < q.size(); ++i) {
        double th = q.nodes[i];
        double wt = w.weight(th > pi ? th - 2 * pi : th) * q.weights[i] / (2 * pi);
        cplx e = std::polar(1.0, -th), p = 1.0;
        for (int k = 0; k <= m; ++k) {
            c[k] += wt * p;
            p *= e;
        }
    }
    return c;
}

// Monic Phi_k from the Szego recursion Phi_{k+1} = z Phi_k - conj(alpha_k) Phi_k^*.
class CirclePolynomials {
public:
    CirclePolynomials(CircularWeight w, int n) : w_(std::move(w)), n_(n) {
        std::vector<cplx> c = circle_moments(w_, n + 1);
        if (!(c[0].real() > 0)) throw NumericalError("szego_circle: nonpositive total mass");
        h_.push_back(c[0].real());
        coeffs_.push_back({1.0});
        for (int k = 0; k < n; ++k) {
            const std::vector<cplx>& P = coeffs_.back();
            cplx ip = 0;  // <z Phi_k, 1>
            for (int j = 0; j <= k; ++j) ip += P[j] * std::conj(c[j + 1]);
            cplx abar = ip / h_.back();
            cplx alpha = std::conj(abar);
            double q = 1 - std::norm(alpha);
            if (!(q > 1e-13))
                throw NumericalError("szego_circle: Toeplitz ill-conditioned, |alpha_" +
                                     std::to_string(k) + "| = " + std::to_string(std::abs(alpha)) +
                                     " (condition ~ " + std::to_string(1 / std::max(q, 1e-300)) + ")");
            alpha_.push_back(alpha);
            h_.push_back(h_.back() * q);
            std::vector<cplx> next(k + 2, 0.0);
            for (int j = 0; j <= k; ++j) next[j + 1] += P[j];
            // Phi_k^* coefficients: conj(P[k - j]).
            for (int j = 0; j <= k; ++j) next[j] -= abar * std::conj(P[k - j]);
            coeffs_.push_back(std::move(next));
        }
    }

    int degree() const { return n_; }
    const CircularWeight& weight() const { return w_; }
    const std::vector<cplx>& verblunsky() const { return alpha_; }
    double norm2(int k) const { return h_[k]; }

    // Orthonormal phi_k coefficient vector.
    std::vector<cplx> phi_coeffs(int k) const {
        std::vector<cplx> v = coeffs_[k];
        for (auto& x : v) x /= std::sqrt(h_[k]);
        return v;
    }

    // phi_k^* by reversal and conjugation of the coefficients.
    std::vector<cplx> phi_star_coeffs(int k) const {
        std::vector<cplx> v = phi_coeffs(k), r(v.size());
        for (std::size_t j = 0; j < v.size(); ++j) r[j] = std::conj(v[v.size() - 1 - j]);
        return r;
    }

    struct Eval {
        cplx phi, phi_star, dphi, dphi_star;
    };

    // Orthonormal phi_k(z), phi_k^*(z) and z-derivatives by the recursion.
    Eval eval(int k, cplx z) const {
        cplx P = 1, S = 1, dP = 0, dS = 0;
        for (int j = 0; j < k; ++j) {
            cplx a = alpha_[j];
            cplx nP = z * P - std::conj(a) * S;
            cplx nS = S - a * z * P;
            cplx ndP = P + z * dP - std::conj(a) * dS;
            cplx ndS = dS - a * (P + z * dP);
            P = nP;
            S = nS;
            dP = ndP;
            dS = ndS;
        }
        double f = 1 / std::sqrt(h_[k]);
        return {P * f, S * f, dP * f, dS * f};
    }

    std::vector<cplx> all_phi(cplx z, int m) const {
        std::vector<cplx> out;
        cplx P = 1, S = 1;
        for (int j = 0; j < m; ++j) {
            out.push_back(P / std::sqrt(h_[j]));
            if (j + 1 == m) break;
            cplx a = alpha_[j];
            cplx nP = z * P - std::conj(a) * S;
            S = S - a * z * P;
            P = nP;
        }
        return out;
    }

private:
    CircularWeight w_;
    int n_;
    std::vector<double> h_;
    std::vector<cplx> alpha_;
    std::vector<std::vector<cplx>> coeffs_;
};

inline double gram_deviation_circle(const CirclePolynomials& C, int m) {
    QuadratureRule q = circle_graded(m + 8, 20, 44);
    Eigen::MatrixXcd G = Eigen::MatrixXcd::Zero(m, m);
    for (std::size_t i = 0; i < q.size(); ++i) {
        double th = q.nodes[i] > pi ? q.nodes[i] - 2 * pi : q.nodes[i];
        double f = C.weight().weight(th) * q.weights[i] / (2 * pi);
        if (f == 0) continue;
        std::vector<cplx> v = C.all_phi(std::polar(1.0, th), m);
        Eigen::Map<Eigen::VectorXcd> e(v.data(), m);
        G.noalias() += f * e * e.adjoint();
    }
    return (G - Eigen::MatrixXcd::Identity(m, m)).cwiseAbs().maxCoeff();
}

// Christoffel-Darboux kernel on the circle, with respect to dtheta / 2pi:
//   Pi_n(z, zeta) = sum_{k<=n} phi_k(z) conj(phi_k(zeta)) sqrt(w(z) w(zeta))
//                 = (conj(phi*_{n+1}(zeta)) phi*_{n+1}(z)
//                    - conj(phi_{n+1}(zeta)) phi_{n+1}(z)) / (1 - conj(zeta) z) * sqrt(w w).
class CircleKernel {
public:
    explicit CircleKernel(const CircularWeight& w, int n)
        : poly_(std::make_shared<CirclePolynomials>(w, n + 1)), n_(n) {}

    int degree() const { return n_; }
    const CirclePolynomials& polynomials() const { return *poly_; }

    double sqrt_weight(double th) const { return std::sqrt(poly_->weight().weight(th)); }

    cplx stripped(double t1, double t2) const {
        cplx z = std::polar(1.0, t1), zeta = std::polar(1.0, t2);
        double d = std::abs(std::remainder(t1 - t2, 2 * pi));
        if (d < 1e-5) {
            // Midpoint L'Hopital value -z (conj(phi*) phi*' - conj(phi) phi').
            double tm = t2 + 0.5 * std::remainder(t1 - t2, 2 * pi);
            cplx zm = std::polar(1.0, tm);
            auto e = poly_->eval(n_ + 1, zm);
            cplx diag = -zm * (std::conj(e.phi_star) * e.dphi_star - std::conj(e.phi) * e.dphi);
            if (d == 0) return diag;
            return direct_stripped(t1, t2);
        }
        auto a = poly_->eval(n_ + 1, z), b = poly_->eval(n_ + 1, zeta);
        return (std::conj(b.phi_star) * a.phi_star - std::conj(b.phi) * a.phi) /
               (1.0 - std::conj(zeta) * z);
    }

    cplx direct_stripped(double t1, double t2) const {
        std::vector<cplx> a = poly_->all_phi(std::polar(1.0, t1), n_ + 1),
                          b = poly_->all_phi(std::polar(1.0, t2), n_ + 1);
        cplx s = 0;
        for (int k = 0; k <= n_; ++k) s += a[k] * std::conj(b[k]);
        return s;
    }

    cplx operator()(double t1, double t2) const {
        return sqrt_weight(t1) * sqrt_weight(t2) * stripped(t1, t2);
    }

    cplx direct_sum(double t1, double t2) const {
        return sqrt_weight(t1) * sqrt_weight(t2) * direct_stripped(t1, t2);
    }

private:
    std::shared_ptr<CirclePolynomials> poly_;
    int n_;
};

}  // namespace palmdpp
