#pragma once

// Orthogonal polynomial ensembles on the line and on the circle: joint
// densities, Palm weight surgery, the Cayley correspondence and exact
// sampling of the projection process.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "common.hpp"
#include "orthopoly.hpp"
#include "quadrature.hpp"

namespace palmdpp {

enum class Domain { line, circle };

struct EnsembleSpec {
    Domain domain = Domain::line;
    int n = 1;
    std::optional<WeightSpec> line_weight;
    std::optional<CircularWeight> circle_weight;

    double weight(double x) const {
        return domain == Domain::line ? line_weight->weight(x) : circle_weight->weight(x);
    }
    const std::string& name() const {
        return domain == Domain::line ? line_weight->name : circle_weight->name;
    }
};

inline EnsembleSpec line_ensemble(WeightSpec w, int n) {
    if (n < 1) throw ParameterError("line_ensemble: n < 1");
    if (w.max_moment_degree < 2 * (n - 1))
        throw ParameterError("line_ensemble: moments of " + w.name + " diverge below degree " +
                             std::to_string(2 * (n - 1)));
    EnsembleSpec e;
    e.domain = Domain::line;
    e.n = n;
    e.line_weight = std::move(w);
    return e;
}

inline EnsembleSpec circle_ensemble(CircularWeight w, int n) {
    if (n < 1) throw ParameterError("circle_ensemble: n < 1");
    EnsembleSpec e;
    e.domain = Domain::circle;
    e.n = n;
    e.circle_weight = std::move(w);
    return e;
}

// Plain-text key=value serialization.
inline std::string describe(const EnsembleSpec& e) {
    std::ostringstream os;
    os << "domain=" << (e.domain == Domain::line ? "line" : "circle") << "\n";
    os << "n=" << e.n << "\n";
    os << "weight=" << e.name() << "\n";
    if (e.domain == Domain::line && e.line_weight->pseudo_jacobi) {
        const auto& p = *e.line_weight->pseudo_jacobi;
        os << "weight_n=" << p.n << "\ns_re=" << p.s.real() << "\ns_im=" << p.s.imag() << "\n";
    }
    if (e.domain == Domain::circle && e.circle_weight->s)
        os << "s_re=" << e.circle_weight->s->real() << "\ns_im=" << e.circle_weight->s->imag() << "\n";
    return os.str();
}

struct PointConfiguration {
    std::vector<double> positions;
    std::string ensemble;
    std::uint64_t seed = 0;
};

enum class DensityPath { vandermonde, determinantal };

namespace detail {

inline double log_factorial(int n) { return std::lgamma(n + 1.0); }

// log det of the n x n moment matrix: Hankel [m_{i+j}] on the line,
// Toeplitz [c_{k-j}] (moments for dtheta / 2pi) on the circle.
inline double log_moment_det(const EnsembleSpec& e) {
    int n = e.n;
    if (e.domain == Domain::line) {
        DiscreteMeasure m = discretize_weight(*e.line_weight, std::max(200, 8 * n), 36);
        std::vector<double> mom(2 * n - 1, 0.0);
        for (std::size_t i = 0; i < m.x.size(); ++i) {
            double wt = std::exp(m.log_w[i]), p = 1;
            for (int k = 0; k < 2 * n - 1; ++k) {
                mom[k] += wt * p;
                p *= m.x[i];
            }
        }
        Eigen::MatrixXd H(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) H(i, j) = mom[i + j];
        double d = H.partialPivLu().determinant();
        if (!(d > 0) || !std::isfinite(d))
            throw NumericalError("joint_density: Hankel determinant not positive and finite");
        return std::log(d);
    }
    std::vector<cplx> c = circle_moments(*e.circle_weight, n);
    Eigen::MatrixXcd T(n, n);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) T(j, k) = k >= j ? c[k - j] : std::conj(c[j - k]);
    double d = T.partialPivLu().determinant().real();
    if (!(d > 0) || !std::isfinite(d))
        throw NumericalError("joint_density: Toeplitz determinant not positive and finite");
    return std::log(d);
}

}  // namespace detail

// Joint density of the n points with respect to Lebesgue measure (dx on the
// line, dtheta on the circle):
//   Z^{-1} prod_{i<j} |x_i - x_j|^2 prod w(x_i),  Z = n! det(moments)
// or, on the determinantal path, det[K_n(x_i, x_j)] / n!.
inline double joint_density(const EnsembleSpec& e, const std::vector<double>& pts,
                            DensityPath path = DensityPath::vandermonde) {
    int n = e.n;
    if (int(pts.size()) != n) throw ParameterError("joint_density: configuration size differs from n");
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (pts[i] == pts[j]) return 0.0;
    if (path == DensityPath::vandermonde) {
        double lv = 0, lw = 0;
        for (int i = 0; i < n; ++i) {
            double w = e.weight(pts[i]);
            if (w == 0) return 0.0;
            lw += std::log(w);
            for (int j = i + 1; j < n; ++j) {
                double d = e.domain == Domain::line
                               ? std::abs(pts[i] - pts[j])
                               : std::abs(std::polar(1.0, pts[i]) - std::polar(1.0, pts[j]));
                lv += 2 * std::log(d);
            }
        }
        double lz = detail::log_factorial(n) + detail::log_moment_det(e);
        if (e.domain == Domain::circle) lz += n * std::log(2 * pi);
        double r = std::exp(lv + lw - lz);
        if (!std::isfinite(r)) throw NumericalError("joint_density: normalization not finite");
        return r;
    }
    // [K(x_i, x_j)] = Psi Psi^*, Psi_{ik} = psi_k(x_i); det taken as |det Psi|^2.
    Eigen::MatrixXcd Psi(n, n);
    if (e.domain == Domain::line) {
        LinePolynomials P(recurrence_line(*e.line_weight, n), *e.line_weight);
        for (int i = 0; i < n; ++i) {
            std::vector<double> v = P.psi(pts[i], n);
            for (int k = 0; k < n; ++k) Psi(i, k) = v[k];
        }
    } else {
        CirclePolynomials C(*e.circle_weight, n);
        for (int i = 0; i < n; ++i) {
            auto v = C.all_phi(std::polar(1.0, pts[i]), n);
            double sw = std::sqrt(e.weight(pts[i]) / (2 * pi));
            for (int k = 0; k < n; ++k) Psi(i, k) = v[k] * sw;
        }
    }
    return std::norm(Psi.partialPivLu().determinant()) / std::exp(detail::log_factorial(n));
}

// (n-1)-point ensemble on the circle with weight |1 - e^{i theta}|^2 w.
inline EnsembleSpec palm_ensemble_circle(const EnsembleSpec& e) {
    if (e.domain != Domain::circle) throw ParameterError("palm_ensemble_circle: not a circle ensemble");
    if (e.n < 2) throw ParameterError("palm_ensemble_circle: n < 2");
    if (e.circle_weight->s) return circle_ensemble(circular_jacobi(*e.circle_weight->s + 1.0), e.n - 1);
    CircularWeight w;
    auto base = e.circle_weight->weight;
    w.weight = [base](double t) { return std::norm(1.0 - std::polar(1.0, t)) * base(t); };
    w.name = e.circle_weight->name + "|palm(1)";
    return circle_ensemble(std::move(w), e.n - 1);
}

// Palm at infinity of the line ensemble with weight tilde_w(x) / (1+x^2)^n:
// the (n-1)-point ensemble with the same weight.
inline EnsembleSpec palm_ensemble_infinity(const EnsembleSpec& e, const std::function<double(double)>& tilde_w) {
    if (e.domain != Domain::line) throw ParameterError("palm_ensemble_infinity: not a line ensemble");
    if (e.n < 2) throw ParameterError("palm_ensemble_infinity: n < 2");
    // int tilde_w / (1+x^2) dx < infinity.
    double prev = 0;
    bool converged = false;
    for (int p = 16; p <= 2048; p *= 2) {
        QuadratureRule q = line_rule(p);
        double s = 0;
        for (std::size_t i = 0; i < q.size(); ++i)
            s += q.weights[i] * tilde_w(q.nodes[i]) / (1 + q.nodes[i] * q.nodes[i]);
        if (p > 16 && std::isfinite(s) && std::abs(s - prev) <= 1e-8 * std::abs(s)) {
            converged = true;
            break;
        }
        prev = s;
    }
    if (!converged) throw ConvergenceError("palm_ensemble_infinity: int tilde_w / (1+x^2) diverges");
    for (double x : {-3.7, -0.4, 0.0, 0.9, 12.0}) {
        double lhs = e.line_weight->weight(x), rhs = tilde_w(x) / std::pow(1 + x * x, e.n);
        if (std::abs(lhs - rhs) > 1e-12 * std::max(std::abs(lhs), std::abs(rhs)))
            throw ParameterError("palm_ensemble_infinity: weight is not tilde_w / (1+x^2)^n");
    }
    WeightSpec w = *e.line_weight;
    if (w.pseudo_jacobi) {
        const auto& p = *w.pseudo_jacobi;
        w = pseudo_jacobi(p.n - 1, p.s + 1.0);
    } else {
        w.name += "|palm(inf)";
    }
    return line_ensemble(std::move(w), e.n - 1);
}

// tilde_w for the pseudo-Jacobi family: (1+x^2)^{-Re s} e^{2 Im s atan x}.
inline std::function<double(double)> pseudo_jacobi_tilde(cplx s) {
    return [s](double x) { return std::pow(1 + x * x, -s.real()) * std::exp(2 * s.imag() * std::atan(x)); };
}

// Cayley correspondence e^{i theta} = (x - i) / (x + i), x = -cot(theta / 2).
inline double cayley_angle(double x) { return std::atan2(-2 * x, x * x - 1); }
inline double cayley_point(double theta) { return -1 / std::tan(theta / 2); }

// Line weight w_c(theta(x)) |1 - e^{i theta(x)}|^{2n}, and the inverse.
inline EnsembleSpec cayley(const EnsembleSpec& e) {
    int n = e.n;
    if (e.domain == Domain::circle) {
        auto wc = e.circle_weight->weight;
        WeightSpec w;
        w.log_weight = [wc, n](double x) {
            return std::log(wc(cayley_angle(x))) + n * std::log(4 / (1 + x * x));
        };
        w.name = "cayley[" + e.circle_weight->name + "]";
        // w_c bounded near theta = 0 gives w ~ |x|^{-2n}.
        w.max_moment_degree = 2 * n - 2;
        EnsembleSpec out;
        out.domain = Domain::line;
        out.n = n;
        out.line_weight = std::move(w);
        return out;
    }
    WeightSpec lw = *e.line_weight;
    CircularWeight w;
    w.weight = [lw, n](double t) {
        if (t == 0) return 0.0;
        double x = cayley_point(t);
        return lw.weight(x) * std::pow((1 + x * x) / 4, n);
    };
    w.name = "cayley[" + lw.name + "]";
    return circle_ensemble(std::move(w), n);
}

struct MappedConfiguration {
    PointConfiguration points;
    std::vector<std::size_t> beyond;  // indices with |x| > x_max (theta near 0)
};

inline MappedConfiguration cayley_points(const PointConfiguration& c, Domain from, double x_max = 1e8) {
    MappedConfiguration m;
    m.points.seed = c.seed;
    m.points.ensemble = "cayley[" + c.ensemble + "]";
    for (std::size_t i = 0; i < c.positions.size(); ++i) {
        double v = c.positions[i];
        double out = from == Domain::circle ? cayley_point(v) : cayley_angle(v);
        double x = from == Domain::circle ? out : v;
        if (!std::isfinite(x) || std::abs(x) > x_max) m.beyond.push_back(i);
        m.points.positions.push_back(out);
    }
    return m;
}

// Exact sampler for the projection process of an ensemble: repeatedly draw a
// point from the current one-point density and condition on it (the Palm
// transform at the drawn point), realized on coefficient vectors over the
// orthonormal basis psi_0..psi_{n-1}. Each one-point density is sampled as an
// equal-weight mixture of |f_j|^2 over the current orthonormal basis f_j, by
// inverse CDF from cumulative Gram integrals on a fixed grid.
class EnsembleSampler {
public:
    explicit EnsembleSampler(const EnsembleSpec& e, int grid_log2 = 14) : e_(e), n_(e.n) {
        int cells = 1 << grid_log2;
        if (e.domain == Domain::line) {
            auto P = std::make_shared<LinePolynomials>(recurrence_line(*e.line_weight, n_), *e.line_weight);
            t0_ = std::atan(e.line_weight->lo);
            t1_ = std::atan(e.line_weight->hi);
            build(cells, [P, n = n_](double t, std::vector<cplx>& out) {
                double x = std::tan(t), c = std::cos(t);
                std::vector<double> v = P->psi(x, n);
                for (int k = 0; k < n; ++k) out[k] = v[k] / c;  // psi sqrt(dx/dt)
            });
        } else {
            auto C = std::make_shared<CirclePolynomials>(*e.circle_weight, n_);
            t0_ = -pi;
            t1_ = pi;
            auto w = e.circle_weight->weight;
            build(cells, [C, w, n = n_](double t, std::vector<cplx>& out) {
                auto v = C->all_phi(std::polar(1.0, t), n);
                double sw = std::sqrt(w(t) / (2 * pi));
                for (int k = 0; k < n; ++k) out[k] = v[k] * sw;
            });
        }
    }

    double gram_error() const { return gram_error_; }

    PointConfiguration draw(std::mt19937_64& rng) const {
        std::uniform_real_distribution<double> U(0.0, 1.0);
        Eigen::MatrixXcd C = Eigen::MatrixXcd::Identity(n_, n_);  // rows: current basis
        std::vector<double> ts;
        for (int r = n_; r >= 1; --r) {
            int j = std::min(r - 1, int(U(rng) * r));
            Eigen::VectorXcd c = C.row(j).transpose();
            double t = invert(c, U(rng));
            ts.push_back(t);
            // Orthonormal coefficient combinations vanishing at t.
            Eigen::VectorXcd psi(n_);
            std::vector<cplx> v(n_);
            eval_(t, v);
            for (int k = 0; k < n_; ++k) psi[k] = v[k];
            Eigen::VectorXcd u = C * psi;  // f_j(t)
            if (r == 1) break;
            Eigen::HouseholderQR<Eigen::MatrixXcd> qr(u.conjugate());
            Eigen::MatrixXcd Q = qr.householderQ();
            C = Q.rightCols(r - 1).transpose() * C;
        }
        PointConfiguration pc;
        for (double t : ts) pc.positions.push_back(e_.domain == Domain::line ? std::tan(t) : t);
        std::sort(pc.positions.begin(), pc.positions.end());
        pc.ensemble = e_.name();
        return pc;
    }

private:
    void build(int cells, std::function<void(double, std::vector<cplx>&)> eval) {
        eval_ = std::move(eval);
        grid_.resize(cells + 1);
        for (int i = 0; i <= cells; ++i) grid_[i] = t0_ + (t1_ - t0_) * i / cells;
        auto [gx, gw] = gauss_legendre(6);
        cum_.assign(std::size_t(cells + 1) * n_ * n_, cplx(0));
        std::vector<cplx> v(n_);
        std::vector<cplx> acc(std::size_t(n_) * n_, 0.0);
        for (int i = 0; i < cells; ++i) {
            double a = grid_[i], b = grid_[i + 1], h = 0.5 * (b - a), m = 0.5 * (a + b);
            for (std::size_t q = 0; q < gx.size(); ++q) {
                double t = m + h * gx[q];
                eval_(t, v);
                for (int k = 0; k < n_; ++k)
                    for (int l = 0; l < n_; ++l) acc[k * n_ + l] += h * gw[q] * v[k] * std::conj(v[l]);
            }
            std::copy(acc.begin(), acc.end(), cum_.begin() + std::size_t(i + 1) * n_ * n_);
        }
        gram_error_ = 0;
        for (int k = 0; k < n_; ++k)
            for (int l = 0; l < n_; ++l)
                gram_error_ = std::max(gram_error_, std::abs(acc[k * n_ + l] - (k == l ? 1.0 : 0.0)));
        if (gram_error_ > 1e-6)
            throw NumericalError("sample: basis not orthonormal on the sampling grid (deviation " +
                                 std::to_string(gram_error_) + ")");
    }

    // CDF of |sum_k c_k psi_k|^2 at grid index i.
    double cdf(const Eigen::VectorXcd& c, std::size_t i) const {
        const cplx* G = cum_.data() + i * n_ * n_;
        cplx s = 0;
        for (int k = 0; k < n_; ++k)
            for (int l = 0; l < n_; ++l) s += c[k] * std::conj(c[l]) * G[k * n_ + l];
        return s.real();
    }

    double invert(const Eigen::VectorXcd& c, double u) const {
        std::size_t last = grid_.size() - 1;
        double total = cdf(c, last);
        if (!(total > 0)) throw NumericalError("sample: one-point density has no mass");
        double target = u * total;
        std::size_t lo = 0, hi = last;
        while (hi - lo > 1) {
            std::size_t mid = (lo + hi) / 2;
            if (cdf(c, mid) < target) lo = mid;
            else hi = mid;
        }
        double flo = cdf(c, lo), fhi = cdf(c, hi);
        double frac = fhi > flo ? std::clamp((target - flo) / (fhi - flo), 0.0, 1.0) : 0.5;
        double t = grid_[lo] + frac * (grid_[hi] - grid_[lo]);
        // Keep strictly inside the open domain.
        return std::clamp(t, std::nextafter(t0_, t1_), std::nextafter(t1_, t0_));
    }

    EnsembleSpec e_;
    int n_;
    double t0_ = 0, t1_ = 0;
    std::vector<double> grid_;
    std::vector<cplx> cum_;
    std::function<void(double, std::vector<cplx>&)> eval_;
    double gram_error_ = 0;
};

inline PointConfiguration sample(const EnsembleSpec& e, std::uint64_t seed) {
    EnsembleSampler s(e);
    std::mt19937_64 rng(seed);
    PointConfiguration pc = s.draw(rng);
    pc.seed = seed;
    return pc;
}

}  // namespace palmdpp
