#include <gtest/gtest.h>

#include <palmdpp/kernel.hpp>
#include <palmdpp/orthopoly.hpp>

using namespace palmdpp;

namespace {

// Sine kernel sin(pi(x-y)) / (pi(x-y)) with A = sin(pi z), B = cos(pi z)/pi.
IntegrableKernel sine_kernel() {
    KernelSpec s;
    s.ab = [](cplx z) { return ABValue{std::sin(pi * z), std::cos(pi * z) / pi}; };
    s.rho = [](double) { return 1.0; };
    s.label = "sine";
    return IntegrableKernel(std::move(s));
}

double sine(double x, double y) { return x == y ? 1.0 : std::sin(pi * (x - y)) / (pi * (x - y)); }

const std::vector<double> grid{-2.3, -1.1, -0.4, 0.25, 0.7, 1.6, 2.9};

}  // namespace

TEST(IntegrableKernel, SineKernelValues) {
    IntegrableKernel K = sine_kernel();
    for (double x : grid) {
        EXPECT_NEAR(K(x, x).real(), 1.0, 1e-9);
        for (double y : grid) EXPECT_NEAR(K(x, y).real(), sine(x, y), 1e-9);
    }
}

TEST(IntegrableKernel, NearDiagonalSwitchIsContinuous) {
    IntegrableKernel K = sine_kernel();
    double x = 0.37;
    for (double d : {2e-6, 1e-6, 5e-7, 1e-8})
        EXPECT_NEAR(K(x, x + d).real(), sine(x, x + d), 1e-9) << d;
}

TEST(IntegrableKernel, MissingComponentsRejected) {
    KernelSpec s;
    s.rho = [](double) { return 1.0; };
    EXPECT_THROW(IntegrableKernel{s}, ParameterError);
}

TEST(IntegrableKernel, DomainAndSingularPoint) {
    KernelSpec s;
    s.ab = [](cplx z) { return ABValue{z, 1.0}; };
    s.rho = [](double x) { return std::abs(x); };
    s.lo = -1;
    s.hi = 1;
    s.singular.push_back({0.0, std::nullopt, true});
    IntegrableKernel K(s);
    EXPECT_THROW(K(2.0, 0.5), DomainError);
    EXPECT_THROW(K(0.0, 0.5), DomainError);
    s.singular[0].rho_value = 3.0;
    IntegrableKernel K2(s);
    EXPECT_NEAR(K2(0.0, 0.0).real(), 9.0, 1e-9);  // rho^2 (A'B - AB') = 9
}

TEST(LocalSeries, RecoversTaylorCoefficients) {
    KernelSpec s;
    s.ab = [](cplx z) { return ABValue{std::exp(z), 1.0 / (1.0 - z / 4.0)}; };
    s.rho = [](double) { return 1.0; };
    IntegrableKernel K(s);
    LocalSeries ls = local_series(K, 0.0, 1.0);
    double fact = 1;
    for (int k = 0; k < 10; ++k) {
        if (k > 0) fact *= k;
        EXPECT_NEAR(std::abs(ls.coef_a(k) - 1.0 / fact), 0.0, 1e-13) << k;
        EXPECT_NEAR(std::abs(ls.coef_b(k) - std::pow(0.25, k)), 0.0, 1e-13) << k;
    }
}

TEST(LocalSeries, LaurentPoleIsRegularized) {
    KernelSpec s;
    s.ab = [](cplx z) { return ABValue{std::cos(z) / z, std::exp(z) / z}; };
    s.rho = [](double x) { return std::abs(x); };
    s.singular.push_back({0.0, std::nullopt, false});
    IntegrableKernel K(s);
    EXPECT_EQ(local_series(K, 0.0).lowest < 0, true);
    IntegrableKernel R = regularize(K, 0.0);
    EXPECT_GE(local_series(R, 0.0).lowest, 0);
    for (double x : {-0.7, 0.3, 1.2})
        for (double y : {-0.2, 0.8}) EXPECT_NEAR(std::abs(R(x, y) - K(x, y)), 0.0, 1e-9);
}

TEST(Palm, NonvanishingMatchesSubtraction) {
    IntegrableKernel K = sine_kernel();
    for (double p : {0.3, -1.25}) {
        IntegrableKernel P = palm_transform(K, p);
        KernelFunction Q = palm_subtraction(K, p);
        for (double x : grid)
            for (double y : grid) EXPECT_NEAR(std::abs(P(x, y) - Q(x, y)), 0.0, 1e-8) << p;
    }
}

TEST(Palm, VanishingCaseMatchesSubtractionAndRemark) {
    // A(0) = 0 for the sine kernel.
    IntegrableKernel K = sine_kernel();
    IntegrableKernel P = palm_transform(K, 0.0);
    IntegrableKernel V = palm_transform_vanishing_a(K, 0.0);
    KernelFunction Q = palm_subtraction(K, 0.0);
    for (double x : grid)
        for (double y : grid) {
            EXPECT_NEAR(std::abs(P(x, y) - Q(x, y)), 0.0, 1e-8);
            EXPECT_NEAR(std::abs(V(x, y) - Q(x, y)), 0.0, 1e-8);
        }
}

TEST(Palm, ConditionedPointIsRemoved) {
    IntegrableKernel P = palm_transform(sine_kernel(), 0.4);
    EXPECT_NEAR(std::abs(P(0.4 + 1e-3, 0.4 + 1e-3)), 0.0, 1e-5);
    EXPECT_NEAR(std::abs(P(0.4, 1.3)), 0.0, 1e-8);
}

TEST(Palm, NormalFormOrder) {
    KernelSpec s;
    s.ab = [](cplx z) { return ABValue{z * z * std::exp(z), z * std::cos(z)}; };
    s.rho = [](double) { return 1.0; };
    IntegrableKernel K(s);
    EXPECT_EQ(normal_form(K, 0.0).k, 1);
    EXPECT_EQ(normal_form(K, 0.5).k, 0);
}

TEST(Palm, FiniteRankTraceDropsByOne) {
    // CD kernel of Legendre polynomials on (-1, 1): rank 5 projection.
    IntegrableKernel K = cd_kernel_line(uniform_weight(-1, 1), 5);
    IntegrableKernel P = palm_transform(K, 0.2);
    QuadratureRule q = interval_rule(-1, 1, 8);
    double tK = 0, tP = 0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        tK += q.weights[i] * K(q.nodes[i], q.nodes[i]).real();
        tP += q.weights[i] * P(q.nodes[i], q.nodes[i]).real();
    }
    EXPECT_NEAR(tK, 5.0, 1e-10);
    EXPECT_NEAR(tP, 4.0, 1e-8);
}

TEST(Mobius, PushforwardMatchesGeneralChangeOfVariables) {
    IntegrableKernel K = sine_kernel();
    Mobius g{2, 1, 1, 3};  // det 5
    IntegrableKernel Kg = mobius_pushforward(K, g);
    KernelFunction ref = pushforward(K.as_function(), [g](double x) { return g(x); },
                                     [g](double x) { return g.deriv(x); });
    for (double x : {-1.0, 0.2, 1.5, 4.0})
        for (double y : {-0.6, 0.9, 2.2}) {
            EXPECT_NEAR(std::abs(Kg(x, y) - ref(x, y)), 0.0, 1e-9);
        }
}

TEST(Mobius, InversionTwiceIsIdentityUpToGauge) {
    IntegrableKernel K = sine_kernel();
    IntegrableKernel back = mobius_pushforward(mobius_pushforward(K, inversion()), inversion());
    GaugeReport r = gauge_equivalent(back, K, grid, 1e-9);
    EXPECT_TRUE(r.equivalent) << r.max_diagonal_deviation << " " << r.max_modulus_deviation;
}

TEST(Gauge, DetectsDifferentKernels) {
    IntegrableKernel K = sine_kernel();
    IntegrableKernel R = rescale(K, [](cplx z) { return 2.0 + 0.0 * z; }, [](cplx) { return cplx(0); });
    EXPECT_TRUE(gauge_equivalent(K, R, grid, 1e-12).equivalent);
    IntegrableKernel S = rescale(K, [](cplx z) { return 1.0 + z * z; }, [](cplx z) { return 2.0 * z; });
    EXPECT_TRUE(gauge_equivalent(K, S, grid, 1e-12).equivalent);
    KernelSpec d = K.spec();
    d.ab = [](cplx z) { return ABValue{std::sin(2 * pi * z), std::cos(2 * pi * z) / pi}; };
    EXPECT_FALSE(gauge_equivalent(K, IntegrableKernel(d), grid, 1e-6).equivalent);
}

TEST(Division, QuotientStaysInRange) {
    WeightSpec w = uniform_weight(-1, 1);
    IntegrableKernel K = cd_kernel_line(w, 6);
    QuadratureRule q = interval_rule(-1, 1, 6);
    double p = 0.3;
    // h = polynomial of degree 3 vanishing at p; f = rho h lies in the range.
    auto h = [p](double t) { return cplx((t - p) * (t * t + 0.5)); };
    DivisionReport r = division_check(K, h, p, q);
    EXPECT_TRUE(r.in_range) << r.residual_quotient;
    EXPECT_THROW(division_check(K, [](double t) { return cplx(t + 1); }, p, q), ParameterError);
}
