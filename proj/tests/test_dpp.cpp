#include <gtest/gtest.h>

#include <palmdpp/chk.hpp>
#include <palmdpp/dpp.hpp>
#include <palmdpp/orthopoly.hpp>

using namespace palmdpp;

namespace {

// Legendre CD kernel on (0, 1), two points with density 6 (x - y)^2:
// P(#[0,a] = 0) = (1-a)^4, P(#[0,a] = 2) = a^4.
IntegrableKernel two_point_kernel() { return cd_kernel_line(uniform_weight(0, 1), 2); }

}  // namespace

TEST(Fredholm, GapProbabilityClosedForm) {
    KernelFunction K = two_point_kernel().as_function();
    for (double a : {0.1, 0.3, 0.5, 0.8}) EXPECT_NEAR(gap_probability(K, 0, a), std::pow(1 - a, 4), 1e-13) << a;
}

TEST(Fredholm, SinglePointKernel) {
    // n = 1: K = w / mu0, gap = 1 - int_B w / mu0.
    IntegrableKernel K = cd_kernel_line(uniform_weight(-1, 3), 1);
    EXPECT_NEAR(gap_probability(K.as_function(), 0, 1), 0.75, 1e-14);
}

TEST(Fredholm, CountingGeneratingFunction) {
    IntegrableKernel K = two_point_kernel();
    double a = 0.4;
    DiscretizedKernel D = discretize(K, window_rule({{0, a}}));
    double p0 = std::pow(1 - a, 4), p2 = std::pow(a, 4), p1 = 1 - p0 - p2;
    for (cplx z : {cplx(0), cplx(0.5), cplx(2), cplx(0.3, 1.1)}) {
        cplx want = p0 + z * p1 + z * z * p2;
        EXPECT_NEAR(std::abs(counting_mgf(D, {{0, a}}, {z}) - want), 0.0, 1e-12) << z;
    }
    EXPECT_NEAR(std::abs(counting_mgf(D, {{0, a}}, {1.0}) - 1.0), 0.0, 1e-13);
}

TEST(Fredholm, TwoWindowsJoint) {
    // z1 = z2 = z over [0,a] and [a,1] counts both points: z^2.
    IntegrableKernel K = two_point_kernel();
    std::vector<Interval> w{{0, 0.35}, {0.35, 1}};
    DiscretizedKernel D = discretize(K, window_rule(w));
    cplx z(0.7, 0.2);
    EXPECT_NEAR(std::abs(counting_mgf(D, w, {z, z}) - z * z), 0.0, 1e-12);
}

TEST(Fredholm, WindowValidation) {
    IntegrableKernel K = two_point_kernel();
    DiscretizedKernel D = discretize(K, window_rule({{0, 0.5}}));
    EXPECT_THROW(counting_mgf(D, {{0, 0.5}, {0.4, 0.9}}, {0.0, 0.0}), ParameterError);
    EXPECT_THROW(counting_mgf(D, {{0, 0.5}}, {0.0, 0.0}), ParameterError);
    EXPECT_THROW(counting_mgf(D, {{0.5, 0.5}}, {0.0}), ParameterError);
}

TEST(Fredholm, ConditionReported) {
    IntegrableKernel K = two_point_kernel();
    DiscretizedKernel D = discretize(K, interval_rule(0, 1, 4));
    // Whole support with z = 0: det(I - K) = 0 for a projection.
    FredholmResult r = fredholm_det_report(D, [](double) { return 0.0; });
    EXPECT_NEAR(std::abs(r.value), 0.0, 1e-12);
    EXPECT_LT(r.rcond, 1e-10);
}

TEST(Correlation, MinorsOfProjection) {
    IntegrableKernel K = two_point_kernel();
    EXPECT_NEAR(correlation(K, {0.3}), K(0.3, 0.3).real(), 1e-15);
    // rho_2 = 2 * density.
    EXPECT_NEAR(correlation(K, {0.2, 0.7}), 12 * 0.25, 1e-12);
    EXPECT_NEAR(correlation(K, {0.1, 0.5, 0.9}), 0.0, 1e-12);
    EXPECT_EQ(correlation(K, {}), 1.0);
}

TEST(Spectrum, ProjectionEigenvalues) {
    IntegrableKernel K = cd_kernel_line(uniform_weight(0, 1), 3);
    std::vector<double> ev = spectrum(discretize(K, interval_rule(0, 1, 3)));
    int ones = 0;
    for (double v : ev) {
        EXPECT_TRUE(std::abs(v) < 1e-10 || std::abs(v - 1) < 1e-10) << v;
        ones += std::abs(v - 1) < 1e-10;
    }
    EXPECT_EQ(ones, 3);
}

TEST(TailMass, TraceAndTails) {
    IntegrableKernel K = cd_kernel_line(pseudo_jacobi(5, 0.5), 5);
    EXPECT_NEAR(tail_mass(K, 0.0), 5.0, 1e-8);
    double t1 = tail_mass(K, 1.0), t10 = tail_mass(K, 10.0);
    EXPECT_GT(t1, t10);
    EXPECT_GT(t10, 0.0);
    EXPECT_THROW(tail_mass(K, -1.0), ParameterError);
    // Sine kernel has constant density 1.
    KernelSpec s;
    s.ab = [](cplx z) { return ABValue{std::sin(pi * z), std::cos(pi * z) / pi}; };
    s.rho = [](double) { return 1.0; };
    EXPECT_THROW(tail_mass(IntegrableKernel(s), 1.0), ConvergenceError);
}

TEST(PalmInfinity, PseudoJacobiShift) {
    for (cplx s : {cplx(0.5, 0), cplx(1, 0.7)}) {
        IntegrableKernel K = cd_kernel_line(pseudo_jacobi(5, s), 5);
        IntegrableKernel K1 = cd_kernel_line(pseudo_jacobi(4, s + 1.0), 4);
        IntegrableKernel P = palm_at_infinity(K);
        GaugeReport g = gauge_equivalent(P, K1, {-3, -0.5, 0.1, 0.8, 2, 6}, 1e-8);
        EXPECT_TRUE(g.equivalent) << g.max_diagonal_deviation << " " << g.max_modulus_deviation;
        EXPECT_NEAR(tail_mass(P, 0.0), 4.0, 1e-7);
    }
}

TEST(PalmInfinity, RequiresWholeLine) {
    EXPECT_THROW(palm_at_infinity(two_point_kernel()), DomainError);
}
