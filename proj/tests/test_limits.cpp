#include <gtest/gtest.h>

#include <palmdpp/limits.hpp>

using namespace palmdpp;

namespace {

const std::vector<double> grid = log_grid(0.05, 5, 16);

}  // namespace

TEST(Grid, LogGridSymmetric) {
    ASSERT_EQ(grid.size(), 32u);
    EXPECT_NEAR(grid.front(), -5, 1e-14);
    EXPECT_NEAR(grid.back(), 5, 1e-14);
    EXPECT_TRUE(std::is_sorted(grid.begin(), grid.end()));
    for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(grid[i], -grid[grid.size() - 1 - i], 1e-15);
    EXPECT_NEAR(grid[16], 0.05, 1e-15);
}

TEST(ScaledKernel, IntegrableFormMatchesDirectSum) {
    // Equal up to gauge; the diagonal goes through the confluent branch.
    for (cplx s : {cplx(0.5, 0), cplx(1, 0.7)}) {
        ScaledCDKernel S(HuaPickrellParam(s), 50);
        IntegrableKernel K = S.kernel();
        KernelFunction D = [&S](double x, double y) { return cplx(S.direct(x, y)); };
        GaugeReport g = gauge_equivalent(K.as_function(), D, grid, 1e-8);
        EXPECT_TRUE(g.equivalent) << s << " " << g.max_diagonal_deviation << " " << g.max_modulus_deviation;
    }
}

TEST(ScaledKernel, ScalingErrorDecreases) {
    ScalingReport r = scaling_report(HuaPickrellParam(0.5, 0), {25, 50, 100}, grid);
    EXPECT_TRUE(r.decreasing);
    EXPECT_LT(r.final_error, 5e-2);
}

TEST(ScaledKernel, ArbitrationSelectsStandardConvention) {
    ConventionArbitration a = arbitrate_conventions(HuaPickrellParam(0.5, 0), {25, 50, 100}, grid);
    ASSERT_EQ(a.reports.size(), 4u);
    const ChkConvention& c = a.conventions[a.selected];
    EXPECT_TRUE(c.shifted_q);
    EXPECT_TRUE(c.doubled_cs);
    for (std::size_t i = 0; i < 4; ++i)
        if (i != a.selected) EXPECT_GT(a.reports[i].final_error, 10 * a.reports[a.selected].final_error);
}

TEST(ScaledKernel, ComponentConvergence) {
    ConvergenceReport r = pseudo_jacobi_components(HuaPickrellParam(1, 0.7), {25, 50, 100}, grid);
    ASSERT_EQ(r.components.size(), 3u);
    EXPECT_TRUE(r.all_decreasing());
    EXPECT_TRUE(r.bound_finite);
    EXPECT_GT(r.dominating_integral, 0);
}

TEST(ScaledKernel, RejectsBadDegree) {
    EXPECT_THROW(ScaledCDKernel(HuaPickrellParam(0.5, 0), 0), ParameterError);
}

TEST(CircleLimit, NormalizationAtOrigin) {
    ScaledCircleKernel K(cplx(0.5, 0.3), 40);
    EXPECT_NEAR(std::abs(K.q_star(0) - 1.0), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(K.q(0) - 1.0), 0.0, 1e-12);
    CircleLimit L = circle_limit(HuaPickrellParam(0.5, 0.3));
    EXPECT_NEAR(std::abs(L.q_star(0) - 1.0), 0.0, 1e-15);
    double x = 1.7;
    double want = std::sqrt(2 * L.c_s) * std::pow(x, 0.5) * std::exp(pi * 0.3 / 2);
    EXPECT_NEAR(L.rho(x), want, 1e-14);
}

TEST(CircleLimit, TConvergenceDecreases) {
    HuaPickrellParam p(0.5, 0);
    ConvergenceReport r = t_convergence_report(p, {25, 50, 100}, grid);
    EXPECT_TRUE(r.all_decreasing());
    EXPECT_LT(r.final_max(), 5e-2);
    std::vector<double> k = t_kernel_errors(p, {25, 50, 100}, grid);
    EXPECT_TRUE(k[2] < k[1] && k[1] < k[0]);
}

TEST(Theorem, FinitePalmIdentity) {
    for (int n : {4, 6}) {
        PalmIdentityReport r = verify_finite_palm_identity(HuaPickrellParam(1, 0.7), n, grid);
        EXPECT_TRUE(r.passed) << n << " " << r.max_diagonal_deviation << " " << r.max_modulus_deviation;
        EXPECT_NEAR(r.trace, n - 1, 1e-6);
    }
    EXPECT_THROW(verify_finite_palm_identity(HuaPickrellParam(0.5, 0), 1, grid), ParameterError);
}

TEST(Theorem, PalmAtZeroShiftsParameter) {
    MainTheoremReport r = verify_main_theorem(HuaPickrellParam(0.5, 0.5), grid, 1e-5, 0);
    EXPECT_TRUE(r.passed);
    EXPECT_LT(r.limit.max_diagonal_deviation, 1e-5);
    // Against the unshifted kernel the transform is visibly different.
    GaugeReport g = gauge_equivalent(palm_transform(make_pi(HuaPickrellParam(0.5, 0.5)), 0.0),
                                     make_pi(HuaPickrellParam(0.5, 0.5)), grid, 1e-5);
    EXPECT_FALSE(g.equivalent);
}

TEST(Theorem, FiniteRouteTracksLimit) {
    MainTheoremReport r = verify_main_theorem(HuaPickrellParam(0.5, 0), grid, 1e-5, 100);
    EXPECT_TRUE(r.finite_passed) << r.finite_deviation << " " << r.finite_unpalmed;
    EXPECT_LT(r.finite_deviation, 5e-2);
}
