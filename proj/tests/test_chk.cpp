#include <gtest/gtest.h>

#include <palmdpp/chk.hpp>

using namespace palmdpp;

namespace {

struct Reference {
    cplx s;
    double c_s, k11, k22, abs_k12, abs_k_half3, pi_half, abs_pi_mixed;
};

// 40-digit mpmath evaluations of the closed forms (standard convention).
const Reference refs[] = {
    {cplx(0.5, 0), 0.0625, 0.22122316367381094424, 0.030293519946089676042, 0.080465543216672900888,
     0.069707210552242395166, 0.12117407978435870417, 0.14021086986041684745},
    {cplx(1, 0.7), 0.0097591987427276763654, 0.30198638741054470269, 0.00073981128900557955129,
     0.093584642110141076694, 0.038917875369958113729, 0.11948835676418126988, 0.060534951829716966693},
};

const std::vector<double> grid{-4, -1.5, -0.3, 0.2, 0.9, 2.5};

}  // namespace

TEST(HuaPickrell, HalfPlaneEnforced) {
    EXPECT_THROW(HuaPickrellParam(-0.6, 0), ParameterError);
    EXPECT_THROW(HuaPickrellParam(-0.5, 1), ParameterError);
    EXPECT_NO_THROW(HuaPickrellParam(-0.4, 0));
    EXPECT_EQ(HuaPickrellParam(0.5, 0.2).shifted().value(), cplx(1.5, 0.2));
}

TEST(Chk, ConstantReference) {
    for (const auto& r : refs) EXPECT_NEAR(chk_constant(HuaPickrellParam(r.s)), r.c_s, 1e-15);
    // c_0 = 1 / (2 pi).
    EXPECT_NEAR(chk_constant(HuaPickrellParam(0, 0)), 1 / (2 * pi), 1e-15);
}

TEST(Chk, KernelReference) {
    for (const auto& r : refs) {
        HuaPickrellParam p(r.s);
        IntegrableKernel K = make_chk(p);
        EXPECT_NEAR(K(1, 1).real(), r.k11, 1e-11);
        EXPECT_NEAR(K(-2, -2).real(), r.k22, 1e-11);
        EXPECT_NEAR(std::abs(K(1, 2)), r.abs_k12, 1e-11);
        EXPECT_NEAR(std::abs(K(-0.5, 3)), r.abs_k_half3, 1e-11);
        IntegrableKernel P = make_pi(p);
        EXPECT_NEAR(P(0.5, 0.5).real(), r.pi_half, 1e-11);
        EXPECT_NEAR(std::abs(P(0.5, -1.5)), r.abs_pi_mixed, 1e-11);
    }
}

TEST(Chk, PiAtOriginIsTwo) {
    for (cplx s : {cplx(0.3, 0), cplx(0.5, 0), cplx(1, 0), cplx(0.5, 0.5), cplx(1, 0.7)}) {
        cplx v = make_pi(HuaPickrellParam(s))(0.0, 0.0);
        EXPECT_NEAR(v.real(), 2.0, 1e-8) << s;
        EXPECT_NEAR(v.imag(), 0.0, 1e-8) << s;
    }
}

TEST(Chk, ChkUndefinedAtOrigin) {
    IntegrableKernel K = make_chk(HuaPickrellParam(0.5, 0));
    EXPECT_THROW(K(0.0, 1.0), DomainError);
}

TEST(Chk, HermitianAndPositiveDiagonal) {
    for (const auto& r : refs) {
        IntegrableKernel K = make_chk(HuaPickrellParam(r.s));
        for (double x : grid) {
            EXPECT_GT(K(x, x).real(), 0);
            EXPECT_NEAR(K(x, x).imag(), 0, 1e-12);
            for (double y : grid) EXPECT_NEAR(std::abs(K(x, y) - std::conj(K(y, x))), 0, 1e-12);
        }
    }
}

TEST(Chk, TwoMinorsNonnegative) {
    IntegrableKernel K = make_chk(HuaPickrellParam(1, 0.7));
    for (double x : grid)
        for (double y : grid) {
            double m = (K(x, x) * K(y, y)).real() - std::norm(K(x, y));
            EXPECT_GE(m, -1e-12);
        }
}

TEST(Chk, PqFormMatchesIntegrableForm) {
    HuaPickrellParam p(0.5, 0.5);
    ChkComponents c = chk_components(p);
    IntegrableKernel K = make_chk(p);
    for (double x : grid)
        for (double y : grid)
            if (x != y) EXPECT_NEAR(std::abs(c.kernel_pq(x, y) - K(x, y)), 0, 1e-12);
}

TEST(Chk, InversionRelatesChkAndPi) {
    for (const auto& r : refs) {
        HuaPickrellParam p(r.s);
        IntegrableKernel inv = mobius_pushforward(make_chk(p), inversion());
        GaugeReport g = gauge_equivalent(inv, make_pi(p), grid, 1e-12);
        EXPECT_TRUE(g.equivalent) << g.max_diagonal_deviation << " " << g.max_modulus_deviation;
    }
}

TEST(Chk, ConventionsDiffer) {
    HuaPickrellParam p(0.5, 0);
    IntegrableKernel a = make_chk(p), b = make_chk(p, ChkConvention::printed());
    EXPECT_GT(std::abs(a(1, 1) - b(1, 1)), 1e-3);
    EXPECT_TRUE(ChkConvention::standard().shifted_q);
    EXPECT_TRUE(ChkConvention::standard().doubled_cs);
}

TEST(Chk, ProjectionResidualShrinksWithWindow) {
    ProjectionOptions opt;
    opt.windows = {12.5, 25};
    ProjectionReport r = projection_check(HuaPickrellParam(0.5, 0), opt);
    ASSERT_EQ(r.residuals.size(), 2u);
    EXPECT_LT(r.residuals[1], r.residuals[0]);
    EXPECT_LT(r.residuals[1], 1e-3);
    EXPECT_TRUE(std::isfinite(r.bound_outer));
    EXPECT_TRUE(std::isfinite(r.bound_inner));
}
