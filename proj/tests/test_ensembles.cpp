#include <gtest/gtest.h>

#include <random>

#include <palmdpp/ensembles.hpp>

using namespace palmdpp;

TEST(Ensemble, Preconditions) {
    EXPECT_THROW(line_ensemble(pseudo_jacobi(2, 0.3), 4), ParameterError);  // moments to degree 6 missing
    EXPECT_NO_THROW(line_ensemble(pseudo_jacobi(4, 0.3), 4));
    EXPECT_THROW(line_ensemble(uniform_weight(0, 1), 0), ParameterError);
    EXPECT_THROW(circle_ensemble(uniform_circle(), 0), ParameterError);
}

TEST(Ensemble, DescribeIsKeyValue) {
    std::string d = describe(line_ensemble(pseudo_jacobi(5, cplx(0.5, 0.7)), 5));
    EXPECT_NE(d.find("domain=line\n"), std::string::npos);
    EXPECT_NE(d.find("n=5\n"), std::string::npos);
    EXPECT_NE(d.find("s_re=0.5\n"), std::string::npos);
    EXPECT_NE(d.find("s_im=0.7\n"), std::string::npos);
    EXPECT_NE(describe(circle_ensemble(circular_jacobi(0.5), 3)).find("domain=circle\n"), std::string::npos);
}

TEST(JointDensity, UniformIntervalTwoPoints) {
    // Unordered density on [0,1]^2 is 6 (x - y)^2.
    EnsembleSpec e = line_ensemble(uniform_weight(0, 1), 2);
    for (auto [x, y] : {std::pair{0.2, 0.7}, {0.05, 0.9}, {0.4, 0.45}}) {
        double want = 6 * (x - y) * (x - y);
        EXPECT_NEAR(joint_density(e, {x, y}), want, 1e-12);
        EXPECT_NEAR(joint_density(e, {x, y}, DensityPath::determinantal), want, 1e-12);
    }
    EXPECT_EQ(joint_density(e, {0.3, 0.3}), 0.0);
    EXPECT_EQ(joint_density(e, {0.3, 1.3}), 0.0);
    EXPECT_THROW(joint_density(e, {0.3}), ParameterError);
}

TEST(JointDensity, UniformCircleTwoPoints) {
    // |e^{ia} - e^{ib}|^2 / (8 pi^2) on (-pi, pi]^2.
    EnsembleSpec e = circle_ensemble(uniform_circle(), 2);
    double a = 0.4, b = -2.1;
    double want = std::norm(std::polar(1.0, a) - std::polar(1.0, b)) / (8 * pi * pi);
    EXPECT_NEAR(joint_density(e, {a, b}), want, 1e-14);
    EXPECT_NEAR(joint_density(e, {a, b}, DensityPath::determinantal), want, 1e-14);
}

TEST(JointDensity, PathsAgree) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> N(0, 1.5);
    for (int n : {3, 5, 7}) {
        EnsembleSpec e = line_ensemble(pseudo_jacobi(n, cplx(1, 0.7)), n);
        EnsembleSpec c = circle_ensemble(circular_jacobi(cplx(0.5, 0.3)), n);
        for (int trial = 0; trial < 3; ++trial) {
            std::vector<double> x(n), t(n);
            for (int i = 0; i < n; ++i) {
                x[i] = N(rng);
                t[i] = std::remainder(N(rng), 2 * pi);
            }
            double v = joint_density(e, x), d = joint_density(e, x, DensityPath::determinantal);
            EXPECT_NEAR(d / v, 1.0, 1e-9) << n;
            v = joint_density(c, t);
            d = joint_density(c, t, DensityPath::determinantal);
            EXPECT_NEAR(d / v, 1.0, 1e-9) << n;
        }
    }
}

TEST(Palm, CircleConditioningAtOne) {
    // p(0, a, b) / p_palm(a, b) does not depend on (a, b).
    EnsembleSpec e = circle_ensemble(uniform_circle(), 3);
    EnsembleSpec p = palm_ensemble_circle(e);
    EXPECT_EQ(p.n, 2);
    double r0 = joint_density(e, {0.0, 0.5, -1.9}) / joint_density(p, {0.5, -1.9});
    for (auto [a, b] : {std::pair{1.0, 2.0}, {-0.3, 2.8}, {-2.5, 0.1}})
        EXPECT_NEAR(joint_density(e, {0.0, a, b}) / joint_density(p, {a, b}) / r0, 1.0, 1e-10);
    EnsembleSpec q = palm_ensemble_circle(circle_ensemble(circular_jacobi(cplx(0.5, 0.2)), 4));
    ASSERT_TRUE(q.circle_weight->s.has_value());
    EXPECT_EQ(*q.circle_weight->s, cplx(1.5, 0.2));
    EXPECT_THROW(palm_ensemble_circle(line_ensemble(uniform_weight(0, 1), 2)), ParameterError);
}

TEST(Palm, InfinityShiftsPseudoJacobi) {
    cplx s(0.5, 0.7);
    EnsembleSpec e = line_ensemble(pseudo_jacobi(6, s), 6);
    EnsembleSpec p = palm_ensemble_infinity(e, pseudo_jacobi_tilde(s));
    EXPECT_EQ(p.n, 5);
    ASSERT_TRUE(p.line_weight->pseudo_jacobi.has_value());
    EXPECT_EQ(p.line_weight->pseudo_jacobi->n, 5);
    EXPECT_EQ(p.line_weight->pseudo_jacobi->s, s + 1.0);
    // w_{n-1, s+1} = w_{n, s}.
    for (double x : {-2.0, 0.3, 4.0}) EXPECT_NEAR(p.weight(x) / e.weight(x), 1.0, 1e-13);
    EXPECT_THROW(palm_ensemble_infinity(e, pseudo_jacobi_tilde(cplx(0.4, 0.7))), ParameterError);
    // tilde_w without decay makes int tilde_w / (1+x^2) diverge.
    EXPECT_THROW(palm_ensemble_infinity(line_ensemble(pseudo_jacobi(2, -0.4), 2),
                                        [](double x) { return std::pow(1 + x * x, 0.4); }),
                 ConvergenceError);
}

TEST(Cayley, MapsAreInverse) {
    for (double x : {-50.0, -1.0, -0.2, 0.0, 0.7, 3.0}) EXPECT_NEAR(cayley_point(cayley_angle(x)), x, 1e-10 * (1 + x * x));
    // e^{i theta} = (x - i) / (x + i).
    double x = 1.7;
    cplx z = (cplx(x, -1)) / (cplx(x, 1));
    EXPECT_NEAR(std::abs(std::polar(1.0, cayley_angle(x)) - z), 0.0, 1e-15);
}

TEST(Cayley, CircularJacobiBecomesPseudoJacobi) {
    // Up to a constant, with Im s conjugated by the orientation of the map.
    cplx s(0.5, 0.7);
    int n = 4;
    EnsembleSpec L = cayley(circle_ensemble(circular_jacobi(s), n));
    WeightSpec ref = pseudo_jacobi(n, std::conj(s));
    double r0 = L.weight(0.3) / ref.weight(0.3);
    for (double x : {-7.0, -1.0, 0.01, 2.0, 30.0}) EXPECT_NEAR(L.weight(x) / ref.weight(x) / r0, 1.0, 1e-12);
}

TEST(Cayley, DensitiesCorrespond) {
    EnsembleSpec c = circle_ensemble(circular_jacobi(cplx(0.5, 0.3)), 3);
    EnsembleSpec l = cayley(c);
    std::vector<double> t{-2.0, 0.4, 1.3}, x;
    double jac = 1;
    for (double th : t) {
        double v = cayley_point(th);
        x.push_back(v);
        jac *= 2 / (1 + v * v);  // |d theta / dx|
    }
    EXPECT_NEAR(joint_density(l, x) / (joint_density(c, t) * jac), 1.0, 1e-9);
}

TEST(Cayley, PointsBeyondCutoffFlagged) {
    PointConfiguration pc{{1e-10, 1.0, -2.0}, "circle", 5};
    MappedConfiguration m = cayley_points(pc, Domain::circle);
    ASSERT_EQ(m.beyond.size(), 1u);
    EXPECT_EQ(m.beyond[0], 0u);
    EXPECT_EQ(m.points.seed, 5u);
}

TEST(Sampler, DeterministicPerSeed) {
    EnsembleSpec e = line_ensemble(pseudo_jacobi(5, 0.5), 5);
    PointConfiguration a = sample(e, 7), b = sample(e, 7), c = sample(e, 8);
    EXPECT_EQ(a.positions, b.positions);
    EXPECT_NE(a.positions, c.positions);
    EXPECT_EQ(a.positions.size(), 5u);
    EXPECT_EQ(a.seed, 7u);
}

TEST(Sampler, BasisOrthonormalOnGrid) {
    EXPECT_LT(EnsembleSampler(line_ensemble(pseudo_jacobi(6, cplx(1, 0.7)), 6)).gram_error(), 1e-9);
    EXPECT_LT(EnsembleSampler(circle_ensemble(circular_jacobi(0.5), 5)).gram_error(), 1e-9);
}

TEST(Sampler, GapFrequencyUniformInterval) {
    // Two points with density 6 (x - y)^2 on [0,1]: P(no point in [0, a]) = (1 - a)^4.
    EnsembleSampler S(line_ensemble(uniform_weight(0, 1), 2));
    std::mt19937_64 rng(19);
    const int draws = 40000;
    const double a = 0.3;
    int empty = 0;
    for (int i = 0; i < draws; ++i) {
        PointConfiguration c = S.draw(rng);
        empty += c.positions[0] > a && c.positions[1] > a;
    }
    double want = std::pow(1 - a, 4), se = std::sqrt(want * (1 - want) / draws);
    EXPECT_NEAR(double(empty) / draws, want, 4 * se);
}

TEST(Sampler, CirclePointsInRange) {
    EnsembleSampler S(circle_ensemble(circular_jacobi(cplx(0.5, 0.3)), 4));
    std::mt19937_64 rng(2);
    for (int i = 0; i < 20; ++i)
        for (double t : S.draw(rng).positions) {
            EXPECT_GT(t, -pi - 1e-12);
            EXPECT_LE(t, pi + 1e-12);
        }
}
