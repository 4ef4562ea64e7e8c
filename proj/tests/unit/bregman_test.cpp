#include "fixtures.hpp"
#include "oracles.hpp"

#include "pmdlab/bregman.hpp"
#include "pmdlab/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace pmdlab;
using fixture::vec;

namespace {

std::vector<DivergenceSpec> all_specs() {
    return {DivergenceSpec::euclidean(), DivergenceSpec::kl(), DivergenceSpec::tsallis(0.5),
            DivergenceSpec::tsallis(2.0), DivergenceSpec::tsallis(3.0)};
}

Vector random_g(std::mt19937_64 &gen, Index n) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> exponent(-2.0, 2.0);
    const double scale = std::pow(10.0, exponent(gen));
    Vector g(n);
    for (Index i = 0; i < n; ++i) g(i) = scale * unit(gen);
    return g;
}

Vector random_prev(std::mt19937_64 &gen, const DivergenceSpec &spec, Index n) {
    if (spec.boundary_blowup) return fixture::random_simplex_point(gen, n, 1e-3);
    return fixture::random_sparse_simplex_point(gen, n);
}

double objective(const DivergenceSpec &spec, const Vector &g, const Vector &p, const Vector &prev) {
    return g.dot(p) + divergence_value(spec, p, prev);
}

} // namespace

TEST(DivergenceSpecTest, Factories) {
    const auto e = DivergenceSpec::euclidean();
    EXPECT_EQ(e.gradient_bound_M, 1.0);
    EXPECT_FALSE(e.boundary_blowup);
    EXPECT_EQ(e.cocoercivity_L, 1.0);

    const auto k = DivergenceSpec::kl();
    EXPECT_TRUE(k.boundary_blowup);
    EXPECT_FALSE(k.gradient_bound_M.has_value());

    const auto t2 = DivergenceSpec::tsallis(2.0);
    EXPECT_DOUBLE_EQ(*t2.gradient_bound_M, 2.0);
    EXPECT_FALSE(t2.boundary_blowup);
    EXPECT_TRUE(DivergenceSpec::tsallis(0.5).boundary_blowup);
    EXPECT_FALSE(DivergenceSpec::tsallis(0.5).gradient_bound_M.has_value());

    EXPECT_THROW(DivergenceSpec::tsallis(1.0), InputError);
    EXPECT_THROW(DivergenceSpec::tsallis(0.0), InputError);
    EXPECT_EQ(k.name(), "kl");
}

TEST(ProjectSimplex, Examples) {
    EXPECT_LE((project_simplex(vec({0.2, 0.8})) - vec({0.2, 0.8})).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LE((project_simplex(vec({0.5, 0.5, -1.0})) - vec({0.5, 0.5, 0.0})).cwiseAbs().maxCoeff(), 1e-15);
    const Vector far = project_simplex(vec({0.3, 1.5}));
    EXPECT_EQ(far(0), 0.0);
    EXPECT_EQ(far(1), 1.0);
    EXPECT_LE((far - oracle::grid_projection(vec({0.3, 1.5}), 10000)).cwiseAbs().maxCoeff(), 1e-4);
    EXPECT_THROW(project_simplex(vec({0.0, NAN})), InputError);
}

TEST(ProjectSimplex, AgreesWithGridSearch) {
    std::mt19937_64 gen(5);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < 50; ++i) {
        const Vector x = vec({normal(gen), normal(gen), normal(gen)});
        const Vector p = project_simplex(x);
        EXPECT_LE((p - oracle::grid_projection(x, 600)).cwiseAbs().maxCoeff(), 4e-3) << i;
    }
}

TEST(ProjectSimplex, NoSimplexPointIsCloser) {
    std::mt19937_64 gen(6);
    std::normal_distribution<double> normal(0.0, 2.0);
    for (int trial = 0; trial < 10; ++trial) {
        Vector x(6);
        for (Index i = 0; i < 6; ++i) x(i) = normal(gen);
        const Vector p = project_simplex(x);
        EXPECT_GE(p.minCoeff(), 0.0);
        EXPECT_NEAR(p.sum(), 1.0, 1e-12);
        const double d = (p - x).norm();
        for (int i = 0; i < 1000; ++i)
            EXPECT_LE(d, (fixture::random_sparse_simplex_point(gen, 6) - x).norm() + 1e-12);
    }
}

TEST(ProjectSimplex, CoordinatesMoreThanOneBelowAreDropped) {
    std::mt19937_64 gen(7);
    std::normal_distribution<double> normal(0.0, 1.5);
    for (int trial = 0; trial < 500; ++trial) {
        Vector x(5);
        for (Index i = 0; i < 5; ++i) x(i) = normal(gen);
        const Vector p = project_simplex(x);
        for (Index i = 0; i < 5; ++i)
            for (Index j = 0; j < 5; ++j)
                if (x(i) - x(j) > 1.0) EXPECT_EQ(p(j), 0.0);
    }
}

TEST(DivergenceValue, Examples) {
    const Vector p = vec({0.3, 0.7});
    for (const auto &spec : all_specs()) EXPECT_NEAR(divergence_value(spec, p, p), 0.0, 1e-15);
    EXPECT_NEAR(divergence_value(DivergenceSpec::euclidean(), vec({1, 0}), vec({0, 1})), 1.0, 1e-15);
    EXPECT_NEAR(divergence_value(DivergenceSpec::kl(), vec({1, 0}), vec({0.5, 0.5})), std::log(2.0), 1e-15);
    // For q = 2 the divergence is twice the euclidean one.
    EXPECT_NEAR(divergence_value(DivergenceSpec::tsallis(2.0), vec({1, 0}), vec({0, 1})), 2.0, 1e-14);
    EXPECT_THROW(divergence_value(DivergenceSpec::kl(), vec({0.5, 0.5}), vec({1, 0})), DomainError);
    EXPECT_THROW(divergence_value(DivergenceSpec::kl(), vec({0.5, 0.6}), vec({0.5, 0.5})), InputError);
}

TEST(DivergenceValue, NonnegativeAndZeroOnlyAtEquality) {
    std::mt19937_64 gen(8);
    for (const auto &spec : all_specs()) {
        for (int i = 0; i < 300; ++i) {
            const Vector ref = fixture::random_simplex_point(gen, 4, 1e-3);
            const Vector p = spec.boundary_blowup && spec.kind == DivergenceKind::tsallis
                                 ? fixture::random_simplex_point(gen, 4)
                                 : fixture::random_sparse_simplex_point(gen, 4);
            const double d = divergence_value(spec, p, ref);
            EXPECT_GE(d, -1e-14);
            if ((p - ref).cwiseAbs().maxCoeff() > 1e-9) EXPECT_GT(d, 1e-12);
        }
    }
}

TEST(MirrorStep, ZeroGradientKeepsRow) {
    const Vector row = vec({0.1, 0.6, 0.3});
    for (const auto &spec : all_specs())
        EXPECT_LE((mirror_step(spec, row, Vector::Zero(3)) - row).cwiseAbs().maxCoeff(), 1e-12) << spec.name();
}

TEST(MirrorStep, Examples) {
    const Vector e = mirror_step(DivergenceSpec::euclidean(), vec({0.5, 0.5}), vec({0.0, 2.0}));
    EXPECT_EQ(e, vec({1.0, 0.0}));
    const Vector k = mirror_step(DivergenceSpec::kl(), vec({0.5, 0.5}), vec({0.0, std::log(2.0)}));
    EXPECT_LE((k - vec({2.0 / 3.0, 1.0 / 3.0})).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_THROW(mirror_step(DivergenceSpec::kl(), vec({1.0, 0.0}), vec({0.0, 1.0})), DomainError);
    EXPECT_THROW(mirror_step(DivergenceSpec::tsallis(0.5), vec({1.0, 0.0}), vec({0.0, 1.0})), DomainError);
}

TEST(MirrorStep, TsallisTwoIsHalfStepEuclidean) {
    std::mt19937_64 gen(9);
    for (int i = 0; i < 100; ++i) {
        const Vector row = fixture::random_sparse_simplex_point(gen, 6);
        const Vector g = random_g(gen, 6);
        const Vector t = mirror_step(DivergenceSpec::tsallis(2.0), row, g);
        const Vector e = mirror_step(DivergenceSpec::euclidean(), row, g / 2.0);
        EXPECT_LE((t - e).cwiseAbs().maxCoeff(), 1e-10) << i;
    }
}

TEST(MirrorStep, KlStaysInterior) {
    std::mt19937_64 gen(10);
    for (int i = 0; i < 200; ++i) {
        const Vector row = fixture::random_simplex_point(gen, 5, 1e-3);
        const Vector g = random_g(gen, 5);
        EXPECT_GT(mirror_step(DivergenceSpec::kl(), row, g).minCoeff(), 0.0);
    }
}

TEST(MirrorStep, MinimizesProximalObjective) {
    std::mt19937_64 gen(11);
    for (const auto &spec : all_specs()) {
        for (int draw = 0; draw < 10; ++draw) {
            const Vector prev = random_prev(gen, spec, 4);
            const Vector g = random_g(gen, 4);
            const Vector step = mirror_step(spec, prev, g);
            const double best = objective(spec, g, step, prev);
            for (int i = 0; i < 1000; ++i) {
                const Vector p = spec.boundary_blowup && spec.kind == DivergenceKind::tsallis
                                     ? fixture::random_simplex_point(gen, 4)
                                     : fixture::random_sparse_simplex_point(gen, 4);
                EXPECT_LE(best, objective(spec, g, p, prev) + 1e-9) << spec.name();
            }
        }
    }
}

TEST(RegularizedStep, Examples) {
    const Vector half = vec({0.5, 0.5});
    const Vector k = regularized_mirror_step(DivergenceSpec::kl(), vec({2.0 / 3.0, 1.0 / 3.0}),
                                             Vector::Zero(2), 1.0, half);
    const double r2 = std::sqrt(2.0);
    EXPECT_LE((k - vec({r2 / (r2 + 1.0), 1.0 / (r2 + 1.0)})).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_NEAR(k(0), 0.58579, 1e-5);

    const Vector e = regularized_mirror_step(DivergenceSpec::euclidean(), vec({1.0, 0.0}),
                                             Vector::Zero(2), 1.0, half);
    EXPECT_LE((e - vec({0.75, 0.25})).cwiseAbs().maxCoeff(), 1e-15);

    EXPECT_THROW(regularized_mirror_step(DivergenceSpec::tsallis(2.0), half, half, 1.0, half),
                 UnsupportedError);
    EXPECT_THROW(regularized_mirror_step(DivergenceSpec::kl(), half, half, -1.0, half), InputError);
}

TEST(RegularizedStep, ZeroWeightReducesToPlainStep) {
    std::mt19937_64 gen(12);
    for (const auto &spec : {DivergenceSpec::euclidean(), DivergenceSpec::kl()}) {
        for (int i = 0; i < 50; ++i) {
            const Vector prev = random_prev(gen, spec, 5);
            const Vector g = random_g(gen, 5);
            const Vector anchor = fixture::random_simplex_point(gen, 5, 1e-3);
            EXPECT_EQ(regularized_mirror_step(spec, prev, g, 0.0, anchor), mirror_step(spec, prev, g));
        }
    }
}

TEST(RegularizedStep, EuclideanClosedForm) {
    std::mt19937_64 gen(13);
    for (int i = 0; i < 100; ++i) {
        const Vector prev = fixture::random_sparse_simplex_point(gen, 5);
        const Vector g = random_g(gen, 5);
        const Vector anchor = fixture::random_simplex_point(gen, 5);
        const double w = 0.3;
        const Vector expected = project_simplex((prev - g + w * anchor) / (1.0 + w));
        const Vector got = regularized_mirror_step(DivergenceSpec::euclidean(), prev, g, w, anchor);
        EXPECT_LE((got - expected).cwiseAbs().maxCoeff(), 1e-14);
        EXPECT_LE(kkt_check(DivergenceSpec::euclidean(), prev, got, g, w, anchor).residual, 1e-8);
    }
}

TEST(Kkt, ExactInteriorEuclideanStep) {
    const Vector prev = vec({0.3, 0.3, 0.4});
    const Vector g = vec({0.01, 0.02, 0.03});
    const Vector next = mirror_step(DivergenceSpec::euclidean(), prev, g);
    ASSERT_GT(next.minCoeff(), 0.0);
    EXPECT_LE(kkt_check(DivergenceSpec::euclidean(), prev, next, g).residual, 1e-12);
}

TEST(Kkt, RandomStepsCertify) {
    std::mt19937_64 gen(14);
    std::uniform_int_distribution<int> size(2, 8);
    for (const auto &spec : all_specs()) {
        for (int i = 0; i < 1000; ++i) {
            const Index n = size(gen);
            const Vector prev = random_prev(gen, spec, n);
            const Vector g = random_g(gen, n);
            const Vector next = mirror_step(spec, prev, g);
            const KktReport report = kkt_check(spec, prev, next, g);
            EXPECT_LE(report.residual, 1e-8) << spec.name() << " draw " << i;
            EXPECT_EQ(report.residual, std::max(report.multiplier_spread, report.offsupport_violation));
        }
    }
}

TEST(Kkt, PerturbedStepIsRejected) {
    std::mt19937_64 gen(15);
    for (const auto &spec : all_specs()) {
        for (int i = 0; i < 200; ++i) {
            const Vector prev = random_prev(gen, spec, 4);
            const Vector g = vec({0.0, 1.0, 2.0, 3.0}).cwiseProduct(fixture::random_simplex_point(gen, 4));
            Vector next = mirror_step(spec, prev, g);
            // A vertex cannot be perturbed this way: renormalizing restores it.
            if ((next.array() > 0.0).count() < 2) continue;
            Index j = 0;
            (next.array() > 0.0).select(next, 2.0).minCoeff(&j);
            const bool up = i % 2 == 0 || next(j) <= 0.01;
            next(j) += up ? 0.01 : -0.01;
            next /= next.sum();
            EXPECT_GT(kkt_check(spec, prev, next, g).residual, 1e-4) << spec.name() << " draw " << i;
        }
    }
}

TEST(Kkt, UndefinedGradientIsInfinite) {
    const KktReport r = kkt_check(DivergenceSpec::kl(), vec({0.5, 0.5}), vec({1.0, 0.0}), vec({0.0, 1.0}));
    EXPECT_TRUE(std::isinf(r.residual));
}

TEST(KlLogDomain, MatchesDirectStep) {
    std::mt19937_64 gen(16);
    for (int i = 0; i < 100; ++i) {
        const Vector prev = fixture::random_simplex_point(gen, 6, 1e-3);
        const Vector g = random_g(gen, 6);
        const Vector log_next = kl_log_step(prev.array().log(), g);
        EXPECT_LE((log_next.array().exp().matrix() - mirror_step(DivergenceSpec::kl(), prev, g)).cwiseAbs().maxCoeff(),
                  1e-14);
        EXPECT_LE(kl_log_kkt_check(prev.array().log(), log_next, g).residual, 1e-10);

        const Vector anchor = fixture::random_simplex_point(gen, 6, 1e-3);
        const Vector log_reg = kl_log_regularized_step(prev.array().log(), g, 0.5, anchor.array().log());
        const Vector direct = regularized_mirror_step(DivergenceSpec::kl(), prev, g, 0.5, anchor);
        EXPECT_LE((log_reg.array().exp().matrix() - direct).cwiseAbs().maxCoeff(), 1e-14);
        const Vector log_anchor = anchor.array().log();
        EXPECT_LE(kl_log_kkt_check(prev.array().log(), log_reg, g, 0.5, log_anchor).residual, 1e-10);
    }
}

TEST(KlLogDomain, HugeStepsStayFinite) {
    const Vector log_prev = vec({-1.0, -2.0, -0.5});
    const Vector g = vec({0.0, 3e11, 5e11});
    const Vector log_next = kl_log_step(log_prev, g);
    EXPECT_TRUE(log_next.allFinite());
    EXPECT_LT(log_next(1), -1e11);
    EXPECT_LE(kl_log_kkt_check(log_prev, log_next, g).residual, 1e-8);
    EXPECT_NEAR(kl_divergence_log(vec({1.0, 0.0, 0.0}), log_next), -log_next(0), 1e-12);
}
