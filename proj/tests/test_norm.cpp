#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "finhardy/error.hpp"
#include "finhardy/norm.hpp"

using namespace finhardy;

namespace {

std::vector<NormEngine> all_engines(int n) {
    std::vector<NormEngine> out;
    out.emplace_back(Euclidean{n});
    std::vector<double> w = {1.0, 4.0, 2.5};
    w.resize(n);
    out.emplace_back(DiagQuadratic{w});
    Mat A(n, n);
    if (n == 2)
        A << 3.0, 0.7, 0.7, 1.5;
    else if (n == 3)
        A << 3.0, 0.7, -0.2, 0.7, 1.5, 0.3, -0.2, 0.3, 2.0;
    else
        A << 2.0;
    out.emplace_back(Quadratic{A});
    out.emplace_back(PNorm{4.0, n});
    out.emplace_back(PNorm{1.5, n});
    return out;
}

Vec random_vec(std::mt19937_64& rng, int n, double lo = 0.1, double hi = 10.0) {
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> r(lo, hi);
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = g(rng);
    return v.normalized() * r(rng);
}

}  // namespace

TEST_CASE("norm values") {
    NormEngine e(Euclidean{2});
    CHECK(e.eval(make_vec({3, 4})) == doctest::Approx(5.0).epsilon(1e-15));
    NormEngine d(DiagQuadratic{{1, 1, 4}});
    CHECK(d.eval(make_vec({0, 0, 1})) == doctest::Approx(2.0).epsilon(1e-15));
    for (auto& eng : all_engines(3)) CHECK(eng.eval(Vec::Zero(3)) == 0.0);
}

TEST_CASE("gradient values") {
    NormEngine e(Euclidean{2});
    Vec g = e.grad(make_vec({0, 5}));
    CHECK(g[0] == doctest::Approx(0.0));
    CHECK(g[1] == doctest::Approx(1.0));
    NormEngine d(DiagQuadratic{{1, 1, 4}});
    Vec gd = d.grad(make_vec({1, 0, 0}));
    CHECK((gd - make_vec({1, 0, 0})).norm() < 1e-15);
    CHECK_THROWS_AS(d.grad(Vec::Zero(3)), Error);
    CHECK_THROWS_AS(d.hess(Vec::Zero(3)), Error);
}

TEST_CASE("Hessian of F^2") {
    NormEngine e(Euclidean{2});
    Vec x = make_vec({1, 0});
    Mat h2 = 2.0 * e.eval(x) * e.hess(x) + 2.0 * e.grad(x) * e.grad(x).transpose();
    CHECK((h2 - 2.0 * Mat::Identity(2, 2)).norm() < 1e-14);
    NormEngine d(DiagQuadratic{{1, 1, 4}});
    std::mt19937_64 rng(7);
    Mat ref = Mat::Zero(3, 3);
    ref.diagonal() << 2, 2, 8;
    for (int i = 0; i < 50; ++i) {
        Vec xi = random_vec(rng, 3);
        Mat m = 2.0 * d.eval(xi) * d.hess(xi) + 2.0 * d.grad(xi) * d.grad(xi).transpose();
        CHECK((m - ref).norm() < 1e-12);
    }
    for (int n = 2; n <= 3; ++n)
        for (auto& eng : all_engines(n))
            for (int i = 0; i < 30; ++i) {
                Vec xi = random_vec(rng, n);
                CHECK((eng.hess(2.0 * xi) - 0.5 * eng.hess(xi)).norm() <= 1e-8 * (1.0 + eng.hess(xi).norm()));
                Mat m = 2.0 * eng.eval(xi) * eng.hess(xi) + 2.0 * eng.grad(xi) * eng.grad(xi).transpose();
                CHECK((m - m.transpose()).norm() < 1e-10 * m.norm());
                Eigen::SelfAdjointEigenSolver<Mat> es(m);
                CHECK(es.eigenvalues().minCoeff() > 0.0);
            }
}

TEST_CASE("polar closed forms") {
    NormEngine d(DiagQuadratic{{1, 1, 4}});
    CHECK(d.polar(make_vec({0, 0, 1})) == doctest::Approx(0.5).epsilon(1e-15));
    Mat A(2, 2);
    A << 4, 0, 0, 1;
    NormEngine q(Quadratic{A});
    CHECK(q.polar(make_vec({2, 0})) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(q.with_mode(PolarMode::Numeric).polar(make_vec({2, 0})) == doctest::Approx(1.0).epsilon(1e-12));
    for (auto& eng : all_engines(3)) CHECK(eng.polar(Vec::Zero(3)) == 0.0);
    NormEngine e(Euclidean{2});
    Vec pg = e.polar_grad(make_vec({0, 3}));
    CHECK((pg - make_vec({0, 1})).norm() < 1e-15);
    CHECK_THROWS_AS(e.polar_grad(Vec::Zero(2)), Error);
}

TEST_CASE("polar by brute-force direction sup") {
    // Independent oracle: sup over a very fine circle of xi.x / F(xi).
    std::mt19937_64 rng(11);
    for (auto& eng : all_engines(2)) {
        for (int i = 0; i < 5; ++i) {
            Vec x = random_vec(rng, 2);
            double best = 0.0;
            const int m = 200000;
            for (int k = 0; k < m; ++k) {
                double t = 2.0 * M_PI * k / m;
                Vec u = make_vec({std::cos(t), std::sin(t)});
                best = std::max(best, u.dot(x) / eng.eval(u));
            }
            CHECK(eng.polar(x) == doctest::Approx(best).epsilon(1e-8));
        }
    }
}

TEST_CASE("growth bounds") {
    auto e = growth_bounds(NormEngine(Euclidean{3}));
    CHECK(e.first == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(e.second == doctest::Approx(1.0).epsilon(1e-12));
    auto d = growth_bounds(NormEngine(DiagQuadratic{{1, 1, 4}}));
    CHECK(d.first == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(d.second == doctest::Approx(2.0).epsilon(1e-9));
    auto p = growth_bounds(NormEngine(PNorm{4.0, 2}));
    // p > 2: the p-norm sits below the Euclidean one, smallest on the diagonal.
    CHECK(p.first == doctest::Approx(std::pow(2.0, -0.25)).epsilon(1e-9));
    CHECK(p.second == doctest::Approx(1.0).epsilon(1e-9));
    auto p15 = growth_bounds(NormEngine(PNorm{1.5, 2}));
    CHECK(p15.first == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(p15.second == doctest::Approx(std::pow(2.0, 1.0 / 1.5 - 0.5)).epsilon(1e-9));
    std::mt19937_64 rng(3);
    for (int n = 1; n <= 3; ++n)
        for (auto& eng : all_engines(n))
            for (int i = 0; i < 200; ++i) {
                Vec xi = random_vec(rng, n);
                double r = xi.norm();
                CHECK(eng.alpha1() * r <= eng.eval(xi) * (1 + 1e-12));
                CHECK(eng.eval(xi) <= eng.alpha2() * r * (1 + 1e-12));
                CHECK(r / eng.alpha2() <= eng.polar(xi) * (1 + 1e-12));
                CHECK(eng.polar(xi) <= r / eng.alpha1() * (1 + 1e-12));
            }
}

TEST_CASE("homogeneity, evenness, triangle inequality") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> t(-5, 5);
    for (int n = 1; n <= 3; ++n)
        for (auto& eng : all_engines(n))
            for (int i = 0; i < 1000; ++i) {
                Vec xi = random_vec(rng, n);
                double s = t(rng);
                CHECK(std::abs(eng.eval(s * xi) - std::abs(s) * eng.eval(xi)) <= 1e-10 * (1 + eng.eval(xi)));
                CHECK(eng.eval(-xi) == eng.eval(xi));
                Vec eta = random_vec(rng, n);
                CHECK(eng.eval(xi + eta) <= eng.eval(xi) + eng.eval(eta) + 1e-12);
            }
}

TEST_CASE("Euler identity and finite-difference gradient") {
    std::mt19937_64 rng(9);
    for (int n = 1; n <= 3; ++n)
        for (auto& eng : all_engines(n))
            for (int i = 0; i < 500; ++i) {
                Vec xi = random_vec(rng, n);
                Vec g = eng.grad(xi);
                CHECK(std::abs(g.dot(xi) - eng.eval(xi)) <= 1e-10 * (1 + eng.eval(xi)));
                CHECK((eng.grad(-3.0 * xi) + g).norm() <= 1e-12 * (1 + g.norm()));
                double h = 1e-6 * xi.norm();
                Vec fd(n);
                for (int k = 0; k < n; ++k) {
                    Vec a = xi, b = xi;
                    a[k] += h;
                    b[k] -= h;
                    fd[k] = (eng.eval(a) - eng.eval(b)) / (2 * h);
                }
                CHECK((fd - g).norm() <= 1e-6 * g.norm());
            }
}

TEST_CASE("duality identities") {
    std::mt19937_64 rng(13);
    for (int n = 1; n <= 3; ++n)
        for (auto& eng : all_engines(n)) {
            NormEngine num = eng.with_mode(PolarMode::Numeric);
            for (int i = 0; i < 200; ++i) {
                Vec x = random_vec(rng, n);
                Vec pg = eng.polar_grad(x);
                CHECK(std::abs(eng.eval(pg) - 1.0) <= 1e-8);
                Vec back = eng.polar(x) * eng.grad(pg);
                CHECK((back - x).norm() <= 1e-6 * x.norm());
                if (i < 40) {
                    CHECK(num.polar(x) == doctest::Approx(eng.polar(x)).epsilon(1e-12));
                    Vec npg = num.polar_grad(x);
                    CHECK(std::abs(eng.eval(npg) - 1.0) <= 1e-5);
                    CHECK((num.polar(x) * eng.grad(npg) - x).norm() <= 1e-5 * x.norm());
                }
            }
        }
}

TEST_CASE("bidual recovers F") {
    // (F°)° computed numerically from the closed-form polar must return F.
    std::mt19937_64 rng(17);
    for (int n = 2; n <= 3; ++n)
        for (auto& eng : all_engines(n)) {
            auto dirs = sphere_directions(n, 4096);
            for (int i = 0; i < 20; ++i) {
                Vec xi = random_vec(rng, n);
                double best = 0.0;
                Vec bu;
                for (auto& u : dirs) {
                    double v = u.dot(xi) / eng.polar(u);
                    if (v > best) {
                        best = v;
                        bu = u;
                    }
                }
                // local refinement by shrinking random perturbations
                double step = 0.05;
                while (step > 1e-9) {
                    bool moved = false;
                    for (int k = 0; k < 2 * n; ++k) {
                        Vec c = bu;
                        c[k / 2] += (k % 2 ? -step : step);
                        c.normalize();
                        double v = c.dot(xi) / eng.polar(c);
                        if (v > best) {
                            best = v;
                            bu = c;
                            moved = true;
                        }
                    }
                    if (!moved) step *= 0.5;
                }
                CHECK(best == doctest::Approx(eng.eval(xi)).epsilon(1e-6));
            }
        }
}

TEST_CASE("invalid descriptors") {
    CHECK_THROWS_AS(NormEngine(PNorm{0.5, 2}), Error);
    CHECK_THROWS_AS(NormEngine(PNorm{1.0, 2}), Error);
    CHECK_THROWS_AS(NormEngine(DiagQuadratic{{1, -1}}), Error);
    Mat A(2, 2);
    A << 1, 2, 2, 1;
    CHECK_THROWS_AS(NormEngine(Quadratic{A}), Error);
    A << 1, 0.5, 0.2, 1;
    CHECK_THROWS_AS(NormEngine(Quadratic{A}), Error);
}

TEST_CASE("PNorm Hessian near the axes stays finite") {
    NormEngine p(PNorm{1.5, 2});
    Mat H = p.hess(make_vec({1.0, 0.0}));
    CHECK(H.allFinite());
}
