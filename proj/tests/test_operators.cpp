#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "finhardy/error.hpp"
#include "finhardy/operators.hpp"

using namespace finhardy;

namespace {

GridPtr unit_box2(double res) { return build_grid({BoxSpec{make_vec({0, 0}), make_vec({1, 1})}, {}, {}}, res); }

ScalarField sample(const GridPtr& g, const std::function<double(const Vec&)>& f) {
    ScalarField u(g, 0.0);
    for (std::size_t i = 0; i < g->size(); ++i)
        if (g->inside[i]) u[i] = f(g->center(i));
    return u;
}

}  // namespace

TEST_CASE("Euclidean Laplacian of |x|^2 is 2n") {
    auto g = unit_box2(32);
    NormEngine e(Euclidean{2});
    auto u = sample(g, [](const Vec& x) { return x.squaredNorm(); });
    auto lap = finsler_laplacian(u, e);
    int checked = 0;
    for (std::size_t i = 0; i < g->size(); ++i) {
        if (!std::isfinite(lap[i])) continue;
        CHECK(lap[i] == doctest::Approx(4.0).epsilon(1e-9));
        ++checked;
    }
    CHECK(checked > 500);
}

TEST_CASE("anisotropic quadratic: Laplacian of x.Bx is 2 tr(AB)") {
    auto g = unit_box2(32);
    NormEngine e(DiagQuadratic{{1, 4}});
    // F^2 = xi.A xi with A = diag(1,4); flux A grad u, grad u = 2Bx with B = diag(1,3)
    auto u = sample(g, [](const Vec& x) { return x[0] * x[0] + 3 * x[1] * x[1]; });
    auto lap = finsler_laplacian(u, e);
    for (std::size_t i = 0; i < g->size(); ++i)
        if (std::isfinite(lap[i])) CHECK(lap[i] == doctest::Approx(2.0 * (1 + 12)).epsilon(1e-9));
}

TEST_CASE("Wulff cone: Laplacian of R - F°(x) is -(n-1)/F°(x)") {
    auto g = build_grid({WulffBallSpec{make_vec({0, 0}), 1.0, DiagQuadratic{{1, 4}}}, {}, {}}, 64);
    NormEngine e(DiagQuadratic{{1, 4}});
    auto u = sample(g, [&](const Vec& x) { return 1.0 - e.polar(x); });
    auto lap = finsler_laplacian(u, e);
    double worst = 0;
    for (std::size_t i = 0; i < g->size(); ++i) {
        double fo = e.polar(g->center(i));
        if (!std::isfinite(lap[i]) || fo < 0.3) continue;
        worst = std::max(worst, std::abs(lap[i] * fo + 1.0));
    }
    CHECK(worst <= 0.02);
}

TEST_CASE("flux homogeneity and evenness") {
    auto g = unit_box2(24);
    NormEngine e(Quadratic{(Mat(2, 2) << 2, 0.5, 0.5, 1).finished()});
    auto u = sample(g, [](const Vec& x) { return std::sin(3 * x[0]) * std::cos(2 * x[1]) + x[0] * x[1]; });
    ScalarField u3 = u, un = u;
    for (auto& v : u3.v) v *= 3.0;
    for (auto& v : un.v) v = -v;
    auto l = finsler_laplacian(u, e), l3 = finsler_laplacian(u3, e), ln = finsler_laplacian(un, e);
    for (std::size_t i = 0; i < g->size(); ++i) {
        if (!std::isfinite(l[i])) continue;
        CHECK(l3[i] == doctest::Approx(3 * l[i]).epsilon(1e-10));
        CHECK(ln[i] == doctest::Approx(-l[i]).epsilon(1e-10));
    }
}

TEST_CASE("energy gradient matches finite differences of the energy") {
    auto g = build_grid({WulffBallSpec{make_vec({0, 0}), 1.0, DiagQuadratic{{1, 4}}}, {}, {}}, 16);
    NormEngine e(PNorm{3.0, 2});
    EnergyStencil st(g);
    auto u = sample(g, [](const Vec& x) { return std::cos(x[0]) + x[1] * x[1] * x[0]; });
    std::vector<double> grad;
    st.energy_grad(u, e, grad);
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n01;
    ScalarField v(g, 0.0);
    for (std::size_t i = 0; i < g->size(); ++i)
        if (g->inside[i]) v[i] = n01(rng);
    const double t = 1e-6;
    ScalarField up = u, um = u;
    double dir = 0;
    for (std::size_t i = 0; i < g->size(); ++i) {
        up[i] += t * v[i];
        um[i] -= t * v[i];
        dir += grad[i] * v[i];
    }
    double fd = (st.energy(up, e) - st.energy(um, e)) / (2 * t);
    CHECK(fd == doctest::Approx(dir).epsilon(1e-6));
}

TEST_CASE("Euclidean energy equals the quadratic form of its matrix") {
    auto g = build_grid({WulffBallSpec{make_vec({0.1, 0}), 0.8, Euclidean{2}}, {}, {}}, 20);
    NormEngine e(Euclidean{2});
    EnergyStencil st(g);
    auto u = sample(g, [](const Vec& x) { return std::exp(x[0]) - x[1]; });
    Eigen::VectorXd x(static_cast<long>(st.cells().size()));
    for (std::size_t c = 0; c < st.cells().size(); ++c) x[static_cast<long>(c)] = u[st.cells()[c]];
    auto K = st.euclidean_matrix();
    CHECK(x.dot(K * x) == doctest::Approx(st.energy(u, e)).epsilon(1e-12));
}

TEST_CASE("energy rejects mismatched inputs") {
    auto g = unit_box2(8), g2 = unit_box2(8);
    EnergyStencil st(g);
    CHECK_THROWS_AS(st.energy(ScalarField(g2, 0.0), NormEngine(Euclidean{2})), Error);
    CHECK_THROWS_AS(st.energy(ScalarField(g, 0.0), NormEngine(Euclidean{3})), Error);
}

TEST_CASE("degenerate gradients are reported") {
    auto g = unit_box2(16);
    NormEngine e(Euclidean{2});
    std::size_t degen = 0;
    auto lap = finsler_laplacian(ScalarField(g, 1.0), e, &degen);
    CHECK(degen == g->inside_count);
    for (double v : lap.v) CHECK(std::isnan(v));
    auto dr = distance_bruteforce(g, e);
    CHECK_NOTHROW(superharmonic_check(dr.d, dr.ridge, e));
    ScalarField flat(g, 0.5);
    CHECK_THROWS_AS(superharmonic_check(flat, {}, e, {SuperharmonicMode::Pointwise}), Error);
}

TEST_CASE("anisotropic normal") {
    NormEngine e(DiagQuadratic{{1, 4}});
    Vec n = anisotropic_normal(make_vec({0, 1}), e);
    CHECK(n[0] == doctest::Approx(0.0));
    CHECK(n[1] == doctest::Approx(2.0));
    NormEngine e3(DiagQuadratic{{1, 1, 4}});
    Vec n3 = anisotropic_normal(make_vec({0, 0, 1}), e3);
    CHECK(n3[2] == doctest::Approx(2.0));
    CHECK_THROWS_AS(anisotropic_normal(make_vec({0, 0}), e), Error);
}

TEST_CASE("torus mean curvature") {
    TorusSpec t{2.5, 1.0, 2.0};
    CHECK(torus_mean_curvature(t, 0.0) == doctest::Approx(15.0 / 56.0).epsilon(1e-14));
    CHECK(torus_mean_curvature(t, 0.0) > 0);
    CHECK(torus_mean_curvature(t, M_PI) < 0);
    CHECK(torus_mean_curvature({2.5, 1.0, 1.0}, M_PI) > 0);
    // circular cross-section: H = (R + 2r cos)/(2r(R + r cos))
    TorusSpec c{3.0, 1.0, 1.0};
    for (double th : {0.0, 1.0, 2.0, 3.0})
        CHECK(torus_mean_curvature(c, th) ==
              doctest::Approx((3 + 2 * std::cos(th)) / (2 * (3 + std::cos(th)))).epsilon(1e-12));
    for (int k = 0; k < 8; ++k) {
        double th = 2 * M_PI * (k + 0.5) / 8;
        double a = torus_mean_curvature(t, th), b = torus_mean_curvature_numeric(t, th);
        CHECK(std::abs(a - b) <= 0.05 * std::abs(a));
    }
}

TEST_CASE("torus Laplacian closed form") {
    TorusSpec t{2.5, 1.0, 2.0};
    CHECK(std::isnan(torus_laplacian_value(t, make_vec({0, 0, 0.5}))));
    CHECK(std::isnan(torus_laplacian_value(t, make_vec({2.5, 0, 0}))));
    // negative wherever rho > R/2, which covers the whole torus when R > 2r
    CHECK(torus_laplacian_value(t, make_vec({3.0, 0, 0})) == doctest::Approx(-3.5 / (3.0 * 0.5)));

    auto g = build_grid({t, {}, {}}, 8);
    NormEngine e(DiagQuadratic{{1, 1, 4}});
    auto d = torus_distance_oracle(t, g, e);
    auto exact = torus_laplacian_oracle(t, g, e);
    auto lap = finsler_laplacian(d, e);
    double worst = 0;
    int n = 0;
    for (std::size_t i = 0; i < g->size(); ++i) {
        if (!std::isfinite(lap[i])) continue;
        Vec x = g->center(i);
        if (torus_core_polar(t, x) < 4 * g->h || std::hypot(x[0], x[1]) < 4 * g->h) continue;
        worst = std::max(worst, std::abs(lap[i] - exact[i]) / std::abs(exact[i]));
        ++n;
    }
    CHECK(n > 1000);
    CHECK(worst <= 0.05);
    CHECK_THROWS_AS(torus_laplacian_oracle(t, g, NormEngine(Euclidean{3})), Error);
}

TEST_CASE("bump family and superharmonic verdicts on a convex domain") {
    auto g = build_grid({WulffBallSpec{make_vec({0, 0}), 1.0, DiagQuadratic{{1, 4}}}, {}, {}}, 64);
    NormEngine e(DiagQuadratic{{1, 4}});
    auto bumps = bump_family(*g);
    CHECK(bumps.size() >= 200);
    for (const Bump& b : bumps) CHECK(g->inside[b.center]);
    auto dr = distance_bruteforce(g, e);
    auto dist = superharmonic_check(dr.d, dr.ridge, e);
    CHECK(dist.verdict);
    CHECK(dist.evaluated >= 200);
    auto pw = superharmonic_check(dr.d, dr.ridge, e, {SuperharmonicMode::Pointwise});
    CHECK(pw.verdict);
    CHECK(std::string(to_string(pw.mode)) == "pointwise");
}

TEST_CASE("superharmonicity fails for a fat torus") {
    TorusSpec t{1.6, 1.0, 2.0};
    auto g = build_grid({t, {}, {}}, 1 / 0.075);
    NormEngine e(DiagQuadratic{{1, 1, 4}});
    auto d = torus_distance_oracle(t, g, e);
    // the oracle's kink on the core circle has a strongly negative Laplacian, so no ridge mask is needed
    auto v = superharmonic_check(d, {}, e, {SuperharmonicMode::Pointwise});
    CHECK_FALSE(v.verdict);
    Vec w = g->center(v.witness_cell);
    CHECK(std::hypot(w[0], w[1]) < t.R / 2);
}
