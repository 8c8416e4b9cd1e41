#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>
#include <random>

#include "finhardy/distance.hpp"
#include "finhardy/error.hpp"

using namespace finhardy;

namespace {

DomainSpec wulff2(double R) { return {WulffBallSpec{make_vec({0, 0}), R, DiagQuadratic{{1, 4}}}, {}, {}}; }

double max_err_inside(const DistanceResult& r, const std::function<double(const Vec&)>& exact) {
    const GridDomain& g = *r.d.grid;
    double e = 0;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g.inside[i]) e = std::max(e, std::abs(r.d[i] - exact(g.center(i))));
    return e;
}

}  // namespace

TEST_CASE("Euclidean slab distance") {
    DomainSpec s{SlabSpec{make_vec({1, 0}), 1.0, 0.75}, {}, {}};
    auto g = build_grid(s, 32);
    NormEngine e(Euclidean{2});
    auto bf = distance_bruteforce(g, e);
    CHECK(max_err_inside(bf, [](const Vec& x) { return std::min(x[0], 1 - x[0]); }) <= 2 * g->h);
    auto sw = distance_sweep(g, e);
    CHECK(max_err_inside(sw, [](const Vec& x) { return std::min(x[0], 1 - x[0]); }) <= 3 * g->h);
    CHECK(std::abs(sw.r_F - 0.5) <= 3 * g->h);
    // ridge sits on the midplane
    for (std::size_t i = 0; i < g->size(); ++i) {
        if (!sw.ridge[i]) continue;
        CHECK(std::abs(g->center(i)[0] - 0.5) <= 3 * g->h);
    }
    CHECK(sw.ridge_count > 0);
    CHECK(sw.residual.median <= 1e-8);
}

TEST_CASE("anisotropic slab distance is min(x.nu, L - x.nu)/F(nu)") {
    Vec nu = make_vec({1, 2});
    nu.normalize();
    DomainSpec s{SlabSpec{nu, 0.5, 0.5}, {}, {}};
    auto g = build_grid(s, 64);
    NormEngine e(DiagQuadratic{{1, 4}});
    double fn = e.eval(nu);
    auto exact = [&](const Vec& x) { return std::min(x.dot(nu), 0.5 - x.dot(nu)) / fn; };
    auto bf = distance_bruteforce(g, e);
    CHECK(max_err_inside(bf, exact) <= 2 * g->h);
    auto sw = distance_sweep(g, e);
    CHECK(max_err_inside(sw, exact) <= 3 * g->h);
}

TEST_CASE("Wulff ball distance is R - F°(x)") {
    auto g = build_grid(wulff2(1.0), 64);
    NormEngine e(DiagQuadratic{{1, 4}});
    auto exact = [&](const Vec& x) { return 1.0 - e.polar(x); };
    auto bf = distance_bruteforce(g, e);
    CHECK(max_err_inside(bf, exact) <= 2 * g->h);
    auto sw = distance_sweep(g, e);
    CHECK(max_err_inside(sw, exact) <= 3 * g->h);
    CHECK(sw.residual.median <= 0.05);
    CHECK(bf.residual.median <= 0.05);
    CHECK(std::abs(sw.r_F - 1.0) <= 3 * g->h);
    CHECK(g->center(sw.incenter).norm() <= 1.5 * g->h);
    for (std::size_t i = 0; i < g->size(); ++i)
        if (bf.ridge[i]) CHECK(e.polar(g->center(i)) <= 3 * g->h * e.alpha2());
}

TEST_CASE("box distance and sweep agreement") {
    DomainSpec b{BoxSpec{make_vec({0, 0}), make_vec({1, 1})}, {}, {}};
    auto g = build_grid(b, 64);
    NormEngine e(Euclidean{2});
    auto exact = [](const Vec& x) { return std::min({x[0], 1 - x[0], x[1], 1 - x[1]}); };
    auto sw = distance_sweep(g, e);
    auto bf = distance_bruteforce(g, e);
    CHECK(max_err_inside(sw, exact) <= 3 * g->h);
    CHECK(max_err_inside(bf, exact) <= 2 * g->h);
    CHECK(sw.rounds < 500);
    for (std::size_t j = 1; j < sw.history.size(); ++j) CHECK(std::isfinite(sw.history[j]));
}

TEST_CASE("norm scaling covariance of the brute-force distance") {
    auto g = build_grid(wulff2(1.0), 32);
    NormEngine e(DiagQuadratic{{1, 4}}), e3(DiagQuadratic{{9, 36}});
    auto a = distance_bruteforce(g, e), b = distance_bruteforce(g, e3);
    for (std::size_t i = 0; i < g->size(); ++i)
        if (g->inside[i]) CHECK(std::abs(b.d[i] * 3.0 - a.d[i]) <= 1e-8 * a.d[i]);
}

TEST_CASE("positivity, Lipschitz bound and sample bound") {
    auto g = build_grid(wulff2(1.0), 32);
    NormEngine e(DiagQuadratic{{1, 4}});
    auto sw = distance_sweep(g, e);
    std::vector<std::size_t> cells;
    for (std::size_t i = 0; i < g->size(); ++i)
        if (g->inside[i]) {
            CHECK(sw.d[i] > 0);
            cells.push_back(i);
        }
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<std::size_t> pick(0, cells.size() - 1);
    for (int t = 0; t < 2000; ++t) {
        std::size_t i = cells[pick(rng)], j = cells[pick(rng)];
        double lhs = std::abs(sw.d[i] - sw.d[j]);
        CHECK(lhs <= e.polar(g->center(i) - g->center(j)) + 2 * g->h / e.alpha1());
    }
    // d never exceeds the distance to any sample (by more than the sweep tolerance)
    BoundaryTree tree(g->samples, e);
    for (std::size_t i : cells) CHECK(sw.d[i] <= tree.nearest(g->center(i)).first + 3 * g->h);
    auto bf = distance_bruteforce(g, e);
    for (std::size_t i : cells) {
        double raw = tree.nearest(g->center(i)).first;
        CHECK(bf.d[i] <= raw);
        CHECK(bf.d[i] >= raw - g->h / 4);
    }
}

TEST_CASE("sweep error decreases under refinement") {
    NormEngine e(DiagQuadratic{{1, 4}});
    DomainSpec box{BoxSpec{make_vec({0, 0}), make_vec({1, 1})}, {}, {}};
    std::vector<double> err_box, err_ball;
    for (double res : {32.0, 64.0, 128.0}) {
        auto gb = build_grid(box, res);
        err_box.push_back(max_err_inside(distance_sweep(gb, e), [](const Vec& x) {
            return std::min({x[0], 1 - x[0], x[1] / 2, (1 - x[1]) / 2});
        }));
        auto gw = build_grid(wulff2(1.0), res);
        err_ball.push_back(max_err_inside(distance_sweep(gw, e), [&](const Vec& x) { return 1.0 - e.polar(x); }));
    }
    CHECK(std::log2(err_box[0] / err_box[1]) >= 0.8);
    CHECK(std::log2(err_box[1] / err_box[2]) >= 0.8);
    // the cone apex of the ball converges like h log(1/h)
    CHECK(err_ball[1] < err_ball[0]);
    CHECK(err_ball[2] < err_ball[1]);
    CHECK(std::log2(err_ball[0] / err_ball[2]) >= 1.4);
}

TEST_CASE("non-convergence is an error") {
    auto g = build_grid(wulff2(1.0), 32);
    NormEngine e(DiagQuadratic{{1, 4}});
    SweepOptions o;
    o.max_rounds = 1;
    CHECK_THROWS_AS(distance_sweep(g, e, o), Error);
}

TEST_CASE("torus closed form") {
    TorusSpec t{2.5, 1.0, 2.0};
    CHECK(torus_distance_value(t, make_vec({0, 2.5, 0})) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(torus_distance_value(t, make_vec({0, 3.0, 0})) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(torus_distance_value(t, make_vec({0, 2.5, 1.0})) == doctest::Approx(0.5).epsilon(1e-15));

    TorusSpec small{0.625, 0.25, 2.0};
    auto g = build_grid({small, {}, {}}, 64);
    NormEngine e(DiagQuadratic{{1, 1, 4}});
    auto oracle = torus_distance_oracle(small, g, e);
    double rf = 0;
    for (std::size_t i = 0; i < g->size(); ++i)
        if (g->inside[i]) rf = std::max(rf, oracle[i]);
    CHECK(std::abs(rf - 0.25) <= 3 * g->h);
    auto bf = distance_bruteforce(g, e);
    for (std::size_t i = 0; i < g->size(); ++i) {
        if (!g->inside[i]) continue;
        CHECK(std::abs(bf.d[i] - oracle[i]) <= 2 * g->h);
        if (bf.ridge[i]) CHECK(torus_core_polar(small, g->center(i)) <= 3 * g->h * e.alpha2());
    }
    CHECK_THROWS_AS(torus_distance_oracle(small, g, NormEngine(Euclidean{3})), Error);
}
