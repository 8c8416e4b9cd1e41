#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "finhardy/error.hpp"
#include "finhardy/hardy.hpp"

using namespace finhardy;

namespace {

GridPtr interval(double res) { return build_grid({BoxSpec{make_vec({0}), make_vec({1})}, {}, {}}, res); }
GridPtr box2(double side, double res) {
    return build_grid({BoxSpec{make_vec({0, 0}), make_vec({side, side})}, {}, {}}, res);
}
GridPtr wulff2(double res) {
    return build_grid({WulffBallSpec{make_vec({0, 0}), 1.0, DiagQuadratic{{1, 4}}}, {}, {}}, res);
}

ScalarField sample(const GridPtr& g, const std::function<double(const Vec&)>& f) {
    ScalarField u(g, 0.0);
    for (std::size_t i = 0; i < g->size(); ++i)
        if (g->inside[i]) u[i] = f(g->center(i));
    return u;
}

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("no error thrown");
    return ErrorKind::Io;
}

// Frozen with scipy: 2 ∫_0^{1/2} sin²(πx)/x² dx.
const double kSineMass = 7.636063674837709;

}  // namespace

TEST_CASE("log weight") {
    CHECK(weight_X(std::exp(-1.0)) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(weight_X(std::exp(-2.0)) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(weight_X(0.5) == doctest::Approx(1.0 / std::log(2.0)));
    for (double t : {0.0, 1.0, 1.5, -0.2}) CHECK(kind_of([&] { weight_X(t); }) == ErrorKind::DomainError);
}

TEST_CASE("1D Hardy quotient of sin(pi x)") {
    auto g = interval(512);
    NormEngine e(Euclidean{1});
    auto dr = distance_bruteforce(g, e);
    auto u = sample(g, [](const Vec& x) { return std::sin(M_PI * x[0]); });
    CHECK(hardy_mass(u, dr.d) == doctest::Approx(kSineMass).epsilon(1e-3));
    CHECK(hardy_quotient(u, dr.d, e) == doctest::Approx(M_PI * M_PI / 2 / kSineMass).epsilon(1e-3));
}

TEST_CASE("quotient is invariant under amplitude and domain scaling") {
    NormEngine e(DiagQuadratic{{1, 4}});
    auto g1 = box2(1.0, 32), g2 = box2(2.0, 16);
    REQUIRE(g1->size() == g2->size());
    auto d1 = distance_bruteforce(g1, e).d, d2 = distance_bruteforce(g2, e).d;
    auto s1 = random_sine_suite(d1, 3, 11), s2 = random_sine_suite(d2, 3, 11);
    for (int k = 0; k < 3; ++k) {
        double q1 = hardy_quotient(s1[k], d1, e), q2 = hardy_quotient(s2[k], d2, e);
        CHECK(q1 == doctest::Approx(q2).epsilon(1e-10));
        ScalarField big = s1[k];
        for (auto& v : big.v) v *= 7.5;
        CHECK(hardy_quotient(big, d1, e) == doctest::Approx(q1).epsilon(1e-12));
    }
}

TEST_CASE("sine suite is seeded and satisfies the Hardy bound") {
    auto g = wulff2(48);
    NormEngine e(DiagQuadratic{{1, 4}});
    auto dr = distance_bruteforce(g, e);
    auto a = random_sine_suite(dr.d, 10, 5), b = random_sine_suite(dr.d, 10, 5), c = random_sine_suite(dr.d, 10, 6);
    CHECK(a[3].v == b[3].v);
    CHECK(a[3].v != c[3].v);
    const double D = M_E * dr.r_F;
    for (const auto& u : a) {
        double mass = hardy_mass(u, dr.d);
        CHECK(hardy_quotient(u, dr.d, e) >= 0.25);
        CHECK(deficit_logremainder(u, dr.d, e, D) >= -1e-3 * mass);
        CHECK(deficit_l2(u, dr.d, e, dr.r_F) >= -1e-3 * mass);
    }
    CHECK(log_dominance_gap(dr.d, dr.r_F) <= 1e-10);
    CHECK(kind_of([&] { deficit_logremainder(a[0], dr.d, e, 0.5 * dr.r_F); }) == ErrorKind::DomainError);
}

TEST_CASE("log dominance is tight at d = r_F") {
    auto g = interval(64);
    NormEngine e(Euclidean{1});
    auto dr = distance_bruteforce(g, e);
    CHECK(log_dominance_gap(dr.d, 0.5) <= 0.0);
    CHECK(log_dominance_gap(dr.d, 0.5) >= -1e-3);
}

TEST_CASE("first eigenvalues") {
    NormEngine e1(Euclidean{1});
    auto l1 = lambda1_estimate(interval(256), e1);
    CHECK(l1.quotient == doctest::Approx(M_PI * M_PI).epsilon(5e-3));
    // F² = ξ1² + 4ξ2² on the unit square: λ1 = π²(1 + 4)
    auto l2 = lambda1_estimate(box2(1.0, 48), NormEngine(DiagQuadratic{{1, 4}}));
    CHECK(l2.quotient == doctest::Approx(5 * M_PI * M_PI).epsilon(1e-2));
    for (std::size_t k = 1; k < l2.history.size(); ++k) CHECK(l2.history[k] <= l2.history[k - 1]);
}

TEST_CASE("Hardy estimate descends monotonically above one quarter") {
    auto g = box2(1.0, 32);
    NormEngine e(Euclidean{2});
    auto dr = distance_bruteforce(g, e);
    auto est = hardy_estimate(dr.d, e);
    CHECK(est.converged);
    CHECK(est.history.size() >= 2);
    for (std::size_t k = 1; k < est.history.size(); ++k) CHECK(est.history[k] <= est.history[k - 1]);
    CHECK(est.quotient == doctest::Approx(est.history.back()));
    CHECK(est.quotient > 0.25);
    CHECK(est.quotient < est.history.front());
    CHECK(hardy_quotient(est.u, dr.d, e) == doctest::Approx(est.quotient).epsilon(1e-10));
}

TEST_CASE("profile antiderivatives") {
    const double eps = 0.1, D = 2.0;
    Profile flat{eps, D, [](double) { return 1.0; }};
    for (double r : {0.01, 0.3, 1.0}) {
        CHECK(flat.antiderivative(1, r) == doctest::Approx(std::pow(r, 2 * eps) / (2 * eps)).epsilon(1e-9));
        CHECK(flat.antiderivative(2, r) ==
              doctest::Approx(std::pow(r, 2 * eps + 1) / (2 * eps * (2 * eps + 1))).epsilon(1e-9));
        CHECK(flat.antiderivative(3, r) ==
              doctest::Approx(std::pow(r, 2 * eps + 2) / (2 * eps * (2 * eps + 1) * (2 * eps + 2))).epsilon(1e-9));
    }
    CHECK(flat.antiderivative(2, -0.1) == 0.0);
    // derivative of G_1 is the profile itself
    Profile j = jbeta_profile(0.5, eps, D);
    const double r = 0.2, t = 1e-5;
    CHECK((j.antiderivative(1, r + t) - j.antiderivative(1, r - t)) / (2 * t) ==
          doctest::Approx(j.value(r)).epsilon(1e-6));
    CHECK((j.antiderivative(2, r + t) - j.antiderivative(2, r - t)) / (2 * t) ==
          doctest::Approx(j.antiderivative(1, r)).epsilon(1e-6));
}

TEST_CASE("J_beta on the interval matches the incomplete-gamma closed form") {
    // 2 D^{2ε} (2ε)^{-1-β} Γ(1+β, 2ε) with D = e/2, frozen with scipy
    struct Row {
        double beta, eps, J;
    };
    const Row rows[] = {{0.0, 0.2, 3.789291416275996},  {0.0, 0.05, 18.660659830736147},
                        {0.5, 0.2, 6.728794624700931},  {0.5, 0.05, 56.50121974201149},
                        {1.0, 0.2, 13.26251995696598},  {1.0, 0.05, 205.2672581380976}};
    auto g = interval(400);
    NormEngine e(Euclidean{1});
    auto dr = distance_bruteforce(g, e);
    ScalarField phi(g, 1.0);
    auto layer = build_profile_layer(dr.d, e);
    CHECK(layer.cells.size() >= 6);
    for (const Row& row : rows) {
        CHECK(jbeta(dr.d, phi, row.beta, row.eps, M_E / 2, &layer) == doctest::Approx(row.J).epsilon(2e-3));
    }
}

TEST_CASE("J_beta scaling sweep and resolution guard") {
    auto g = interval(400);
    NormEngine e(Euclidean{1});
    auto dr = distance_bruteforce(g, e);
    ScalarField phi(g, 1.0);
    auto layer = build_profile_layer(dr.d, e);
    auto fits = jbeta_scaling_sweep(dr.d, phi, 0.5, {0.0, 1.0}, {0.2, 0.1, 0.05}, &layer);
    REQUIRE(fits.size() == 2);
    CHECK(fits[0].slope == doctest::Approx(-1.0).epsilon(0.1));
    CHECK(fits[1].slope == doctest::Approx(-2.0).epsilon(0.1));
    CHECK(fits[0].max_ratio >= 1.0);
    CHECK(kind_of([&] { jbeta_scaling_sweep(dr.d, phi, 0.5, {0.0}, {0.2, 0.01}, &layer); }) ==
          ErrorKind::ResolutionGuard);
}

TEST_CASE("U_eps and cutoffs") {
    auto g = wulff2(32);
    NormEngine e(DiagQuadratic{{1, 4}});
    auto dr = distance_bruteforce(g, e);
    const double D = M_E * dr.r_F;
    ScalarField one = cutoff_field(g, e, {});
    auto U = build_Ueps(dr.d, 0.1, 0.75, one, D);
    for (std::size_t i = 0; i < g->size(); ++i) {
        if (!g->inside[i]) {
            CHECK(U[i] == 0.0);
            continue;
        }
        double d = dr.d[i];
        CHECK(U[i] == doctest::Approx(std::pow(d, 0.6) * std::pow(weight_X(d / D), -0.75)).epsilon(1e-12));
    }
    Cutoff local{Cutoff::Local, make_vec({1.0, 0.0}), 0.5};
    auto phi = cutoff_field(g, e, local);
    auto dphi = cutoff_gradient(g, e, local);
    for (std::size_t i = 0; i < g->size(); ++i) {
        double s = e.polar(g->center(i) - local.x0) / local.delta;
        if (s <= 0.5) CHECK(phi[i] == 1.0);
        if (s >= 1.0) CHECK(phi[i] == 0.0);
        CHECK(phi[i] >= 0.0);
        CHECK(phi[i] <= 1.0);
    }
    // gradient against centred differences of the sampled cutoff on a fine grid around the support
    auto fine = build_grid({BoxSpec{make_vec({0.4, -1.1}), make_vec({1.6, 1.1})}, {}, {}}, 512);
    auto fphi = cutoff_field(fine, e, local);
    auto fgrad = cutoff_gradient(fine, e, local);
    double worst = 0;
    for (std::size_t i = 0; i < fine->size(); ++i) {
        for (int k = 0; k < 2; ++k) {
            long r = fine->neighbor(i, k, +1), l = fine->neighbor(i, k, -1);
            double an = fgrad.at(i)[k];
            if (r < 0 || l < 0 || std::abs(an) < 0.1) continue;
            double fd = (fphi[static_cast<std::size_t>(r)] - fphi[static_cast<std::size_t>(l)]) / (2 * fine->h);
            worst = std::max(worst, std::abs(fd - an) / std::abs(an));
        }
    }
    CHECK(worst <= 0.05);
    CHECK(kind_of([&] { cutoff_field(g, e, {Cutoff::Local, make_vec({1.0, 0.0}), 0.0}); }) ==
          ErrorKind::InvalidArgument);
}

TEST_CASE("optimality sweep") {
    auto g = wulff2(64);
    NormEngine e(DiagQuadratic{{1, 4}});
    auto dr = distance_bruteforce(g, e);
    const std::vector<double> eps = {0.2, 0.1};
    auto rows = optimality_sweep(dr.d, e, dr.r_F, 0.75, eps);
    REQUIRE(rows.size() == 2);
    for (const auto& r : rows) {
        CHECK(r.Q == doctest::Approx(r.energy - 0.25 * r.hardy_mass).epsilon(1e-8));
        CHECK(r.J_values.size() == 3);
        CHECK(r.A_est == doctest::Approx(r.quotient_Ueps));
        CHECK(r.quotient_Ueps > 0.25);
        CHECK(r.D == doctest::Approx(M_E * dr.r_F));
    }
    CHECK(rows[1].A_est < rows[0].A_est);
    auto mid = optimality_sweep(dr.d, e, dr.r_F, 0.75, eps, {Cutoff{}, false});
    for (std::size_t k = 0; k < eps.size(); ++k) CHECK(mid[k].quotient_Ueps > 0.25);

    Cutoff local{Cutoff::Local, make_vec({1.0, 0.0}), 0.5};
    auto loc = optimality_sweep(dr.d, e, dr.r_F, 0.75, eps, {local, true});
    CHECK(loc[1].quotient_Ueps < loc[0].quotient_Ueps);
    CHECK(loc[0].quotient_Ueps > 0.25);

    for (double theta : {0.5, 1.0, 0.3})
        CHECK(kind_of([&] { optimality_sweep(dr.d, e, dr.r_F, theta, eps); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([&] { optimality_sweep(dr.d, e, dr.r_F, 0.75, {0.01}); }) == ErrorKind::ResolutionGuard);
}
