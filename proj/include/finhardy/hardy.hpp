#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "finhardy/distance.hpp"
#include "finhardy/energy.hpp"

namespace finhardy {

// X(t) = -1/log t on (0,1).
double weight_X(double t);

// ∫u²/d² by midpoint over inside cells with d >= h/2.
double hardy_mass(const ScalarField& u, const ScalarField& d);
double hardy_quotient(const EnergyStencil& stencil, const ScalarField& u, const ScalarField& d,
                      const NormEngine& engine);
double hardy_quotient(const ScalarField& u, const ScalarField& d, const NormEngine& engine);

struct DescentOptions {
    int max_iters = 2000;
    double tol = 1e-6;  // stop at relative decrease below tol
};

struct HardyEstimate {
    double quotient = 0.0;
    int iterations = 0;
    std::vector<double> history;
    bool converged = false;
    double h = 0.0;
    std::size_t cells = 0;
    ScalarField u;  // last iterate
};

// Minimises ∫F(∇u)² / ∫u²/d² from u0 = d^{1/2} by preconditioned descent (see README).
HardyEstimate hardy_estimate(const ScalarField& d, const NormEngine& engine, const DescentOptions& opts = {});
// Same machinery with denominator ∫u².
HardyEstimate lambda1_estimate(const GridPtr& grid, const NormEngine& engine, const DescentOptions& opts = {});

// Seeded random test functions: sums of up to 4x4 sine products on the domain's bounding box (vanishing on
// its faces), multiplied by d unless the domain is a box.
std::vector<ScalarField> random_sine_suite(const ScalarField& d, int count, std::uint64_t seed);

// ∫F(∇u)² - ¼∫u²/d² - ¼∫u²X²(d/D)/d².
double deficit_logremainder(const ScalarField& u, const ScalarField& d, const NormEngine& engine, double D);
// ∫F(∇u)² - ¼∫u²/d² - (1/(4 r_F²))∫u².
double deficit_l2(const ScalarField& u, const ScalarField& d, const NormEngine& engine, double r_F);
// max over inside cells of -d log(d/(e r_F)) - r_F; nonpositive up to rounding.
double log_dominance_gap(const ScalarField& d, double r_F);

struct Cutoff {
    enum Kind { Global, Local } kind = Global;
    Vec x0;            // boundary point (Local)
    double delta = 0;  // Wulff radius of the support (Local)
};
// φ ≡ 1 (Global), or χ(F°(x-x0)/δ) with χ = 1 on [0,½], 0 on [1,∞), smooth in between (Local).
ScalarField cutoff_field(const GridPtr& grid, const NormEngine& engine, const Cutoff& cutoff);
VectorField cutoff_gradient(const GridPtr& grid, const NormEngine& engine, const Cutoff& cutoff);

// U_ε = φ d^{½+ε} X^{-θ}(d/D).
ScalarField build_Ueps(const ScalarField& d, double epsilon, double theta, const ScalarField& phi, double D);

// Boundary layer for profile quadrature: cells where d is replaced by its linearisation a + p·(x - x_c).
struct LayerCell {
    std::size_t cell;
    double a;
    Vec p;
};
struct ProfileLayer {
    double depth = 3.0;  // in cells
    std::vector<LayerCell> cells;
    std::vector<std::uint8_t> in_layer;  // per grid cell
};
ProfileLayer build_profile_layer(const ScalarField& d, const NormEngine& engine, double depth = 3.0);

// Integrand d^{2ε-1} ψ(log(D/d)) of a radial-in-d quantity.
struct Profile {
    double epsilon;
    double D;
    std::function<double(double)> psi;
    double value(double s) const;
    // k-fold antiderivative from 0, G_k(r) = ∫_0^r (r-s)^{k-1}/(k-1)! f(s) ds; zero for r <= 0.
    double antiderivative(int k, double r) const;
};
// ∫ φ² f(d) dx: midpoint on inside cells off the layer (or on all cells with d >= h/2 if layer is null),
// exact integration of f along the linearised distance on layer cells.
double profile_integral(const ScalarField& d, const ScalarField& phi, const Profile& profile,
                        const ProfileLayer* layer);

Profile jbeta_profile(double beta, double epsilon, double D);
// J_β(ε) = ∫ φ² d^{-1+2ε} X^{-β}(d/D).
double jbeta(const ScalarField& d, const ScalarField& phi, double beta, double epsilon, double D,
             const ProfileLayer* layer = nullptr);

struct ScalingFit {
    double beta;
    std::vector<double> J;
    double slope;      // least-squares slope of log J against log ε
    double max_ratio;  // max J / min J
};
std::vector<ScalingFit> jbeta_scaling_sweep(const ScalarField& d, const ScalarField& phi, double r_F,
                                            const std::vector<double>& betas, const std::vector<double>& epsilons,
                                            const ProfileLayer* layer = nullptr);
void require_resolution(const std::vector<double>& epsilons, double h, double r_F);

struct SweepRow {
    double epsilon = 0, theta = 0;
    double quotient_Ueps = 0;  // energy / hardy_mass
    double energy = 0;         // ∫F(∇U_ε)²
    double hardy_mass = 0;     // ∫U_ε²/d²
    double Q = 0;              // energy - ¼ hardy_mass
    std::map<double, double> J_values;
    double D = 0;
    double A_est = 0;     // energy / J_{2θ}
    double ratio_g15 = 0; // Q / J_{2θ-1.5}
    double ratio_g2 = 0;  // Q / J_{2θ-2}
};

struct OptimalityOptions {
    Cutoff cutoff;
    bool profile = true;  // profile quadrature (false: midpoint)
};

std::vector<SweepRow> optimality_sweep(const ScalarField& d, const NormEngine& engine, double r_F, double theta,
                                       const std::vector<double>& epsilons, const OptimalityOptions& opts = {});

}  // namespace finhardy
