#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "finhardy/distance.hpp"
#include "finhardy/energy.hpp"

namespace finhardy {

// Δ_F u = div(F(∇u) F_ξ(∇u)) as -dE/du / (2 h^n), E the cut-cell energy. NaN unless the whole 3^n block
// around the cell is inside, or where |∇u| < 1e-12 (counted in *degenerate).
ScalarField finsler_laplacian(const ScalarField& u, const NormEngine& engine, std::size_t* degenerate = nullptr);
ScalarField finsler_laplacian(const EnergyStencil& stencil, const ScalarField& u, const NormEngine& engine,
                              std::size_t* degenerate = nullptr);

enum class SuperharmonicMode { Pointwise, Distributional };
const char* to_string(SuperharmonicMode mode);

struct SuperharmonicVerdict {
    SuperharmonicMode mode = SuperharmonicMode::Distributional;
    bool verdict = false;
    double worst_value = 0.0;
    double tol = 0.0;
    long witness = -1;       // cell index (pointwise) or bump index (distributional)
    std::size_t witness_cell = 0;
    double excluded_fraction = 0.0;
    bool low_confidence = false;
    std::size_t evaluated = 0;  // cells or bumps
};

struct Bump {
    std::size_t center;  // cell index
    double radius;
};

// Radial bumps (1 - s^2)^3, s = |x - c|/radius, radii cycling through 4h, 8h, 12h, 16h (shrunk to fit),
// centred on a coarse lattice of inside cells; the lattice is refined until at least min_count fit.
std::vector<Bump> bump_family(const GridDomain& grid, std::size_t min_count = 200);
// ∫ F(∇u)F_ξ(∇u)·∇φ over the bump, through the energy gradient, and ∫|∇φ|.
std::pair<double, double> bump_pairing(const EnergyStencil& stencil, const std::vector<double>& energy_grad,
                                       const Bump& bump);

struct SuperharmonicOptions {
    SuperharmonicMode mode = SuperharmonicMode::Distributional;
    double tol = -1.0;  // negative: pointwise 0.05 * p95|Δ_F d|, distributional 1e-3
    std::size_t min_bumps = 200;
};

SuperharmonicVerdict superharmonic_check(const ScalarField& d, const std::vector<std::uint8_t>& ridge,
                                         const NormEngine& engine, const SuperharmonicOptions& opts = {});

Vec anisotropic_normal(const Vec& nu, const NormEngine& engine);

ScalarField torus_laplacian_oracle(const TorusSpec& spec, const GridPtr& grid, const NormEngine& engine);
double torus_laplacian_value(const TorusSpec& spec, const Vec& x);

// Euclidean mean curvature (average of principal curvatures, inward normal) of the torus boundary at the
// cross-section angle theta, closed form and from fundamental forms of the parametrisation.
double torus_mean_curvature(const TorusSpec& spec, double theta);
double torus_mean_curvature_numeric(const TorusSpec& spec, double theta);

}  // namespace finhardy
