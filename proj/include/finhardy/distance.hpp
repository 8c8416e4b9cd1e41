#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "finhardy/domain.hpp"
#include "finhardy/norm.hpp"

namespace finhardy {

// kd-tree over boundary samples for min_y F°(x - y).
class BoundaryTree {
public:
    BoundaryTree(const std::vector<BoundarySample>& samples, const NormEngine& engine);
    // Returns (distance, sample index).
    std::pair<double, long> nearest(const Vec& x) const;

private:
    struct Node {
        double lo[3], hi[3];
        int begin, end;
        int left = -1, right = -1;
    };
    int build(int begin, int end, int depth);
    void search(int node, const double* x, double& best, long& arg) const;
    double lower_bound(const Node& nd, const double* x) const;

    NormEngine engine_;
    int n_;
    std::vector<int> order_;
    std::vector<double> pts_;  // reordered coordinates
    std::vector<Node> nodes_;
    double inv_axis_[3];
    double inv_alpha2_;
    bool absolute_ = false;
};

// Sample distance corrected to the F°-distance of the sample's tangent plane when that plane's foot lies
// within tol of the sample (exact on flat faces, second order on curved ones).
double refine_on_tangent(const Vec& x, const BoundarySample& s, double dist, const NormEngine& engine, double tol);

struct ResidualStats {
    double median = 0.0, p95 = 0.0, max = 0.0;
    std::size_t count = 0;
};

struct DistanceResult {
    ScalarField d;
    std::vector<long> foot;  // nearest boundary sample per cell (brute force only)
    ResidualStats residual;
    double r_F = 0.0;
    std::size_t incenter = 0;
    std::vector<std::uint8_t> ridge;
    std::size_t ridge_count = 0;
    int rounds = 0;
    std::vector<double> history;  // max update per sweep round
};

struct SweepOptions {
    double tol_factor = 1e-6;  // stop when the max update of a round drops below tol_factor * h
    int max_rounds = 500;
    double ridge_tau = 0.2;
};

DistanceResult distance_bruteforce(const GridPtr& grid, const NormEngine& engine, double ridge_tau = 0.2);
DistanceResult distance_sweep(const GridPtr& grid, const NormEngine& engine, const SweepOptions& opts = {});

// |F(grad d) - 1| per inside cell (NaN outside), from gradient_fd.
std::vector<double> eikonal_defect(const ScalarField& d, const NormEngine& engine);
std::vector<std::uint8_t> ridge_detect(const DistanceResult& result, const NormEngine& engine, double tau = 0.2);
ResidualStats eikonal_residual(const DistanceResult& result, const NormEngine& engine);
std::pair<double, std::size_t> inradius(const DistanceResult& result);
// Fills ridge mask, residual statistics and inradius.
void finalize_distance(DistanceResult& result, const NormEngine& engine, double tau);

void require_torus_norm(const TorusSpec& spec, const NormEngine& engine);
// F°(Q' - C): anisotropic distance from x to the core circle.
double torus_core_polar(const TorusSpec& spec, const Vec& x);
double torus_distance_value(const TorusSpec& spec, const Vec& x);
ScalarField torus_distance_oracle(const TorusSpec& spec, const GridPtr& grid, const NormEngine& engine);

}  // namespace finhardy
