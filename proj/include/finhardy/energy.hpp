#pragma once

#include <Eigen/Sparse>
#include <vector>

#include "finhardy/domain.hpp"
#include "finhardy/norm.hpp"

namespace finhardy {

// Discrete Dirichlet energy  E(u) ~ ∫ F(∇u)^2  for u vanishing off the mask.
//
// Every inside cell carries 2^n one-sided difference patterns s in {-1,+1}^n. Along axis k the pattern uses
// s_k (u_nb - u_c)/h when the neighbour is inside, and s_k (0 - u_c)/(theta h) across a cut face, where
// theta h is the distance to the boundary. A pattern's weight is the product of 2 theta over its cut sides,
// so the patterns tile the part of the cell that lies inside.
class EnergyStencil {
public:
    explicit EnergyStencil(GridPtr grid);

    const GridPtr& grid() const { return grid_; }
    double energy(const ScalarField& u, const NormEngine& engine) const;
    // Energy and dE/du (zero off the mask).
    double energy_grad(const ScalarField& u, const NormEngine& engine, std::vector<double>& grad) const;
    // Sum of pattern weights / 2^n per cell (1 for cells away from the boundary).
    const std::vector<double>& measure() const { return measure_; }

    // Compact numbering of inside cells for sparse matrices.
    const std::vector<long>& compact() const { return compact_; }
    const std::vector<std::size_t>& cells() const { return cells_; }
    // Matrix of the Euclidean energy (E = u^T K u) on inside cells.
    Eigen::SparseMatrix<double> euclidean_matrix() const;

private:
    struct Side {
        long nb;       // inside neighbour or -1 for a cut face
        double inv;    // 1/h or 1/(theta h)
        double weight; // 1 or 2 theta
    };
    double compute(const ScalarField& u, const NormEngine& engine, std::vector<double>* grad) const;

    GridPtr grid_;
    int n_;
    std::vector<std::size_t> cells_;
    std::vector<long> compact_;
    std::vector<Side> sides_;  // per compact cell
    std::vector<double> measure_;
};

}  // namespace finhardy
