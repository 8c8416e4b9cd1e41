#include "finhardy/energy.hpp"

#include <cmath>

#include "finhardy/error.hpp"

namespace finhardy {

EnergyStencil::EnergyStencil(GridPtr grid) : grid_(std::move(grid)), n_(grid_->n) {
    const GridDomain& g = *grid_;
    compact_.assign(g.size(), -1);
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g.inside[i]) {
            compact_[i] = static_cast<long>(cells_.size());
            cells_.push_back(i);
        }
    sides_.resize(cells_.size() * n_ * 2);
    measure_.assign(g.size(), 0.0);
    for (std::size_t c = 0; c < cells_.size(); ++c) {
        std::size_t i = cells_[c];
        double m = 1.0;
        for (int k = 0; k < n_; ++k) {
            double wsum = 0.0;
            for (int s = -1; s <= 1; s += 2) {
                long nb = g.neighbor(i, k, s);
                Side& sd = sides_[(c * n_ + k) * 2 + (s > 0)];
                if (g.is_inside(nb)) {
                    sd = {nb, 1.0 / g.h, 1.0};
                } else {
                    double theta = g.cut_fraction(i, k, s);
                    sd = {-1, 1.0 / (theta * g.h), 2.0 * theta};
                }
                wsum += sd.weight;
            }
            m *= wsum / 2.0;
        }
        measure_[i] = m;
    }
}

double EnergyStencil::energy(const ScalarField& u, const NormEngine& engine) const {
    return compute(u, engine, nullptr);
}

double EnergyStencil::energy_grad(const ScalarField& u, const NormEngine& engine, std::vector<double>& grad) const {
    return compute(u, engine, &grad);
}

double EnergyStencil::compute(const ScalarField& u, const NormEngine& engine, std::vector<double>* gradp) const {
    const GridDomain& g = *grid_;
    if (u.grid.get() != grid_.get()) throw Error(ErrorKind::InvalidArgument, "field and stencil grids differ");
    if (engine.dim() != n_) throw Error(ErrorKind::InvalidArgument, "norm and grid dimensions differ");
    if (gradp) gradp->assign(g.size(), 0.0);
    const int npat = 1 << n_;
    const double vol = g.cell_volume() / npat;
    double total = 0.0;
    Vec D(n_), g2(n_);
    double diff[3][2], inv[3][2];
    long nbs[3][2];
    for (std::size_t c = 0; c < cells_.size(); ++c) {
        std::size_t i = cells_[c];
        double uc = u.v[i];
        double wside[3][2];
        for (int k = 0; k < n_; ++k)
            for (int t = 0; t < 2; ++t) {
                const Side& sd = sides_[(c * n_ + k) * 2 + t];
                double s = t ? 1.0 : -1.0;
                double unb = sd.nb >= 0 ? u.v[static_cast<std::size_t>(sd.nb)] : 0.0;
                diff[k][t] = s * (unb - uc) * sd.inv;
                inv[k][t] = s * sd.inv;
                nbs[k][t] = sd.nb;
                wside[k][t] = sd.weight;
            }
        for (int pat = 0; pat < npat; ++pat) {
            double w = vol;
            for (int k = 0; k < n_; ++k) {
                int t = (pat >> k) & 1;
                D[k] = diff[k][t];
                w *= wside[k][t];
            }
            double f2 = engine.sq_and_grad(D, g2);
            total += w * f2;
            if (!gradp) continue;
            std::vector<double>& grad = *gradp;
            for (int k = 0; k < n_; ++k) {
                int t = (pat >> k) & 1;
                double gk = w * g2[k] * inv[k][t];
                grad[i] -= gk;
                if (nbs[k][t] >= 0) grad[static_cast<std::size_t>(nbs[k][t])] += gk;
            }
        }
    }
    return total;
}

Eigen::SparseMatrix<double> EnergyStencil::euclidean_matrix() const {
    const GridDomain& g = *grid_;
    const double vol = g.cell_volume() / (1 << n_);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(cells_.size() * (2 * n_ * 3 + 1));
    for (std::size_t c = 0; c < cells_.size(); ++c) {
        long ci = static_cast<long>(c);
        for (int k = 0; k < n_; ++k) {
            double others = 1.0;
            for (int j = 0; j < n_; ++j)
                if (j != k)
                    others *= sides_[(c * n_ + j) * 2].weight + sides_[(c * n_ + j) * 2 + 1].weight;
            for (int t = 0; t < 2; ++t) {
                const Side& sd = sides_[(c * n_ + k) * 2 + t];
                double coef = vol * others * sd.weight * sd.inv * sd.inv;
                trip.emplace_back(ci, ci, coef);
                if (sd.nb >= 0) {
                    long nb = compact_[static_cast<std::size_t>(sd.nb)];
                    trip.emplace_back(ci, nb, -coef);
                    trip.emplace_back(nb, ci, -coef);
                    trip.emplace_back(nb, nb, coef);
                }
            }
        }
    }
    Eigen::SparseMatrix<double> K(static_cast<long>(cells_.size()), static_cast<long>(cells_.size()));
    K.setFromTriplets(trip.begin(), trip.end());
    return K;
}

}  // namespace finhardy
