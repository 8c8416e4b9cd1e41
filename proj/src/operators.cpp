#include "finhardy/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "finhardy/error.hpp"

namespace finhardy {

namespace {
const double kNaN = std::numeric_limits<double>::quiet_NaN();

bool full_block_inside(const GridDomain& g, std::size_t i) {
    int c[3];
    g.coords(i, c);
    int lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
    for (int k = 0; k < g.n; ++k) {
        if (c[k] == 0 || c[k] == g.dims[k] - 1) return false;
        lo[k] = -1;
        hi[k] = 1;
    }
    for (int a = lo[0]; a <= hi[0]; ++a)
        for (int b = lo[1]; b <= hi[1]; ++b)
            for (int e = lo[2]; e <= hi[2]; ++e)
                if (!g.inside[g.index(c[0] + a, c[1] + b, c[2] + e)]) return false;
    return true;
}

double percentile(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    double pos = q * (v.size() - 1);
    std::size_t i = static_cast<std::size_t>(pos);
    if (i + 1 >= v.size()) return v.back();
    return v[i] + (pos - i) * (v[i + 1] - v[i]);
}

// Visits the cells within `radius` of the bump centre; returns false if any of them is outside.
template <class Fn>
bool for_bump_cells(const GridDomain& g, std::size_t center, double radius, Fn&& fn) {
    int c[3];
    g.coords(center, c);
    int reach = static_cast<int>(std::ceil(radius / g.h));
    int lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
    for (int k = 0; k < g.n; ++k) {
        lo[k] = c[k] - reach;
        hi[k] = c[k] + reach;
        if (lo[k] < 1 || hi[k] > g.dims[k] - 2) return false;
    }
    Vec x0 = g.center(center);
    for (int a = lo[0]; a <= hi[0]; ++a)
        for (int b = lo[1]; b <= hi[1]; ++b)
            for (int e = lo[2]; e <= hi[2]; ++e) {
                std::size_t j = g.index(a, b, e);
                Vec z = g.center(j) - x0;
                double s = z.norm() / radius;
                if (s >= 1.0) continue;
                if (!g.inside[j]) return false;
                fn(j, z, s);
            }
    return true;
}
}  // namespace

const char* to_string(SuperharmonicMode mode) {
    return mode == SuperharmonicMode::Pointwise ? "pointwise" : "distributional";
}

ScalarField finsler_laplacian(const EnergyStencil& stencil, const ScalarField& u, const NormEngine& engine,
                              std::size_t* degenerate) {
    const GridDomain& g = *u.grid;
    std::vector<double> grad;
    stencil.energy_grad(u, engine, grad);
    VectorField gu = gradient_fd(u);
    ScalarField out(u.grid, kNaN);
    std::size_t degen = 0;
    const double scale = 2.0 * g.cell_volume();
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!g.inside[i]) continue;
        if (gu.at(i).norm() < 1e-12) {
            ++degen;
            continue;
        }
        if (!full_block_inside(g, i)) continue;
        out[i] = -grad[i] / scale;
    }
    if (degenerate) *degenerate = degen;
    return out;
}

ScalarField finsler_laplacian(const ScalarField& u, const NormEngine& engine, std::size_t* degenerate) {
    EnergyStencil stencil(u.grid);
    return finsler_laplacian(stencil, u, engine, degenerate);
}

std::vector<Bump> bump_family(const GridDomain& g, std::size_t min_count) {
    static const int radii[4] = {4, 8, 12, 16};
    std::vector<Bump> out;
    for (int spacing = 16; spacing >= 2; spacing /= 2) {
        out.clear();
        int ordinal = 0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (!g.inside[i]) continue;
            int c[3];
            g.coords(i, c);
            bool on = true;
            for (int k = 0; k < g.n; ++k) on = on && (c[k] % spacing == spacing / 2);
            if (!on) continue;
            int first = ordinal++ % 4;
            for (int t = first; t >= 0; --t) {
                double r = radii[t] * g.h;
                if (for_bump_cells(g, i, r, [](std::size_t, const Vec&, double) {})) {
                    out.push_back({i, r});
                    break;
                }
            }
        }
        if (out.size() >= min_count) break;
    }
    return out;
}

std::pair<double, double> bump_pairing(const EnergyStencil& stencil, const std::vector<double>& energy_grad,
                                       const Bump& bump) {
    const GridDomain& g = *stencil.grid();
    double pair = 0.0, gnorm = 0.0;
    const double vol = g.cell_volume();
    for_bump_cells(g, bump.center, bump.radius, [&](std::size_t j, const Vec& z, double s) {
        double q = 1.0 - s * s;
        pair += 0.5 * energy_grad[j] * q * q * q;
        gnorm += 6.0 * q * q * z.norm() / (bump.radius * bump.radius) * vol;
    });
    return {pair, gnorm};
}

SuperharmonicVerdict superharmonic_check(const ScalarField& d, const std::vector<std::uint8_t>& ridge,
                                         const NormEngine& engine, const SuperharmonicOptions& opts) {
    const GridDomain& g = *d.grid;
    SuperharmonicVerdict v;
    v.mode = opts.mode;
    EnergyStencil stencil(d.grid);
    std::size_t ridge_cells = 0;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g.inside[i] && !ridge.empty() && ridge[i]) ++ridge_cells;
    v.excluded_fraction = static_cast<double>(ridge_cells) / static_cast<double>(g.inside_count);

    if (opts.mode == SuperharmonicMode::Pointwise) {
        std::size_t degen = 0;
        ScalarField lap = finsler_laplacian(stencil, d, engine, &degen);
        if (degen > 0.2 * g.inside_count) {
            std::ostringstream os;
            os << degen << " of " << g.inside_count << " cells have a degenerate gradient";
            throw Error(ErrorKind::UndefinedGradient, os.str());
        }
        v.excluded_fraction += static_cast<double>(degen) / static_cast<double>(g.inside_count);
        std::vector<double> mags;
        double worst = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (!std::isfinite(lap[i]) || (!ridge.empty() && ridge[i])) continue;
            mags.push_back(std::abs(lap[i]));
            if (lap[i] > worst) {
                worst = lap[i];
                v.witness = static_cast<long>(i);
            }
        }
        v.evaluated = mags.size();
        v.worst_value = worst;
        v.tol = opts.tol >= 0 ? opts.tol : 0.05 * percentile(mags, 0.95);
        v.verdict = v.evaluated > 0 && worst <= v.tol;
        if (v.witness >= 0) v.witness_cell = static_cast<std::size_t>(v.witness);
    } else {
        std::vector<double> grad;
        stencil.energy_grad(d, engine, grad);
        auto bumps = bump_family(g, opts.min_bumps);
        double worst = std::numeric_limits<double>::infinity();
        for (std::size_t b = 0; b < bumps.size(); ++b) {
            auto [pair, gnorm] = bump_pairing(stencil, grad, bumps[b]);
            double val = pair / gnorm;
            if (val < worst) {
                worst = val;
                v.witness = static_cast<long>(b);
                v.witness_cell = bumps[b].center;
            }
        }
        v.evaluated = bumps.size();
        v.worst_value = worst;
        v.tol = opts.tol >= 0 ? opts.tol : 1e-3;
        v.verdict = !bumps.empty() && worst >= -v.tol;
    }
    v.low_confidence = v.excluded_fraction >= 0.05;
    return v;
}

Vec anisotropic_normal(const Vec& nu, const NormEngine& engine) {
    if (nu.norm() == 0.0) throw Error(ErrorKind::ZeroInput, "zero normal");
    return engine.grad(nu);
}

double torus_laplacian_value(const TorusSpec& spec, const Vec& x) {
    double rho = std::hypot(x[0], x[1]);
    double fo = torus_core_polar(spec, x);
    if (rho == 0.0 || fo == 0.0) return kNaN;
    return (spec.R - 2.0 * rho) / (rho * fo);
}

ScalarField torus_laplacian_oracle(const TorusSpec& spec, const GridPtr& grid, const NormEngine& engine) {
    require_torus_norm(spec, engine);
    ScalarField out(grid, kNaN);
    for (std::size_t i = 0; i < grid->size(); ++i)
        if (grid->inside[i]) out[i] = torus_laplacian_value(spec, grid->center(i));
    return out;
}

double torus_mean_curvature(const TorusSpec& spec, double theta) {
    const double R = spec.R, r = spec.r, a = spec.a;
    double c = std::cos(theta), s = std::sin(theta);
    double num = a * r * r * (R + 2.0 * r * c + r * c * c * c * (a * a - 1.0));
    double den = 2.0 * std::abs(R + r * c) * std::pow(r * r * s * s + a * a * r * r * c * c, 1.5);
    return num / den;
}

double torus_mean_curvature_numeric(const TorusSpec& spec, double theta) {
    auto surf = [&](double t, double th) {
        double rad = spec.R + spec.r * std::cos(th);
        return Eigen::Vector3d(rad * std::cos(t), rad * std::sin(t), spec.a * spec.r * std::sin(th));
    };
    const double t0 = 0.3, e = 1e-4;
    Eigen::Vector3d p = surf(t0, theta);
    Eigen::Vector3d xt = (surf(t0 + e, theta) - surf(t0 - e, theta)) / (2 * e);
    Eigen::Vector3d xh = (surf(t0, theta + e) - surf(t0, theta - e)) / (2 * e);
    Eigen::Vector3d xtt = (surf(t0 + e, theta) - 2 * p + surf(t0 - e, theta)) / (e * e);
    Eigen::Vector3d xhh = (surf(t0, theta + e) - 2 * p + surf(t0, theta - e)) / (e * e);
    Eigen::Vector3d xth = (surf(t0 + e, theta + e) - surf(t0 + e, theta - e) - surf(t0 - e, theta + e) +
                           surf(t0 - e, theta - e)) /
                          (4 * e * e);
    Eigen::Vector3d nrm = xt.cross(xh).normalized();
    Eigen::Vector3d core(spec.R * std::cos(t0), spec.R * std::sin(t0), 0.0);
    if (nrm.dot(core - p) < 0) nrm = -nrm;  // inward
    double E = xt.dot(xt), F = xt.dot(xh), G = xh.dot(xh);
    double L = xtt.dot(nrm), M = xth.dot(nrm), N = xhh.dot(nrm);
    return (L * G - 2 * M * F + N * E) / (2 * (E * G - F * F));
}

}  // namespace finhardy
