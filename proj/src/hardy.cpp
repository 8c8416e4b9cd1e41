#include "finhardy/hardy.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "finhardy/error.hpp"

namespace finhardy {

namespace {

void require_distance(const ScalarField& d) {
    if (!d.grid) throw Error(ErrorKind::InvalidArgument, "distance field has no grid");
    if (d.grid->inside_count == 0) throw Error(ErrorKind::EmptyDomain, "no inside cells");
}

double log_ratio(double s, double D) { return std::log(D / s); }

// Compact-vector Rayleigh quotient E(x) / x^T N x on the inside cells of a stencil.
class Rayleigh {
public:
    Rayleigh(const EnergyStencil& st, const NormEngine& eng, Eigen::VectorXd weights)
        : st_(st), eng_(eng), w_(std::move(weights)), field_(st.grid(), 0.0) {}

    double mass(const Eigen::VectorXd& x) const { return x.dot(w_.cwiseProduct(x)); }
    double energy(const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
        load(x);
        if (!grad) return st_.energy(field_, eng_);
        double e = st_.energy_grad(field_, eng_, full_);
        grad->resize(x.size());
        const auto& cells = st_.cells();
        for (std::size_t c = 0; c < cells.size(); ++c) (*grad)[static_cast<long>(c)] = full_[cells[c]];
        return e;
    }
    const Eigen::VectorXd& weights() const { return w_; }
    ScalarField field(const Eigen::VectorXd& x) {
        load(x);
        return field_;
    }

private:
    void load(const Eigen::VectorXd& x) {
        const auto& cells = st_.cells();
        for (std::size_t c = 0; c < cells.size(); ++c) field_.v[cells[c]] = x[static_cast<long>(c)];
    }
    const EnergyStencil& st_;
    const NormEngine& eng_;
    Eigen::VectorXd w_;
    ScalarField field_;
    std::vector<double> full_;
};

HardyEstimate descend(const EnergyStencil& st, const NormEngine& eng, Eigen::VectorXd weights, Eigen::VectorXd x,
                      const DescentOptions& opts) {
    Rayleigh ray(st, eng, std::move(weights));
    const long m = x.size();
    HardyEstimate out;
    out.h = st.grid()->h;
    out.cells = static_cast<std::size_t>(m);
    double nx = ray.mass(x);
    if (!(nx > 0)) throw Error(ErrorKind::ZeroDenominator, "initial iterate has zero mass");
    x /= std::sqrt(nx);

    Eigen::SparseMatrix<double> K = st.euclidean_matrix() * (eng.alpha1() * eng.alpha1());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
    double q_fact = -1.0;
    auto factor = [&](double q) {
        Eigen::SparseMatrix<double> P = K;
        for (long c = 0; c < m; ++c) P.coeffRef(c, c) += q * ray.weights()[c];
        solver.compute(P);
        if (solver.info() != Eigen::Success) throw Error(ErrorKind::NonConvergence, "preconditioner factorisation failed");
        q_fact = q;
    };

    Eigen::VectorXd g;
    double R = ray.energy(x, &g);
    out.history.push_back(R);
    double tau = 1.0;
    for (int it = 0; it < opts.max_iters; ++it) {
        g -= 2.0 * R * ray.weights().cwiseProduct(x);
        if (q_fact < 0 || std::abs(R - q_fact) > 0.1 * q_fact) factor(R);
        Eigen::VectorXd dir = -solver.solve(g);
        tau = std::min(2.0 * tau, 4.0);
        bool accepted = false;
        Eigen::VectorXd xt;
        double Rt = R;
        for (int k = 0; k < 60; ++k, tau *= 0.5) {
            xt = x + tau * dir;
            double mt = ray.mass(xt);
            if (!(mt > 0)) continue;
            xt /= std::sqrt(mt);
            Rt = ray.energy(xt, nullptr);
            if (Rt < R) {
                accepted = true;
                break;
            }
        }
        out.iterations = it + 1;
        if (!accepted) {
            out.converged = true;  // no descent direction left at working precision
            break;
        }
        double rel = (R - Rt) / R;
        x = xt;
        R = ray.energy(x, &g);
        out.history.push_back(R);
        if (rel < opts.tol) {
            out.converged = true;
            break;
        }
    }
    out.quotient = R;
    out.u = ray.field(x);
    for (std::size_t i = 0; i < out.u.v.size(); ++i)
        if (!st.grid()->inside[i]) out.u.v[i] = 0.0;
    return out;
}

double chi(double s) {
    if (s <= 0.5) return 1.0;
    if (s >= 1.0) return 0.0;
    double A = std::exp(-1.0 / (1.0 - s)), B = std::exp(-1.0 / (s - 0.5));
    return A / (A + B);
}

double chi_prime(double s) {
    if (s <= 0.5 || s >= 1.0) return 0.0;
    double A = std::exp(-1.0 / (1.0 - s)), B = std::exp(-1.0 / (s - 0.5));
    double dA = -A / ((1.0 - s) * (1.0 - s)), dB = B / ((s - 0.5) * (s - 0.5));
    return (dA * B - A * dB) / ((A + B) * (A + B));
}

boost::math::quadrature::exp_sinh<double>& integrator() {
    static boost::math::quadrature::exp_sinh<double> q;
    return q;
}

const double kSnap = 1e-9;

double cell_profile_integral(const Profile& prof, double a, const Vec& p, double h) {
    const int n = static_cast<int>(p.size());
    double w[3], wmax = 0.0;
    for (int j = 0; j < n; ++j) {
        w[j] = std::abs(p[j]) * h;
        wmax = std::max(wmax, w[j]);
    }
    double factor = 1.0;
    int kept[3], m = 0;
    for (int j = 0; j < n; ++j) {
        if (w[j] >= 0.02 * wmax && w[j] > 0) {
            kept[m++] = j;
            factor *= h / w[j];
        } else {
            factor *= h;
        }
    }
    if (m == 0) return a > 0 ? factor * prof.value(a) : 0.0;
    double sum = 0.0;
    for (int mask = 0; mask < (1 << m); ++mask) {
        double r = a, sign = 1.0;
        for (int t = 0; t < m; ++t) {
            double s = (mask >> t) & 1 ? 1.0 : -1.0;
            r += s * w[kept[t]] / 2.0;
            sign *= s;
        }
        // G_k(r) ~ r^{2ε} puts O(1) mass at tiny r, so a rounding residue on a boundary-aligned face must not count
        if (std::abs(r) <= kSnap * h) r = 0.0;
        sum += sign * prof.antiderivative(m, r);
    }
    return factor * sum;
}

double psi_energy(double L, double eps, double theta) {
    double c = 0.5 + eps - theta / L;
    return std::pow(L, 2.0 * theta) * c * c;
}

double psi_Q(double L, double eps, double theta) {
    double c = 0.5 + eps - theta / L;
    return std::pow(L, 2.0 * theta) * (c * c - 0.25);
}

}  // namespace

double weight_X(double t) {
    if (!(t > 0.0 && t < 1.0)) {
        std::ostringstream os;
        os << "X(t) needs 0 < t < 1, got " << t;
        throw Error(ErrorKind::DomainError, os.str());
    }
    return -1.0 / std::log(t);
}

double hardy_mass(const ScalarField& u, const ScalarField& d) {
    require_same_grid(u, d);
    const GridDomain& g = *d.grid;
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g.inside[i] && d[i] >= 0.5 * g.h) s += u[i] * u[i] / (d[i] * d[i]);
    return s * g.cell_volume();
}

double hardy_quotient(const EnergyStencil& stencil, const ScalarField& u, const ScalarField& d,
                      const NormEngine& engine) {
    double m = hardy_mass(u, d);
    if (!(m > 0)) throw Error(ErrorKind::ZeroDenominator, "hardy mass vanishes");
    return stencil.energy(u, engine) / m;
}

double hardy_quotient(const ScalarField& u, const ScalarField& d, const NormEngine& engine) {
    EnergyStencil st(u.grid);
    return hardy_quotient(st, u, d, engine);
}

HardyEstimate hardy_estimate(const ScalarField& d, const NormEngine& engine, const DescentOptions& opts) {
    require_distance(d);
    EnergyStencil st(d.grid);
    const GridDomain& g = *d.grid;
    const auto& cells = st.cells();
    Eigen::VectorXd w(static_cast<long>(cells.size())), x(static_cast<long>(cells.size()));
    for (std::size_t c = 0; c < cells.size(); ++c) {
        double dc = d[cells[c]];
        w[static_cast<long>(c)] = dc >= 0.5 * g.h ? g.cell_volume() / (dc * dc) : 0.0;
        x[static_cast<long>(c)] = std::sqrt(std::max(dc, 0.0));
    }
    return descend(st, engine, w, x, opts);
}

HardyEstimate lambda1_estimate(const GridPtr& grid, const NormEngine& engine, const DescentOptions& opts) {
    if (!grid || grid->inside_count == 0) throw Error(ErrorKind::EmptyDomain, "no inside cells");
    EnergyStencil st(grid);
    const long m = static_cast<long>(st.cells().size());
    Eigen::VectorXd w = Eigen::VectorXd::Constant(m, grid->cell_volume());
    Eigen::VectorXd x = Eigen::VectorXd::Ones(m);
    return descend(st, engine, w, x, opts);
}

std::vector<ScalarField> random_sine_suite(const ScalarField& d, int count, std::uint64_t seed) {
    require_distance(d);
    const GridDomain& g = *d.grid;
    Vec lo, hi;
    g.geometry->extent(lo, hi);
    bool box = std::holds_alternative<BoxSpec>(g.geometry->spec().shape);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> modes(1, 4);
    std::normal_distribution<double> coef(0.0, 1.0);
    std::vector<ScalarField> out;
    for (int t = 0; t < count; ++t) {
        int K = modes(rng);
        std::vector<std::pair<std::vector<int>, double>> terms;
        for (int a = 0; a < K; ++a) {
            std::vector<int> m(g.n);
            for (int k = 0; k < g.n; ++k) m[k] = modes(rng);
            terms.push_back({m, coef(rng)});
        }
        ScalarField u(d.grid, 0.0);
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (!g.inside[i]) continue;
            Vec x = g.center(i);
            double s = 0.0;
            for (const auto& [m, c] : terms) {
                double p = c;
                for (int k = 0; k < g.n; ++k) p *= std::sin(m[k] * M_PI * (x[k] - lo[k]) / (hi[k] - lo[k]));
                s += p;
            }
            u[i] = box ? s : s * d[i];
        }
        out.push_back(std::move(u));
    }
    return out;
}

double deficit_logremainder(const ScalarField& u, const ScalarField& d, const NormEngine& engine, double D) {
    require_same_grid(u, d);
    const GridDomain& g = *d.grid;
    EnergyStencil st(u.grid);
    double e = st.energy(u, engine);
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!g.inside[i] || d[i] < 0.5 * g.h) continue;
        double X = weight_X(d[i] / D);
        s += u[i] * u[i] / (d[i] * d[i]) * (1.0 + X * X);
    }
    return e - 0.25 * s * g.cell_volume();
}

double deficit_l2(const ScalarField& u, const ScalarField& d, const NormEngine& engine, double r_F) {
    if (!(r_F > 0)) throw Error(ErrorKind::InvalidArgument, "inradius must be positive");
    require_same_grid(u, d);
    const GridDomain& g = *d.grid;
    EnergyStencil st(u.grid);
    double l2 = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g.inside[i]) l2 += u[i] * u[i];
    l2 *= g.cell_volume();
    return st.energy(u, engine) - 0.25 * hardy_mass(u, d) - l2 / (4.0 * r_F * r_F);
}

double log_dominance_gap(const ScalarField& d, double r_F) {
    require_distance(d);
    if (!(r_F > 0)) throw Error(ErrorKind::InvalidArgument, "inradius must be positive");
    const GridDomain& g = *d.grid;
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!g.inside[i] || !(d[i] > 0)) continue;
        worst = std::max(worst, -d[i] * std::log(d[i] / (M_E * r_F)) - r_F);
    }
    return worst;
}

ScalarField cutoff_field(const GridPtr& grid, const NormEngine& engine, const Cutoff& cutoff) {
    ScalarField phi(grid, 1.0);
    if (cutoff.kind == Cutoff::Global) return phi;
    if (!(cutoff.delta > 0)) throw Error(ErrorKind::InvalidArgument, "cutoff radius must be positive");
    for (std::size_t i = 0; i < grid->size(); ++i) phi[i] = chi(engine.polar(grid->center(i) - cutoff.x0) / cutoff.delta);
    return phi;
}

VectorField cutoff_gradient(const GridPtr& grid, const NormEngine& engine, const Cutoff& cutoff) {
    VectorField out(grid);
    if (cutoff.kind == Cutoff::Global) return out;
    if (!(cutoff.delta > 0)) throw Error(ErrorKind::InvalidArgument, "cutoff radius must be positive");
    for (std::size_t i = 0; i < grid->size(); ++i) {
        Vec z = grid->center(i) - cutoff.x0;
        double s = engine.polar(z) / cutoff.delta;
        double cp = chi_prime(s);
        if (cp == 0.0) continue;
        out.set(i, engine.polar_grad(z) * (cp / cutoff.delta));
    }
    return out;
}

ScalarField build_Ueps(const ScalarField& d, double epsilon, double theta, const ScalarField& phi, double D) {
    require_same_grid(d, phi);
    if (!(epsilon > 0)) throw Error(ErrorKind::InvalidArgument, "epsilon must be positive");
    const GridDomain& g = *d.grid;
    ScalarField U(d.grid, 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!g.inside[i] || !(d[i] > 0)) continue;
        double L = log_ratio(d[i], D);
        if (!(L > 0)) throw Error(ErrorKind::DomainError, "D must exceed the distance everywhere");
        U[i] = phi[i] * std::pow(d[i], 0.5 + epsilon) * std::pow(L, theta);
    }
    return U;
}

ProfileLayer build_profile_layer(const ScalarField& d, const NormEngine& engine, double depth) {
    require_distance(d);
    const GridDomain& g = *d.grid;
    if (g.samples.empty()) throw Error(ErrorKind::EmptyDomain, "grid has no boundary samples");
    BoundaryTree tree(g.samples, engine);
    ProfileLayer layer;
    layer.depth = depth;
    layer.in_layer.assign(g.size(), 0);
    std::vector<std::uint8_t> near(g.size(), 0);
    auto linearise = [&](std::size_t i) {
        Vec x = g.center(i);
        auto [dist, arg] = tree.nearest(x);
        const BoundarySample& s = g.samples[static_cast<std::size_t>(arg)];
        double Fn = engine.eval(s.normal);
        Vec p = -s.normal / Fn;
        double a = (s.point - x).dot(s.normal) / Fn;
        return LayerCell{i, a, p};
    };
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!g.inside[i] || !(d[i] < depth * g.h)) continue;
        layer.cells.push_back(linearise(i));
        layer.in_layer[i] = 1;
        int c[3];
        g.coords(i, c);
        int lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
        for (int k = 0; k < g.n; ++k) {
            lo[k] = std::max(c[k] - 2, 0) - c[k];
            hi[k] = std::min(c[k] + 2, g.dims[k] - 1) - c[k];
        }
        for (int a = lo[0]; a <= hi[0]; ++a)
            for (int b = lo[1]; b <= hi[1]; ++b)
                for (int e = lo[2]; e <= hi[2]; ++e) {
                    std::size_t j = g.index(c[0] + a, c[1] + b, c[2] + e);
                    if (!g.inside[j]) near[j] = 1;
                }
    }
    for (std::size_t j = 0; j < g.size(); ++j) {
        if (!near[j]) continue;
        LayerCell lc = linearise(j);
        double reach = lc.a;
        for (int k = 0; k < g.n; ++k) reach += std::abs(lc.p[k]) * g.h / 2.0;
        if (reach <= kSnap * g.h) continue;
        layer.cells.push_back(lc);
        layer.in_layer[j] = 1;
    }
    return layer;
}

double Profile::value(double s) const {
    if (!(s > 0)) return 0.0;
    return std::pow(s, 2.0 * epsilon - 1.0) * psi(log_ratio(s, D));
}

double Profile::antiderivative(int k, double r) const {
    if (k < 1) throw Error(ErrorKind::InvalidArgument, "antiderivative order must be positive");
    if (!(r > 0)) return 0.0;
    const double L = log_ratio(r, D);
    // s = r e^{-t}: ∫_0^r (r-s)^{k-1} s^{2ε-1} ψ(log(D/s)) ds
    //   = r^{2ε+k-1} ∫_0^∞ (1-e^{-t})^{k-1} e^{-2εt} ψ(L+t) dt
    auto f = [&](double t) {
        double base = k > 1 ? std::pow(-std::expm1(-t), k - 1) : 1.0;
        return base * std::exp(-2.0 * epsilon * t) * psi(L + t);
    };
    double err = 0.0;
    double I = integrator().integrate(f, 1e-10, &err);
    double fact = 1.0;
    for (int j = 2; j < k; ++j) fact *= j;
    return std::pow(r, 2.0 * epsilon + k - 1) / fact * I;
}

double profile_integral(const ScalarField& d, const ScalarField& phi, const Profile& profile,
                        const ProfileLayer* layer) {
    require_same_grid(d, phi);
    const GridDomain& g = *d.grid;
    const double vol = g.cell_volume();
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!g.inside[i]) continue;
        if (layer ? layer->in_layer[i] != 0 : d[i] < 0.5 * g.h) continue;
        s += phi[i] * phi[i] * profile.value(d[i]) * vol;
    }
    if (layer)
        for (const LayerCell& lc : layer->cells)
            s += phi[lc.cell] * phi[lc.cell] * cell_profile_integral(profile, lc.a, lc.p, g.h);
    if (!std::isfinite(s)) throw Error(ErrorKind::NonFinite, "profile integral is not finite");
    return s;
}

Profile jbeta_profile(double beta, double epsilon, double D) {
    return Profile{epsilon, D, [beta](double L) { return std::pow(L, beta); }};
}

double jbeta(const ScalarField& d, const ScalarField& phi, double beta, double epsilon, double D,
             const ProfileLayer* layer) {
    return profile_integral(d, phi, jbeta_profile(beta, epsilon, D), layer);
}

void require_resolution(const std::vector<double>& epsilons, double h, double r_F) {
    for (double e : epsilons)
        if (!(e > 0) || e < 4.0 * h / r_F) {
            std::ostringstream os;
            os << "epsilon " << e << " is below 4h/r_F = " << 4.0 * h / r_F;
            throw Error(ErrorKind::ResolutionGuard, os.str());
        }
}

std::vector<ScalingFit> jbeta_scaling_sweep(const ScalarField& d, const ScalarField& phi, double r_F,
                                            const std::vector<double>& betas, const std::vector<double>& epsilons,
                                            const ProfileLayer* layer) {
    require_distance(d);
    require_resolution(epsilons, d.grid->h, r_F);
    const double D = M_E * r_F;
    std::vector<ScalingFit> out;
    for (double beta : betas) {
        ScalingFit fit{beta, {}, 0.0, 0.0};
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (double e : epsilons) {
            double J = jbeta(d, phi, beta, e, D, layer);
            fit.J.push_back(J);
            double x = std::log(e), y = std::log(J);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        double m = static_cast<double>(epsilons.size());
        fit.slope = m > 1 ? (m * sxy - sx * sy) / (m * sxx - sx * sx) : 0.0;
        auto [mn, mx] = std::minmax_element(fit.J.begin(), fit.J.end());
        fit.max_ratio = *mx / *mn;
        out.push_back(std::move(fit));
    }
    return out;
}

std::vector<SweepRow> optimality_sweep(const ScalarField& d, const NormEngine& engine, double r_F, double theta,
                                       const std::vector<double>& epsilons, const OptimalityOptions& opts) {
    require_distance(d);
    if (!(theta > 0.5 && theta < 1.0)) {
        std::ostringstream os;
        os << "theta must lie in (1/2, 1), got " << theta;
        throw Error(ErrorKind::InvalidArgument, os.str());
    }
    require_resolution(epsilons, d.grid->h, r_F);
    const GridDomain& g = *d.grid;
    const double D = M_E * r_F;
    const double vol = g.cell_volume();
    ScalarField phi = cutoff_field(d.grid, engine, opts.cutoff);
    const bool local = opts.cutoff.kind == Cutoff::Local;
    VectorField dphi = cutoff_gradient(d.grid, engine, opts.cutoff);
    VectorField dd = gradient_fd(d);
    ProfileLayer layer;
    if (opts.profile) layer = build_profile_layer(d, engine);
    const ProfileLayer* lp = opts.profile ? &layer : nullptr;
    EnergyStencil st(d.grid);

    std::vector<SweepRow> rows;
    for (double eps : epsilons) {
        SweepRow row;
        row.epsilon = eps;
        row.theta = theta;
        row.D = D;
        for (double beta : {2.0 * theta, 2.0 * theta - 2.0, 2.0 * theta - 1.5})
            row.J_values[beta] = jbeta(d, phi, beta, eps, D, lp);
        if (opts.profile) {
            row.hardy_mass = row.J_values[2.0 * theta];
            row.energy = profile_integral(
                d, phi, Profile{eps, D, [eps, theta](double L) { return psi_energy(L, eps, theta); }}, lp);
            row.Q = profile_integral(d, phi, Profile{eps, D, [eps, theta](double L) { return psi_Q(L, eps, theta); }},
                                     lp);
            if (local) {
                // F(φw'n + w∇φ)² - φ²w'² where the cutoff varies (F(n) = 1).
                double cross = 0.0;
                for (std::size_t i = 0; i < g.size(); ++i) {
                    if (!g.inside[i] || d[i] < 0.5 * g.h) continue;
                    Vec gp = dphi.at(i);
                    if (gp.norm() == 0.0) continue;
                    Vec gd = dd.at(i);
                    double Fd = engine.eval(gd);
                    Vec n = Fd > 0 ? Vec(gd / Fd) : Vec(Vec::Zero(g.n));
                    double L = log_ratio(d[i], D);
                    double w = std::pow(d[i], 0.5 + eps) * std::pow(L, theta);
                    double wp = std::pow(d[i], eps - 0.5) * std::pow(L, theta) * (0.5 + eps - theta / L);
                    double F = engine.eval(phi[i] * wp * n + w * gp);
                    cross += (F * F - phi[i] * phi[i] * wp * wp) * vol;
                }
                row.energy += cross;
                row.Q += cross;
            }
        } else {
            ScalarField U = build_Ueps(d, eps, theta, phi, D);
            row.energy = st.energy(U, engine);
            row.hardy_mass = hardy_mass(U, d);
            row.Q = row.energy - 0.25 * row.hardy_mass;
        }
        row.quotient_Ueps = row.energy / row.hardy_mass;
        row.A_est = row.energy / row.J_values[2.0 * theta];
        row.ratio_g15 = row.Q / row.J_values[2.0 * theta - 1.5];
        row.ratio_g2 = row.Q / row.J_values[2.0 * theta - 2.0];
        for (double v : {row.energy, row.hardy_mass, row.Q, row.A_est, row.ratio_g15, row.ratio_g2})
            if (!std::isfinite(v)) {
                std::ostringstream os;
                os << "non-finite optimality row at epsilon " << eps;
                throw Error(ErrorKind::NonFinite, os.str());
            }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace finhardy
