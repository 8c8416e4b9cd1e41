#include "finhardy/norm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "finhardy/error.hpp"

namespace finhardy {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr int kSampleCount = 4096;

double pnorm_value(const Vec& x, double p) {
    double m = x.cwiseAbs().maxCoeff();
    if (m == 0.0) return 0.0;
    double s = 0.0;
    for (int i = 0; i < x.size(); ++i) s += std::pow(std::abs(x[i]) / m, p);
    return m * std::pow(s, 1.0 / p);
}

Vec pnorm_grad(const Vec& x, double p, double f) {
    Vec g(x.size());
    for (int i = 0; i < x.size(); ++i) {
        double a = std::abs(x[i]) / f;
        g[i] = (x[i] < 0 ? -1.0 : (x[i] > 0 ? 1.0 : 0.0)) * std::pow(a, p - 1.0);
    }
    return g;
}

Vec spherical(double theta, double phi) {
    Vec v(3);
    v << std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta);
    return v;
}

}  // namespace

Vec make_vec(std::initializer_list<double> v) {
    Vec out(static_cast<int>(v.size()));
    int i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

int descriptor_dim(const NormDescriptor& d) {
    return std::visit(overloaded{[](const Euclidean& e) { return e.dim; },
                                 [](const DiagQuadratic& q) { return static_cast<int>(q.weights.size()); },
                                 [](const Quadratic& q) { return static_cast<int>(q.A.rows()); },
                                 [](const PNorm& p) { return p.dim; }},
                      d);
}

void validate_descriptor(const NormDescriptor& d) {
    int n = descriptor_dim(d);
    if (n < 1 || n > 3) throw Error(ErrorKind::InvalidArgument, "norm dimension must be 1, 2 or 3");
    std::visit(overloaded{[](const Euclidean&) {},
                          [](const DiagQuadratic& q) {
                              for (double w : q.weights)
                                  if (!(w > 0.0) || !std::isfinite(w))
                                      throw Error(ErrorKind::InvalidArgument, "diag weights must be positive");
                          },
                          [](const Quadratic& q) {
                              if (q.A.rows() != q.A.cols())
                                  throw Error(ErrorKind::InvalidArgument, "quadratic matrix must be square");
                              if ((q.A - q.A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + q.A.cwiseAbs().maxCoeff()))
                                  throw Error(ErrorKind::InvalidArgument, "quadratic matrix must be symmetric");
                              Eigen::SelfAdjointEigenSolver<Mat> es(q.A);
                              if (!(es.eigenvalues().minCoeff() > 0.0))
                                  throw Error(ErrorKind::InvalidArgument, "quadratic matrix must be positive definite");
                          },
                          [](const PNorm& p) {
                              if (!(p.p > 1.0) || !std::isfinite(p.p))
                                  throw Error(ErrorKind::InvalidArgument, "p must lie in (1, inf)");
                          }},
               d);
}

std::string describe(const NormDescriptor& d) {
    std::ostringstream os;
    std::visit(overloaded{[&](const Euclidean& e) { os << "euclidean(n=" << e.dim << ")"; },
                          [&](const DiagQuadratic& q) {
                              os << "diag(";
                              for (size_t i = 0; i < q.weights.size(); ++i) os << (i ? "," : "") << q.weights[i];
                              os << ")";
                          },
                          [&](const Quadratic& q) {
                              os << "quadratic(";
                              for (int i = 0; i < q.A.rows(); ++i)
                                  for (int j = 0; j < q.A.cols(); ++j) os << ((i || j) ? "," : "") << q.A(i, j);
                              os << ")";
                          },
                          [&](const PNorm& p) { os << "pnorm(p=" << p.p << ",n=" << p.dim << ")"; }},
               d);
    return os.str();
}

std::vector<Vec> sphere_directions(int dim, int count) {
    std::vector<Vec> dirs;
    if (dim == 1) {
        dirs.push_back(make_vec({1.0}));
        dirs.push_back(make_vec({-1.0}));
        return dirs;
    }
    dirs.reserve(count);
    if (dim == 2) {
        for (int i = 0; i < count; ++i) {
            double t = 2.0 * std::numbers::pi * i / count;
            dirs.push_back(make_vec({std::cos(t), std::sin(t)}));
        }
        return dirs;
    }
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
        double z = 1.0 - 2.0 * (i + 0.5) / count;
        double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
        double t = golden * i;
        dirs.push_back(make_vec({rad * std::cos(t), rad * std::sin(t), z}));
    }
    return dirs;
}

NormEngine::NormEngine(NormDescriptor descriptor, PolarMode mode) : desc_(std::move(descriptor)), mode_(mode) {
    validate_descriptor(desc_);
    dim_ = descriptor_dim(desc_);
    if (auto* q = std::get_if<Quadratic>(&desc_)) {
        Mat sym = 0.5 * (q->A + q->A.transpose());
        q->A = sym;
        inv_ = sym.inverse();
        inv_ = 0.5 * (inv_ + inv_.transpose());
    }
    if (auto* p = std::get_if<PNorm>(&desc_)) q_ = p->p / (p->p - 1.0);
    for (int k = 0; k < dim_; ++k) {
        Vec e = Vec::Zero(dim_);
        e[k] = 1.0;
        axis_[k] = eval(e);
    }
    directions_ = sphere_directions(dim_, kSampleCount);
    compute_growth();
}

double NormEngine::eval(const Vec& xi) const {
    return std::visit(overloaded{[&](const Euclidean&) { return xi.norm(); },
                                 [&](const DiagQuadratic& q) {
                                     double s = 0.0;
                                     for (int i = 0; i < dim_; ++i) s += q.weights[i] * xi[i] * xi[i];
                                     return std::sqrt(s);
                                 },
                                 [&](const Quadratic& q) { return std::sqrt(std::max(0.0, xi.dot(q.A * xi))); },
                                 [&](const PNorm& p) { return pnorm_value(xi, p.p); }},
                      desc_);
}

Vec NormEngine::grad(const Vec& xi) const {
    double f = eval(xi);
    if (!(f > 0.0)) throw Error(ErrorKind::ZeroInput, "gradient of F is undefined at the origin");
    return std::visit(overloaded{[&](const Euclidean&) -> Vec { return xi / f; },
                                 [&](const DiagQuadratic& q) -> Vec {
                                     Vec g(dim_);
                                     for (int i = 0; i < dim_; ++i) g[i] = q.weights[i] * xi[i] / f;
                                     return g;
                                 },
                                 [&](const Quadratic& q) -> Vec { return q.A * xi / f; },
                                 [&](const PNorm& p) -> Vec { return pnorm_grad(xi, p.p, f); }},
                      desc_);
}

Mat NormEngine::hess(const Vec& xi) const {
    double f = eval(xi);
    if (!(f > 0.0)) throw Error(ErrorKind::ZeroInput, "Hessian of F is undefined at the origin");
    return std::visit(
        overloaded{[&](const Euclidean&) -> Mat {
                       Vec g = xi / f;
                       return (Mat::Identity(dim_, dim_) - g * g.transpose()) / f;
                   },
                   [&](const DiagQuadratic& q) -> Mat {
                       Mat A = Mat::Zero(dim_, dim_);
                       for (int i = 0; i < dim_; ++i) A(i, i) = q.weights[i];
                       Vec g = A * xi / f;
                       return (A - g * g.transpose()) / f;
                   },
                   [&](const Quadratic& q) -> Mat {
                       Vec g = q.A * xi / f;
                       return (q.A - g * g.transpose()) / f;
                   },
                   [&](const PNorm& p) -> Mat {
                       // Entries |xi_i|^{p-2} blow up on the axes when p < 2; clamp away from them.
                       double floor = 1e-12 * xi.norm();
                       Vec y = xi;
                       for (int i = 0; i < dim_; ++i)
                           if (std::abs(y[i]) < floor) y[i] = (y[i] < 0 ? -floor : floor);
                       double fy = eval(y);
                       Vec g = pnorm_grad(y, p.p, fy);
                       Mat H = -g * g.transpose();
                       for (int i = 0; i < dim_; ++i) H(i, i) += std::pow(std::abs(y[i]) / fy, p.p - 2.0);
                       return (p.p - 1.0) / fy * H;
                   }},
        desc_);
}

double NormEngine::sq_and_grad(const Vec& xi, Vec& g2) const {
    return std::visit(overloaded{[&](const Euclidean&) {
                                     g2 = 2.0 * xi;
                                     return xi.squaredNorm();
                                 },
                                 [&](const DiagQuadratic& q) {
                                     g2.resize(dim_);
                                     double s = 0.0;
                                     for (int i = 0; i < dim_; ++i) {
                                         g2[i] = 2.0 * q.weights[i] * xi[i];
                                         s += q.weights[i] * xi[i] * xi[i];
                                     }
                                     return s;
                                 },
                                 [&](const Quadratic& q) {
                                     g2 = 2.0 * (q.A * xi);
                                     return xi.dot(q.A * xi);
                                 },
                                 [&](const PNorm& p) {
                                     double f = pnorm_value(xi, p.p);
                                     if (f == 0.0) {
                                         g2 = Vec::Zero(dim_);
                                         return 0.0;
                                     }
                                     g2 = 2.0 * f * pnorm_grad(xi, p.p, f);
                                     return f * f;
                                 }},
                      desc_);
}

double NormEngine::polar_closed(const Vec& x) const {
    return std::visit(overloaded{[&](const Euclidean&) { return x.norm(); },
                                 [&](const DiagQuadratic& q) {
                                     double s = 0.0;
                                     for (int i = 0; i < dim_; ++i) s += x[i] * x[i] / q.weights[i];
                                     return std::sqrt(s);
                                 },
                                 [&](const Quadratic&) { return std::sqrt(std::max(0.0, x.dot(inv_ * x))); },
                                 [&](const PNorm&) { return pnorm_value(x, q_); }},
                      desc_);
}

Vec NormEngine::polar_grad_closed(const Vec& x) const {
    double f = polar_closed(x);
    return std::visit(overloaded{[&](const Euclidean&) -> Vec { return x / f; },
                                 [&](const DiagQuadratic& q) -> Vec {
                                     Vec g(dim_);
                                     for (int i = 0; i < dim_; ++i) g[i] = x[i] / q.weights[i] / f;
                                     return g;
                                 },
                                 [&](const Quadratic&) -> Vec { return inv_ * x / f; },
                                 [&](const PNorm&) -> Vec { return pnorm_grad(x, q_, f); }},
                      desc_);
}

// F°(x)^2/2 = sup_xi (xi.x - F(xi)^2/2): seed from the best sampled direction, then damped Newton.
double NormEngine::polar_numeric(const Vec& x) const {
    double xn = x.norm();
    if (xn == 0.0) return 0.0;
    if (dim_ == 1) return std::abs(x[0]) / axis_[0];
    double best = -1.0;
    const Vec* bd = nullptr;
    for (const Vec& d : directions_) {
        double v = d.dot(x) / eval(d);
        if (v > best) {
            best = v;
            bd = &d;
        }
    }
    Vec xi = *bd * (bd->dot(x) / std::pow(eval(*bd), 2));
    auto objective = [&](const Vec& z) {
        double f = eval(z);
        return z.dot(x) - 0.5 * f * f;
    };
    double obj = objective(xi);
    // Exact ascent along one coordinate: the derivative x_i - d_i(F^2)/2 is decreasing.
    auto coordinate_ascent = [&](int i) {
        Vec g2;
        auto slope = [&](double t) {
            Vec z = xi;
            z[i] += t;
            sq_and_grad(z, g2);
            return x[i] - 0.5 * g2[i];
        };
        double s0 = slope(0.0);
        if (s0 == 0.0) return;
        double dir = s0 > 0 ? 1.0 : -1.0;
        double lo = 0.0, hi = dir * 1e-3 * xi.norm();
        while (slope(hi) * dir > 0) {
            lo = hi;
            hi *= 2.0;
        }
        for (int it = 0; it < 200; ++it) {
            double m = 0.5 * (lo + hi);
            if (m == lo || m == hi) break;
            if (slope(m) * dir > 0)
                lo = m;
            else
                hi = m;
        }
        xi[i] += 0.5 * (lo + hi);
    };
    // Newton oscillates across an axis where F^2 is only C^{1,alpha} (p < 2); such coordinates are
    // taken out of the Newton system and solved by exact 1D ascent instead.
    bool frozen[3] = {false, false, false};
    bool flipped[3] = {false, false, false};
    for (int it = 0; it < 200; ++it) {
        for (int i = 0; i < dim_; ++i)
            if (frozen[i]) coordinate_ascent(i);
        double obj = objective(xi);
        double f = eval(xi);
        Vec g = grad(xi);
        Vec r = x - f * g;
        if (r.norm() <= 1e-15 * xn) break;
        Mat M = f * hess(xi) + g * g.transpose();
        for (int i = 0; i < dim_; ++i)
            if (frozen[i]) {
                M.row(i).setZero();
                M.col(i).setZero();
                M(i, i) = 1.0;
                r[i] = 0.0;
            }
        Vec step = M.ldlt().solve(r);
        if (!step.allFinite()) step = r;
        double t = 1.0;
        bool moved = false;
        for (int bt = 0; bt < 40; ++bt) {
            Vec cand = xi + t * step;
            if (objective(cand) >= obj) {
                for (int i = 0; i < dim_; ++i) {
                    bool flip = cand[i] * xi[i] < 0.0;
                    if (flip && flipped[i]) frozen[i] = true;
                    flipped[i] = flip;
                }
                moved = (cand - xi).norm() > 0.0;
                xi = cand;
                break;
            }
            t *= 0.5;
        }
        if (!moved) break;
    }
    return std::max(best, xi.dot(x) / eval(xi));
}

double NormEngine::polar(const Vec& x) const {
    return mode_ == PolarMode::ClosedForm ? polar_closed(x) : polar_numeric(x);
}

Vec NormEngine::polar_grad(const Vec& x) const {
    double xn = x.norm();
    if (!(xn > 0.0)) throw Error(ErrorKind::ZeroInput, "gradient of the polar norm is undefined at the origin");
    if (mode_ == PolarMode::ClosedForm) return polar_grad_closed(x);
    double step = 1e-5 * xn;
    Vec g(dim_);
    for (int i = 0; i < dim_; ++i) {
        Vec a = x, b = x;
        a[i] += step;
        b[i] -= step;
        g[i] = (polar_numeric(a) - polar_numeric(b)) / (2.0 * step);
    }
    return g;
}

void NormEngine::compute_growth() {
    if (dim_ == 1) {
        alpha1_ = alpha2_ = axis_[0];
        return;
    }
    // Dense sampling, then a shrinking pattern search in angular coordinates.
    auto refine = [&](const Vec& start, double sign) {
        if (dim_ == 2) {
            double t = std::atan2(start[1], start[0]);
            auto val = [&](double a) { return sign * eval(make_vec({std::cos(a), std::sin(a)})); };
            double step = 2.0 * std::numbers::pi / kSampleCount;
            double cur = val(t);
            while (step > 1e-13) {
                double up = val(t + step), dn = val(t - step);
                if (up < cur && up <= dn) {
                    t += step;
                    cur = up;
                } else if (dn < cur) {
                    t -= step;
                    cur = dn;
                } else {
                    step *= 0.5;
                }
            }
            return sign * cur;
        }
        double th = std::acos(std::clamp(start[2], -1.0, 1.0));
        double ph = std::atan2(start[1], start[0]);
        auto val = [&](double a, double b) { return sign * eval(spherical(a, b)); };
        double step = 0.1;
        double cur = val(th, ph);
        while (step > 1e-13) {
            bool moved = false;
            const double cand[4][2] = {{step, 0}, {-step, 0}, {0, step}, {0, -step}};
            for (auto& c : cand) {
                double v = val(th + c[0], ph + c[1]);
                if (v < cur) {
                    cur = v;
                    th += c[0];
                    ph += c[1];
                    moved = true;
                    break;
                }
            }
            if (!moved) step *= 0.5;
        }
        return sign * cur;
    };
    size_t imin = 0, imax = 0;
    double vmin = 1e300, vmax = -1.0;
    for (size_t i = 0; i < directions_.size(); ++i) {
        double v = eval(directions_[i]);
        if (v < vmin) {
            vmin = v;
            imin = i;
        }
        if (v > vmax) {
            vmax = v;
            imax = i;
        }
    }
    alpha1_ = std::min(vmin, refine(directions_[imin], 1.0));
    alpha2_ = std::max(vmax, refine(directions_[imax], -1.0));
}

double eval_norm(const NormEngine& e, const Vec& xi) { return e.eval(xi); }
Vec grad_norm(const NormEngine& e, const Vec& xi) { return e.grad(xi); }
Mat hess_norm(const NormEngine& e, const Vec& xi) { return e.hess(xi); }
double polar_eval(const NormEngine& e, const Vec& x) { return e.polar(x); }
Vec polar_grad(const NormEngine& e, const Vec& x) { return e.polar_grad(x); }
std::pair<double, double> growth_bounds(const NormEngine& e) { return {e.alpha1(), e.alpha2()}; }

}  // namespace finhardy
