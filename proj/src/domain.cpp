#include "finhardy/domain.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
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

// Orthonormal basis of the hyperplane orthogonal to unit vector nu.
std::vector<Vec> tangent_basis(const Vec& nu) {
    int n = static_cast<int>(nu.size());
    std::vector<Vec> basis;
    if (n == 1) return basis;
    if (n == 2) {
        basis.push_back(make_vec({-nu[1], nu[0]}));
        return basis;
    }
    int k = 0;
    for (int i = 1; i < 3; ++i)
        if (std::abs(nu[i]) < std::abs(nu[k])) k = i;
    Vec e = Vec::Zero(3);
    e[k] = 1.0;
    Vec t1 = (e - e.dot(nu) * nu).normalized();
    Eigen::Vector3d t2 = Eigen::Vector3d(nu).cross(Eigen::Vector3d(t1)).normalized();
    basis.push_back(t1);
    basis.push_back(t2);
    return basis;
}

bool in_box(const Vec& p, const Vec& lo, const Vec& hi) {
    for (int i = 0; i < p.size(); ++i)
        if (p[i] < lo[i] || p[i] > hi[i]) return false;
    return true;
}

// Points on the hyperplane {x.nu = c} covering the box [lo,hi], spacing at most `spacing`.
template <class F>
void sample_plane(const Vec& nu, double c, const Vec& lo, const Vec& hi, double spacing, F&& emit) {
    int n = static_cast<int>(nu.size());
    Vec base = c * nu;
    if (n == 1) {
        emit(base, 1.0);
        return;
    }
    Vec mid = 0.5 * (lo + hi);
    double rad = 0.5 * (hi - lo).norm();
    auto basis = tangent_basis(nu);
    Vec foot = base + (mid - base) - (mid - base).dot(nu) * nu;
    int m = static_cast<int>(std::ceil(2.0 * rad / spacing));
    double step = 2.0 * rad / m;
    if (n == 2) {
        for (int i = 0; i < m; ++i) {
            Vec p = foot + (-rad + (i + 0.5) * step) * basis[0];
            emit(p, step);
        }
        return;
    }
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            Vec p = foot + (-rad + (i + 0.5) * step) * basis[0] + (-rad + (j + 0.5) * step) * basis[1];
            emit(p, step * step);
        }
}

}  // namespace

int domain_dim(const DomainSpec& spec) {
    return std::visit(overloaded{[](const BoxSpec& b) { return static_cast<int>(b.lo.size()); },
                                 [](const SlabSpec& s) { return static_cast<int>(s.normal.size()); },
                                 [](const WulffBallSpec& w) { return static_cast<int>(w.center.size()); },
                                 [](const TorusSpec&) { return 3; },
                                 [](const PolytopeSpec& p) { return static_cast<int>(p.lo.size()); }},
                      spec.shape);
}

void validate_domain(const DomainSpec& spec) {
    int n = domain_dim(spec);
    if (n < 1 || n > 3) throw Error(ErrorKind::InvalidArgument, "domain dimension must be 1, 2 or 3");
    std::visit(overloaded{[&](const BoxSpec& b) {
                              if (b.hi.size() != n) throw Error(ErrorKind::InvalidArgument, "box corners differ in dimension");
                              for (int i = 0; i < n; ++i)
                                  if (!(b.hi[i] > b.lo[i])) throw Error(ErrorKind::InvalidArgument, "box must be nonempty");
                          },
                          [&](const SlabSpec& s) {
                              if (!(s.normal.norm() > 0)) throw Error(ErrorKind::InvalidArgument, "slab normal must be nonzero");
                              if (!(s.width > 0)) throw Error(ErrorKind::InvalidArgument, "slab width must be positive");
                              if (!(s.window > 0)) throw Error(ErrorKind::InvalidArgument, "slab window must be positive");
                          },
                          [&](const WulffBallSpec& w) {
                              if (!(w.radius > 0)) throw Error(ErrorKind::InvalidArgument, "Wulff radius must be positive");
                              validate_descriptor(w.shape);
                              if (descriptor_dim(w.shape) != n)
                                  throw Error(ErrorKind::InvalidArgument, "Wulff shape norm dimension mismatch");
                          },
                          [&](const TorusSpec& t) {
                              if (!(t.r > 0) || !(t.R > t.r) || !(t.a > 0))
                                  throw Error(ErrorKind::InvalidArgument, "torus requires R > r > 0 and a > 0");
                          },
                          [&](const PolytopeSpec& p) {
                              if (p.faces.empty()) throw Error(ErrorKind::InvalidArgument, "polytope needs faces");
                              for (auto& f : p.faces)
                                  if (f.a.size() != n || !(f.a.norm() > 0))
                                      throw Error(ErrorKind::InvalidArgument, "polytope face normal invalid");
                              if (p.hi.size() != n) throw Error(ErrorKind::InvalidArgument, "polytope box mismatch");
                          }},
               spec.shape);
    if (spec.bbox_lo || spec.bbox_hi) {
        if (!spec.bbox_lo || !spec.bbox_hi || spec.bbox_lo->size() != n || spec.bbox_hi->size() != n)
            throw Error(ErrorKind::InvalidArgument, "grid window needs both corners of the domain dimension");
        for (int i = 0; i < n; ++i)
            if (!((*spec.bbox_hi)[i] > (*spec.bbox_lo)[i]))
                throw Error(ErrorKind::InvalidArgument, "grid window must be nonempty");
    }
}

Geometry::Geometry(const DomainSpec& spec) : spec_(spec) {
    validate_domain(spec_);
    dim_ = domain_dim(spec_);
    if (auto* s = std::get_if<SlabSpec>(&spec_.shape)) s->normal.normalize();
    if (auto* p = std::get_if<PolytopeSpec>(&spec_.shape))
        for (auto& f : p->faces) {
            double l = f.a.norm();
            f.a /= l;
            f.b /= l;
        }
    if (auto* w = std::get_if<WulffBallSpec>(&spec_.shape)) shape_ = std::make_shared<NormEngine>(w->shape);
}

bool Geometry::contains(const Vec& x) const {
    return std::visit(overloaded{[&](const BoxSpec& b) {
                                     for (int i = 0; i < dim_; ++i)
                                         if (!(x[i] > b.lo[i] && x[i] < b.hi[i])) return false;
                                     return true;
                                 },
                                 [&](const SlabSpec& s) {
                                     double t = x.dot(s.normal);
                                     return t > 0.0 && t < s.width;
                                 },
                                 [&](const WulffBallSpec& w) { return shape_->polar(x - w.center) < w.radius; },
                                 [&](const TorusSpec& t) {
                                     double rho = std::hypot(x[0], x[1]);
                                     double q = (t.R - rho) * (t.R - rho) + x[2] * x[2] / (t.a * t.a);
                                     return q < t.r * t.r;
                                 },
                                 [&](const PolytopeSpec& p) {
                                     for (auto& f : p.faces)
                                         if (!(f.a.dot(x) < f.b)) return false;
                                     return true;
                                 }},
                      spec_.shape);
}

void Geometry::extent(Vec& lo, Vec& hi) const {
    std::visit(overloaded{[&](const BoxSpec& b) {
                              lo = b.lo;
                              hi = b.hi;
                          },
                          [&](const SlabSpec& s) {
                              Vec c = 0.5 * s.width * s.normal;
                              lo = c.array() - s.window;
                              hi = c.array() + s.window;
                          },
                          [&](const WulffBallSpec& w) {
                              lo.resize(dim_);
                              hi.resize(dim_);
                              for (int k = 0; k < dim_; ++k) {
                                  double e = w.radius * shape_->axis_value(k);
                                  lo[k] = w.center[k] - e;
                                  hi[k] = w.center[k] + e;
                              }
                          },
                          [&](const TorusSpec& t) {
                              lo = make_vec({-(t.R + t.r), -(t.R + t.r), -t.a * t.r});
                              hi = -lo;
                          },
                          [&](const PolytopeSpec& p) {
                              lo = p.lo;
                              hi = p.hi;
                          }},
               spec_.shape);
}

double Geometry::feature_size() const {
    return std::visit(overloaded{[&](const BoxSpec& b) { return (b.hi - b.lo).minCoeff(); },
                                 [&](const SlabSpec& s) { return s.width; },
                                 [&](const WulffBallSpec& w) {
                                     double m = shape_->axis_value(0);
                                     for (int k = 1; k < dim_; ++k) m = std::min(m, shape_->axis_value(k));
                                     return w.radius * m;
                                 },
                                 [&](const TorusSpec& t) { return 2.0 * t.r * std::min(1.0, t.a); },
                                 [&](const PolytopeSpec& p) { return (p.hi - p.lo).minCoeff(); }},
                      spec_.shape);
}

std::vector<BoundarySample> Geometry::samples(double spacing, const Vec& keep_lo, const Vec& keep_hi) const {
    std::vector<BoundarySample> out;
    auto push = [&](const Vec& p, const Vec& nrm, double w) {
        if (in_box(p, keep_lo, keep_hi)) out.push_back({p, nrm, w});
    };
    std::visit(
        overloaded{
            [&](const BoxSpec& b) {
                for (int k = 0; k < dim_; ++k)
                    for (int side = 0; side < 2; ++side) {
                        Vec nrm = Vec::Zero(dim_);
                        nrm[k] = side ? 1.0 : -1.0;
                        double plane = side ? b.hi[k] : b.lo[k];
                        int o1 = (k + 1) % dim_, o2 = (k + 2) % dim_;
                        int m1 = dim_ > 1 ? static_cast<int>(std::ceil((b.hi[o1] - b.lo[o1]) / spacing)) : 1;
                        int m2 = dim_ > 2 ? static_cast<int>(std::ceil((b.hi[o2] - b.lo[o2]) / spacing)) : 1;
                        double s1 = dim_ > 1 ? (b.hi[o1] - b.lo[o1]) / m1 : 1.0;
                        double s2 = dim_ > 2 ? (b.hi[o2] - b.lo[o2]) / m2 : 1.0;
                        for (int i = 0; i < m1; ++i)
                            for (int j = 0; j < m2; ++j) {
                                Vec p(dim_);
                                p[k] = plane;
                                if (dim_ > 1) p[o1] = b.lo[o1] + (i + 0.5) * s1;
                                if (dim_ > 2) p[o2] = b.lo[o2] + (j + 0.5) * s2;
                                push(p, nrm, s1 * s2);
                            }
                    }
            },
            [&](const SlabSpec& s) {
                sample_plane(s.normal, 0.0, keep_lo, keep_hi, spacing,
                             [&](const Vec& p, double w) { push(p, -s.normal, w); });
                sample_plane(s.normal, s.width, keep_lo, keep_hi, spacing,
                             [&](const Vec& p, double w) { push(p, s.normal, w); });
            },
            [&](const WulffBallSpec& w) {
                // Radial map u -> c + R u / F°(u); the count is set by the largest local stretch.
                auto radial = [&](const Vec& u, Vec& x, Vec& nrm, double& stretch) {
                    double fo = shape_->polar(u);
                    double rho = w.radius / fo;
                    x = w.center + rho * u;
                    nrm = shape_->polar_grad(u).normalized();
                    stretch = rho / std::max(1e-12, nrm.dot(u));
                };
                if (dim_ == 1) {
                    push(w.center + make_vec({w.radius * shape_->axis_value(0)}), make_vec({1.0}), 1.0);
                    push(w.center - make_vec({w.radius * shape_->axis_value(0)}), make_vec({-1.0}), 1.0);
                    return;
                }
                double smax = 0.0;
                Vec x, nrm;
                double st;
                for (const Vec& u : sphere_directions(dim_, 4096)) {
                    radial(u, x, nrm, st);
                    smax = std::max(smax, st);
                }
                int count;
                if (dim_ == 2)
                    count = static_cast<int>(std::ceil(2.0 * std::numbers::pi * smax / spacing));
                else
                    count = static_cast<int>(std::ceil(4.0 * std::numbers::pi * smax * smax / (spacing * spacing)));
                double dmeasure = (dim_ == 2 ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi) / count;
                for (const Vec& u : sphere_directions(dim_, count)) {
                    radial(u, x, nrm, st);
                    double rho = (x - w.center).norm();
                    push(x, nrm, dmeasure * (dim_ == 2 ? st : st * rho));
                }
            },
            [&](const TorusSpec& t) {
                int nth = static_cast<int>(std::ceil(2.0 * std::numbers::pi * t.r * std::max(1.0, t.a) / spacing));
                for (int i = 0; i < nth; ++i) {
                    double th = 2.0 * std::numbers::pi * (i + 0.5) / nth;
                    double rho = t.R + t.r * std::cos(th);
                    double z = t.a * t.r * std::sin(th);
                    if (z < keep_lo[2] || z > keep_hi[2]) continue;
                    double ds_th = 2.0 * std::numbers::pi / nth * t.r *
                                   std::sqrt(std::pow(std::sin(th), 2) + t.a * t.a * std::pow(std::cos(th), 2));
                    int nph = static_cast<int>(std::ceil(2.0 * std::numbers::pi * rho / spacing));
                    double ds_ph = 2.0 * std::numbers::pi * rho / nph;
                    for (int j = 0; j < nph; ++j) {
                        double ph = 2.0 * std::numbers::pi * (j + 0.5) / nph;
                        Vec p = make_vec({rho * std::cos(ph), rho * std::sin(ph), z});
                        Vec nrm = make_vec({std::cos(th) * std::cos(ph), std::cos(th) * std::sin(ph),
                                            std::sin(th) / t.a})
                                      .normalized();
                        push(p, nrm, ds_th * ds_ph);
                    }
                }
            },
            [&](const PolytopeSpec& p) {
                for (std::size_t fi = 0; fi < p.faces.size(); ++fi) {
                    const auto& f = p.faces[fi];
                    sample_plane(f.a, f.b, keep_lo, keep_hi, spacing, [&](const Vec& q, double w) {
                        for (std::size_t fj = 0; fj < p.faces.size(); ++fj) {
                            if (fj == fi) continue;
                            double s = p.faces[fj].a.dot(q) - p.faces[fj].b;
                            if (s > 1e-12) return;
                            // A point shared with a lower-index face belongs to that face.
                            if (fj < fi && s > -1e-12) return;
                        }
                        push(q, f.a, w);
                    });
                }
            }},
        spec_.shape);
    return out;
}

long GridDomain::neighbor(std::size_t idx, int axis, int s) const {
    int c[3];
    coords(idx, c);
    int v = c[axis] + s;
    if (v < 0 || v >= dims[axis]) return -1;
    return s > 0 ? static_cast<long>(idx + stride(axis)) : static_cast<long>(idx - stride(axis));
}

Vec GridDomain::center(std::size_t idx) const {
    int c[3];
    coords(idx, c);
    Vec x(n);
    for (int k = 0; k < n; ++k) x[k] = origin[k] + (c[k] + 0.5) * h;
    return x;
}

double GridDomain::cell_volume() const { return std::pow(h, n); }

std::string GridDomain::header() const {
    std::ostringstream os;
    os << std::setprecision(17) << "# grid n=" << n << " h=" << h << " dims=";
    for (int k = 0; k < n; ++k) os << (k ? "," : "") << dims[k];
    os << " origin=";
    for (int k = 0; k < n; ++k) os << (k ? "," : "") << origin[k];
    return os.str();
}

GridPtr build_grid(const DomainSpec& spec, double resolution) {
    if (!(resolution > 0) || !std::isfinite(resolution))
        throw Error(ErrorKind::InvalidArgument, "resolution must be positive");
    auto geo = std::make_shared<Geometry>(spec);
    auto g = std::make_shared<GridDomain>();
    g->n = geo->dim();
    g->h = 1.0 / resolution;
    g->geometry = geo;
    const double h = g->h;
    const int n = g->n;
    if (geo->feature_size() / h < 8.0 - 1e-9) {
        std::ostringstream os;
        os << "need at least 8 cells across the smallest feature (" << geo->feature_size() << "), h=" << h;
        throw Error(ErrorKind::FeatureUnderresolved, os.str());
    }
    Vec lo, hi;
    bool windowed = false;
    if (spec.bbox_lo) {
        lo = *spec.bbox_lo;
        hi = *spec.bbox_hi;
        windowed = true;
    } else {
        geo->extent(lo, hi);
        if (!std::holds_alternative<SlabSpec>(geo->spec().shape)) {
            lo.array() -= 2.0 * h;
            hi.array() += 2.0 * h;
        } else {
            windowed = true;
        }
    }
    g->origin.resize(n);
    for (int k = 0; k < n; ++k) {
        double len = hi[k] - lo[k];
        int m = static_cast<int>(std::ceil(len / h - 1e-9));
        g->dims[k] = std::max(1, m);
        g->origin[k] = 0.5 * (lo[k] + hi[k]) - 0.5 * m * h;
    }
    if (g->size() > 200'000'000ULL) throw Error(ErrorKind::InvalidArgument, "grid too large");
    g->inside.assign(g->size(), 0);
    for (std::size_t i = 0; i < g->size(); ++i)
        if (geo->contains(g->center(i))) {
            g->inside[i] = 1;
            ++g->inside_count;
        }
    if (g->inside_count == 0) throw Error(ErrorKind::EmptyDomain, "no cell centre lies inside the domain");

    Vec glo = g->origin, ghi = g->origin;
    for (int k = 0; k < n; ++k) ghi[k] += g->dims[k] * h;
    double margin = 1e300;
    if (auto* slab = std::get_if<SlabSpec>(&geo->spec().shape))
        margin = 2.0 * slab->width;
    else if (windowed)
        margin = (ghi - glo).maxCoeff();
    margin = spec.sample_margin.value_or(margin);
    Vec keep_lo = glo.array() - std::min(margin, 1e300);
    Vec keep_hi = ghi.array() + std::min(margin, 1e300);
    g->samples = geo->samples(h / 4.0, keep_lo, keep_hi);

    g->cut.assign(g->size() * n * 2, 1.0);
    for (std::size_t i = 0; i < g->size(); ++i) {
        if (!g->inside[i]) continue;
        Vec x = g->center(i);
        for (int k = 0; k < n; ++k)
            for (int s = -1; s <= 1; s += 2) {
                long nb = g->neighbor(i, k, s);
                double theta = 1.0;
                if (nb < 0) {
                    theta = 0.5;
                } else if (!g->inside[nb]) {
                    double a = 0.0, b = 1.0;
                    Vec dir = Vec::Zero(n);
                    dir[k] = s * h;
                    for (int it = 0; it < 50; ++it) {
                        double m = 0.5 * (a + b);
                        if (geo->contains(x + m * dir))
                            a = m;
                        else
                            b = m;
                    }
                    theta = std::clamp(0.5 * (a + b), 0.05, 1.0);
                }
                g->cut[(i * n + k) * 2 + (s > 0)] = theta;
            }
    }
    return g;
}

Vec VectorField::at(std::size_t i) const {
    int n = grid->n;
    Vec x(n);
    for (int k = 0; k < n; ++k) x[k] = v[i * n + k];
    return x;
}

void VectorField::set(std::size_t i, const Vec& x) {
    int n = grid->n;
    for (int k = 0; k < n; ++k) v[i * n + k] = x[k];
}

void require_same_grid(const ScalarField& a, const ScalarField& b) {
    if (a.grid != b.grid) throw Error(ErrorKind::InvalidArgument, "fields live on different grids");
}

VectorField gradient_fd(const ScalarField& u) {
    const GridDomain& g = *u.grid;
    VectorField out(u.grid);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!g.inside[i]) {
            for (int k = 0; k < g.n; ++k) out.v[i * g.n + k] = nan;
            continue;
        }
        for (int k = 0; k < g.n; ++k) {
            long p = g.neighbor(i, k, +1), m = g.neighbor(i, k, -1);
            bool pin = g.is_inside(p), min = g.is_inside(m);
            double val;
            if (pin && min)
                val = (u.v[p] - u.v[m]) / (2.0 * g.h);
            else if (pin)
                val = (u.v[p] - u.v[i]) / g.h;
            else if (min)
                val = (u.v[i] - u.v[m]) / g.h;
            else
                val = 0.0;
            out.v[i * g.n + k] = val;
        }
    }
    return out;
}

double integrate(const ScalarField& u) {
    const GridDomain& g = *u.grid;
    double s = 0.0;
    std::vector<std::size_t> bad;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!g.inside[i]) continue;
        if (!std::isfinite(u.v[i])) {
            bad.push_back(i);
            continue;
        }
        s += u.v[i];
    }
    if (!bad.empty()) {
        std::ostringstream os;
        os << bad.size() << " non-finite interior cells, first:";
        for (std::size_t j = 0; j < std::min<std::size_t>(bad.size(), 10); ++j) os << ' ' << bad[j];
        throw Error(ErrorKind::NonFinite, os.str());
    }
    return s * g.cell_volume();
}

void write_field_dump(std::ostream& os, const ScalarField& f, const std::string& extra_header) {
    const GridDomain& g = *f.grid;
    os << g.header() << '\n';
    if (!extra_header.empty()) os << extra_header << '\n';
    char buf[64];
    for (std::size_t i = 0; i < g.size(); ++i) {
        double v = f.v[i];
        if (!g.inside[i] || !std::isfinite(v)) {
            os << "nan\n";
        } else {
            std::snprintf(buf, sizeof buf, "%.17g\n", v);
            os << buf;
        }
    }
}

}  // namespace finhardy
