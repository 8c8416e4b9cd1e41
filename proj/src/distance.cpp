#include "finhardy/distance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "finhardy/error.hpp"

namespace finhardy {

namespace {
constexpr int kLeafSize = 12;
const double kNaN = std::numeric_limits<double>::quiet_NaN();

double percentile(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    double pos = q * (v.size() - 1);
    std::size_t i = static_cast<std::size_t>(pos);
    if (i + 1 >= v.size()) return v.back();
    return v[i] + (pos - i) * (v[i + 1] - v[i]);
}
}  // namespace

double refine_on_tangent(const Vec& x, const BoundarySample& s, double dist, const NormEngine& engine, double tol) {
    // F°-distance to the tangent plane at the sample; trusted only when its foot stays near the sample.
    double fn = engine.eval(s.normal);
    double t = (s.point - x).dot(s.normal) / fn;
    if (!(t > 0.0) || t >= dist) return dist;
    Vec foot = x + t * engine.grad(s.normal);
    if ((foot - s.point).norm() > tol) return dist;
    return t;
}

BoundaryTree::BoundaryTree(const std::vector<BoundarySample>& samples, const NormEngine& engine)
    : engine_(engine), n_(engine.dim()) {
    if (samples.empty()) throw Error(ErrorKind::EmptyDomain, "no boundary samples");
    order_.resize(samples.size());
    std::iota(order_.begin(), order_.end(), 0);
    pts_.resize(samples.size() * n_);
    for (std::size_t i = 0; i < samples.size(); ++i)
        for (int k = 0; k < n_; ++k) pts_[i * n_ + k] = samples[i].point[k];
    for (int k = 0; k < n_; ++k) inv_axis_[k] = 1.0 / engine.axis_value(k);
    inv_alpha2_ = 1.0 / engine.alpha2();
    // Norms symmetric under each coordinate reflection are monotone in |z_k|, so F°(gap) bounds the box exactly.
    const auto& desc = engine.descriptor();
    absolute_ = !std::holds_alternative<Quadratic>(desc);
    if (auto* q = std::get_if<Quadratic>(&desc)) {
        Mat off = q->A;
        off.diagonal().setZero();
        absolute_ = off.cwiseAbs().maxCoeff() == 0.0;
    }
    nodes_.reserve(2 * samples.size() / kLeafSize + 8);
    build(0, static_cast<int>(samples.size()), 0);
    // store coordinates in tree order for locality
    std::vector<double> reordered(pts_.size());
    for (std::size_t i = 0; i < order_.size(); ++i)
        for (int k = 0; k < n_; ++k) reordered[i * n_ + k] = pts_[static_cast<std::size_t>(order_[i]) * n_ + k];
    pts_.swap(reordered);
}

int BoundaryTree::build(int begin, int end, int depth) {
    Node nd;
    nd.begin = begin;
    nd.end = end;
    for (int k = 0; k < n_; ++k) {
        nd.lo[k] = std::numeric_limits<double>::infinity();
        nd.hi[k] = -std::numeric_limits<double>::infinity();
    }
    for (int i = begin; i < end; ++i)
        for (int k = 0; k < n_; ++k) {
            double v = pts_[static_cast<std::size_t>(order_[i]) * n_ + k];
            nd.lo[k] = std::min(nd.lo[k], v);
            nd.hi[k] = std::max(nd.hi[k], v);
        }
    int id = static_cast<int>(nodes_.size());
    nodes_.push_back(nd);
    if (end - begin <= kLeafSize) return id;
    int axis = 0;
    for (int k = 1; k < n_; ++k)
        if (nd.hi[k] - nd.lo[k] > nd.hi[axis] - nd.lo[axis]) axis = k;
    int mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end, [&](int a, int b) {
        double va = pts_[static_cast<std::size_t>(a) * n_ + axis], vb = pts_[static_cast<std::size_t>(b) * n_ + axis];
        return va < vb || (va == vb && a < b);
    });
    int l = build(begin, mid, depth + 1);
    int r = build(mid, end, depth + 1);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
}

// F°(z) >= |z_k| / F(e_k) and F°(z) >= |z| / alpha2.
double BoundaryTree::lower_bound(const Node& nd, const double* x) const {
    if (absolute_) {
        Vec gap(n_);
        for (int k = 0; k < n_; ++k) gap[k] = std::max({nd.lo[k] - x[k], x[k] - nd.hi[k], 0.0});
        return engine_.polar(gap);
    }
    double best = 0.0, sq = 0.0;
    for (int k = 0; k < n_; ++k) {
        double g = std::max({nd.lo[k] - x[k], x[k] - nd.hi[k], 0.0});
        best = std::max(best, g * inv_axis_[k]);
        sq += g * g;
    }
    return std::max(best, std::sqrt(sq) * inv_alpha2_);
}

void BoundaryTree::search(int node, const double* x, double& best, long& arg) const {
    const Node& nd = nodes_[node];
    if (nd.left < 0) {
        Vec z(n_);
        for (int i = nd.begin; i < nd.end; ++i) {
            for (int k = 0; k < n_; ++k) z[k] = x[k] - pts_[static_cast<std::size_t>(i) * n_ + k];
            double v = engine_.polar(z);
            if (v < best || (v == best && order_[i] < arg)) {
                best = v;
                arg = order_[i];
            }
        }
        return;
    }
    double bl = lower_bound(nodes_[nd.left], x), br = lower_bound(nodes_[nd.right], x);
    int first = nd.left, second = nd.right;
    if (br < bl) {
        std::swap(first, second);
        std::swap(bl, br);
    }
    if (bl <= best) search(first, x, best, arg);
    if (br <= best) search(second, x, best, arg);
}

std::pair<double, long> BoundaryTree::nearest(const Vec& x) const {
    double best = std::numeric_limits<double>::infinity();
    long arg = -1;
    double xs[3] = {0, 0, 0};
    for (int k = 0; k < n_; ++k) xs[k] = x[k];
    search(0, xs, best, arg);
    return {best, arg};
}

DistanceResult distance_bruteforce(const GridPtr& grid, const NormEngine& engine, double ridge_tau) {
    if (engine.dim() != grid->n) throw Error(ErrorKind::InvalidArgument, "norm and grid dimensions differ");
    BoundaryTree tree(grid->samples, engine);
    DistanceResult res;
    res.d = ScalarField(grid, kNaN);
    res.foot.assign(grid->size(), -1);
    for (std::size_t i = 0; i < grid->size(); ++i) {
        if (!grid->inside[i]) continue;
        Vec x = grid->center(i);
        auto [dist, idx] = tree.nearest(x);
        res.d[i] = refine_on_tangent(x, grid->samples[idx], dist, engine, grid->h);
        res.foot[i] = idx;
    }
    finalize_distance(res, engine, ridge_tau);
    return res;
}

DistanceResult distance_sweep(const GridPtr& grid, const NormEngine& engine, const SweepOptions& opts) {
    const GridDomain& g = *grid;
    if (engine.dim() != g.n) throw Error(ErrorKind::InvalidArgument, "norm and grid dimensions differ");
    const int n = g.n;
    const double h = g.h;
    BoundaryTree tree(g.samples, engine);

    DistanceResult res;
    res.d = ScalarField(grid, kNaN);
    std::vector<double>& u = res.d.v;
    std::vector<std::uint8_t> fixed(g.size(), 0);
    double diam = 0.0;
    for (int k = 0; k < n; ++k) diam += std::pow(g.dims[k] * h, 2);
    const double big = 10.0 * std::sqrt(diam) / engine.alpha1();
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!g.inside[i]) continue;
        bool seed = false;
        for (int k = 0; k < n && !seed; ++k)
            for (int s = -1; s <= 1; s += 2) {
                // Cells on a window edge get exact data too, so no extrapolation is needed there.
                long nb = g.neighbor(i, k, s);
                if (nb < 0 || !g.inside[nb]) seed = true;
            }
        if (seed) {
            Vec x = g.center(i);
            auto [dist, idx] = tree.nearest(x);
            u[i] = refine_on_tangent(x, g.samples[idx], dist, engine, h);
            fixed[i] = 1;
        } else {
            u[i] = big;
        }
    }

    double sigma[3], denom = 0.0;
    for (int k = 0; k < n; ++k) {
        sigma[k] = engine.axis_value(k);
        denom += sigma[k] / h;
    }
    long strides[3];
    for (int k = 0; k < n; ++k) strides[k] = static_cast<long>(g.stride(k));

    auto update = [&](std::size_t i) -> double {
        Vec p(n);
        double acc = 0.0;
        for (int k = 0; k < n; ++k) {
            double vp = u[i + strides[k]], vm = u[i - strides[k]];
            p[k] = (vp - vm) / (2.0 * h);
            acc += sigma[k] * (vp + vm) / (2.0 * h);
        }
        double cand = (1.0 - engine.eval(p) + acc) / denom;
        if (cand < u[i]) {
            double delta = u[i] - cand;
            u[i] = cand;
            return delta;
        }
        return 0.0;
    };

    const double tol = opts.tol_factor * h;
    int dims[3] = {g.dims[0], g.dims[1], g.dims[2]};
    for (int round = 0;; ++round) {
        if (round >= opts.max_rounds) {
            std::ostringstream os;
            os << "fast sweeping did not converge in " << opts.max_rounds << " rounds; last updates:";
            for (std::size_t j = res.history.size() > 5 ? res.history.size() - 5 : 0; j < res.history.size(); ++j)
                os << ' ' << res.history[j];
            throw Error(ErrorKind::NonConvergence, os.str());
        }
        double maxd = 0.0;
        for (int order = 0; order < (1 << n); ++order) {
            int dir[3], start[3], stop[3];
            for (int k = 0; k < 3; ++k) {
                dir[k] = (k < n && (order >> k) & 1) ? -1 : 1;
                start[k] = dir[k] > 0 ? 0 : dims[k] - 1;
                stop[k] = dir[k] > 0 ? dims[k] : -1;
            }
            int c[3];
            for (c[0] = start[0]; c[0] != stop[0]; c[0] += dir[0])
                for (c[1] = start[1]; c[1] != stop[1]; c[1] += dir[1])
                    for (c[2] = start[2]; c[2] != stop[2]; c[2] += dir[2]) {
                        std::size_t i = g.index(c[0], c[1], c[2]);
                        if (!g.inside[i] || fixed[i]) continue;
                        maxd = std::max(maxd, update(i));
                    }
        }
        res.history.push_back(maxd);
        res.rounds = round + 1;
        if (maxd < tol) break;
    }
    finalize_distance(res, engine, opts.ridge_tau);
    return res;
}

std::vector<double> eikonal_defect(const ScalarField& d, const NormEngine& engine) {
    const GridDomain& g = *d.grid;
    VectorField grad = gradient_fd(d);
    std::vector<double> out(g.size(), kNaN);
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g.inside[i]) out[i] = std::abs(engine.eval(grad.at(i)) - 1.0);
    return out;
}

std::vector<std::uint8_t> ridge_detect(const DistanceResult& result, const NormEngine& engine, double tau) {
    const GridDomain& g = *result.d.grid;
    auto defect = eikonal_defect(result.d, engine);
    std::vector<std::uint8_t> ridge(g.size(), 0);
    double slope_cap[3];
    for (int k = 0; k < g.n; ++k) {
        Vec e = Vec::Zero(g.n);
        e[k] = 1.0;
        slope_cap[k] = engine.polar(e);
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!g.inside[i]) continue;
        bool mark = defect[i] > tau;
        // kink: the one-sided slopes along an axis turn from rising to falling by more than tau * F°(e_k)
        for (int k = 0; k < g.n && !mark; ++k) {
            long p = g.neighbor(i, k, +1), m = g.neighbor(i, k, -1);
            if (!g.is_inside(p) || !g.is_inside(m)) continue;
            double fwd = (result.d[p] - result.d[i]) / g.h, bwd = (result.d[i] - result.d[m]) / g.h;
            if (bwd >= 0.0 && fwd <= 0.0 && bwd - fwd > tau * slope_cap[k]) mark = true;
        }
        ridge[i] = mark;
    }
    return ridge;
}

ResidualStats eikonal_residual(const DistanceResult& result, const NormEngine& engine) {
    const GridDomain& g = *result.d.grid;
    auto defect = eikonal_defect(result.d, engine);
    std::vector<double> vals;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g.inside[i] && (result.ridge.empty() || !result.ridge[i])) vals.push_back(defect[i]);
    ResidualStats st;
    st.count = vals.size();
    if (vals.empty()) return st;
    st.median = percentile(vals, 0.5);
    st.p95 = percentile(vals, 0.95);
    st.max = *std::max_element(vals.begin(), vals.end());
    return st;
}

std::pair<double, std::size_t> inradius(const DistanceResult& result) {
    const GridDomain& g = *result.d.grid;
    double best = -1.0;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g.inside[i] && result.d[i] > best) {
            best = result.d[i];
            arg = i;
        }
    return {best, arg};
}

void finalize_distance(DistanceResult& result, const NormEngine& engine, double tau) {
    result.ridge = ridge_detect(result, engine, tau);
    result.ridge_count = static_cast<std::size_t>(std::count(result.ridge.begin(), result.ridge.end(), 1));
    result.residual = eikonal_residual(result, engine);
    auto [r, c] = inradius(result);
    result.r_F = r;
    result.incenter = c;
}

void require_torus_norm(const TorusSpec& spec, const NormEngine& engine) {
    std::vector<double> w;
    if (auto* d = std::get_if<DiagQuadratic>(&engine.descriptor())) w = d->weights;
    if (auto* q = std::get_if<Quadratic>(&engine.descriptor())) {
        Mat off = q->A;
        off.diagonal().setZero();
        if (off.cwiseAbs().maxCoeff() == 0.0) w = {q->A(0, 0), q->A(1, 1), q->A(2, 2)};
    }
    if (std::holds_alternative<Euclidean>(engine.descriptor()) && engine.dim() == 3) w = {1.0, 1.0, 1.0};
    bool ok = w.size() == 3 && std::abs(w[0] - 1.0) < 1e-12 && std::abs(w[1] - 1.0) < 1e-12 &&
              std::abs(w[2] - spec.a * spec.a) < 1e-12 * spec.a * spec.a;
    if (!ok)
        throw Error(ErrorKind::NormMismatch,
                    "torus closed forms need the norm diag(1,1,a^2); got " + describe(engine.descriptor()));
}

double torus_core_polar(const TorusSpec& spec, const Vec& x) {
    double rho = std::hypot(x[0], x[1]);
    return std::sqrt((spec.R - rho) * (spec.R - rho) + x[2] * x[2] / (spec.a * spec.a));
}

double torus_distance_value(const TorusSpec& spec, const Vec& x) { return spec.r - torus_core_polar(spec, x); }

ScalarField torus_distance_oracle(const TorusSpec& spec, const GridPtr& grid, const NormEngine& engine) {
    require_torus_norm(spec, engine);
    ScalarField out(grid, kNaN);
    for (std::size_t i = 0; i < grid->size(); ++i) {
        if (!grid->inside[i]) continue;
        out[i] = torus_distance_value(spec, grid->center(i));
    }
    return out;
}

}  // namespace finhardy
