#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "finhardy/norm.hpp"

namespace finhardy {

struct BoxSpec {
    Vec lo, hi;
};
// {0 < x.normal < width}, viewed through a cube of half-width `window` centred at the slab midpoint.
struct SlabSpec {
    Vec normal;
    double width = 1.0;
    double window = 1.0;
};
struct WulffBallSpec {
    Vec center;
    double radius = 1.0;
    NormDescriptor shape;
};
// Ellipse with semi-axes r (radial) and a*r (axial) rotated about the x3 axis at distance R.
struct TorusSpec {
    double R = 2.5, r = 1.0, a = 1.0;
};
struct Halfspace {
    Vec a;  // outward normal, normalised on validation
    double b = 0.0;
};
struct PolytopeSpec {
    std::vector<Halfspace> faces;
    Vec lo, hi;  // bounding box
};

using DomainShape = std::variant<BoxSpec, SlabSpec, WulffBallSpec, TorusSpec, PolytopeSpec>;

struct DomainSpec {
    DomainShape shape;
    std::optional<Vec> bbox_lo, bbox_hi;  // explicit grid window; otherwise natural extent + 2h
    std::optional<double> sample_margin;  // boundary samples kept within the window grown by this much
};

int domain_dim(const DomainSpec& spec);
void validate_domain(const DomainSpec& spec);

struct BoundarySample {
    Vec point;
    Vec normal;  // outward Euclidean unit normal
    double weight = 0.0;
};

// Membership predicate and boundary parametrisation of an analytic domain.
class Geometry {
public:
    explicit Geometry(const DomainSpec& spec);
    int dim() const { return dim_; }
    bool contains(const Vec& x) const;
    // Natural axis-aligned extent of the closure.
    void extent(Vec& lo, Vec& hi) const;
    double feature_size() const;
    std::vector<BoundarySample> samples(double spacing, const Vec& keep_lo, const Vec& keep_hi) const;
    const DomainSpec& spec() const { return spec_; }
    const NormEngine* shape_norm() const { return shape_.get(); }

private:
    DomainSpec spec_;
    int dim_;
    std::shared_ptr<NormEngine> shape_;
};

class GridDomain {
public:
    int n = 0;
    double h = 0.0;
    int dims[3] = {1, 1, 1};
    Vec origin;  // lower corner of the grid box
    std::vector<std::uint8_t> inside;
    std::vector<BoundarySample> samples;
    // Inside fraction of the segment from a cell centre to its axis neighbour, per (cell, axis, side).
    std::vector<double> cut;
    std::shared_ptr<const Geometry> geometry;
    std::size_t inside_count = 0;

    std::size_t size() const { return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2]; }
    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * dims[1] + j) * dims[2] + k;
    }
    void coords(std::size_t idx, int c[3]) const {
        c[2] = static_cast<int>(idx % dims[2]);
        idx /= dims[2];
        c[1] = static_cast<int>(idx % dims[1]);
        c[0] = static_cast<int>(idx / dims[1]);
    }
    std::size_t stride(int axis) const {
        return axis == 0 ? static_cast<std::size_t>(dims[1]) * dims[2] : (axis == 1 ? dims[2] : 1);
    }
    // Neighbour along axis in direction s (+1/-1), or -1 if it leaves the grid.
    long neighbor(std::size_t idx, int axis, int s) const;
    Vec center(std::size_t idx) const;
    double cut_fraction(std::size_t idx, int axis, int s) const { return cut[(idx * n + axis) * 2 + (s > 0)]; }
    bool is_inside(long idx) const { return idx >= 0 && inside[static_cast<std::size_t>(idx)]; }
    double cell_volume() const;
    std::string header() const;
};

using GridPtr = std::shared_ptr<const GridDomain>;

GridPtr build_grid(const DomainSpec& spec, double resolution);

struct ScalarField {
    GridPtr grid;
    std::vector<double> v;  // NaN where undefined
    ScalarField() = default;
    explicit ScalarField(GridPtr g, double fill = 0.0) : grid(std::move(g)), v(grid->size(), fill) {}
    double& operator[](std::size_t i) { return v[i]; }
    double operator[](std::size_t i) const { return v[i]; }
};

struct VectorField {
    GridPtr grid;
    std::vector<double> v;  // n entries per cell
    VectorField() = default;
    explicit VectorField(GridPtr g) : grid(std::move(g)), v(grid->size() * grid->n, 0.0) {}
    Vec at(std::size_t i) const;
    void set(std::size_t i, const Vec& x);
};

void require_same_grid(const ScalarField& a, const ScalarField& b);

VectorField gradient_fd(const ScalarField& u);
double integrate(const ScalarField& u);

void write_field_dump(std::ostream& os, const ScalarField& f, const std::string& extra_header = "");

}  // namespace finhardy
