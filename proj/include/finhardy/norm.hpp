#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace finhardy {

// Vectors and matrices never exceed dimension 3; fixed max size keeps them off the heap.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 3, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 3, 3>;

struct Euclidean {
    int dim = 2;
};
struct DiagQuadratic {
    std::vector<double> weights;
};
struct Quadratic {
    Mat A;
};
struct PNorm {
    double p = 2.0;
    int dim = 2;
};

using NormDescriptor = std::variant<Euclidean, DiagQuadratic, Quadratic, PNorm>;

enum class PolarMode { ClosedForm, Numeric };

int descriptor_dim(const NormDescriptor& d);
void validate_descriptor(const NormDescriptor& d);
std::string describe(const NormDescriptor& d);

class NormEngine {
public:
    explicit NormEngine(NormDescriptor descriptor, PolarMode mode = PolarMode::ClosedForm);

    const NormDescriptor& descriptor() const { return desc_; }
    PolarMode polar_mode() const { return mode_; }
    int dim() const { return dim_; }
    double alpha1() const { return alpha1_; }
    double alpha2() const { return alpha2_; }

    double eval(const Vec& xi) const;
    Vec grad(const Vec& xi) const;
    Mat hess(const Vec& xi) const;
    double polar(const Vec& x) const;
    Vec polar_grad(const Vec& x) const;

    // F(e_k); equals sup_p |dF/dp_k| for any norm.
    double axis_value(int k) const { return axis_[k]; }
    // F^2 and grad(F^2) in one pass; grad(F^2)(0) = 0.
    double sq_and_grad(const Vec& xi, Vec& g2) const;

    NormEngine with_mode(PolarMode mode) const { return NormEngine(desc_, mode); }

private:
    double polar_closed(const Vec& x) const;
    Vec polar_grad_closed(const Vec& x) const;
    double polar_numeric(const Vec& x) const;
    void compute_growth();

    NormDescriptor desc_;
    PolarMode mode_;
    int dim_;
    Mat inv_;  // A^{-1} for Quadratic
    double q_ = 2.0;
    double alpha1_ = 1.0, alpha2_ = 1.0;
    double axis_[3] = {1.0, 1.0, 1.0};
    std::vector<Vec> directions_;
};

// Free-function forms of the engine operations.
double eval_norm(const NormEngine& e, const Vec& xi);
Vec grad_norm(const NormEngine& e, const Vec& xi);
Mat hess_norm(const NormEngine& e, const Vec& xi);
double polar_eval(const NormEngine& e, const Vec& x);
Vec polar_grad(const NormEngine& e, const Vec& x);
std::pair<double, double> growth_bounds(const NormEngine& e);

// Deterministic quasi-uniform unit directions (circle in 2D, Fibonacci sphere in 3D).
std::vector<Vec> sphere_directions(int dim, int count);

Vec make_vec(std::initializer_list<double> v);

}  // namespace finhardy
