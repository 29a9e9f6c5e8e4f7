// Shared numerical primitives: Gaussian distribution functions, closed-form
// positive-part Gaussian moments, Gauss-Hermite quadrature, a deterministic
// descending SVD, and bracketed scalar root/minimum finders.
#pragma once

#include <Eigen/Dense>

#include <functional>
#include <utility>
#include <vector>

namespace projhead {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Standard normal CDF and density.
double gaussian_cdf(double x);
double gaussian_pdf(double x);

// Numerically stable log(1 + exp(x)).
double softplus(double x);

// E[(aG + b)_+^2] for G ~ N(0,1); a must be positive.
double positive_part_moment2(double a, double b);

// E[(aG + b)_+] for G ~ N(0,1); a must be positive.
double positive_part_moment1(double a, double b);

// Gauss-Hermite rule normalized against the standard Gaussian measure.
struct Quadrature {
    std::vector<double> nodes;
    std::vector<double> weights;
    int order = 0;
};

// Builds an `order`-point rule (Golub-Welsch on the probabilists' Hermite
// recurrence). Weights sum to one.
Quadrature gauss_hermite(int order = 80);

// Sum_i w_i f(x_i).
double expect_gaussian_1d(const std::function<double(double)>& f, const Quadrature& quad);

// Singular triple with nonincreasing singular values.
struct SvdTriple {
    Vec singular_values;
    Mat left_vectors;   // columns u_j
    Mat right_vectors;  // columns v_j
};

// SVD of a square matrix, descending, with each right vector's first
// nonzero coordinate made positive (left vector flipped alongside).
SvdTriple svd_descending(const Mat& W);

// Options for minimize_scalar.
struct ScalarSearch {
    int grid_points = 512;
    bool log_spaced = false;  // requires lo > 0
};

struct ScalarMin {
    double argmin;
    double value;
};

// Global-ish minimum on [lo, hi]: grid scan followed by golden-section
// refinement around the best cell. Grid values within `tol` of the best are
// treated as ties and the smallest argument wins.
ScalarMin minimize_scalar(const std::function<double(double)>& f, double lo, double hi,
                          double tol = 1e-10, const ScalarSearch& search = {});

// Bisection for a sign change of g on [lo, hi]; returns the midpoint of the
// final bracket whose width is at most tol.
double bisect_root(const std::function<double(double)>& g, double lo, double hi,
                   double tol = 1e-12);

// Evenly spaced points in log scale, both endpoints included.
std::vector<double> log_space(double lo, double hi, int count);

}  // namespace projhead
