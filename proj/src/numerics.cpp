#include "projhead/numerics.hpp"

#include "projhead/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace projhead {

double gaussian_cdf(double x) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double gaussian_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double softplus(double x) {
    if (x > 30.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

double positive_part_moment2(double a, double b) {
    if (!(a > 0.0)) throw DomainError("positive_part_moment2: scale must be positive");
    const double s = b / a;
    return (a * a + b * b) * gaussian_cdf(s) + a * b * gaussian_pdf(s);
}

double positive_part_moment1(double a, double b) {
    if (!(a > 0.0)) throw DomainError("positive_part_moment1: scale must be positive");
    const double s = b / a;
    return a * gaussian_pdf(s) + b * gaussian_cdf(s);
}

Quadrature gauss_hermite(int order) {
    if (order < 1) throw DomainError("gauss_hermite: order must be positive");
    // Jacobi matrix of the monic probabilists' Hermite polynomials:
    // He_{k+1} = x He_k - k He_{k-1}.
    Mat J = Mat::Zero(order, order);
    for (int k = 1; k < order; ++k) {
        J(k, k - 1) = J(k - 1, k) = std::sqrt(static_cast<double>(k));
    }
    Eigen::SelfAdjointEigenSolver<Mat> eig(J);
    Quadrature q;
    q.order = order;
    q.nodes.resize(order);
    q.weights.resize(order);
    double total = 0.0;
    for (int i = 0; i < order; ++i) {
        q.nodes[i] = eig.eigenvalues()(i);
        const double v0 = eig.eigenvectors()(0, i);
        q.weights[i] = v0 * v0;
        total += q.weights[i];
    }
    for (double& w : q.weights) w /= total;
    // Symmetrize to remove eigen-solver asymmetry in the last bits.
    for (int i = 0; i < order / 2; ++i) {
        const int j = order - 1 - i;
        const double x = 0.5 * (q.nodes[j] - q.nodes[i]);
        const double w = 0.5 * (q.weights[i] + q.weights[j]);
        q.nodes[i] = -x;
        q.nodes[j] = x;
        q.weights[i] = q.weights[j] = w;
    }
    if (order % 2 == 1) q.nodes[order / 2] = 0.0;
    return q;
}

double expect_gaussian_1d(const std::function<double(double)>& f, const Quadrature& quad) {
    // Mirror-image nodes share a weight; pairing them makes odd integrands
    // cancel exactly instead of up to the rounding of large terms.
    const std::size_t n = quad.nodes.size();
    double s = 0.0;
    for (std::size_t i = 0; i < n / 2; ++i) s += quad.weights[i] * (f(quad.nodes[i]) + f(quad.nodes[n - 1 - i]));
    if (n % 2 == 1) s += quad.weights[n / 2] * f(quad.nodes[n / 2]);
    return s;
}

SvdTriple svd_descending(const Mat& W) {
    if (W.rows() != W.cols()) throw ShapeError("svd_descending: matrix must be square");
    if (!W.allFinite()) throw DomainError("svd_descending: non-finite entry");
    Eigen::JacobiSVD<Mat> svd(W, Eigen::ComputeFullU | Eigen::ComputeFullV);
    SvdTriple out{svd.singularValues(), svd.matrixU(), svd.matrixV()};
    // Eigen already orders singular values decreasingly; enforce the sign rule.
    const Eigen::Index p = W.cols();
    for (Eigen::Index j = 0; j < p; ++j) {
        for (Eigen::Index i = 0; i < p; ++i) {
            const double x = out.right_vectors(i, j);
            if (std::abs(x) > 1e-12) {
                if (x < 0.0) {
                    out.right_vectors.col(j) *= -1.0;
                    out.left_vectors.col(j) *= -1.0;
                }
                break;
            }
        }
    }
    return out;
}

ScalarMin minimize_scalar(const std::function<double(double)>& f, double lo, double hi,
                          double tol, const ScalarSearch& search) {
    if (!(lo < hi)) throw DomainError("minimize_scalar: require lo < hi");
    if (search.log_spaced && !(lo > 0.0)) throw DomainError("minimize_scalar: log grid needs lo > 0");
    const int m = std::max(search.grid_points, 3);
    std::vector<double> xs(m), fs(m);
    for (int i = 0; i < m; ++i) {
        const double s = static_cast<double>(i) / (m - 1);
        xs[i] = search.log_spaced ? lo * std::pow(hi / lo, s) : lo + (hi - lo) * s;
        fs[i] = f(xs[i]);
    }
    xs.back() = hi;
    double fmin = std::numeric_limits<double>::infinity();
    for (double v : fs) fmin = std::min(fmin, v);
    if (!std::isfinite(fmin)) throw NumericalError("minimize_scalar: objective not finite on grid");
    int best = 0;
    while (fs[best] > fmin + tol) ++best;

    double a = xs[std::max(best - 1, 0)];
    double b = xs[std::min(best + 1, m - 1)];
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - gr * (b - a);
    double d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 400 && (b - a) > tol * (1.0 + std::abs(a) + std::abs(b)) * 0.5; ++it) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    const double xr = 0.5 * (a + b);
    const double fr = f(xr);
    // Accept the refinement only if it improves on the grid point; this keeps
    // boundary minima and the smallest-argument tie rule intact.
    if (fr < fs[best]) return {xr, fr};
    return {xs[best], fs[best]};
}

double bisect_root(const std::function<double(double)>& g, double lo, double hi, double tol) {
    if (!(lo < hi)) throw DomainError("bisect_root: require lo < hi");
    double glo = g(lo);
    const double ghi = g(hi);
    if (glo == 0.0) return lo;
    if (ghi == 0.0) return hi;
    if ((glo > 0.0) == (ghi > 0.0)) throw BracketError("bisect_root: no sign change on bracket");
    for (int it = 0; it < 2000 && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double gm = g(mid);
        if (gm == 0.0) return mid;
        if ((gm > 0.0) == (glo > 0.0)) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

std::vector<double> log_space(double lo, double hi, int count) {
    if (!(lo > 0.0 && hi >= lo) || count < 1) throw DomainError("log_space: invalid range");
    std::vector<double> out(count);
    if (count == 1) {
        out[0] = lo;
        return out;
    }
    const double a = std::log10(lo), b = std::log10(hi);
    for (int i = 0; i < count; ++i) out[i] = std::pow(10.0, a + (b - a) * i / (count - 1));
    return out;
}

}  // namespace projhead
