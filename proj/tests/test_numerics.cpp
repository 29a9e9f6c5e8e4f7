#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "projhead/errors.hpp"
#include "projhead/gmm.hpp"
#include "projhead/numerics.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace projhead;

namespace {

// Monte Carlo mean and standard error of f(G), G ~ N(0,1).
std::pair<double, double> monte_carlo(const std::function<double(double)>& f, int samples, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> nd;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double v = f(nd(eng));
        s += v;
        s2 += v * v;
    }
    const double mean = s / samples;
    const double var = s2 / samples - mean * mean;
    return {mean, std::sqrt(var / samples)};
}

// Composite Simpson rule for f(x) phi(x) on [-40, 40].
double simpson_gaussian(const std::function<double(double)>& f) {
    const int n = 200000;
    const double lo = -40.0, hi = 40.0, h = (hi - lo) / n;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double x = lo + i * h;
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        acc += w * f(x) * std::exp(-0.5 * x * x);
    }
    return acc * h / 3.0 / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace

TEST_CASE("gaussian_cdf reference values") {
    CHECK(gaussian_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(std::abs(gaussian_cdf(-1.0) - 0.15865525393145705) < 1e-15);
    CHECK(std::abs(gaussian_cdf(-2.0) - 0.022750131948179207) < 1e-15);
    CHECK(gaussian_cdf(-40.0) >= 0.0);
    CHECK(gaussian_cdf(40.0) == 1.0);
    CHECK(std::abs(gaussian_pdf(0.0) - 1.0 / std::sqrt(2.0 * std::numbers::pi)) < 1e-16);
}

TEST_CASE("softplus is stable at both tails") {
    CHECK(softplus(0.0) == doctest::Approx(std::numbers::ln2));
    CHECK(softplus(800.0) == doctest::Approx(800.0));
    CHECK(softplus(-800.0) >= 0.0);
    CHECK(softplus(-800.0) < 1e-300);
    CHECK(std::abs(softplus(1.5) - std::log1p(std::exp(1.5))) < 1e-15);
}

TEST_CASE("positive_part_moment2 against closed values and Monte Carlo") {
    CHECK(std::abs(positive_part_moment2(1.0, 0.0) - 0.5) < 1e-15);
    {
        const auto [m, se] = monte_carlo([](double g) { double v = g + 10.0; return v > 0 ? v * v : 0.0; }, 10000000, 11);
        CHECK(std::abs(positive_part_moment2(1.0, 10.0) - m) <= 3.0 * se);
        CHECK(std::abs(positive_part_moment2(1.0, 10.0) - 101.0) < 1e-9);
    }
    {
        const auto [m, se] = monte_carlo([](double g) { double v = 2.0 * g - 1.0; return v > 0 ? v * v : 0.0; }, 10000000, 12);
        CHECK(std::abs(positive_part_moment2(2.0, -1.0) - m) <= 3.0 * se);
        const double q = simpson_gaussian([](double g) { double v = 2.0 * g - 1.0; return v > 0 ? v * v : 0.0; });
        CHECK(std::abs(positive_part_moment2(2.0, -1.0) - q) < 1e-8);
    }
    CHECK_THROWS_AS(positive_part_moment2(0.0, 1.0), DomainError);
    CHECK_THROWS_AS(positive_part_moment2(-1.0, 1.0), DomainError);
}

TEST_CASE("positive_part_moment1 against closed values and Monte Carlo") {
    CHECK(std::abs(positive_part_moment1(1.0, 0.0) - 1.0 / std::sqrt(2.0 * std::numbers::pi)) < 1e-15);
    {
        const auto [m, se] = monte_carlo([](double g) { return std::max(0.0, g + 5.0); }, 10000000, 13);
        CHECK(std::abs(positive_part_moment1(1.0, 5.0) - m) <= 3.0 * se);
        // 5 Phi(5) + phi(5) = 5 + 5.35e-8
        const double q = simpson_gaussian([](double g) { return std::max(0.0, g + 5.0); });
        CHECK(std::abs(positive_part_moment1(1.0, 5.0) - q) < 1e-9);
        CHECK(std::abs(positive_part_moment1(1.0, 5.0) - 5.0) < 1e-7);
    }
    {
        const auto [m, se] = monte_carlo([](double g) { return std::max(0.0, 3.0 * g - 3.0); }, 10000000, 14);
        CHECK(std::abs(positive_part_moment1(3.0, -3.0) - m) <= 3.0 * se);
    }
    CHECK_THROWS_AS(positive_part_moment1(0.0, 0.0), DomainError);
}

TEST_CASE("Gauss-Hermite rule") {
    for (int order : {5, 20, 80}) {
        const Quadrature q = gauss_hermite(order);
        REQUIRE(q.nodes.size() == static_cast<std::size_t>(order));
        double sw = 0.0;
        for (double w : q.weights) sw += w;
        CHECK(std::abs(sw - 1.0) < 1e-13);
    }
    // Exact on polynomials up to degree 2*order - 1: E[G^k] = (k-1)!! for even k.
    const Quadrature q = gauss_hermite(10);
    for (int k = 0; k <= 19; ++k) {
        double expected = 0.0;  // odd moments vanish; even moments are (k-1)!!
        if (k % 2 == 0) {
            expected = 1.0;
            for (int j = k - 1; j > 1; j -= 2) expected *= j;
        }
        const double got = expect_gaussian_1d([k](double x) { return std::pow(x, k); }, q);
        CHECK(std::abs(got - expected) <= 1e-12 * std::max(1.0, expected));
    }
    const Quadrature q20 = gauss_hermite(20);
    CHECK(std::abs(expect_gaussian_1d([](double x) { return x; }, q20)) < 1e-14);
    CHECK(std::abs(expect_gaussian_1d([](double x) { return x * x; }, q20) - 1.0) < 1e-12);
    const Quadrature q40 = gauss_hermite(40);
    CHECK(std::abs(expect_gaussian_1d([](double x) { return 1.0 / (1.0 + std::exp(x)); }, q40) - 0.5) < 1e-10);
    CHECK_THROWS_AS(gauss_hermite(0), DomainError);
}

TEST_CASE("svd_descending ordering, reconstruction and sign rule") {
    const SvdTriple id = svd_descending(Mat::Identity(3, 3));
    for (int j = 0; j < 3; ++j) CHECK(std::abs(id.singular_values(j) - 1.0) < 1e-14);

    Mat D = Mat::Zero(3, 3);
    D.diagonal() << 3.0, 1.0, 2.0;
    const SvdTriple d = svd_descending(D);
    CHECK(std::abs(d.singular_values(0) - 3.0) < 1e-14);
    CHECK(std::abs(d.singular_values(1) - 2.0) < 1e-14);
    CHECK(std::abs(d.singular_values(2) - 1.0) < 1e-14);

    Rng rng(5);
    for (int rep = 0; rep < 10; ++rep) {
        const Mat W = rng.normal_matrix(5, 5);
        const SvdTriple s = svd_descending(W);
        for (int j = 0; j + 1 < 5; ++j) CHECK(s.singular_values(j) >= s.singular_values(j + 1));
        CHECK(s.singular_values(4) >= 0.0);
        const Mat R = s.left_vectors * s.singular_values.asDiagonal() * s.right_vectors.transpose();
        CHECK((R - W).norm() / W.norm() < 1e-10);
        for (int j = 0; j < 5; ++j) {
            const Vec v = s.right_vectors.col(j);
            for (int i = 0; i < 5; ++i)
                if (std::abs(v(i)) > 1e-12) {
                    CHECK(v(i) > 0.0);
                    break;
                }
        }
    }
}

TEST_CASE("minimize_scalar") {
    const ScalarMin a = minimize_scalar([](double x) { return (x - 2.0) * (x - 2.0); }, 0.0, 5.0, 1e-8);
    CHECK(std::abs(a.argmin - 2.0) < 1e-6);
    const ScalarMin b = minimize_scalar([](double x) { return x; }, 0.0, 1.0);
    CHECK(b.argmin == 0.0);
    const ScalarMin c = minimize_scalar([](double x) { return std::cos(x); }, 0.0, 2.0 * std::numbers::pi, 1e-8);
    CHECK(std::abs(c.argmin - std::numbers::pi) < 1e-6);
    CHECK(std::abs(c.value + 1.0) < 1e-12);
    ScalarSearch logs;
    logs.log_spaced = true;
    const ScalarMin d = minimize_scalar([](double x) { return std::pow(std::log(x) - 1.0, 2); }, 1e-3, 1e3, 1e-10, logs);
    CHECK(std::abs(d.argmin - std::numbers::e) < 1e-5);
    CHECK_THROWS(minimize_scalar([](double x) { return x; }, 1.0, 0.0));
}

TEST_CASE("bisect_root") {
    CHECK(std::abs(bisect_root([](double x) { return x - 1.0; }, 0.0, 2.0) - 1.0) < 1e-12);
    CHECK(std::abs(bisect_root([](double x) { return x * x - 2.0; }, 0.0, 2.0) - std::sqrt(2.0)) < 1e-12);
    CHECK(std::abs(bisect_root([](double x) { return gaussian_cdf(x) - 0.5; }, -1.0, 1.0)) < 1e-12);
    CHECK_THROWS_AS(bisect_root([](double x) { return x * x + 1.0; }, -1.0, 1.0), BracketError);
}

TEST_CASE("log_space endpoints") {
    const auto v = log_space(0.01, 10.0, 10);
    REQUIRE(v.size() == 10);
    CHECK(v.front() == doctest::Approx(0.01).epsilon(1e-14));
    CHECK(v.back() == doctest::Approx(10.0).epsilon(1e-14));
    for (std::size_t i = 1; i < v.size(); ++i) CHECK(v[i] / v[i - 1] == doctest::Approx(std::pow(1000.0, 1.0 / 9.0)));
}
