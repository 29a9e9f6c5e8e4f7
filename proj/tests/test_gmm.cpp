#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "projhead/errors.hpp"
#include "projhead/gmm.hpp"

#include <cmath>

using namespace projhead;

namespace {

Vec unit(int p, int k) {
    Vec v = Vec::Zero(p);
    v(k) = 1.0;
    return v;
}

}  // namespace

TEST_CASE("GmmConfig validation") {
    CHECK_THROWS_AS(make_homogeneous(Vec::Zero(1), 1.0), DomainError);
    CHECK_THROWS_AS(make_homogeneous(Vec::Zero(3), -1.0), DomainError);
    CHECK_THROWS_AS(make_spiked(Vec::Zero(2), 1.0, 1.0, unit(2, 0)), DomainError);
    CHECK_THROWS_AS(make_spiked(Vec::Zero(3), 1.0, -1.0, unit(3, 0)), DomainError);
    CHECK_THROWS_AS(make_spiked(Vec::Zero(3), 1.0, 1.0, 2.0 * unit(3, 0)), DomainError);
    Vec almost = unit(3, 0);
    almost(1) = 1e-5;
    CHECK_THROWS_AS(make_spiked(Vec::Zero(3), 1.0, 1.0, almost), DomainError);
    CHECK_NOTHROW(make_spiked(Vec::Zero(3), 1.0, 1.0, unit(3, 0)));
    GmmConfig bad{3, Vec::Zero(2), 1.0, std::nullopt};
    CHECK_THROWS_AS(bad.validate(), ShapeError);
}

TEST_CASE("mu_perp and spike cosine") {
    Vec mu = 3.0 * unit(4, 0);
    Vec v(4);
    v << 0.5, -std::sqrt(0.75), 0.0, 0.0;
    const GmmConfig cfg = make_spiked(mu, 1.0, 2.0, v);
    CHECK(std::abs(cfg.spike_cosine() - 0.5) < 1e-14);
    const Vec perp = cfg.mu_perp();
    CHECK(std::abs(perp.norm() - 1.0) < 1e-14);
    CHECK(std::abs(perp.dot(mu)) < 1e-14);
    CHECK(cfg.spike_cosine() * perp.dot(v) >= 0.0);
    // v parallel to mu: still an orthonormal fallback
    const GmmConfig par = make_spiked(mu, 1.0, 2.0, unit(4, 0));
    CHECK(std::abs(par.mu_perp().dot(mu)) < 1e-12);
    CHECK(std::abs(par.mu_perp().norm() - 1.0) < 1e-12);
}

TEST_CASE("sample_dataset: law of large numbers and determinism") {
    Vec mu(2);
    mu << 5.0, 0.0;
    const int n = 100000;
    const GmmConfig cfg = make_homogeneous(mu, 1.0);
    const Dataset d = sample_dataset(cfg, n, 42);
    REQUIRE(d.size() == n);
    Vec m = Vec::Zero(2);
    int pos = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        CHECK_UNARY(std::abs(d.labels(i)) == 1.0);
        m += d.labels(i) * d.features.row(i).transpose();
        pos += d.labels(i) > 0;
    }
    m /= n;
    CHECK(std::abs(m(0) - 5.0) <= 4.0 / std::sqrt(n));
    CHECK(std::abs(m(1)) <= 4.0 / std::sqrt(n));
    CHECK(std::abs(pos - n / 2) < 4.0 * std::sqrt(n / 4.0));

    const Dataset again = sample_dataset(cfg, n, 42);
    CHECK(again.features == d.features);
    CHECK(again.labels == d.labels);
    const Dataset other = sample_dataset(cfg, n, 43);
    CHECK(other.features != d.features);

    // mu = 0: class-conditional means are near zero
    const Dataset z = sample_dataset(make_homogeneous(Vec::Zero(2), 1.0), 20000, 7);
    Vec mp = Vec::Zero(2), mn = Vec::Zero(2);
    double np = 0, nn = 0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        if (z.labels(i) > 0) { mp += z.features.row(i).transpose(); ++np; }
        else { mn += z.features.row(i).transpose(); ++nn; }
    }
    CHECK((mp / np).norm() < 0.06);
    CHECK((mn / nn).norm() < 0.06);
}

TEST_CASE("augmented views: zero strength, homogeneous and spiked covariance") {
    Rng rng(3);
    const Vec mu = 2.0 * unit(3, 1);
    LabeledSample parent{rng.normal_vector(3), 1};
    const AugmentedPair same = sample_augmented_pair(make_homogeneous(mu, 0.0), parent, 9);
    CHECK(same.h_plus_a == parent.h0);
    CHECK(same.h_plus_b == parent.h0);

    const int N = 100000;
    const GmmConfig hom = make_homogeneous(mu, 1.0);
    Mat H = Mat::Zero(N, 3);
    Rng r2(10);
    const Mat A = augment_rows(hom, H, r2);
    const Mat C = A.transpose() * A / N;
    CHECK((C - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() < 0.05);

    const double sigma = 0.7;
    const GmmConfig sp = make_spiked(mu, sigma, 5.0, unit(3, 0));
    const Mat B = augment_rows(sp, H, r2);
    const double var1 = B.col(0).squaredNorm() / N;
    CHECK(std::abs(var1 / (6.0 * sigma * sigma) - 1.0) < 0.05);
    const double var2 = B.col(2).squaredNorm() / N;
    CHECK(std::abs(var2 / (sigma * sigma) - 1.0) < 0.05);

    // The pair helper produces views whose difference to the parent matches augment_rows' law.
    Vec acc = Vec::Zero(3);
    for (int i = 0; i < 20000; ++i) {
        const AugmentedPair pr = sample_augmented_pair(sp, parent, derive_seed(5, "pair", {static_cast<std::uint64_t>(i)}));
        acc += (pr.h_plus_a - parent.h0).cwiseAbs2();
    }
    acc /= 20000;
    CHECK(std::abs(acc(0) / (6.0 * sigma * sigma) - 1.0) < 0.05);
}

TEST_CASE("negative-pair difference mixture") {
    const NegativeDiffMixture z = effective_negative_diff_moments(make_homogeneous(Vec::Zero(3), 0.5));
    REQUIRE(z.weights.size() == 1);
    CHECK(z.atoms[0].norm() == 0.0);
    CHECK((z.covariance - 2.0 * 1.25 * Mat::Identity(3, 3)).norm() < 1e-14);

    const Vec mu = 1.5 * unit(3, 2);
    const NegativeDiffMixture h = effective_negative_diff_moments(make_homogeneous(mu, 1.0));
    REQUIRE(h.weights.size() == 3);
    CHECK(h.weights[0] == 0.5);
    CHECK(h.weights[1] == 0.25);
    CHECK(h.weights[2] == 0.25);
    CHECK(h.atoms[0].norm() == 0.0);
    CHECK((h.atoms[1] - 2.0 * mu).norm() < 1e-15);
    CHECK((h.atoms[2] + 2.0 * mu).norm() < 1e-15);

    const Vec v = unit(3, 0);
    const NegativeDiffMixture s = effective_negative_diff_moments(make_spiked(mu, 0.5, 4.0, v));
    const Mat expected = 2.0 * (Mat::Identity(3, 3) + 0.25 * (Mat::Identity(3, 3) + 4.0 * v * v.transpose()));
    CHECK((s.covariance - expected).norm() < 1e-14);
}

TEST_CASE("derive_seed separates tags and coordinates") {
    CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
    CHECK(derive_seed(1, "a", {1}) != derive_seed(1, "a", {2}));
    CHECK(derive_seed(1, "a", {1, 2}) != derive_seed(1, "a", {2, 1}));
    CHECK(derive_seed(1, "a", {1}) == derive_seed(1, "a", std::vector<std::uint64_t>{1}));
    CHECK(double_bits(0.5) != double_bits(0.25));
}
