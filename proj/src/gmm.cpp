#include "projhead/gmm.hpp"

#include "projhead/errors.hpp"

#include <bit>
#include <cmath>

namespace projhead {

void GmmConfig::validate() const {
    if (p < 2) throw DomainError("GmmConfig: dimension must be at least 2");
    if (mu.size() != p) throw ShapeError("GmmConfig: mean has wrong length");
    if (!mu.allFinite()) throw DomainError("GmmConfig: non-finite mean");
    if (!(sigma_aug >= 0.0) || !std::isfinite(sigma_aug))
        throw DomainError("GmmConfig: augmentation std must be nonnegative");
    if (spike) {
        if (p < 3) throw DomainError("GmmConfig: spiked model needs dimension >= 3");
        if (!(spike->rho_aug >= 0.0) || !std::isfinite(spike->rho_aug))
            throw DomainError("GmmConfig: spike strength must be nonnegative");
        if (spike->v_aug.size() != p) throw ShapeError("GmmConfig: spike direction has wrong length");
        if (std::abs(spike->v_aug.norm() - 1.0) > 1e-12)
            throw DomainError("GmmConfig: spike direction must be a unit vector");
    }
}

Vec GmmConfig::mu_bar() const {
    const double n = mu.norm();
    if (!(n > 0.0)) throw DomainError("GmmConfig: zero mean has no direction");
    return mu / n;
}

double GmmConfig::spike_cosine() const {
    if (!spike) return 0.0;
    return mu_bar().dot(spike->v_aug);
}

Vec GmmConfig::mu_perp() const {
    const Vec mb = mu_bar();
    Vec candidate;
    if (spike) {
        const double r = mb.dot(spike->v_aug);
        candidate = spike->v_aug - r * mb;
        if (candidate.norm() > 1e-12) {
            candidate.normalize();
            // r <mu_perp, v_aug> = r * |v - r mb| >= 0 needs a flip when r < 0.
            if (r < 0.0) candidate = -candidate;
            return candidate;
        }
    }
    // Any unit vector orthogonal to mu: Gram-Schmidt on the first usable axis.
    for (int i = 0; i < p; ++i) {
        candidate = Vec::Unit(p, i) - mb(i) * mb;
        if (candidate.norm() > 1e-6) return candidate.normalized();
    }
    throw NumericalError("GmmConfig: could not build an orthogonal direction");
}

GmmConfig make_homogeneous(const Vec& mu, double sigma_aug) {
    GmmConfig cfg{static_cast<int>(mu.size()), mu, sigma_aug, std::nullopt};
    cfg.validate();
    return cfg;
}

GmmConfig make_spiked(const Vec& mu, double sigma_aug, double rho_aug, const Vec& v_aug) {
    GmmConfig cfg{static_cast<int>(mu.size()), mu, sigma_aug, Spike{rho_aug, v_aug}};
    cfg.validate();
    return cfg;
}

LabeledSample Dataset::sample(Eigen::Index i) const {
    return {features.row(i).transpose(), labels(i) > 0 ? 1 : -1};
}

Vec Rng::normal_vector(Eigen::Index n) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
    return v;
}

Mat Rng::normal_matrix(Eigen::Index rows, Eigen::Index cols) {
    Mat m(rows, cols);
    // Fill row by row so that the stream order matches sample order.
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal();
    return m;
}

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                          const std::vector<std::uint64_t>& coords) {
    std::uint64_t h = mix64(base);
    for (unsigned char c : tag) h = mix64(h ^ c);
    h = mix64(h ^ 0xffULL);
    for (std::uint64_t c : coords) h = mix64(h ^ c);
    return h;
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                          std::initializer_list<std::uint64_t> coords) {
    return derive_seed(base, tag, std::vector<std::uint64_t>(coords));
}

std::uint64_t double_bits(double x) {
    if (x == 0.0) x = 0.0;  // fold -0 into +0
    return std::bit_cast<std::uint64_t>(x);
}

Dataset sample_dataset(const GmmConfig& cfg, int n, std::uint64_t seed) {
    cfg.validate();
    if (n < 1) throw DomainError("sample_dataset: need at least one sample");
    Rng rng(seed);
    Dataset d{Mat(n, cfg.p), Vec(n)};
    for (int i = 0; i < n; ++i) {
        const int y = rng.sign();
        d.labels(i) = y;
        for (int j = 0; j < cfg.p; ++j) d.features(i, j) = y * cfg.mu(j) + rng.normal();
    }
    return d;
}

namespace {

// Adds sigma_aug * A^{1/2} g to x in place, using
// A^{1/2} g = g + (sqrt(1+rho) - 1) <g, v> v.
template <typename Row>
void add_noise(const GmmConfig& cfg, Row&& x, Rng& rng) {
    if (cfg.sigma_aug == 0.0) return;
    Vec g = rng.normal_vector(cfg.p);
    if (cfg.spike && cfg.spike->rho_aug > 0.0) {
        const Vec& v = cfg.spike->v_aug;
        g += (std::sqrt(1.0 + cfg.spike->rho_aug) - 1.0) * g.dot(v) * v;
    }
    x += cfg.sigma_aug * g;
}

}  // namespace

AugmentedPair sample_augmented_pair(const GmmConfig& cfg, const LabeledSample& parent,
                                    std::uint64_t seed) {
    if (parent.h0.size() != cfg.p) throw ShapeError("sample_augmented_pair: dimension mismatch");
    Rng rng(seed);
    AugmentedPair out{parent.h0, parent.h0, parent};
    add_noise(cfg, out.h_plus_a, rng);
    add_noise(cfg, out.h_plus_b, rng);
    return out;
}

Mat augment_rows(const GmmConfig& cfg, const Mat& H, Rng& rng) {
    if (H.cols() != cfg.p) throw ShapeError("augment_rows: dimension mismatch");
    Mat out = H;
    for (Eigen::Index i = 0; i < H.rows(); ++i) {
        Vec row = out.row(i).transpose();
        add_noise(cfg, row, rng);
        out.row(i) = row.transpose();
    }
    return out;
}

NegativeDiffMixture effective_negative_diff_moments(const GmmConfig& cfg) {
    cfg.validate();
    NegativeDiffMixture m;
    const double s2 = cfg.sigma_aug_sq();
    Mat A = Mat::Identity(cfg.p, cfg.p);
    if (cfg.spike) A += cfg.spike->rho_aug * cfg.spike->v_aug * cfg.spike->v_aug.transpose();
    m.covariance = 2.0 * (Mat::Identity(cfg.p, cfg.p) + s2 * A);
    if (cfg.mu.norm() == 0.0) {
        m.weights = {1.0};
        m.atoms = {Vec::Zero(cfg.p)};
    } else {
        m.weights = {0.5, 0.25, 0.25};
        m.atoms = {Vec::Zero(cfg.p), 2.0 * cfg.mu, -2.0 * cfg.mu};
    }
    return m;
}

}  // namespace projhead
