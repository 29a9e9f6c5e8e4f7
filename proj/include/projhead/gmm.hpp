// Two-component Gaussian mixture features and conditionally Gaussian
// augmentations, with an optional one-spike augmentation covariance.
#pragma once

#include "projhead/numerics.hpp"

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

namespace projhead {

// Augmentation covariance I + strength * direction direction^T.
struct Spike {
    double rho_aug = 0.0;
    Vec v_aug;
};

struct GmmConfig {
    int p = 0;
    Vec mu;               // half the class-mean difference
    double sigma_aug = 0.0;
    std::optional<Spike> spike;

    // Throws DomainError/ShapeError if invariants fail.
    void validate() const;

    double mu_norm_sq() const { return mu.squaredNorm(); }
    double sigma_aug_sq() const { return sigma_aug * sigma_aug; }
    Vec mu_bar() const;
    // Cosine between mu and the spike direction (0 without spike).
    double spike_cosine() const;
    // Unit vector in span(mu, v_aug), orthogonal to mu, oriented so that
    // r <v_aug, mu_perp> >= 0. Falls back to any orthogonal unit vector when
    // v_aug is parallel to mu.
    Vec mu_perp() const;
};

// Convenience constructors.
GmmConfig make_homogeneous(const Vec& mu, double sigma_aug);
GmmConfig make_spiked(const Vec& mu, double sigma_aug, double rho_aug, const Vec& v_aug);

struct LabeledSample {
    Vec h0;
    int y = 1;
};

struct AugmentedPair {
    Vec h_plus_a;
    Vec h_plus_b;
    LabeledSample parent;
};

// Rows are samples.
struct Dataset {
    Mat features;  // n x p
    Vec labels;    // n, entries +-1

    Eigen::Index size() const { return features.rows(); }
    LabeledSample sample(Eigen::Index i) const;
};

// Seeded generator. Streams for independent tasks are obtained by hashing a
// base seed with task coordinates (derive_seed), never by sharing state.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }
    int sign() { return (engine_() >> 63) ? 1 : -1; }
    std::uint64_t next() { return engine_(); }
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }
    Vec normal_vector(Eigen::Index n);
    Mat normal_matrix(Eigen::Index rows, Eigen::Index cols);

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);
// Hash of (base seed, tag, coordinates) used for per-task streams.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                          std::initializer_list<std::uint64_t> coords = {});
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                          const std::vector<std::uint64_t>& coords);
// Bit pattern of a double, for hashing real-valued grid coordinates.
std::uint64_t double_bits(double x);

// n labeled features: y uniform on {+-1}, h0 = y mu + N(0, I).
Dataset sample_dataset(const GmmConfig& cfg, int n, std::uint64_t seed);

// Two conditionally independent views of one parent.
AugmentedPair sample_augmented_pair(const GmmConfig& cfg, const LabeledSample& parent,
                                    std::uint64_t seed);

// One augmented view per row of H (rows are parents), drawn from rng.
Mat augment_rows(const GmmConfig& cfg, const Mat& H, Rng& rng);

// Law of h - h^- for a negative pair: a three-atom mixture on the mean plus
// a Gaussian with the given covariance.
struct NegativeDiffMixture {
    std::vector<double> weights;
    std::vector<Vec> atoms;
    Mat covariance;
};
NegativeDiffMixture effective_negative_diff_moments(const GmmConfig& cfg);

}  // namespace projhead
