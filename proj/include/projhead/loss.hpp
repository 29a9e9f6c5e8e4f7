// Contrastive losses for a linear projector: the canonical empirical SimCLR
// loss with its gradient, and closed forms of the modified population loss,
// its first-order approximation, the sandwich gap, and the finite-sample loss.
#pragma once

#include "projhead/gmm.hpp"
#include "projhead/numerics.hpp"

#include <vector>

namespace projhead {

// p x p linear map with its SVD computed once at construction.
class Projector {
public:
    explicit Projector(Mat W);

    const Mat& matrix() const { return W_; }
    const SvdTriple& svd() const { return svd_; }
    int dim() const { return static_cast<int>(W_.cols()); }
    double frob_sq() const { return W_.squaredNorm(); }

private:
    Mat W_;
    SvdTriple svd_;
};

struct LossContext {
    GmmConfig cfg;
    double tau = 1.0;

    void validate() const;
};

struct LossBreakdown {
    double align = 0.0;
    double unif = 0.0;
    double total = 0.0;
    double alpha = 0.0;
    double t = 0.0;
};

// Canonical SimCLR loss with cosine similarity and two views per sample:
//   -(1/tau) sum_i sum_{k != k'} sim(z_ik, z_ik')
//   + sum_{i,k} log sum_{(j,k') != (i,k)} exp(sim(z_ik, z_jk') / tau).
// The terms are returned separately; `total` is their sum.
struct SimclrValue {
    double align = 0.0;
    double unif = 0.0;
    double total = 0.0;
};

// Views A and B are n x p (row i of each is one view of sample i).
SimclrValue simclr_loss(const Mat& W, const Mat& A, const Mat& B, double tau);
// Loss together with d loss / d W.
SimclrValue simclr_loss_and_grad(const Mat& W, const Mat& A, const Mat& B, double tau, Mat& grad);

double empirical_simclr_loss(const Projector& W, const std::vector<AugmentedPair>& batch, double tau);
Mat empirical_simclr_grad(const Projector& W, const std::vector<AugmentedPair>& batch, double tau);

// Stacks a batch of pairs into two view matrices.
void stack_views(const std::vector<AugmentedPair>& batch, Mat& A, Mat& B);

// Closed-form population loss under the homogeneous model.
LossBreakdown population_loss(const Projector& W, const LossContext& ctx);

// Feasible interval of t = |W|_F^2 / alpha for the homogeneous model.
struct Interval {
    double lo;
    double hi;
};
Interval t_interval(double sigma_aug_sq, double mu_norm_sq);

// First-order approximation as a function of t (domain-checked, tolerance
// 1e-9) or of a projector (homogeneous model).
double approx_loss_t(double t, double sigma_aug_sq, double mu_norm_sq, double tau);
double approx_loss(double t, const LossContext& ctx);
double approx_loss(const Projector& W, const LossContext& ctx);

// Gap bound: approx <= population <= approx + delta.
double sandwich_upper_delta(const Projector& W, const LossContext& ctx);

// Closed-form loss with the augmentation expectations taken exactly and the
// feature average taken over the given dataset.
double finite_sample_loss(const Projector& W, const Dataset& data, const LossContext& ctx);

}  // namespace projhead
