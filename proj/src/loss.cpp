#include "projhead/loss.hpp"

#include "projhead/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace projhead {

Projector::Projector(Mat W) : W_(std::move(W)) {
    if (W_.rows() != W_.cols()) throw ShapeError("Projector: matrix must be square");
    if (!W_.allFinite()) throw DomainError("Projector: non-finite entry");
    if (!(W_.norm() > 0.0)) throw DomainError("Projector: zero projector");
    svd_ = svd_descending(W_);
}

void LossContext::validate() const {
    cfg.validate();
    if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("LossContext: temperature must be positive");
}

namespace {

void check_tau(double tau) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("temperature must be positive");
}

// Shared body of the SimCLR loss; fills grad when requested.
SimclrValue simclr_impl(const Mat& W, const Mat& A, const Mat& B, double tau, Mat* grad) {
    check_tau(tau);
    const Eigen::Index n = A.rows();
    const Eigen::Index p = W.cols();
    if (n < 2) throw DomainError("simclr_loss: batch needs at least two samples");
    if (B.rows() != n || A.cols() != p || B.cols() != p || W.rows() != p)
        throw ShapeError("simclr_loss: view dimensions do not match the projector");
    const Eigen::Index m = 2 * n;
    Mat V(m, p);
    V << A, B;
    const Mat Z = V * W.transpose();
    Vec norms = Z.rowwise().norm();
    for (Eigen::Index a = 0; a < m; ++a)
        if (!(norms(a) > 0.0)) throw DegenerateEmbeddingError("simclr_loss: embedding with zero norm");
    const Mat U = norms.cwiseInverse().asDiagonal() * Z;
    // Only the lower triangle is computed by the rank update; mirror it.
    Mat S = Mat::Zero(m, m);
    S.selfadjointView<Eigen::Lower>().rankUpdate(U, 1.0 / tau);
    S.triangularView<Eigen::StrictlyUpper>() = S.transpose();

    // S is symmetric, so row a is read as column a (contiguous storage).
    SimclrValue out;
    Mat P;  // column a holds the softmax over b != a, minus the positive indicator
    if (grad) P.resize(m, m);
    Eigen::ArrayXd col(m);
    for (Eigen::Index a = 0; a < m; ++a) {
        const Eigen::Index pos = (a + n) % m;
        out.align -= S(pos, a);
        col = S.col(a).array();
        col(a) = -std::numeric_limits<double>::infinity();
        const double mx = col.maxCoeff();
        col = (col - mx).exp();
        const double sum = col.sum();
        out.unif += mx + std::log(sum);
        if (grad) {
            P.col(a) = col.matrix() / sum;
            P(pos, a) -= 1.0;
        }
    }
    out.total = out.align + out.unif;
    if (!std::isfinite(out.total)) throw NumericalError("simclr_loss: non-finite value");
    if (grad) {
        // d loss / d sim(a,b) = P(a,b)/tau; sim is symmetric in its arguments.
        P += P.transpose().eval();
        const Mat Gu = (P * U) / tau;
        Mat dZ(m, p);
        for (Eigen::Index a = 0; a < m; ++a) {
            const double proj = Gu.row(a).dot(U.row(a));
            dZ.row(a) = (Gu.row(a) - proj * U.row(a)) / norms(a);
        }
        *grad = dZ.transpose() * V;
    }
    return out;
}

}  // namespace

SimclrValue simclr_loss(const Mat& W, const Mat& A, const Mat& B, double tau) {
    return simclr_impl(W, A, B, tau, nullptr);
}

SimclrValue simclr_loss_and_grad(const Mat& W, const Mat& A, const Mat& B, double tau, Mat& grad) {
    return simclr_impl(W, A, B, tau, &grad);
}

void stack_views(const std::vector<AugmentedPair>& batch, Mat& A, Mat& B) {
    if (batch.empty()) throw DomainError("stack_views: empty batch");
    const Eigen::Index p = batch.front().h_plus_a.size();
    A.resize(static_cast<Eigen::Index>(batch.size()), p);
    B.resize(static_cast<Eigen::Index>(batch.size()), p);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (batch[i].h_plus_a.size() != p || batch[i].h_plus_b.size() != p)
            throw ShapeError("stack_views: ragged batch");
        A.row(static_cast<Eigen::Index>(i)) = batch[i].h_plus_a.transpose();
        B.row(static_cast<Eigen::Index>(i)) = batch[i].h_plus_b.transpose();
    }
}

double empirical_simclr_loss(const Projector& W, const std::vector<AugmentedPair>& batch, double tau) {
    Mat A, B;
    stack_views(batch, A, B);
    return simclr_loss(W.matrix(), A, B, tau).total;
}

Mat empirical_simclr_grad(const Projector& W, const std::vector<AugmentedPair>& batch, double tau) {
    Mat A, B, G;
    stack_views(batch, A, B);
    simclr_loss_and_grad(W.matrix(), A, B, tau, G);
    return G;
}

namespace {

void require_homogeneous(const LossContext& ctx, const char* who) {
    ctx.validate();
    if (ctx.cfg.spike) throw WrongModelError(std::string(who) + ": spiked model, use the spiked variant");
}

void require_dim(const Projector& W, const GmmConfig& cfg) {
    if (W.dim() != cfg.p) throw ShapeError("projector dimension does not match the model");
}

}  // namespace

LossBreakdown population_loss(const Projector& W, const LossContext& ctx) {
    require_homogeneous(ctx, "population_loss");
    require_dim(W, ctx.cfg);
    const double s2 = ctx.cfg.sigma_aug_sq();
    const double r = 1.0 + s2;
    const double fro = W.frob_sq();
    const double wmu = (W.matrix() * ctx.cfg.mu).squaredNorm();
    const double alpha = r * fro + wmu;
    const double ta = ctx.tau * alpha;
    const SvdTriple& svd = W.svd();
    double logdet = 0.0, signal = 0.0;
    for (Eigen::Index j = 0; j < svd.singular_values.size(); ++j) {
        const double sj2 = svd.singular_values(j) * svd.singular_values(j);
        const double proj = ctx.cfg.mu.dot(svd.right_vectors.col(j));
        logdet += std::log1p(2.0 * r * sj2 / ta);
        signal += 2.0 * sj2 * proj * proj / (2.0 * r * sj2 + ta);
    }
    LossBreakdown out;
    out.alpha = alpha;
    out.t = fro / alpha;
    out.align = s2 * fro / ta;
    out.unif = -std::numbers::ln2 - 0.5 * logdet + softplus(-signal);
    out.total = out.align + out.unif;
    return out;
}

Interval t_interval(double sigma_aug_sq, double mu_norm_sq) {
    return {1.0 / (1.0 + sigma_aug_sq + mu_norm_sq), 1.0 / (1.0 + sigma_aug_sq)};
}

double approx_loss_t(double t, double sigma_aug_sq, double mu_norm_sq, double tau) {
    check_tau(tau);
    const Interval iv = t_interval(sigma_aug_sq, mu_norm_sq);
    if (!(t >= iv.lo - 1e-9 && t <= iv.hi + 1e-9)) throw DomainError("approx_loss: t outside the feasible interval");
    const double r = 1.0 + sigma_aug_sq;
    const double x = -2.0 / tau + 2.0 * r * t / tau;
    return -t / tau - std::numbers::ln2 + softplus(x);
}

double approx_loss(double t, const LossContext& ctx) {
    require_homogeneous(ctx, "approx_loss");
    return approx_loss_t(t, ctx.cfg.sigma_aug_sq(), ctx.cfg.mu_norm_sq(), ctx.tau);
}

double approx_loss(const Projector& W, const LossContext& ctx) {
    require_homogeneous(ctx, "approx_loss");
    require_dim(W, ctx.cfg);
    const double r = 1.0 + ctx.cfg.sigma_aug_sq();
    const double fro = W.frob_sq();
    const double wmu = (W.matrix() * ctx.cfg.mu).squaredNorm();
    const double alpha = r * fro + wmu;
    // Written directly in terms of |W|^2 and |W mu|^2 to avoid cancellation.
    return -fro / (ctx.tau * alpha) - std::numbers::ln2 + softplus(-2.0 * wmu / (ctx.tau * alpha));
}

double sandwich_upper_delta(const Projector& W, const LossContext& ctx) {
    require_homogeneous(ctx, "sandwich_upper_delta");
    require_dim(W, ctx.cfg);
    const double r = 1.0 + ctx.cfg.sigma_aug_sq();
    const double fro = W.frob_sq();
    const double wmu = (W.matrix() * ctx.cfg.mu).squaredNorm();
    const double ta = ctx.tau * (r * fro + wmu);
    const SvdTriple& svd = W.svd();
    double quad = 0.0, signal = 0.0;
    for (Eigen::Index j = 0; j < svd.singular_values.size(); ++j) {
        const double sj4 = std::pow(svd.singular_values(j), 4);
        const double proj = ctx.cfg.mu.dot(svd.right_vectors.col(j));
        quad += r * r * sj4 / (ta * ta);
        signal += 4.0 * r * sj4 * proj * proj / (ta * ta);
    }
    return quad + std::exp(-wmu / ta) * std::expm1(signal);
}

double finite_sample_loss(const Projector& W, const Dataset& data, const LossContext& ctx) {
    require_homogeneous(ctx, "finite_sample_loss");
    require_dim(W, ctx.cfg);
    const Eigen::Index n = data.size();
    if (n < 1) throw DomainError("finite_sample_loss: empty dataset");
    if (data.features.cols() != ctx.cfg.p) throw ShapeError("finite_sample_loss: feature dimension mismatch");
    if (!data.features.allFinite()) throw DomainError("finite_sample_loss: non-finite feature");
    const double s2 = ctx.cfg.sigma_aug_sq();
    const double r = 1.0 + s2;
    const double fro = W.frob_sq();
    const double wmu = (W.matrix() * ctx.cfg.mu).squaredNorm();
    const double ta = ctx.tau * (r * fro + wmu);
    const double b = (1.0 + 2.0 * s2) / ta;
    const SvdTriple& svd = W.svd();
    const Eigen::Index p = ctx.cfg.p;
    // Eigenvalues of I - M in the right-singular basis, and log det M.
    Vec shrink(p);
    double logdet_m = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
        const double x = b * svd.singular_values(j) * svd.singular_values(j);
        shrink(j) = x / (1.0 + x);
        logdet_m -= std::log1p(x);
    }
    const Mat proj = data.features * svd.right_vectors;           // n x p
    const Vec mu_proj = svd.right_vectors.transpose() * ctx.cfg.mu;  // p
    const double scale = 1.0 / (2.0 * (1.0 + 2.0 * s2));
    std::vector<double> expo;
    expo.reserve(static_cast<std::size_t>(2 * n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vec row = proj.row(i).transpose();
        const double qm = (row - mu_proj).cwiseAbs2().dot(shrink);
        const double qp = (row + mu_proj).cwiseAbs2().dot(shrink);
        expo.push_back(-scale * qm);
        expo.push_back(-scale * qp);
    }
    double mx = -std::numeric_limits<double>::infinity();
    for (double e : expo) mx = std::max(mx, e);
    double sum = 0.0;
    for (double e : expo) sum += std::exp(e - mx);
    const double log_mean_s = mx + std::log(sum) - std::log(static_cast<double>(n));
    return -std::numbers::ln2 + s2 * fro / ta + 0.5 * logdet_m + log_mean_s;
}

}  // namespace projhead
