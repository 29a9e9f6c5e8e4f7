#include "projhead/downstream.hpp"

#include "projhead/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace projhead {

EtaProjector EtaProjector::make(double eta, const Vec& mu) {
    if (!(eta > -1.0) || !std::isfinite(eta)) throw DomainError("EtaProjector: eta must exceed -1");
    const double rho = mu.squaredNorm();
    if (!(rho > 0.0)) throw DomainError("EtaProjector: mean must be nonzero");
    return {eta, mu, rho};
}

Mat EtaProjector::matrix() const {
    const Eigen::Index p = mu.size();
    return Mat::Identity(p, p) + (eta / rho) * mu * mu.transpose();
}

Vec EtaProjector::apply(const Vec& h) const {
    if (h.size() != mu.size()) throw ShapeError("EtaProjector: dimension mismatch");
    return h + (eta / rho) * mu.dot(h) * mu;
}

Mat apply_eta(const EtaProjector& proj, const Mat& H) {
    if (H.cols() != proj.mu.size()) throw ShapeError("apply_eta: dimension mismatch");
    // Rank-one update instead of a dense product: Z = H + (eta/rho) (H mu) mu^T.
    const Vec hm = H * proj.mu;
    return H + (proj.eta / proj.rho) * hm * proj.mu.transpose();
}

namespace {

// |P_perp v| / |P_mu v| for a unit direction mu_bar.
double orientation_ratio(const Vec& v, const Vec& mu_bar) {
    const double along = v.dot(mu_bar);
    const double perp = (v - along * mu_bar).norm();
    if (along == 0.0) return std::numeric_limits<double>::infinity();
    return perp / std::abs(along);
}

}  // namespace

MarginFit max_margin(const Mat& Z, const Vec& y, const std::optional<Vec>& mu, const MarginOptions& opt) {
    const Eigen::Index n = Z.rows();
    const Eigen::Index p = Z.cols();
    if (n < 1) throw DomainError("max_margin: need at least one sample");
    if (y.size() != n) throw ShapeError("max_margin: label count mismatch");
    if (mu && mu->size() != p) throw ShapeError("max_margin: mean has wrong length");
    if (!Z.allFinite()) throw DomainError("max_margin: non-finite feature");
    for (Eigen::Index i = 0; i < n; ++i)
        if (y(i) != 1.0 && y(i) != -1.0) throw DomainError("max_margin: labels must be +-1");

    MarginFit fit;
    fit.beta_hat = Vec::Zero(p);
    const Mat X = y.asDiagonal() * Z;  // rows y_i z_i
    const Mat K = X * X.transpose();
    for (Eigen::Index i = 0; i < n; ++i)
        if (!(K(i, i) > 0.0)) return fit;  // a zero feature can never clear a positive margin

    // Dual of min |b|^2/2 s.t. X b >= 1: maximize sum(a) - a^T K a / 2, a >= 0.
    Vec alpha = Vec::Zero(n);
    Vec q = Vec::Zero(n);  // K alpha = margins of w = X^T alpha
    long long updates = 0;
    bool feasible_seen = false;
    bool done = false;

    auto try_polish = [&]() {
        std::vector<Eigen::Index> S;
        for (Eigen::Index i = 0; i < n; ++i)
            if (alpha(i) > 0.0) S.push_back(i);
        if (S.empty()) return false;
        const Eigen::Index s = static_cast<Eigen::Index>(S.size());
        Mat Ks(s, s);
        for (Eigen::Index a = 0; a < s; ++a)
            for (Eigen::Index b = 0; b < s; ++b) Ks(a, b) = K(S[a], S[b]);
        Eigen::LDLT<Mat> ldlt(Ks);
        if (ldlt.info() != Eigen::Success) return false;
        const Vec as = ldlt.solve(Vec::Ones(s));
        if (!as.allFinite() || as.minCoeff() <= 0.0) return false;
        Vec cand = Vec::Zero(n);
        for (Eigen::Index a = 0; a < s; ++a) cand(S[a]) = as(a);
        const Vec qc = K * cand;
        if (qc.minCoeff() < 1.0 - 1e-10) return false;
        if ((qc - Vec::Ones(n)).cwiseProduct(cand).cwiseAbs().maxCoeff() > 1e-8 * (1.0 + cand.maxCoeff())) return false;
        alpha = cand;
        q = qc;
        return true;
    };

    for (int sweep = 0; sweep < opt.max_sweeps && !done; ++sweep) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double old = alpha(i);
            const double next = std::max(0.0, old + (1.0 - q(i)) / K(i, i));
            const double d = next - old;
            if (d != 0.0) {
                alpha(i) = next;
                q.noalias() += d * K.col(i);
            }
            ++updates;
        }
        fit.sweeps = sweep + 1;
        if (!feasible_seen && q.minCoeff() > 0.0) feasible_seen = true;
        if (!feasible_seen && updates >= opt.infeasible_update_budget && sweep >= 100) return fit;
        if (alpha.norm() > opt.alpha_norm_cap) return fit;

        double viol = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            viol = std::max(viol, alpha(i) > 0.0 ? std::abs(1.0 - q(i)) : std::max(0.0, 1.0 - q(i)));
        if (viol <= opt.kkt_tol) done = true;
        else if (feasible_seen && sweep % 10 == 9 && try_polish()) done = true;
    }
    if (!feasible_seen) return fit;

    const Vec w = X.transpose() * alpha;
    const double wn = w.norm();
    if (!(wn > 0.0)) return fit;
    fit.beta_hat = w / wn;
    fit.margin = (X * fit.beta_hat).minCoeff();
    fit.separable = fit.margin > 0.0;
    if (!fit.separable) {
        fit.beta_hat.setZero();
        fit.margin = 0.0;
        return fit;
    }
    if (mu && mu->norm() > 0.0) {
        const Vec mb = mu->normalized();
        fit.u_hat_beta = orientation_ratio(fit.beta_hat, mb);
        fit.u_hat = fit.u_hat_beta;
    }
    return fit;
}

OmegaMarginFit max_margin_omega(const Mat& H, const Vec& y, const EtaProjector& proj, const MarginOptions& opt) {
    OmegaMarginFit out;
    const Mat Z = apply_eta(proj, H);
    out.z_fit = max_margin(Z, y, proj.mu, opt);
    if (!out.z_fit.separable) {
        out.beta_tilde = Vec::Zero(H.cols());
        return out;
    }
    out.beta_tilde = proj.apply(out.z_fit.beta_hat);
    out.margin = (y.asDiagonal() * H * out.beta_tilde).minCoeff();
    out.z_fit.u_hat = orientation_ratio(out.beta_tilde, proj.mu.normalized());
    return out;
}

double gmm_test_error(const Vec& beta, double intercept, const Vec& mu, const std::optional<EtaProjector>& proj) {
    if (beta.size() != mu.size()) throw ShapeError("gmm_test_error: dimension mismatch");
    const Vec w = proj ? proj->apply(beta) : beta;
    const double wn = w.norm();
    if (!(wn > 0.0)) throw DomainError("gmm_test_error: zero direction");
    const double m = mu.dot(w);
    return 0.5 * gaussian_cdf(-(m + intercept) / wn) + 0.5 * gaussian_cdf(-(m - intercept) / wn);
}

namespace {

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double softplus_local(double x) {
    return x > 30.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace

RidgeLogisticFit ridge_logistic_fit(const Mat& Z, const Vec& y, double lambda, int max_iter) {
    const Eigen::Index n = Z.rows();
    const Eigen::Index p = Z.cols();
    if (n < 1) throw DomainError("ridge_logistic_fit: need at least one sample");
    if (y.size() != n) throw ShapeError("ridge_logistic_fit: label count mismatch");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("ridge_logistic_fit: lambda must be >= 0");
    Mat Xb(n, p + 1);
    Xb.col(0).setOnes();
    Xb.rightCols(p) = Z;
    Vec pen = Vec::Constant(p + 1, 2.0 * lambda);
    pen(0) = 0.0;
    const double inv_n = 1.0 / static_cast<double>(n);

    auto objective = [&](const Vec& th) {
        const Vec m = y.cwiseProduct(Xb * th);
        double s = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) s += softplus_local(-m(i));
        return s * inv_n + lambda * th.tail(p).squaredNorm();
    };

    RidgeLogisticFit fit;
    fit.lambda = lambda;
    Vec theta = Vec::Zero(p + 1);
    double f = objective(theta);
    for (int it = 0; it < max_iter; ++it) {
        const Vec m = y.cwiseProduct(Xb * theta);
        Vec coef(n), curv(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double s = sigmoid(-m(i));
            coef(i) = -y(i) * s * inv_n;
            curv(i) = s * (1.0 - s) * inv_n;
        }
        const Vec g = Xb.transpose() * coef + pen.cwiseProduct(theta);
        fit.grad_norm = g.norm();
        fit.iterations = it;
        if (fit.grad_norm <= 1e-10) {
            fit.converged = true;
            break;
        }
        Mat Hs = Xb.transpose() * curv.asDiagonal() * Xb;
        Hs.diagonal() += pen;
        Hs.diagonal().array() += 1e-14;  // keeps the unpenalized separable case solvable
        const Vec step = Hs.ldlt().solve(g);
        double a = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 60; ++ls) {
            const Vec cand = theta - a * step;
            const double fc = objective(cand);
            if (fc <= f - 1e-4 * a * g.dot(step)) {
                theta = cand;
                f = fc;
                moved = true;
                break;
            }
            a *= 0.5;
        }
        if (!moved) {
            fit.converged = fit.grad_norm <= 1e-8;
            break;
        }
    }
    {
        const Vec m = y.cwiseProduct(Xb * theta);
        Vec coef(n);
        for (Eigen::Index i = 0; i < n; ++i) coef(i) = -y(i) * sigmoid(-m(i)) * inv_n;
        fit.grad_norm = (Xb.transpose() * coef + pen.cwiseProduct(theta)).norm();
        if (fit.grad_norm <= 1e-8) fit.converged = true;
    }
    fit.gamma_hat = theta(0);
    fit.beta_hat = theta.tail(p);
    return fit;
}

double psi(double kappa, double lambda_n, double eta, double mu_norm, const Quadrature& quad) {
    const double m = mu_norm;
    // With s = sigmoid(x): (1 + (1-k) e^x) / (1 + e^x)^2 = (1 - s)(1 - k s).
    const double e = expect_gaussian_1d(
        [&](double g) {
            const double s = sigmoid(kappa * m * m + kappa * m * g);
            return (1.0 - s) * (1.0 - kappa * s);
        },
        quad);
    return e - 2.0 * lambda_n * kappa / ((1.0 + eta) * (1.0 + eta));
}

double psi_root(double lambda_n, double eta, double mu_norm, const Quadrature& quad) {
    if (!(lambda_n >= 0.0)) throw DomainError("psi_root: lambda must be >= 0");
    if (!(eta > -1.0)) throw DomainError("psi_root: eta must exceed -1");
    if (!(mu_norm > 0.0)) throw DomainError("psi_root: |mu| must be positive");
    auto g = [&](double k) { return psi(k, lambda_n, eta, mu_norm, quad); };
    double hi = 1.0;
    while (g(hi) > 0.0) {
        hi *= 2.0;
        if (hi > 1e6) throw NumericalError("psi_root: no sign change below 1e6");
    }
    // The bracket is refined until it cannot shrink further in floating point.
    return bisect_root(g, 0.0, hi, 0.0);
}

double lowdim_asymptotic_error(double mu_norm) {
    if (!(mu_norm > 0.0)) throw DomainError("lowdim_asymptotic_error: |mu| must be positive");
    return gaussian_cdf(-mu_norm);
}

}  // namespace projhead
