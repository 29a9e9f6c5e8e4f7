// Downstream linear classification on projected features: the one-parameter
// projector family, hard max-margin classification, ridge logistic
// regression with an intercept, its population fixed point, and exact test
// errors under the Gaussian mixture.
#pragma once

#include "projhead/numerics.hpp"

#include <optional>

namespace projhead {

// W = I + (eta / rho) mu mu^T with rho = |mu|^2; scales the signal
// direction by (1 + eta) and fixes its orthogonal complement.
struct EtaProjector {
    double eta = 0.0;
    Vec mu;
    double rho = 0.0;

    static EtaProjector make(double eta, const Vec& mu);
    Mat matrix() const;
    Vec apply(const Vec& h) const;
};

// Z = H W^T (rows are samples).
Mat apply_eta(const EtaProjector& proj, const Mat& H);

struct MarginFit {
    Vec beta_hat;        // unit vector, or zero when not separable
    double margin = 0.0; // min_i y_i <z_i, beta_hat>
    // Orthogonal/signal ratio |P_perp W beta| / |P_mu W beta| in feature
    // space (the quantity the asymptotic theory predicts).
    double u_hat = 0.0;
    // Same ratio computed on beta_hat itself, without the projector.
    double u_hat_beta = 0.0;
    bool separable = false;
    int sweeps = 0;
};

struct MarginOptions {
    double alpha_norm_cap = 1e8;  // dual iterate norm beyond which data are declared inseparable
    long long infeasible_update_budget = 100000;  // coordinate updates allowed before a separating direction appears
    int max_sweeps = 200000;
    double kkt_tol = 1e-10;
};

// l2 max-margin direction without intercept. The orientation ratios are
// computed relative to `mu` when provided (otherwise left at zero).
MarginFit max_margin(const Mat& Z, const Vec& y, const std::optional<Vec>& mu = std::nullopt,
                     const MarginOptions& opt = {});

// Same problem posed in feature space with the norm induced by the
// projector: returns the feature-space direction W beta_hat (normalized) and
// the margin of the z-space problem, with ratios computed through W.
struct OmegaMarginFit {
    MarginFit z_fit;      // solution of max_margin on Z = H W^T
    Vec beta_tilde;       // W beta_hat, the equivalent feature-space direction
    double margin = 0.0;  // min_i y_i <h_i, beta_tilde>, equal to z_fit.margin
};
OmegaMarginFit max_margin_omega(const Mat& H, const Vec& y, const EtaProjector& proj,
                                const MarginOptions& opt = {});

// Exact misclassification rate of x -> sign(<x, w> + intercept) on fresh
// mixture data, with w = W beta when a projector is given.
double gmm_test_error(const Vec& beta, double intercept, const Vec& mu,
                      const std::optional<EtaProjector>& proj = std::nullopt);

struct RidgeLogisticFit {
    double gamma_hat = 0.0;
    Vec beta_hat;
    double lambda = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Minimizes mean_i log(1 + exp(-y_i (gamma + <z_i, beta>))) + lambda |beta|^2
// by damped Newton from zero; the intercept is not penalized.
RidgeLogisticFit ridge_logistic_fit(const Mat& Z, const Vec& y, double lambda, int max_iter = 200);

// Population fixed-point function whose zero gives the ridge-logistic
// solution scale along mu.
double psi(double kappa, double lambda_n, double eta, double mu_norm, const Quadrature& quad);
double psi_root(double lambda_n, double eta, double mu_norm, const Quadrature& quad);

// Leading-order low-dimensional error Phi(-|mu|).
double lowdim_asymptotic_error(double mu_norm);

}  // namespace projhead
