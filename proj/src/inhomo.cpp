#include "projhead/inhomo.hpp"

#include "projhead/errors.hpp"
#include "projhead/phase.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace projhead {

void InhomoConfig::validate() const {
    if (!(mu_norm_sq > 0.0) || !std::isfinite(mu_norm_sq)) throw DomainError("InhomoConfig: |mu|^2 must be positive");
    if (!(sigma_aug_sq >= 0.0) || !std::isfinite(sigma_aug_sq)) throw DomainError("InhomoConfig: sigma_aug^2 must be >= 0");
    if (!(rho_aug >= 0.0) || !std::isfinite(rho_aug)) throw DomainError("InhomoConfig: spike strength must be >= 0");
    if (!(std::abs(r) <= 1.0)) throw DomainError("InhomoConfig: cosine must lie in [-1, 1]");
    if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("InhomoConfig: tau must be positive");
}

double InhomoConfig::a() const {
    return std::sqrt(std::max(0.0, 1.0 - r * r));
}

InhomoConfig inhomo_config_from(const GmmConfig& cfg, double tau) {
    cfg.validate();
    InhomoConfig out;
    out.mu_norm_sq = cfg.mu_norm_sq();
    out.sigma_aug_sq = cfg.sigma_aug_sq();
    out.rho_aug = cfg.spike ? cfg.spike->rho_aug : 0.0;
    out.r = cfg.spike_cosine();
    out.tau = tau;
    out.validate();
    return out;
}

std::string to_string(InhomoPhase p) {
    switch (p) {
        case InhomoPhase::BothShrink: return "both_shrink";
        case InhomoPhase::SimultaneousES: return "simultaneous_expand_shrink";
        case InhomoPhase::BothExpand: return "both_expand";
        case InhomoPhase::AlignedExpand: return "aligned_expand";
        case InhomoPhase::Degenerate: return "degenerate";
    }
    return "unknown";
}

namespace {

struct SpikeParts {
    double s2, rho;
    Vec v;
};

SpikeParts spike_parts(const GmmConfig& cfg, const Projector& W, double tau) {
    cfg.validate();
    if (!cfg.spike) throw WrongModelError("spiked loss called without a spike");
    if (W.dim() != cfg.p) throw ShapeError("projector dimension does not match the model");
    if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("temperature must be positive");
    return {cfg.sigma_aug_sq(), cfg.spike->rho_aug, cfg.spike->v_aug};
}

}  // namespace

LossBreakdown population_loss_inhomo(const Projector& W, const GmmConfig& cfg, double tau) {
    const SpikeParts sp = spike_parts(cfg, W, tau);
    const Mat& M = W.matrix();
    const double fro = W.frob_sq();
    const double wmu = (M * cfg.mu).squaredNorm();
    const double wv = (M * sp.v).squaredNorm();
    const double trace_waw = fro + sp.rho * wv;  // Tr(W A W^T)
    const double alpha = fro + wmu + sp.s2 * trace_waw;
    const double ta = tau * alpha;

    // (I + s2 A)^{1/2} has eigenvalue sqrt(1+s2+s2 rho) on v and sqrt(1+s2) elsewhere.
    const double base = std::sqrt(1.0 + sp.s2);
    const double top = std::sqrt(1.0 + sp.s2 + sp.s2 * sp.rho);
    const Mat Wt = base * M + (top - base) * (M * sp.v) * sp.v.transpose();
    const Vec mut = cfg.mu / base + (1.0 / top - 1.0 / base) * sp.v.dot(cfg.mu) * sp.v;
    const SvdTriple svd = svd_descending(Wt);
    double logdet = 0.0, signal = 0.0;
    for (Eigen::Index j = 0; j < svd.singular_values.size(); ++j) {
        const double sj2 = svd.singular_values(j) * svd.singular_values(j);
        const double proj = mut.dot(svd.right_vectors.col(j));
        logdet += std::log1p(2.0 * sj2 / ta);
        signal += 2.0 * sj2 * proj * proj / (2.0 * sj2 + ta);
    }
    LossBreakdown out;
    out.alpha = alpha;
    out.t = fro / alpha;
    out.align = sp.s2 * trace_waw / ta;
    out.unif = -0.5 * logdet + softplus(-signal) - std::numbers::ln2;
    out.total = out.align + out.unif;
    return out;
}

double approx_loss_inhomo(const Projector& W, const GmmConfig& cfg, double tau) {
    const SpikeParts sp = spike_parts(cfg, W, tau);
    const Mat& M = W.matrix();
    const double fro = W.frob_sq();
    const double wmu = (M * cfg.mu).squaredNorm();
    const double wv = (M * sp.v).squaredNorm();
    const double alpha = (1.0 + sp.s2) * fro + wmu + sp.s2 * sp.rho * wv;
    return -fro / (tau * alpha) + softplus(-2.0 * wmu / (tau * alpha)) - std::numbers::ln2;
}

double objective_T(double T, const InhomoConfig& cfg) {
    if (!(T >= 0.0 && T <= 1.0)) throw DomainError("objective_T: T must lie in [0, 1]");
    // The problem is symmetric under v_aug -> -v_aug, so only |r| matters.
    const double r = std::abs(cfg.r);
    const double kink = std::max(0.0, r * std::sqrt(T) - cfg.a() * std::sqrt(1.0 - T));
    const double h = (1.0 + cfg.sigma_aug_sq) + cfg.mu_norm_sq * T + cfg.rho_aug * cfg.sigma_aug_sq * kink * kink;
    return -1.0 / (cfg.tau * h) + softplus(-2.0 * cfg.mu_norm_sq * T / (cfg.tau * h));
}

double tau1_star(const InhomoConfig& cfg) {
    cfg.validate();
    if (!(cfg.sigma_aug_sq > 0.0)) throw DegenerateError("tau1_star: zero augmentation has no threshold");
    const double a2 = 1.0 - cfg.r * cfg.r;
    return 2.0 * a2 * cfg.mu_norm_sq / (std::log1p(2.0 * cfg.sigma_aug_sq) * (1.0 + cfg.sigma_aug_sq + a2 * cfg.mu_norm_sq));
}

double T_star_small_tau(const InhomoConfig& cfg) {
    const double l = std::log1p(2.0 * cfg.sigma_aug_sq);
    return cfg.tau * (1.0 + cfg.sigma_aug_sq) / (2.0 * cfg.mu_norm_sq) * l / (1.0 - 0.5 * cfg.tau * l);
}

double aligned_spike_expansion_margin(const InhomoConfig& cfg) {
    const double m = cfg.mu_norm_sq, s2 = cfg.sigma_aug_sq, rho = cfg.rho_aug;
    const double arg = 2.0 * (1.0 + s2) * m / (m + rho * s2) - 1.0;
    if (!(arg > 0.0)) return -std::numeric_limits<double>::infinity();
    return cfg.tau * std::log(arg) - 2.0 * m / (1.0 + s2 + m + rho * s2);
}

namespace {

bool nondegenerate(const InhomoConfig& cfg) {
    return cfg.rho_aug > 0.0 && std::abs(cfg.r) > 0.0 && std::abs(cfg.r) < 1.0 && cfg.sigma_aug_sq > 0.0;
}

}  // namespace

InhomoSolution solve_T_star(const InhomoConfig& cfg) {
    cfg.validate();
    InhomoSolution sol;
    ScalarSearch search{4096, false};
    const ScalarMin best = minimize_scalar([&](double T) { return objective_T(T, cfg); }, 0.0, 1.0, 1e-13, search);
    sol.T_star = best.argmin;
    sol.tau1_star = cfg.sigma_aug_sq > 0.0 ? tau1_star(cfg) : 0.0;
    sol.T_closed_form = std::numeric_limits<double>::quiet_NaN();
    if (!nondegenerate(cfg)) {
        sol.regime = InhomoPhase::Degenerate;
        return sol;
    }
    if (cfg.tau <= sol.tau1_star) {
        sol.T_closed_form = T_star_small_tau(cfg);
        sol.regime = sol.T_star <= 0.05 ? InhomoPhase::BothShrink : InhomoPhase::SimultaneousES;
    } else {
        sol.rank_one = true;
        sol.coeff_mu = std::sqrt(sol.T_star);
        sol.coeff_perp = -std::sqrt(1.0 - sol.T_star);
        sol.regime = std::sqrt(sol.T_star) >= 0.99 ? InhomoPhase::AlignedExpand : InhomoPhase::BothExpand;
    }
    return sol;
}

Projector rank_one_projector(const InhomoSolution& sol, const Vec& mu_bar, const Vec& mu_perp) {
    if (!sol.rank_one) throw StateError("rank_one_projector: solution is not on the rank-one branch");
    if (mu_bar.size() != mu_perp.size()) throw ShapeError("rank_one_projector: dimension mismatch");
    if (std::abs(mu_bar.norm() - 1.0) > 1e-10 || std::abs(mu_perp.norm() - 1.0) > 1e-10 ||
        std::abs(mu_bar.dot(mu_perp)) > 1e-10)
        throw DomainError("rank_one_projector: basis must be orthonormal");
    const Vec v = std::sqrt(sol.T_star) * mu_bar - std::sqrt(1.0 - sol.T_star) * mu_perp;
    return Projector(v * v.transpose());
}

InhomoPhase classify_phase_inhomo(const InhomoConfig& cfg) {
    return solve_T_star(cfg).regime;
}

}  // namespace projhead
