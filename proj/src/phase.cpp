#include "projhead/phase.hpp"

#include "projhead/errors.hpp"

#include <cmath>
#include <limits>

namespace projhead {

void PhaseConfig::validate() const {
    if (!std::isfinite(sigma_aug_sq) || sigma_aug_sq < 0.0) throw DomainError("PhaseConfig: sigma_aug^2 must be >= 0");
    if (!std::isfinite(tau) || !(tau > 0.0)) throw DomainError("PhaseConfig: tau must be positive");
    if (!std::isfinite(mu_norm_sq) || !(mu_norm_sq > 0.0)) throw DomainError("PhaseConfig: |mu|^2 must be positive");
}

std::string to_string(Regime r) {
    switch (r) {
        case Regime::Expansion: return "expansion";
        case Regime::Shrinkage: return "shrinkage";
        case Regime::Boundary: return "boundary";
    }
    return "unknown";
}

double phase_derivative_F(double t, const PhaseConfig& cfg) {
    const double s2 = cfg.sigma_aug_sq;
    const double r = 1.0 + s2;
    const double x = -2.0 / cfg.tau + 2.0 * r * t / cfg.tau;
    // 1 / (1 + exp(x)) evaluated without overflow.
    const double logistic_neg = x > 0.0 ? std::exp(-x) / (1.0 + std::exp(-x)) : 1.0 / (1.0 + std::exp(x));
    return (1.0 + 2.0 * s2 - 2.0 * r * logistic_neg) / cfg.tau;
}

double shrinkage_t_star(double sigma_aug_sq, double tau) {
    return (1.0 - 0.5 * tau * std::log1p(2.0 * sigma_aug_sq)) / (1.0 + sigma_aug_sq);
}

PhaseReport classify_regime(const PhaseConfig& cfg) {
    cfg.validate();
    const Interval iv = t_interval(cfg.sigma_aug_sq, cfg.mu_norm_sq);
    PhaseReport rep;
    rep.boundary_F_value = phase_derivative_F(iv.lo, cfg);
    rep.tau_star = cfg.sigma_aug_sq > 0.0 ? tau_star(cfg.sigma_aug_sq, cfg.mu_norm_sq)
                                          : std::numeric_limits<double>::infinity();
    if (rep.boundary_F_value > 1e-10) {
        rep.regime = Regime::Expansion;
        rep.t_star = iv.lo;
    } else if (rep.boundary_F_value < -1e-10) {
        rep.regime = Regime::Shrinkage;
        rep.t_star = shrinkage_t_star(cfg.sigma_aug_sq, cfg.tau);
    } else {
        rep.regime = Regime::Boundary;
        rep.t_star = iv.lo;  // both formulas coincide on the boundary
    }
    return rep;
}

double tau_star(double sigma_aug_sq, double mu_norm_sq) {
    if (!(sigma_aug_sq > 0.0))
        throw DegenerateError("tau_star: zero augmentation has no threshold (always shrinkage)");
    if (!(mu_norm_sq > 0.0)) throw DomainError("tau_star: |mu|^2 must be positive");
    return 2.0 * mu_norm_sq / ((1.0 + sigma_aug_sq + mu_norm_sq) * std::log1p(2.0 * sigma_aug_sq));
}

double expansion_measure(const Mat& W, const Vec& mu) {
    if (W.cols() != mu.size()) throw ShapeError("expansion_measure: dimension mismatch");
    const double fro = W.squaredNorm();
    const double m2 = mu.squaredNorm();
    if (!(fro > 0.0) || !(m2 > 0.0)) throw DomainError("expansion_measure: zero projector or mean");
    return (W * mu).squaredNorm() / (fro * m2);
}

double expansion_measure(const Projector& W, const Vec& mu) {
    return expansion_measure(W.matrix(), mu);
}

double t_of(const Mat& W, const Vec& mu, double sigma_aug_sq) {
    const double fro = W.squaredNorm();
    return fro / ((1.0 + sigma_aug_sq) * fro + (W * mu).squaredNorm());
}

GapDiagnostic prop2_gap_diagnostic(const Projector& W_trained, const PhaseConfig& cfg, const Vec& mu) {
    const PhaseReport rep = classify_regime(cfg);
    GapDiagnostic d;
    d.regime = rep.regime;
    d.t_star = rep.t_star;
    d.t_simclr = t_of(W_trained.matrix(), mu, cfg.sigma_aug_sq);
    d.gap = std::abs(d.t_simclr - d.t_star);
    d.sign_check = rep.regime != Regime::Expansion || d.t_simclr >= d.t_star - 1e-6;
    return d;
}

}  // namespace projhead
