// Homogeneous expansion/shrinkage theory: derivative of the approximate loss
// in t, regime classification, the transition temperature, and the
// expansion measure T(W).
#pragma once

#include "projhead/loss.hpp"

#include <string>

namespace projhead {

struct PhaseConfig {
    double sigma_aug_sq = 1.0;
    double tau = 1.0;
    double mu_norm_sq = 1.0;

    void validate() const;
};

enum class Regime { Expansion, Shrinkage, Boundary };
std::string to_string(Regime r);

struct PhaseReport {
    Regime regime = Regime::Boundary;
    double t_star = 0.0;
    // Transition temperature; +infinity encodes "no threshold" (zero
    // augmentation, where every temperature shrinks).
    double tau_star = 0.0;
    double boundary_F_value = 0.0;
};

// d/dt of the approximate loss.
double phase_derivative_F(double t, const PhaseConfig& cfg);

// Sign of F at the left end of the t interval; |F| <= 1e-10 is Boundary.
PhaseReport classify_regime(const PhaseConfig& cfg);

// Stationary point of the approximate loss (the shrinkage-regime t*).
double shrinkage_t_star(double sigma_aug_sq, double tau);

// Closed-form transition temperature. Throws DegenerateError at zero
// augmentation.
double tau_star(double sigma_aug_sq, double mu_norm_sq);

// |W mu|^2 / (|W|_F^2 |mu|^2).
double expansion_measure(const Mat& W, const Vec& mu);
double expansion_measure(const Projector& W, const Vec& mu);

// t(W) = |W|_F^2 / alpha for the homogeneous model.
double t_of(const Mat& W, const Vec& mu, double sigma_aug_sq);

struct GapDiagnostic {
    double t_simclr = 0.0;
    double t_star = 0.0;
    double gap = 0.0;
    Regime regime = Regime::Boundary;
    // Only meaningful in the expansion regime: t_simclr >= t_star - 1e-6.
    bool sign_check = true;
};

// Compares t of a trained projector with the predicted minimizer.
GapDiagnostic prop2_gap_diagnostic(const Projector& W_trained, const PhaseConfig& cfg, const Vec& mu);

}  // namespace projhead
