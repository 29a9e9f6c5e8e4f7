// Spiked-augmentation theory: closed-form population loss and its
// approximation under augmentation covariance I + rho v v^T, the univariate
// objective in T, the threshold tau1*, the rank-one optimal projector, and
// the phase labels along the temperature axis.
#pragma once

#include "projhead/loss.hpp"

#include <string>

namespace projhead {

struct InhomoConfig {
    double mu_norm_sq = 1.0;
    double sigma_aug_sq = 1.0;
    double rho_aug = 0.0;
    double r = 0.0;  // cosine between mu and the spike direction
    double tau = 1.0;

    void validate() const;
    double a() const;  // sqrt(1 - r^2)
};

// Derives the univariate configuration from a spiked mixture model.
InhomoConfig inhomo_config_from(const GmmConfig& cfg, double tau);

enum class InhomoPhase { BothShrink, SimultaneousES, BothExpand, AlignedExpand, Degenerate };
std::string to_string(InhomoPhase p);

struct InhomoSolution {
    double T_star = 0.0;
    double tau1_star = 0.0;
    InhomoPhase regime = InhomoPhase::Degenerate;
    bool rank_one = false;
    // Coefficients of the top right singular vector in the (mu_bar, mu_perp)
    // basis when rank_one: (sqrt(T*), -sqrt(1 - T*)).
    double coeff_mu = 0.0;
    double coeff_perp = 0.0;
    // Closed-form value on the tau <= tau1* branch (NaN elsewhere).
    double T_closed_form = 0.0;
};

LossBreakdown population_loss_inhomo(const Projector& W, const GmmConfig& cfg, double tau);
double approx_loss_inhomo(const Projector& W, const GmmConfig& cfg, double tau);

double objective_T(double T, const InhomoConfig& cfg);
double tau1_star(const InhomoConfig& cfg);
// Closed-form minimizer on the tau <= tau1* branch.
double T_star_small_tau(const InhomoConfig& cfg);
// Boundary curve of the |r| = 1 case: expansion along mu_bar iff this is > 0.
double aligned_spike_expansion_margin(const InhomoConfig& cfg);

InhomoSolution solve_T_star(const InhomoConfig& cfg);

// Symmetric rank-one W with W^T W = v v^T, v = sqrt(T*) mu_bar - sqrt(1-T*) mu_perp.
Projector rank_one_projector(const InhomoSolution& sol, const Vec& mu_bar, const Vec& mu_perp);

// Phase labels; T* <= 0.05 counts as both-shrink and sqrt(T*) >= 0.99 as
// aligned expansion.
InhomoPhase classify_phase_inhomo(const InhomoConfig& cfg);

}  // namespace projhead
