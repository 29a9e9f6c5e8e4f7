// Scalar system describing the high-dimensional max-margin classifier on
// projected mixture data: the objective f_delta(u, kappa, c), the
// separability threshold delta*(rho), the asymptotic margin kappa*, the
// orientation ratio u*, and the predicted test error.
#pragma once

#include <string>

namespace projhead {

struct AsymptoticProblem {
    double delta = 0.5;  // n / p
    double rho = 1.0;    // |mu|^2
    double eta = 0.0;
    double c = 1.0;      // (1 + eta)^{-2}

    static AsymptoticProblem make(double delta, double rho, double eta);
    void validate() const;
};

enum class SeparabilityRegime { Separable, NonSeparable };
std::string to_string(SeparabilityRegime r);

struct AsymptoticSolution {
    double kappa_star = 0.0;
    double u_star = 0.0;
    double delta_star = 0.0;
    double predicted_error = 0.5;
    SeparabilityRegime regime = SeparabilityRegime::NonSeparable;
    // Set when delta lies within 1% of delta*, where the root is ill-conditioned.
    bool near_threshold = false;
};

// -u^2 + delta E[(sqrt(1+u^2) G + kappa sqrt(u^2+c) - sqrt(rho))_+^2].
double f_delta(double u, double kappa, const AsymptoticProblem& prob);

// Partial derivative of f_delta in u.
double f_delta_du(double u, double kappa, const AsymptoticProblem& prob);

// (inf_{u>0} u^{-2} E[(sqrt(1+u^2) G - sqrt(rho))_+^2])^{-1}.
double delta_star(double rho);

// Tail level: the kappa solving delta E[(G + kappa)_+^2] = 1. Below it
// f_delta tends to -infinity as u grows.
double kappa_tail(double delta);

// inf over u of f_delta at the given kappa (-infinity below the tail level).
double inf_over_u(double kappa, const AsymptoticProblem& prob);

double solve_kappa_star(const AsymptoticProblem& prob);
// +infinity when rho = 0 (pure noise: kappa* is the tail level and no finite
// u satisfies f_delta = 0).
double solve_u_star(const AsymptoticProblem& prob);
double solve_u_star(const AsymptoticProblem& prob, double kappa_star);
double predicted_test_error(const AsymptoticProblem& prob);

// Full solve; in the non-separable regime kappa*/u* are left at zero and
// the error is 0.5.
AsymptoticSolution solve_asymptotic(const AsymptoticProblem& prob);

}  // namespace projhead
